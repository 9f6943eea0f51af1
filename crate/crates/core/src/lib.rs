//! Growth classes of morphic sequences, sum-of-two-squares sieves, and
//! numerical certificates that a counting function is incompatible with
//! morphic growth.
//!
//! - [`words`]: alphabets, morphisms, spec-file parsing, fixed-point streaming.
//! - [`spectral`]: incidence matrices, exact letter counts, growth classes.
//! - [`numtheory`]: sieves for `s2`/`s2'`, counting functions, Landau-Ramanujan estimates.
//! - [`certify`]: density fits, model selection, the incompatibility verdict.
//! - [`cli`]: the `morphcert` command-line front end.

pub mod certify;
pub mod cli;
pub mod error;
pub mod numtheory;
pub mod spectral;
pub mod words;

pub use error::{Error, Result};
