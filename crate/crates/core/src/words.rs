//! Alphabets, words and morphisms over them, and the coded fixed points of
//! prolongable morphisms.
//!
//! A [`MorphicSystem`] bundles a non-erasing morphism `φ`, a start letter `b`
//! with `φ(b) = b·w` (`w` nonempty), and a letter-to-symbol coding `ψ`. Its
//! output is the infinite sequence `ψ(lim φ^i(b))`.
//!
//! Spec files are line oriented:
//!
//! ```text
//! # Thue-Morse
//! letters: 0 1
//! start: 0
//! 0 -> 0 1
//! 1 -> 1 0
//! coding: 0=0 1=1
//! ```

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::spectral::IncidenceMatrix;

/// Largest alphabet accepted; keeps big-integer matrix powers cheap.
pub const MAX_LETTERS: usize = 64;

/// Default cap on the length of a materialized word.
pub const DEFAULT_MAX_LETTERS: usize = 100_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter(usize);

impl Letter {
    pub const fn new(index: usize) -> Self {
        Letter(index)
    }

    pub const fn index(self) -> usize {
        self.0
    }
}

fn valid_identifier(id: &str) -> bool {
    !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Ordered set of letter identifiers. Position in the list is the letter index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alphabet {
    ids: Vec<String>,
    lookup: HashMap<String, Letter>,
}

impl Alphabet {
    pub fn new<I, S>(ids: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let ids: Vec<String> = ids.into_iter().map(Into::into).collect();
        if ids.is_empty() {
            return Err(Error::Validation("alphabet is empty".into()));
        }
        if ids.len() > MAX_LETTERS {
            return Err(Error::Validation(format!(
                "alphabet has {} letters, at most {MAX_LETTERS} are supported",
                ids.len()
            )));
        }
        let mut lookup = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if !valid_identifier(id) {
                return Err(Error::Validation(format!(
                    "invalid letter identifier {id:?}"
                )));
            }
            if lookup.insert(id.clone(), Letter(i)).is_some() {
                return Err(Error::Validation(format!("duplicate letter {id:?}")));
            }
        }
        Ok(Alphabet { ids, lookup })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn letter(&self, id: &str) -> Option<Letter> {
        self.lookup.get(id).copied()
    }

    pub fn id(&self, letter: Letter) -> &str {
        &self.ids[letter.0]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> {
        (0..self.ids.len()).map(Letter)
    }
}

/// A finite word over some alphabet, stored as letter indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn new(letters: Vec<Letter>) -> Self {
        Word(letters)
    }

    pub fn single(letter: Letter) -> Self {
        Word(vec![letter])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    /// `|w|_a`
    pub fn count(&self, a: Letter) -> usize {
        self.0.iter().filter(|&&c| c == a).count()
    }

    /// The factor `w[i, j]` (both ends inclusive).
    pub fn factor(&self, i: usize, j: usize) -> Word {
        Word(self.0[i..=j].to_vec())
    }

    pub fn display<'a>(&'a self, alphabet: &'a Alphabet) -> WordDisplay<'a> {
        WordDisplay {
            word: self,
            alphabet,
        }
    }
}

/// Renders a word by its identifiers; single-character alphabets are written
/// without separators.
pub struct WordDisplay<'a> {
    word: &'a Word,
    alphabet: &'a Alphabet,
}

impl fmt::Display for WordDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let compact = self.alphabet.ids().iter().all(|id| id.len() == 1);
        for (i, &c) in self.word.0.iter().enumerate() {
            if i > 0 && !compact {
                f.write_str(" ")?;
            }
            f.write_str(self.alphabet.id(c))?;
        }
        Ok(())
    }
}

/// A non-erasing endomorphism of the free monoid over `alphabet`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Morphism {
    alphabet: Alphabet,
    images: Vec<Vec<Letter>>,
}

impl Morphism {
    pub fn new(alphabet: Alphabet, images: Vec<Vec<Letter>>) -> Result<Self> {
        if images.len() != alphabet.len() {
            return Err(Error::Validation(format!(
                "{} images given for {} letters",
                images.len(),
                alphabet.len()
            )));
        }
        for (i, image) in images.iter().enumerate() {
            if image.is_empty() {
                return Err(Error::Validation(format!(
                    "erasing rule: letter {:?} maps to the empty word",
                    alphabet.ids[i]
                )));
            }
            if let Some(bad) = image.iter().find(|c| c.0 >= alphabet.len()) {
                return Err(Error::Validation(format!(
                    "image of {:?} uses letter index {} outside the alphabet",
                    alphabet.ids[i], bad.0
                )));
            }
        }
        Ok(Morphism { alphabet, images })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn image(&self, a: Letter) -> &[Letter] {
        &self.images[a.0]
    }

    pub fn images(&self) -> &[Vec<Letter>] {
        &self.images
    }

    /// `Some(k)` when every image has length `k`.
    pub fn uniform_length(&self) -> Option<usize> {
        let k = self.images[0].len();
        self.images.iter().all(|im| im.len() == k).then_some(k)
    }

    /// True iff `φ(a) = a·w` with `w` nonempty.
    pub fn is_prolongable(&self, a: Letter) -> bool {
        let image = self.image(a);
        image.len() >= 2 && image[0] == a
    }

    pub fn apply(&self, w: &Word) -> Word {
        let mut out = Vec::with_capacity(self.image_length(w));
        for &c in &w.0 {
            out.extend_from_slice(&self.images[c.0]);
        }
        Word(out)
    }

    fn image_length(&self, w: &Word) -> usize {
        w.0.iter().map(|c| self.images[c.0].len()).sum()
    }

    /// `φ^k(w)` with the default length cap.
    pub fn iterate(&self, w: &Word, k: u32) -> Result<Word> {
        self.iterate_capped(w, k, DEFAULT_MAX_LETTERS)
    }

    pub fn iterate_capped(&self, w: &Word, k: u32, max_letters: usize) -> Result<Word> {
        let mut current = w.clone();
        for step in 0..k {
            let next_len = self.image_length(&current);
            if next_len > max_letters {
                return Err(Error::Resource(format!(
                    "iteration {} would produce {next_len} letters (cap {max_letters})",
                    step + 1
                )));
            }
            current = self.apply(&current);
        }
        Ok(current)
    }
}

impl FromStr for Morphism {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        Ok(SpecDocument::parse(text)?.morphism)
    }
}

/// Parsed contents of a spec file before the start letter is checked.
struct SpecDocument {
    morphism: Morphism,
    start: Option<(usize, Letter)>,
    coding: Option<Vec<String>>,
}

impl SpecDocument {
    fn parse(text: &str) -> Result<Self> {
        let mut alphabet: Option<Alphabet> = None;
        let mut rules: Vec<Option<Vec<Letter>>> = Vec::new();
        let mut start = None;
        let mut coding_line = None;

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some(alpha) = alphabet.as_ref() else {
                let rest = line
                    .strip_prefix("letters:")
                    .ok_or_else(|| Error::parse(line_no, "expected `letters:` directive first"))?;
                let ids: Vec<&str> = rest.split_whitespace().collect();
                for id in &ids {
                    if !valid_identifier(id) {
                        return Err(Error::parse(
                            line_no,
                            format!("invalid letter identifier {id:?}"),
                        ));
                    }
                }
                let alpha = Alphabet::new(ids).map_err(|e| Error::parse(line_no, e.to_string()))?;
                rules = vec![None; alpha.len()];
                alphabet = Some(alpha);
                continue;
            };

            if let Some(rest) = line.strip_prefix("start:") {
                if start.is_some() {
                    return Err(Error::parse(line_no, "duplicate `start:` directive"));
                }
                let id = rest.trim();
                let letter = alpha
                    .letter(id)
                    .ok_or_else(|| Error::parse(line_no, format!("unknown start letter {id:?}")))?;
                start = Some((line_no, letter));
            } else if let Some(rest) = line.strip_prefix("coding:") {
                if coding_line.is_some() {
                    return Err(Error::parse(line_no, "duplicate `coding:` directive"));
                }
                coding_line = Some((line_no, rest.to_string()));
            } else if let Some((lhs, rhs)) = line.split_once("->") {
                let id = lhs.trim();
                let letter = alpha.letter(id).ok_or_else(|| {
                    Error::parse(line_no, format!("rule for unknown letter {id:?}"))
                })?;
                if rules[letter.0].is_some() {
                    return Err(Error::parse(line_no, format!("duplicate rule for {id:?}")));
                }
                let image = rhs
                    .split_whitespace()
                    .map(|c| {
                        alpha.letter(c).ok_or_else(|| {
                            Error::parse(
                                line_no,
                                format!("unknown letter {c:?} in image of {id:?}"),
                            )
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                rules[letter.0] = Some(image);
            } else {
                return Err(Error::parse(line_no, format!("unrecognized line {line:?}")));
            }
        }

        let alphabet = alphabet.ok_or_else(|| Error::parse(0, "missing `letters:` directive"))?;
        let mut images = Vec::with_capacity(rules.len());
        for (i, rule) in rules.into_iter().enumerate() {
            match rule {
                Some(image) => images.push(image),
                None => {
                    return Err(Error::parse(
                        0,
                        format!("no rule for letter {:?}", alphabet.ids[i]),
                    ))
                }
            }
        }

        let coding = match coding_line {
            None => None,
            Some((line_no, rest)) => Some(parse_coding(&alphabet, line_no, &rest)?),
        };
        let morphism = Morphism::new(alphabet, images)?;
        Ok(SpecDocument {
            morphism,
            start,
            coding,
        })
    }
}

fn parse_coding(alphabet: &Alphabet, line_no: usize, rest: &str) -> Result<Vec<String>> {
    let mut symbols: Vec<Option<String>> = vec![None; alphabet.len()];
    for pair in rest.split_whitespace() {
        let (id, sym) = pair.split_once('=').ok_or_else(|| {
            Error::parse(line_no, format!("expected `letter=symbol`, got {pair:?}"))
        })?;
        let letter = alphabet
            .letter(id)
            .ok_or_else(|| Error::parse(line_no, format!("coding for unknown letter {id:?}")))?;
        if sym.is_empty() {
            return Err(Error::parse(line_no, format!("empty symbol for {id:?}")));
        }
        if symbols[letter.0].replace(sym.to_string()).is_some() {
            return Err(Error::parse(line_no, format!("letter {id:?} coded twice")));
        }
    }
    symbols
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            s.ok_or_else(|| {
                Error::parse(
                    line_no,
                    format!("coding has no symbol for {:?}", alphabet.ids[i]),
                )
            })
        })
        .collect()
}

/// A prolongable morphism with a start letter and a coding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MorphicSystem {
    morphism: Morphism,
    start: Letter,
    coding: Vec<String>,
    symbol_of: Vec<usize>,
    symbols: Vec<String>,
}

impl MorphicSystem {
    /// `coding: None` means the identity coding (each letter is its own symbol).
    pub fn new(morphism: Morphism, start: Letter, coding: Option<Vec<String>>) -> Result<Self> {
        if start.0 >= morphism.alphabet.len() {
            return Err(Error::Validation(format!(
                "start letter index {} out of range",
                start.0
            )));
        }
        if !morphism.is_prolongable(start) {
            return Err(Error::Validation(format!(
                "start letter {:?} is not prolongable: its image must begin with it and be longer than one letter",
                morphism.alphabet.id(start)
            )));
        }
        let coding = coding.unwrap_or_else(|| morphism.alphabet.ids.clone());
        if coding.len() != morphism.alphabet.len() {
            return Err(Error::Validation(
                "coding must assign a symbol to every letter".into(),
            ));
        }
        let mut symbols: Vec<String> = Vec::new();
        let mut symbol_of = Vec::with_capacity(coding.len());
        for sym in &coding {
            let idx = match symbols.iter().position(|s| s == sym) {
                Some(i) => i,
                None => {
                    symbols.push(sym.clone());
                    symbols.len() - 1
                }
            };
            symbol_of.push(idx);
        }
        Ok(MorphicSystem {
            morphism,
            start,
            coding,
            symbol_of,
            symbols,
        })
    }

    pub fn morphism(&self) -> &Morphism {
        &self.morphism
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.morphism.alphabet
    }

    pub fn start(&self) -> Letter {
        self.start
    }

    pub fn code(&self, a: Letter) -> &str {
        &self.coding[a.0]
    }

    /// Distinct output symbols, in order of first use by letter index.
    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn letters_coded_as(&self, symbol: &str) -> Result<Vec<Letter>> {
        let idx = self
            .symbols
            .iter()
            .position(|s| s == symbol)
            .ok_or_else(|| Error::UnknownSymbol(symbol.to_string()))?;
        Ok(self
            .symbol_of
            .iter()
            .enumerate()
            .filter(|&(_, &s)| s == idx)
            .map(|(i, _)| Letter(i))
            .collect())
    }

    /// Lazily expanded fixed point `lim φ^i(b)` as letters.
    pub fn fixed_point(&self) -> FixedPoint<'_> {
        FixedPoint::new(&self.morphism, self.start)
    }

    /// First `n` symbols of the coded fixed point.
    pub fn fixed_point_stream(&self, n: usize) -> Vec<&str> {
        self.fixed_point().take(n).map(|c| self.code(c)).collect()
    }

    /// Occurrences of `symbol` among the first `n` symbols of the coded fixed point.
    pub fn count_in_prefix(&self, symbol: &str, n: usize) -> Result<u64> {
        let idx = self
            .symbols
            .iter()
            .position(|s| s == symbol)
            .ok_or_else(|| Error::UnknownSymbol(symbol.to_string()))?;
        Ok(self
            .fixed_point()
            .take(n)
            .filter(|c| self.symbol_of[c.0] == idx)
            .count() as u64)
    }

    /// Exact `N_k = |φ^k(b)|` for `k = 0..=kmax`.
    pub fn checkpoints(&self, kmax: u32) -> CheckpointSeries {
        let matrix = IncidenceMatrix::from_morphism(&self.morphism);
        let points = matrix
            .count_vectors(self.start, kmax)
            .into_iter()
            .enumerate()
            .map(|(k, v)| (k as u32, v.iter().sum()))
            .collect();
        CheckpointSeries { points }
    }
}

impl FromStr for MorphicSystem {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let doc = SpecDocument::parse(text)?;
        let (_, start) = doc
            .start
            .ok_or_else(|| Error::parse(0, "missing `start:` directive"))?;
        MorphicSystem::new(doc.morphism, start, doc.coding)
    }
}

/// Exact prefix lengths `N_k = |φ^k(b)|`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckpointSeries {
    points: Vec<(u32, BigUint)>,
}

impl CheckpointSeries {
    pub fn points(&self) -> &[(u32, BigUint)] {
        &self.points
    }

    pub fn lengths(&self) -> impl Iterator<Item = &BigUint> {
        self.points.iter().map(|(_, n)| n)
    }

    /// Lengths that fit in a `u64`.
    pub fn lengths_u64(&self) -> Vec<u64> {
        self.points.iter().map_while(|(_, n)| n.to_u64()).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty() || self.points.iter().all(|(_, n)| n.is_zero())
    }
}

struct Frame<'a> {
    letters: &'a [Letter],
    pos: usize,
    depth: usize,
}

/// Depth-first expansion of the fixed point `b·w·φ(w)·φ²(w)·…` where
/// `φ(b) = b·w`.
///
/// The stack holds at most one frame per expansion level, so memory grows with
/// the current segment depth rather than with the number of emitted letters.
pub struct FixedPoint<'a> {
    morphism: &'a Morphism,
    start: Letter,
    tail: &'a [Letter],
    started: bool,
    segment: usize,
    stack: Vec<Frame<'a>>,
    unit_next: Vec<Option<Letter>>,
}

impl<'a> FixedPoint<'a> {
    fn new(morphism: &'a Morphism, start: Letter) -> Self {
        let unit_next = morphism
            .images
            .iter()
            .map(|im| (im.len() == 1).then(|| im[0]))
            .collect();
        FixedPoint {
            morphism,
            start,
            tail: &morphism.image(start)[1..],
            started: false,
            segment: 0,
            stack: Vec::new(),
            unit_next,
        }
    }

    /// Follows length-one images: returns `(c', r)` with `φ^depth(c) = φ^r(c')`
    /// and either `r == 0` or `φ(c')` longer than one letter.
    fn skip_unit_chain(&self, mut c: Letter, mut depth: usize) -> (Letter, usize) {
        let d = self.unit_next.len();
        let mut steps = 0;
        while depth > 0 {
            let Some(next) = self.unit_next[c.0] else {
                break;
            };
            if next == c {
                return (c, 0);
            }
            c = next;
            depth -= 1;
            steps += 1;
            if steps >= d {
                // c now lies on a cycle of length-one images.
                let mut len = 1;
                let mut probe = self.unit_next[c.0].expect("unit cycle");
                while probe != c {
                    probe = self.unit_next[probe.0].expect("unit cycle");
                    len += 1;
                }
                depth %= len;
                steps = 0;
            }
        }
        (c, depth)
    }
}

impl Iterator for FixedPoint<'_> {
    type Item = Letter;

    fn next(&mut self) -> Option<Letter> {
        if !self.started {
            self.started = true;
            return Some(self.start);
        }
        loop {
            let Some(top) = self.stack.last_mut() else {
                self.stack.push(Frame {
                    letters: self.tail,
                    pos: 0,
                    depth: self.segment,
                });
                self.segment += 1;
                continue;
            };
            if top.pos == top.letters.len() {
                self.stack.pop();
                continue;
            }
            let c = top.letters[top.pos];
            top.pos += 1;
            let depth = top.depth;
            if depth == 0 {
                return Some(c);
            }
            let (c, rest) = self.skip_unit_chain(c, depth);
            if rest == 0 {
                return Some(c);
            }
            self.stack.push(Frame {
                letters: self.morphism.image(c),
                pos: 0,
                depth: rest - 1,
            });
        }
    }
}
