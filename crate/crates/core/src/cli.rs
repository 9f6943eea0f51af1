//! `morphcert` command-line front end.
//!
//! Exit codes: 0 success, 1 usage, 2 input parse/validation, 3 resource or
//! convergence failure. Data goes to stdout, diagnostics to stderr.

use std::ffi::OsString;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::certify::{self, CertifyConfig, Source};
use crate::error::Error;
use crate::numtheory::{self, SieveConfig, SieveTable};
use crate::spectral;
use crate::words::{MorphicSystem, Morphism, Word};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

/// Environment variable overriding the sieve memory budget, in MiB.
pub const MEM_ENV: &str = "MORPH_MEM_MB";

#[derive(Debug, Parser)]
#[command(
    name = "morphcert",
    version,
    about = "Morphic growth classes and sum-of-two-squares density certificates"
)]
struct Cli {
    /// Worker threads for sieves (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Inspect a morphism spec file
    #[command(subcommand)]
    Morphism(MorphismCommand),
    /// Generate or count a 0/1 sequence
    #[command(subcommand)]
    Seq(SeqCommand),
    /// Fit a density profile to a CSV of counts
    Fit(FitArgs),
    /// Fit both profiles to a sequence and report a conclusion
    Certify(CertifyArgs),
    /// Estimate the Landau-Ramanujan constant
    LrConstant(LrArgs),
}

#[derive(Debug, Subcommand)]
enum MorphismCommand {
    /// Incidence matrix, components, and growth classes as JSON
    Analyze { file: PathBuf },
    /// Print φ^k(letter)
    Iterate {
        file: PathBuf,
        #[arg(long)]
        k: u32,
        /// Letter to expand (default: the start letter)
        #[arg(long)]
        letter: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
enum SeqCommand {
    Gen(GenArgs),
    Count(CountArgs),
}

#[derive(Debug, Clone, ValueEnum)]
enum Format {
    Ascii,
    Bits,
}

#[derive(Debug, Args)]
struct GenArgs {
    /// s2, s2nz, or morphic:<path>
    #[arg(long)]
    kind: String,
    #[arg(short = 'N', long = "n")]
    n: u64,
    #[arg(long, value_enum, default_value = "ascii")]
    format: Format,
}

#[derive(Debug, Args)]
struct CountArgs {
    /// s2, s2nz, or morphic:<path>
    #[arg(long)]
    kind: String,
    /// geo:<N0>:<ratio>:<max>
    #[arg(long)]
    checkpoints: String,
    /// Counted symbol for morphic kinds
    #[arg(long, default_value = "1")]
    symbol: String,
}

#[derive(Debug, Clone, ValueEnum)]
enum FitModel {
    Logdamped,
    Polyexp,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long, value_enum)]
    model: FitModel,
    /// CSV with rows `x,count` (an optional header line is skipped)
    #[arg(long)]
    input: PathBuf,
}

#[derive(Debug, Args)]
struct CertifyArgs {
    /// s2, s2nz, or morphic:<path>
    #[arg(long)]
    source: String,
    #[arg(short = 'N', long = "n", default_value_t = certify::DEFAULT_MAX_N)]
    n: u64,
    /// Report path (default: stdout)
    #[arg(short = 'o', long = "output")]
    output: Option<PathBuf>,
    #[arg(long)]
    symbol: Option<String>,
    #[arg(long, default_value_t = certify::DEFAULT_N0)]
    n0: u64,
    #[arg(long, default_value_t = certify::DEFAULT_RATIO)]
    ratio: f64,
    #[arg(long, default_value_t = certify::DEFAULT_MIN_N)]
    min_n: u64,
    #[arg(long, default_value_t = certify::DEFAULT_MARGIN)]
    margin: f64,
    #[arg(long, default_value_t = certify::DEFAULT_KMAX)]
    kmax: u32,
}

#[derive(Debug, Clone, ValueEnum)]
enum LrMethod {
    Euler,
    Sieve,
}

#[derive(Debug, Args)]
struct LrArgs {
    #[arg(long, value_enum)]
    method: LrMethod,
    /// Prime bound P (euler) or N (sieve)
    #[arg(long)]
    bound: u64,
}

/// A failure with its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

fn code_for(err: &Error) -> i32 {
    match err {
        Error::Parse { .. } | Error::Validation(_) | Error::Io(_) => EXIT_INPUT,
        Error::Resource(_) | Error::NonConvergence { .. } => EXIT_RESOURCE,
        Error::Domain(_) | Error::UnknownSymbol(_) => EXIT_USAGE,
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        Failure::new(code_for(&err), err.to_string())
    }
}

fn output_failure(err: io::Error) -> Failure {
    Failure::new(EXIT_RESOURCE, format!("writing output: {err}"))
}

type CmdResult = Result<(), Failure>;

enum Kind {
    S2,
    S2Nonzero,
    Morphic(PathBuf),
}

fn parse_kind(text: &str) -> Result<Kind, Failure> {
    match text {
        "s2" => Ok(Kind::S2),
        "s2nz" => Ok(Kind::S2Nonzero),
        _ => match text.strip_prefix("morphic:") {
            Some(path) if !path.is_empty() => Ok(Kind::Morphic(PathBuf::from(path))),
            _ => Err(Failure::new(
                EXIT_USAGE,
                format!("unknown kind {text:?}; expected s2, s2nz or morphic:<path>"),
            )),
        },
    }
}

fn read_input(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::new(EXIT_INPUT, format!("{}: {e}", path.display())))
}

fn load_system(path: &Path) -> Result<MorphicSystem, Failure> {
    read_input(path)?
        .parse()
        .map_err(|e: Error| Failure::new(code_for(&e), format!("{}: {e}", path.display())))
}

fn sieve_config() -> Result<SieveConfig, Failure> {
    match std::env::var(MEM_ENV) {
        Ok(v) => {
            let mb: u64 = v.trim().parse().map_err(|_| {
                Failure::new(EXIT_USAGE, format!("{MEM_ENV}={v:?} is not an integer"))
            })?;
            Ok(SieveConfig {
                mem_budget: mb.saturating_mul(1024 * 1024),
            })
        }
        Err(_) => Ok(SieveConfig::default()),
    }
}

fn sieve(kind: &Kind, limit: u64) -> Result<SieveTable, Failure> {
    let config = sieve_config()?;
    Ok(match kind {
        Kind::S2 => numtheory::sieve_s2_additive_with(limit, &config)?,
        Kind::S2Nonzero => numtheory::sieve_s2_nonzero_with(limit, &config)?,
        Kind::Morphic(_) => unreachable!("morphic kinds are streamed"),
    })
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> CmdResult {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Failure::new(EXIT_RESOURCE, format!("serializing: {e}")))?;
    writeln!(out, "{text}").map_err(output_failure)
}

fn morphism_command(cmd: MorphismCommand, out: &mut dyn Write) -> CmdResult {
    match cmd {
        MorphismCommand::Analyze { file } => {
            let sys = load_system(&file)?;
            let report = spectral::analyze(&sys)?;
            write_json(out, &report)
        }
        MorphismCommand::Iterate { file, k, letter } => {
            let text = read_input(&file)?;
            let morphism: Morphism = text.parse().map_err(|e: Error| {
                Failure::new(code_for(&e), format!("{}: {e}", file.display()))
            })?;
            let start = match letter {
                Some(id) => morphism
                    .alphabet()
                    .letter(&id)
                    .ok_or_else(|| Failure::new(EXIT_USAGE, format!("unknown letter {id:?}")))?,
                None => load_system(&file)?.start(),
            };
            let word = morphism.iterate(&Word::single(start), k)?;
            writeln!(out, "{}", word.display(morphism.alphabet())).map_err(output_failure)
        }
    }
}

fn pack_bits(bits: impl Iterator<Item = bool>, out: &mut dyn Write) -> io::Result<()> {
    let mut byte = 0u8;
    let mut filled = 0;
    for bit in bits {
        byte = (byte << 1) | u8::from(bit);
        filled += 1;
        if filled == 8 {
            out.write_all(&[byte])?;
            byte = 0;
            filled = 0;
        }
    }
    if filled > 0 {
        out.write_all(&[byte << (8 - filled)])?;
    }
    Ok(())
}

fn seq_gen(args: GenArgs, out: &mut dyn Write) -> CmdResult {
    let kind = parse_kind(&args.kind)?;
    let mut out = BufWriter::new(out);
    match &kind {
        Kind::Morphic(path) => {
            let sys = load_system(path)?;
            let n = usize::try_from(args.n)
                .map_err(|_| Failure::new(EXIT_USAGE, "N does not fit in memory"))?;
            let symbols = sys.fixed_point().take(n).map(|c| sys.code(c));
            match args.format {
                Format::Ascii => {
                    for s in symbols {
                        out.write_all(s.as_bytes()).map_err(output_failure)?;
                    }
                    out.write_all(b"\n").map_err(output_failure)?;
                }
                Format::Bits => {
                    if let Some(bad) = sys.symbols().iter().find(|s| *s != "0" && *s != "1") {
                        return Err(Failure::new(
                            EXIT_USAGE,
                            format!("--format bits needs a 0/1 coding, found symbol {bad:?}"),
                        ));
                    }
                    pack_bits(symbols.map(|s| s == "1"), &mut out).map_err(output_failure)?;
                }
            }
        }
        _ => {
            let table = sieve(&kind, args.n)?;
            match args.format {
                Format::Ascii => {
                    for bit in table.iter() {
                        out.write_all(if bit { b"1" } else { b"0" })
                            .map_err(output_failure)?;
                    }
                    out.write_all(b"\n").map_err(output_failure)?;
                }
                Format::Bits => out
                    .write_all(&table.packed_bytes())
                    .map_err(output_failure)?,
            }
        }
    }
    out.flush().map_err(output_failure)
}

fn parse_schedule(spec: &str) -> Result<Vec<u64>, Failure> {
    let bad = || {
        Failure::new(
            EXIT_USAGE,
            format!("bad checkpoint schedule {spec:?}; expected geo:<N0>:<ratio>:<max>"),
        )
    };
    let parts: Vec<&str> = spec.split(':').collect();
    let [tag, n0, ratio, max] = parts.as_slice() else {
        return Err(bad());
    };
    if *tag != "geo" {
        return Err(bad());
    }
    let n0: u64 = n0.parse().map_err(|_| bad())?;
    let ratio: f64 = ratio.parse().map_err(|_| bad())?;
    let max: u64 = max.parse().map_err(|_| bad())?;
    certify::geometric_checkpoints(n0, ratio, max).map_err(Failure::from)
}

fn seq_count(args: CountArgs, out: &mut dyn Write) -> CmdResult {
    let kind = parse_kind(&args.kind)?;
    let schedule = parse_schedule(&args.checkpoints)?;
    let max = schedule.last().copied().unwrap_or(0);
    let series = match &kind {
        Kind::Morphic(path) => {
            let sys = load_system(path)?;
            let wanted: Vec<crate::words::Letter> = sys.letters_coded_as(&args.symbol)?;
            // Counts over positions 0..=N, matching B(N).
            let mut points = Vec::with_capacity(schedule.len());
            let mut next = schedule.iter().peekable();
            let mut count = 0u64;
            for (pos, c) in sys.fixed_point().enumerate() {
                let Some(&&target) = next.peek() else { break };
                if wanted.contains(&c) {
                    count += 1;
                }
                if pos as u64 == target {
                    points.push((target, count));
                    next.next();
                }
            }
            numtheory::CountSeries { points }
        }
        _ => {
            let table = sieve(&kind, max)?;
            numtheory::count_series(&table, &schedule)?
        }
    };
    out.write_all(series.to_csv().as_bytes())
        .map_err(output_failure)
}

fn read_points(path: &Path) -> Result<Vec<(f64, f64)>, Failure> {
    let text = read_input(path)?;
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed = match fields.as_slice() {
            [x, y] => x.parse::<f64>().ok().zip(y.parse::<f64>().ok()),
            _ => None,
        };
        match parsed {
            Some(p) => points.push(p),
            None if i == 0 => continue,
            None => {
                return Err(Failure::new(
                    EXIT_INPUT,
                    format!("{}:{}: expected `x,count`", path.display(), i + 1),
                ))
            }
        }
    }
    Ok(points)
}

#[derive(Serialize)]
struct LogdampedOut {
    model: &'static str,
    #[serde(flatten)]
    report: certify::LogdampedReport,
}

#[derive(Serialize)]
struct PolyexpOut {
    model: &'static str,
    #[serde(flatten)]
    profile: certify::PolyExpProfile,
}

fn fit(args: FitArgs, out: &mut dyn Write) -> CmdResult {
    let points = read_points(&args.input)?;
    let as_input = |e: Error| Failure::new(EXIT_INPUT, e.to_string());
    match args.model {
        FitModel::Logdamped => {
            let profile = certify::fit_logdamped(&points).map_err(as_input)?;
            let (lo, hi) = certify::gamma_confidence(&points, &profile);
            write_json(
                out,
                &LogdampedOut {
                    model: "logdamped",
                    report: certify::LogdampedReport {
                        profile,
                        gamma_ci: [lo, hi],
                    },
                },
            )
        }
        FitModel::Polyexp => {
            let profile = certify::fit_polyexp(&points).map_err(as_input)?;
            write_json(
                out,
                &PolyexpOut {
                    model: "polyexp",
                    profile,
                },
            )
        }
    }
}

fn certify_command(args: CertifyArgs, out: &mut dyn Write) -> CmdResult {
    let source = match parse_kind(&args.source)? {
        Kind::S2 => Source::S2,
        Kind::S2Nonzero => Source::S2Nonzero,
        Kind::Morphic(path) => Source::Morphic {
            name: path.display().to_string(),
            system: load_system(&path)?,
        },
    };
    let config = CertifyConfig {
        max_n: args.n,
        n0: args.n0,
        ratio: args.ratio,
        min_n: args.min_n,
        margin: args.margin,
        symbol: args.symbol,
        kmax: args.kmax,
        sieve: sieve_config()?,
    };
    let report = certify::certify_nonmorphic(&source, &config).map_err(|e| match e {
        Error::Domain(_) | Error::UnknownSymbol(_) => Failure::from(e),
        other => Failure::new(EXIT_RESOURCE, other.to_string()),
    })?;
    match args.output {
        None => write_json(out, &report),
        Some(path) => {
            let mut file = fs::File::create(&path)
                .map_err(|e| Failure::new(EXIT_RESOURCE, format!("{}: {e}", path.display())))?;
            write_json(&mut file, &report)
        }
    }
}

fn lr_constant(args: LrArgs, out: &mut dyn Write) -> CmdResult {
    let estimate = match args.method {
        LrMethod::Euler => numtheory::lr_euler_product(args.bound)?,
        LrMethod::Sieve => {
            if args.bound < 3 {
                return Err(Failure::new(
                    EXIT_USAGE,
                    "sieve estimate needs --bound >= 3",
                ));
            }
            let table = sieve(&Kind::S2, args.bound)?;
            let series = numtheory::count_series(&table, &[args.bound])?;
            numtheory::lr_estimate_sieve(&series)?.remove(0)
        }
    };
    write_json(out, &estimate)
}

fn dispatch(command: Command, out: &mut dyn Write) -> CmdResult {
    match command {
        Command::Morphism(cmd) => morphism_command(cmd, out),
        Command::Seq(SeqCommand::Gen(args)) => seq_gen(args, out),
        Command::Seq(SeqCommand::Count(args)) => seq_count(args, out),
        Command::Fit(args) => fit(args, out),
        Command::Certify(args) => certify_command(args, out),
        Command::LrConstant(args) => lr_constant(args, out),
    }
}

/// Runs the CLI with explicit streams and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };

    let result = match cli.threads {
        Some(0) => Err(Failure::new(EXIT_USAGE, "--threads must be positive")),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => {
                // The caller's stream need not be Send; buffer inside the pool.
                let command = cli.command;
                let (buffer, result) = pool.install(move || {
                    let mut buffer = Vec::new();
                    let result = dispatch(command, &mut buffer);
                    (buffer, result)
                });
                out.write_all(&buffer).map_err(output_failure).and(result)
            }
            Err(e) => Err(Failure::new(EXIT_RESOURCE, format!("thread pool: {e}"))),
        },
        None => dispatch(cli.command, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "morphcert: {}", f.message);
            f.code
        }
    }
}
