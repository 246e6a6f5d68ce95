mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spaceswitch::compare::CompareOp;
use spaceswitch::interp::PolyKind;
use spaceswitch::params::BackendKind;
use spaceswitch::query::VerifyMode;
use spaceswitch::switch::ExtractionStrategy;
use spaceswitch::Error;

#[derive(Parser, Debug)]
#[command(name = "spaceswitch", version, about = "Digit-wise comparison over p^r plaintext spaces")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Plaintext prime; requires --r.
    #[arg(long, global = true)]
    pub p: Option<u64>,
    /// Plaintext exponent; requires --p.
    #[arg(long, global = true)]
    pub r: Option<u32>,
    #[arg(long, global = true, default_value = "clear")]
    pub backend: BackendKind,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Print machine-readable JSON on stdout.
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Choose (p, r) for a column bit-width.
    Params {
        #[arg(long)]
        bits: u32,
        #[arg(long)]
        depth_budget: Option<usize>,
        /// Only require p^r >= 2^bits.
        #[arg(long)]
        width_only: bool,
        /// Levels reserved for the query after its comparisons.
        #[arg(long, default_value_t = 2)]
        query_depth: usize,
        /// Candidates to list.
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
    /// Encrypt a CSV table and check the round trip.
    Ingest {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        bits: u32,
        /// Write ciphertexts, the secret key and parameters here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        depth_budget: Option<usize>,
    },
    /// Filter and aggregate over an encrypted table.
    Query {
        #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
        csv: Option<PathBuf>,
        /// Generate this many synthetic line items.
        #[arg(long)]
        synthetic: Option<usize>,
        /// Predicate such as `quantity<24`; repeatable.
        #[arg(long = "where")]
        predicates: Vec<String>,
        /// Columns to multiply and sum, e.g. `price*discount`.
        #[arg(long)]
        sum: Option<String>,
        /// Column bit-width (CSV) or price bit-width (synthetic).
        #[arg(long, default_value_t = 8)]
        bits: u32,
        #[arg(long)]
        depth_budget: Option<usize>,
    },
    /// Compare two integers through the encrypted pipeline.
    Compare {
        #[arg(long, allow_hyphen_values = true)]
        a: i64,
        #[arg(long, allow_hyphen_values = true)]
        b: i64,
        #[arg(long, default_value = "lt")]
        op: CompareOp,
        #[arg(long, default_value = "space-switch")]
        strategy: ExtractionStrategy,
        /// Leave the result modulo p.
        #[arg(long)]
        no_raise: bool,
        /// Select (p, r) for this bit-width when --p/--r are absent.
        #[arg(long)]
        bits: Option<u32>,
    },
    /// Extract the balanced base-p digits of one value.
    Extract {
        #[arg(long, allow_hyphen_values = true)]
        x: i64,
        /// A strategy name or `all`.
        #[arg(long, default_value = "space-switch")]
        strategy: String,
    },
    /// Check polynomials, digit extraction, comparisons or round trips.
    Verify {
        /// polys, digits, compare, roundtrip or all.
        #[arg(long, default_value = "all")]
        mode: String,
        /// Seeds for the round-trip mode.
        #[arg(long, default_value_t = 100)]
        seeds: u64,
    },
    /// Cost tables per bit-width and strategy.
    Bench {
        #[arg(long, value_delimiter = ',', default_values_t = [8u32, 12, 16])]
        bits: Vec<u32>,
        #[arg(long, value_delimiter = ',')]
        strategies: Vec<ExtractionStrategy>,
        #[arg(long, default_value_t = 64)]
        pairs: usize,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the coefficients of a constructed polynomial.
    DumpPoly {
        #[arg(long, value_enum)]
        kind: Kind,
        /// Precision exponent for `g` and `lift`.
        #[arg(long, default_value_t = 2)]
        e: u32,
    },
}

#[derive(clap::ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Csv,
    Json,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    G,
    Lift,
    Eq,
    Lt,
}

impl Kind {
    fn poly_kind(self, e: u32) -> PolyKind {
        match self {
            Kind::G => PolyKind::Lowest(e),
            Kind::Lift => PolyKind::Lift(e),
            Kind::Eq => PolyKind::Eq,
            Kind::Lt => PolyKind::Lt,
        }
    }
}

/// Failure of a command: a library error, or a result that disagrees with
/// its plaintext reference.
#[derive(Debug)]
pub enum Failure {
    Lib(Error),
    Mismatch(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lib(Error::Io(e))
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Mismatch(_) => 2,
            Failure::Lib(e) => match e {
                Error::Infeasible(_)
                | Error::InvalidParameter(_)
                | Error::NotPrime(_)
                | Error::OutOfRange { .. }
                | Error::Unsupported(_) => 3,
                Error::Io(_) | Error::Format(_) | Error::Data { .. } | Error::Json(_) => 4,
                _ => 1,
            },
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let g = &cli.global;
    if g.backend == BackendKind::ToyBgv {
        eprintln!("{}", spaceswitch::bgv::INSECURE_BANNER);
    }
    match cli.command {
        Command::Params {
            bits,
            depth_budget,
            width_only,
            query_depth,
            top,
        } => commands::params(g, bits, depth_budget, width_only, query_depth, top),
        Command::Ingest {
            csv,
            bits,
            out,
            depth_budget,
        } => commands::ingest(g, &csv, bits, out.as_deref(), depth_budget),
        Command::Query {
            csv,
            synthetic,
            predicates,
            sum,
            bits,
            depth_budget,
        } => commands::query(g, csv.as_deref(), synthetic, &predicates, sum.as_deref(), bits, depth_budget),
        Command::Compare {
            a,
            b,
            op,
            strategy,
            no_raise,
            bits,
        } => commands::compare(g, a, b, op, strategy, !no_raise, bits),
        Command::Extract { x, strategy } => commands::extract(g, x, &strategy),
        Command::Verify { mode, seeds } => {
            let modes = if mode == "all" {
                vec![VerifyMode::Polys, VerifyMode::Digits, VerifyMode::Compare, VerifyMode::Roundtrip]
            } else {
                vec![mode.parse()?]
            };
            commands::verify(g, &modes, seeds)
        }
        Command::Bench {
            bits,
            strategies,
            pairs,
            format,
            out,
        } => commands::bench(g, bits, strategies, pairs, format, out.as_deref()),
        Command::DumpPoly { kind, e } => commands::dump_poly(g, kind.poly_kind(e), e),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Lib(e) => eprintln!("error: {e}"),
                Failure::Mismatch(msg) => eprintln!("verification failed: {msg}"),
            }
            ExitCode::from(f.exit_code())
        }
    }
}
