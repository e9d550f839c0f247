//! `locint`: invariants, intersection numbers, densities and tree geometry
//! for a symmetric 3×3 matrix over `Z_p`.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 inadmissible matrix,
//! 3 search or budget limit reached, 4 disagreement between routes.

mod commands;
mod input;
mod report;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use locint::density::DEFAULT_BUDGET;
use locint::Error;
use num_bigint::BigInt;

use crate::commands::{DensityArgs, IntersectArgs};
use crate::input::{parse_input, ParsedInput};
use crate::report::{Format, Report};

#[derive(Parser)]
#[command(name = "locint", version, about = "Exact local intersection numbers of three special cycles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct MatrixArgs {
    /// Odd prime.
    #[arg(short = 'p', long = "prime")]
    p: u64,
    /// Diagonal entries, comma separated (integers or rationals with p-unit denominators).
    #[arg(long, allow_hyphen_values = true)]
    diag: Option<String>,
    /// Nine row-major entries, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    matrix: Option<String>,
    /// Exponents a1,a2,a3 of a diagonal form p^a_i·e_i.
    #[arg(long)]
    exponents: Option<String>,
    /// Residue characters of the units e_i (1 or -1), with --exponents.
    #[arg(long, allow_hyphen_values = true)]
    classes: Option<String>,
    /// Digits carried through diagonalization.
    #[arg(long)]
    precision: Option<u32>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

impl MatrixArgs {
    fn parse(&self) -> locint::Result<ParsedInput> {
        parse_input(self.p, self.diag.as_deref(), self.matrix.as_deref(), self.exponents.as_deref(), self.classes.as_deref())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Jordan invariants and the admissibility verdict.
    Invariants {
        #[command(flatten)]
        m: MatrixArgs,
    },
    /// The intersection number by every available route.
    Intersect {
        #[command(flatten)]
        m: MatrixArgs,
        /// Ball radius for the tree route (forces the route to run).
        #[arg(long)]
        radius: Option<u32>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Do not run the tree route.
        #[arg(long)]
        skip_tree: bool,
        /// Integer factor for the global product, reported separately.
        #[arg(long, allow_hyphen_values = true)]
        global_multiplier: Option<BigInt>,
    },
    /// Series values, the density derivative, and optional counting.
    Density {
        #[command(flatten)]
        m: MatrixArgs,
        /// Levels r at which to evaluate (repeat or comma separate).
        #[arg(long = "r", value_delimiter = ',', default_values_t = [0u32, 1])]
        r: Vec<u32>,
        /// Count solutions modulo p^t and compare with the series.
        #[arg(long)]
        oracle: bool,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        /// Highest truncation level tried by the counter.
        #[arg(long, default_value_t = 4)]
        t_max: u32,
    },
    /// Fixed loci, fiber divisors and pair geometry of a sampled triple.
    Building {
        #[command(flatten)]
        m: MatrixArgs,
        #[arg(long)]
        radius: Option<u32>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Cross-checks every admissible tuple up to a bound.
    Verify {
        /// Primes to sweep (repeat or comma separate).
        #[arg(short = 'p', long = "prime", value_delimiter = ',', default_values_t = [3u64, 5, 7])]
        p: Vec<u64>,
        #[arg(long, default_value_t = 7)]
        max_a: u32,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Inadmissible => 2,
        Error::BudgetExceeded { .. } | Error::NoStabilization { .. } | Error::SearchExhausted(_) => 3,
        Error::ConsistencyViolation(_) | Error::InconsistentDeterminant { .. } | Error::GeometryViolation(_) => 4,
        _ => 1,
    }
}

fn run(cli: Cli) -> locint::Result<(Report, Format)> {
    Ok(match cli.command {
        Command::Invariants { m } => (commands::invariants(&m.parse()?, m.precision)?, m.format),
        Command::Intersect { m, radius, seed, skip_tree, global_multiplier } => {
            let args = IntersectArgs { precision: m.precision, radius, seed, skip_tree, global_multiplier };
            (commands::intersect(&m.parse()?, &args)?, m.format)
        }
        Command::Density { m, r, oracle, budget, t_max } => {
            if budget == 0 {
                return Err(Error::InvalidInput("--budget must be positive".into()));
            }
            let args = DensityArgs { precision: m.precision, levels: r, oracle, budget, t_max };
            (commands::density(&m.parse()?, &args)?, m.format)
        }
        Command::Building { m, radius, seed } => (commands::building(&m.parse()?, m.precision, radius, seed)?, m.format),
        Command::Verify { p, max_a, format } => (commands::verify(&p, max_a)?, format),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    match run(cli).and_then(|(report, format)| report.render(format).map_err(Error::InvalidInput)) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
