use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;

use torsion_core::bounds::{BoundContext, DEFAULT_CEILING_BUDGET};
use torsion_core::cli::{
    enumeration_cap, parse_curve_records, parse_rational, render, B1IndexReport, BEpsilonReport,
    BaselinesReport, BoundsReport, CandidatesReport, Format, LatticeReport, Report,
};
use torsion_core::lattice::{bundled_scenarios, parse_scenarios};
use torsion_core::Error;

/// Explicit torsion bounds and finite-level GL2 checks for elliptic curves
/// in a fixed geometric isogeny class.
#[derive(Parser, Debug)]
#[command(name = "torsion", version)]
struct Cli {
    /// Significant digits in rendered decimals.
    #[arg(long, global = true, default_value_t = 12)]
    digits: u32,

    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Text)]
    format: OutputFormat,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OutputFormat {
    Text,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate the exponent and order bounds for every curve record.
    Bounds {
        /// CSV with header label,base_degree,adelic_index[,isogeny_class].
        #[arg(long)]
        records: PathBuf,
        #[arg(long, value_parser = rational, default_value = "1/2")]
        epsilon: BigRational,
        /// Degree [F:Q] of the target field.
        #[arg(long)]
        degree: u64,
    },
    /// List every n with phi(n) psi(n) dividing 2 I (d0 - 1)! d.
    Candidates {
        #[arg(long)]
        index: u64,
        #[arg(long)]
        base_degree: u64,
        #[arg(long)]
        degree: u64,
    },
    /// The optimal constant b_eps with phi(n) >= b_eps n^(1 - eps).
    BEpsilon {
        #[arg(long, value_parser = rational)]
        epsilon: BigRational,
    },
    /// Index of B1(n) in GL2(Z/nZ).
    B1Index {
        #[arg(long)]
        n: u32,
        /// Cross-check the formula by enumerating B1(n).
        #[arg(long)]
        verify: bool,
    },
    /// Compare lattice indices for each scenario (bundled set by default).
    LatticeCheck {
        #[arg(long)]
        scenario_file: Option<PathBuf>,
    },
    /// Classical torsion bounds at a given degree.
    Baselines {
        #[arg(long)]
        degree: u64,
    },
    /// Re-run every finite-level check up to the given modulus.
    Verify {
        #[arg(long, default_value_t = 10)]
        max_n: u32,
    },
}

fn rational(s: &str) -> Result<BigRational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

fn emit<R: Report>(report: &R, format: Format) -> ExitCode {
    print!("{}", render(report, format));
    if report.failed() {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}

fn read(path: &PathBuf) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {}", path.display(), e)))
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    let format = match cli.format {
        OutputFormat::Text => Format::Text,
        OutputFormat::Json => Format::Json,
    };
    let digits = cli.digits;
    if digits == 0 {
        return Err(Error::InvalidArgument("--digits must be at least 1".into()));
    }
    let cap = enumeration_cap()?;
    Ok(match cli.command {
        Command::Bounds {
            records,
            epsilon,
            degree,
        } => {
            let records = parse_curve_records(read(&records)?.as_bytes())?;
            emit(&BoundsReport::new(&records, degree, &epsilon, digits)?, format)
        }
        Command::Candidates {
            index,
            base_degree,
            degree,
        } => {
            let ctx = BoundContext::new(index, base_degree, degree)?;
            emit(&CandidatesReport::new(&ctx, DEFAULT_CEILING_BUDGET)?, format)
        }
        Command::BEpsilon { epsilon } => emit(&BEpsilonReport::new(&epsilon, digits)?, format),
        Command::B1Index { n, verify } => emit(&B1IndexReport::new(n, verify, cap)?, format),
        Command::LatticeCheck { scenario_file } => {
            let scenarios = match scenario_file {
                Some(path) => parse_scenarios::<BigInt>(&read(&path)?)?,
                None => bundled_scenarios(),
            };
            emit(&LatticeReport::new(&scenarios, cap), format)
        }
        Command::Baselines { degree } => emit(&BaselinesReport::new(degree, digits)?, format),
        Command::Verify { max_n } => {
            let report = torsion_core::cli::run_verification_suite(max_n, cap)?;
            emit(&report, format)
        }
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(1)
        }
    }
}
