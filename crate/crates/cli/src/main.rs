use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use hpsig::coarse::ProductMetric;
use hpsig::Tolerances;
use hpsig_cli::{cmd_check, cmd_chs, cmd_coarse, cmd_product, cmd_rho, cmd_sgn, corpus, InputError, Options, RunReport};

#[derive(Parser)]
#[command(name = "hpsig", version, about = "Signature, product, rho and family certificates for finite Hilbert-Poincaré complexes")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Relative bound for self-adjointness and identity residuals.
    #[arg(long, global = true)]
    tol_sym: Option<f64>,

    /// Relative bound below which a singular value counts as zero.
    #[arg(long, global = true)]
    tol_inv: Option<f64>,

    /// Number of samples for paths and schedules.
    #[arg(long, global = true)]
    samples: Option<usize>,

    /// Seed for the random instance generator.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Also write the report to this file.
    #[arg(long, global = true)]
    json_out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Metric::L2)]
    metric: Metric,

    /// Include wall time in the report (breaks byte stability).
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    L2,
    Max,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a complex, triangulation, fibered complex, homotopy equivalence, metric space or operator.
    Check { path: PathBuf },
    /// Signature (even) or odd index certificate.
    Sgn { path: PathBuf },
    /// Graded product, product formula and parity witnesses.
    Product { a: PathBuf, b: PathBuf },
    /// Rho path and parity certificate of a homotopy equivalence.
    Rho { path: PathBuf },
    /// Total complex, monodromy action and the multiplicativity check.
    Chs { path: PathBuf },
    /// Propagation bookkeeping: the seeded property suite, or one operator file.
    Coarse {
        path: Option<PathBuf>,
        #[arg(long, default_value_t = hpsig_cli::DEFAULT_INSTANCES)]
        instances: usize,
    },
    /// Write the fixture corpus into a directory.
    ExportFixtures { dir: PathBuf },
}

fn options(cli: &Cli) -> Options {
    let mut tol = Tolerances::default();
    if let Some(x) = cli.tol_sym {
        tol.sym = x;
    }
    if let Some(x) = cli.tol_inv {
        tol.inv = x;
    }
    Options {
        tol,
        samples: cli.samples,
        seed: cli.seed,
        metric: match cli.metric {
            Metric::L2 => ProductMetric::L2,
            Metric::Max => ProductMetric::Max,
        },
        timing: cli.timing,
    }
}

fn run(cli: &Cli) -> Result<Option<RunReport>, InputError> {
    let opts = options(cli);
    let report = match &cli.command {
        Command::Check { path } => cmd_check(path, &opts)?,
        Command::Sgn { path } => cmd_sgn(path, &opts)?,
        Command::Product { a, b } => cmd_product(a, b, &opts)?,
        Command::Rho { path } => cmd_rho(path, &opts)?,
        Command::Chs { path } => cmd_chs(path, &opts)?,
        Command::Coarse { path, instances } => cmd_coarse(path.as_deref(), *instances, &opts)?,
        Command::ExportFixtures { dir } => {
            std::fs::create_dir_all(dir).map_err(|e| InputError(format!("{}: {e}", dir.display())))?;
            for (name, body) in corpus::fixture_corpus() {
                let p = dir.join(name);
                std::fs::write(&p, body).map_err(|e| InputError(format!("{}: {e}", p.display())))?;
            }
            return Ok(None);
        }
    };
    Ok(Some(report))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(report)) => {
            let json = report.to_json();
            print!("{json}");
            if let Some(out) = &cli.json_out {
                if let Err(e) = std::fs::write(out, &json) {
                    eprintln!("error: {}: {e}", out.display());
                    return ExitCode::from(2);
                }
            }
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
