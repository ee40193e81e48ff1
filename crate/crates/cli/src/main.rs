use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use floquet_cli::app::{run_figure, run_oracle, run_resonances, run_solve, run_sweep, Common, Report};
use floquet_cli::config::OracleKind;
use floquet_cli::figures::{figure, FIGURE_IDS};
use floquet_cli::CliError;

#[derive(Parser)]
#[command(name = "floquet", version, about = "Floquet-channel tunneling through driven barriers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: available hardware threads).
    #[arg(long)]
    jobs: Option<usize>,
    /// Neither read nor write the result cache.
    #[arg(long)]
    no_cache: bool,
    /// Override the relative ODE tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

impl From<CommonArgs> for Common {
    fn from(a: CommonArgs) -> Self {
        Self {
            config: a.config,
            out: a.out,
            jobs: a.jobs,
            no_cache: a.no_cache,
            tol: a.tol,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Driven and static solve at the configured point.
    Solve(CommonArgs),
    /// Sweep one parameter as given in the [sweep] section.
    Sweep(CommonArgs),
    /// Regenerate the dataset behind a figure.
    Figure {
        /// Figure id (F1..F8, A9..A12).
        id: Option<String>,
        /// List the available ids.
        #[arg(long)]
        list: bool,
        /// Override the number of points per series.
        #[arg(long)]
        points: Option<usize>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Evaluate an analytic or single-channel oracle.
    Oracle {
        /// static-rectangular, junction, perturbative, opaque, static-coulomb or wkb.
        #[arg(long)]
        kind: Option<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Complex-scaled spectrum and resonance classification.
    Resonances(CommonArgs),
}

fn dispatch(cmd: Command) -> Result<Report, CliError> {
    match cmd {
        Command::Solve(c) => run_solve(&c.into()),
        Command::Sweep(c) => run_sweep(&c.into()),
        Command::Figure { id, list, points, common } => {
            if list {
                for id in FIGURE_IDS {
                    println!("{id}\t{}", figure(id)?.title);
                }
                return Ok(Report::default());
            }
            let id = id.ok_or_else(|| CliError::Config(format!("figure id required; available: {}", FIGURE_IDS.join(", "))))?;
            run_figure(&common.into(), &id, points)
        }
        Command::Oracle { kind, common } => {
            let kind = kind.map(|k| k.parse::<OracleKind>()).transpose()?;
            run_oracle(&common.into(), kind)
        }
        Command::Resonances(c) => run_resonances(&c.into()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(report) => {
            for f in &report.files {
                eprintln!("wrote {}", f.display());
            }
            if report.points > 0 {
                eprintln!("{} points, {} from cache, {} failed", report.points, report.cached, report.failures.len());
            }
            for f in &report.failures {
                eprintln!("failed: {f}");
            }
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
