use clap::{Args, Parser, Subcommand};
use hje_cli::{
    cmd_boundary_demo, cmd_convergence, cmd_oracle_compare, cmd_solve, CliError, ExperimentConfig,
};
use std::path::PathBuf;
use std::process::ExitCode;

/// Finite-difference experiments for Hamilton-Jacobi equations on the
/// probability simplex of a weighted graph.
#[derive(Parser)]
#[command(name = "hje", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration file (flat `key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for CSV tables and the JSON manifest.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Validate the time-step ratio against a sampled CFL bound before
    /// explicit runs and fail when it is exceeded.
    #[arg(long)]
    strict_cfl: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured scheme and write solution snapshots.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Snapshot times (comma separated); defaults to the horizon.
        #[arg(long, value_delimiter = ',')]
        snapshot_times: Option<Vec<f64>>,
    },
    /// Grid-refinement error table against a nested reference run.
    Convergence {
        #[command(flatten)]
        common: Common,
        /// Mesh resolutions (comma separated, strictly increasing).
        #[arg(long, value_delimiter = ',')]
        resolutions: Option<Vec<u32>>,
    },
    /// Error table against the exact pure-noise semigroup solution.
    OracleCompare {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        resolutions: Option<Vec<u32>>,
    },
    /// Compare prescribed boundary values against linear extrapolation.
    BoundaryDemo {
        #[command(flatten)]
        common: Common,
    },
}

fn load_config(common: &Common) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::from_file(&common.config)?;
    if common.strict_cfl {
        cfg.strict_cfl = true;
    }
    Ok(cfg)
}

fn resolutions_of(
    cfg: &ExperimentConfig,
    flag: Option<Vec<u32>>,
) -> Result<Vec<u32>, CliError> {
    flag.or_else(|| cfg.resolutions.clone())
        .ok_or_else(|| CliError::Config("no resolutions given (flag or config)".into()))
}

fn run() -> Result<(), CliError> {
    match Cli::parse().command {
        Command::Solve {
            common,
            snapshot_times,
        } => {
            let cfg = load_config(&common)?;
            let out = cmd_solve(&cfg, snapshot_times.as_deref(), &common.out)?;
            println!(
                "solve: {} steps, {} snapshot(s), bound excess {:.3e}",
                out.run.n_steps,
                out.snapshot_files.len(),
                out.run.uniform_bound_excess
            );
        }
        Command::Convergence {
            common,
            resolutions,
        } => {
            let cfg = load_config(&common)?;
            let res = resolutions_of(&cfg, resolutions)?;
            let report = cmd_convergence(&cfg, &res, &common.out)?;
            print!("{}", report.to_csv());
        }
        Command::OracleCompare {
            common,
            resolutions,
        } => {
            let cfg = load_config(&common)?;
            let res = resolutions_of(&cfg, resolutions)?;
            let report = cmd_oracle_compare(&cfg, &res, &common.out)?;
            print!("{}", report.to_csv());
        }
        Command::BoundaryDemo { common } => {
            let cfg = load_config(&common)?;
            let outcome = cmd_boundary_demo(&cfg, &common.out)?;
            println!(
                "boundary demo: dirichlet quotient {:.6}, extrapolation quotient {:.6}, ratio {:.3}",
                outcome.dirichlet_quotient,
                outcome.extrapolation_quotient,
                outcome.quotient_ratio
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
