use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use jumpnls::harness::commands::{self, resolve_out_dir};
use jumpnls::harness::{ExperimentConfig, RunOptions};

/// Split-step simulation of the nonlinear Schrödinger equation with
/// compensated Poisson jump noise, and checks of its estimates.
#[derive(Parser)]
#[command(name = "jumpnls", version)]
struct Cli {
    /// Experiment config (JSON)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the master seed from the config
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for report.json and CSV outputs
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Also write the initial and final fields as snapshots
    #[arg(long, global = true)]
    dump_state: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one path at the configured truncation level
    Simulate,
    /// Monte Carlo ensemble over all truncation levels
    Ensemble,
    /// Compare the Picard fixed point with the split-step solution
    PicardCheck {
        #[arg(long, default_value_t = 200)]
        max_iter: usize,
    },
    /// Estimate the Strichartz ratios
    Strichartz {
        /// Wave packets in the homogeneous and inhomogeneous ensembles
        #[arg(long, default_value_t = 32)]
        samples: usize,
        /// Paths for the stochastic estimate (default: ensemble n_paths)
        #[arg(long)]
        paths: Option<usize>,
    },
    /// Pathwise Itô balance of ‖X‖^q for each q in q_list
    MassBalance {
        /// Paths for the ensemble mean of the compensated jump term
        #[arg(long, default_value_t = 64)]
        martingale_paths: usize,
    },
    /// Roots of f(x) = K + x^α/(4(2K)^{α−1}) − x
    Roots {
        #[arg(long, default_value_t = 1.0)]
        k: f64,
        /// Defaults to the config exponent, or 3
        #[arg(long)]
        alpha: Option<f64>,
    },
}

fn run(cli: Cli) -> jumpnls::Result<String> {
    let cfg = cli.config.as_ref().map(ExperimentConfig::load).transpose()?;
    let opts = RunOptions {
        out_dir: resolve_out_dir(cli.out_dir.clone(), cfg.as_ref()),
        seed: cli.seed,
        dump_state: cli.dump_state,
    };
    let need = || {
        cfg.as_ref()
            .ok_or_else(|| jumpnls::Error::InvalidConfig("this subcommand needs --config <file>".into()))
    };
    Ok(match cli.command {
        Command::Simulate => commands::simulate(need()?, &opts)?.1,
        Command::Ensemble => commands::ensemble(need()?, &opts)?.1,
        Command::PicardCheck { max_iter } => commands::picard_check(need()?, &opts, max_iter)?.1,
        Command::Strichartz { samples, paths } => {
            let cfg = need()?;
            commands::strichartz(cfg, &opts, samples, paths.unwrap_or(cfg.ensemble.n_paths))?.1
        }
        Command::MassBalance { martingale_paths } => commands::mass_balance_check(need()?, &opts, martingale_paths)?.1,
        Command::Roots { k, alpha } => {
            let alpha = alpha.or(cfg.as_ref().map(|c| c.solver.alpha)).unwrap_or(3.0);
            let dir = (cli.out_dir.is_some() || cfg.is_some()).then_some(opts.out_dir.as_path());
            commands::roots(k, alpha, dir)?.1
        }
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(csv) => {
            print!("{csv}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
