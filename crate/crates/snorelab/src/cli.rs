//! Command-line interface.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use snorelab_core::theory::Counterexample;

use crate::commands::{cmd_counterexample, cmd_prox_oracle, cmd_run, cmd_verify, Options};
use crate::config::{parse_config, ExperimentConfig};
use crate::error::Result;

#[derive(Debug, Parser)]
#[command(name = "snorelab", version, about = "Stochastic denoising-regularized restoration: runs, certification and oracles")]
pub struct Cli {
    /// Experiment config (JSON); defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Base seed (overrides ensemble.base_seed).
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", env = "SNORELAB_OUT")]
    pub out: Option<PathBuf>,

    /// Number of seeds (ensemble size for `run` and `verify`, replicas for
    /// `counterexample`).
    #[arg(long, global = true, value_name = "N")]
    pub seeds: Option<usize>,

    /// Worker threads (0 = one per core).
    #[arg(long, global = true, value_name = "N", env = "SNORELAB_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the configured solver and write traces and images.
    Run,
    /// Certify the convergence bounds on an ensemble.
    Verify {
        /// Re-check traces written by an earlier `verify` instead of running.
        #[arg(long, value_name = "DIR")]
        from_traces: Option<PathBuf>,
    },
    /// Noise-floor counterexample on a one-dimensional quadratic.
    Counterexample {
        #[arg(long, default_value_t = 100.0)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda_g: f64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma_noise: f64,
        #[arg(long, default_value_t = 10_000)]
        iters: usize,
    },
    /// Compare closed-form proximal operators with a grid search.
    ProxOracle {
        #[arg(long, default_value_t = 100)]
        cases: usize,
    },
}

pub const DEFAULT_OUT: &str = "snorelab-out";
const DEFAULT_COUNTEREXAMPLE_SEEDS: usize = 256;

fn load(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => parse_config(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.ensemble.base_seed = seed;
    }
    if let Some(n) = cli.seeds {
        match cli.command {
            Command::Verify { .. } => cfg.verify.seeds = n,
            _ => cfg.ensemble.n_seeds = n,
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Executes `cli`, writing human-readable output to `log`; returns the exit code.
pub fn execute(cli: &Cli, log: &mut dyn Write) -> Result<i32> {
    let opts = Options {
        out: cli.out.clone().unwrap_or_else(|| DEFAULT_OUT.into()),
        threads: cli.threads.unwrap_or(0),
    };
    match &cli.command {
        Command::Run => cmd_run(&load(cli)?, &opts, log),
        Command::Verify { from_traces } => {
            cmd_verify(&load(cli)?, &opts, from_traces.as_deref(), log)
        }
        Command::Counterexample {
            a,
            lambda_g,
            delta,
            sigma_noise,
            iters,
        } => {
            let mut p = Counterexample::new(
                *a,
                *lambda_g,
                *delta,
                *sigma_noise,
                *iters,
                cli.seeds.unwrap_or(DEFAULT_COUNTEREXAMPLE_SEEDS),
            );
            p.base_seed = cli.seed.unwrap_or(0);
            cmd_counterexample(&p, log)
        }
        Command::ProxOracle { cases } => cmd_prox_oracle(*cases, cli.seed.unwrap_or(0), log),
    }
}
