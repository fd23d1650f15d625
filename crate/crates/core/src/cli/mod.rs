//! Command line runner: configuration, experiments and output files.
//!
//! Exit codes: 0 success, 2 configuration or parameter error, 3 numerical
//! failure (a `failure.json` is written), 4 I/O error.

pub mod config;
pub mod experiments;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
use config::{Experiment, ExperimentConfig};
use output::{write_failure, RunOutput};

/// Environment variable giving the worker thread count.
pub const THREADS_ENV: &str = "PULSETRACK_THREADS";

#[derive(Debug, Parser)]
#[command(name = "pulsetrack", version, about = "Stochastic traveling pulses with phase tracking")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides `sim.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; overrides the config and the environment.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Profile cache file, read when valid and written otherwise.
    #[arg(long)]
    pub profile_cache: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the experiment named in the config file.
    Run(RunArgs),
    /// Parse and check a config file without computing anything.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    #[command(flatten)]
    Named(Named),
}

#[derive(Debug, Subcommand)]
pub enum Named {
    /// Pulse profile and speed.
    Profile(RunArgs),
    /// Eigenvalues, dispersion curves and projection data.
    Spectrum(RunArgs),
    /// Full, reduced and immediate-relaxation paths with stopping times.
    Track(RunArgs),
    /// Reduced phase ladder in m and OU stationarity.
    Reduce(RunArgs),
    /// Residual scaling in sigma and stopping probabilities.
    Scaling(RunArgs),
    /// Immediate-relaxation paths and their orthogonality.
    Immediate(RunArgs),
    /// Decay fit, moment bound and phase variance.
    Moments(RunArgs),
    /// Derivatives of the phase distance functional.
    Minimality(RunArgs),
}

impl Named {
    fn split(self) -> (Experiment, RunArgs) {
        match self {
            Named::Profile(a) => (Experiment::Profile, a),
            Named::Spectrum(a) => (Experiment::Spectrum, a),
            Named::Track(a) => (Experiment::Track, a),
            Named::Reduce(a) => (Experiment::Reduce, a),
            Named::Scaling(a) => (Experiment::Scaling, a),
            Named::Immediate(a) => (Experiment::Immediate, a),
            Named::Moments(a) => (Experiment::Moments, a),
            Named::Minimality(a) => (Experiment::Minimality, a),
        }
    }
}

fn thread_count(arg: Option<usize>, cfg: Option<usize>) -> Result<Option<usize>> {
    if let Some(n) = arg.or(cfg) {
        return Ok(Some(n));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .parse::<usize>()
            .ok()
            .filter(|n| *n > 0)
            .map(Some)
            .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

/// Runs one experiment and writes its output directory.
pub fn execute(exp: Option<Experiment>, args: RunArgs) -> Result<PathBuf> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    let exp = exp
        .or(cfg.experiment)
        .ok_or_else(|| Error::Config("no experiment given on the command line or in the config".into()))?;
    cfg.experiment = Some(exp);
    if let Some(out) = args.out {
        cfg.out = out;
    }
    if let Some(seed) = args.seed {
        cfg.sim.seed = seed;
    }
    if args.threads == Some(0) {
        return Err(Error::Config("--threads must be >= 1".into()));
    }
    cfg.validate()?;
    let threads = thread_count(args.threads, cfg.threads)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Config(e.to_string()))?;

    let mut out = RunOutput::create(&cfg.out)?;
    let stale = out.path("failure.json");
    if stale.exists() {
        std::fs::remove_file(stale)?;
    }
    out.text("config.toml", &cfg.echo()?)?;
    let cache = args.profile_cache.as_deref();
    match pool.install(|| experiments::run(&cfg, exp, &mut out, cache)) {
        Ok(()) => {
            out.finish(exp.name(), cfg.sim.seed)?;
            Ok(cfg.out)
        }
        Err(e) => {
            if e.exit_code() == 3 {
                write_failure(&cfg.out, exp.name(), cfg.sim.seed, &e)?;
            }
            Err(e)
        }
    }
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Validate { config } => ExperimentConfig::load(&config).and_then(|c| c.validate()).map(|_| {
            println!("ok: {}", config.display());
        }),
        Command::Run(args) => execute(None, args).map(|d| println!("wrote {}", d.display())),
        Command::Named(n) => {
            let (exp, args) = n.split();
            execute(Some(exp), args).map(|d| println!("wrote {}", d.display()))
        }
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
