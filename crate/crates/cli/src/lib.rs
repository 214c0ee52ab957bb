//! Command-line driver.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 numerical or
//! check failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use combustion1d_core::config::Config;

mod commands;
mod sweep;

pub use commands::{cmd_analyze_nodal, cmd_diagnose, cmd_simulate, cmd_verify_inequalities};
pub use sweep::cmd_sweep;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;

/// A command that did not succeed, with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl fmt::Display) -> Self {
        Self { code: EXIT_USAGE, message: message.to_string() }
    }

    pub fn check(message: impl fmt::Display) -> Self {
        Self { code: EXIT_FAILURE, message: message.to_string() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub type CmdResult = Result<(), Failure>;

#[derive(Debug, Parser)]
#[command(name = "combustion1d", version, about = "1D reacting compressible flow in Lagrangian coordinates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// Configuration file with `key = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the solver and write snapshots, diagnostics and a summary.
    Simulate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory; overrides `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute every diagnostic from a stored run.
    Diagnose {
        /// Run directory containing `index.json`.
        dir: PathBuf,
        /// Where to write the recomputed files; defaults to the run directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the randomized inequality battery.
    VerifyInequalities {
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated subset of fisher-hessian, reverse, bernis, log-sobolev.
        #[arg(long, value_delimiter = ',')]
        checks: Option<Vec<String>>,
        #[arg(long, default_value_t = 1024)]
        n_cells: usize,
        #[arg(long, default_value = "out/inequalities")]
        out: PathBuf,
        /// Also write one CSV row per trial and check.
        #[arg(long)]
        per_trial_csv: bool,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Fit local exponents of `Z` near its zeros in a stored run.
    AnalyzeNodal {
        dir: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-3)]
        zero_threshold: f64,
        #[arg(long, default_value_t = 12)]
        half_width: usize,
    },
    /// Run the cartesian product of the `sweep.*` entries.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Concurrent runs; defaults to the number of cores.
        #[arg(long)]
        jobs: Option<usize>,
    },
}

/// Reads the configuration file, then applies `--set` and `--seed`.
pub fn load_config(args: &ConfigArgs) -> Result<Config, Failure> {
    let mut cfg = match &args.config {
        Some(path) => Config::from_file(path).map_err(Failure::usage)?,
        None => Config::default(),
    };
    for kv in &args.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Failure::usage(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(k.trim(), v.trim()).map_err(Failure::usage)?;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

pub fn run_command(command: Command) -> CmdResult {
    match command {
        Command::Simulate { config, out } => {
            let mut cfg = load_config(&config)?;
            if let Some(out) = out {
                cfg.output_dir = out;
            }
            cmd_simulate(&cfg)
        }
        Command::Diagnose { dir, out } => cmd_diagnose(&dir, out.as_deref()),
        Command::VerifyInequalities { trials, seed, checks, n_cells, out, per_trial_csv, jobs } => {
            let opts = commands::BatteryOptions { trials, seed, checks, n_cells, per_trial_csv };
            with_jobs(jobs, || cmd_verify_inequalities(&opts, &out))
        }
        Command::AnalyzeNodal { dir, out, zero_threshold, half_width } => {
            cmd_analyze_nodal(&dir, out.as_deref(), zero_threshold, half_width)
        }
        Command::Sweep { config, out, jobs } => {
            let mut cfg = load_config(&config)?;
            if let Some(out) = out {
                cfg.output_dir = out;
            }
            cmd_sweep(&cfg, jobs)
        }
    }
}

/// Runs `f` on a rayon pool with `jobs` threads, or the global pool.
pub(crate) fn with_jobs<T>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> T
where
    T: Send,
{
    match jobs {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        None => f(),
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run_command(cli.command) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {f}");
            f.code
        }
    }
}

pub(crate) fn io_failure(path: &Path, e: impl fmt::Display) -> Failure {
    Failure::usage(format!("{}: {e}", path.display()))
}
