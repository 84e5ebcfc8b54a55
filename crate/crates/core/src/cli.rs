//! Command-line driver.
//!
//! Exit codes: 0 success, 2 configuration error, 3 I/O error,
//! 4 numerical failure of a noise generator.

use std::io::Write;

use rayon::prelude::*;

use crate::config::{parse_config, Command, ParseOutcome, RunConfig};
use crate::error::Error;
use crate::experiments::{run_bracket, run_convergence, run_mc_stats, run_positivity};
use crate::mixed::MixedSampler;
use crate::output;
use crate::rng::path_seeds;
use crate::scheme::{simulate_z, Trajectory};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

/// Environment variable capping the worker count (0 = automatic).
pub const THREADS_ENV: &str = "MFCIR_THREADS";

#[derive(Debug)]
enum Failure {
    Config(String),
    Io(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Io(_) => EXIT_IO,
            Failure::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Io(m) | Failure::Numerical(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        if err.is_numerical() {
            Failure::Numerical(err.to_string())
        } else {
            Failure::Config(err.to_string())
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .map_err(|_| Failure::Config(format!("invalid {THREADS_ENV}: '{value}' is not a count")))?;
    if threads > 0 {
        // A pool may already exist when the driver runs twice in one process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    Ok(())
}

fn simulate(cfg: &RunConfig) -> Result<Vec<Trajectory>, Failure> {
    let sampler = MixedSampler::new(cfg.mixed, cfg.grid)?;
    let trajectories = path_seeds(cfg.seed, cfg.n_paths)
        .par_iter()
        .map(|&s| simulate_z(&cfg.params, &sampler.sample(s)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(trajectories)
}

fn render(cfg: &RunConfig) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    let io_err = |e: std::io::Error| Failure::Io(e.to_string());
    match cfg.command {
        Command::Simulate => {
            output::write_trajectories(&mut buf, &simulate(cfg)?, cfg.format).map_err(io_err)?
        }
        Command::Convergence => {
            let seeds = path_seeds(cfg.seed, cfg.n_paths);
            let report = run_convergence(
                &cfg.params,
                &cfg.mixed,
                cfg.grid.horizon(),
                &cfg.n_list,
                cfg.n_ref,
                &seeds,
            )?;
            output::write_convergence(&mut buf, &report, cfg.format).map_err(io_err)?
        }
        Command::Positivity => {
            let report = run_positivity(&cfg.params, &cfg.mixed, cfg.grid, cfg.n_paths, cfg.seed)?;
            output::write_positivity(&mut buf, &report, cfg.format).map_err(io_err)?
        }
        Command::Bracket => {
            let seeds = path_seeds(cfg.seed, cfg.n_paths);
            let rows = run_bracket(&cfg.mixed, cfg.grid, &cfg.refinements, &seeds)?;
            output::write_bracket(&mut buf, &rows, cfg.format).map_err(io_err)?
        }
        Command::Mcstats => {
            let stats = run_mc_stats(&cfg.params, &cfg.mixed, cfg.grid, cfg.t_eval, cfg.n_paths, cfg.seed)?;
            output::write_mc_stats(&mut buf, &stats, cfg.format).map_err(io_err)?
        }
    }
    Ok(buf)
}

fn emit(cfg: &RunConfig, bytes: &[u8]) -> Result<(), Failure> {
    match &cfg.output_path {
        Some(path) => std::fs::write(path, bytes)
            .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .lock()
            .write_all(bytes)
            .map_err(|e| Failure::Io(e.to_string())),
    }
}

fn execute(cfg: &RunConfig) -> Result<(), Failure> {
    configure_threads()?;
    let bytes = render(cfg)?;
    emit(cfg, &bytes)
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cfg = match parse_config(args) {
        Ok(cfg) => cfg,
        Err(ParseOutcome::Clap(err)) => {
            if err.use_stderr() {
                let text = err.to_string();
                eprintln!("{}", text.lines().next().unwrap_or("error: invalid arguments"));
                return EXIT_CONFIG;
            }
            // --help / --version
            let _ = err.print();
            return EXIT_OK;
        }
        Err(ParseOutcome::Invalid(err)) => {
            eprintln!("error: {err}");
            return EXIT_CONFIG;
        }
    };
    for warning in &cfg.warnings {
        eprintln!("warning: {warning}");
    }
    match execute(&cfg) {
        Ok(()) => EXIT_OK,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            failure.code()
        }
    }
}
