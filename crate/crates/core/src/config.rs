//! Run configuration: command-line flags, flat `key = value` config files,
//! presets and validation.
//!
//! Precedence, lowest first: built-in defaults, `--preset`, config file,
//! command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::mixed::MixedSpec;
use crate::noise::{GridSpec, HurstParam};
use crate::scheme::CirParams;

/// Configuration failure; the CLI maps it to exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid {}: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

impl From<crate::Error> for ConfigError {
    fn from(err: crate::Error) -> Self {
        match err {
            crate::Error::InvalidParameter { field, reason } => ConfigError::new(field, reason),
            other => ConfigError::new("configuration", other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Simulate trajectories and write `path_id,t,z,r` rows.
    Simulate,
    /// Estimate the strong self-convergence order.
    Convergence,
    /// Audit the minimum of the rate over an ensemble.
    Positivity,
    /// Bracket and quadratic variation statistics of the driver.
    Bracket,
    /// Monte Carlo mean of the rate at one time.
    Mcstats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Csv,
    JsonLines,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Trajectories on [0, 10] like the published figure. The model
    /// parameters are assumed, not taken from the publication.
    Figure1,
}

/// Flags shared by every subcommand. All are optional so that config files
/// and presets can fill the gaps.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Mean-reversion speed.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub k: Option<f64>,
    /// Long-run level.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    /// Volatility.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub sigma: Option<f64>,
    /// Initial rate.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub r0: Option<f64>,
    /// Hurst index of the fractional component, in (1/2, 1).
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub hurst: Option<f64>,
    #[arg(long = "weight-bm", global = true, allow_negative_numbers = true)]
    pub weight_bm: Option<f64>,
    #[arg(long = "weight-fbm", global = true, allow_negative_numbers = true)]
    pub weight_fbm: Option<f64>,
    /// Time horizon.
    #[arg(long = "T", global = true, allow_negative_numbers = true)]
    pub horizon: Option<f64>,
    /// Number of grid steps.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Number of paths (seeds for `convergence`).
    #[arg(long, global = true)]
    pub paths: Option<usize>,
    /// Master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    #[arg(long, value_enum, global = true)]
    pub preset: Option<Preset>,
    /// Flat `key = value` file using the flag names as keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Grid sizes compared in `convergence`.
    #[arg(long = "n-list", value_delimiter = ',', global = true)]
    pub n_list: Option<Vec<usize>>,
    /// Reference grid size in `convergence`.
    #[arg(long = "n-ref", global = true)]
    pub n_ref: Option<usize>,
    /// Inner refinements used by `bracket`.
    #[arg(long, value_delimiter = ',', global = true)]
    pub refinements: Option<Vec<usize>>,
    /// Evaluation time for `mcstats` (defaults to T).
    #[arg(long = "t-eval", global = true, allow_negative_numbers = true)]
    pub t_eval: Option<f64>,
}

#[derive(Debug, Parser)]
#[command(name = "mfcir", version, about = "Mixed fractional CIR simulation and checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

/// Fully validated configuration of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub params: CirParams,
    pub mixed: MixedSpec,
    pub grid: GridSpec,
    pub n_paths: usize,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
    pub format: Format,
    pub n_list: Vec<usize>,
    pub n_ref: usize,
    pub refinements: Vec<usize>,
    pub t_eval: f64,
    /// Non-fatal diagnostics, e.g. a failed Feller condition.
    pub warnings: Vec<String>,
}

pub const DEFAULT_N_LIST: [usize; 5] = [64, 128, 256, 512, 1024];
pub const DEFAULT_N_REF: usize = 1 << 14;

const CONFIG_KEYS: &[&str] = &[
    "k", "theta", "sigma", "r0", "hurst", "weight-bm", "weight-fbm", "T", "n", "paths", "seed",
    "out", "format", "preset", "n-list", "n-ref", "refinements", "t-eval",
];

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| ConfigError::new(key, format!("cannot parse '{value}': {e}")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<usize>, ConfigError> {
    value
        .split(',')
        .map(|v| parse_value(key, v.trim()))
        .collect()
}

fn parse_enum<T: ValueEnum>(key: &str, value: &str) -> Result<T, ConfigError> {
    T::from_str(value, false).map_err(|_| ConfigError::new(key, format!("unknown value '{value}'")))
}

/// Parses a flat `key = value` config file body. Blank lines and lines
/// starting with `#` are skipped; unknown keys are rejected.
pub fn parse_config_text(text: &str) -> Result<Flags, ConfigError> {
    let mut flags = Flags::default();
    for (line_no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            ConfigError::new("config", format!("line {}: expected key = value", line_no + 1))
        })?;
        let (key, value) = (key.trim().trim_start_matches("--"), value.trim());
        match key {
            "k" => flags.k = Some(parse_value(key, value)?),
            "theta" => flags.theta = Some(parse_value(key, value)?),
            "sigma" => flags.sigma = Some(parse_value(key, value)?),
            "r0" => flags.r0 = Some(parse_value(key, value)?),
            "hurst" => flags.hurst = Some(parse_value(key, value)?),
            "weight-bm" => flags.weight_bm = Some(parse_value(key, value)?),
            "weight-fbm" => flags.weight_fbm = Some(parse_value(key, value)?),
            "T" => flags.horizon = Some(parse_value(key, value)?),
            "n" => flags.n = Some(parse_value(key, value)?),
            "paths" => flags.paths = Some(parse_value(key, value)?),
            "seed" => flags.seed = Some(parse_value(key, value)?),
            "out" => flags.out = Some(PathBuf::from(value)),
            "format" => flags.format = Some(parse_enum(key, value)?),
            "preset" => flags.preset = Some(parse_enum(key, value)?),
            "n-list" => flags.n_list = Some(parse_list(key, value)?),
            "n-ref" => flags.n_ref = Some(parse_value(key, value)?),
            "refinements" => flags.refinements = Some(parse_list(key, value)?),
            "t-eval" => flags.t_eval = Some(parse_value(key, value)?),
            _ => {
                return Err(ConfigError::new(
                    "config",
                    format!(
                        "line {}: unknown key '{key}' (expected one of {})",
                        line_no + 1,
                        CONFIG_KEYS.join(", ")
                    ),
                ))
            }
        }
    }
    Ok(flags)
}

/// `primary` wins wherever it is set.
fn overlay(primary: Flags, fallback: Flags) -> Flags {
    Flags {
        k: primary.k.or(fallback.k),
        theta: primary.theta.or(fallback.theta),
        sigma: primary.sigma.or(fallback.sigma),
        r0: primary.r0.or(fallback.r0),
        hurst: primary.hurst.or(fallback.hurst),
        weight_bm: primary.weight_bm.or(fallback.weight_bm),
        weight_fbm: primary.weight_fbm.or(fallback.weight_fbm),
        horizon: primary.horizon.or(fallback.horizon),
        n: primary.n.or(fallback.n),
        paths: primary.paths.or(fallback.paths),
        seed: primary.seed.or(fallback.seed),
        out: primary.out.or(fallback.out),
        format: primary.format.or(fallback.format),
        preset: primary.preset.or(fallback.preset),
        config: primary.config.or(fallback.config),
        n_list: primary.n_list.or(fallback.n_list),
        n_ref: primary.n_ref.or(fallback.n_ref),
        refinements: primary.refinements.or(fallback.refinements),
        t_eval: primary.t_eval.or(fallback.t_eval),
    }
}

fn defaults() -> Flags {
    Flags {
        k: Some(1.0),
        theta: Some(1.0),
        sigma: Some(1.0),
        r0: Some(1.0),
        hurst: Some(0.75),
        weight_bm: Some(1.0),
        weight_fbm: Some(1.0),
        horizon: Some(1.0),
        n: Some(1 << 10),
        paths: Some(10),
        seed: Some(42),
        format: Some(Format::Csv),
        ..Flags::default()
    }
}

fn preset_flags(preset: Preset) -> Flags {
    match preset {
        Preset::Figure1 => Flags {
            k: Some(1.0),
            theta: Some(1.0),
            sigma: Some(1.0),
            r0: Some(1.0),
            hurst: Some(0.75),
            horizon: Some(10.0),
            n: Some(4096),
            paths: Some(50),
            ..Flags::default()
        },
    }
}

/// Merges flags over an optional config file and validates the result.
pub fn resolve(command: Command, cli: Flags) -> Result<RunConfig, ConfigError> {
    let file = match &cli.config {
        Some(path) => read_config_file(path)?,
        None => Flags::default(),
    };
    let explicit = overlay(cli, file);
    let base = match explicit.preset {
        Some(p) => overlay(preset_flags(p), defaults()),
        None => defaults(),
    };
    validate(command, overlay(explicit, base))
}

fn read_config_file(path: &Path) -> Result<Flags, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new("config", format!("cannot read {}: {e}", path.display())))?;
    parse_config_text(&text)
}

fn positive(field: &str, value: f64) -> Result<f64, ConfigError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(ConfigError::new(field, format!("{value} must be a positive number")))
    }
}

fn validate(command: Command, flags: Flags) -> Result<RunConfig, ConfigError> {
    // Every field below is populated by `defaults()`.
    let k = positive("k", flags.k.unwrap())?;
    let theta = positive("theta", flags.theta.unwrap())?;
    let sigma = positive("sigma", flags.sigma.unwrap())?;
    let r0 = positive("r0", flags.r0.unwrap())?;
    let horizon = positive("T", flags.horizon.unwrap())?;
    let hurst = HurstParam::for_model(flags.hurst.unwrap())?;
    let mixed = MixedSpec::with_weights(hurst, flags.weight_bm.unwrap(), flags.weight_fbm.unwrap())?;
    let params = CirParams::new(k, theta, sigma, r0)?;

    let n = flags.n.unwrap();
    if n == 0 {
        return Err(ConfigError::new("n", "must be at least 1"));
    }
    let grid = GridSpec::new(horizon, n)?;
    let n_paths = flags.paths.unwrap();
    if n_paths == 0 {
        return Err(ConfigError::new("paths", "must be at least 1"));
    }

    let n_list = flags.n_list.unwrap_or_else(|| DEFAULT_N_LIST.to_vec());
    if n_list.is_empty() || n_list.contains(&0) {
        return Err(ConfigError::new("n-list", "entries must be positive"));
    }
    let n_ref = flags.n_ref.unwrap_or(DEFAULT_N_REF);
    if n_ref == 0 {
        return Err(ConfigError::new("n-ref", "must be positive"));
    }
    let refinements = flags.refinements.unwrap_or_else(|| {
        std::iter::successors(Some(1usize), |r| r.checked_mul(4))
            .take_while(|r| *r <= n && n % r == 0)
            .collect()
    });
    if refinements.is_empty() || refinements.contains(&0) {
        return Err(ConfigError::new("refinements", "entries must be positive"));
    }
    let t_eval = flags.t_eval.unwrap_or(horizon);
    if !(t_eval > 0.0 && t_eval <= horizon) {
        return Err(ConfigError::new("t-eval", format!("{t_eval} is not in (0, T]")));
    }

    let mut warnings = Vec::new();
    if !params.feller_ok() {
        warnings.push(format!(
            "Feller condition fails: 2k*theta = {} <= sigma^2 = {}; positivity of the rate is not guaranteed",
            2.0 * k * theta,
            sigma * sigma
        ));
    }

    Ok(RunConfig {
        command,
        params,
        mixed,
        grid,
        n_paths,
        seed: flags.seed.unwrap(),
        output_path: flags.out,
        format: flags.format.unwrap(),
        n_list,
        n_ref,
        refinements,
        t_eval,
        warnings,
    })
}

/// Parses a full argument vector (program name first).
pub fn parse_config<I, T>(args: I) -> Result<RunConfig, ParseOutcome>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(ParseOutcome::Clap)?;
    resolve(cli.command, cli.flags).map_err(ParseOutcome::Invalid)
}

/// Why argument parsing did not produce a [`RunConfig`].
#[derive(Debug)]
pub enum ParseOutcome {
    /// Help, version or a syntax error reported by clap.
    Clap(clap::Error),
    Invalid(ConfigError),
}
