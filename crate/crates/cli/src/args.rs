//! Argument parsing and dispatch.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::commands;
use crate::config::RunConfig;
use crate::sweep_file::SweepFile;
use crate::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "twinphoton",
    version,
    about = "Twin-photon ellipsometry simulation and estimation"
)]
pub struct Cli {
    /// Worker threads for sweeps and Monte Carlo (default: one per core).
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write an analyzer sweep as CSV.
    Simulate(ConfigArgs),
    /// Estimate C, psi and delta from a sweep CSV.
    Estimate {
        /// Sweep file written by `simulate` (or in the same format).
        input: PathBuf,
        #[command(flatten)]
        args: ConfigArgs,
    },
    /// Compare the Fock-space oracle with the closed-form rates.
    Oracle(ConfigArgs),
    /// Tabulate estimator bias and spread against total counts.
    Montecarlo(ConfigArgs),
}

/// Overrides for configuration keys; each flag wins over the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// `key = value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// unentangled, compensated or entangled.
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub psi_deg: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta_deg: Option<String>,
    /// Complex reflection coefficient for H, e.g. 0.3+0.1i.
    #[arg(long, allow_hyphen_values = true)]
    pub r1: Option<String>,
    /// Complex reflection coefficient for V.
    #[arg(long, allow_hyphen_values = true)]
    pub r2: Option<String>,
    /// Full-scale coincidence rate, counts per second.
    #[arg(long)]
    pub c: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta1_deg: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta2_start: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta2_stop: Option<String>,
    #[arg(long)]
    pub steps: Option<String>,
    /// Residual compensator delay, seconds.
    #[arg(long, allow_hyphen_values = true)]
    pub tau: Option<String>,
    /// Spectral bandwidth, rad/s (rms for gaussian, full width for rectangular).
    #[arg(long)]
    pub bandwidth: Option<String>,
    /// Center (degenerate) frequency, rad/s.
    #[arg(long)]
    pub center: Option<String>,
    /// gaussian or rectangular.
    #[arg(long)]
    pub shape: Option<String>,
    /// Counting time per setting, seconds.
    #[arg(long)]
    pub duration: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// Poisson counting noise.
    #[arg(long)]
    pub noise: bool,
    /// Expected counts instead of Poisson draws.
    #[arg(long, conflicts_with = "noise")]
    pub zero_noise: bool,
    /// Output file (stdout if absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// three-point or fit.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub trials: Option<String>,
    /// Comma-separated total-count levels for montecarlo.
    #[arg(long)]
    pub levels: Option<String>,
    /// Oracle frequency modes (power of two, 2 to 1024).
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub tolerance: Option<String>,
    /// Oracle comparison draws.
    #[arg(long)]
    pub draws: Option<String>,
    /// Oracle draws use the configured sample.
    #[arg(long)]
    pub fixed_sample: bool,
}

impl ConfigArgs {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let pairs = [
            ("variant", &self.variant),
            ("psi_deg", &self.psi_deg),
            ("delta_deg", &self.delta_deg),
            ("r1", &self.r1),
            ("r2", &self.r2),
            ("c", &self.c),
            ("theta1_deg", &self.theta1_deg),
            ("theta2_start_deg", &self.theta2_start),
            ("theta2_stop_deg", &self.theta2_stop),
            ("steps", &self.steps),
            ("tau_s", &self.tau),
            ("bandwidth_rad_s", &self.bandwidth),
            ("center_rad_s", &self.center),
            ("shape", &self.shape),
            ("duration_s", &self.duration),
            ("seed", &self.seed),
            ("mode", &self.mode),
            ("trials", &self.trials),
            ("levels", &self.levels),
            ("grid", &self.grid),
            ("tolerance", &self.tolerance),
            ("draws", &self.draws),
        ];
        let mut out: Vec<(&'static str, String)> = pairs
            .into_iter()
            .filter_map(|(k, v)| v.clone().map(|v| (k, v)))
            .collect();
        if self.noise {
            out.push(("noise", "true".into()));
        }
        if self.zero_noise {
            out.push(("noise", "false".into()));
        }
        if self.fixed_sample {
            out.push(("fixed_sample", "true".into()));
        }
        if let Some(path) = &self.out {
            out.push(("output", path.display().to_string()));
        }
        out
    }

    /// Applies the `--config` file, then the flags, on top of `cfg`.
    pub fn resolve(&self, mut cfg: RunConfig) -> Result<RunConfig, CliError> {
        if let Some(path) = &self.config {
            let text = read(path)?;
            cfg.apply_text(&text, &path.display().to_string())?;
        }
        for (key, value) in self.overrides() {
            cfg.set(key, &value)
                .map_err(|e| CliError::Config(format!("--{}: {e}", key.replace('_', "-"))))?;
        }
        Ok(cfg)
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn emit(cfg: &RunConfig, text: &str) -> Result<(), CliError> {
    match &cfg.output {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Runs one parsed invocation.
pub fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(CliError::Config("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    match cli.command {
        Command::Simulate(args) => {
            let cfg = args.resolve(RunConfig::default())?;
            let file = commands::simulate(&cfg)?;
            emit(&cfg, &file.to_csv()?)
        }
        Command::Estimate { input, args } => {
            let text = read(&input)?;
            let file = SweepFile::parse(&text, &input.display().to_string())?;
            let cfg = args.resolve(file.config.clone())?;
            let report = commands::estimate(&file, &cfg)?;
            emit(&cfg, &report)
        }
        Command::Oracle(args) => {
            let cfg = args.resolve(RunConfig::default())?;
            let report = commands::oracle(&cfg)?;
            emit(&cfg, &report.text)?;
            if report.passed() {
                Ok(())
            } else {
                Err(CliError::OracleMismatch {
                    deviation: report.max_deviation,
                    tolerance: report.tolerance,
                })
            }
        }
        Command::Montecarlo(args) => {
            let cfg = args.resolve(RunConfig::default())?;
            let table = commands::montecarlo(&cfg)?;
            emit(&cfg, &table)
        }
    }
}
