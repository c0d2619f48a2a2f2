//! The four subcommands. Each returns the text it would print or write.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twinphoton::coincidence::{sweep, visibility, AnalyzerSettings, SampleParams};
use twinphoton::estimation::{
    fit_sweep, monte_carlo_precision, three_point_from_sweep, EstimationMethod, EstimationResult,
    MonteCarloDesign, ShotNoise,
};
use twinphoton::oracle::oracle_rate;

use crate::config::{Mode, RunConfig, VariantArg};
use crate::format::sig;
use crate::sweep_file::{SweepFile, SweepRow, ValueColumn};
use crate::CliError;

pub const MAX_ORACLE_MODES: usize = 1024;

/// Sweeps analyzer 2 at fixed analyzer 1. Noiseless files carry closed-form
/// rates; with noise each row is a Poisson draw from one seeded stream.
pub fn simulate(cfg: &RunConfig) -> Result<SweepFile, CliError> {
    let configuration = cfg.configuration()?;
    cfg.check_duration()?;
    let grid = cfg.theta2_grid()?;
    let points = sweep(&configuration, cfg.theta1_deg.to_radians(), &grid)?;
    let noisy = cfg.noise.unwrap_or(false);
    let mut noise = ShotNoise::new(cfg.seed);

    let rows: Vec<SweepRow> = points
        .iter()
        .enumerate()
        .map(|(i, (_, rate))| {
            let value = if noisy {
                noise.counts(*rate, cfg.duration_s) as f64
            } else {
                *rate
            };
            let theta2_deg = if cfg.steps == 1 {
                cfg.theta2_start_deg
            } else {
                cfg.theta2_start_deg
                    + (cfg.theta2_stop_deg - cfg.theta2_start_deg) * i as f64
                        / (cfg.steps - 1) as f64
            };
            SweepRow {
                theta1_deg: cfg.theta1_deg,
                theta2_deg,
                duration_s: cfg.duration_s,
                value,
            }
        })
        .collect();

    let vis = visibility(rows.iter().map(|r| r.value)).map_or("nan".to_string(), sig);
    Ok(SweepFile {
        config: cfg.clone(),
        column: if noisy {
            ValueColumn::Counts
        } else {
            ValueColumn::RateCps
        },
        rows,
        footer: vec![("visibility".into(), vis)],
    })
}

fn opt(x: Option<f64>) -> String {
    x.map_or("none".to_string(), sig)
}

pub fn estimate_report(cfg: &RunConfig, result: &EstimationResult) -> String {
    let lines = [
        ("mode", cfg.mode.as_str().to_string()),
        ("variant", cfg.variant.as_str().to_string()),
        ("c_hat", sig(result.c_hat)),
        ("psi_deg", sig(result.psi_hat.to_degrees())),
        ("delta_deg", sig(result.delta_hat.to_degrees())),
        ("std_c", opt(result.std_c)),
        ("std_psi_deg", opt(result.std_psi.map(f64::to_degrees))),
        ("std_delta_deg", opt(result.std_delta.map(f64::to_degrees))),
        (
            "clamped_cosdelta",
            result.flags.clamped_cosdelta.to_string(),
        ),
        (
            "delta_unidentifiable",
            result.flags.delta_unidentifiable.to_string(),
        ),
        (
            "degenerate_theta1",
            result.flags.degenerate_theta1.to_string(),
        ),
        ("chi2", sig(result.chi2)),
        ("iterations", result.iterations.to_string()),
    ];
    lines.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

/// Estimates `(C, psi, delta)` from a parsed sweep under `cfg`'s variant and mode.
pub fn estimate(file: &SweepFile, cfg: &RunConfig) -> Result<String, CliError> {
    let records = file.records()?;
    let model = cfg.rate_model()?;
    let result = match cfg.mode {
        Mode::ThreePoint => three_point_from_sweep(&records, model)?,
        Mode::Fit => fit_sweep(&records, model, None)?,
    };
    Ok(estimate_report(cfg, &result))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub text: String,
    pub max_deviation: f64,
    pub tolerance: f64,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.max_deviation <= self.tolerance
    }
}

/// Nearest delay with `omega0 tau` a multiple of `2 pi`.
pub fn carrier_lattice_delay(tau: f64, omega0: f64) -> f64 {
    let period = 2.0 * PI / omega0;
    (tau / period).round() * period
}

/// Compares the Fock-space oracle with the closed form over random draws.
///
/// Deviations are relative, with `1e-6 C |r2|^2` as the floor of the
/// denominator so rates near a null are compared absolutely.
pub fn oracle(cfg: &RunConfig) -> Result<OracleReport, CliError> {
    if !(2..=MAX_ORACLE_MODES).contains(&cfg.grid) || !cfg.grid.is_power_of_two() {
        return Err(CliError::Config(format!(
            "field `grid`: must be a power of two between 2 and {MAX_ORACLE_MODES}, got {}",
            cfg.grid
        )));
    }
    if cfg.draws == 0 {
        return Err(CliError::Config("field `draws`: must be at least 1".into()));
    }
    if !(cfg.tolerance > 0.0) {
        return Err(CliError::Config(
            "field `tolerance`: must be positive".into(),
        ));
    }
    let spectrum = cfg.spectrum()?;
    let mut run = cfg.clone();
    if cfg.variant == VariantArg::Compensated {
        run.tau_s = carrier_lattice_delay(cfg.tau_s, spectrum.center());
    }
    let base = run.configuration()?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut max_dev = 0.0f64;
    for _ in 0..cfg.draws {
        let sample = if cfg.fixed_sample {
            base.sample
        } else {
            SampleParams::from_psi_delta(
                rng.random_range(1.0f64..89.0).to_radians(),
                rng.random_range(-180.0f64..180.0).to_radians(),
            )?
        };
        let a = AnalyzerSettings::new(rng.random_range(0.0..PI), rng.random_range(0.0..PI));
        let draw = base.with_sample(sample);
        let reference = sample.reference_reflectance();
        let closed = reference * draw.rate(a);
        let brute = oracle_rate(&draw, a, &spectrum, cfg.grid, 0.0)?;
        let floor = 1e-6 * draw.scale.value() * reference;
        max_dev = max_dev.max((brute - closed).abs() / closed.abs().max(floor));
    }

    let passed = max_dev <= cfg.tolerance;
    let lines = [
        ("variant", cfg.variant.as_str().to_string()),
        ("grid", cfg.grid.to_string()),
        ("draws", cfg.draws.to_string()),
        ("fixed_sample", cfg.fixed_sample.to_string()),
        ("tau_s_requested", sig(cfg.tau_s)),
        ("tau_s_used", sig(run.tau_s)),
        ("max_rel_deviation", sig(max_dev)),
        ("tolerance", sig(cfg.tolerance)),
        ("result", if passed { "pass" } else { "fail" }.to_string()),
    ];
    Ok(OracleReport {
        text: lines.iter().map(|(k, v)| format!("{k}={v}\n")).collect(),
        max_deviation: max_dev,
        tolerance: cfg.tolerance,
    })
}

/// Monte Carlo precision table, angles in degrees.
pub fn montecarlo(cfg: &RunConfig) -> Result<String, CliError> {
    let truth = cfg.configuration()?;
    let theta1 = cfg.theta1_deg.to_radians();
    let mut design =
        MonteCarloDesign::three_point(theta1, cfg.levels.clone(), cfg.trials, cfg.seed);
    if cfg.mode == Mode::Fit {
        design.settings = cfg
            .theta2_grid()?
            .into_iter()
            .map(|t2| AnalyzerSettings::new(theta1, t2))
            .collect();
        design.method = EstimationMethod::Fit;
    }
    design.noise = cfg.noise.unwrap_or(true);
    let report = monte_carlo_precision(&truth, &design)?;

    let mut out = String::from("# twinphoton montecarlo\n");
    for (k, v) in cfg.echo() {
        out.push_str(&format!("# {k} = {v}\n"));
    }
    out.push_str("# angles in degrees\n");
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Config(e.to_string());
    w.write_record([
        "total_counts",
        "bias_psi",
        "std_psi",
        "bias_delta",
        "std_delta",
    ])
    .map_err(csv_err)?;
    for level in &report.levels {
        w.write_record([
            sig(level.total_counts),
            sig(level.bias_psi.to_degrees()),
            sig(level.std_psi.to_degrees()),
            sig(level.bias_delta.to_degrees()),
            sig(level.std_delta.to_degrees()),
        ])
        .map_err(csv_err)?;
    }
    let body = w
        .into_inner()
        .map_err(|e| CliError::Config(e.to_string()))?;
    out.push_str(&String::from_utf8(body).expect("csv output is utf-8"));
    let failures: usize = report.levels.iter().map(|l| l.failures).sum();
    let clamped: usize = report.levels.iter().map(|l| l.clamped).sum();
    out.push_str(&format!("# slope_psi = {}\n", opt(report.slope_psi)));
    out.push_str(&format!("# slope_delta = {}\n", opt(report.slope_delta)));
    out.push_str(&format!("# failed_trials = {failures}\n"));
    out.push_str(&format!("# clamped_trials = {clamped}\n"));
    Ok(out)
}
