//! Run configuration: `key = value` files plus command-line overrides.
//!
//! Angles are degrees here and radians everywhere past [`RunConfig::configuration`].

use std::path::PathBuf;
use std::str::FromStr;

use num_complex::Complex64;
use twinphoton::coincidence::{Configuration, RateScale, SampleParams};
use twinphoton::estimation::RateModel;
use twinphoton::source::{CompensatorDelay, SpectrumModel, SpectrumShape};

use crate::format::sig;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariantArg {
    Unentangled,
    Compensated,
    Entangled,
}

impl VariantArg {
    pub fn as_str(self) -> &'static str {
        match self {
            VariantArg::Unentangled => "unentangled",
            VariantArg::Compensated => "compensated",
            VariantArg::Entangled => "entangled",
        }
    }
}

impl FromStr for VariantArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "unentangled" => Ok(VariantArg::Unentangled),
            "compensated" => Ok(VariantArg::Compensated),
            "entangled" => Ok(VariantArg::Entangled),
            other => Err(format!(
                "unknown variant `{other}` (unentangled, compensated, entangled)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    ThreePoint,
    Fit,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::ThreePoint => "three-point",
            Mode::Fit => "fit",
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "three-point" | "three_point" | "threepoint" => Ok(Mode::ThreePoint),
            "fit" => Ok(Mode::Fit),
            other => Err(format!("unknown mode `{other}` (three-point, fit)")),
        }
    }
}

fn shape_name(shape: SpectrumShape) -> &'static str {
    match shape {
        SpectrumShape::Gaussian => "gaussian",
        SpectrumShape::Rectangular => "rectangular",
    }
}

fn parse_shape(s: &str) -> Result<SpectrumShape, String> {
    match s.to_ascii_lowercase().as_str() {
        "gaussian" => Ok(SpectrumShape::Gaussian),
        "rectangular" => Ok(SpectrumShape::Rectangular),
        other => Err(format!(
            "unknown spectrum shape `{other}` (gaussian, rectangular)"
        )),
    }
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        other => Err(format!("expected true or false, got `{other}`")),
    }
}

fn parse_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s
        .parse()
        .map_err(|_| format!("expected a number, got `{s}`"))?;
    if !v.is_finite() {
        return Err(format!("expected a finite number, got `{s}`"));
    }
    Ok(v)
}

fn parse_usize(s: &str) -> Result<usize, String> {
    s.parse()
        .map_err(|_| format!("expected a nonnegative integer, got `{s}`"))
}

fn parse_complex(s: &str) -> Result<Complex64, String> {
    let z = Complex64::from_str(s)
        .map_err(|_| format!("expected a complex number like 0.6+0.2i, got `{s}`"))?;
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(format!("expected a finite complex number, got `{s}`"));
    }
    Ok(z)
}

fn format_complex(z: Complex64) -> String {
    if z.im < 0.0 {
        format!("{}-{}i", sig(z.re), sig(-z.im))
    } else {
        format!("{}+{}i", sig(z.re), sig(z.im))
    }
}

/// Every recognized configuration key, in echo order.
pub const KEYS: &[&str] = &[
    "variant",
    "psi_deg",
    "delta_deg",
    "r1",
    "r2",
    "c",
    "theta1_deg",
    "theta2_start_deg",
    "theta2_stop_deg",
    "steps",
    "tau_s",
    "bandwidth_rad_s",
    "center_rad_s",
    "shape",
    "duration_s",
    "seed",
    "noise",
    "output",
    "mode",
    "trials",
    "levels",
    "grid",
    "tolerance",
    "draws",
    "fixed_sample",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub variant: VariantArg,
    pub psi_deg: f64,
    pub delta_deg: f64,
    /// Complex reflection coefficients; when set they replace psi/delta.
    pub r1: Option<Complex64>,
    pub r2: Option<Complex64>,
    /// Counts per second at full scale.
    pub c: f64,
    pub theta1_deg: f64,
    pub theta2_start_deg: f64,
    pub theta2_stop_deg: f64,
    pub steps: usize,
    pub tau_s: f64,
    pub bandwidth_rad_s: f64,
    pub center_rad_s: f64,
    pub shape: SpectrumShape,
    pub duration_s: f64,
    pub seed: u64,
    /// `None` leaves the choice to the command.
    pub noise: Option<bool>,
    pub output: Option<PathBuf>,
    pub mode: Mode,
    pub trials: usize,
    /// Expected total counts per Monte Carlo level.
    pub levels: Vec<f64>,
    /// Oracle frequency modes.
    pub grid: usize,
    pub tolerance: f64,
    pub draws: usize,
    /// Oracle draws keep the configured sample instead of random ones.
    pub fixed_sample: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            variant: VariantArg::Unentangled,
            psi_deg: 30.0,
            delta_deg: 60.0,
            r1: None,
            r2: None,
            c: 1000.0,
            theta1_deg: 45.0,
            theta2_start_deg: 0.0,
            theta2_stop_deg: 180.0,
            steps: 181,
            tau_s: 0.0,
            // 10 THz rms bandwidth around 702 nm
            bandwidth_rad_s: 1e13,
            center_rad_s: 2.683e15,
            shape: SpectrumShape::Gaussian,
            duration_s: 1.0,
            seed: 1,
            noise: None,
            output: None,
            mode: Mode::ThreePoint,
            trials: 300,
            levels: vec![1e3, 1e4, 1e5, 1e6],
            grid: 64,
            tolerance: 1e-6,
            draws: 20,
            fixed_sample: false,
        }
    }
}

impl RunConfig {
    /// Parses a config file body on top of the defaults.
    pub fn from_text(text: &str, origin: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        cfg.apply_text(text, origin)?;
        Ok(cfg)
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<(), CliError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Config(format!(
                    "{origin}:{}: expected `key = value`, got `{line}`",
                    i + 1
                )));
            };
            self.set(key.trim(), value.trim())
                .map_err(|e| CliError::Config(format!("{origin}:{}: {e}", i + 1)))?;
        }
        Ok(())
    }

    /// Sets one field. Setting `psi_deg` or `delta_deg` drops any `r1`/`r2`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let field = |e: String| format!("field `{key}`: {e}");
        match key {
            "variant" => self.variant = value.parse().map_err(field)?,
            "psi_deg" => {
                self.psi_deg = parse_f64(value).map_err(field)?;
                self.r1 = None;
                self.r2 = None;
            }
            "delta_deg" => {
                self.delta_deg = parse_f64(value).map_err(field)?;
                self.r1 = None;
                self.r2 = None;
            }
            "r1" => self.r1 = Some(parse_complex(value).map_err(field)?),
            "r2" => self.r2 = Some(parse_complex(value).map_err(field)?),
            "c" => self.c = parse_f64(value).map_err(field)?,
            "theta1_deg" => self.theta1_deg = parse_f64(value).map_err(field)?,
            "theta2_start_deg" => self.theta2_start_deg = parse_f64(value).map_err(field)?,
            "theta2_stop_deg" => self.theta2_stop_deg = parse_f64(value).map_err(field)?,
            "steps" => self.steps = parse_usize(value).map_err(field)?,
            "tau_s" => self.tau_s = parse_f64(value).map_err(field)?,
            "bandwidth_rad_s" => self.bandwidth_rad_s = parse_f64(value).map_err(field)?,
            "center_rad_s" => self.center_rad_s = parse_f64(value).map_err(field)?,
            "shape" => self.shape = parse_shape(value).map_err(field)?,
            "duration_s" => self.duration_s = parse_f64(value).map_err(field)?,
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| field(format!("expected an unsigned integer, got `{value}`")))?
            }
            "noise" => self.noise = Some(parse_bool(value).map_err(field)?),
            "output" => self.output = (!value.is_empty()).then(|| PathBuf::from(value)),
            "mode" => self.mode = value.parse().map_err(field)?,
            "trials" => self.trials = parse_usize(value).map_err(field)?,
            "levels" => {
                self.levels = value
                    .split(',')
                    .map(|v| parse_f64(v.trim()))
                    .collect::<Result<_, _>>()
                    .map_err(field)?
            }
            "grid" => self.grid = parse_usize(value).map_err(field)?,
            "tolerance" => self.tolerance = parse_f64(value).map_err(field)?,
            "draws" => self.draws = parse_usize(value).map_err(field)?,
            "fixed_sample" => self.fixed_sample = parse_bool(value).map_err(field)?,
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    /// `(key, value)` pairs that reproduce this configuration when parsed,
    /// except for the output path.
    pub fn echo(&self) -> Vec<(&'static str, String)> {
        let mut out = vec![("variant", self.variant.as_str().to_string())];
        match (self.r1, self.r2) {
            (Some(r1), Some(r2)) => {
                out.push(("r1", format_complex(r1)));
                out.push(("r2", format_complex(r2)));
            }
            _ => {
                out.push(("psi_deg", sig(self.psi_deg)));
                out.push(("delta_deg", sig(self.delta_deg)));
            }
        }
        out.extend([
            ("c", sig(self.c)),
            ("theta1_deg", sig(self.theta1_deg)),
            ("theta2_start_deg", sig(self.theta2_start_deg)),
            ("theta2_stop_deg", sig(self.theta2_stop_deg)),
            ("steps", self.steps.to_string()),
            ("tau_s", sig(self.tau_s)),
            ("bandwidth_rad_s", sig(self.bandwidth_rad_s)),
            ("center_rad_s", sig(self.center_rad_s)),
            ("shape", shape_name(self.shape).to_string()),
            ("duration_s", sig(self.duration_s)),
            ("seed", self.seed.to_string()),
        ]);
        if let Some(noise) = self.noise {
            out.push(("noise", noise.to_string()));
        }
        out.extend([
            ("mode", self.mode.as_str().to_string()),
            ("trials", self.trials.to_string()),
            (
                "levels",
                self.levels
                    .iter()
                    .map(|l| sig(*l))
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            ("grid", self.grid.to_string()),
            ("tolerance", sig(self.tolerance)),
            ("draws", self.draws.to_string()),
            ("fixed_sample", self.fixed_sample.to_string()),
        ]);
        out
    }

    pub fn sample(&self) -> Result<SampleParams, CliError> {
        match (self.r1, self.r2) {
            (Some(r1), Some(r2)) => Ok(SampleParams::new(r1, r2)?),
            (None, None) => Ok(SampleParams::from_psi_delta(
                self.psi_deg.to_radians(),
                self.delta_deg.to_radians(),
            )?),
            _ => Err(CliError::Config(
                "fields `r1` and `r2` must be given together".into(),
            )),
        }
    }

    pub fn spectrum(&self) -> Result<SpectrumModel, CliError> {
        Ok(SpectrumModel::new(
            self.shape,
            self.center_rad_s,
            self.bandwidth_rad_s,
        )?)
    }

    pub fn configuration(&self) -> Result<Configuration, CliError> {
        let sample = self.sample()?;
        let scale = RateScale::new(self.c)?;
        Ok(match self.variant {
            VariantArg::Unentangled => Configuration::unentangled(sample, scale),
            VariantArg::Entangled => Configuration::entangled(sample, scale),
            VariantArg::Compensated => Configuration::compensated(
                sample,
                scale,
                self.spectrum()?,
                CompensatorDelay::new(self.tau_s)?,
            ),
        })
    }

    /// Model used when estimating from data taken under this configuration.
    pub fn rate_model(&self) -> Result<RateModel, CliError> {
        Ok(match self.variant {
            VariantArg::Unentangled => RateModel::Unentangled,
            VariantArg::Entangled => RateModel::Entangled,
            VariantArg::Compensated => {
                let delay = CompensatorDelay::new(self.tau_s)?;
                RateModel::Compensated {
                    factor: delay.interference_factor(&self.spectrum()?),
                }
            }
        })
    }

    /// Analyzer-2 angles of the sweep, radians.
    pub fn theta2_grid(&self) -> Result<Vec<f64>, CliError> {
        if self.steps == 0 {
            return Err(CliError::Config("field `steps`: must be at least 1".into()));
        }
        let (a, b) = (self.theta2_start_deg, self.theta2_stop_deg);
        Ok(if self.steps == 1 {
            vec![a.to_radians()]
        } else {
            (0..self.steps)
                .map(|i| (a + (b - a) * i as f64 / (self.steps - 1) as f64).to_radians())
                .collect()
        })
    }

    pub fn check_duration(&self) -> Result<(), CliError> {
        if !(self.duration_s > 0.0) {
            return Err(CliError::Config(format!(
                "field `duration_s`: must be positive, got {}",
                self.duration_s
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_and_comments() {
        let text = "# header\nvariant = entangled\npsi_deg = 20 # inline\n\nsteps=5\nshape = rectangular\nlevels = 1e3, 1e4\n";
        let cfg = RunConfig::from_text(text, "t.conf").unwrap();
        assert_eq!(cfg.variant, VariantArg::Entangled);
        assert_eq!(cfg.psi_deg, 20.0);
        assert_eq!(cfg.steps, 5);
        assert_eq!(cfg.shape, SpectrumShape::Rectangular);
        assert_eq!(cfg.levels, vec![1e3, 1e4]);
    }

    #[test]
    fn errors_name_line_and_field() {
        let err = RunConfig::from_text("c = 5\nsteps = many\n", "run.conf").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("run.conf:2") && msg.contains("steps"), "{msg}");
        let err = RunConfig::from_text("colour = blue", "run.conf").unwrap_err();
        assert!(err.to_string().contains("unknown key"));
        let err = RunConfig::from_text("just words", "run.conf").unwrap_err();
        assert!(err.to_string().contains("run.conf:1"));
    }

    #[test]
    fn echo_reparses_to_same_config() {
        let mut cfg = RunConfig::default();
        cfg.set("variant", "compensated").unwrap();
        cfg.set("tau_s", "3.3e-13").unwrap();
        cfg.set("noise", "true").unwrap();
        let text: String = cfg
            .echo()
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect();
        assert_eq!(RunConfig::from_text(&text, "echo").unwrap(), cfg);

        let mut cfg = RunConfig::default();
        cfg.set("r1", "0.5-0.25i").unwrap();
        cfg.set("r2", "-0.125+1e-5i").unwrap();
        let text: String = cfg
            .echo()
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect();
        assert_eq!(RunConfig::from_text(&text, "echo").unwrap(), cfg);
    }

    #[test]
    fn reflection_pair_replaces_psi_delta() {
        let mut cfg = RunConfig::default();
        cfg.set("r1", "0.5").unwrap();
        assert!(cfg.sample().is_err());
        cfg.set("r2", "1").unwrap();
        let s = cfg.sample().unwrap();
        assert!((s.tan_psi() - 0.5).abs() < 1e-15);
        cfg.set("psi_deg", "45").unwrap();
        assert!(cfg.r1.is_none());
    }

    #[test]
    fn theta2_grid_endpoints() {
        let mut cfg = RunConfig::default();
        let g = cfg.theta2_grid().unwrap();
        assert_eq!(g.len(), 181);
        assert_eq!(g[0], 0.0);
        assert!((g[180] - std::f64::consts::PI).abs() < 1e-15);
        cfg.steps = 1;
        assert_eq!(cfg.theta2_grid().unwrap(), vec![0.0]);
        cfg.steps = 0;
        assert!(cfg.theta2_grid().is_err());
    }
}
