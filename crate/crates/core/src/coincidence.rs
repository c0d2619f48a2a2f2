//! Coincidence-rate forward models.
//!
//! Three closed forms share one bracket,
//!
//! ```text
//! N_c = C [ tan²ψ cos²θ1 sin²θ2 + sin²θ1 cos²θ2 + 2k tanψ cosΔ cosθ1 cosθ2 sinθ1 sinθ2 ]
//! ```
//!
//! with interference factor `k = -1` for the beam-splitter (unentangled)
//! interferometer, `k = -Φ(τ)cos(ω0 τ)` when a residual birefringent delay
//! `τ` is left in one arm, and `k = +1` for the entangled-pair arrangement.
//! The constant `C` absorbs `|r2|²`, detector efficiencies and accumulation
//! time, so only `(ψ, Δ)` are observable.
//!
//! [`rate_general`] recomputes the same rates from the twin-photon field by
//! pushing the source field through an arbitrary chain of elements. It is
//! absolute in the reflectance, i.e. it equals `|r2|²` times the closed form
//! at equal scale.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::polarization::{
    apply_twin_matrix, polarizer_matrix, ComplexAmplitude, JonesMatrix, TwinPhotonField,
    TwinPhotonJonesMatrix,
};
use crate::source::{CompensatorDelay, SpdcState, SpectrumModel};
use crate::{Error, Result};

const PASSIVE_SLACK: f64 = 1e-12;

/// Reflection coefficients of the sample along its two eigenpolarizations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleParams {
    r1: ComplexAmplitude,
    r2: ComplexAmplitude,
}

impl SampleParams {
    pub fn new(r1: ComplexAmplitude, r2: ComplexAmplitude) -> Result<Self> {
        if !(r1.is_finite() && r2.is_finite()) {
            return Err(Error::InvalidSample(
                "reflection coefficients must be finite".into(),
            ));
        }
        if r1.norm() > 1.0 + PASSIVE_SLACK || r2.norm() > 1.0 + PASSIVE_SLACK {
            return Err(Error::InvalidSample(format!(
                "passive sample requires |r1|, |r2| <= 1 (got {}, {})",
                r1.norm(),
                r2.norm()
            )));
        }
        if r2 == Complex64::new(0.0, 0.0) {
            return Err(Error::InvalidSample("r2 must be nonzero".into()));
        }
        Ok(Self { r1, r2 })
    }

    /// Builds coefficients with `tan ψ = |r1/r2|`, `Δ = arg r1 - arg r2`,
    /// scaled so the larger magnitude is one.
    pub fn from_psi_delta(psi: f64, delta: f64) -> Result<Self> {
        if !(psi.is_finite() && delta.is_finite()) {
            return Err(Error::InvalidSample("psi and delta must be finite".into()));
        }
        if !(0.0..PI / 2.0).contains(&psi) {
            return Err(Error::InvalidSample(format!(
                "psi must lie in [0, pi/2), got {psi}"
            )));
        }
        let t = psi.tan();
        let (m1, m2) = if t <= 1.0 { (t, 1.0) } else { (1.0, 1.0 / t) };
        Self::new(Complex64::from_polar(m1, delta), Complex64::new(m2, 0.0))
    }

    /// Perfect mirror, `r1 = r2 = 1`.
    pub fn mirror() -> Self {
        Self {
            r1: Complex64::new(1.0, 0.0),
            r2: Complex64::new(1.0, 0.0),
        }
    }

    pub fn r1(&self) -> ComplexAmplitude {
        self.r1
    }

    pub fn r2(&self) -> ComplexAmplitude {
        self.r2
    }

    pub fn tan_psi(&self) -> f64 {
        self.r1.norm() / self.r2.norm()
    }

    pub fn psi(&self) -> f64 {
        self.r1.norm().atan2(self.r2.norm())
    }

    /// Phase difference wrapped to (-pi, pi].
    pub fn delta(&self) -> f64 {
        wrap_angle(self.r1.arg() - self.r2.arg())
    }

    /// `|r2|²`, the reflectance folded into the closed-form constant.
    pub fn reference_reflectance(&self) -> f64 {
        self.r2.norm_sqr()
    }

    /// Same sample with both coefficients multiplied by `e^{j chi}`.
    pub fn with_common_phase(&self, chi: f64) -> Self {
        let p = Complex64::from_polar(1.0, chi);
        Self {
            r1: self.r1 * p,
            r2: self.r2 * p,
        }
    }
}

/// Wraps an angle to (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Analyzer axes measured from the horizontal, radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyzerSettings {
    pub theta1: f64,
    pub theta2: f64,
}

impl AnalyzerSettings {
    pub const fn new(theta1: f64, theta2: f64) -> Self {
        Self { theta1, theta2 }
    }

    pub fn twin_matrix(&self) -> TwinPhotonJonesMatrix {
        TwinPhotonJonesMatrix::analyzers(self.theta1, self.theta2)
    }
}

/// Closed-form rate constant `C` in counts per second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateScale(f64);

impl RateScale {
    pub fn new(c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidConfiguration(format!(
                "rate scale must be positive, got {c}"
            )));
        }
        Ok(Self(c))
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Unentangled,
    Compensated,
    Entangled,
}

/// Optical arrangement; the compensated form carries its spectrum and delay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Setup {
    Unentangled,
    Compensated {
        spectrum: SpectrumModel,
        compensator: CompensatorDelay,
    },
    Entangled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Configuration {
    pub sample: SampleParams,
    pub scale: RateScale,
    pub setup: Setup,
}

impl Configuration {
    pub fn unentangled(sample: SampleParams, scale: RateScale) -> Self {
        Self {
            sample,
            scale,
            setup: Setup::Unentangled,
        }
    }

    pub fn entangled(sample: SampleParams, scale: RateScale) -> Self {
        Self {
            sample,
            scale,
            setup: Setup::Entangled,
        }
    }

    pub fn compensated(
        sample: SampleParams,
        scale: RateScale,
        spectrum: SpectrumModel,
        compensator: CompensatorDelay,
    ) -> Self {
        Self {
            sample,
            scale,
            setup: Setup::Compensated {
                spectrum,
                compensator,
            },
        }
    }

    pub fn variant(&self) -> Variant {
        match self.setup {
            Setup::Unentangled => Variant::Unentangled,
            Setup::Compensated { .. } => Variant::Compensated,
            Setup::Entangled => Variant::Entangled,
        }
    }

    /// Coefficient `k` of `2 tanψ cosΔ cosθ1 cosθ2 sinθ1 sinθ2`.
    pub fn interference_factor(&self) -> f64 {
        match self.setup {
            Setup::Unentangled => -1.0,
            Setup::Compensated {
                spectrum,
                compensator,
            } => -compensator.interference_factor(&spectrum),
            Setup::Entangled => 1.0,
        }
    }

    pub fn source(&self) -> SpdcState {
        match self.setup {
            Setup::Entangled => SpdcState::entangled(),
            _ => SpdcState::product(),
        }
    }

    /// Closed-form coincidence rate for this arrangement.
    pub fn rate(&self, a: AnalyzerSettings) -> f64 {
        match self.setup {
            Setup::Unentangled => rate_unentangled(&self.sample, self.scale, a),
            Setup::Compensated {
                spectrum,
                compensator,
            } => rate_compensated(&self.sample, self.scale, &spectrum, &compensator, a),
            Setup::Entangled => rate_entangled(&self.sample, self.scale, a),
        }
    }

    pub fn with_sample(&self, sample: SampleParams) -> Self {
        Self { sample, ..*self }
    }

    pub fn with_scale(&self, scale: RateScale) -> Self {
        Self { scale, ..*self }
    }
}

/// The shared bracket for interference factor `k`; clamped at zero so
/// roundoff never produces a negative rate.
pub fn rate_bracket(tan_psi: f64, cos_delta: f64, k: f64, a: AnalyzerSettings) -> f64 {
    let (s1, c1) = a.theta1.sin_cos();
    let (s2, c2) = a.theta2.sin_cos();
    let value = tan_psi * tan_psi * c1 * c1 * s2 * s2
        + s1 * s1 * c2 * c2
        + 2.0 * k * tan_psi * cos_delta * c1 * c2 * s1 * s2;
    value.max(0.0)
}

/// Beam-splitter interferometer with full compensation.
pub fn rate_unentangled(sample: &SampleParams, scale: RateScale, a: AnalyzerSettings) -> f64 {
    scale.value() * rate_bracket(sample.tan_psi(), sample.delta().cos(), -1.0, a)
}

/// Beam-splitter interferometer with residual delay `tau`: the interference
/// term is scaled by `Φ(τ)cos(ω0 τ)`.
pub fn rate_compensated(
    sample: &SampleParams,
    scale: RateScale,
    spectrum: &SpectrumModel,
    compensator: &CompensatorDelay,
    a: AnalyzerSettings,
) -> f64 {
    let k = -compensator.interference_factor(spectrum);
    scale.value() * rate_bracket(sample.tan_psi(), sample.delta().cos(), k, a)
}

/// Entangled-pair arrangement; the interference term enters with a plus sign.
pub fn rate_entangled(sample: &SampleParams, scale: RateScale, a: AnalyzerSettings) -> f64 {
    scale.value() * rate_bracket(sample.tan_psi(), sample.delta().cos(), 1.0, a)
}

/// Pushes the source field through `elements` (first element acts first)
/// and returns `scale` times the coincidence weight of the output field.
///
/// Elements that mix the two beams after a projective element (an analyzer)
/// are rejected: the detectors are assumed to sit right behind the analyzers.
pub fn rate_general(
    elements: &[TwinPhotonJonesMatrix],
    source: &SpdcState,
    scale: RateScale,
) -> Result<f64> {
    let mut field = source.twin_field();
    let mut analyzed = false;
    for (i, element) in elements.iter().enumerate() {
        if analyzed && element.mixes_beams() {
            return Err(Error::UnsupportedTopology(format!(
                "element {i} mixes the beams after an analyzer"
            )));
        }
        field = apply_twin_matrix(element, &field);
        analyzed |= element.is_projective();
    }
    Ok(scale.value() * field.coincidence_weight())
}

/// Element chain for `cfg`: sample in beam 1 followed by the analyzers.
pub fn element_chain(cfg: &Configuration, a: AnalyzerSettings) -> Vec<TwinPhotonJonesMatrix> {
    vec![
        TwinPhotonJonesMatrix::sample_in_beam1(&cfg.sample),
        a.twin_matrix(),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Detector {
    D1,
    D2,
}

impl TryFrom<u8> for Detector {
    type Error = Error;

    fn try_from(value: u8) -> Result<Self> {
        match value {
            1 => Ok(Detector::D1),
            2 => Ok(Detector::D2),
            other => Err(Error::InvalidInput(format!(
                "detector must be 1 or 2, got {other}"
            ))),
        }
    }
}

/// Marginal rate at one detector with only its own analyzer in place:
/// `C` times the probability that a photon of a split pair reaching that
/// analyzer is transmitted. The sample is local to beam 1, so it shapes the
/// marginal at detector 1 only; residual delay changes neither marginal.
pub fn singles_rate(cfg: &Configuration, detector: Detector, theta: f64) -> f64 {
    let source = cfg.source().twin_field();
    let (field, analyzer) = match detector {
        Detector::D1 => (
            apply_twin_matrix(
                &TwinPhotonJonesMatrix::sample_in_beam1(&cfg.sample),
                &source,
            ),
            TwinPhotonJonesMatrix::block_diagonal(
                JonesMatrix::reflected_frame() * polarizer_matrix(theta),
                JonesMatrix::identity(),
            ),
        ),
        Detector::D2 => (
            source,
            TwinPhotonJonesMatrix::block_diagonal(JonesMatrix::identity(), polarizer_matrix(theta)),
        ),
    };
    let analyzed: TwinPhotonField = apply_twin_matrix(&analyzer, &field);
    cfg.scale.value() * analyzed.coincidence_weight() / field.coincidence_weight()
}

/// Rates over a `theta2` grid at fixed `theta1`, in grid order.
pub fn sweep(
    cfg: &Configuration,
    theta1: f64,
    theta2_grid: &[f64],
) -> Result<Vec<(AnalyzerSettings, f64)>> {
    if theta2_grid.is_empty() {
        return Err(Error::InvalidInput("theta2 grid is empty".into()));
    }
    Ok(theta2_grid
        .par_iter()
        .map(|&theta2| {
            let a = AnalyzerSettings::new(theta1, theta2);
            (a, cfg.rate(a))
        })
        .collect())
}

/// `(max - min) / (max + min)` of a set of rates; `None` when all are zero.
pub fn visibility(rates: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (lo, hi) = rates
        .into_iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
            (lo.min(r), hi.max(r))
        });
    (hi + lo > 0.0).then(|| (hi - lo) / (hi + lo))
}
