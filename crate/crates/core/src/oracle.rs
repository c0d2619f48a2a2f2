//! Brute-force coincidence rates from a discretized two-photon Fock state.
//!
//! The pair state is expanded over a symmetric grid of signal frequencies,
//! each paired with its energy-conserving idler partner. Every term records
//! which spatial path, polarization and frequency mode each photon occupies.
//! The sample is applied per photon as a lossy beam splitter
//! `b = j r a + t a_v`, with the transmitted part routed to an explicit loss
//! path so the norm stays testable. Detection projects the state onto the
//! analyzer axes and evaluates the vacuum component of `E2(+) E1(+) |Psi>`,
//! the only surviving term of the fourth-order correlation for a
//! two-photon state. Time averaging integrates `G(t1, t2)` over `t1 - t2`.
//!
//! Nothing here uses the closed-form rates; the module exists to check them.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::coincidence::{AnalyzerSettings, Configuration, RateScale, Setup};
use crate::source::{SourceKind, SpdcState, SpectrumModel, SpectrumShape};
use crate::{Error, Result};

const J: Complex64 = Complex64::new(0.0, 1.0);

/// Gaussian spectra are sampled over +/- this many standard deviations.
pub const GAUSSIAN_HALF_SPAN_SIGMAS: f64 = 8.0;

/// Minimum number of time samples per recurrence period.
pub const MIN_TIME_SAMPLES: usize = 512;

/// Even number of equally spaced modes symmetric about `center`; mode `m`
/// and mode `n - 1 - m` are energy-conserving partners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    n_modes: usize,
    center: f64,
    span: f64,
}

impl FrequencyGrid {
    pub fn new(n_modes: usize, center: f64, span: f64) -> Result<Self> {
        if n_modes < 2 || !n_modes.is_multiple_of(2) {
            return Err(Error::InvalidConfiguration(format!(
                "frequency grid needs an even number of modes >= 2, got {n_modes}"
            )));
        }
        if !(center.is_finite() && center > 0.0 && span.is_finite() && span > 0.0) {
            return Err(Error::InvalidConfiguration(format!(
                "grid center and span must be positive (center {center}, span {span})"
            )));
        }
        Ok(Self {
            n_modes,
            center,
            span,
        })
    }

    /// Grid covering `spectrum`: +/- 8 sigma for Gaussian, the full band for
    /// rectangular.
    pub fn for_spectrum(spectrum: &SpectrumModel, n_modes: usize) -> Result<Self> {
        let span = match spectrum.shape() {
            SpectrumShape::Gaussian => 2.0 * GAUSSIAN_HALF_SPAN_SIGMAS * spectrum.bandwidth(),
            SpectrumShape::Rectangular => spectrum.bandwidth(),
        };
        Self::new(n_modes, spectrum.center(), span)
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn span(&self) -> f64 {
        self.span
    }

    pub fn step(&self) -> f64 {
        self.span / self.n_modes as f64
    }

    pub fn detuning(&self, m: usize) -> f64 {
        (m as f64 + 0.5 - 0.5 * self.n_modes as f64) * self.step()
    }

    pub fn omega(&self, m: usize) -> f64 {
        self.center + self.detuning(m)
    }

    pub fn partner(&self, m: usize) -> usize {
        self.n_modes - 1 - m
    }

    /// Period after which every grid amplitude returns to its phase.
    pub fn recurrence_period(&self) -> f64 {
        2.0 * PI / self.step()
    }

    /// Pair amplitudes sampled at the grid modes, normalized so that
    /// `sum |phi|^2 * step = 1`.
    pub fn sampled_amplitudes(&self, spectrum: &SpectrumModel) -> Result<Vec<f64>> {
        self.check_compatible(spectrum)?;
        let pump = spectrum.pump();
        let raw = (0..self.n_modes)
            .map(|m| spectrum.joint_amplitude(self.omega(m), pump).map(|a| a.re))
            .collect::<Result<Vec<f64>>>()?;
        let total: f64 = raw.iter().map(|a| a * a).sum::<f64>() * self.step();
        if total <= 0.0 {
            return Err(Error::InvalidConfiguration(
                "spectrum vanishes on the grid".into(),
            ));
        }
        let k = total.sqrt().recip();
        Ok(raw.into_iter().map(|a| a * k).collect())
    }

    /// Discrete transform `sum |phi|^2 e^{j delta tau} step` of the sampled
    /// power spectrum.
    pub fn discrete_envelope(&self, spectrum: &SpectrumModel, tau: f64) -> Result<f64> {
        let amps = self.sampled_amplitudes(spectrum)?;
        Ok(amps
            .iter()
            .enumerate()
            .map(|(m, a)| a * a * (self.detuning(m) * tau).cos())
            .sum::<f64>()
            * self.step())
    }

    fn check_compatible(&self, spectrum: &SpectrumModel) -> Result<()> {
        if (self.center - spectrum.center()).abs() > 1e-12 * spectrum.center() {
            return Err(Error::InvalidConfiguration(format!(
                "grid center {} does not match spectrum center {}",
                self.center,
                spectrum.center()
            )));
        }
        Ok(())
    }
}

/// Spatial path of a photon. Loss paths collect what the sample transmits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Path {
    Beam1,
    Beam2,
    Loss1,
    Loss2,
}

impl Path {
    pub fn is_loss(self) -> bool {
        matches!(self, Path::Loss1 | Path::Loss2)
    }

    fn loss(self) -> Result<Path> {
        match self {
            Path::Beam1 => Ok(Path::Loss1),
            Path::Beam2 => Ok(Path::Loss2),
            other => Err(Error::InvalidInput(format!(
                "{other:?} is already a loss path"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarization {
    H,
    V,
}

/// Single-photon mode: path, polarization, frequency index on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PhotonMode {
    pub path: Path,
    pub pol: Polarization,
    pub freq: usize,
}

impl PhotonMode {
    pub const fn new(path: Path, pol: Polarization, freq: usize) -> Self {
        Self { path, pol, freq }
    }
}

/// Two-photon state: amplitudes over unordered pairs of occupied modes.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhotonStateVector {
    grid: FrequencyGrid,
    amplitudes: BTreeMap<(PhotonMode, PhotonMode), Complex64>,
}

impl TwoPhotonStateVector {
    pub fn new(grid: FrequencyGrid) -> Self {
        Self {
            grid,
            amplitudes: BTreeMap::new(),
        }
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    /// Adds `amp` to the pair `{a, b}`.
    pub fn add(&mut self, a: PhotonMode, b: PhotonMode, amp: Complex64) {
        let key = if a <= b { (a, b) } else { (b, a) };
        *self
            .amplitudes
            .entry(key)
            .or_insert(Complex64::new(0.0, 0.0)) += amp;
    }

    pub fn amplitude(&self, a: PhotonMode, b: PhotonMode) -> Complex64 {
        let key = if a <= b { (a, b) } else { (b, a) };
        self.amplitudes.get(&key).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(PhotonMode, PhotonMode), &Complex64)> {
        self.amplitudes.iter()
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    /// Probability that neither photon has been lost.
    pub fn monitored_weight(&self) -> f64 {
        self.amplitudes
            .iter()
            .filter(|((a, b), _)| !a.path.is_loss() && !b.path.is_loss())
            .map(|(_, z)| z.norm_sqr())
            .sum()
    }

    pub fn loss_weight(&self) -> f64 {
        self.norm_sqr() - self.monitored_weight()
    }

    fn has_path(&self, path: Path) -> bool {
        self.amplitudes
            .keys()
            .any(|(a, b)| a.path == path || b.path == path)
    }
}

/// Sample modeled as a beam splitter with a vacuum second input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossyElement {
    r_tilde: Complex64,
    t_tilde: Complex64,
}

impl LossyElement {
    pub fn new(r_tilde: Complex64, t_tilde: Complex64) -> Result<Self> {
        let total = r_tilde.norm_sqr() + t_tilde.norm_sqr();
        if !(total - 1.0).abs().le(&1e-12) {
            return Err(Error::InvalidSample(format!(
                "|r|^2 + |t|^2 must equal 1, got {total}"
            )));
        }
        Ok(Self { r_tilde, t_tilde })
    }

    /// Element with reflection `r` and transmission `sqrt(1 - |r|^2) e^{j t_phase}`.
    pub fn from_reflection(r_tilde: Complex64, t_phase: f64) -> Result<Self> {
        let t_mag = (1.0 - r_tilde.norm_sqr()).max(0.0).sqrt();
        Self::new(r_tilde, Complex64::from_polar(t_mag, t_phase))
    }

    pub fn r_tilde(&self) -> Complex64 {
        self.r_tilde
    }

    pub fn t_tilde(&self) -> Complex64 {
        self.t_tilde
    }
}

/// Two-photon state at the detectors' side of the source, restricted to one
/// photon per beam (pairs leaving together never give a coincidence).
///
/// The H photon carries the signal frequency. A nonzero `tau` delays the H
/// polarization in beam 1 by multiplying its mode by `e^{j omega tau}`.
pub fn build_state(
    grid: &FrequencyGrid,
    spectrum: &SpectrumModel,
    source: &SpdcState,
    tau: f64,
) -> Result<TwoPhotonStateVector> {
    if !tau.is_finite() {
        return Err(Error::InvalidConfiguration(format!(
            "delay must be finite, got {tau}"
        )));
    }
    let amps = grid.sampled_amplitudes(spectrum)?;
    let root_step = grid.step().sqrt();
    let (first, second) = match source.kind {
        SourceKind::Product => (-J * FRAC_1_SQRT_2, J * FRAC_1_SQRT_2),
        SourceKind::Entangled => (
            Complex64::new(FRAC_1_SQRT_2, 0.0),
            Complex64::from_polar(FRAC_1_SQRT_2, source.relative_phase),
        ),
    };

    let mut state = TwoPhotonStateVector::new(*grid);
    for (m, phi) in amps.iter().enumerate() {
        let partner = grid.partner(m);
        let c = phi * root_step;
        let delay = Complex64::from_polar(1.0, grid.omega(m) * tau);
        // H photon in beam 1, V photon in beam 2.
        state.add(
            PhotonMode::new(Path::Beam1, Polarization::H, m),
            PhotonMode::new(Path::Beam2, Polarization::V, partner),
            first * c * delay,
        );
        // V photon in beam 1, H photon in beam 2.
        state.add(
            PhotonMode::new(Path::Beam1, Polarization::V, partner),
            PhotonMode::new(Path::Beam2, Polarization::H, m),
            second * c,
        );
    }
    Ok(state)
}

/// Reflects every photon on `path` off the sample: the reflected part
/// (`j r`) stays on the path, the transmitted part (`t`) moves to the
/// matching loss path.
pub fn apply_sample(
    state: &TwoPhotonStateVector,
    element_h: &LossyElement,
    element_v: &LossyElement,
    path: Path,
) -> Result<TwoPhotonStateVector> {
    let loss = path.loss()?;
    if !state.has_path(path) {
        return Err(Error::InvalidInput(format!("no photon occupies {path:?}")));
    }
    let outcomes = |mode: PhotonMode| -> Vec<(PhotonMode, Complex64)> {
        if mode.path != path {
            return vec![(mode, Complex64::new(1.0, 0.0))];
        }
        let element = match mode.pol {
            Polarization::H => element_h,
            Polarization::V => element_v,
        };
        vec![
            (mode, J * element.r_tilde),
            (PhotonMode { path: loss, ..mode }, element.t_tilde),
        ]
    };

    let mut out = TwoPhotonStateVector::new(state.grid);
    for (&(a, b), &amp) in state.iter() {
        for (a2, ka) in outcomes(a) {
            for (b2, kb) in outcomes(b) {
                out.add(a2, b2, amp * ka * kb);
            }
        }
    }
    Ok(out)
}

/// Detection term: amplitude weight and the two photon frequencies that
/// reach detector 1 and detector 2.
#[derive(Debug, Clone, Copy)]
struct DetectionTerm {
    weight: Complex64,
    omega1: f64,
    omega2: f64,
}

fn detection_terms(
    state: &TwoPhotonStateVector,
    analyzers: AnalyzerSettings,
) -> Vec<DetectionTerm> {
    let grid = state.grid;
    let pass = |theta: f64, pol: Polarization| match pol {
        Polarization::H => theta.cos(),
        Polarization::V => theta.sin(),
    };
    let mut terms = Vec::new();
    for (&(a, b), &amp) in state.iter() {
        for (x, y) in [(a, b), (b, a)] {
            if x.path == Path::Beam1 && y.path == Path::Beam2 {
                let w = pass(analyzers.theta1, x.pol) * pass(analyzers.theta2, y.pol);
                if w != 0.0 {
                    terms.push(DetectionTerm {
                        weight: amp * w,
                        omega1: grid.omega(x.freq),
                        omega2: grid.omega(y.freq),
                    });
                }
            }
        }
    }
    terms
}

fn coherence_from_terms(terms: &[DetectionTerm], t1: f64, t2: f64) -> f64 {
    terms
        .iter()
        .map(|t| t.weight * Complex64::from_polar(1.0, -(t.omega1 * t1 + t.omega2 * t2)))
        .sum::<Complex64>()
        .norm_sqr()
}

/// `G(t1, t2) = |<0| E2(+)(t2) E1(+)(t1) |Psi>|^2` with each detector field
/// projected onto its analyzer axis.
pub fn fourth_order_coherence(
    state: &TwoPhotonStateVector,
    analyzers: AnalyzerSettings,
    t1: f64,
    t2: f64,
) -> f64 {
    coherence_from_terms(&detection_terms(state, analyzers), t1, t2)
}

/// Number of `t1 - t2` samples used by [`time_averaged_rate`].
pub fn time_samples(grid: &FrequencyGrid) -> usize {
    MIN_TIME_SAMPLES.max(4 * grid.n_modes())
}

/// Average of `G` over one recurrence period of `t1 - t2`, scaled so that
/// the fringe of a split pair off a perfect mirror peaks at `scale`.
///
/// The grid amplitudes are periodic in `t1 - t2`, so uniform sampling of a
/// full period with more samples than modes gives the exact time average.
pub fn time_averaged_rate(
    state: &TwoPhotonStateVector,
    analyzers: AnalyzerSettings,
    scale: RateScale,
) -> f64 {
    let terms = detection_terms(state, analyzers);
    let samples = time_samples(&state.grid);
    let period = state.grid.recurrence_period();
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let u = (k as f64 / samples as f64 - 0.5) * period;
            coherence_from_terms(&terms, u, 0.0)
        })
        .collect();
    let mean = values.iter().sum::<f64>() / samples as f64;
    2.0 * scale.value() * mean
}

/// Oracle rate for a full configuration: source, compensator delay (for
/// the compensated arrangement), sample in beam 1 with `t_phase` on the
/// transmitted amplitudes, analyzers.
///
/// `spectrum` is used for the uncompensated arrangements; the compensated
/// one carries its own.
pub fn oracle_rate(
    cfg: &Configuration,
    analyzers: AnalyzerSettings,
    spectrum: &SpectrumModel,
    n_modes: usize,
    t_phase: f64,
) -> Result<f64> {
    let (spectrum, tau) = match cfg.setup {
        Setup::Compensated {
            spectrum,
            compensator,
        } => (spectrum, compensator.tau()),
        _ => (*spectrum, 0.0),
    };
    let grid = FrequencyGrid::for_spectrum(&spectrum, n_modes)?;
    let state = build_state(&grid, &spectrum, &cfg.source(), tau)?;
    let h = LossyElement::from_reflection(cfg.sample.r1(), t_phase)?;
    let v = LossyElement::from_reflection(cfg.sample.r2(), t_phase)?;
    let reflected = apply_sample(&state, &h, &v, Path::Beam1)?;
    Ok(time_averaged_rate(&reflected, analyzers, cfg.scale))
}
