//! Recovering `(C, psi, delta)` from coincidence counts.
//!
//! Every rate model here has the form
//! `C (t^2 c1^2 s2^2 + s1^2 c2^2 + 2 k t x c1 c2 s1 s2)` with `t = tan psi`,
//! `x = cos delta` and `k` fixed by the arrangement. The estimators work in
//! `(C, t, x)` and convert to angles at the end. Because only `cos delta`
//! enters, the sign of delta is not observable and `delta_hat` lies in
//! `[0, pi]`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::coincidence::{wrap_angle, AnalyzerSettings, Configuration, Setup};
use crate::{Error, Result};

/// Angle tolerance when matching analyzer settings.
pub const ANGLE_TOLERANCE: f64 = 1e-6;

pub const MAX_FIT_ITERATIONS: usize = 200;
pub const STEP_TOLERANCE: f64 = 1e-12;

/// Ratio of the weighted `dr/dcos(delta)` column to the `C dr/dC` column
/// below which delta is declared unidentifiable.
pub const IDENTIFIABILITY_THRESHOLD: f64 = 1e-6;

/// Counts registered at one analyzer setting.
///
/// `counts` is normally an integer; noiseless expected counts are allowed
/// so that exact rates can be fed through the same path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementRecord {
    pub theta1: f64,
    pub theta2: f64,
    pub duration: f64,
    pub counts: f64,
}

impl MeasurementRecord {
    pub fn new(theta1: f64, theta2: f64, duration: f64, counts: f64) -> Result<Self> {
        if !(theta1.is_finite() && theta2.is_finite()) {
            return Err(Error::InvalidInput("analyzer angles must be finite".into()));
        }
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::InvalidInput(format!(
                "duration must be positive, got {duration}"
            )));
        }
        if !(counts.is_finite() && counts >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "counts must be nonnegative, got {counts}"
            )));
        }
        Ok(Self {
            theta1,
            theta2,
            duration,
            counts,
        })
    }

    /// Record carrying the expected counts of `rate` over `duration`.
    pub fn from_rate(a: AnalyzerSettings, duration: f64, rate: f64) -> Result<Self> {
        Self::new(a.theta1, a.theta2, duration, rate * duration)
    }

    pub fn settings(&self) -> AnalyzerSettings {
        AnalyzerSettings::new(self.theta1, self.theta2)
    }

    pub fn rate(&self) -> f64 {
        self.counts / self.duration
    }

    /// Poisson variance of the rate, with one count as a floor so empty
    /// bins keep a finite weight.
    pub fn rate_variance(&self) -> f64 {
        self.counts.max(1.0) / (self.duration * self.duration)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EstimationFlags {
    pub clamped_cosdelta: bool,
    pub delta_unidentifiable: bool,
    pub degenerate_theta1: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationResult {
    pub c_hat: f64,
    /// In `[0, pi/2]`.
    pub psi_hat: f64,
    /// In `[0, pi]`.
    pub delta_hat: f64,
    pub std_c: Option<f64>,
    pub std_psi: Option<f64>,
    pub std_delta: Option<f64>,
    pub flags: EstimationFlags,
    /// Weighted sum of squared rate residuals.
    pub chi2: f64,
    pub iterations: usize,
}

impl EstimationResult {
    pub fn tan_psi(&self) -> f64 {
        self.psi_hat.tan()
    }

    pub fn cos_delta(&self) -> f64 {
        self.delta_hat.cos()
    }

    fn params(&self) -> [f64; 3] {
        [self.c_hat, self.tan_psi(), self.cos_delta()]
    }
}

/// Which closed form the counts are modeled with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateModel {
    Unentangled,
    Entangled,
    /// Beam-splitter arrangement with residual delay; `factor` is the
    /// known `Phi(tau) cos(omega0 tau)`.
    Compensated {
        factor: f64,
    },
}

impl RateModel {
    /// Coefficient of the interference term.
    pub fn k(&self) -> f64 {
        match *self {
            RateModel::Unentangled => -1.0,
            RateModel::Entangled => 1.0,
            RateModel::Compensated { factor } => -factor,
        }
    }

    pub fn for_configuration(cfg: &Configuration) -> Self {
        match cfg.setup {
            Setup::Unentangled => RateModel::Unentangled,
            Setup::Entangled => RateModel::Entangled,
            Setup::Compensated { .. } => RateModel::Compensated {
                factor: -cfg.interference_factor(),
            },
        }
    }

    /// Model rate, not clamped at zero so that it stays smooth for the solver.
    pub fn rate(&self, c: f64, tan_psi: f64, cos_delta: f64, a: AnalyzerSettings) -> f64 {
        let (s1, c1) = a.theta1.sin_cos();
        let (s2, c2) = a.theta2.sin_cos();
        c * (tan_psi * tan_psi * c1 * c1 * s2 * s2
            + s1 * s1 * c2 * c2
            + 2.0 * self.k() * tan_psi * cos_delta * c1 * c2 * s1 * s2)
    }
}

/// Weighted squared residual of `data` against the model at the given point.
pub fn weighted_residual(
    data: &[MeasurementRecord],
    model: RateModel,
    c: f64,
    tan_psi: f64,
    cos_delta: f64,
) -> f64 {
    data.iter()
        .map(|r| {
            let d = r.rate() - model.rate(c, tan_psi, cos_delta, r.settings());
            d * d / r.rate_variance()
        })
        .sum()
}

fn same_angle(a: f64, b: f64) -> bool {
    // analyzer angles are only defined mod pi
    wrap_angle(2.0 * (a - b)).abs() < 2.0 * ANGLE_TOLERANCE
}

fn check_theta1(theta1: f64) -> Result<()> {
    let (s, c) = theta1.sin_cos();
    if s.abs() < ANGLE_TOLERANCE || c.abs() < ANGLE_TOLERANCE {
        return Err(Error::DegenerateTheta1 { theta1 });
    }
    Ok(())
}

/// Raw inversion from the three rates, before angle conversion. Returns
/// `(C, tan psi, cos delta)` with `cos delta` unclamped (`None` if `k` is 0).
fn invert_rates(
    theta1: f64,
    r0: f64,
    r90: f64,
    r45: f64,
    k: f64,
) -> Result<(f64, f64, Option<f64>)> {
    if !(r0 > 0.0) {
        return Err(Error::Unidentifiable("zero rate at theta2 = 0".into()));
    }
    if !(r90 > 0.0) {
        return Err(Error::Unidentifiable("zero rate at theta2 = 90 deg".into()));
    }
    let (s1, c1) = theta1.sin_cos();
    let c = r0 / (s1 * s1);
    let t = (r90 / (c * c1 * c1)).sqrt();
    let x = if k == 0.0 {
        None
    } else {
        Some((2.0 * r45 / c - t * t * c1 * c1 - s1 * s1) / (2.0 * k * t * c1 * s1))
    };
    Ok((c, t, x))
}

fn clamp_cos(x: f64) -> (f64, bool) {
    if x > 1.0 {
        (1.0, true)
    } else if x < -1.0 {
        (-1.0, true)
    } else {
        (x, false)
    }
}

/// Closed-form inversion from three records at `theta2 = 0, 90, 45 deg`
/// sharing one `theta1`.
///
/// Standard deviations are Poisson errors propagated through the inversion.
pub fn invert_three_point(
    n0: &MeasurementRecord,
    n90: &MeasurementRecord,
    n45: &MeasurementRecord,
    model: RateModel,
) -> Result<EstimationResult> {
    let theta1 = n0.theta1;
    if !same_angle(n90.theta1, theta1) || !same_angle(n45.theta1, theta1) {
        return Err(Error::InvalidInput(
            "three-point records must share theta1".into(),
        ));
    }
    for (rec, want) in [(n0, 0.0), (n90, FRAC_PI_2), (n45, FRAC_PI_4)] {
        if !same_angle(rec.theta2, want) {
            return Err(Error::InvalidInput(format!(
                "expected theta2 = {want} rad, got {}",
                rec.theta2
            )));
        }
    }
    check_theta1(theta1)?;

    let k = model.k();
    let rates = [n0.rate(), n90.rate(), n45.rate()];
    let (c, t, x) = invert_rates(theta1, rates[0], rates[1], rates[2], k)?;

    let mut flags = EstimationFlags::default();
    let (cos_delta, delta_ok) = match x {
        Some(x) => {
            let (x, clamped) = clamp_cos(x);
            flags.clamped_cosdelta = clamped;
            (x, true)
        }
        None => {
            flags.delta_unidentifiable = true;
            (0.0, false)
        }
    };

    // Poisson propagation by central differences in each rate.
    let variances = [n0.rate_variance(), n90.rate_variance(), n45.rate_variance()];
    let mut var = [0.0f64; 3];
    let mut stds_ok = true;
    for i in 0..3 {
        let h = 1e-6 * rates[i].abs().max(1e-12);
        let mut up = rates;
        let mut down = rates;
        up[i] += h;
        down[i] -= h;
        match (
            invert_rates(theta1, up[0], up[1], up[2], k),
            invert_rates(theta1, down[0], down[1], down[2], k),
        ) {
            (Ok((cu, tu, xu)), Ok((cd, td, xd))) => {
                let dc = (cu - cd) / (2.0 * h);
                let dpsi = (tu.atan() - td.atan()) / (2.0 * h);
                let dx = match (xu, xd) {
                    (Some(a), Some(b)) => (a - b) / (2.0 * h),
                    _ => 0.0,
                };
                var[0] += dc * dc * variances[i];
                var[1] += dpsi * dpsi * variances[i];
                var[2] += dx * dx * variances[i];
            }
            _ => stds_ok = false,
        }
    }
    let std_delta = if stds_ok && delta_ok && !flags.clamped_cosdelta && cos_delta.abs() < 1.0 {
        Some(var[2].sqrt() / (1.0 - cos_delta * cos_delta).sqrt())
    } else {
        None
    };

    let three = [*n0, *n90, *n45];
    Ok(EstimationResult {
        c_hat: c,
        psi_hat: t.atan(),
        delta_hat: cos_delta.acos(),
        std_c: stds_ok.then(|| var[0].sqrt()),
        std_psi: stds_ok.then(|| var[1].sqrt()),
        std_delta,
        flags,
        chi2: weighted_residual(&three, model, c, t, cos_delta),
        iterations: 0,
    })
}

/// Finds the first `theta1` among `data` that has records at
/// `theta2 = 0, 90, 45 deg` and inverts them.
pub fn three_point_from_sweep(
    data: &[MeasurementRecord],
    model: RateModel,
) -> Result<EstimationResult> {
    let find = |theta1: f64, theta2: f64| {
        data.iter()
            .find(|r| same_angle(r.theta1, theta1) && same_angle(r.theta2, theta2))
    };
    let mut degenerate = None;
    for r in data {
        if let (Some(a), Some(b), Some(c)) = (
            find(r.theta1, 0.0),
            find(r.theta1, FRAC_PI_2),
            find(r.theta1, FRAC_PI_4),
        ) {
            match invert_three_point(a, b, c, model) {
                Err(e @ Error::DegenerateTheta1 { .. }) => degenerate = Some(e),
                other => return other,
            }
        }
    }
    Err(degenerate.unwrap_or_else(|| {
        Error::InvalidInput("no theta1 with records at theta2 = 0, 45 and 90 deg".into())
    }))
}

struct Problem<'a> {
    data: &'a [MeasurementRecord],
    model: RateModel,
}

impl Problem<'_> {
    fn chi2(&self, p: &[f64; 3]) -> f64 {
        weighted_residual(self.data, self.model, p[0], p[1], p[2])
    }

    /// Whitened residuals and Jacobian over the free parameters.
    fn linearize(&self, p: &[f64; 3], free: &[usize]) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.data.len();
        let mut res = DVector::zeros(n);
        let mut jac = DMatrix::zeros(n, free.len());
        for (i, r) in self.data.iter().enumerate() {
            let a = r.settings();
            let w = r.rate_variance().sqrt().recip();
            res[i] = w * (r.rate() - self.model.rate(p[0], p[1], p[2], a));
            for (col, &j) in free.iter().enumerate() {
                let h = 1e-6
                    * if j == 0 {
                        p[0].abs().max(1e-300)
                    } else {
                        p[j].abs().max(1.0)
                    };
                let mut up = *p;
                let mut down = *p;
                up[j] += h;
                down[j] -= h;
                let d = (self.model.rate(up[0], up[1], up[2], a)
                    - self.model.rate(down[0], down[1], down[2], a))
                    / (2.0 * h);
                jac[(i, col)] = w * d;
            }
        }
        (res, jac)
    }

    /// Damped Gauss-Newton (Levenberg-Marquardt) over the `free` indices.
    fn solve(&self, start: [f64; 3], free: &[usize]) -> Result<([f64; 3], usize)> {
        let mut p = start;
        let mut chi2 = self.chi2(&p);
        let mut lambda = 1e-3;
        for iteration in 1..=MAX_FIT_ITERATIONS {
            let (res, jac) = self.linearize(&p, free);
            let jt = jac.transpose();
            let normal = &jt * &jac;
            let gradient = &jt * &res;
            loop {
                let mut damped = normal.clone();
                for d in 0..free.len() {
                    damped[(d, d)] += lambda * normal[(d, d)].max(1e-300);
                }
                let Some(step) = damped.lu().solve(&gradient) else {
                    lambda *= 10.0;
                    if lambda > 1e16 {
                        return Err(Error::FitFailure {
                            iterations: iteration,
                            reason: "singular normal matrix".into(),
                        });
                    }
                    continue;
                };
                let mut trial = p;
                for (col, &j) in free.iter().enumerate() {
                    trial[j] += step[col];
                }
                let trial_chi2 = self.chi2(&trial);
                if trial_chi2.is_finite() && trial_chi2 <= chi2 {
                    let small = free.iter().enumerate().all(|(col, &j)| {
                        step[col].abs() <= STEP_TOLERANCE * trial[j].abs().max(1e-300)
                    });
                    p = trial;
                    chi2 = trial_chi2;
                    lambda = (lambda * 0.1).max(1e-12);
                    if small || chi2 == 0.0 {
                        return Ok((p, iteration));
                    }
                    break;
                }
                lambda *= 10.0;
                if lambda > 1e16 {
                    // no downhill step left at working precision
                    return Ok((p, iteration));
                }
            }
        }
        Err(Error::FitFailure {
            iterations: MAX_FIT_ITERATIONS,
            reason: format!("step did not fall below relative tolerance; chi2 = {chi2}"),
        })
    }

    /// Weighted norms of the `dr/dx` and `C dr/dC` columns.
    fn delta_sensitivity_ratio(&self, p: &[f64; 3]) -> f64 {
        let (_, jac) = self.linearize(p, &[0, 2]);
        let c_col = p[0] * jac.column(0).norm();
        let x_col = jac.column(1).norm();
        if c_col == 0.0 {
            0.0
        } else {
            x_col / c_col
        }
    }

    /// Linear weighted least squares in `(C, C t^2, C t x)`.
    fn linear_seed(&self) -> Result<[f64; 3]> {
        let n = self.data.len();
        let k = self.model.k();
        let mut a = DMatrix::zeros(n, 3);
        let mut b = DVector::zeros(n);
        for (i, r) in self.data.iter().enumerate() {
            let w = r.rate_variance().sqrt().recip();
            let (s1, c1) = r.theta1.sin_cos();
            let (s2, c2) = r.theta2.sin_cos();
            a[(i, 0)] = w * s1 * s1 * c2 * c2;
            a[(i, 1)] = w * c1 * c1 * s2 * s2;
            a[(i, 2)] = w * 2.0 * k * c1 * c2 * s1 * s2;
            b[i] = w * r.rate();
        }
        let svd = a.svd(true, true);
        let sol = svd
            .solve(&b, 1e-12)
            .map_err(|e| Error::Unidentifiable(e.to_string()))?;
        let (c, ct2, ctx) = (sol[0], sol[1], sol[2]);
        if !(c > 0.0 && ct2 > 0.0) {
            return Err(Error::Unidentifiable(
                "sweep does not determine C and tan psi".into(),
            ));
        }
        let t = (ct2 / c).sqrt();
        let x = if ctx.is_finite() { ctx / (c * t) } else { 0.0 };
        Ok([c, t, x.clamp(-1.0, 1.0)])
    }
}

fn distinct_settings(data: &[MeasurementRecord]) -> usize {
    let mut seen: Vec<AnalyzerSettings> = Vec::new();
    for r in data {
        if !seen
            .iter()
            .any(|s| same_angle(s.theta1, r.theta1) && same_angle(s.theta2, r.theta2))
        {
            seen.push(r.settings());
        }
    }
    seen.len()
}

/// Weighted least-squares fit of `(C, psi, delta)` to a sweep.
///
/// The start point is `init` if given, else the three-point inversion of
/// the sweep's `0/45/90 deg` rows, else a linear solve in
/// `(C, C t^2, C t x)`. If the data carry no delta information the fit
/// pins `cos delta = 0` and flags it.
pub fn fit_sweep(
    data: &[MeasurementRecord],
    model: RateModel,
    init: Option<&EstimationResult>,
) -> Result<EstimationResult> {
    if distinct_settings(data) < 3 {
        return Err(Error::InvalidInput(
            "fit needs at least three distinct analyzer settings".into(),
        ));
    }
    let problem = Problem { data, model };
    let seed = match init {
        Some(r) => r.params(),
        None => match three_point_from_sweep(data, model) {
            Ok(r) => r.params(),
            Err(_) => problem.linear_seed()?,
        },
    };
    if !(seed[0] > 0.0 && seed[1].is_finite() && seed[2].is_finite()) {
        return Err(Error::InvalidInput(
            "fit start point must have C > 0".into(),
        ));
    }

    let mut flags = EstimationFlags::default();
    let mut start = seed;
    start[2] = start[2].clamp(-1.0, 1.0);
    if start[1] == 0.0 {
        start[1] = 1e-3;
    }
    let identifiable = problem.delta_sensitivity_ratio(&start) >= IDENTIFIABILITY_THRESHOLD;

    let (mut p, mut iterations) = if identifiable {
        problem.solve(start, &[0, 1, 2])?
    } else {
        flags.delta_unidentifiable = true;
        start[2] = 0.0;
        problem.solve(start, &[0, 1])?
    };

    // (t, x) and (-t, -x) give the same rates
    if p[1] < 0.0 {
        p[1] = -p[1];
        p[2] = -p[2];
    }
    if identifiable && p[2].abs() > 1.0 {
        flags.clamped_cosdelta = true;
        p[2] = p[2].signum();
        let (q, more) = problem.solve(p, &[0, 1])?;
        p = q;
        iterations += more;
    }
    if identifiable && problem.delta_sensitivity_ratio(&p) < IDENTIFIABILITY_THRESHOLD {
        flags.delta_unidentifiable = true;
    }

    let free: Vec<usize> = if flags.delta_unidentifiable || flags.clamped_cosdelta {
        vec![0, 1]
    } else {
        vec![0, 1, 2]
    };
    let (_, jac) = problem.linearize(&p, &free);
    let cov = (jac.transpose() * &jac).try_inverse();
    let std_of = |j: usize| -> Option<f64> {
        let col = free.iter().position(|&f| f == j)?;
        let v = cov.as_ref()?[(col, col)];
        (v.is_finite() && v >= 0.0).then(|| v.sqrt())
    };
    let std_delta = std_of(2).and_then(|s| {
        let sin = (1.0 - p[2] * p[2]).sqrt();
        (sin > 0.0).then(|| s / sin)
    });

    Ok(EstimationResult {
        c_hat: p[0],
        psi_hat: p[1].atan(),
        delta_hat: p[2].acos(),
        std_c: std_of(0),
        std_psi: std_of(1).map(|s| s / (1.0 + p[1] * p[1])),
        std_delta: if flags.delta_unidentifiable {
            None
        } else {
            std_delta
        },
        flags,
        chi2: problem.chi2(&p),
        iterations,
    })
}

/// Single Poisson draw with mean `rate * duration` from a fresh stream
/// seeded by `seed`.
pub fn poisson_counts(rate: f64, duration: f64, seed: u64) -> u64 {
    ShotNoise::new(seed).counts(rate, duration)
}

/// Seeded Poisson counting noise.
#[derive(Debug, Clone)]
pub struct ShotNoise {
    rng: ChaCha8Rng,
}

impl ShotNoise {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Independent stream `stream` under `seed`.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng }
    }

    pub fn counts(&mut self, rate: f64, duration: f64) -> u64 {
        let mean = rate * duration;
        if !(mean > 0.0) {
            return 0;
        }
        match Poisson::new(mean) {
            Ok(dist) => dist.sample(&mut self.rng) as u64,
            Err(_) => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimationMethod {
    ThreePoint,
    Fit,
}

/// Analyzer settings, counts levels and trial count for a Monte Carlo study.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloDesign {
    pub settings: Vec<AnalyzerSettings>,
    /// Expected counts summed over all settings, one entry per level.
    pub total_counts: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub method: EstimationMethod,
    /// With `false` every trial sees the expected counts.
    pub noise: bool,
}

impl MonteCarloDesign {
    /// Three-point design at `theta1`.
    pub fn three_point(theta1: f64, total_counts: Vec<f64>, trials: usize, seed: u64) -> Self {
        Self {
            settings: vec![
                AnalyzerSettings::new(theta1, 0.0),
                AnalyzerSettings::new(theta1, FRAC_PI_2),
                AnalyzerSettings::new(theta1, FRAC_PI_4),
            ],
            total_counts,
            trials,
            seed,
            method: EstimationMethod::ThreePoint,
            noise: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionLevel {
    pub total_counts: f64,
    pub bias_psi: f64,
    pub std_psi: f64,
    pub bias_delta: f64,
    pub std_delta: f64,
    /// Trials whose estimate succeeded.
    pub trials_used: usize,
    pub failures: usize,
    pub clamped: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionReport {
    pub levels: Vec<PrecisionLevel>,
    /// Least-squares slope of `ln std_psi` against `ln total_counts`.
    pub slope_psi: Option<f64>,
    pub slope_delta: Option<f64>,
}

/// Ordinary least-squares slope of `y` on `x`.
pub fn ols_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn log_slope(levels: &[PrecisionLevel], std: impl Fn(&PrecisionLevel) -> f64) -> Option<f64> {
    let points: Vec<(f64, f64)> = levels
        .iter()
        .filter(|l| std(l) > 0.0)
        .map(|l| (l.total_counts.ln(), std(l).ln()))
        .collect();
    if points.len() != levels.len() {
        return None;
    }
    ols_slope(&points)
}

fn level_seed(seed: u64, level: usize) -> u64 {
    seed ^ (level as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn mean_std(values: &[f64], truth: f64) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    // shifted by the first value so identical trials give exactly zero spread
    let shift = values[0];
    let n = values.len() as f64;
    let mean = values.iter().map(|v| v - shift).sum::<f64>() / n;
    let var = if values.len() > 1 {
        values
            .iter()
            .map(|v| (v - shift - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0)
    } else {
        0.0
    };
    (shift + mean - truth, var.sqrt())
}

/// Simulates `design.trials` noisy experiments per counts level, estimates
/// each, and summarizes bias and spread of `psi_hat` and `delta_hat`.
///
/// Trial `i` at level `l` draws from its own stream derived from the master
/// seed, so the report does not depend on the thread count.
pub fn monte_carlo_precision(
    truth: &Configuration,
    design: &MonteCarloDesign,
) -> Result<PrecisionReport> {
    if design.trials < 100 {
        return Err(Error::InvalidConfiguration(format!(
            "Monte Carlo needs at least 100 trials, got {}",
            design.trials
        )));
    }
    if design.settings.is_empty() || design.total_counts.is_empty() {
        return Err(Error::InvalidConfiguration(
            "Monte Carlo design is empty".into(),
        ));
    }
    if design.method == EstimationMethod::ThreePoint && design.settings.len() != 3 {
        return Err(Error::InvalidConfiguration(
            "three-point design needs exactly three settings".into(),
        ));
    }
    let model = RateModel::for_configuration(truth);
    let rates: Vec<f64> = design.settings.iter().map(|&a| truth.rate(a)).collect();
    let total_rate: f64 = rates.iter().sum();
    if !(total_rate > 0.0) {
        return Err(Error::InvalidConfiguration(
            "design has zero expected counts".into(),
        ));
    }
    let psi_true = truth.sample.psi();
    let delta_true = truth.sample.delta().abs();

    let mut levels = Vec::with_capacity(design.total_counts.len());
    for (li, &total) in design.total_counts.iter().enumerate() {
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::InvalidConfiguration(format!(
                "invalid counts level {total}"
            )));
        }
        let duration = total / total_rate;
        let seed = level_seed(design.seed, li);
        let outcomes: Vec<Result<EstimationResult>> = (0..design.trials)
            .into_par_iter()
            .map(|trial| {
                let mut noise = ShotNoise::with_stream(seed, trial as u64);
                let records = design
                    .settings
                    .iter()
                    .zip(&rates)
                    .map(|(&a, &rate)| {
                        let counts = if design.noise {
                            noise.counts(rate, duration) as f64
                        } else {
                            rate * duration
                        };
                        MeasurementRecord::new(a.theta1, a.theta2, duration, counts)
                    })
                    .collect::<Result<Vec<_>>>()?;
                match design.method {
                    EstimationMethod::ThreePoint => {
                        invert_three_point(&records[0], &records[1], &records[2], model)
                    }
                    EstimationMethod::Fit => fit_sweep(&records, model, None),
                }
            })
            .collect();

        let mut psis = Vec::new();
        let mut deltas = Vec::new();
        let mut failures = 0;
        let mut clamped = 0;
        for outcome in &outcomes {
            match outcome {
                Ok(r) => {
                    psis.push(r.psi_hat);
                    deltas.push(r.delta_hat);
                    clamped += usize::from(r.flags.clamped_cosdelta);
                }
                Err(_) => failures += 1,
            }
        }
        let (bias_psi, std_psi) = mean_std(&psis, psi_true);
        let (bias_delta, std_delta) = mean_std(&deltas, delta_true);
        levels.push(PrecisionLevel {
            total_counts: total,
            bias_psi,
            std_psi,
            bias_delta,
            std_delta,
            trials_used: psis.len(),
            failures,
            clamped,
        });
    }
    Ok(PrecisionReport {
        slope_psi: log_slope(&levels, |l| l.std_psi),
        slope_delta: log_slope(&levels, |l| l.std_delta),
        levels,
    })
}
