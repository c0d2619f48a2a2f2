//! Photon-pair source descriptions: polarization state, spectrum, and the
//! residual birefringent delay left by the compensator.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;

use crate::polarization::TwinPhotonField;
use crate::{Error, Result};

/// Polarization state of the emitted pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SourceKind {
    /// Non-collinear type-II emission, `(|HV> + |VH>)/sqrt(2)`.
    Entangled,
    /// Collinear type-II emission, `|HV>`.
    Product,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpdcState {
    pub kind: SourceKind,
    /// Phase between the `|HV>` and `|VH>` kets. Only meaningful for
    /// [`SourceKind::Entangled`]; none of the closed forms include it.
    pub relative_phase: f64,
}

impl SpdcState {
    pub const fn entangled() -> Self {
        Self {
            kind: SourceKind::Entangled,
            relative_phase: 0.0,
        }
    }

    pub const fn product() -> Self {
        Self {
            kind: SourceKind::Product,
            relative_phase: 0.0,
        }
    }

    pub fn with_relative_phase(self, phase: f64) -> Self {
        Self {
            relative_phase: phase,
            ..self
        }
    }

    /// Polarization kets `(signal, idler)` with their amplitudes, 0 = H, 1 = V.
    pub fn polarization_terms(&self) -> Vec<((usize, usize), Complex64)> {
        match self.kind {
            SourceKind::Entangled => vec![
                ((0, 1), Complex64::new(FRAC_1_SQRT_2, 0.0)),
                (
                    (1, 0),
                    Complex64::from_polar(FRAC_1_SQRT_2, self.relative_phase),
                ),
            ],
            SourceKind::Product => vec![((0, 1), Complex64::new(1.0, 0.0))],
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.polarization_terms()
            .iter()
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Field coefficients entering the two detection beams: the beam-splitter
    /// output for the product state, the two-beam field for the entangled one.
    pub fn twin_field(&self) -> TwinPhotonField {
        match self.kind {
            SourceKind::Entangled => TwinPhotonField::entangled_pair(self.relative_phase),
            SourceKind::Product => TwinPhotonField::after_beam_splitter(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpectrumShape {
    /// Gaussian power spectrum; bandwidth is its standard deviation.
    Gaussian,
    /// Flat power spectrum; bandwidth is its full width.
    Rectangular,
}

/// Normalized power spectrum of the pair, centered on half the pump frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumModel {
    shape: SpectrumShape,
    center: f64,
    bandwidth: f64,
}

impl SpectrumModel {
    pub fn new(shape: SpectrumShape, center: f64, bandwidth: f64) -> Result<Self> {
        if !(center.is_finite() && center > 0.0) {
            return Err(Error::InvalidConfiguration(format!(
                "spectrum center must be positive and finite, got {center}"
            )));
        }
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(Error::InvalidConfiguration(format!(
                "spectrum bandwidth must be positive and finite, got {bandwidth}"
            )));
        }
        Ok(Self {
            shape,
            center,
            bandwidth,
        })
    }

    pub fn gaussian(center: f64, bandwidth: f64) -> Result<Self> {
        Self::new(SpectrumShape::Gaussian, center, bandwidth)
    }

    pub fn rectangular(center: f64, bandwidth: f64) -> Result<Self> {
        Self::new(SpectrumShape::Rectangular, center, bandwidth)
    }

    pub fn shape(&self) -> SpectrumShape {
        self.shape
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Pump angular frequency compatible with this spectrum.
    pub fn pump(&self) -> f64 {
        2.0 * self.center
    }

    /// Power spectral density at `omega`, integrating to one.
    pub fn power_spectrum(&self, omega: f64) -> f64 {
        let detuning = omega - self.center;
        match self.shape {
            SpectrumShape::Gaussian => {
                let sigma = self.bandwidth;
                (-0.5 * (detuning / sigma).powi(2)).exp() / (sigma * (2.0 * PI).sqrt())
            }
            SpectrumShape::Rectangular => {
                if detuning.abs() <= 0.5 * self.bandwidth {
                    1.0 / self.bandwidth
                } else {
                    0.0
                }
            }
        }
    }

    /// Fourier transform of the power spectrum about its center.
    pub fn envelope(&self, tau: f64) -> f64 {
        match self.shape {
            SpectrumShape::Gaussian => (-0.5 * (self.bandwidth * tau).powi(2)).exp(),
            SpectrumShape::Rectangular => sinc(0.5 * self.bandwidth * tau),
        }
    }

    /// Pair amplitude for signal at `omega` and idler at `pump - omega`.
    /// Real and nonnegative, the square root of the power spectrum.
    pub fn joint_amplitude(&self, omega: f64, pump: f64) -> Result<Complex64> {
        let expected = self.pump();
        if (pump - expected).abs() > 1e-12 * expected {
            return Err(Error::InvalidConfiguration(format!(
                "pump {pump} rad/s does not match twice the spectrum center ({expected} rad/s)"
            )));
        }
        Ok(Complex64::new(self.power_spectrum(omega).sqrt(), 0.0))
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Free-function form of [`SpectrumModel::envelope`].
pub fn envelope(spectrum: &SpectrumModel, tau: f64) -> f64 {
    spectrum.envelope(tau)
}

/// Free-function form of [`SpectrumModel::joint_amplitude`].
pub fn joint_amplitude(spectrum: &SpectrumModel, omega: f64, pump: f64) -> Result<Complex64> {
    spectrum.joint_amplitude(omega, pump)
}

/// Residual signal/idler delay in seconds; zero is full compensation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CompensatorDelay {
    tau: f64,
}

impl CompensatorDelay {
    pub fn new(tau: f64) -> Result<Self> {
        if !tau.is_finite() {
            return Err(Error::InvalidConfiguration(format!(
                "delay must be finite, got {tau}"
            )));
        }
        Ok(Self { tau })
    }

    pub const fn full() -> Self {
        Self { tau: 0.0 }
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Factor `Phi(tau) cos(omega0 tau)` multiplying the interference term.
    pub fn interference_factor(&self, spectrum: &SpectrumModel) -> f64 {
        spectrum.envelope(self.tau) * (spectrum.center() * self.tau).cos()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn envelope_is_normalized_at_zero() {
        for shape in [SpectrumShape::Gaussian, SpectrumShape::Rectangular] {
            let s = SpectrumModel::new(shape, 100.0, 3.0).unwrap();
            assert_eq!(s.envelope(0.0), 1.0);
        }
    }

    #[test]
    fn gaussian_envelope_values() {
        let sigma = 2.5;
        let s = SpectrumModel::gaussian(50.0, sigma).unwrap();
        assert_abs_diff_eq!(
            s.envelope(1.0 / sigma),
            0.606_530_659_712_633,
            epsilon = 1e-12
        );
        assert!(s.envelope(10.0 / sigma) < 2e-22);
    }

    #[test]
    fn envelope_bounded_by_one() {
        for shape in [SpectrumShape::Gaussian, SpectrumShape::Rectangular] {
            let s = SpectrumModel::new(shape, 10.0, 1.7).unwrap();
            for k in -500..=500 {
                let tau = k as f64 * 0.05;
                let e = s.envelope(tau);
                assert!(e.abs() <= 1.0 + 1e-15, "{shape:?} tau={tau} env={e}");
            }
        }
    }

    #[test]
    fn joint_amplitude_peaks_at_center_and_is_symmetric() {
        let s = SpectrumModel::gaussian(40.0, 2.0).unwrap();
        let peak = s.joint_amplitude(40.0, 80.0).unwrap().re;
        for d in [0.1, 0.5, 1.0, 3.0] {
            let up = s.joint_amplitude(40.0 + d, 80.0).unwrap();
            let down = s.joint_amplitude(40.0 - d, 80.0).unwrap();
            assert!(up.re < peak);
            assert_eq!(up.im, 0.0);
            assert_abs_diff_eq!(up.re, down.re, epsilon = 1e-15);
            // |phi|^2 has standard deviation sigma.
            assert_abs_diff_eq!(
                up.norm_sqr() / (peak * peak),
                (-d * d / 8.0).exp(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn joint_amplitude_requires_frequency_matching() {
        let s = SpectrumModel::gaussian(40.0, 2.0).unwrap();
        assert!(matches!(
            s.joint_amplitude(40.0, 81.0),
            Err(Error::InvalidConfiguration(_))
        ));
    }

    #[test]
    fn invalid_spectra_rejected() {
        assert!(SpectrumModel::gaussian(0.0, 1.0).is_err());
        assert!(SpectrumModel::gaussian(1.0, -1.0).is_err());
        assert!(SpectrumModel::rectangular(1.0, f64::NAN).is_err());
        assert!(CompensatorDelay::new(f64::INFINITY).is_err());
    }

    #[test]
    fn source_states_are_normalized() {
        assert_abs_diff_eq!(SpdcState::entangled().norm_sqr(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(SpdcState::product().norm_sqr(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            SpdcState::entangled().with_relative_phase(0.7).norm_sqr(),
            1.0,
            epsilon = 1e-15
        );
        assert_eq!(SpdcState::product().polarization_terms().len(), 1);
    }

    #[test]
    fn interference_factor_on_carrier_lattice() {
        let sigma = 1.0;
        let s = SpectrumModel::gaussian(2.0 * PI * 3.0, sigma).unwrap();
        // omega0 * tau = 2 pi * 3 with tau = 1/sigma
        let d = CompensatorDelay::new(1.0).unwrap();
        assert_abs_diff_eq!(
            d.interference_factor(&s),
            0.606_530_659_712_633,
            epsilon = 1e-12
        );
    }
}
