//! Jones calculus and the twin-photon block generalization.
//!
//! A single beam's polarization is a [`JonesVector`] transformed by a 2x2
//! [`JonesMatrix`]. A photon pair travelling in two spatially distinct beams
//! is described by a [`TwinPhotonField`]: for each beam, the Jones vectors
//! multiplying the signal and the idler annihilation amplitudes. Optical
//! elements acting on both beams form a [`TwinPhotonJonesMatrix`], a 2x2
//! block matrix whose block `t_kl` maps beam `l` into beam `k`.
//!
//! Only c-number coefficients are tracked: the pair state is fixed, so the
//! detection amplitudes depend on the operator-valued field solely through
//! these coefficients.

use std::ops::{Add, Mul};

use num_complex::Complex64;

use crate::coincidence::SampleParams;

/// Complex field coefficient (reflection coefficients, Jones entries).
pub type ComplexAmplitude = Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const J: Complex64 = Complex64::new(0.0, 1.0);

/// Components along the horizontal and vertical basis kets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesVector {
    pub h: ComplexAmplitude,
    pub v: ComplexAmplitude,
}

impl JonesVector {
    pub const fn new(h: ComplexAmplitude, v: ComplexAmplitude) -> Self {
        Self { h, v }
    }

    pub const fn horizontal() -> Self {
        Self::new(ONE, ZERO)
    }

    pub const fn vertical() -> Self {
        Self::new(ZERO, ONE)
    }

    pub const fn zero() -> Self {
        Self::new(ZERO, ZERO)
    }

    /// Real unit vector at `theta` from the horizontal.
    pub fn linear(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(Complex64::new(c, 0.0), Complex64::new(s, 0.0))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.h.norm_sqr() + self.v.norm_sqr()
    }

    /// Hermitian inner product `<self|other>`.
    pub fn inner(&self, other: &JonesVector) -> Complex64 {
        self.h.conj() * other.h + self.v.conj() * other.v
    }

    pub fn scale(&self, k: Complex64) -> Self {
        Self::new(self.h * k, self.v * k)
    }

    pub fn is_finite(&self) -> bool {
        self.h.is_finite() && self.v.is_finite()
    }

    pub fn components(&self) -> [Complex64; 2] {
        [self.h, self.v]
    }
}

impl Add for JonesVector {
    type Output = JonesVector;

    fn add(self, rhs: JonesVector) -> JonesVector {
        JonesVector::new(self.h + rhs.h, self.v + rhs.v)
    }
}

/// 2x2 Jones matrix, `m[row][col]` with rows and columns indexed by {H, V}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesMatrix(pub [[ComplexAmplitude; 2]; 2]);

impl JonesMatrix {
    pub const fn new(m: [[ComplexAmplitude; 2]; 2]) -> Self {
        Self(m)
    }

    pub fn from_real(m: [[f64; 2]; 2]) -> Self {
        Self([
            [Complex64::new(m[0][0], 0.0), Complex64::new(m[0][1], 0.0)],
            [Complex64::new(m[1][0], 0.0), Complex64::new(m[1][1], 0.0)],
        ])
    }

    pub const fn identity() -> Self {
        Self([[ONE, ZERO], [ZERO, ONE]])
    }

    pub const fn zero() -> Self {
        Self([[ZERO, ZERO], [ZERO, ZERO]])
    }

    pub const fn diagonal(a: ComplexAmplitude, b: ComplexAmplitude) -> Self {
        Self([[a, ZERO], [ZERO, b]])
    }

    /// Sign flip of the vertical axis; maps an incident-frame polarization
    /// onto the frame of the counter-propagating reflected beam.
    pub const fn reflected_frame() -> Self {
        Self([[ONE, ZERO], [ZERO, Complex64::new(-1.0, 0.0)]])
    }

    pub fn get(&self, row: usize, col: usize) -> ComplexAmplitude {
        self.0[row][col]
    }

    pub fn determinant(&self) -> ComplexAmplitude {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().flatten().all(|z| *z == ZERO)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|z| z.is_finite())
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        Self([[m[0][0], m[1][0]], [m[0][1], m[1][1]]])
    }

    pub fn scale(&self, k: ComplexAmplitude) -> Self {
        let m = &self.0;
        Self([[m[0][0] * k, m[0][1] * k], [m[1][0] * k, m[1][1] * k]])
    }

    pub fn apply(&self, x: &JonesVector) -> JonesVector {
        let m = &self.0;
        JonesVector::new(m[0][0] * x.h + m[0][1] * x.v, m[1][0] * x.h + m[1][1] * x.v)
    }

    /// Largest absolute entry difference.
    pub fn max_abs_diff(&self, other: &JonesMatrix) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Mul for JonesMatrix {
    type Output = JonesMatrix;

    fn mul(self, rhs: JonesMatrix) -> JonesMatrix {
        let (a, b) = (&self.0, &rhs.0);
        let mut c = [[ZERO; 2]; 2];
        for (i, row) in c.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                *entry = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        JonesMatrix(c)
    }
}

impl Add for JonesMatrix {
    type Output = JonesMatrix;

    fn add(self, rhs: JonesMatrix) -> JonesMatrix {
        let (a, b) = (&self.0, &rhs.0);
        JonesMatrix([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }
}

/// Linear analyzer transmitting along `theta` from the horizontal:
/// `[[cos²θ, cosθ sinθ], [cosθ sinθ, sin²θ]]`.
pub fn polarizer_matrix(theta: f64) -> JonesMatrix {
    let (s, c) = theta.sin_cos();
    JonesMatrix::from_real([[c * c, c * s], [c * s, s * s]])
}

/// Sample acting on its eigenpolarizations: `diag(r1, r2)`.
pub fn sample_matrix(sample: &SampleParams) -> JonesMatrix {
    JonesMatrix::diagonal(sample.r1(), sample.r2())
}

/// Jones vectors multiplying the signal and idler annihilation amplitudes
/// in one beam: the beam field is `signal * a_s + idler * a_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamFieldMatrix {
    pub signal: JonesVector,
    pub idler: JonesVector,
}

impl BeamFieldMatrix {
    pub const fn new(signal: JonesVector, idler: JonesVector) -> Self {
        Self { signal, idler }
    }

    pub const fn zero() -> Self {
        Self::new(JonesVector::zero(), JonesVector::zero())
    }

    pub fn scale(&self, k: Complex64) -> Self {
        Self::new(self.signal.scale(k), self.idler.scale(k))
    }

    pub fn is_finite(&self) -> bool {
        self.signal.is_finite() && self.idler.is_finite()
    }

    pub fn max_abs_diff(&self, other: &BeamFieldMatrix) -> f64 {
        self.signal
            .components()
            .iter()
            .chain(self.idler.components().iter())
            .zip(
                other
                    .signal
                    .components()
                    .iter()
                    .chain(other.idler.components().iter()),
            )
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Add for BeamFieldMatrix {
    type Output = BeamFieldMatrix;

    fn add(self, rhs: BeamFieldMatrix) -> BeamFieldMatrix {
        BeamFieldMatrix::new(self.signal + rhs.signal, self.idler + rhs.idler)
    }
}

impl Mul<BeamFieldMatrix> for JonesMatrix {
    type Output = BeamFieldMatrix;

    fn mul(self, rhs: BeamFieldMatrix) -> BeamFieldMatrix {
        BeamFieldMatrix::new(self.apply(&rhs.signal), self.apply(&rhs.idler))
    }
}

/// Coefficients of the field in both beams.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwinPhotonField {
    pub beam1: BeamFieldMatrix,
    pub beam2: BeamFieldMatrix,
}

impl TwinPhotonField {
    pub const fn new(beam1: BeamFieldMatrix, beam2: BeamFieldMatrix) -> Self {
        Self { beam1, beam2 }
    }

    /// Collinear `|HV>` pair split by a lossless symmetric beam splitter:
    /// beam 1 carries `j(-A_s + A_i)`, beam 2 carries `A_s + A_i`, where
    /// `A_s = a_s (1,0)` and `A_i = a_i (0,1)`.
    pub fn after_beam_splitter() -> Self {
        let beam1 = BeamFieldMatrix::new(
            JonesVector::horizontal().scale(-J),
            JonesVector::vertical().scale(J),
        );
        let beam2 = BeamFieldMatrix::new(JonesVector::horizontal(), JonesVector::vertical());
        Self::new(beam1, beam2)
    }

    /// Non-collinear entangled pair. The H photon (signal) and the V photon
    /// (idler) each leave in either beam; on the one-photon-per-beam sector
    /// this is `|H>1|V>2 + e^{j phase}|V>1|H>2`. The relative phase rides on
    /// the beam-2 signal coefficient, which only enters the `|V>1|H>2` term.
    pub fn entangled_pair(relative_phase: f64) -> Self {
        let beam1 = BeamFieldMatrix::new(JonesVector::horizontal(), JonesVector::vertical());
        let beam2 = BeamFieldMatrix::new(
            JonesVector::horizontal().scale(Complex64::from_polar(1.0, relative_phase)),
            JonesVector::vertical(),
        );
        Self::new(beam1, beam2)
    }

    pub fn scale(&self, k: Complex64) -> Self {
        Self::new(self.beam1.scale(k), self.beam2.scale(k))
    }

    pub fn is_finite(&self) -> bool {
        self.beam1.is_finite() && self.beam2.is_finite()
    }

    pub fn max_abs_diff(&self, other: &TwinPhotonField) -> f64 {
        self.beam1
            .max_abs_diff(&other.beam1)
            .max(self.beam2.max_abs_diff(&other.beam2))
    }

    /// Two-photon detection amplitude for the beam-1 photon found in
    /// polarization `p` and the beam-2 photon in `q` (0 = H, 1 = V):
    /// either the signal reached beam 1 and the idler beam 2, or vice versa.
    pub fn pair_amplitude(&self, p: usize, q: usize) -> Complex64 {
        let b1s = self.beam1.signal.components()[p];
        let b1i = self.beam1.idler.components()[p];
        let b2s = self.beam2.signal.components()[q];
        let b2i = self.beam2.idler.components()[q];
        b1s * b2i + b1i * b2s
    }

    /// Coincidence probability (unnormalized) for polarization-insensitive
    /// detectors at the end of each beam. When both beams end in analyzers
    /// this reduces to `|alpha1 beta2 + alpha2 beta1|^2` along the pass axes.
    pub fn coincidence_weight(&self) -> f64 {
        let mut total = 0.0;
        for p in 0..2 {
            for q in 0..2 {
                total += self.pair_amplitude(p, q).norm_sqr();
            }
        }
        total
    }
}

impl Add for TwinPhotonField {
    type Output = TwinPhotonField;

    fn add(self, rhs: TwinPhotonField) -> TwinPhotonField {
        TwinPhotonField::new(self.beam1 + rhs.beam1, self.beam2 + rhs.beam2)
    }
}

/// Block matrix of Jones matrices; `t_kl` carries beam `l` into beam `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwinPhotonJonesMatrix {
    pub t11: JonesMatrix,
    pub t12: JonesMatrix,
    pub t21: JonesMatrix,
    pub t22: JonesMatrix,
}

impl TwinPhotonJonesMatrix {
    pub const fn new(
        t11: JonesMatrix,
        t12: JonesMatrix,
        t21: JonesMatrix,
        t22: JonesMatrix,
    ) -> Self {
        Self { t11, t12, t21, t22 }
    }

    pub const fn identity() -> Self {
        Self::block_diagonal(JonesMatrix::identity(), JonesMatrix::identity())
    }

    /// Independent elements in each beam.
    pub const fn block_diagonal(beam1: JonesMatrix, beam2: JonesMatrix) -> Self {
        Self::new(beam1, JonesMatrix::zero(), JonesMatrix::zero(), beam2)
    }

    /// Sample reflecting beam 1, nothing in beam 2.
    pub fn sample_in_beam1(sample: &SampleParams) -> Self {
        Self::block_diagonal(sample_matrix(sample), JonesMatrix::identity())
    }

    /// Analyzer pair at `theta1` (beam 1, after the sample) and `theta2`.
    ///
    /// The beam-1 block is `diag(1,-1) P(theta1)`: its output is expressed in
    /// the reflected-beam frame, so the transmitted amplitude rides on
    /// `(cos theta1, -sin theta1)` while the projection itself is onto
    /// `(cos theta1, sin theta1)`.
    pub fn analyzers(theta1: f64, theta2: f64) -> Self {
        Self::block_diagonal(
            JonesMatrix::reflected_frame() * polarizer_matrix(theta1),
            polarizer_matrix(theta2),
        )
    }

    pub fn is_block_diagonal(&self) -> bool {
        self.t12.is_zero() && self.t21.is_zero()
    }

    pub fn mixes_beams(&self) -> bool {
        !self.is_block_diagonal()
    }

    /// True when some non-zero diagonal block is singular, i.e. the element
    /// discards a polarization (analyzers and other projectors).
    pub fn is_projective(&self) -> bool {
        const SINGULAR: f64 = 1e-12;
        [self.t11, self.t22]
            .iter()
            .any(|b| !b.is_zero() && b.determinant().norm() < SINGULAR)
    }

    pub fn max_abs_diff(&self, other: &TwinPhotonJonesMatrix) -> f64 {
        self.t11
            .max_abs_diff(&other.t11)
            .max(self.t12.max_abs_diff(&other.t12))
            .max(self.t21.max_abs_diff(&other.t21))
            .max(self.t22.max_abs_diff(&other.t22))
    }

    pub fn apply(&self, f: &TwinPhotonField) -> TwinPhotonField {
        apply_twin_matrix(self, f)
    }
}

/// `beam_k' = sum_l T_kl beam_l`.
pub fn apply_twin_matrix(m: &TwinPhotonJonesMatrix, f: &TwinPhotonField) -> TwinPhotonField {
    TwinPhotonField::new(
        m.t11 * f.beam1 + m.t12 * f.beam2,
        m.t21 * f.beam1 + m.t22 * f.beam2,
    )
}

/// Block product `a b`: applying the result equals applying `b`, then `a`.
pub fn compose(a: &TwinPhotonJonesMatrix, b: &TwinPhotonJonesMatrix) -> TwinPhotonJonesMatrix {
    TwinPhotonJonesMatrix::new(
        a.t11 * b.t11 + a.t12 * b.t21,
        a.t11 * b.t12 + a.t12 * b.t22,
        a.t21 * b.t11 + a.t22 * b.t21,
        a.t21 * b.t12 + a.t22 * b.t22,
    )
}
