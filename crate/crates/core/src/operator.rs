//! 2×2 operators on the two-level system and the reduced density matrix.

use std::ops::{Add, Mul, Sub};

use nalgebra::{Complex, Matrix2};

use crate::{Error, Result};

pub type C64 = Complex<f64>;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoLevelOperator {
    pub entries: Matrix2<C64>,
}

impl TwoLevelOperator {
    pub fn new(entries: Matrix2<C64>) -> Self {
        Self { entries }
    }

    pub fn from_real(m: Matrix2<f64>) -> Self {
        Self::new(m.map(|x| C64::new(x, 0.0)))
    }

    pub fn zero() -> Self {
        Self::new(Matrix2::zeros())
    }

    pub fn identity() -> Self {
        Self::new(Matrix2::identity())
    }

    pub fn sigma_x() -> Self {
        Self::new(Matrix2::new(ZERO, ONE, ONE, ZERO))
    }

    pub fn sigma_y() -> Self {
        Self::new(Matrix2::new(ZERO, -I, I, ZERO))
    }

    pub fn sigma_z() -> Self {
        Self::new(Matrix2::new(ONE, ZERO, ZERO, -ONE))
    }

    /// `h0·I + hx·σ_x + hy·σ_y + hz·σ_z`.
    pub fn from_bloch(h0: f64, hx: f64, hy: f64, hz: f64) -> Self {
        Self::new(Matrix2::new(
            C64::new(h0 + hz, 0.0),
            C64::new(hx, -hy),
            C64::new(hx, hy),
            C64::new(h0 - hz, 0.0),
        ))
    }

    /// Bloch components `(h0, hx, hy, hz)` of the Hermitian part.
    pub fn bloch(&self) -> [f64; 4] {
        let m = &self.entries;
        let h0 = 0.5 * (m[(0, 0)].re + m[(1, 1)].re);
        let hz = 0.5 * (m[(0, 0)].re - m[(1, 1)].re);
        let off = 0.5 * (m[(1, 0)] + m[(0, 1)].conj());
        [h0, off.re, off.im, hz]
    }

    pub fn trace(&self) -> C64 {
        self.entries.trace()
    }

    pub fn adjoint(&self) -> Self {
        Self::new(self.entries.adjoint())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (self.entries - self.entries.adjoint()).iter().all(|z| z.norm() <= tol)
    }

    pub fn max_imag(&self) -> f64 {
        self.entries.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    pub fn real_part(&self) -> Matrix2<f64> {
        self.entries.map(|z| z.re)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.entries - other.entries)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::new(self.entries * s)
    }
}

impl Add for TwoLevelOperator {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.entries + rhs.entries)
    }
}

impl Sub for TwoLevelOperator {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.entries - rhs.entries)
    }
}

impl Mul for TwoLevelOperator {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::new(self.entries * rhs.entries)
    }
}

impl Mul<f64> for TwoLevelOperator {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        Self::new(self.entries * C64::new(rhs, 0.0))
    }
}

/// `sinh(x)/x`, accurate near zero.
fn sinhc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 + x * x / 6.0
    } else {
        x.sinh() / x
    }
}

/// `exp(−τH)` for Hermitian `H = h0 + h·σ`:
/// `e^{−τh0}[cosh(τ|h|) − τ sinhc(τ|h|) h·σ]`. Only the Hermitian part of
/// `h` is used.
pub fn imaginary_propagator(h: &TwoLevelOperator, tau: f64) -> TwoLevelOperator {
    let [h0, hx, hy, hz] = h.bloch();
    let norm = (hx * hx + hy * hy + hz * hz).sqrt();
    let c = (tau * norm).cosh();
    let s = -tau * sinhc(tau * norm);
    TwoLevelOperator::from_bloch(c, s * hx, s * hy, s * hz) * (-tau * h0).exp()
}

/// `exp(−τ(hz σ_z + hx σ_x))` as a real matrix, row-major `[a, b, b, d]`.
#[inline]
pub fn real_propagator(hz: f64, hx: f64, tau: f64) -> [f64; 4] {
    let norm = hz.hypot(hx);
    let c = (tau * norm).cosh();
    let s = tau * sinhc(tau * norm);
    [c - s * hz, -s * hx, -s * hx, c + s * hz]
}

/// Normalized equilibrium state of the two-level system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReducedDensityMatrix {
    pub entries: Matrix2<C64>,
}

impl ReducedDensityMatrix {
    pub const TRACE_TOL: f64 = 1e-12;

    /// Validates unit trace and Hermiticity to [`Self::TRACE_TOL`] (relative
    /// to the largest entry).
    pub fn new(entries: Matrix2<C64>) -> Result<Self> {
        let scale = entries.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let tr = entries.trace();
        if !entries.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::Domain("density matrix has non-finite entries".into()));
        }
        if (tr - ONE).norm() > Self::TRACE_TOL * scale {
            return Err(Error::Domain(format!("density matrix trace {tr} is not 1")));
        }
        if !TwoLevelOperator::new(entries).is_hermitian(Self::TRACE_TOL * scale) {
            return Err(Error::Domain("density matrix is not Hermitian".into()));
        }
        Ok(Self { entries })
    }

    /// Divides by the trace; `m` must be Hermitian up to rounding.
    pub fn normalized(m: &TwoLevelOperator) -> Result<Self> {
        let tr = m.trace();
        if tr.norm() == 0.0 || !tr.re.is_finite() {
            return Err(Error::Domain(format!("cannot normalize operator with trace {tr}")));
        }
        let mut e = m.entries / tr;
        e[(0, 0)].im = 0.0;
        e[(1, 1)].im = 0.0;
        let off = 0.5 * (e[(1, 0)] + e[(0, 1)].conj());
        e[(1, 0)] = off;
        e[(0, 1)] = off.conj();
        let d = 0.5 * (1.0 + e[(0, 0)].re - e[(1, 1)].re);
        e[(0, 0)].re = d;
        e[(1, 1)].re = 1.0 - d;
        Self::new(e)
    }

    pub fn from_real(m: Matrix2<f64>) -> Result<Self> {
        Self::normalized(&TwoLevelOperator::from_real(m))
    }

    pub fn maximally_mixed() -> Self {
        Self {
            entries: Matrix2::identity() * C64::new(0.5, 0.0),
        }
    }

    pub fn operator(&self) -> TwoLevelOperator {
        TwoLevelOperator::new(self.entries)
    }

    /// `tr(σ_z ρ)`.
    pub fn sigma_z(&self) -> f64 {
        self.entries[(0, 0)].re - self.entries[(1, 1)].re
    }

    /// `tr(σ_x ρ)`; frame dependent, unlike `⟨σ_z⟩`.
    pub fn sigma_x(&self) -> f64 {
        2.0 * self.entries[(1, 0)].re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let a = self.entries[(0, 0)].re;
        let d = self.entries[(1, 1)].re;
        let b = self.entries[(1, 0)].norm();
        0.5 * (a + d) - (0.25 * (a - d) * (a - d) + b * b).sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.operator().max_abs_diff(&other.operator())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Taylor series with scaling and squaring, a generic matrix exponential.
    fn expm_reference(a: Matrix2<C64>) -> Matrix2<C64> {
        let norm: f64 = a.iter().map(|z| z.norm()).sum();
        let squarings = (norm.max(1.0).log2().ceil() as i32 + 4).max(0);
        let scaled = a / C64::new(2f64.powi(squarings), 0.0);
        let mut term = Matrix2::<C64>::identity();
        let mut sum = term;
        for k in 1..30 {
            term = term * scaled / C64::new(k as f64, 0.0);
            sum += term;
        }
        for _ in 0..squarings {
            sum = sum * sum;
        }
        sum
    }

    #[test]
    fn pauli_algebra() {
        let (x, y, z) = (
            TwoLevelOperator::sigma_x(),
            TwoLevelOperator::sigma_y(),
            TwoLevelOperator::sigma_z(),
        );
        assert_eq!(x * x, TwoLevelOperator::identity());
        assert_eq!(x * y, z.scale(I));
        let b = TwoLevelOperator::from_bloch(0.3, 1.0, 2.0, 3.0).bloch();
        assert!(b.iter().zip([0.3, 1.0, 2.0, 3.0]).all(|(x, y)| (x - y).abs() < 1e-15));
    }

    #[test]
    fn propagator_identity_and_group_property() {
        let h = TwoLevelOperator::from_bloch(0.2, 1.5, -0.4, 0.5);
        assert_eq!(imaginary_propagator(&h, 0.0), TwoLevelOperator::identity());
        let prod = imaginary_propagator(&h, 0.8) * imaginary_propagator(&h, -0.8);
        assert!(prod.max_abs_diff(&TwoLevelOperator::identity()) < 1e-13);
    }

    #[test]
    fn propagator_matches_series_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let h = TwoLevelOperator::from_bloch(
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
            );
            let tau = rng.random_range(0.0..1.5);
            let exact = imaginary_propagator(&h, tau);
            let reference = expm_reference(h.entries * C64::new(-tau, 0.0));
            let scale = reference.iter().map(|z| z.norm()).fold(1.0, f64::max);
            assert!(exact.max_abs_diff(&TwoLevelOperator::new(reference)) < 1e-12 * scale);
        }
    }

    #[test]
    fn real_propagator_agrees_with_complex() {
        let r = real_propagator(0.7, 1.3, 0.9);
        let c = imaginary_propagator(&TwoLevelOperator::from_bloch(0.0, 1.3, 0.0, 0.7), 0.9);
        let m = Matrix2::new(r[0], r[1], r[2], r[3]);
        assert!(TwoLevelOperator::from_real(m).max_abs_diff(&c) < 1e-15);
        assert_eq!(real_propagator(0.0, 0.0, 1.0), [1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn density_matrix_validation_and_observables() {
        let rho = ReducedDensityMatrix::maximally_mixed();
        assert_eq!(rho.sigma_z(), 0.0);
        assert_eq!(rho.min_eigenvalue(), 0.5);
        let bad = Matrix2::new(ONE, ZERO, ZERO, ONE);
        assert!(ReducedDensityMatrix::new(bad).is_err());
        let r = ReducedDensityMatrix::from_real(Matrix2::new(3.0, 1.0, 1.0, 1.0)).unwrap();
        assert!((r.sigma_z() - 0.5).abs() < 1e-15);
        assert!((r.sigma_x() - 0.5).abs() < 1e-15);
    }
}
