//! Gaussian noise with the stationary covariance `C_zz^(0)(|τ_i − τ_j|)`
//! sampled at step midpoints.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::bath::{FrameSolution, ModelParams, SpectralDensity};
use crate::correlation::{BathCorrelations, Channel};
use crate::quadrature::Tolerance;
use crate::{Error, Result};

/// One noise realization on the midpoints `τ_j = (j + ½)δτ`.
#[derive(Clone, Debug, PartialEq)]
pub struct NoisePath {
    pub values: Vec<f64>,
    pub dtau: f64,
}

impl NoisePath {
    pub fn new(values: Vec<f64>, dtau: f64) -> Result<Self> {
        if values.len() < 2 || dtau.is_nan() || dtau <= 0.0 || !values.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise path needs >= 2 finite values and dtau > 0 (got {} values, dtau {dtau})",
                values.len()
            )));
        }
        Ok(Self { values, dtau })
    }

    pub fn steps(&self) -> usize {
        self.values.len()
    }
}

/// `C_zz^(0)(kδτ)` for `k = 0..N`. Because the kernel is `β`-periodic and
/// symmetric, this is also the first row of a circulant matrix.
pub fn lag_kernel(steps: usize, model: &ModelParams, bath: &SpectralDensity) -> Result<Vec<f64>> {
    if steps < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 steps, got {steps}")));
    }
    let corr = BathCorrelations::new(&FrameSolution::original(model), model, bath, &Tolerance::tight())?;
    let dtau = model.beta / steps as f64;
    let mut row = (0..steps)
        .map(|k| corr.channel(Channel::ZZ, k as f64 * dtau))
        .collect::<Result<Vec<_>>>()?;
    // Enforce the exact reflection symmetry the quadrature only has to 1e-10.
    for k in 1..steps {
        let m = 0.5 * (row[k] + row[steps - k]);
        row[k] = m;
        row[steps - k] = m;
    }
    Ok(row)
}

/// `Σ_ij = C_zz^(0)(|τ_i − τ_j|)` with the original-frame kernel.
pub fn covariance_matrix(steps: usize, model: &ModelParams, bath: &SpectralDensity) -> Result<DMatrix<f64>> {
    let row = lag_kernel(steps, model, bath)?;
    Ok(DMatrix::from_fn(steps, steps, |i, j| row[i.abs_diff(j)]))
}

/// Lower Cholesky factor, with diagonal jitter `1e−12·Σ_00` grown tenfold up
/// to `1e−8·Σ_00` if the plain factorization fails.
#[derive(Clone, Debug)]
pub struct CovarianceFactor {
    pub lower: DMatrix<f64>,
    pub jitter: f64,
}

pub fn factorize(sigma: &DMatrix<f64>) -> Result<CovarianceFactor> {
    let n = sigma.nrows();
    let scale = sigma[(0, 0)];
    if scale == 0.0 && sigma.iter().all(|&x| x == 0.0) {
        return Ok(CovarianceFactor {
            lower: DMatrix::zeros(n, n),
            jitter: 0.0,
        });
    }
    let mut jitter = 0.0;
    let mut next = 1e-12 * scale;
    loop {
        let mut m = sigma.clone();
        for i in 0..n {
            m[(i, i)] += jitter;
        }
        if let Some(ch) = Cholesky::new(m) {
            return Ok(CovarianceFactor { lower: ch.l(), jitter });
        }
        if next > 1e-8 * scale * (1.0 + 1e-9) {
            return Err(Error::Factorization { jitter });
        }
        jitter = next;
        next *= 10.0;
    }
}

/// How correlated noise is generated from white noise.
#[derive(Clone)]
pub enum NoiseGenerator {
    /// `ξ = L z` with the Cholesky factor.
    Factor(DMatrix<f64>),
    /// Circulant embedding: `ξ = Re FFT(√(λ_k/N) z_k)` with complex white
    /// `z_k` and `λ_k` the clamped eigenvalues of the circulant covariance.
    Spectral {
        amplitudes: Vec<f64>,
        fft: Arc<dyn Fft<f64>>,
    },
}

impl std::fmt::Debug for NoiseGenerator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Factor(l) => write!(f, "Factor({}x{})", l.nrows(), l.ncols()),
            Self::Spectral { amplitudes, .. } => write!(f, "Spectral({})", amplitudes.len()),
        }
    }
}

/// Scratch space reused between draws.
#[derive(Clone, Debug, Default)]
pub struct NoiseScratch {
    complex: Vec<Complex<f64>>,
    fft: Vec<Complex<f64>>,
    white: Vec<f64>,
}

impl NoiseGenerator {
    pub fn cholesky(factor: &CovarianceFactor) -> Self {
        Self::Factor(factor.lower.clone())
    }

    /// Builds the spectral generator from the circulant first row.
    pub fn spectral(row: &[f64]) -> Self {
        let n = row.len();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let mut buf: Vec<Complex<f64>> = row.iter().map(|&c| Complex::new(c, 0.0)).collect();
        fft.process(&mut buf);
        let amplitudes = buf.iter().map(|l| (l.re.max(0.0) / n as f64).sqrt()).collect();
        Self::Spectral { amplitudes, fft }
    }

    pub fn steps(&self) -> usize {
        match self {
            Self::Factor(l) => l.nrows(),
            Self::Spectral { amplitudes, .. } => amplitudes.len(),
        }
    }

    /// Writes one realization into `out`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64], scratch: &mut NoiseScratch) {
        match self {
            Self::Factor(l) => {
                let n = l.nrows();
                scratch.white.clear();
                scratch
                    .white
                    .extend((0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
                for (i, o) in out.iter_mut().enumerate() {
                    *o = (0..=i).map(|j| l[(i, j)] * scratch.white[j]).sum();
                }
            }
            Self::Spectral { amplitudes, fft } => {
                scratch.complex.clear();
                scratch.complex.extend(amplitudes.iter().map(|&a| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Complex::new(a * re, a * im)
                }));
                scratch.fft.resize(fft.get_inplace_scratch_len(), Complex::default());
                fft.process_with_scratch(&mut scratch.complex, &mut scratch.fft);
                for (o, z) in out.iter_mut().zip(&scratch.complex) {
                    *o = z.re;
                }
            }
        }
    }
}

/// `L z` for one white-noise draw.
pub fn sample_noise<R: Rng + ?Sized>(factor: &CovarianceFactor, dtau: f64, rng: &mut R) -> NoisePath {
    let n = factor.lower.nrows();
    let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    NoisePath {
        values: (&factor.lower * z).iter().copied().collect(),
        dtau,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::BathParams;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(gamma: f64) -> (ModelParams, SpectralDensity) {
        (
            ModelParams::new(1.0, 3.0, 1.0).unwrap(),
            BathParams::new(gamma, 5.0).unwrap().into(),
        )
    }

    #[test]
    fn uncoupled_bath_gives_zero_noise() {
        let (m, b) = setup(0.0);
        let sigma = covariance_matrix(16, &m, &b).unwrap();
        assert!(sigma.iter().all(|&x| x == 0.0));
        let f = factorize(&sigma).unwrap();
        let path = sample_noise(&f, 1.0 / 16.0, &mut ChaCha8Rng::seed_from_u64(1));
        assert!(path.values.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn covariance_is_stationary_and_psd() {
        let (m, b) = setup(1.0);
        let sigma = covariance_matrix(64, &m, &b).unwrap();
        let d = sigma[(0, 0)];
        for i in 0..64 {
            assert_eq!(sigma[(i, i)], d);
            for j in 0..64 {
                assert_eq!(sigma[(i, j)], sigma[(j, i)]);
            }
        }
        let eig = sigma.clone().symmetric_eigenvalues();
        let max = eig.max();
        assert!(eig.min() >= -1e-10 * max);
    }

    #[test]
    fn spectral_generator_reproduces_circulant_covariance() {
        // E[ξ_i ξ_j] = Σ_k (λ_k/N) cos(2π(i−j)k/N) must return the row itself.
        let (m, b) = setup(3.0);
        let row = lag_kernel(32, &m, &b).unwrap();
        let NoiseGenerator::Spectral { amplitudes, .. } = NoiseGenerator::spectral(&row) else {
            unreachable!()
        };
        let n = row.len();
        for lag in 0..n {
            let c: f64 = amplitudes
                .iter()
                .enumerate()
                .map(|(k, a)| a * a * (2.0 * std::f64::consts::PI * (lag * k) as f64 / n as f64).cos())
                .sum();
            assert!((c - row[lag]).abs() < 1e-10 * row[0], "lag {lag}");
        }
    }

    #[test]
    fn identical_seeds_give_identical_paths() {
        let (m, b) = setup(2.0);
        let row = lag_kernel(16, &m, &b).unwrap();
        let gen = NoiseGenerator::spectral(&row);
        let mut scratch = NoiseScratch::default();
        let (mut x, mut y) = (vec![0.0; 16], vec![0.0; 16]);
        gen.sample_into(&mut ChaCha8Rng::seed_from_u64(9), &mut x, &mut scratch);
        gen.sample_into(&mut ChaCha8Rng::seed_from_u64(9), &mut y, &mut scratch);
        assert_eq!(x, y);
    }

    #[test]
    fn jitter_rescues_a_singular_matrix() {
        let sigma = DMatrix::from_element(4, 4, 1.0);
        let f = factorize(&sigma).unwrap();
        assert!(f.jitter > 0.0 && f.jitter <= 1e-8);
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(factorize(&indefinite), Err(Error::Factorization { .. })));
    }
}
