use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sbeq::pimc::{
    covariance_matrix, estimate, factorize, lag_kernel, propagate, sample_noise, NoiseGenerator, NoiseMethod,
    NoisePath, NoiseScratch, PimcSettings, Sampler,
};
use sbeq::{BathParams, ModelParams, SpectralDensity};

fn model() -> ModelParams {
    ModelParams::new(1.0, 3.0, 1.0).unwrap()
}

fn bath(gamma: f64, omega_c: f64) -> SpectralDensity {
    BathParams::new(gamma, omega_c).unwrap().into()
}

fn combined(a: f64, b: f64) -> f64 {
    a.hypot(b)
}

/// Sample covariance of `n` paths from `draw`, checked entrywise against
/// `Σ` with the standard error `√((Σ_ii Σ_jj + Σ_ij²)/n)` of a Gaussian
/// sample covariance.
fn check_sample_covariance(sigma: &nalgebra::DMatrix<f64>, n: usize, mut draw: impl FnMut(u64) -> Vec<f64>) {
    let dim = sigma.nrows();
    let mut acc = nalgebra::DMatrix::<f64>::zeros(dim, dim);
    for i in 0..n {
        let x = nalgebra::DVector::from_vec(draw(i as u64));
        acc += &x * x.transpose();
    }
    acc /= n as f64;
    for i in 0..dim {
        for j in 0..dim {
            let se = ((sigma[(i, i)] * sigma[(j, j)] + sigma[(i, j)].powi(2)) / n as f64).sqrt();
            assert!((acc[(i, j)] - sigma[(i, j)]).abs() < 5.0 * se, "({i},{j})");
        }
    }
}

#[test]
fn cholesky_noise_reproduces_covariance() {
    let m = model();
    let b = bath(2.0, 5.0);
    let sigma = covariance_matrix(12, &m, &b).unwrap();
    let factor = factorize(&sigma).unwrap();
    check_sample_covariance(&sigma, 100_000, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        rng.set_stream(i);
        sample_noise(&factor, m.beta / 12.0, &mut rng).values
    });
}

#[test]
fn spectral_noise_reproduces_covariance() {
    let m = model();
    let b = bath(2.0, 5.0);
    let sigma = covariance_matrix(12, &m, &b).unwrap();
    let gen = NoiseGenerator::spectral(&lag_kernel(12, &m, &b).unwrap());
    let mut scratch = NoiseScratch::default();
    check_sample_covariance(&sigma, 100_000, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        rng.set_stream(i);
        let mut out = vec![0.0; 12];
        gen.sample_into(&mut rng, &mut out, &mut scratch);
        out
    });
}

#[test]
fn noise_is_reproducible() {
    let m = model();
    let sigma = covariance_matrix(8, &m, &bath(1.0, 5.0)).unwrap();
    let f = factorize(&sigma).unwrap();
    let a = sample_noise(&f, 0.125, &mut ChaCha8Rng::seed_from_u64(5));
    let b = sample_noise(&f, 0.125, &mut ChaCha8Rng::seed_from_u64(5));
    assert_eq!(a, b);
}

#[test]
fn propagation_converges_at_second_order() {
    let m = model();
    let smooth = |t: f64| 0.5 + 0.5 * (std::f64::consts::PI * t).sin();
    let product = |n: usize| {
        let dtau = m.beta / n as f64;
        let values = (0..n).map(|j| smooth((j as f64 + 0.5) * dtau)).collect();
        propagate(&NoisePath::new(values, dtau).unwrap(), &m)
    };
    let reference = product(1 << 14);
    let err = |n| product(n).max_abs_diff(&reference);
    for n in [2, 4, 8] {
        let ratio = err(n) / err(2 * n);
        assert!((3.0..5.0).contains(&ratio), "N={n}: ratio {ratio}");
    }
}

#[test]
fn both_samplers_and_generators_agree() {
    let m = model();
    let b = bath(5.0, 5.0);
    let base = PimcSettings {
        steps: 64,
        n_samples: 200_000,
        seed: 21,
        ..Default::default()
    };
    let shifted = estimate(&m, &b, &base).unwrap();
    let plain = estimate(
        &m,
        &b,
        &PimcSettings {
            sampler: Sampler::Plain,
            seed: 22,
            ..base
        },
    )
    .unwrap();
    let chol = estimate(
        &m,
        &b,
        &PimcSettings {
            noise: NoiseMethod::Cholesky,
            seed: 23,
            ..base
        },
    )
    .unwrap();
    for other in [&plain, &chol] {
        let tol = 3.0 * combined(shifted.sigma_z_stderr, other.sigma_z_stderr);
        assert!(
            (shifted.sigma_z - other.sigma_z).abs() < tol,
            "{} vs {}",
            shifted.sigma_z,
            other.sigma_z
        );
    }
    assert!(shifted.sigma_z_stderr < plain.sigma_z_stderr);
}

#[test]
fn bias_reversal_flips_sigma_z() {
    let b = bath(10.0, 5.0);
    let s = PimcSettings {
        steps: 64,
        n_samples: 100_000,
        seed: 4,
        ..Default::default()
    };
    let plus = estimate(&model(), &b, &s).unwrap();
    let minus = estimate(
        &ModelParams::new(-1.0, 3.0, 1.0).unwrap(),
        &b,
        &PimcSettings { seed: 5, ..s },
    )
    .unwrap();
    let tol = 3.0 * combined(plus.sigma_z_stderr, minus.sigma_z_stderr);
    assert!((plus.sigma_z + minus.sigma_z).abs() < tol);
}

#[test]
fn stderr_halves_when_samples_quadruple() {
    let m = model();
    let b = bath(2.0, 5.0);
    let s = PimcSettings {
        steps: 32,
        n_samples: 50_000,
        seed: 8,
        ..Default::default()
    };
    let small = estimate(&m, &b, &s).unwrap();
    let large = estimate(
        &m,
        &b,
        &PimcSettings {
            n_samples: 200_000,
            ..s
        },
    )
    .unwrap();
    let ratio = small.sigma_z_stderr / large.sigma_z_stderr;
    assert!((ratio / 2.0 - 1.0).abs() < 0.2, "ratio {ratio}");
}

#[test]
fn weak_coupling_agrees_with_perturbation_theory() {
    let m = model();
    let b = bath(1.0, 5.0);
    let est = estimate(
        &m,
        &b,
        &PimcSettings {
            steps: 128,
            n_samples: 200_000,
            seed: 6,
            ..Default::default()
        },
    )
    .unwrap();
    let pt = sbeq::perturbation::solve_method(sbeq::Method::Orig2, &m, &b)
        .unwrap()
        .rho
        .sigma_z();
    // Higher orders are bounded by the spread between the second-order
    // frames at this coupling, about 2e-4.
    assert!(
        (est.sigma_z - pt).abs() < 3.0 * est.sigma_z_stderr + 2e-4,
        "{} vs {pt}",
        est.sigma_z
    );
    assert!(est.n_rejected == 0);
}
