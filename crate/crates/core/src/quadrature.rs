//! Quadrature engine: Gauss rules and globally adaptive Gauss–Kronrod
//! integration over finite panels and the half line.
//!
//! Integrands are vector valued (`[f64; N]`) so that several bath integrals
//! sharing the same expensive kernel can be computed in one pass.

use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum QuadratureError {
    #[error(
        "adaptive quadrature did not converge after {evaluations} evaluations: \
         estimate {estimate:.6e}, error estimate {error:.3e}"
    )]
    NonConvergence {
        estimate: f64,
        error: f64,
        evaluations: usize,
    },
    #[error("integrand is not finite at x = {at}")]
    NonFinite { at: f64 },
}

/// Absolute/relative error targets. A component converges once its error
/// estimate falls below `max(abs, rel * |value|)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_subdivisions: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-10,
            rel: 1e-8,
            max_subdivisions: 2000,
        }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Self {
            abs,
            rel,
            ..Self::default()
        }
    }

    /// Tighter targets used where results feed root finding or identities
    /// checked to near machine precision.
    pub fn tight() -> Self {
        Self::new(1e-13, 1e-12)
    }

    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Estimate<const N: usize> {
    pub value: [f64; N],
    pub error: [f64; N],
    pub evaluations: usize,
}

/// A quadrature rule on a reference interval.
#[derive(Clone, Debug)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// Map this `[-1, 1]` rule onto `[a, b]`, returning `(x, w)` pairs.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }
}

/// `n`-point Gauss–Legendre rule on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = nf * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    Rule { nodes, weights }
}

/// Golub–Welsch: Gauss rule from three-term recurrence coefficients.
///
/// `alpha` holds the Jacobi diagonal, `beta` the squared off-diagonal
/// entries (`beta[k]` couples `k` and `k + 1`), and `mu0` the total mass of
/// the weight function.
pub fn gauss_from_recurrence(alpha: &[f64], beta: &[f64], mu0: f64) -> Rule {
    let n = alpha.len();
    assert_eq!(beta.len() + 1, n.max(1), "recurrence length mismatch");
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        jacobi[(k, k)] = alpha[k];
        if k + 1 < n {
            let b = beta[k].max(0.0).sqrt();
            jacobi[(k, k + 1)] = b;
            jacobi[(k + 1, k)] = b;
        }
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let v0 = eig.eigenvectors[(0, k)];
            (eig.eigenvalues[k], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

/// `n`-point Gauss–Laguerre rule for `∫₀^∞ e^{-t} g(t) dt`.
pub fn gauss_laguerre(n: usize) -> Rule {
    let alpha: Vec<f64> = (0..n).map(|k| 2.0 * k as f64 + 1.0).collect();
    let beta: Vec<f64> = (1..n).map(|k| (k * k) as f64).collect();
    gauss_from_recurrence(&alpha, &beta, 1.0)
}

fn laguerre_pair() -> &'static (Rule, Rule) {
    static RULES: OnceLock<(Rule, Rule)> = OnceLock::new();
    RULES.get_or_init(|| (gauss_laguerre(24), gauss_laguerre(40)))
}

// Gauss–Kronrod 7/15 abscissae and weights (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Panel<const N: usize> {
    a: f64,
    b: f64,
    value: [f64; N],
    error: [f64; N],
}

fn check_finite<const N: usize>(v: &[f64; N], x: f64) -> Result<(), QuadratureError> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(QuadratureError::NonFinite { at: x })
    }
}

fn kronrod15<const N: usize, F>(f: &F, a: f64, b: f64) -> Result<Panel<N>, QuadratureError>
where
    F: Fn(f64) -> [f64; N],
{
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut kron = [0.0; N];
    let mut gauss = [0.0; N];

    let fc = f(mid);
    check_finite(&fc, mid)?;
    for i in 0..N {
        kron[i] = WGK[7] * fc[i];
        gauss[i] = WG[3] * fc[i];
    }
    for j in 0..7 {
        let dx = half * XGK[j];
        let (x1, x2) = (mid - dx, mid + dx);
        let f1 = f(x1);
        let f2 = f(x2);
        check_finite(&f1, x1)?;
        check_finite(&f2, x2)?;
        for i in 0..N {
            let s = f1[i] + f2[i];
            kron[i] += WGK[j] * s;
            if j % 2 == 1 {
                gauss[i] += WG[j / 2] * s;
            }
        }
    }
    let mut value = [0.0; N];
    let mut error = [0.0; N];
    for i in 0..N {
        value[i] = kron[i] * half;
        error[i] = ((kron[i] - gauss[i]) * half).abs();
    }
    Ok(Panel { a, b, value, error })
}

/// Globally adaptive Gauss–Kronrod integration over the union of the
/// consecutive intervals delimited by `breakpoints`.
///
/// `extra_error` is added to every component's error budget check; it lets
/// the half-line driver account for its fixed-rule tail.
fn adaptive<const N: usize, F>(
    f: &F,
    breakpoints: &[f64],
    tol: &Tolerance,
    extra: ([f64; N], [f64; N]),
) -> Result<Estimate<N>, QuadratureError>
where
    F: Fn(f64) -> [f64; N],
{
    let mut panels: Vec<Panel<N>> = Vec::with_capacity(64);
    for w in breakpoints.windows(2) {
        if w[1] > w[0] {
            panels.push(kronrod15(f, w[0], w[1])?);
        }
    }
    let mut evaluations = 15 * panels.len();

    loop {
        let mut value = extra.0;
        let mut error = extra.1;
        for p in &panels {
            for i in 0..N {
                value[i] += p.value[i];
                error[i] += p.error[i];
            }
        }
        let targets: [f64; N] = std::array::from_fn(|i| tol.target(value[i]));
        if (0..N).all(|i| error[i] <= targets[i]) {
            return Ok(Estimate {
                value,
                error,
                evaluations,
            });
        }

        // Split the panel contributing the most relative to the targets.
        let worst = panels
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let score = (0..N).map(|i| p.error[i] / targets[i]).fold(0.0_f64, f64::max);
                (k, score)
            })
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .map(|(k, _)| k);

        let too_many = panels.len() >= tol.max_subdivisions;
        let Some(k) = worst else {
            return Ok(Estimate {
                value,
                error,
                evaluations,
            });
        };
        let (a, b) = (panels[k].a, panels[k].b);
        let m = 0.5 * (a + b);
        if too_many || m <= a || m >= b || (b - a) <= 1e-15 * a.abs().max(b.abs()) {
            let worst_component = (0..N)
                .max_by(|&i, &j| (error[i] / targets[i]).total_cmp(&(error[j] / targets[j])))
                .unwrap_or(0);
            return Err(QuadratureError::NonConvergence {
                estimate: value[worst_component],
                error: error[worst_component],
                evaluations,
            });
        }
        let left = kronrod15(f, a, m)?;
        let right = kronrod15(f, m, b)?;
        evaluations += 30;
        panels[k] = left;
        panels.push(right);
    }
}

/// Adaptive integral of a vector-valued function over `[a, b]`.
pub fn integrate_vec<const N: usize, F>(f: F, a: f64, b: f64, tol: &Tolerance) -> Result<Estimate<N>, QuadratureError>
where
    F: Fn(f64) -> [f64; N],
{
    adaptive(&f, &[a, b], tol, ([0.0; N], [0.0; N]))
}

/// Adaptive integral over consecutive intervals `[p₀, p₁], [p₁, p₂], …`.
pub fn integrate_piecewise<const N: usize, F>(
    f: F,
    breakpoints: &[f64],
    tol: &Tolerance,
) -> Result<Estimate<N>, QuadratureError>
where
    F: Fn(f64) -> [f64; N],
{
    adaptive(&f, breakpoints, tol, ([0.0; N], [0.0; N]))
}

/// Scalar convenience wrapper around [`integrate_vec`].
pub fn integrate<F>(f: F, a: f64, b: f64, tol: &Tolerance) -> Result<f64, QuadratureError>
where
    F: Fn(f64) -> f64,
{
    integrate_vec(|x| [f(x)], a, b, tol).map(|e| e.value[0])
}

/// Panel breakpoints in units of the natural scale of the integrand.
pub const HALF_LINE_SPLITS: [f64; 4] = [0.0, 1.0, 10.0, 50.0];

/// `∫₀^∞ f(x) dx` for integrands decaying at least like `e^{-x/scale}`.
///
/// The range is split at `scale · {1, 10, 50}`; the finite panels are
/// integrated adaptively and the tail `[50·scale, ∞)` by Gauss–Laguerre with
/// the exponential weight factored out, using two rule orders as the error
/// estimate.
pub fn integrate_half_line<const N: usize, F>(f: F, scale: f64, tol: &Tolerance) -> Result<Estimate<N>, QuadratureError>
where
    F: Fn(f64) -> [f64; N],
{
    let x_tail = HALF_LINE_SPLITS[3] * scale;
    let tail_with = |rule: &Rule| -> Result<[f64; N], QuadratureError> {
        let mut acc = [0.0; N];
        for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
            let x = x_tail + scale * t;
            let v = f(x);
            check_finite(&v, x)?;
            let factor = w * scale * t.exp();
            for i in 0..N {
                acc[i] += factor * v[i];
            }
        }
        Ok(acc)
    };
    let (low, high) = laguerre_pair();
    let coarse = tail_with(low)?;
    let fine = tail_with(high)?;
    let tail_err: [f64; N] = std::array::from_fn(|i| (fine[i] - coarse[i]).abs());

    let breakpoints: Vec<f64> = HALF_LINE_SPLITS.iter().map(|s| s * scale).collect();
    let mut est = adaptive(&f, &breakpoints, tol, (fine, tail_err))?;
    est.evaluations += low.nodes.len() + high.nodes.len();
    Ok(est)
}
