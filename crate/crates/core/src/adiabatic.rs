//! Exact partition function for a static bath (`ω_c ≪ 1/β, Δ`).
//!
//! A frozen bath acts as a Gaussian random bias `x` of variance
//! `χ = 2γ/(πβ)`, so
//! `Z = ∫dx N(x; 0, χ) 2cosh(β√((Δ/2)² + (x + ε/2)²))`.

use std::sync::OnceLock;

use crate::bath::ModelParams;
use crate::quadrature::{gauss_legendre, Rule};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdiabaticParams {
    pub chi: f64,
    pub model: ModelParams,
}

impl AdiabaticParams {
    pub fn new(chi: f64, model: ModelParams) -> Result<Self> {
        if !(chi >= 0.0 && chi.is_finite()) {
            return Err(Error::InvalidParameter(format!("chi = {chi} must be >= 0")));
        }
        model.validate()?;
        Ok(Self { chi, model })
    }

    /// `χ = 2γ/(πβ)`, the zero-frequency weight of the bath correlation.
    pub fn from_gamma(gamma: f64, model: ModelParams) -> Result<Self> {
        if gamma.is_nan() || gamma < 0.0 {
            return Err(Error::InvalidParameter(format!("gamma = {gamma} must be >= 0")));
        }
        Self::new(2.0 * gamma / (std::f64::consts::PI * model.beta), model)
    }
}

const PANELS: usize = 400;
const PANEL_ORDER: usize = 20;

fn panel_rule() -> &'static Rule {
    static RULE: OnceLock<Rule> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(PANEL_ORDER))
}

fn ln_two_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p()
}

fn energy(x: f64, epsilon: f64, delta: f64) -> f64 {
    (0.5 * delta).hypot(x + 0.5 * epsilon)
}

/// Nodes `y` and weights of the standard-normal integral. The range is
/// `|y| ≤ 12 + β√χ`, wide enough to contain the tilted peak at `y ≈ ±β√χ`;
/// it depends on `χ` only, so `ln Z` is smooth in `ε`.
fn normal_nodes(chi: f64, beta: f64) -> impl Iterator<Item = (f64, f64)> {
    let half = 12.0 + beta * chi.sqrt();
    let width = 2.0 * half / PANELS as f64;
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    (0..PANELS).flat_map(move |k| {
        let a = -half + k as f64 * width;
        panel_rule()
            .mapped(a, a + width)
            .map(move |(y, w)| (y, w * norm * (-0.5 * y * y).exp()))
            .collect::<Vec<_>>()
    })
}

/// `ln Z` at an explicit bias, evaluated with a log-sum-exp over the nodes.
fn ln_partition_at(chi: f64, epsilon: f64, delta: f64, beta: f64) -> f64 {
    if chi == 0.0 {
        return ln_two_cosh(beta * energy(0.0, epsilon, delta));
    }
    let s = chi.sqrt();
    let terms: Vec<(f64, f64)> = normal_nodes(chi, beta)
        .filter(|&(_, w)| w > 0.0)
        .map(|(y, w)| (w.ln(), ln_two_cosh(beta * energy(s * y, epsilon, delta))))
        .collect();
    let peak = terms.iter().map(|(lw, g)| lw + g).fold(f64::NEG_INFINITY, f64::max);
    peak + terms.iter().map(|(lw, g)| (lw + g - peak).exp()).sum::<f64>().ln()
}

pub fn ln_partition_function_adiabatic(params: &AdiabaticParams) -> f64 {
    let m = &params.model;
    ln_partition_at(params.chi, m.epsilon, m.delta, m.beta)
}

pub fn partition_function_adiabatic(params: &AdiabaticParams) -> Result<f64> {
    let z = ln_partition_function_adiabatic(params).exp();
    if z.is_finite() {
        Ok(z)
    } else {
        Err(Error::Domain(format!(
            "partition function overflows at chi = {}",
            params.chi
        )))
    }
}

pub const FD_STEP: f64 = 1e-5;

/// `⟨σ_z⟩ = −(2/β)∂_ε ln Z` by a central difference with step `h` and one
/// Richardson extrapolation against step `h/2`.
pub fn sigma_z_adiabatic(params: &AdiabaticParams) -> Result<f64> {
    let m = &params.model;
    let ln_z = |e: f64| ln_partition_at(params.chi, e, m.delta, m.beta);
    let d = |h: f64| (ln_z(m.epsilon + h) - ln_z(m.epsilon - h)) / (2.0 * h);
    let derivative = (4.0 * d(0.5 * FD_STEP) - d(FD_STEP)) / 3.0;
    let s = -2.0 / m.beta * derivative;
    if s.is_finite() {
        Ok(s)
    } else {
        Err(Error::Domain("adiabatic derivative is not finite".into()))
    }
}

/// The same expectation differentiated under the integral:
/// `⟨σ_z⟩ = −⟨tanh(βE)(x + ε/2)/E⟩` in the `cosh`-weighted measure.
pub fn sigma_z_adiabatic_analytic(params: &AdiabaticParams) -> f64 {
    let m = &params.model;
    let term = |x: f64| {
        let e = energy(x, m.epsilon, m.delta);
        if e == 0.0 {
            0.0
        } else {
            -(m.beta * e).tanh() * (x + 0.5 * m.epsilon) / e
        }
    };
    if params.chi == 0.0 {
        return term(0.0);
    }
    let s = params.chi.sqrt();
    let weights: Vec<(f64, f64)> = normal_nodes(params.chi, m.beta)
        .filter(|&(_, w)| w > 0.0)
        .map(|(y, w)| (s * y, w.ln() + ln_two_cosh(m.beta * energy(s * y, m.epsilon, m.delta))))
        .collect();
    let peak = weights.iter().map(|w| w.1).fold(f64::NEG_INFINITY, f64::max);
    let (mut num, mut den) = (0.0, 0.0);
    for (x, lw) in weights {
        let w = (lw - peak).exp();
        num += w * term(x);
        den += w;
    }
    num / den
}
