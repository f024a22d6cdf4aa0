//! Exact diagonalization of the two-level system coupled to a few discrete
//! oscillators, used as an independent reference on small instances.
//!
//! The continuous spectral density is replaced by a `K`-point Gauss rule for
//! the measure `J(ω)/π` on `[0, 20ω_c]`, so that `J(ω) = π Σ_k g_k² δ(ω − ω_k)`
//! reproduces the first `2K` frequency moments. The oscillators are truncated
//! to `n_max` levels each, and the product basis is further restricted to
//! states whose bath energy lies below a window.

use std::collections::HashMap;

use nalgebra::{DMatrix, Matrix2, SymmetricEigen};

use crate::bath::{BathMode, BathParams, ModelParams, SpectralDensity};
use crate::quadrature::{gauss_from_recurrence, gauss_legendre};
use crate::{Error, ReducedDensityMatrix, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteBath {
    pub modes: Vec<BathMode>,
    /// Oscillator levels kept per mode, `|0⟩ … |n_max − 1⟩`.
    pub n_max: usize,
}

impl DiscreteBath {
    pub fn new(modes: Vec<BathMode>, n_max: usize) -> Result<Self> {
        if modes.is_empty()
            || modes
                .iter()
                .any(|m| m.omega.is_nan() || m.omega <= 0.0 || !m.coupling.is_finite())
        {
            return Err(Error::InvalidParameter(
                "modes need omega > 0 and finite coupling".into(),
            ));
        }
        if n_max < 2 {
            return Err(Error::InvalidParameter(format!("n_max = {n_max} must be >= 2")));
        }
        Ok(Self { modes, n_max })
    }

    pub fn spectral_density(&self) -> SpectralDensity {
        SpectralDensity::Modes(self.modes.clone())
    }

    /// `Σ_k g_k²/ω_k`, the polaron energy scale.
    pub fn reorganization(&self) -> f64 {
        self.modes.iter().map(|m| m.coupling * m.coupling / m.omega).sum()
    }

    /// Smallest `n_max` suggested by the displacement of each mode,
    /// `4(g/ω)² + 10`.
    pub fn suggested_levels(&self) -> usize {
        self.modes
            .iter()
            .map(|m| (4.0 * (m.coupling / m.omega).powi(2) + 10.0).ceil() as usize)
            .max()
            .unwrap_or(10)
    }
}

const SUPPORT_CUTOFFS: f64 = 20.0;
const DISCRETIZATION_PANELS: usize = 400;

/// Gauss discretization of `J(ω)/π` on `[0, 20ω_c]` with `k` nodes, via the
/// Stieltjes procedure on a fine Gauss–Legendre discretization followed by
/// Golub–Welsch. For `γ = 0` the `γ = 1` frequencies are kept with zero
/// couplings.
pub fn discretize_bath(k: usize, bath: &BathParams, n_max: usize) -> Result<DiscreteBath> {
    bath.validate()?;
    if k == 0 {
        return Err(Error::InvalidParameter("mode count must be >= 1".into()));
    }
    let shape = BathParams::new(if bath.gamma == 0.0 { 1.0 } else { bath.gamma }, bath.omega_c)?;
    let rule = gauss_legendre(20);
    let top = SUPPORT_CUTOFFS * bath.omega_c;
    let width = top / DISCRETIZATION_PANELS as f64;
    let (mut x, mut w) = (Vec::new(), Vec::new());
    for p in 0..DISCRETIZATION_PANELS {
        for (node, weight) in rule.mapped(p as f64 * width, (p + 1) as f64 * width) {
            x.push(node);
            w.push(weight * shape.density_unchecked(node) / std::f64::consts::PI);
        }
    }
    if k > x.len() / 4 {
        return Err(Error::InvalidParameter(format!(
            "mode count {k} too large for the discretization"
        )));
    }
    let mu0: f64 = w.iter().sum();
    let (mut alpha, mut beta_sq) = (Vec::with_capacity(k), Vec::with_capacity(k));
    let mut prev = vec![0.0; x.len()];
    let mut cur = vec![1.0; x.len()];
    let mut norm_prev = 1.0;
    for j in 0..k {
        let norm: f64 = (0..x.len()).map(|i| w[i] * cur[i] * cur[i]).sum();
        let a = (0..x.len()).map(|i| w[i] * x[i] * cur[i] * cur[i]).sum::<f64>() / norm;
        let b = if j == 0 { 0.0 } else { norm / norm_prev };
        alpha.push(a);
        if j > 0 {
            beta_sq.push(b);
        }
        let next: Vec<f64> = (0..x.len()).map(|i| (x[i] - a) * cur[i] - b * prev[i]).collect();
        prev = std::mem::replace(&mut cur, next);
        norm_prev = norm;
    }
    let gauss = gauss_from_recurrence(&alpha, &beta_sq, mu0);
    let scale = if bath.gamma == 0.0 { 0.0 } else { 1.0 };
    let modes = gauss
        .nodes
        .iter()
        .zip(&gauss.weights)
        .map(|(&omega, &weight)| BathMode {
            omega,
            coupling: scale * weight.sqrt(),
        })
        .collect();
    DiscreteBath::new(modes, n_max)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactSettings {
    /// Largest bath energy `Σ n_k ω_k` kept; `None` picks
    /// `40/β + 10 Σ g_k²/ω_k + 2 max ω_k`.
    pub energy_window: Option<f64>,
    pub dimension_cap: usize,
    /// Largest entrywise change of `ρ_S` accepted when the truncation is
    /// enlarged.
    pub convergence_tol: f64,
    pub check_convergence: bool,
}

impl Default for ExactSettings {
    fn default() -> Self {
        Self {
            energy_window: None,
            dimension_cap: 6000,
            convergence_tol: 1e-6,
            check_convergence: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactState {
    pub rho: ReducedDensityMatrix,
    pub dimension: usize,
    /// Change of `ρ_S` under `n_max → n_max + 2` with a wider window, when
    /// checked.
    pub truncation_change: Option<f64>,
}

fn default_window(bath: &DiscreteBath, beta: f64) -> f64 {
    let top = bath.modes.iter().map(|m| m.omega).fold(0.0, f64::max);
    40.0 / beta + 10.0 * bath.reorganization() + 2.0 * top
}

/// Occupation vectors with `n_k < n_max` and `Σ n_k ω_k ≤ window`.
fn bath_states(bath: &DiscreteBath, window: f64, cap: usize) -> Result<Vec<Vec<u16>>> {
    let mut states = vec![Vec::new()];
    for m in &bath.modes {
        let mut next = Vec::new();
        for s in &states {
            let used: f64 = s.iter().zip(&bath.modes).map(|(&n, md)| n as f64 * md.omega).sum();
            for n in 0..bath.n_max {
                if used + n as f64 * m.omega > window * (1.0 + 1e-12) {
                    break;
                }
                let mut t = s.clone();
                t.push(n as u16);
                next.push(t);
            }
        }
        states = next;
        if 2 * states.len() > cap {
            return Err(Error::DimensionCap {
                dimension: 2 * states.len(),
                cap,
            });
        }
    }
    Ok(states)
}

fn diagonalize(
    bath: &DiscreteBath,
    model: &ModelParams,
    window: f64,
    cap: usize,
) -> Result<(ReducedDensityMatrix, usize)> {
    let states = bath_states(bath, window, cap)?;
    let nb = states.len();
    let index: HashMap<&[u16], usize> = states.iter().enumerate().map(|(i, s)| (s.as_slice(), i)).collect();
    let dim = 2 * nb;
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for (b, s) in states.iter().enumerate() {
        let e_bath: f64 = s.iter().zip(&bath.modes).map(|(&n, m)| n as f64 * m.omega).sum();
        h[(b, b)] = e_bath + 0.5 * model.epsilon;
        h[(nb + b, nb + b)] = e_bath - 0.5 * model.epsilon;
        h[(b, nb + b)] = 0.5 * model.delta;
        h[(nb + b, b)] = 0.5 * model.delta;
        for (k, m) in bath.modes.iter().enumerate() {
            if m.coupling == 0.0 {
                continue;
            }
            let mut up = s.clone();
            up[k] += 1;
            if let Some(&c) = index.get(up.as_slice()) {
                // σ_z g (b + b†): +g on the upper level, −g on the lower.
                let v = m.coupling * ((s[k] + 1) as f64).sqrt();
                for (spin, sign) in [(0, 1.0), (nb, -1.0)] {
                    h[(spin + b, spin + c)] = sign * v;
                    h[(spin + c, spin + b)] = sign * v;
                }
            }
        }
    }
    let eig = SymmetricEigen::new(h);
    let e0 = eig.eigenvalues.min();
    let mut rho = Matrix2::<f64>::zeros();
    for (k, &e) in eig.eigenvalues.iter().enumerate() {
        let w = (-model.beta * (e - e0)).exp();
        if w < 1e-300 {
            continue;
        }
        let v = eig.eigenvectors.column(k);
        let (up, down) = (v.rows(0, nb), v.rows(nb, nb));
        rho[(0, 0)] += w * up.dot(&up);
        rho[(1, 1)] += w * down.dot(&down);
        rho[(0, 1)] += w * up.dot(&down);
    }
    rho[(1, 0)] = rho[(0, 1)];
    Ok((ReducedDensityMatrix::from_real(rho)?, dim))
}

/// Thermal `ρ_S` of the truncated model, with an optional convergence check
/// against a larger truncation.
pub fn exact_rdm(bath: &DiscreteBath, model: &ModelParams, settings: &ExactSettings) -> Result<ExactState> {
    model.validate()?;
    let window = settings
        .energy_window
        .unwrap_or_else(|| default_window(bath, model.beta));
    let (rho, dimension) = diagonalize(bath, model, window, settings.dimension_cap)?;
    let mut truncation_change = None;
    if settings.check_convergence {
        let wider = DiscreteBath {
            modes: bath.modes.clone(),
            n_max: bath.n_max + 2,
        };
        let (rho_wide, _) = diagonalize(&wider, model, 1.5 * window, settings.dimension_cap)?;
        let change = rho.max_abs_diff(&rho_wide);
        if change > settings.convergence_tol {
            return Err(Error::TruncationNotConverged {
                change,
                tolerance: settings.convergence_tol,
            });
        }
        truncation_change = Some(change);
    }
    Ok(ExactState {
        rho,
        dimension,
        truncation_change,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> ModelParams {
        ModelParams::new(1.0, 3.0, 1.0).unwrap()
    }

    #[test]
    fn single_mode_sits_at_the_mean_frequency() {
        // ∫ω J dω / ∫J dω = 4ω_c for the ω³e^{−ω/ω_c} shape (up to the 20ω_c
        // truncation), and Σg² = ∫J/π = 3γω_c/π.
        let b = BathParams::new(2.0, 5.0).unwrap();
        let d = discretize_bath(1, &b, 10).unwrap();
        assert_eq!(d.modes.len(), 1);
        assert!((d.modes[0].omega / 20.0 - 1.0).abs() < 1e-4);
        let g2 = d.modes[0].coupling.powi(2);
        assert!((g2 / (3.0 * 2.0 * 5.0 / std::f64::consts::PI) - 1.0).abs() < 1e-4);
    }

    #[test]
    fn uncoupled_discretization() {
        let d = discretize_bath(3, &BathParams::new(0.0, 5.0).unwrap(), 4).unwrap();
        assert!(d.modes.iter().all(|m| m.coupling == 0.0 && m.omega > 0.0));
        let s = exact_rdm(&d, &model(), &ExactSettings::default()).unwrap();
        let m = model();
        assert!((s.rho.sigma_z() - m.bare_sigma_z(m.delta)).abs() < 1e-12);
    }

    #[test]
    fn reorganization_sum_converges() {
        // Σ g²/ω² approaches ∫(dω/π) J/ω² over the same support [0, 20ω_c].
        let b = BathParams::new(1.0, 2.0).unwrap();
        let rule = gauss_legendre(40);
        let target: f64 = (0..200)
            .flat_map(|p| rule.mapped(p as f64 * 0.2, (p + 1) as f64 * 0.2).collect::<Vec<_>>())
            .map(|(w, wt)| wt * b.density_unchecked(w) / (std::f64::consts::PI * w * w))
            .sum();
        let err = |k| {
            let d = discretize_bath(k, &b, 2).unwrap();
            (d.modes.iter().map(|m| (m.coupling / m.omega).powi(2)).sum::<f64>() - target).abs()
        };
        let errs: Vec<f64> = [2, 4, 8, 16].into_iter().map(err).collect();
        assert!(errs.windows(2).all(|w| w[1] < 0.7 * w[0]), "{errs:?}");
        assert!(errs[3] < 0.02 * target);
    }

    #[test]
    fn dimension_cap_is_enforced() {
        let d = discretize_bath(4, &BathParams::new(1.0, 0.5).unwrap(), 10).unwrap();
        let s = ExactSettings {
            dimension_cap: 100,
            energy_window: Some(1e6),
            ..Default::default()
        };
        assert!(matches!(exact_rdm(&d, &model(), &s), Err(Error::DimensionCap { .. })));
    }

    #[test]
    fn output_is_a_physical_state() {
        let d = discretize_bath(2, &BathParams::new(1.0, 2.0).unwrap(), 12).unwrap();
        let s = exact_rdm(&d, &model(), &ExactSettings::default()).unwrap();
        assert!(s.rho.min_eigenvalue() >= 0.0);
        assert!(s.truncation_change.unwrap() < 1e-6);
    }

    #[test]
    fn truncation_error_shrinks() {
        let d = |n| discretize_bath(1, &BathParams::new(4.0, 0.5).unwrap(), n).unwrap();
        let loose = ExactSettings {
            check_convergence: false,
            energy_window: Some(1e6),
            ..Default::default()
        };
        let sz = |n| exact_rdm(&d(n), &model(), &loose).unwrap().rho.sigma_z();
        let reference = sz(60);
        let errs: Vec<f64> = [6, 10, 14, 18].iter().map(|&n| (sz(n) - reference).abs()).collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    }
}
