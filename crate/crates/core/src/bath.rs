//! Model and bath parameters, the spectral measure, and the frame-dependent
//! displacement weight `F(ω)` with its renormalization integrals.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::quadrature::{integrate_half_line, Estimate, Tolerance};
use crate::{Error, Result};

/// Two-level system: `H_S = (ε/2)σ_z + (Δ/2)σ_x` at inverse temperature `β`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub epsilon: f64,
    pub delta: f64,
    pub beta: f64,
}

impl ModelParams {
    pub fn new(epsilon: f64, delta: f64, beta: f64) -> Result<Self> {
        let m = Self { epsilon, delta, beta };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.epsilon.is_finite() {
            return Err(Error::InvalidParameter(format!("epsilon = {}", self.epsilon)));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidParameter(format!("delta = {} must be >= 0", self.delta)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("beta = {} must be > 0", self.beta)));
        }
        Ok(())
    }

    /// Level splitting `η = √(ε² + Δ_R²)` for a renormalized tunneling `Δ_R`.
    pub fn eta(&self, delta_r: f64) -> f64 {
        self.epsilon.hypot(delta_r)
    }

    /// Isolated-system `⟨σ_z⟩ = -(ε/η) tanh(βη/2)` for tunneling `Δ_R`.
    pub fn bare_sigma_z(&self, delta_r: f64) -> f64 {
        let eta = self.eta(delta_r);
        if eta == 0.0 {
            return 0.0;
        }
        -(self.epsilon / eta) * (0.5 * self.beta * eta).tanh()
    }
}

/// Super-ohmic bath `J(ω) = (γ/2)(ω/ω_c)³ e^{-ω/ω_c}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BathParams {
    pub gamma: f64,
    pub omega_c: f64,
}

impl BathParams {
    pub fn new(gamma: f64, omega_c: f64) -> Result<Self> {
        let b = Self { gamma, omega_c };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma = {} must be >= 0", self.gamma)));
        }
        if !(self.omega_c > 0.0 && self.omega_c.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "omega_c = {} must be > 0",
                self.omega_c
            )));
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn density_unchecked(&self, omega: f64) -> f64 {
        let x = omega / self.omega_c;
        0.5 * self.gamma * x * x * x * (-x).exp()
    }
}

/// `J(ω)` for the super-ohmic bath.
pub fn spectral_density(omega: f64, bath: &BathParams) -> Result<f64> {
    if omega.is_nan() || omega < 0.0 {
        return Err(Error::Domain(format!("spectral density needs omega >= 0, got {omega}")));
    }
    Ok(bath.density_unchecked(omega))
}

/// One discrete oscillator, contributing `π g² δ(ω − ω_k)` to `J(ω)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BathMode {
    pub omega: f64,
    pub coupling: f64,
}

/// The measure `dω J(ω)/π` that every bath integral is taken against.
#[derive(Clone, Debug, PartialEq)]
pub enum SpectralDensity {
    SuperOhmic(BathParams),
    Modes(Vec<BathMode>),
}

impl From<BathParams> for SpectralDensity {
    fn from(b: BathParams) -> Self {
        SpectralDensity::SuperOhmic(b)
    }
}

/// Below this fraction of `ω_c` integrands are evaluated at the cut point;
/// every integrand used here is continuous at `ω = 0`.
const SMALL_OMEGA: f64 = 1e-8;

impl SpectralDensity {
    /// True when the system-bath coupling vanishes identically.
    pub fn is_uncoupled(&self) -> bool {
        match self {
            SpectralDensity::SuperOhmic(b) => b.gamma == 0.0,
            SpectralDensity::Modes(m) => m.iter().all(|k| k.coupling == 0.0),
        }
    }

    /// Frequency scale used to place quadrature panels.
    pub fn scale(&self) -> f64 {
        match self {
            SpectralDensity::SuperOhmic(b) => b.omega_c,
            SpectralDensity::Modes(m) => m.iter().map(|k| k.omega).fold(0.0, f64::max),
        }
    }

    /// `∫₀^∞ (dω/π) J(ω) f(ω)`, or `Σ_k g_k² f(ω_k)` for discrete modes.
    ///
    /// `f` must be finite for `ω > 0`; `J(ω) f(ω)` must stay bounded as
    /// `ω → 0`.
    pub fn integrate<const N: usize, F>(&self, f: F, tol: &Tolerance) -> Result<Estimate<N>>
    where
        F: Fn(f64) -> [f64; N],
    {
        match self {
            SpectralDensity::SuperOhmic(b) => {
                if b.gamma == 0.0 {
                    return Ok(Estimate {
                        value: [0.0; N],
                        error: [0.0; N],
                        evaluations: 0,
                    });
                }
                let floor = SMALL_OMEGA * b.omega_c;
                let est = integrate_half_line(
                    |w| {
                        let w = w.max(floor);
                        let j = b.density_unchecked(w) / PI;
                        let v = f(w);
                        std::array::from_fn(|i| j * v[i])
                    },
                    b.omega_c,
                    tol,
                )?;
                Ok(est)
            }
            SpectralDensity::Modes(modes) => {
                let mut value = [0.0; N];
                for m in modes {
                    if m.coupling == 0.0 {
                        continue;
                    }
                    let v = f(m.omega);
                    let g2 = m.coupling * m.coupling;
                    for i in 0..N {
                        value[i] += g2 * v[i];
                    }
                }
                Ok(Estimate {
                    value,
                    error: [0.0; N],
                    evaluations: modes.len(),
                })
            }
        }
    }
}

/// Imaginary-time kernels on `[0, β]`, written with decaying exponentials
/// only so that large `βω` cannot overflow.
pub(crate) mod kernel {
    /// `coth(βω/2)`.
    #[inline]
    pub fn coth_half(beta: f64, omega: f64) -> f64 {
        1.0 / (0.5 * beta * omega).tanh()
    }

    /// `cosh((β/2 − τ)ω) / sinh(βω/2)`.
    #[inline]
    pub fn cosh_ratio(beta: f64, tau: f64, omega: f64) -> f64 {
        ((-tau * omega).exp() + (-(beta - tau) * omega).exp()) / -(-beta * omega).exp_m1()
    }

    /// `sinh((β/2 − τ)ω) / sinh(βω/2)`.
    #[inline]
    pub fn sinh_ratio(beta: f64, tau: f64, omega: f64) -> f64 {
        ((-tau * omega).exp() - (-(beta - tau) * omega).exp()) / -(-beta * omega).exp_m1()
    }
}

/// Which unitary dresses the bath.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Frame {
    /// No transformation, `F ≡ 0`.
    Original,
    /// Full displacement, `F ≡ 1`.
    FullPolaron,
    /// Displacement weight from free-energy minimization.
    Variational,
}

/// A frame together with its renormalization data.
///
/// `shift` is the scalar energy `∫(dω/π)(J/ω)F(F−2)` added to `H_S`; it only
/// enters free energies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameSolution {
    pub frame: Frame,
    pub b: f64,
    pub delta_r: f64,
    pub shift: f64,
    pub eta: f64,
}

impl FrameSolution {
    pub fn original(model: &ModelParams) -> Self {
        Self {
            frame: Frame::Original,
            b: 1.0,
            delta_r: model.delta,
            shift: 0.0,
            eta: model.eta(model.delta),
        }
    }

    pub fn full_polaron(model: &ModelParams, bath: &SpectralDensity, tol: &Tolerance) -> Result<Self> {
        let b = renormalization_integral(0.0, model, bath, tol)?;
        let shift = shift_integral(|_| 1.0, bath, tol)?;
        let delta_r = b * model.delta;
        Ok(Self {
            frame: Frame::FullPolaron,
            b,
            delta_r,
            shift,
            eta: model.eta(delta_r),
        })
    }

    /// Variational frame for a given renormalization constant, normally a
    /// root of the self-consistency condition.
    pub fn variational(model: &ModelParams, bath: &SpectralDensity, b: f64, tol: &Tolerance) -> Result<Self> {
        check_b(b)?;
        let delta_r = b * model.delta;
        let shift = shift_integral(|w| variational_weight(w, delta_r, model), bath, tol)?;
        Ok(Self {
            frame: Frame::Variational,
            b,
            delta_r,
            shift,
            eta: model.eta(delta_r),
        })
    }

    /// `F(ω)` for this frame.
    #[inline]
    pub fn weight(&self, omega: f64, model: &ModelParams) -> f64 {
        match self.frame {
            Frame::Original => 0.0,
            Frame::FullPolaron => 1.0,
            Frame::Variational => variational_weight(omega, self.delta_r, model),
        }
    }
}

fn check_b(b: f64) -> Result<()> {
    if (0.0..=1.0).contains(&b) {
        Ok(())
    } else {
        Err(Error::Domain(format!("renormalization constant {b} outside [0, 1]")))
    }
}

/// `F(ω) = [1 + (Δ_R²/(ωη)) coth(βω/2) tanh(βη/2)]⁻¹`, rearranged as
/// `x / (x + c)` with `x = ω tanh(βω/2)` so that `F(0) = 0` is exact.
#[inline]
pub fn variational_weight(omega: f64, delta_r: f64, model: &ModelParams) -> f64 {
    if delta_r == 0.0 {
        return 1.0;
    }
    let eta = model.eta(delta_r);
    let c = if eta > 0.0 {
        delta_r * delta_r * (0.5 * model.beta * eta).tanh() / eta
    } else {
        0.5 * delta_r * delta_r * model.beta
    };
    let x = omega * (0.5 * model.beta * omega).tanh();
    x / (x + c)
}

/// `F(ω)` for a frame; `ω` must be positive (the `ω → 0` limit is returned
/// for `ω = 0`).
pub fn displacement_weight(omega: f64, frame: &FrameSolution, model: &ModelParams) -> Result<f64> {
    if omega.is_nan() || omega < 0.0 {
        return Err(Error::Domain(format!(
            "displacement weight needs omega >= 0, got {omega}"
        )));
    }
    Ok(frame.weight(omega, model))
}

/// `exp[-2 ∫(dω/π)(J/ω²) F² coth(βω/2)]` with `F` built from `Δ_R = B·Δ`.
fn renormalization_integral(b_trial: f64, model: &ModelParams, bath: &SpectralDensity, tol: &Tolerance) -> Result<f64> {
    let delta_r = b_trial * model.delta;
    let beta = model.beta;
    let est = bath.integrate(
        |w| {
            let f = variational_weight(w, delta_r, model);
            [f * f * kernel::coth_half(beta, w) / (w * w)]
        },
        tol,
    )?;
    Ok((-2.0 * est.value[0]).exp())
}

/// Right-hand side of the self-consistency condition for `B`.
pub fn renormalization_rhs(b_trial: f64, model: &ModelParams, bath: &SpectralDensity, tol: &Tolerance) -> Result<f64> {
    check_b(b_trial)?;
    renormalization_integral(b_trial, model, bath, tol)
}

/// `∫(dω/π)(J(ω)/ω) F(ω)(F(ω) − 2)`; never positive for `F ∈ [0, 1]`.
pub fn shift_integral<W>(weight: W, bath: &SpectralDensity, tol: &Tolerance) -> Result<f64>
where
    W: Fn(f64) -> f64,
{
    let est = bath.integrate(
        |w| {
            let f = weight(w);
            [f * (f - 2.0) / w]
        },
        tol,
    )?;
    Ok(est.value[0])
}
