//! Imaginary-time bath correlation functions `C_nm(τ)` of the transformed
//! interaction operators.
//!
//! `C_zy` is purely imaginary. It is represented by the real kernel `Γ(τ)`
//! with `C_zy(τ) = iΓ(τ)` and `C_yz(τ) = −iΓ(τ)`; the factor `i` is restored
//! when the channels are contracted with Pauli products.

use crate::bath::{kernel, FrameSolution, ModelParams, SpectralDensity};
use crate::parallel::Execution;
use crate::quadrature::Tolerance;
use crate::{Error, Frame, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Channel {
    XX,
    YY,
    ZZ,
    /// `Γ(τ)`, the coefficient of `i` in `C_zy(τ)`.
    ZY,
}

impl Channel {
    pub const ALL: [Channel; 4] = [Channel::XX, Channel::YY, Channel::ZZ, Channel::ZY];
}

/// All channels and `φ(τ)` at one imaginary time.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CorrelationValues {
    pub xx: f64,
    pub yy: f64,
    pub zz: f64,
    pub zy: f64,
    pub phi: f64,
}

impl CorrelationValues {
    pub fn get(&self, channel: Channel) -> f64 {
        match channel {
            Channel::XX => self.xx,
            Channel::YY => self.yy,
            Channel::ZZ => self.zz,
            Channel::ZY => self.zy,
        }
    }
}

/// Below this `φ(0)` the plain `sinh` forms of `C_xx`, `C_yy` cannot overflow.
const PHI_STABLE: f64 = 50.0;

/// Correlation functions for one frame, with `φ(0)` precomputed.
#[derive(Clone, Debug)]
pub struct BathCorrelations {
    model: ModelParams,
    frame: FrameSolution,
    bath: SpectralDensity,
    tol: Tolerance,
    phi0: f64,
}

impl BathCorrelations {
    pub fn new(frame: &FrameSolution, model: &ModelParams, bath: &SpectralDensity, tol: &Tolerance) -> Result<Self> {
        let mut c = Self {
            model: *model,
            frame: *frame,
            bath: bath.clone(),
            tol: *tol,
            phi0: 0.0,
        };
        c.phi0 = c.phi_unchecked(0.0)?;
        Ok(c)
    }

    pub fn frame(&self) -> &FrameSolution {
        &self.frame
    }

    pub fn model(&self) -> &ModelParams {
        &self.model
    }

    /// `φ(0)`; equals `−2 ln B` when `B` is self-consistent for the frame.
    pub fn phi0(&self) -> f64 {
        self.phi0
    }

    fn check_tau(&self, tau: f64) -> Result<()> {
        if (0.0..=self.model.beta).contains(&tau) {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "imaginary time {tau} outside [0, {}]",
                self.model.beta
            )))
        }
    }

    fn trivial(&self) -> bool {
        self.bath.is_uncoupled()
    }

    fn phi_unchecked(&self, tau: f64) -> Result<f64> {
        if self.trivial() || self.frame.frame == Frame::Original {
            return Ok(0.0);
        }
        let (m, frame, beta) = (&self.model, &self.frame, self.model.beta);
        let est = self.bath.integrate(
            |w| {
                let f = frame.weight(w, m);
                [4.0 * f * f * kernel::cosh_ratio(beta, tau, w) / (w * w)]
            },
            &self.tol,
        )?;
        Ok(est.value[0])
    }

    /// `φ(τ) = 4∫(dω/π)(J/ω²)F² cosh((β/2−τ)ω)/sinh(βω/2)`.
    pub fn phi(&self, tau: f64) -> Result<f64> {
        self.check_tau(tau)?;
        self.phi_unchecked(tau)
    }

    /// Every channel at `τ`, from one vector-valued quadrature.
    pub fn at(&self, tau: f64) -> Result<CorrelationValues> {
        self.check_tau(tau)?;
        if self.trivial() {
            return Ok(CorrelationValues::default());
        }
        let (m, frame, beta) = (&self.model, &self.frame, self.model.beta);
        let (phi, zz, gamma) = match frame.frame {
            Frame::Original => {
                let est = self.bath.integrate(|w| [kernel::cosh_ratio(beta, tau, w)], &self.tol)?;
                (0.0, est.value[0], 0.0)
            }
            Frame::FullPolaron => (self.phi_unchecked(tau)?, 0.0, 0.0),
            Frame::Variational => {
                let est = self.bath.integrate(
                    |w| {
                        let f = frame.weight(w, m);
                        let c = kernel::cosh_ratio(beta, tau, w);
                        let s = kernel::sinh_ratio(beta, tau, w);
                        let g = 1.0 - f;
                        [4.0 * f * f * c / (w * w), g * g * c, f * g * s / w]
                    },
                    &self.tol,
                )?;
                (est.value[0], est.value[1], frame.delta_r * est.value[2])
            }
        };
        let (xx, yy) = self.dressed_tunneling(phi);
        Ok(CorrelationValues {
            xx,
            yy,
            zz,
            zy: gamma,
            phi,
        })
    }

    /// `C_xx = (Δ_R²/8)(e^φ + e^{−φ} − 2)` and `C_yy = (Δ_R²/8)(e^φ − e^{−φ})`.
    ///
    /// At large `φ(0)` these are evaluated as
    /// `(Δ_R² e^{φ(0)}/8)(e^{φ−φ(0)} ± e^{−φ−φ(0)} …)` with every exponent
    /// non-positive.
    fn dressed_tunneling(&self, phi: f64) -> (f64, f64) {
        let dr = self.frame.delta_r;
        if dr == 0.0 || self.frame.frame == Frame::Original {
            return (0.0, 0.0);
        }
        if self.phi0 < PHI_STABLE {
            let s = (0.5 * phi).sinh();
            (0.5 * dr * dr * s * s, 0.25 * dr * dr * phi.sinh())
        } else {
            let p0 = self.phi0;
            let pref = (2.0 * dr.ln() + p0).exp() / 8.0;
            let up = (phi - p0).exp();
            let down = (-phi - p0).exp();
            (pref * (up + down - 2.0 * (-p0).exp()), pref * (up - down))
        }
    }

    pub fn channel(&self, channel: Channel, tau: f64) -> Result<f64> {
        Ok(self.at(tau)?.get(channel))
    }
}

/// `φ(τ)` for a frame.
pub fn phi(tau: f64, frame: &FrameSolution, model: &ModelParams, bath: &SpectralDensity) -> Result<f64> {
    BathCorrelations::new(frame, model, bath, &Tolerance::default())?.phi(tau)
}

/// One correlation channel at `τ`; see [`Channel::ZY`] for the `C_zy`
/// convention.
pub fn correlation(
    channel: Channel,
    tau: f64,
    frame: &FrameSolution,
    model: &ModelParams,
    bath: &SpectralDensity,
) -> Result<f64> {
    BathCorrelations::new(frame, model, bath, &Tolerance::default())?.channel(channel, tau)
}

/// Correlation functions tabulated on a uniform grid over `[0, β]`.
#[derive(Clone, Debug)]
pub struct CorrelationTable {
    pub tau_grid: Vec<f64>,
    pub xx: Vec<f64>,
    pub yy: Vec<f64>,
    pub zz: Vec<f64>,
    pub zy: Vec<f64>,
    pub phi: Vec<f64>,
    pub phi0: f64,
}

pub const DEFAULT_TABLE_SIZE: usize = 401;

pub fn build_correlation_table(
    grid_size: usize,
    frame: &FrameSolution,
    model: &ModelParams,
    bath: &SpectralDensity,
    tol: &Tolerance,
) -> Result<CorrelationTable> {
    if grid_size < 3 {
        return Err(Error::InvalidParameter(format!(
            "correlation table needs at least 3 points, got {grid_size}"
        )));
    }
    let corr = BathCorrelations::new(frame, model, bath, tol)?;
    let beta = model.beta;
    let last = (grid_size - 1) as f64;
    let tau_grid: Vec<f64> = (0..grid_size)
        .map(|k| {
            if k + 1 == grid_size {
                beta
            } else {
                beta * k as f64 / last
            }
        })
        .collect();
    let rows = Execution::default().map(&tau_grid, |&t| corr.at(t));
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(CorrelationTable {
        xx: rows.iter().map(|r| r.xx).collect(),
        yy: rows.iter().map(|r| r.yy).collect(),
        zz: rows.iter().map(|r| r.zz).collect(),
        zy: rows.iter().map(|r| r.zy).collect(),
        phi: rows.iter().map(|r| r.phi).collect(),
        phi0: corr.phi0(),
        tau_grid,
    })
}

impl CorrelationTable {
    pub fn values(&self, channel: Channel) -> &[f64] {
        match channel {
            Channel::XX => &self.xx,
            Channel::YY => &self.yy,
            Channel::ZZ => &self.zz,
            Channel::ZY => &self.zy,
        }
    }

    fn beta(&self) -> f64 {
        *self.tau_grid.last().unwrap()
    }

    /// Four-point Lagrange interpolation; `τ` is clamped to `[0, β]`.
    pub fn interpolate(&self, tau: f64) -> CorrelationValues {
        let n = self.tau_grid.len();
        let beta = self.beta();
        let h = beta / (n - 1) as f64;
        let t = tau.clamp(0.0, beta);
        let (start, width) = if n < 4 {
            (0, n)
        } else {
            let i = ((t / h).floor() as usize).min(n - 2);
            (i.saturating_sub(1).min(n - 4), 4)
        };
        let nodes = &self.tau_grid[start..start + width];
        let weights: Vec<f64> = (0..width)
            .map(|j| {
                (0..width)
                    .filter(|&k| k != j)
                    .map(|k| (t - nodes[k]) / (nodes[j] - nodes[k]))
                    .product()
            })
            .collect();
        let eval = |v: &[f64]| -> f64 { weights.iter().enumerate().map(|(j, w)| w * v[start + j]).sum() };
        CorrelationValues {
            xx: eval(&self.xx),
            yy: eval(&self.yy),
            zz: eval(&self.zz),
            zy: eval(&self.zy),
            phi: eval(&self.phi),
        }
    }
}
