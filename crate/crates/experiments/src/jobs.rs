//! Single-instance jobs reported as JSON.

use sbeq::pimc::{estimate, PimcSettings};
use sbeq::variational::{locate_discontinuity, Discontinuity};
use serde::Serialize;

use crate::config::{ConfigError, DiscontinuitySection, Setup};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Parameters {
    pub epsilon: f64,
    pub delta: f64,
    pub beta: f64,
    pub gamma: f64,
    pub omega_c: f64,
}

impl From<&Setup> for Parameters {
    fn from(s: &Setup) -> Self {
        Self {
            epsilon: s.model.epsilon,
            delta: s.model.delta,
            beta: s.model.beta,
            gamma: s.bath.gamma,
            omega_c: s.bath.omega_c,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PimcReport {
    pub parameters: Parameters,
    pub steps: usize,
    pub n_samples: u64,
    pub n_batches: usize,
    pub seed: u64,
    pub sigma_z: f64,
    pub sigma_z_stderr: f64,
    /// Row-major real part of `ρ_S`; the imaginary part vanishes.
    pub rho: [[f64; 2]; 2],
    pub rho_stderr: [[f64; 2]; 2],
    pub n_rejected: u64,
}

pub fn run_pimc(setup: &Setup, settings: &PimcSettings) -> sbeq::Result<PimcReport> {
    let est = estimate(&setup.model, &setup.bath.into(), settings)?;
    let re = |i, j| est.rho.entries[(i, j)].re;
    Ok(PimcReport {
        parameters: setup.into(),
        steps: settings.steps,
        n_samples: settings.n_samples,
        n_batches: settings.n_batches,
        seed: settings.seed,
        sigma_z: est.sigma_z,
        sigma_z_stderr: est.sigma_z_stderr,
        rho: [[re(0, 0), re(0, 1)], [re(1, 0), re(1, 1)]],
        rho_stderr: [
            [est.stderr[(0, 0)], est.stderr[(0, 1)]],
            [est.stderr[(1, 0)], est.stderr[(1, 1)]],
        ],
        n_rejected: est.n_rejected,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DiscontinuityReport {
    /// `gamma` is ignored by the search.
    pub parameters: Parameters,
    pub gamma_range: (f64, f64),
    pub scan_points: usize,
    /// `null` when the selected `B` is continuous over the range.
    pub discontinuity: Option<Discontinuity>,
}

pub fn check_discontinuity_section(section: &DiscontinuitySection) -> Result<(), ConfigError> {
    let (g0, g1) = section.gamma_range;
    if !(g0.is_finite() && g1.is_finite() && 0.0 <= g0 && g0 < g1) || section.scan_points < 2 {
        return Err(ConfigError::Invalid(format!(
            "discontinuity needs 0 <= gamma_range.0 < gamma_range.1 and scan_points >= 2, got {:?} with {}",
            section.gamma_range, section.scan_points
        )));
    }
    Ok(())
}

pub fn run_discontinuity(setup: &Setup, section: &DiscontinuitySection) -> sbeq::Result<DiscontinuityReport> {
    let found = locate_discontinuity(&setup.model, &setup.bath, section.gamma_range, section.scan_points)?;
    Ok(DiscontinuityReport {
        parameters: setup.into(),
        gamma_range: section.gamma_range,
        scan_points: section.scan_points,
        discontinuity: found,
    })
}
