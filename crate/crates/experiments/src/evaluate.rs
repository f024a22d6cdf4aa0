//! One `⟨σ_z⟩` value by any method, with the annotations that go in a row's
//! `flags` column.

use sbeq::adiabatic::{sigma_z_adiabatic, AdiabaticParams};
use sbeq::perturbation::solve_method;
use sbeq::pimc::{estimate, PimcSettings};
use sbeq::{BathParams, Frame, ModelParams};

use crate::config::MethodName;
use crate::output::Flags;

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub sigma_z: f64,
    /// Monte Carlo standard error; `None` for deterministic methods.
    pub stderr: Option<f64>,
    pub flags: Flags,
}

pub fn evaluate(
    method: MethodName,
    model: &ModelParams,
    bath: &BathParams,
    pimc: &PimcSettings,
) -> sbeq::Result<Evaluation> {
    let mut flags = Flags::default();
    match method {
        MethodName::Perturbative(m) => {
            let state = solve_method(m, model, &(*bath).into())?;
            if m.frame() != Frame::Original {
                flags.push("b", crate::output::float(state.frame.b));
            }
            if state.min_eigenvalue < 0.0 {
                flags.mark("negative_eigenvalue");
            }
            Ok(Evaluation {
                sigma_z: state.rho.sigma_z(),
                stderr: None,
                flags,
            })
        }
        MethodName::Pimc => {
            let est = estimate(model, &(*bath).into(), pimc)?;
            flags
                .push("seed", pimc.seed)
                .push("steps", pimc.steps)
                .push("samples", pimc.n_samples);
            if est.n_rejected > 0 {
                flags.push("rejected", est.n_rejected);
            }
            Ok(Evaluation {
                sigma_z: est.sigma_z,
                stderr: Some(est.sigma_z_stderr),
                flags,
            })
        }
        MethodName::Adiabatic => {
            let params = AdiabaticParams::from_gamma(bath.gamma, *model)?;
            Ok(Evaluation {
                sigma_z: sigma_z_adiabatic(&params)?,
                stderr: None,
                flags,
            })
        }
    }
}
