//! `⟨σ_z⟩` along a line in `γ` or `ω_c` for several methods.

use sbeq::pimc::PimcSettings;
use sbeq::{BathParams, Execution};

use crate::config::{check_methods, ConfigError, MethodName, Setup, SweepSection, SweepVariable};
use crate::evaluate::evaluate;
use crate::output::{float, optional, Flags};

pub const SWEEP_COLUMNS: [&str; 9] = [
    "epsilon", "delta", "beta", "omega_c", "gamma", "method", "sigma_z", "stderr", "flags",
];

#[derive(Clone, Debug)]
pub struct SweepPlan {
    pub setup: Setup,
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub methods: Vec<MethodName>,
    /// Monte Carlo rows at grid index `i` use seed `pimc.seed + i`.
    pub pimc: PimcSettings,
}

impl SweepPlan {
    pub fn new(setup: Setup, section: &SweepSection, pimc: PimcSettings) -> Result<Self, ConfigError> {
        check_methods(&section.methods)?;
        let values = section.grid.values()?;
        let plan = Self {
            setup,
            variable: section.variable,
            values,
            methods: section.methods.clone(),
            pimc,
        };
        for i in 0..plan.values.len() {
            plan.bath_at(i)?;
        }
        Ok(plan)
    }

    fn bath_at(&self, i: usize) -> Result<BathParams, ConfigError> {
        let base = self.setup.bath;
        let (gamma, omega_c) = match self.variable {
            SweepVariable::Gamma => (self.values[i], base.omega_c),
            SweepVariable::OmegaC => (base.gamma, self.values[i]),
        };
        BathParams::new(gamma, omega_c).map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub bath: BathParams,
    pub method: MethodName,
    /// `NaN` when the method failed; the error is in `flags`.
    pub sigma_z: f64,
    pub stderr: Option<f64>,
    pub flags: Flags,
    pub failed: bool,
}

/// One row per grid point and method, grid-major in input order.
pub fn run_sweep(plan: &SweepPlan) -> Vec<SweepRow> {
    let per_point = Execution::Parallel.map_range(plan.values.len(), |i| {
        let bath = plan.bath_at(i).expect("validated in SweepPlan::new");
        let pimc = PimcSettings {
            seed: plan.pimc.seed.wrapping_add(i as u64),
            ..plan.pimc
        };
        plan.methods
            .iter()
            .map(|&method| match evaluate(method, &plan.setup.model, &bath, &pimc) {
                Ok(e) => SweepRow {
                    bath,
                    method,
                    sigma_z: e.sigma_z,
                    stderr: e.stderr,
                    flags: e.flags,
                    failed: false,
                },
                Err(err) => {
                    let mut flags = Flags::default();
                    flags.push("error", err);
                    SweepRow {
                        bath,
                        method,
                        sigma_z: f64::NAN,
                        stderr: None,
                        flags,
                        failed: true,
                    }
                }
            })
            .collect::<Vec<_>>()
    });
    per_point.into_iter().flatten().collect()
}

pub fn sweep_records(plan: &SweepPlan, rows: &[SweepRow]) -> Vec<Vec<String>> {
    let m = plan.setup.model;
    rows.iter()
        .map(|r| {
            vec![
                float(m.epsilon),
                float(m.delta),
                float(m.beta),
                float(r.bath.omega_c),
                float(r.bath.gamma),
                r.method.to_string(),
                float(r.sigma_z),
                optional(r.stderr),
                r.flags.as_str().to_owned(),
            ]
        })
        .collect()
}
