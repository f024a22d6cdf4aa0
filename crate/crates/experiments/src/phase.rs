//! Relative error of perturbative methods against a reference over a
//! `(γ, ω_c)` grid.

use sbeq::pimc::PimcSettings;
use sbeq::{BathParams, Execution};

use crate::config::{check_methods, ConfigError, MethodName, PhaseDiagramSection, Setup};
use crate::evaluate::{evaluate, Evaluation};
use crate::output::{float, optional, Flags};

pub const PHASE_COLUMNS: [&str; 10] = [
    "epsilon",
    "delta",
    "beta",
    "omega_c",
    "gamma",
    "method",
    "rel_error",
    "ref_sigma_z",
    "ref_stderr",
    "flags",
];

/// A reference value is unreliable when `|⟨σ_z⟩| < RELIABILITY · stderr`.
pub const RELIABILITY: f64 = 5.0;

#[derive(Clone, Debug)]
pub struct PhasePlan {
    pub setup: Setup,
    pub gammas: Vec<f64>,
    pub omega_cs: Vec<f64>,
    pub methods: Vec<MethodName>,
    pub reference: MethodName,
    /// The reference of cell `k = i_ω·n_γ + i_γ` uses seed `pimc.seed + k`.
    pub pimc: PimcSettings,
}

impl PhasePlan {
    pub fn new(setup: Setup, section: &PhaseDiagramSection, pimc: PimcSettings) -> Result<Self, ConfigError> {
        check_methods(&section.methods)?;
        if section.methods.contains(&section.reference) {
            return Err(ConfigError::Invalid(format!(
                "reference {} is also compared",
                section.reference
            )));
        }
        let gammas = section.gamma_grid.values()?;
        let omega_cs = section.omega_c_grid.values()?;
        for &g in &gammas {
            for &w in &omega_cs {
                BathParams::new(g, w).map_err(|e| ConfigError::Invalid(e.to_string()))?;
            }
        }
        Ok(Self {
            setup,
            gammas,
            omega_cs,
            methods: section.methods.clone(),
            reference: section.reference,
            pimc,
        })
    }
}

#[derive(Clone, Debug)]
pub struct PhaseRow {
    /// Grid indices `(i_γ, i_ω)`.
    pub cell: (usize, usize),
    pub bath: BathParams,
    pub method: MethodName,
    pub sigma_z: Option<f64>,
    /// Absent for unreliable or failed cells.
    pub rel_error: Option<f64>,
    pub ref_sigma_z: Option<f64>,
    pub ref_stderr: Option<f64>,
    pub reliable: bool,
    pub failed: bool,
    pub flags: Flags,
}

fn cell_rows(plan: &PhasePlan, cell: (usize, usize), bath: BathParams, pimc: &PimcSettings) -> Vec<PhaseRow> {
    let model = plan.setup.model;
    let reference = evaluate(plan.reference, &model, &bath, pimc);
    let reliable = match &reference {
        Ok(r) => r.sigma_z.abs() >= RELIABILITY * r.stderr.unwrap_or(0.0),
        Err(_) => false,
    };
    plan.methods
        .iter()
        .map(|&method| {
            let mut flags = Flags::default();
            flags.push("reference", plan.reference);
            if plan.reference == MethodName::Pimc {
                flags.push("seed", pimc.seed);
            }
            let value = evaluate(method, &model, &bath, pimc);
            let mut row = PhaseRow {
                cell,
                bath,
                method,
                sigma_z: value.as_ref().ok().map(|v| v.sigma_z),
                rel_error: None,
                ref_sigma_z: reference.as_ref().ok().map(|r| r.sigma_z),
                ref_stderr: reference.as_ref().ok().and_then(|r| r.stderr),
                reliable,
                failed: false,
                flags,
            };
            match (&reference, &value) {
                (Err(e), _) => {
                    row.flags.push("error", format!("reference: {e}"));
                    row.failed = true;
                }
                (_, Err(e)) => {
                    row.flags.push("error", e);
                    row.failed = true;
                }
                (Ok(r), Ok(Evaluation { sigma_z, .. })) => {
                    if reliable {
                        row.rel_error = Some(((sigma_z - r.sigma_z) / r.sigma_z).abs());
                    } else {
                        row.flags.mark("unreliable");
                    }
                }
            }
            row
        })
        .collect()
}

/// Rows ordered by `ω_c` index, then `γ` index, then method.
pub fn run_phase_diagram(plan: &PhasePlan) -> Vec<PhaseRow> {
    let n_gamma = plan.gammas.len();
    let cells = Execution::Parallel.map_range(n_gamma * plan.omega_cs.len(), |k| {
        let cell = (k % n_gamma, k / n_gamma);
        let bath = BathParams::new(plan.gammas[cell.0], plan.omega_cs[cell.1]).expect("validated in PhasePlan::new");
        let pimc = PimcSettings {
            seed: plan.pimc.seed.wrapping_add(k as u64),
            ..plan.pimc
        };
        cell_rows(plan, cell, bath, &pimc)
    });
    cells.into_iter().flatten().collect()
}

pub fn phase_records(plan: &PhasePlan, rows: &[PhaseRow]) -> Vec<Vec<String>> {
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
                optional(r.rel_error),
                optional(r.ref_sigma_z),
                optional(r.ref_stderr),
                r.flags.as_str().to_owned(),
            ]
        })
        .collect()
}

/// Mean relative error of `method` over reliable cells accepted by `keep`,
/// with the number of cells averaged.
pub fn mean_rel_error(rows: &[PhaseRow], method: MethodName, keep: impl Fn((usize, usize)) -> bool) -> (f64, usize) {
    let errs: Vec<f64> = rows
        .iter()
        .filter(|r| r.method == method && keep(r.cell))
        .filter_map(|r| r.rel_error)
        .collect();
    (errs.iter().sum::<f64>() / errs.len() as f64, errs.len())
}
