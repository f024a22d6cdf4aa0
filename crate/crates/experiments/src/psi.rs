//! The variational self-consistency residual `Ψ(B)` along a `B` grid, with
//! its roots and the selected root.

use sbeq::variational::{psi, psi_curve, solve_variational};
use sbeq::{BathParams, SpectralDensity};

use crate::config::{ConfigError, PsiScanSection, Setup};
use crate::output::float;

pub const PSI_COLUMNS: [&str; 8] = ["epsilon", "delta", "beta", "omega_c", "gamma", "b", "psi", "kind"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PsiKind {
    Curve,
    Root,
    /// The root with the lowest free-energy bound.
    Selected,
}

impl PsiKind {
    pub fn name(self) -> &'static str {
        match self {
            PsiKind::Curve => "curve",
            PsiKind::Root => "root",
            PsiKind::Selected => "selected",
        }
    }
}

#[derive(Clone, Debug)]
pub struct PsiPlan {
    pub setup: Setup,
    pub gammas: Vec<f64>,
    pub b_grid: Vec<f64>,
}

impl PsiPlan {
    pub fn new(setup: Setup, section: &PsiScanSection) -> Result<Self, ConfigError> {
        let b_grid = section.b_grid.values()?;
        if b_grid[0] < 0.0 || b_grid[b_grid.len() - 1] > 1.0 {
            return Err(ConfigError::Invalid("b_grid must lie in [0, 1]".into()));
        }
        if section.gammas.is_empty() {
            return Err(ConfigError::Invalid("gammas is empty".into()));
        }
        for &g in &section.gammas {
            BathParams::new(g, setup.bath.omega_c).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        Ok(Self {
            setup,
            gammas: section.gammas.clone(),
            b_grid,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsiRow {
    pub gamma: f64,
    pub b: f64,
    pub psi: f64,
    pub kind: PsiKind,
}

/// For each `γ` in order: the curve on the grid, then the roots in ascending
/// `B` with the selected one marked.
pub fn run_psi_scan(plan: &PsiPlan) -> sbeq::Result<Vec<PsiRow>> {
    let model = plan.setup.model;
    let mut rows = Vec::new();
    for &gamma in &plan.gammas {
        let bath: SpectralDensity = BathParams::new(gamma, plan.setup.bath.omega_c)?.into();
        let curve = psi_curve(&plan.b_grid, &model, &bath)?;
        rows.extend(curve.b_grid.iter().zip(&curve.psi_values).map(|(&b, &psi)| PsiRow {
            gamma,
            b,
            psi,
            kind: PsiKind::Curve,
        }));
        let solution = solve_variational(&model, &bath)?;
        for (i, root) in solution.roots.iter().enumerate() {
            rows.push(PsiRow {
                gamma,
                b: root.b,
                psi: psi(root.b, &model, &bath)?,
                kind: if i == solution.selected {
                    PsiKind::Selected
                } else {
                    PsiKind::Root
                },
            });
        }
    }
    Ok(rows)
}

pub fn psi_records(plan: &PsiPlan, rows: &[PsiRow]) -> Vec<Vec<String>> {
    let m = plan.setup.model;
    rows.iter()
        .map(|r| {
            vec![
                float(m.epsilon),
                float(m.delta),
                float(m.beta),
                float(plan.setup.bath.omega_c),
                float(r.gamma),
                float(r.b),
                float(r.psi),
                r.kind.name().to_owned(),
            ]
        })
        .collect()
}

/// Number of roots (selected included) listed for `gamma`.
pub fn root_count(rows: &[PsiRow], gamma: f64) -> usize {
    rows.iter()
        .filter(|r| r.gamma == gamma && r.kind != PsiKind::Curve)
        .count()
}
