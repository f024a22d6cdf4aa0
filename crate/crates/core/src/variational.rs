//! Self-consistent renormalization `B` of the variational frame.
//!
//! The condition `B = exp[−2∫(dω/π)(J/ω²)F² coth(βω/2)]` can have several
//! roots. All of them are located by a sign-change scan of the residual
//! `Ψ(B)`, and the one with the lowest free-energy bound is selected.

use serde::Serialize;

use crate::bath::{renormalization_rhs, BathParams, FrameSolution, ModelParams, SpectralDensity};
use crate::parallel::Execution;
use crate::quadrature::Tolerance;
use crate::{Error, Result};

/// Residual accepted for a refined root, relative to `B`.
pub const ROOT_TOL: f64 = 1e-10;
/// Free energies closer than this count as degenerate.
pub const TIE_TOL: f64 = 1e-12;
pub const DEFAULT_SCAN_POINTS: usize = 2000;
const LOG_SCAN_POINTS: usize = 500;
const UNIFORM_FLOOR: f64 = 1e-6;
const LOG_FLOOR: f64 = 1e-12;

/// `|Ψ(B)| < ROOT_TOL·B`. The relative test matters below `B ≈ ROOT_TOL`,
/// where `|Ψ| ≈ B` is tiny without `B` being self-consistent.
fn is_root(b: f64, psi: f64) -> bool {
    psi.abs() < ROOT_TOL * b
}

/// `Ψ(B) = B − rhs(B)`.
pub fn psi(b: f64, model: &ModelParams, bath: &SpectralDensity) -> Result<f64> {
    psi_with(b, model, bath, &Tolerance::default())
}

pub fn psi_with(b: f64, model: &ModelParams, bath: &SpectralDensity, tol: &Tolerance) -> Result<f64> {
    if !(b > 0.0 && b <= 1.0) {
        return Err(Error::Domain(format!("psi needs 0 < B <= 1, got {b}")));
    }
    Ok(b - renormalization_rhs(b, model, bath, tol)?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PsiCurve {
    pub b_grid: Vec<f64>,
    pub psi_values: Vec<f64>,
}

/// Logarithmic points on `[1e−12, 1e−6)` followed by `uniform_points`
/// equally spaced points on `[1e−6, 1]`, ascending.
pub fn scan_grid(uniform_points: usize) -> Vec<f64> {
    let (lo, hi) = (LOG_FLOOR.ln(), UNIFORM_FLOOR.ln());
    let mut grid: Vec<f64> = (0..LOG_SCAN_POINTS)
        .map(|k| (lo + (hi - lo) * k as f64 / LOG_SCAN_POINTS as f64).exp())
        .collect();
    grid[0] = LOG_FLOOR;
    let last = (uniform_points - 1) as f64;
    grid.extend((0..uniform_points).map(|k| {
        if k + 1 == uniform_points {
            1.0
        } else {
            UNIFORM_FLOOR + (1.0 - UNIFORM_FLOOR) * k as f64 / last
        }
    }));
    grid
}

pub fn psi_curve(b_grid: &[f64], model: &ModelParams, bath: &SpectralDensity) -> Result<PsiCurve> {
    let values = Execution::default().map(b_grid, |&b| psi(b, model, bath));
    Ok(PsiCurve {
        b_grid: b_grid.to_vec(),
        psi_values: values.into_iter().collect::<Result<_>>()?,
    })
}

/// Why a root list is not a clean set of sign changes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RootWarning {
    /// No sign change on the scan; the `|Ψ|` minimizer was returned.
    NoSignChange,
    /// Bisection stalled at machine resolution above [`ROOT_TOL`].
    Unrefined,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RootScan {
    /// Ascending in `B`.
    pub roots: Vec<f64>,
    /// `Ψ` at the smallest scanned `B` was positive, so a root lies below the
    /// scan floor.
    pub root_below_floor: bool,
    pub warning: Option<RootWarning>,
}

fn bisect(mut lo: f64, mut hi: f64, psi_lo: f64, model: &ModelParams, bath: &SpectralDensity) -> Result<(f64, bool)> {
    let tol = Tolerance::tight();
    let lo_negative = psi_lo < 0.0;
    let mut best = (0.5 * (lo + hi), f64::INFINITY);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let p = psi_with(mid, model, bath, &tol)?;
        if p.abs() / mid < best.1 {
            best = (mid, p.abs() / mid);
        }
        if is_root(mid, p) {
            return Ok((mid, true));
        }
        if (p < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((best.0, best.1 < ROOT_TOL))
}

/// All roots of `Ψ` on `(0, 1]`, from a scan with `scan_points` uniform
/// points plus a logarithmic tail toward zero.
pub fn find_roots(model: &ModelParams, bath: &SpectralDensity, scan_points: usize) -> Result<RootScan> {
    if scan_points < 100 {
        return Err(Error::InvalidParameter(format!(
            "scan_points = {scan_points} must be >= 100"
        )));
    }
    model.validate()?;
    let curve = psi_curve(&scan_grid(scan_points), model, bath)?;
    let (b, p) = (&curve.b_grid, &curve.psi_values);

    let mut brackets = Vec::new();
    let mut exact = Vec::new();
    for k in 0..b.len() {
        if is_root(b[k], p[k]) {
            exact.push(b[k]);
        } else if k + 1 < b.len() && !is_root(b[k + 1], p[k + 1]) && (p[k] < 0.0) != (p[k + 1] < 0.0) {
            brackets.push(k);
        }
    }
    let refined = Execution::default().map(&brackets, |&k| bisect(b[k], b[k + 1], p[k], model, bath));
    let mut warning = None;
    let mut roots = exact;
    for r in refined {
        let (root, ok) = r?;
        if !ok {
            warning = Some(RootWarning::Unrefined);
        }
        roots.push(root);
    }
    let root_below_floor = p[0] > 0.0;
    if roots.is_empty() && !root_below_floor {
        let k = (0..b.len()).min_by(|&i, &j| p[i].abs().total_cmp(&p[j].abs())).unwrap();
        roots.push(b[k]);
        warning = Some(RootWarning::NoSignChange);
    }
    roots.sort_by(f64::total_cmp);
    Ok(RootScan {
        roots,
        root_below_floor,
        warning,
    })
}

/// `ln(2 cosh x)` without overflow.
fn ln_two_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p()
}

fn bound_for(frame: &FrameSolution, model: &ModelParams) -> f64 {
    -ln_two_cosh(0.5 * model.beta * frame.eta) / model.beta + frame.shift
}

/// Free-energy upper bound `A_B` of the variational frame at `B`, without the
/// `B`-independent bath free energy.
pub fn free_energy_bound(b: f64, model: &ModelParams, bath: &SpectralDensity) -> Result<f64> {
    let frame = FrameSolution::variational(model, bath, b, &Tolerance::tight())?;
    Ok(bound_for(&frame, model))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Root {
    pub b: f64,
    pub free_energy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VariationalSolution {
    /// Ascending in `B`; a `B = 0` entry stands for a root below the scan floor.
    pub roots: Vec<Root>,
    pub selected: usize,
    pub frame_solution: FrameSolution,
    pub warning: Option<RootWarning>,
}

impl VariationalSolution {
    pub fn b(&self) -> f64 {
        self.roots[self.selected].b
    }

    pub fn free_energy(&self) -> f64 {
        self.roots[self.selected].free_energy
    }
}

/// Index of the lowest bound, preferring larger `B` among near ties.
pub fn select_root(roots: &[Root]) -> usize {
    let min = roots.iter().map(|r| r.free_energy).fold(f64::INFINITY, f64::min);
    (0..roots.len())
        .filter(|&i| roots[i].free_energy - min < TIE_TOL)
        .max_by(|&i, &j| roots[i].b.total_cmp(&roots[j].b))
        .expect("root list is never empty")
}

pub fn solve_variational(model: &ModelParams, bath: &SpectralDensity) -> Result<VariationalSolution> {
    solve_variational_with(model, bath, DEFAULT_SCAN_POINTS)
}

pub fn solve_variational_with(
    model: &ModelParams,
    bath: &SpectralDensity,
    scan_points: usize,
) -> Result<VariationalSolution> {
    let scan = find_roots(model, bath, scan_points)?;
    let mut candidates = scan.roots.clone();
    if scan.root_below_floor {
        candidates.insert(0, 0.0);
    }
    let tol = Tolerance::tight();
    let frames = Execution::default().map(&candidates, |&b| FrameSolution::variational(model, bath, b, &tol));
    let frames = frames.into_iter().collect::<Result<Vec<_>>>()?;
    let roots: Vec<Root> = frames
        .iter()
        .map(|f| Root {
            b: f.b,
            free_energy: bound_for(f, model),
        })
        .collect();
    let selected = select_root(&roots);
    Ok(VariationalSolution {
        frame_solution: frames[selected],
        roots,
        selected,
        warning: scan.warning,
    })
}

/// A jump of the selected `B` between two nearby couplings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Discontinuity {
    pub gamma: f64,
    pub bracket: (f64, f64),
    pub b_below: f64,
    pub b_above: f64,
}

pub const JUMP_THRESHOLD: f64 = 0.1;
pub const GAMMA_RESOLUTION: f64 = 1e-3;

fn selected_b(model: &ModelParams, bath: &BathParams, gamma: f64) -> Result<f64> {
    let b = BathParams::new(gamma, bath.omega_c)?;
    Ok(solve_variational(model, &b.into())?.b())
}

/// Scans `γ` over `range` with `scan_points` equally spaced values. Every
/// interval across which the selected `B` changes by more than
/// [`JUMP_THRESHOLD`] is bisected toward the half with the larger change; a
/// discontinuity is reported once the bracket is narrower than
/// [`GAMMA_RESOLUTION`] with the change still above the threshold. A steep
/// but continuous decrease loses its change during bisection and is skipped.
/// The `γ` of `bath` is ignored.
pub fn locate_discontinuity(
    model: &ModelParams,
    bath: &BathParams,
    range: (f64, f64),
    scan_points: usize,
) -> Result<Option<Discontinuity>> {
    let (g0, g1) = range;
    if !(g0.is_finite() && g1.is_finite() && g0 >= 0.0 && g1 > g0) || scan_points < 2 {
        return Err(Error::InvalidParameter(format!(
            "gamma range [{g0}, {g1}] with {scan_points} points"
        )));
    }
    let gammas: Vec<f64> = (0..scan_points)
        .map(|k| g0 + (g1 - g0) * k as f64 / (scan_points - 1) as f64)
        .collect();
    let bs = Execution::default().map(&gammas, |&g| selected_b(model, bath, g));
    let bs = bs.into_iter().collect::<Result<Vec<_>>>()?;
    for k in 0..scan_points - 1 {
        if (bs[k + 1] - bs[k]).abs() <= JUMP_THRESHOLD {
            continue;
        }
        if let Some(d) = refine_jump(model, bath, (gammas[k], gammas[k + 1]), (bs[k], bs[k + 1]))? {
            return Ok(Some(d));
        }
    }
    Ok(None)
}

fn refine_jump(
    model: &ModelParams,
    bath: &BathParams,
    (mut lo, mut hi): (f64, f64),
    (mut b_lo, mut b_hi): (f64, f64),
) -> Result<Option<Discontinuity>> {
    while hi - lo > GAMMA_RESOLUTION {
        let mid = 0.5 * (lo + hi);
        let b_mid = selected_b(model, bath, mid)?;
        let (left, right) = ((b_mid - b_lo).abs(), (b_hi - b_mid).abs());
        if left.max(right) <= JUMP_THRESHOLD {
            return Ok(None);
        }
        if left > right {
            hi = mid;
            b_hi = b_mid;
        } else {
            lo = mid;
            b_lo = b_mid;
        }
    }
    Ok(Some(Discontinuity {
        gamma: 0.5 * (lo + hi),
        bracket: (lo, hi),
        b_below: b_lo,
        b_above: b_hi,
    }))
}
