//! Second-order imaginary-time perturbation theory for `ρ_S` in a chosen frame.
//!
//! The double integral over `0 ≤ β″ ≤ β′ ≤ β` is taken with the lag
//! `τ = β′ − β″` as the outer variable. For fixed `τ` the inner integral over
//! `β″` involves only `H_S` and is done exactly in its eigenbasis, so the only
//! numerical quadrature is a one-dimensional Gauss–Legendre rule in `τ` on
//! panels graded toward both endpoints, where the correlation functions of a
//! fast bath vary most.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix2, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::bath::{FrameSolution, ModelParams, SpectralDensity};
use crate::correlation::BathCorrelations;
use crate::operator::{TwoLevelOperator, C64};
use crate::parallel::Execution;
use crate::quadrature::{gauss_legendre, Tolerance};
use crate::variational::solve_variational;
use crate::{Error, Frame, ReducedDensityMatrix, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Order {
    Zero,
    Two,
}

/// Frame and order of a perturbative estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Orig0,
    Orig2,
    Pol0,
    Pol2,
    Var0,
    Var2,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Orig0,
        Method::Orig2,
        Method::Pol0,
        Method::Pol2,
        Method::Var0,
        Method::Var2,
    ];

    pub fn frame(self) -> Frame {
        match self {
            Method::Orig0 | Method::Orig2 => Frame::Original,
            Method::Pol0 | Method::Pol2 => Frame::FullPolaron,
            Method::Var0 | Method::Var2 => Frame::Variational,
        }
    }

    pub fn order(self) -> Order {
        match self {
            Method::Orig0 | Method::Pol0 | Method::Var0 => Order::Zero,
            _ => Order::Two,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Orig0 => "orig0",
            Method::Orig2 => "orig2",
            Method::Pol0 => "pol0",
            Method::Pol2 => "pol2",
            Method::Var0 => "var0",
            Method::Var2 => "var2",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method {s:?}")))
    }
}

/// Lag quadrature: `order` Gauss–Legendre nodes on each of
/// `2·(grading_levels + 1)` panels with breakpoints `β/2·2^{−k}` mirrored
/// about `β/2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSettings {
    pub order: usize,
    pub grading_levels: u32,
    /// Tolerance of the frequency integrals inside the correlation functions.
    pub tol: Tolerance,
    pub execution: Execution,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            order: 32,
            grading_levels: 12,
            tol: Tolerance::default(),
            execution: Execution::default(),
        }
    }
}

impl QuadratureSettings {
    fn panels(&self, beta: f64) -> Vec<(f64, f64)> {
        let mut cuts: Vec<f64> = (0..=self.grading_levels)
            .rev()
            .map(|k| 0.5 * beta * 0.5f64.powi(k as i32))
            .collect();
        cuts.insert(0, 0.0);
        let mirrored: Vec<f64> = cuts.iter().rev().skip(1).map(|&t| beta - t).collect();
        cuts.extend(mirrored);
        *cuts.last_mut().unwrap() = beta;
        cuts.windows(2).map(|w| (w[0], w[1])).collect()
    }
}

/// `(ε/2)σ_z + (Δ_R/2)σ_x`; the scalar shift is left out because it cancels
/// in every normalized quantity.
pub fn system_hamiltonian(frame: &FrameSolution, model: &ModelParams) -> TwoLevelOperator {
    TwoLevelOperator::from_bloch(0.0, 0.5 * frame.delta_r, 0.0, 0.5 * model.epsilon)
}

/// Eigen decomposition of `H_S` with energies shifted so the lower one is 0.
struct Spectrum {
    energies: [f64; 2],
    vectors: Matrix2<f64>,
}

impl Spectrum {
    fn new(frame: &FrameSolution, model: &ModelParams) -> Self {
        let h = system_hamiltonian(frame, model).real_part();
        let eig = SymmetricEigen::new(h);
        let (lo, hi) = if eig.eigenvalues[0] <= eig.eigenvalues[1] {
            (0, 1)
        } else {
            (1, 0)
        };
        let vectors = Matrix2::from_columns(&[eig.eigenvectors.column(lo), eig.eigenvectors.column(hi)]);
        let e0 = eig.eigenvalues[lo];
        Self {
            energies: [0.0, eig.eigenvalues[hi] - e0],
            vectors,
        }
    }

    fn to_eigenbasis(&self, op: &TwoLevelOperator) -> Matrix2<C64> {
        let v = self.vectors.map(|x| C64::new(x, 0.0));
        v.transpose() * op.entries * v
    }

    fn back_to_standard_basis(&self, m: &Matrix2<C64>) -> TwoLevelOperator {
        let v = self.vectors.map(|x| C64::new(x, 0.0));
        TwoLevelOperator::new(v * m * v.transpose())
    }

    fn boltzmann(&self, t: f64) -> [f64; 2] {
        [(-t * self.energies[0]).exp(), (-t * self.energies[1]).exp()]
    }
}

/// `(1 − e^{−x})/x`.
fn relative_expm1(x: f64) -> f64 {
    if x < 1e-8 {
        1.0 - 0.5 * x
    } else {
        -(-x).exp_m1() / x
    }
}

/// Channel-weighted inner integrand `Σ c_nm σ_n e^{−τH} σ_m` in the eigenbasis,
/// followed by the exact `β″` integral over `[0, β − τ]`.
fn lag_integrand(
    tau: f64,
    beta: f64,
    spectrum: &Spectrum,
    paulis: &[Matrix2<C64>; 3],
    c: &crate::correlation::CorrelationValues,
) -> Matrix2<C64> {
    let [sx, sy, sz] = paulis;
    let w = spectrum.boltzmann(tau);
    let prop = Matrix2::new(C64::new(w[0], 0.0), C64::default(), C64::default(), C64::new(w[1], 0.0));
    let re = |x: f64| C64::new(x, 0.0);
    let i_gamma = C64::new(0.0, c.zy);
    let mut m = Matrix2::<C64>::zeros();
    if c.xx != 0.0 {
        m += sx * prop * sx * re(c.xx);
    }
    if c.yy != 0.0 {
        m += sy * prop * sy * re(c.yy);
    }
    if c.zz != 0.0 {
        m += sz * prop * sz * re(c.zz);
    }
    if c.zy != 0.0 {
        m += (sz * prop * sy - sy * prop * sz) * i_gamma;
    }
    let len = beta - tau;
    let e = spectrum.energies;
    let mut out = m;
    for a in 0..2 {
        for b in 0..2 {
            let gap = (e[a] - e[b]).abs();
            let floor = e[a].min(e[b]);
            out[(a, b)] *= len * (-len * floor).exp() * relative_expm1(len * gap);
        }
    }
    out
}

/// The second-order operator `A`, whose trace is the correction `Z^(2)`, in
/// units where the lower eigenvalue of `H_S` is zero.
pub fn second_order_a(
    frame: &FrameSolution,
    model: &ModelParams,
    bath: &SpectralDensity,
    settings: &QuadratureSettings,
) -> Result<TwoLevelOperator> {
    let spectrum = Spectrum::new(frame, model);
    Ok(spectrum.back_to_standard_basis(&second_order_a_eigenbasis(&spectrum, frame, model, bath, settings)?))
}

fn second_order_a_eigenbasis(
    spectrum: &Spectrum,
    frame: &FrameSolution,
    model: &ModelParams,
    bath: &SpectralDensity,
    settings: &QuadratureSettings,
) -> Result<Matrix2<C64>> {
    if settings.order == 0 {
        return Err(Error::InvalidParameter("lag quadrature order must be positive".into()));
    }
    if bath.is_uncoupled() {
        return Ok(Matrix2::zeros());
    }
    let corr = BathCorrelations::new(frame, model, bath, &settings.tol)?;
    let beta = model.beta;
    let paulis = [
        spectrum.to_eigenbasis(&TwoLevelOperator::sigma_x()),
        spectrum.to_eigenbasis(&TwoLevelOperator::sigma_y()),
        spectrum.to_eigenbasis(&TwoLevelOperator::sigma_z()),
    ];
    let rule = gauss_legendre(settings.order);
    let nodes: Vec<(f64, f64)> = settings
        .panels(beta)
        .into_iter()
        .flat_map(|(a, b)| rule.mapped(a, b).collect::<Vec<_>>())
        .collect();
    let terms = settings.execution.map(&nodes, |&(tau, w)| -> Result<Matrix2<C64>> {
        let c = corr.at(tau)?;
        Ok(lag_integrand(tau, beta, spectrum, &paulis, &c) * C64::new(w, 0.0))
    });
    let mut total = Matrix2::<C64>::zeros();
    for t in terms {
        total += t?;
    }
    Ok(total)
}

/// Largest imaginary part tolerated before it is discarded.
pub const IMAGINARY_TOL: f64 = 1e-10;

/// `ρ_S` with its diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerturbativeState {
    pub rho: ReducedDensityMatrix,
    pub frame: FrameSolution,
    /// Negative values flag a loss of positivity at second order.
    pub min_eigenvalue: f64,
    /// Imaginary residue removed after the `C_zy` contraction.
    pub imaginary_residue: f64,
}

pub fn reduced_density_matrix(
    frame: &FrameSolution,
    model: &ModelParams,
    bath: &SpectralDensity,
    order: Order,
) -> Result<ReducedDensityMatrix> {
    Ok(density_matrix_with(frame, model, bath, order, &QuadratureSettings::default())?.rho)
}

/// `ρ^(0) = e^{−βH}/Z^(0)`; at second order `A/Z^(0) − tr A·e^{−βH}/Z^(0)²`
/// is added.
pub fn density_matrix_with(
    frame: &FrameSolution,
    model: &ModelParams,
    bath: &SpectralDensity,
    order: Order,
    settings: &QuadratureSettings,
) -> Result<PerturbativeState> {
    model.validate()?;
    let spectrum = Spectrum::new(frame, model);
    let w = spectrum.boltzmann(model.beta);
    let z0 = w[0] + w[1];
    let mut rho = Matrix2::new(
        C64::new(w[0] / z0, 0.0),
        C64::default(),
        C64::default(),
        C64::new(w[1] / z0, 0.0),
    );
    if order == Order::Two {
        let a = second_order_a_eigenbasis(&spectrum, frame, model, bath, settings)? / C64::new(z0, 0.0);
        let z2 = a.trace();
        rho = rho + a - rho * z2;
    }
    let op = spectrum.back_to_standard_basis(&rho);
    let residue = op.max_imag();
    if residue > IMAGINARY_TOL {
        return Err(Error::ImaginaryResidue(residue));
    }
    let rho = ReducedDensityMatrix::from_real(op.real_part())?;
    Ok(PerturbativeState {
        min_eigenvalue: rho.min_eigenvalue(),
        rho,
        frame: *frame,
        imaginary_residue: residue,
    })
}

/// `tr(σ_z ρ)`; unchanged by the polaron transformation, so comparable across
/// frames.
pub fn expectation_sigma_z(rho: &ReducedDensityMatrix) -> f64 {
    rho.sigma_z()
}

/// Builds the frame for a method. The variational frame runs the root solver.
pub fn frame_for(frame: Frame, model: &ModelParams, bath: &SpectralDensity) -> Result<FrameSolution> {
    match frame {
        Frame::Original => Ok(FrameSolution::original(model)),
        Frame::FullPolaron => FrameSolution::full_polaron(model, bath, &Tolerance::tight()),
        Frame::Variational => Ok(solve_variational(model, bath)?.frame_solution),
    }
}

pub fn solve_method(method: Method, model: &ModelParams, bath: &SpectralDensity) -> Result<PerturbativeState> {
    solve_method_with(method, model, bath, &QuadratureSettings::default())
}

pub fn solve_method_with(
    method: Method,
    model: &ModelParams,
    bath: &SpectralDensity,
    settings: &QuadratureSettings,
) -> Result<PerturbativeState> {
    let frame = frame_for(method.frame(), model, bath)?;
    density_matrix_with(&frame, model, bath, method.order(), settings)
}
