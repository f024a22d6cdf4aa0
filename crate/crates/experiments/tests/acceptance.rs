//! Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails. Seeds are fixed, so the output is reproducible.

use std::time::Instant;

use sbeq::adiabatic::{sigma_z_adiabatic, AdiabaticParams};
use sbeq::correlation::{BathCorrelations, Channel};
use sbeq::discrete::{discretize_bath, exact_rdm, ExactSettings};
use sbeq::perturbation::{density_matrix_with, frame_for, solve_method, QuadratureSettings};
use sbeq::pimc::{estimate, propagate, NoisePath, PimcSettings};
use sbeq::quadrature::Tolerance;
use sbeq::{BathParams, Frame, Method, ModelParams, Order, SpectralDensity};
use sbeq_experiments::config::{
    fast_bath_defaults, DiscontinuitySection, MethodName, PhaseDiagramSection, PimcSection, PsiScanSection, Setup,
};
use sbeq_experiments::jobs::run_discontinuity;
use sbeq_experiments::phase::{mean_rel_error, run_phase_diagram, PhasePlan};
use sbeq_experiments::psi::{root_count, run_psi_scan, PsiPlan};
use sbeq_experiments::{Config, Grid};

type Outcome = (bool, String);
type Criterion = (&'static str, &'static str, fn() -> Outcome);

fn model(epsilon: f64, delta: f64) -> ModelParams {
    ModelParams::new(epsilon, delta, 1.0).unwrap()
}

fn bath(gamma: f64, omega_c: f64) -> SpectralDensity {
    BathParams::new(gamma, omega_c).unwrap().into()
}

fn sigma_z(method: Method, m: &ModelParams, b: &SpectralDensity) -> f64 {
    solve_method(method, m, b).unwrap().rho.sigma_z()
}

fn pimc(m: &ModelParams, b: &SpectralDensity, steps: usize, n_samples: u64, seed: u64) -> (f64, f64) {
    let est = estimate(
        m,
        b,
        &PimcSettings {
            steps,
            n_samples,
            seed,
            ..Default::default()
        },
    )
    .unwrap();
    (est.sigma_z, est.sigma_z_stderr)
}

/// A zero-variance estimate carries round-off only.
const ROUNDOFF: f64 = 1e-12;

fn within_stderr(a: f64, b: f64, se: f64) -> bool {
    (a - b).abs() <= 3.0 * se + ROUNDOFF
}

fn isolated_limit() -> Outcome {
    let m = model(1.0, 3.0);
    let b = bath(0.0, 5.0);
    let eta = 10f64.sqrt();
    let exact = -(0.5 * eta).tanh() / eta;
    let worst = Method::ALL
        .iter()
        .map(|&k| (sigma_z(k, &m, &b) - exact).abs())
        .fold(0.0, f64::max);
    let (mc, se) = pimc(&m, &b, 512, 100_000, 101);
    (
        worst < 1e-10 && within_stderr(mc, exact, se),
        format!("exact {exact:.6}, worst frame deviation {worst:.1e}, pimc {mc:.6} ± {se:.1e}"),
    )
}

fn polaron_limit() -> Outcome {
    let m = model(1.0, 3.0);
    let b = bath(200.0, 5.0);
    let target = -0.5f64.tanh();
    let pol2 = sigma_z(Method::Pol2, &m, &b);
    let (mc, se) = pimc(&m, &b, 256, 1_000_000, 102);
    (
        (pol2 - target).abs() < 1e-3 && within_stderr(mc, pol2, se),
        format!("pol2 {pol2:.5} vs {target:.5}; pimc {mc:.5} ± {se:.5}"),
    )
}

fn fast_bath_regime() -> Outcome {
    let m = model(1.0, 3.0);
    let mut ok = true;
    let mut detail = Vec::new();
    for (i, gamma) in [1.0, 5.0, 10.0, 20.0, 40.0].into_iter().enumerate() {
        let b = bath(gamma, 5.0);
        let (mc, se) = pimc(&m, &b, 256, 1_000_000, 110 + i as u64);
        let tol = (3.0 * se).max(0.02);
        let [orig, pol, var] = [Method::Orig2, Method::Pol2, Method::Var2].map(|k| sigma_z(k, &m, &b));
        ok &= (var - mc).abs() < tol && (pol - mc).abs() < tol;
        if gamma >= 20.0 {
            ok &= (orig - mc).abs() > 0.05;
        }
        detail.push(format!(
            "γ={gamma}: pi {mc:.4}±{se:.4} orig {orig:.4} pol {pol:.4} var {var:.4}"
        ));
    }
    (ok, detail.join("; "))
}

fn variational_discontinuity() -> Outcome {
    let config = Config::default();
    let (m, b) = sbeq_experiments::config::slow_bath_defaults();
    let setup = Setup::resolve(&config, m, b).unwrap();
    let section = DiscontinuitySection {
        gamma_range: (9.0, 12.0),
        scan_points: 13,
    };
    let found = run_discontinuity(&setup, &section).unwrap().discontinuity;
    let psi = PsiPlan::new(
        setup,
        &PsiScanSection {
            gammas: vec![9.5, 10.0],
            b_grid: Grid::linear(0.0025, 1.0, 400),
        },
    )
    .unwrap();
    let rows = run_psi_scan(&psi).unwrap();
    let (below, above) = (root_count(&rows, 9.5), root_count(&rows, 10.0));
    let gamma = found.map(|d| d.gamma);
    (
        gamma.is_some_and(|g| (10.1..=11.1).contains(&g)) && below == 1 && above >= 2,
        format!("γ* = {gamma:?}; roots at γ=9.5: {below}, at γ=10: {above}"),
    )
}

fn adiabatic_cross_check() -> Outcome {
    let m = model(1.0, 1.0);
    let mut ok = true;
    let mut detail = Vec::new();
    for (i, gamma) in [2.0, 10.0, 30.0].into_iter().enumerate() {
        let adiabatic = sigma_z_adiabatic(&AdiabaticParams::from_gamma(gamma, m).unwrap()).unwrap();
        let (mc, se) = pimc(&m, &bath(gamma, 0.1), 512, 1_000_000, 120 + i as u64);
        ok &= within_stderr(mc, adiabatic, se);
        detail.push(format!("γ={gamma}: adiabatic {adiabatic:.4} pi {mc:.4}±{se:.4}"));
    }
    let worst_orig = [0.5, 1.0, 1.5, 2.0]
        .into_iter()
        .map(|gamma| {
            let adiabatic = sigma_z_adiabatic(&AdiabaticParams::from_gamma(gamma, m).unwrap()).unwrap();
            (sigma_z(Method::Orig2, &m, &bath(gamma, 0.1)) - adiabatic).abs()
        })
        .fold(0.0, f64::max);
    ok &= worst_orig < 0.01;
    detail.push(format!("orig2 worst gap for γ≤2: {worst_orig:.4}"));
    (ok, detail.join("; "))
}

fn oracle_triangle() -> Outcome {
    let m = model(1.0, 3.0);
    let discrete = discretize_bath(4, &BathParams::new(2.0, 5.0).unwrap(), 10).unwrap();
    let exact = exact_rdm(&discrete, &m, &ExactSettings::default())
        .unwrap()
        .rho
        .sigma_z();
    let kernel = discrete.spectral_density();
    let (mc, se) = pimc(&m, &kernel, 256, 1_000_000, 130);
    let orig2 = sigma_z(Method::Orig2, &m, &kernel);
    (
        within_stderr(mc, exact, se) && (orig2 - exact).abs() < 0.01,
        format!("exact {exact:.5}, pimc {mc:.5} ± {se:.5}, orig2 {orig2:.5}"),
    )
}

fn property_suites() -> Outcome {
    let cases = [
        (1.0, 3.0, 1.0, 5.0, 10.0),
        (0.5, 5.0, 2.0, 1.5, 10.6),
        (2.0, 1.0, 0.5, 0.5, 30.0),
    ];
    let (mut sym, mut trace, mut parity, mut phi) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (eps, delta, beta, omega_c, gamma) in cases {
        let m = ModelParams::new(eps, delta, beta).unwrap();
        let flipped = ModelParams::new(-eps, delta, beta).unwrap();
        let b = bath(gamma, omega_c);
        for f in [Frame::Original, Frame::FullPolaron, Frame::Variational] {
            let frame = frame_for(f, &m, &b).unwrap();
            let corr = BathCorrelations::new(&frame, &m, &b, &Tolerance::default()).unwrap();
            for k in 0..=10 {
                let tau = 0.05 * k as f64 * beta;
                let (lo, hi) = (corr.at(tau).unwrap(), corr.at(beta - tau).unwrap());
                for ch in [Channel::XX, Channel::YY, Channel::ZZ] {
                    sym = sym.max((lo.get(ch) - hi.get(ch)).abs() / lo.get(ch).abs().max(1.0));
                }
                sym = sym.max((lo.get(Channel::ZY) + hi.get(Channel::ZY)).abs() / lo.get(Channel::ZY).abs().max(1.0));
            }
            if f != Frame::Original && frame.b > 0.0 {
                let expected = -2.0 * frame.b.ln();
                phi = phi.max((corr.phi(0.0).unwrap() - expected).abs() / expected.abs().max(1.0));
            }
            let s = QuadratureSettings::default();
            let r0 = density_matrix_with(&frame, &m, &b, Order::Zero, &s).unwrap();
            let r2 = density_matrix_with(&frame, &m, &b, Order::Two, &s).unwrap();
            trace = trace.max((r2.rho.operator() - r0.rho.operator()).trace().norm());
        }
        for k in Method::ALL {
            parity = parity.max((sigma_z(k, &m, &b) + sigma_z(k, &flipped, &b)).abs());
        }
    }

    let m = model(1.0, 3.0);
    let smooth = |t: f64| 0.5 + 0.5 * (std::f64::consts::PI * t).sin();
    let product = |n: usize| {
        let dtau = m.beta / n as f64;
        let values = (0..n).map(|j| smooth((j as f64 + 0.5) * dtau)).collect();
        propagate(&NoisePath::new(values, dtau).unwrap(), &m)
    };
    let reference = product(1 << 14);
    let err = |n| product(n).max_abs_diff(&reference);
    let trotter = [2usize, 4, 8].map(|n| err(n) / err(2 * n));
    let trotter_ok = trotter.iter().all(|r| (3.0..5.0).contains(r));

    let b = bath(10.0, 5.0);
    let (plus, se_plus) = pimc(&m, &b, 64, 100_000, 140);
    let (minus, se_minus) = pimc(&model(-1.0, 3.0), &b, 64, 100_000, 141);
    let mc_parity = (plus + minus).abs() < 3.0 * se_plus.hypot(se_minus);
    let b = bath(2.0, 5.0);
    let (_, se_small) = pimc(&m, &b, 32, 50_000, 142);
    let (_, se_large) = pimc(&m, &b, 32, 200_000, 142);
    let scaling = se_small / se_large / 2.0;

    let ok = sym < 1e-10
        && trace < 1e-12
        && parity < 1e-10
        && phi < 1e-8
        && trotter_ok
        && mc_parity
        && (scaling - 1.0).abs() < 0.2;
    (
        ok,
        format!(
            "symmetry {sym:.1e}, trace {trace:.1e}, parity {parity:.1e} (pimc {:.1e}), φ(0) {phi:.1e}, \
             trotter ratios {:.2}/{:.2}/{:.2}, stderr ratio/2 {scaling:.3}",
            (plus + minus).abs(),
            trotter[0],
            trotter[1],
            trotter[2]
        ),
    )
}

fn phase_diagram() -> Outcome {
    let (m, b) = fast_bath_defaults();
    let setup = Setup::resolve(&Config::default(), m, b).unwrap();
    let pimc = PimcSection {
        n_samples: 100_000,
        seed: 1000,
        ..Default::default()
    }
    .settings()
    .unwrap();
    let plan = PhasePlan::new(setup, &PhaseDiagramSection::default(), pimc).unwrap();
    let rows = run_phase_diagram(&plan);
    let failed = rows.iter().filter(|r| r.failed).count();
    // Quadrants by index on the 11 × 11 grid, leaving out the middle row and
    // column.
    let mid = plan.gammas.len() / 2;
    let upper = |i: usize| i > mid;
    let lower = |i: usize| i < mid;
    let method = |k| MethodName::Perturbative(k);
    let (orig, n_orig) = mean_rel_error(&rows, method(Method::Orig2), |(g, w)| upper(g) && upper(w));
    let (pol, n_pol) = mean_rel_error(&rows, method(Method::Pol2), |(g, w)| lower(g) && lower(w));
    let (var, n_var) = mean_rel_error(&rows, method(Method::Var2), |_| true);
    let cells = plan.gammas.len() * plan.omega_cs.len();
    (
        failed == 0 && orig > 0.1 && pol > 0.1 && var < 0.05,
        format!(
            "orig2 top-right {orig:.3} ({n_orig} cells), pol2 bottom-left {pol:.3} ({n_pol}), \
             var2 overall {var:.4} ({n_var} of {cells} reliable), {failed} failed rows"
        ),
    )
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("AC1", "isolated-system limit", isolated_limit),
        ("AC2", "strong-coupling polaron limit", polaron_limit),
        ("AC3", "fast-bath regime against the path integral", fast_bath_regime),
        (
            "AC4",
            "variational discontinuity and root counts",
            variational_discontinuity,
        ),
        ("AC5", "adiabatic cross-check", adiabatic_cross_check),
        ("AC6", "discrete-bath oracle triangle", oracle_triangle),
        ("AC7", "property suites", property_suites),
        ("AC8", "phase diagram at Δ = 3", phase_diagram),
    ];
    let mut failed = 0;
    for (id, name, check) in criteria {
        let start = Instant::now();
        let (ok, detail) = check();
        failed += usize::from(!ok);
        let verdict = if ok { "PASS" } else { "FAIL" };
        println!(
            "{id} {verdict} {name} [{:.1} s]: {detail}",
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
