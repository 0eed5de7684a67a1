//! The `verify` suite: named checks with values, thresholds and pass flags,
//! aggregated into one machine-readable report.

use std::sync::Arc;

use serde::Serialize;

use hamsys_core::bubble::{self, BubbleSolution};
use hamsys_core::constants::{self};
use hamsys_core::halfspace::{self, CorrectorKind, QuadricBoundaryData};
use hamsys_core::quad::QuadratureSpec;
use hamsys_core::Result;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
    pub overall_pass: bool,
}

fn check_le(name: &str, value: f64, threshold: f64) -> Check {
    Check {
        name: name.into(),
        value,
        threshold,
        pass: value.is_finite() && value <= threshold,
    }
}

fn check_gt(name: &str, value: f64, threshold: f64) -> Check {
    Check {
        name: name.into(),
        value,
        threshold,
        pass: value.is_finite() && value > threshold,
    }
}

/// Run the full identity/positivity suite on a bubble.
pub fn verify(sol: &Arc<BubbleSolution>, quad_rel_tol: f64) -> Result<VerificationReport> {
    let mut checks = Vec::new();
    let n = sol.pair.n;
    let spec = QuadratureSpec::new(n, 1e-12, quad_rel_tol);

    // Quadrature identities.
    let mass_u = constants::sobolev_mass_with(sol, &spec)?;
    let mass_v = constants::sobolev_mass_from_v(sol, &spec)?;
    checks.push(check_le(
        "mass_cross_check",
        (mass_u - mass_v).abs() / mass_u.abs(),
        1e-6,
    ));
    let identity = constants::identity_check(sol, &spec)?;
    checks.push(check_le("identity_residual", identity.residual, 1e-5));
    checks.push(check_le(
        "identity_decomposition",
        identity.decomposition_residual,
        1e-5,
    ));

    let boundary = constants::boundary_constants(sol, &spec)?;
    let logs = constants::log_constants(sol, &spec)?;
    let (p, q) = (sol.pair.p, sol.pair.q);
    let (lo, hi) = constants::lambda_window(p, q);
    let at = |lambda: f64| {
        constants::reduced_constants(mass_u, boundary, logs, (p, q), n, lambda).map(|c| c.3)
    };
    let c4_a = at(lo + 0.3 * (hi - lo))?;
    let c4_b = at(lo + 0.6 * (hi - lo))?;
    checks.push(check_le(
        "c4_lambda_independence",
        (c4_a - c4_b).abs() / c4_a.abs(),
        1e-6,
    ));
    let reduced_mid = constants::reduced_constants(
        mass_u,
        boundary,
        logs,
        (p, q),
        n,
        0.5 * (lo + hi),
    )?;
    checks.push(check_gt("c2_positive", reduced_mid.1, 0.0));
    checks.push(check_gt("c4_positive", reduced_mid.3, 0.0));
    checks.push(check_gt(
        "boundary_constants_positive",
        boundary.0.min(boundary.1).min(boundary.2).min(boundary.3),
        0.0,
    ));

    // Decay laws of the stored profile.
    let (e_u, e_v) = sol.tail_exponents;
    checks.push(check_le(
        "tail_slope_u",
        (sol.tail.slope_u + e_u).abs(),
        0.02,
    ));
    checks.push(check_le(
        "tail_slope_v",
        (sol.tail.slope_v + e_v).abs(),
        0.02,
    ));
    let log_deriv = bubble::log_derivative_check(sol);
    checks.push(check_le(
        "log_derivative_u",
        (log_deriv.lim_u - log_deriv.expected_u).abs(),
        0.05,
    ));
    checks.push(check_le(
        "log_derivative_v",
        (log_deriv.lim_v - log_deriv.expected_v).abs(),
        0.05,
    ));
    checks.push(check_le("fit_variation", sol.tail.fit_variation, 0.01));
    checks.push(check_le("ode_residual", sol.ode_residual, 1e-8));

    // Corrector suite with an isotropic quadric.
    let rho = QuadricBoundaryData::new(vec![0.5; (n - 1) as usize]);
    let phi0 = halfspace::build_corrector(sol, rho.clone(), CorrectorKind::Phi0)?;
    let probes: Vec<Vec<f64>> = [0.5, 1.0, 2.0, 4.0]
        .iter()
        .map(|&s| {
            let mut x = vec![0.0; n as usize];
            x[0] = s;
            x
        })
        .collect();
    checks.push(check_le(
        "neumann_residual",
        halfspace::neumann_residual(&phi0, &probes)?,
        1e-3,
    ));
    let gamma = sol.decay.require_gamma()?;
    let fit = halfspace::decay_fit(&phi0)?;
    checks.push(check_le(
        "corrector_decay_phi0",
        (fit.slope + gamma).abs(),
        0.1,
    ));
    let psi0 = halfspace::build_corrector(sol, rho.clone(), CorrectorKind::Psi0)?;
    let fit = halfspace::decay_fit(&psi0)?;
    checks.push(check_le(
        "corrector_decay_psi0",
        (fit.slope + (n as f64 - 3.0)).abs(),
        0.1,
    ));
    let (lhs, rhs) = halfspace::c3_crosscheck(sol, &rho)?;
    checks.push(check_le(
        "c3_crosscheck",
        (lhs - rhs).abs() / rhs.abs().max(1e-300),
        1e-3,
    ));

    // Shooting against the symmetric closed form in the same dimension.
    let sym_pair = hamsys_core::hyperbola::classify(
        n,
        (n as f64 + 2.0) / (n as f64 - 2.0),
        (n as f64 + 2.0) / (n as f64 - 2.0),
    )?;
    let shot = bubble::solve_ground_state(&sym_pair, 1e-12, 1e3)?;
    let oracle = bubble::closed_form_symmetric(n)?;
    let mut sup: f64 = 0.0;
    for k in 0..=1000 {
        let r = 50.0 * k as f64 / 1000.0;
        sup = sup.max((shot.u_at(r) - oracle.u_at(r)).abs());
    }
    checks.push(check_le("symmetric_bubble_sup_error", sup, 1e-6));
    checks.push(check_le(
        "symmetric_bubble_beta",
        (shot.beta_star - 1.0).abs(),
        1e-8,
    ));

    // Stationarity of the reduced energy at the stationary scale for a
    // reference curvature H = -1, from the constants computed above.
    let (c2, c4) = (reduced_mid.1, reduced_mid.3);
    if c2 > 0.0 && c4 > 0.0 {
        let d0 = c2 / c4;
        let theta = |d: f64| c4 * d - c2 * d.ln();
        let step = 1e-3 * d0;
        let fd = (-theta(d0 + 2.0 * step) + 8.0 * theta(d0 + step) - 8.0 * theta(d0 - step)
            + theta(d0 - 2.0 * step))
            / (12.0 * step);
        checks.push(check_le(
            "stationarity",
            fd.abs() / theta(d0).abs().max(1.0),
            1e-10,
        ));
    } else {
        checks.push(check_le("stationarity", f64::INFINITY, 1e-10));
    }

    let overall_pass = checks.iter().all(|c| c.pass);
    Ok(VerificationReport {
        checks,
        overall_pass,
    })
}
