//! Shooting-solver validation: symmetric closed-form oracle, an independent
//! fixed-step RK4 regression for the asymmetric ground state, tail laws,
//! the bisection dichotomy, and scaled-bubble evaluation.

use std::sync::{Arc, OnceLock};
use std::time::Instant;

use hamsys_core::bubble::{self, BubbleSolution, ScaledBubble, TrialClass};
use hamsys_core::hyperbola::ExponentPair;

fn asym5() -> &'static BubbleSolution {
    static CELL: OnceLock<BubbleSolution> = OnceLock::new();
    CELL.get_or_init(|| {
        let pair = ExponentPair::critical_from_p(5, 2.75).unwrap();
        bubble::solve_ground_state(&pair, 1e-12, 1e3).unwrap()
    })
}

/// Plain fixed-step RK4 on the radial system, independent of the adaptive
/// integrator in the crate. Returns +1 when u crosses zero first ("beta too
/// big"), -1 when v crosses ("too small"), 0 when neither crossed.
fn rk4_classify(n: f64, p: f64, q: f64, beta: f64, r_max: f64) -> i32 {
    let rhs = |r: f64, y: [f64; 4]| -> [f64; 4] {
        [
            y[1],
            -(n - 1.0) / r * y[1] - y[2].max(0.0).powf(q),
            y[3],
            -(n - 1.0) / r * y[3] - y[0].max(0.0).powf(p),
        ]
    };
    let r0 = 1e-4;
    let mut y = [
        1.0 - beta.powf(q) * r0 * r0 / (2.0 * n),
        -beta.powf(q) * r0 / n,
        beta - r0 * r0 / (2.0 * n),
        -r0 / n,
    ];
    let mut r = r0;
    while r < r_max {
        let h = (2e-4 * (1.0 + r / 8.0)).min(r_max - r);
        let k1 = rhs(r, y);
        let mut y2 = y;
        for i in 0..4 {
            y2[i] += 0.5 * h * k1[i];
        }
        let k2 = rhs(r + 0.5 * h, y2);
        let mut y3 = y;
        for i in 0..4 {
            y3[i] += 0.5 * h * k2[i];
        }
        let k3 = rhs(r + 0.5 * h, y3);
        let mut y4 = y;
        for i in 0..4 {
            y4[i] += h * k3[i];
        }
        let k4 = rhs(r + h, y4);
        for i in 0..4 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        r += h;
        if y[0] <= 0.0 {
            return 1;
        }
        if y[2] <= 0.0 {
            return -1;
        }
    }
    0
}

#[test]
fn symmetric_oracle_sup_error_and_beta() {
    let start = Instant::now();
    let pair = ExponentPair::critical_from_p(4, 3.0).unwrap();
    let sol = bubble::solve_ground_state(&pair, 1e-12, 1e3).unwrap();
    assert!(
        (sol.beta_star - 1.0).abs() <= 1e-8,
        "beta* = {}",
        sol.beta_star
    );
    let oracle = bubble::closed_form_symmetric(4).unwrap();
    let mut sup: f64 = 0.0;
    for k in 0..=2000 {
        let r = 50.0 * k as f64 / 2000.0;
        sup = sup.max((sol.u_at(r) - oracle.u_at(r)).abs());
        sup = sup.max((sol.v_at(r) - oracle.v_at(r)).abs());
    }
    assert!(sup <= 1e-6, "sup error {sup}");
    assert!(start.elapsed().as_secs_f64() <= 5.0);
    assert!(sol.ode_residual <= 1e-8);
}

#[test]
fn asymmetric_beta_regression_and_independent_oracle() {
    // Frozen from a tol = 1e-12 solve; the fixed-step RK4 oracle below
    // brackets the same value independently.
    let frozen = 0.937626597935;
    let sol = asym5();
    assert!(
        (sol.beta_star - frozen).abs() <= 2e-9,
        "beta* = {:.12}",
        sol.beta_star
    );
    let (n, p, q) = (5.0, 2.75, 2.0);
    let lo = frozen - 3e-5;
    let hi = frozen + 3e-5;
    let class_lo = rk4_classify(n, p, q, lo, 400.0);
    let class_hi = rk4_classify(n, p, q, hi, 400.0);
    assert_eq!(class_lo, -1, "below beta*: v must cross first");
    assert_eq!(class_hi, 1, "above beta*: u must cross first");
}

#[test]
fn tail_constants_and_slopes() {
    let sol = asym5();
    // q_above at N = 5: both tails decay like r^{-3}.
    assert!((sol.tail.slope_v + 3.0).abs() <= 0.01, "{}", sol.tail.slope_v);
    assert!((sol.tail.slope_u + 3.0).abs() <= 0.02, "{}", sol.tail.slope_u);
    assert!(sol.tail.a > 0.0 && sol.tail.b > 0.0);
    assert!(sol.tail.fit_variation <= 0.01);

    // q_below pair: u decays like r^{-(q(N-2)-2)} = r^{-5/2}.
    let pair = ExponentPair::critical_from_p(5, 4.0).unwrap();
    let sol = bubble::solve_ground_state(&pair, 1e-12, 4e3).unwrap();
    assert!((sol.tail.slope_u + 2.5).abs() <= 0.02, "{}", sol.tail.slope_u);
    assert!((sol.tail.slope_v + 3.0).abs() <= 0.02, "{}", sol.tail.slope_v);
}

#[test]
fn log_derivative_limits() {
    let sym = bubble::closed_form_symmetric(4).unwrap();
    let check = bubble::log_derivative_check(&sym);
    assert!((check.lim_u + 2.0).abs() <= 0.02, "{}", check.lim_u);
    assert!((check.lim_v + 2.0).abs() <= 0.02, "{}", check.lim_v);
    assert!(check.within_tolerance);

    let sym6 = bubble::closed_form_symmetric(6).unwrap();
    let check = bubble::log_derivative_check(&sym6);
    assert!((check.lim_u + 4.0).abs() <= 0.02, "{}", check.lim_u);

    let pair = ExponentPair::critical_from_p(5, 4.0).unwrap();
    let sol = bubble::solve_ground_state(&pair, 1e-12, 4e3).unwrap();
    let check = bubble::log_derivative_check(&sol);
    assert!((check.lim_u + 2.5).abs() <= 0.03, "{}", check.lim_u);
    assert_eq!(check.expected_u, -2.5);
}

#[test]
fn bisection_trace_flips_exactly_once() {
    let sol = asym5();
    let mut trace = sol.solver_meta.trace.clone();
    assert!(trace.len() > 10);
    trace.sort_by(|a, b| a.beta.partial_cmp(&b.beta).unwrap());
    let mut flips = 0;
    for pair in trace.windows(2) {
        if pair[0].class != pair[1].class {
            flips += 1;
        }
    }
    assert_eq!(flips, 1, "classification must flip exactly once");
    // The low side is the v-crossing class.
    assert_eq!(trace.first().unwrap().class, TrialClass::TooSmall);
    assert_eq!(trace.last().unwrap().class, TrialClass::TooBig);
}

#[test]
fn profile_positive_and_decreasing() {
    let sol = asym5();
    let p = &sol.profile;
    assert_eq!(p.u[0], 1.0);
    assert_eq!(p.du[0], 0.0);
    assert_eq!(p.dv[0], 0.0);
    let floor = 1e-9;
    for i in 1..p.r.len() {
        assert!(p.u[i] > 0.0 && p.v[i] > 0.0, "positivity at r = {}", p.r[i]);
        if p.u[i] > floor && p.v[i] > floor {
            assert!(p.u[i] < p.u[i - 1], "u decreasing at r = {}", p.r[i]);
            assert!(p.v[i] < p.v[i - 1], "v decreasing at r = {}", p.r[i]);
        }
    }
}

#[test]
fn scaled_evaluation_and_covariance() {
    let base = Arc::new(bubble::closed_form_symmetric(4).unwrap());
    let sb = ScaledBubble::new(base.clone(), 1.0, vec![0.0; 4]).unwrap();
    let (u, v) = sb.evaluate(&[0.0; 4]);
    assert_eq!(u, 1.0);
    assert!((v - base.beta_star).abs() < 1e-14);

    let half = ScaledBubble::new(base.clone(), 0.5, vec![0.3, -0.1, 0.0, 0.2]).unwrap();
    let (u, _) = half.evaluate(&[0.3, -0.1, 0.0, 0.2]);
    assert!((u - 2.0).abs() < 1e-14, "delta^-1 at the center, got {u}");

    // Exact scale covariance: evaluation factors through the unit profile.
    let xi = vec![0.4, 0.0, -0.7, 0.1];
    let sb = ScaledBubble::new(base.clone(), 0.037, xi.clone()).unwrap();
    let unit = ScaledBubble::new(base.clone(), 1.0, vec![0.0; 4]).unwrap();
    for x in [[1.0, 0.2, 0.0, -0.3], [0.41, 0.01, -0.69, 0.11]] {
        let (u_scaled, v_scaled) = sb.evaluate(&x);
        let z: Vec<f64> = x.iter().zip(&xi).map(|(a, b)| (a - b) / 0.037).collect();
        let (u_unit, v_unit) = unit.evaluate(&z);
        let scale = 0.037_f64.powf(-1.0);
        assert!((u_scaled - scale * u_unit).abs() <= 1e-10 * u_scaled.abs().max(1e-300));
        assert!((v_scaled - scale * v_unit).abs() <= 1e-10 * v_scaled.abs().max(1e-300));
    }
}

#[test]
fn scaling_residual_under_laplacian() {
    // -lap(u) = v^q for the scaled pair, checked by radial finite
    // differences of the interpolant at 20 radii.
    let base = Arc::new(bubble::closed_form_symmetric(4).unwrap());
    let delta = 0.1;
    let sb = ScaledBubble::new(base, delta, vec![0.0; 4]).unwrap();
    let radial_u = |r: f64| sb.evaluate(&[r, 0.0, 0.0, 0.0]).0;
    let h = 1e-4;
    for k in 1..=20 {
        let r = 0.05 + 0.4 * k as f64 / 20.0;
        let lap = (radial_u(r + h) - 2.0 * radial_u(r) + radial_u(r - h)) / (h * h)
            + 3.0 / r * (radial_u(r + h) - radial_u(r - h)) / (2.0 * h);
        let v = sb.evaluate(&[r, 0.0, 0.0, 0.0]).1;
        let forcing = v.powi(3);
        assert!(
            (lap + forcing).abs() <= 1e-5 * forcing.abs(),
            "residual at r = {r}: {:.3e}",
            (lap + forcing).abs() / forcing
        );
    }
}

#[test]
fn derivative_bubbles_match_finite_differences() {
    let base = Arc::new(bubble::closed_form_symmetric(4).unwrap());
    let xi = vec![0.1, -0.2, 0.3, 0.0];
    let delta = 0.8;
    let frame = vec![
        vec![1.0, 0.0, 0.0, 0.0],
        vec![0.0, 1.0, 0.0, 0.0],
        vec![0.0, 0.0, 1.0, 0.0],
    ];
    let sb = ScaledBubble::new(base.clone(), delta, xi.clone()).unwrap();

    // At the center: Phi^0 = -a U(0) delta^{-a-1}, tangentials vanish.
    let (phi0, _) = sb.derivative(0, &xi, &frame).unwrap();
    assert!((phi0 + delta.powf(-2.0)).abs() < 1e-12);
    let (phi1, psi1) = sb.derivative(1, &xi, &frame).unwrap();
    assert_eq!((phi1, psi1), (0.0, 0.0));

    // Central finite difference in delta at off-center points.
    let mut state = 777_u64;
    let mut next = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    for _ in 0..10 {
        let x: Vec<f64> = (0..4).map(|_| 2.0 * next() - 0.5).collect();
        let (phi, psi) = sb.derivative(0, &x, &frame).unwrap();
        let h = 1e-5 * delta;
        let up = ScaledBubble::new(base.clone(), delta + h, xi.clone()).unwrap();
        let dn = ScaledBubble::new(base.clone(), delta - h, xi.clone()).unwrap();
        let fd_u = (up.evaluate(&x).0 - dn.evaluate(&x).0) / (2.0 * h);
        let fd_v = (up.evaluate(&x).1 - dn.evaluate(&x).1) / (2.0 * h);
        assert!(
            (phi - fd_u).abs() <= 1e-6 * fd_u.abs().max(1e-8),
            "delta-derivative: {phi} vs {fd_u}"
        );
        assert!((psi - fd_v).abs() <= 1e-6 * fd_v.abs().max(1e-8));
    }

    // Tangential derivative against finite difference in xi.
    let x = vec![0.5, 0.1, 0.2, 0.4];
    let (phi, _) = sb.derivative(2, &x, &frame).unwrap();
    let h = 1e-6;
    let mut xi_p = xi.clone();
    xi_p[1] += h;
    let mut xi_m = xi.clone();
    xi_m[1] -= h;
    let up = ScaledBubble::new(base.clone(), delta, xi_p).unwrap();
    let dn = ScaledBubble::new(base.clone(), delta, xi_m).unwrap();
    let fd = (up.evaluate(&x).0 - dn.evaluate(&x).0) / (2.0 * h);
    assert!((phi - fd).abs() <= 1e-6 * fd.abs().max(1e-8), "{phi} vs {fd}");
}

#[test]
fn derivative_rejects_bad_frame() {
    let base = Arc::new(bubble::closed_form_symmetric(4).unwrap());
    let sb = ScaledBubble::new(base, 1.0, vec![0.0; 4]).unwrap();
    let skewed = vec![
        vec![1.0, 1e-6, 0.0, 0.0],
        vec![0.0, 1.0, 0.0, 0.0],
        vec![0.0, 0.0, 1.0, 0.0],
    ];
    let err = sb.derivative(1, &[0.5, 0.0, 0.0, 0.0], &skewed).unwrap_err();
    assert!(err.to_string().contains("orthonormal"));
}

#[test]
fn solver_input_validation() {
    let pair = ExponentPair::critical_from_p(4, 3.0).unwrap();
    assert!(bubble::solve_ground_state(&pair, 1e-3, 1e3).is_err());
    assert!(bubble::solve_ground_state(&pair, 1e-12, 10.0).is_err());
    let sub = hamsys_core::hyperbola::classify(4, 3.0, 2.9).unwrap();
    assert!(bubble::solve_ground_state(&sub, 1e-12, 1e3).is_err());
    // Logarithmic regime is rejected up front.
    let p_log = hamsys_core::hyperbola::p_from_q(4, 2.0).unwrap();
    let log_pair = hamsys_core::hyperbola::classify(4, p_log, 2.0).unwrap();
    let err = bubble::solve_ground_state(&log_pair, 1e-12, 1e3).unwrap_err();
    assert!(err.to_string().contains("logarithmic"));
}

#[test]
fn shooting_matches_closed_form_in_dimension_six() {
    let pair = ExponentPair::critical_from_p(6, 2.0).unwrap();
    let sol = bubble::solve_ground_state(&pair, 1e-12, 1e3).unwrap();
    assert!((sol.beta_star - 1.0).abs() <= 1e-8, "{}", sol.beta_star);
    let oracle = bubble::closed_form_symmetric(6).unwrap();
    let mut sup: f64 = 0.0;
    for k in 0..=1000 {
        let r = 50.0 * k as f64 / 1000.0;
        sup = sup.max((sol.u_at(r) - oracle.u_at(r)).abs());
    }
    assert!(sup <= 1e-6, "sup error {sup}");
    // Fast r^-4 tails: the fit window must retreat above the noise floor.
    assert!(sol.tail.fit_window.1 <= 1e3);
    assert!((sol.tail.slope_u + 4.0).abs() <= 0.02, "{}", sol.tail.slope_u);
}
