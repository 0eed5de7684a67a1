//! Corrector-field validation: closed-form axis oracle, Neumann residual,
//! linearity, harmonicity, decay slopes, and the boundary-coupling
//! crosscheck against the constants module.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use hamsys_core::bubble::{self, BubbleSolution};
use hamsys_core::halfspace::{
    self, build_corrector, build_corrector_with_resolution, CorrectorKind, QuadricBoundaryData,
};
use hamsys_core::hyperbola::ExponentPair;

fn sym4() -> &'static Arc<BubbleSolution> {
    static CELL: OnceLock<Arc<BubbleSolution>> = OnceLock::new();
    CELL.get_or_init(|| Arc::new(bubble::closed_form_symmetric(4).unwrap()))
}

fn asym5() -> &'static Arc<BubbleSolution> {
    static CELL: OnceLock<Arc<BubbleSolution>> = OnceLock::new();
    CELL.get_or_init(|| {
        let pair = ExponentPair::critical_from_p(5, 2.75).unwrap();
        Arc::new(bubble::solve_ground_state(&pair, 1e-12, 1e3).unwrap())
    })
}

fn half_rho(n: usize) -> QuadricBoundaryData {
    QuadricBoundaryData::new(vec![0.5; n - 1])
}

/// Exact on-axis value of the symmetric N=4 u-corrector, by partial
/// fractions of int r^3 (-U')(r^2 + h^2)^{-1} dr with U = (1 + r^2/8)^{-1}.
fn axis_oracle_sym4(h: f64, trace: f64) -> f64 {
    let hh = h * h / 8.0;
    let denom = (1.0 - hh) * (1.0 - hh);
    let g = (PI / 2.0) * (1.0 - 2.0 * hh) / denom
        + (PI / 4.0) / (hh - 1.0)
        + (PI / 2.0) * hh * (h / 8.0_f64.sqrt()) / denom;
    (1.0 / (2.0 * PI * PI)) * 4.0 * PI * (trace / 3.0) * 4.0 * 2.0_f64.sqrt() * g
}

#[test]
fn axis_values_match_closed_form() {
    let field = build_corrector(sym4(), half_rho(4), CorrectorKind::Phi0).unwrap();
    for h in [0.5, 1.0, 4.0, 10.0, 100.0] {
        let value = field.eval(&[0.0, 0.0, 0.0, h]).unwrap();
        let exact = axis_oracle_sym4(h, 1.5);
        assert!(
            (value - exact).abs() <= 1e-6 * exact.abs(),
            "h = {h}: {value} vs {exact}"
        );
    }
}

#[test]
fn self_convergence_at_doubled_resolution() {
    let coarse = build_corrector_with_resolution(sym4(), half_rho(4), CorrectorKind::Phi0, 2)
        .unwrap();
    let fine = build_corrector_with_resolution(sym4(), half_rho(4), CorrectorKind::Phi0, 4)
        .unwrap();
    let probe = [0.0, 0.0, 0.0, 1.0];
    let a = coarse.eval(&probe).unwrap();
    let b = fine.eval(&probe).unwrap();
    assert!((a - b).abs() <= 1e-7 * b.abs(), "{a} vs {b}");
}

#[test]
fn zero_data_gives_zero_field() {
    let field = build_corrector(
        sym4(),
        QuadricBoundaryData::new(vec![0.0; 3]),
        CorrectorKind::Phi0,
    )
    .unwrap();
    for x in [[0.3, 0.0, 0.1, 0.5], [0.0, 0.0, 0.0, 3.0]] {
        assert_eq!(field.eval(&x).unwrap(), 0.0);
    }
}

#[test]
fn field_is_linear_in_rho() {
    let one = build_corrector(sym4(), half_rho(4), CorrectorKind::Phi0).unwrap();
    let two = build_corrector(
        sym4(),
        QuadricBoundaryData::new(vec![1.0, 1.0, 1.0]),
        CorrectorKind::Phi0,
    )
    .unwrap();
    let mixed_a = build_corrector(
        sym4(),
        QuadricBoundaryData::new(vec![1.0, 0.0, 0.0]),
        CorrectorKind::Phi0,
    )
    .unwrap();
    let mixed_b = build_corrector(
        sym4(),
        QuadricBoundaryData::new(vec![0.0, 1.0, 1.0]),
        CorrectorKind::Phi0,
    )
    .unwrap();
    let probes = [
        [0.7, -0.2, 0.4, 0.8],
        [0.0, 0.0, 0.0, 2.0],
        [1.5, 1.5, 0.0, 0.01],
        [3.0, 0.0, 1.0, 5.0],
        [0.2, 0.1, 0.05, 0.3],
        [2.0, -2.0, 2.0, 1.0],
        [5.0, 0.0, 0.0, 0.5],
        [0.9, 0.9, 0.9, 0.9],
        [4.0, 1.0, -1.0, 2.5],
        [0.1, 0.3, -0.2, 1.7],
    ];
    for probe in &probes {
        let v1 = one.eval(probe).unwrap();
        let v2 = two.eval(probe).unwrap();
        assert!((v2 - 2.0 * v1).abs() <= 1e-10 * v2.abs().max(1e-6), "doubling");
        let va = mixed_a.eval(probe).unwrap();
        let vb = mixed_b.eval(probe).unwrap();
        assert!(
            (va + vb - v2).abs() <= 1e-10 * v2.abs().max(1e-6),
            "superposition"
        );
    }
}

#[test]
fn neumann_residual_within_tolerance() {
    let field = build_corrector(sym4(), half_rho(4), CorrectorKind::Phi0).unwrap();
    let probes: Vec<Vec<f64>> = [0.5, 1.0, 2.0, 4.0]
        .iter()
        .map(|&s| vec![s, 0.0, 0.0, 0.0])
        .collect();
    let residual = halfspace::neumann_residual(&field, &probes).unwrap();
    assert!(residual <= 1e-3, "residual {residual}");
    // Off-axis probe mixing the coordinates.
    let mixed = vec![vec![0.8, -0.7, 0.4, 0.0]];
    let residual = halfspace::neumann_residual(&field, &mixed).unwrap();
    assert!(residual <= 1e-3, "off-axis residual {residual}");
}

#[test]
fn neumann_residual_improves_with_resolution() {
    let probes: Vec<Vec<f64>> = vec![vec![1.0, 0.0, 0.0, 0.0], vec![2.0, 0.0, 0.0, 0.0]];
    // At very coarse resolution the quadrature error dominates the
    // finite-difference floor, so doubling the node count must cut the
    // residual at least in half.
    let coarse = build_corrector_with_resolution(sym4(), half_rho(4), CorrectorKind::Phi0, 1)
        .unwrap();
    let fine = build_corrector_with_resolution(sym4(), half_rho(4), CorrectorKind::Phi0, 2)
        .unwrap();
    let res_coarse = halfspace::neumann_residual(&coarse, &probes).unwrap();
    let res_fine = halfspace::neumann_residual(&fine, &probes).unwrap();
    assert!(
        res_fine * 2.0 <= res_coarse || res_fine <= 2e-4,
        "coarse {res_coarse} fine {res_fine}"
    );
}

#[test]
fn harmonicity_at_interior_probes() {
    let field = build_corrector(sym4(), half_rho(4), CorrectorKind::Phi0).unwrap();
    let step = 0.02;
    let mut state = 12345_u64;
    let mut next = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    for _ in 0..20 {
        let x0 = [
            4.0 * next() - 2.0,
            4.0 * next() - 2.0,
            4.0 * next() - 2.0,
            0.5 + 2.5 * next(),
        ];
        let f0 = field.eval(&x0).unwrap();
        let mut lap = 0.0;
        for i in 0..4 {
            let mut xp = x0;
            xp[i] += step;
            let mut xm = x0;
            xm[i] -= step;
            lap += field.eval(&xp).unwrap() + field.eval(&xm).unwrap() - 2.0 * f0;
        }
        lap /= step * step;
        assert!(
            lap.abs() <= 1e-3 * f0.abs().max(1e-3),
            "Laplacian {lap:.3e} at {x0:?} (field {f0:.3e})"
        );
    }
}

#[test]
fn field_vanishes_at_infinity() {
    let field = build_corrector(sym4(), half_rho(4), CorrectorKind::Phi0).unwrap();
    // gamma = 1: once past the crossover region a decade must cost ~10x.
    let near = field.eval(&[0.0, 0.0, 0.0, 150.0]).unwrap();
    let far = field.eval(&[0.0, 0.0, 0.0, 1500.0]).unwrap();
    assert!(far.abs() <= 2.0 * near.abs() / 10.0, "{far} vs {near}");
}

#[test]
fn decay_slopes_both_kinds_and_pairs() {
    let phi4 = build_corrector(sym4(), half_rho(4), CorrectorKind::Phi0).unwrap();
    let fit = halfspace::decay_fit(&phi4).unwrap();
    assert!(fit.conclusive);
    assert!((fit.slope + 1.0).abs() <= 0.1, "sym4 phi0 slope {}", fit.slope);

    let psi4 = build_corrector(sym4(), half_rho(4), CorrectorKind::Psi0).unwrap();
    let fit = halfspace::decay_fit(&psi4).unwrap();
    assert!((fit.slope + 1.0).abs() <= 0.1, "sym4 psi0 slope {}", fit.slope);

    let phi5 = build_corrector(asym5(), half_rho(5), CorrectorKind::Phi0).unwrap();
    let fit = halfspace::decay_fit(&phi5).unwrap();
    assert!((fit.slope + 2.0).abs() <= 0.1, "asym5 phi0 slope {}", fit.slope);

    let psi5 = build_corrector(asym5(), half_rho(5), CorrectorKind::Psi0).unwrap();
    let fit = halfspace::decay_fit(&psi5).unwrap();
    assert!((fit.slope + 2.0).abs() <= 0.1, "asym5 psi0 slope {}", fit.slope);
}

#[test]
fn decay_slope_stable_under_refinement() {
    let coarse = build_corrector_with_resolution(sym4(), half_rho(4), CorrectorKind::Phi0, 2)
        .unwrap();
    let fine = build_corrector_with_resolution(sym4(), half_rho(4), CorrectorKind::Phi0, 4)
        .unwrap();
    let a = halfspace::decay_fit(&coarse).unwrap().slope;
    let b = halfspace::decay_fit(&fine).unwrap().slope;
    assert!((a - b).abs() <= 0.02, "slopes {a} vs {b}");
}

#[test]
fn c3_crosscheck_sym_and_asym() {
    let (lhs, rhs) = halfspace::c3_crosscheck(sym4(), &half_rho(4)).unwrap();
    // H_local = 1 here, so both sides equal C3 = 12 sqrt(2) pi^2.
    let oracle = 12.0 * 2.0_f64.sqrt() * PI * PI;
    assert!((lhs - rhs).abs() <= 1e-3 * rhs.abs());
    assert!((rhs - oracle).abs() <= 1e-5 * oracle);

    let (lhs, rhs) = halfspace::c3_crosscheck(asym5(), &half_rho(5)).unwrap();
    assert!((lhs - rhs).abs() <= 1e-3 * rhs.abs(), "{lhs} vs {rhs}");
}

#[test]
fn c3_crosscheck_zero_and_isotropy() {
    let zero = QuadricBoundaryData::new(vec![0.0; 3]);
    let (lhs, rhs) = halfspace::c3_crosscheck(sym4(), &zero).unwrap();
    assert_eq!(lhs, 0.0);
    assert_eq!(rhs, 0.0);
    // Radial data: any single unit coefficient gives the same coupling.
    let e1 = QuadricBoundaryData::new(vec![1.0, 0.0, 0.0]);
    let e2 = QuadricBoundaryData::new(vec![0.0, 1.0, 0.0]);
    let (l1, _) = halfspace::c3_crosscheck(sym4(), &e1).unwrap();
    let (l2, _) = halfspace::c3_crosscheck(sym4(), &e2).unwrap();
    assert!((l1 - l2).abs() <= 1e-12 * l1.abs());
    // And the coupling is linear in the trace.
    let (l3, _) = halfspace::c3_crosscheck(sym4(), &half_rho(4)).unwrap();
    assert!((l3 / 1.5 - l1).abs() <= 1e-9 * l1.abs());
}

#[test]
fn two_term_expansion_reduces_to_bubble_for_zero_rho() {
    let expansion = halfspace::ProjectionExpansion::new(
        sym4(),
        QuadricBoundaryData::new(vec![0.0; 3]),
    )
    .unwrap();
    let delta = 0.25;
    let x = [0.1, 0.0, -0.2, 0.4];
    let (u, v) = expansion.eval(delta, &x).unwrap();
    let z: f64 = x.iter().map(|t| t * t).sum::<f64>().sqrt() / delta;
    let exact_u = delta.powf(-1.0) * sym4().u_at(z);
    assert!((u - exact_u).abs() <= 1e-12 * exact_u.abs());
    assert!((v - exact_u).abs() <= 1e-12 * exact_u.abs());
}

#[test]
fn expansion_order_flags() {
    let order = halfspace::expansion_order(sym4()).unwrap();
    // gamma = 1, N = 4: every log flag set.
    assert!(order.sigma_log && order.tau_log && order.sigma_hat_log && order.tau_hat_log);
    assert!((order.u_leading - 0.0).abs() < 1e-12); // -4/4 + 1
    assert!((order.u_remainder - 1.0).abs() < 1e-12);

    let order = halfspace::expansion_order(asym5()).unwrap();
    // gamma = 2, N = 5: sigma and tau set, the hatted flags clear.
    assert!(order.sigma_log && order.tau_log);
    assert!(!order.sigma_hat_log && !order.tau_hat_log);
    let a = 5.0 / (2.75 + 1.0);
    let b = 5.0 / 3.0;
    assert!((order.u_leading - (1.0 - a)).abs() < 1e-12);
    assert!((order.v_leading - (1.0 - b)).abs() < 1e-12);
}

#[test]
fn expansion_refuses_small_gamma() {
    // q = 1.2 on the N = 5 hyperbola: gamma = q(N-2) - 3 = 0.6 < 1.
    let q = 1.2;
    let p = hamsys_core::hyperbola::p_from_q(5, q).unwrap();
    let pair = hamsys_core::hyperbola::classify(5, p, q).unwrap();
    let sol = Arc::new(bubble::solve_ground_state(&pair, 1e-10, 1e3).unwrap());
    let err = match halfspace::ProjectionExpansion::new(&sol, QuadricBoundaryData::new(vec![0.5; 4])) {
        Err(e) => e,
        Ok(_) => panic!("expected refusal for gamma < 1"),
    };
    assert_eq!(err.exit_code(), 4, "refusal expected: {err}");
    // The corrector itself is still allowed, with the warning flag set.
    let field = build_corrector(&sol, QuadricBoundaryData::new(vec![0.5; 4]), CorrectorKind::Phi0)
        .unwrap();
    assert!(field.gamma_warning);
}

#[test]
fn expansion_rejects_out_of_range_delta() {
    let expansion = halfspace::ProjectionExpansion::new(sym4(), half_rho(4)).unwrap();
    assert!(expansion.eval(0.75, &[0.0, 0.0, 0.0, 0.1]).is_err());
    assert!(expansion.eval(-0.1, &[0.0, 0.0, 0.0, 0.1]).is_err());
}

#[test]
fn concurrent_evaluation_is_consistent() {
    let field = Arc::new(build_corrector(sym4(), half_rho(4), CorrectorKind::Phi0).unwrap());
    let probes: Vec<Vec<f64>> = (0..6)
        .map(|k| vec![0.1 * k as f64, 0.2, -0.1, 0.5 + 0.3 * k as f64])
        .collect();
    let reference: Vec<f64> = probes.iter().map(|x| field.eval(x).unwrap()).collect();
    let mut handles = Vec::new();
    for _ in 0..4 {
        let field = field.clone();
        let probes = probes.clone();
        handles.push(std::thread::spawn(move || {
            probes
                .iter()
                .map(|x| field.eval(x).unwrap())
                .collect::<Vec<f64>>()
        }));
    }
    for handle in handles {
        let values = handle.join().unwrap();
        for (a, b) in values.iter().zip(&reference) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
