//! Quadrature and small numerical kernels shared across the crate:
//! adaptive Gauss-Kronrod panels, fixed Gauss-Legendre rules, unit-sphere
//! measures, closed-form power-law tail integrals and finite-difference
//! weights on arbitrary grids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 15-point Kronrod abscissae (positive half, descending). The literals
/// keep the full published precision and round to the nearest f64.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

/// Kronrod weights matching `XGK`.
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

/// 7-point Gauss weights embedded in the Kronrod rule.
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One Gauss-Kronrod 7-15 panel. Returns (kronrod, |kronrod - gauss|).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];

    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        kronrod += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    (kronrod * half, (kronrod - gauss).abs() * half)
}

/// Adaptive Gauss-Kronrod integration of `f` over `[a, b]`.
///
/// Panels are bisected (deterministically, left to right) until the local
/// error estimate meets the tolerance apportioned to the panel width.
pub fn integrate<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain("integration bounds must be finite".into()));
    }
    if a == b {
        return Ok(0.0);
    }
    let (coarse, _) = gk15(f, a, b);
    let scale = coarse.abs().max(abs_tol);
    let mut total = 0.0;
    let mut worst: f64 = 0.0;
    // Explicit stack keeps panel order deterministic.
    let mut stack = vec![(a, b, 0u32)];
    while let Some((lo, hi, depth)) = stack.pop() {
        let (val, err) = gk15(f, lo, hi);
        let local_tol = (abs_tol + rel_tol * scale) * ((hi - lo) / (b - a)).abs();
        if err <= local_tol || depth >= 52 {
            total += val;
            worst = worst.max(err / local_tol.max(f64::MIN_POSITIVE));
            continue;
        }
        let mid = 0.5 * (lo + hi);
        stack.push((mid, hi, depth + 1));
        stack.push((lo, mid, depth + 1));
    }
    if !total.is_finite() {
        return Err(Error::Accuracy(
            "quadrature produced a non-finite value".into(),
        ));
    }
    Ok(total)
}

/// Nodes and weights of an `n`-point Gauss-Legendre rule on [-1, 1],
/// computed by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-based initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Fixed Gauss-Legendre quadrature of `f` over a list of panels.
pub fn panel_quadrature<F: Fn(f64) -> f64>(
    f: &F,
    edges: &[f64],
    nodes: &[f64],
    weights: &[f64],
) -> f64 {
    let mut total = 0.0;
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut acc = 0.0;
        for (x, wt) in nodes.iter().zip(weights) {
            acc += wt * f(c + h * x);
        }
        total += acc * h;
    }
    total
}

/// Gamma function at half-integer arguments, `arg = twice_arg / 2`, exact in
/// double precision via the factorial / double-factorial recurrences.
pub fn gamma_half_integer(twice_arg: u32) -> f64 {
    assert!(twice_arg >= 1, "gamma argument must be positive");
    if twice_arg.is_multiple_of(2) {
        // Integer argument m: (m-1)!
        let m = twice_arg / 2;
        (1..m).fold(1.0, |acc, k| acc * k as f64)
    } else {
        // Half-integer argument m + 1/2: (2m-1)!! sqrt(pi) / 2^m
        let m = (twice_arg - 1) / 2;
        let mut acc = std::f64::consts::PI.sqrt();
        for k in 0..m {
            acc *= (2 * k + 1) as f64 / 2.0;
        }
        acc
    }
}

/// Surface measure of the unit k-sphere embedded in R^{k+1}.
pub fn sphere_measure(k: u32) -> f64 {
    2.0 * std::f64::consts::PI.powf((k as f64 + 1.0) / 2.0) / gamma_half_integer(k + 1)
}

/// Closed form of `int_R^inf coef * r^{-s} dr` (requires `s > 1`).
pub fn power_tail(coef: f64, s: f64, r: f64) -> Result<f64> {
    if s <= 1.0 {
        return Err(Error::Domain(format!(
            "tail integral diverges: exponent {s} <= 1"
        )));
    }
    Ok(coef * r.powf(1.0 - s) / (s - 1.0))
}

/// Closed form of `int_R^inf coef * r^{-s} ln(r) dr` (requires `s > 1`).
pub fn power_log_tail(coef: f64, s: f64, r: f64) -> Result<f64> {
    if s <= 1.0 {
        return Err(Error::Domain(format!(
            "tail integral diverges: exponent {s} <= 1"
        )));
    }
    let sm1 = s - 1.0;
    Ok(coef * r.powf(-sm1) * (r.ln() / sm1 + 1.0 / (sm1 * sm1)))
}

/// Finite-difference weights on arbitrary nodes (Fornberg's algorithm):
/// weights such that `sum_j w_j f(x_j)` approximates the `m`-th derivative
/// of `f` at `x0`.
pub fn fd_weights(nodes: &[f64], x0: f64, m: usize) -> Vec<f64> {
    let n = nodes.len();
    assert!(n > m, "need more nodes than the derivative order");
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// How integrands are extended past the stored profile radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailMode {
    /// Substitute the fitted power-law tails and add their closed-form
    /// remainder integrals.
    Analytic,
    /// Truncate at the grid radius (diagnostics only).
    Truncate,
}

/// Descriptor of the quadrature engine used to produce a set of constants.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub method: String,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub tail_mode: TailMode,
    /// Surface measures sigma_{N-2}, sigma_{N-1} used in radial reductions.
    pub sphere_measures: [f64; 2],
}

impl QuadratureSpec {
    pub fn new(dim: u32, abs_tol: f64, rel_tol: f64) -> Self {
        QuadratureSpec {
            method: "adaptive Gauss-Kronrod 7-15".into(),
            abs_tol,
            rel_tol,
            tail_mode: TailMode::Analytic,
            sphere_measures: [sphere_measure(dim - 2), sphere_measure(dim - 1)],
        }
    }

    pub fn default_for(dim: u32) -> Self {
        Self::new(dim, 1e-300, 1e-11)
    }
}
