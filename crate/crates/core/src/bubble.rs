//! Ground states of the critical system -Delta u = v^q, -Delta v = u^p on
//! R^N: radial shooting with bisection on the trajectory dichotomy, far-field
//! tail extraction, and evaluation of scaled bubbles and their derivatives.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperbola::{self, DecayExponent, ExponentPair, Regime};
use crate::ode::{hermite_value, AdaptiveRk};
use crate::quad::fd_weights;

/// Default outer radius of the computed profile.
pub const DEFAULT_R_MAX: f64 = 1e3;
/// Default grid density (nodes per decade of radius).
pub const DEFAULT_NODES_PER_DECADE: usize = 512;
/// Innermost positive grid node.
const R_MIN: f64 = 1e-3;
/// Default shooting bracket for beta = v(0).
const BRACKET_DEFAULT: (f64, f64) = (1e-3, 1e3);

/// Radial grid with profile values and first derivatives.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialProfile {
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub du: Vec<f64>,
    pub dv: Vec<f64>,
}

/// Fitted far-field constants: v ~ a r^{-(N-2)} and u ~ b r^{-e_u} with the
/// regime-dependent exponent e_u.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailCoefficients {
    pub a: f64,
    pub b: f64,
    pub gamma: Option<f64>,
    pub regime: Regime,
    pub fit_window: (f64, f64),
    /// Relative spread of the fitted constants over the window (max of the
    /// two components).
    pub fit_variation: f64,
    /// Free least-squares slope of ln u against ln r over the window.
    pub slope_u: f64,
    /// Free least-squares slope of ln v against ln r over the window.
    pub slope_v: f64,
}

/// Which component of a trial trajectory crossed zero first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Crossing {
    U,
    V,
}

/// Shooting classification of one trial value of beta.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrialClass {
    /// v crossed zero first (or u flattened): beta below the ground state.
    TooSmall,
    /// u crossed zero first (or dived): beta above the ground state.
    TooBig,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub beta: f64,
    pub class: TrialClass,
    pub crossing: Option<Crossing>,
    /// Radius where integration stopped.
    pub r_stop: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverMeta {
    pub tol: f64,
    pub r_max: f64,
    pub nodes_per_decade: usize,
    pub bracket: (f64, f64),
    pub trace: Vec<TrialOutcome>,
    pub forced_steps: u64,
}

/// An accepted radial ground state.
#[derive(Debug, Clone)]
pub struct BubbleSolution {
    pub pair: ExponentPair,
    pub decay: DecayExponent,
    pub beta_star: f64,
    pub profile: RadialProfile,
    pub tail: TailCoefficients,
    /// Max over the grid of the relative defect of each radial equation.
    pub ode_residual: f64,
    pub solver_meta: SolverMeta,
    // Derived evaluation data (rebuilt on cache load, never serialized).
    ddu: Vec<f64>,
    ddv: Vec<f64>,
    /// Tail exponents (e_u, e_v) of the two components.
    pub tail_exponents: (f64, f64),
    /// Tail amplitudes anchored at the outermost node, used past r_max.
    anchor: (f64, f64),
}

fn series_start(n: f64, p: f64, q: f64, beta: f64) -> (f64, [f64; 4]) {
    let u2 = -beta.powf(q) / (2.0 * n);
    let v2 = -1.0 / (2.0 * n);
    let u4 = q * beta.powf(q - 1.0) / (8.0 * n * (n + 2.0));
    let v4 = p * beta.powf(q) / (8.0 * n * (n + 2.0));
    let scale = u2.abs().max(v2.abs()).max(1.0);
    let r0 = (0.01 / scale.sqrt()).min(R_MIN);
    let r2 = r0 * r0;
    let y = [
        1.0 + u2 * r2 + u4 * r2 * r2,
        2.0 * u2 * r0 + 4.0 * u4 * r0 * r2,
        beta + v2 * r2 + v4 * r2 * r2,
        2.0 * v2 * r0 + 4.0 * v4 * r0 * r2,
    ];
    (r0, y)
}

/// State layout: [u, u', v, v'].
fn rhs(n: f64, p: f64, q: f64) -> impl FnMut(f64, &[f64; 4]) -> [f64; 4] {
    move |r, y| {
        [
            y[1],
            -(n - 1.0) / r * y[1] - y[2].max(0.0).powf(q),
            y[3],
            -(n - 1.0) / r * y[3] - y[0].max(0.0).powf(p),
        ]
    }
}

/// Classify one shot. Integrates until a component crosses zero or r_max is
/// reached; in the latter case the logarithmic derivatives at r_max decide
/// which side of the ground state the trajectory is on.
fn classify_trial(
    pair: &ExponentPair,
    beta: f64,
    r_max: f64,
    rtol: f64,
    atol: f64,
    tail_exponents: (f64, f64),
) -> TrialOutcome {
    let (n, p, q) = (pair.n as f64, pair.p, pair.q);
    let (r0, y0) = series_start(n, p, q, beta);
    let mut rk = AdaptiveRk::new(rhs(n, p, q), r0, y0, r0 * 1e-2, rtol, atol);
    while rk.t < r_max {
        let rec = rk.step(r_max);
        let u_crossed = rec.y1[0] <= 0.0;
        let v_crossed = rec.y1[2] <= 0.0;
        if u_crossed || v_crossed {
            let root = |i: usize| -> f64 {
                let (mut lo, mut hi) = (rec.t0, rec.t1);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if rec.eval(i, mid) > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            };
            let ru = if u_crossed { root(0) } else { f64::INFINITY };
            let rv = if v_crossed { root(2) } else { f64::INFINITY };
            let (crossing, class, r_stop) = if ru <= rv {
                (Crossing::U, TrialClass::TooBig, ru)
            } else {
                (Crossing::V, TrialClass::TooSmall, rv)
            };
            return TrialOutcome {
                beta,
                class,
                crossing: Some(crossing),
                r_stop,
            };
        }
    }
    // No crossing: decide from the deviation of the logarithmic derivatives
    // against the expected tail exponents. A flattening u (or diving v) means
    // beta is too small; the opposite deviations mean too big.
    let (e_u, e_v) = tail_exponents;
    let s_u = rk.t * rk.y[1] / rk.y[0];
    let s_v = rk.t * rk.y[3] / rk.y[2];
    let score_u = s_u + e_u;
    let score_v = s_v + e_v;
    let class = if score_u.abs() >= score_v.abs() {
        if score_u > 0.0 {
            TrialClass::TooSmall
        } else {
            TrialClass::TooBig
        }
    } else if score_v > 0.0 {
        TrialClass::TooBig
    } else {
        TrialClass::TooSmall
    };
    TrialOutcome {
        beta,
        class,
        crossing: None,
        r_stop: rk.t,
    }
}

fn geometric_grid(r_max: f64, nodes_per_decade: usize) -> Vec<f64> {
    let mut grid = vec![0.0];
    let decades = (r_max / R_MIN).log10();
    let count = (decades * nodes_per_decade as f64).ceil() as usize;
    let ratio = (r_max / R_MIN).powf(1.0 / count as f64);
    let mut r = R_MIN;
    for _ in 0..count {
        grid.push(r);
        r *= ratio;
    }
    grid.push(r_max);
    // Guard against ratio rounding leaving a duplicate near the end.
    grid.dedup_by(|a, b| (*a - *b).abs() < 1e-12 * r_max);
    grid
}

/// Integrate the profile for a fixed beta onto the output grid.
fn integrate_on_grid(
    pair: &ExponentPair,
    beta: f64,
    grid: &[f64],
    rtol: f64,
    atol: f64,
) -> (RadialProfile, u64) {
    let (n, p, q) = (pair.n as f64, pair.p, pair.q);
    let (r0, y0) = series_start(n, p, q, beta);
    let mut rk = AdaptiveRk::new(rhs(n, p, q), r0, y0, r0 * 1e-2, rtol, atol);
    let count = grid.len();
    let mut profile = RadialProfile {
        r: grid.to_vec(),
        u: Vec::with_capacity(count),
        v: Vec::with_capacity(count),
        du: Vec::with_capacity(count),
        dv: Vec::with_capacity(count),
    };
    for &node in grid {
        if node == 0.0 {
            profile.u.push(1.0);
            profile.du.push(0.0);
            profile.v.push(beta);
            profile.dv.push(0.0);
            continue;
        }
        if node <= r0 {
            // Inside the series region.
            let u2 = -beta.powf(q) / (2.0 * n);
            let v2 = -1.0 / (2.0 * n);
            let u4 = q * beta.powf(q - 1.0) / (8.0 * n * (n + 2.0));
            let v4 = p * beta.powf(q) / (8.0 * n * (n + 2.0));
            let r2 = node * node;
            profile.u.push(1.0 + u2 * r2 + u4 * r2 * r2);
            profile.du.push(2.0 * u2 * node + 4.0 * u4 * node * r2);
            profile.v.push(beta + v2 * r2 + v4 * r2 * r2);
            profile.dv.push(2.0 * v2 * node + 4.0 * v4 * node * r2);
            continue;
        }
        rk.advance_to(node);
        profile.u.push(rk.y[0]);
        profile.du.push(rk.y[1]);
        profile.v.push(rk.y[2]);
        profile.dv.push(rk.y[3]);
    }
    (profile, rk.forced)
}

/// Subleading correction exponents of the two tails: the fitted constant
/// drifts like r^{-w} with w set by whichever of the homogeneous r^{-(N-2)}
/// mode and the particular solution of the forced equation is subleading.
fn tail_correction_exponents(pair: &ExponentPair, regime: Regime, e_u: f64) -> (f64, f64) {
    let n = pair.n as f64;
    let w_u = match regime {
        Regime::QAbove => pair.q * (n - 2.0) - n,
        _ => n - pair.q * (n - 2.0),
    };
    let w_v = pair.p * e_u - n;
    (w_u.max(0.25), w_v.max(0.25))
}

/// Fit the far-field constants over a window chosen above the noise floor.
///
/// The constant samples u r^{e_u} carry a known r^{-w} drift from the
/// subleading tail mode, so the fit is `c(r) = const + m r^{-w}` and the
/// reported constant is the r -> infinity intercept.
pub fn extract_tail(
    profile: &RadialProfile,
    pair: &ExponentPair,
    noise_floor: f64,
) -> Result<TailCoefficients> {
    let decay = hyperbola::decay_exponent(pair)?;
    let (e_u, e_v) = hyperbola::profile_tail_exponents(pair, &decay)?;
    let (w_u, w_v) = tail_correction_exponents(pair, decay.regime, e_u);
    let n = profile.r.len();
    let floor = noise_floor.max(1e-300) * 3000.0;
    let mut hi_idx = n - 1;
    while hi_idx > 0 && (profile.u[hi_idx] < floor || profile.v[hi_idx] < floor) {
        hi_idx -= 1;
    }
    let r_hi = profile.r[hi_idx];
    let r_lo = r_hi / 4.0;
    let lo_idx = profile.r.partition_point(|&r| r < r_lo);
    if hi_idx.saturating_sub(lo_idx) < 8 || r_lo < 4.0 {
        return Err(Error::Accuracy(format!(
            "tail fit window [{r_lo:.3}, {r_hi:.3}] too short; increase r_max"
        )));
    }
    for i in lo_idx..hi_idx {
        if profile.u[i + 1] >= profile.u[i] || profile.v[i + 1] >= profile.v[i] {
            return Err(Error::Solver(format!(
                "non-monotone tail near r = {:.3}: shooting value off the ground state",
                profile.r[i]
            )));
        }
    }

    // Least squares of c_i = const + m r_i^{-w}; returns (const, spread of
    // detrended samples relative to const).
    let fit = |vals: &[f64], exponent: f64, w: f64| -> (f64, f64) {
        let count = (hi_idx - lo_idx + 1) as f64;
        let mut sx = 0.0;
        let mut sy = 0.0;
        let mut sxx = 0.0;
        let mut sxy = 0.0;
        let window = profile.r[lo_idx..=hi_idx].iter().zip(&vals[lo_idx..=hi_idx]);
        for (&r, &val) in window.clone() {
            let x = r.powf(-w);
            let y = val * r.powf(exponent);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        let m = (count * sxy - sx * sy) / (count * sxx - sx * sx);
        let c0 = (sy - m * sx) / count;
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for (&r, &val) in window {
            let detrended = val * r.powf(exponent) - m * r.powf(-w);
            min = min.min(detrended);
            max = max.max(detrended);
        }
        (c0, (max - min) / c0)
    };
    let (b, var_u) = fit(&profile.u, e_u, w_u);
    let (a, var_v) = fit(&profile.v, e_v, w_v);

    // Free slope: ln(val) = c0 + s ln(r) + c1 r^{-w}, solved as a 3x3
    // normal system so the drift does not bias the exponent.
    let slope = |vals: &[f64], w: f64| -> f64 {
        let mut ata = nalgebra::Matrix3::<f64>::zeros();
        let mut atb = nalgebra::Vector3::<f64>::zeros();
        for (&r, &val) in profile.r[lo_idx..=hi_idx].iter().zip(&vals[lo_idx..=hi_idx]) {
            let row = nalgebra::Vector3::new(1.0, r.ln(), r.powf(-w));
            ata += row * row.transpose();
            atb += row * val.ln();
        }
        match ata.lu().solve(&atb) {
            Some(sol) => sol[1],
            None => f64::NAN,
        }
    };

    Ok(TailCoefficients {
        a,
        b,
        gamma: decay.gamma,
        regime: decay.regime,
        fit_window: (r_lo, r_hi),
        fit_variation: var_u.max(var_v),
        slope_u: slope(&profile.u, w_u),
        slope_v: slope(&profile.v, w_v),
    })
}

/// Relative defect of both radial equations over the grid, with the second
/// derivative reconstructed by seven-point finite differences of the stored
/// first derivatives.
fn fd_ode_residual(profile: &RadialProfile, pair: &ExponentPair) -> f64 {
    let (n, p, q) = (pair.n as f64, pair.p, pair.q);
    let count = profile.r.len();
    let mut worst: f64 = 0.0;
    for i in 3..count - 3 {
        let nodes = &profile.r[i - 3..=i + 3];
        let w = fd_weights(nodes, profile.r[i], 1);
        let mut d2u = 0.0;
        let mut d2v = 0.0;
        for (k, wk) in w.iter().enumerate() {
            d2u += wk * profile.du[i - 3 + k];
            d2v += wk * profile.dv[i - 3 + k];
        }
        let r = profile.r[i];
        let fu = profile.v[i].max(0.0).powf(q);
        let fv = profile.u[i].max(0.0).powf(p);
        let tu = (n - 1.0) / r * profile.du[i];
        let tv = (n - 1.0) / r * profile.dv[i];
        let res_u = (d2u + tu + fu).abs() / (d2u.abs() + tu.abs() + fu);
        let res_v = (d2v + tv + fv).abs() / (d2v.abs() + tv.abs() + fv);
        worst = worst.max(res_u).max(res_v);
    }
    worst
}

impl BubbleSolution {
    fn assemble(
        pair: ExponentPair,
        beta_star: f64,
        profile: RadialProfile,
        tail: TailCoefficients,
        ode_residual: f64,
        solver_meta: SolverMeta,
    ) -> Result<Self> {
        let decay = hyperbola::decay_exponent(&pair)?;
        let (e_u, e_v) = hyperbola::profile_tail_exponents(&pair, &decay)?;
        let (n, p, q) = (pair.n as f64, pair.p, pair.q);
        let count = profile.r.len();
        let mut ddu = Vec::with_capacity(count);
        let mut ddv = Vec::with_capacity(count);
        for i in 0..count {
            if i == 0 {
                ddu.push(-profile.v[0].max(0.0).powf(q) / n);
                ddv.push(-profile.u[0].max(0.0).powf(p) / n);
            } else {
                let r = profile.r[i];
                ddu.push(-(n - 1.0) / r * profile.du[i] - profile.v[i].max(0.0).powf(q));
                ddv.push(-(n - 1.0) / r * profile.dv[i] - profile.u[i].max(0.0).powf(p));
            }
        }
        let last = count - 1;
        let r_last = profile.r[last];
        let anchor = (
            profile.u[last] * r_last.powf(e_u),
            profile.v[last] * r_last.powf(e_v),
        );
        Ok(BubbleSolution {
            pair,
            decay,
            beta_star,
            profile,
            tail,
            ode_residual,
            solver_meta,
            ddu,
            ddv,
            tail_exponents: (e_u, e_v),
            anchor,
        })
    }

    /// Rebuild the derived evaluation data from serialized fields.
    pub fn from_parts(
        pair: ExponentPair,
        beta_star: f64,
        profile: RadialProfile,
        tail: TailCoefficients,
        ode_residual: f64,
        solver_meta: SolverMeta,
    ) -> Result<Self> {
        Self::assemble(pair, beta_star, profile, tail, ode_residual, solver_meta)
    }

    pub fn r_max(&self) -> f64 {
        *self.profile.r.last().unwrap()
    }

    /// Tail amplitudes (t_u, t_v) anchored at the outermost node, so that
    /// u ~ t_u r^{-e_u} and v ~ t_v r^{-e_v} past the grid.
    pub fn tail_anchor(&self) -> (f64, f64) {
        self.anchor
    }

    fn cell_of(&self, r: f64) -> usize {
        let idx = self.profile.r.partition_point(|&node| node <= r);
        idx.clamp(1, self.profile.r.len() - 1) - 1
    }

    /// u(r), extended past the grid by the anchored power tail.
    pub fn u_at(&self, r: f64) -> f64 {
        if r >= self.r_max() {
            return self.anchor.0 * r.powf(-self.tail_exponents.0);
        }
        let i = self.cell_of(r);
        let p = &self.profile;
        hermite_value(p.r[i], p.u[i], p.du[i], p.r[i + 1], p.u[i + 1], p.du[i + 1], r)
    }

    pub fn v_at(&self, r: f64) -> f64 {
        if r >= self.r_max() {
            return self.anchor.1 * r.powf(-self.tail_exponents.1);
        }
        let i = self.cell_of(r);
        let p = &self.profile;
        hermite_value(p.r[i], p.v[i], p.dv[i], p.r[i + 1], p.v[i + 1], p.dv[i + 1], r)
    }

    /// u'(r); the stored derivative nodes are interpolated with exact
    /// second-derivative endpoints from the equation itself.
    pub fn du_at(&self, r: f64) -> f64 {
        if r >= self.r_max() {
            let e = self.tail_exponents.0;
            return -e * self.anchor.0 * r.powf(-e - 1.0);
        }
        let i = self.cell_of(r);
        let p = &self.profile;
        hermite_value(
            p.r[i],
            p.du[i],
            self.ddu[i],
            p.r[i + 1],
            p.du[i + 1],
            self.ddu[i + 1],
            r,
        )
    }

    pub fn dv_at(&self, r: f64) -> f64 {
        if r >= self.r_max() {
            let e = self.tail_exponents.1;
            return -e * self.anchor.1 * r.powf(-e - 1.0);
        }
        let i = self.cell_of(r);
        let p = &self.profile;
        hermite_value(
            p.r[i],
            p.dv[i],
            self.ddv[i],
            p.r[i + 1],
            p.dv[i + 1],
            self.ddv[i + 1],
            r,
        )
    }
}

/// Fitted logarithmic-derivative limits r u'/u and r v'/v at the largest
/// reliable radii, together with the values the tail law forces.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LogDerivativeCheck {
    pub lim_u: f64,
    pub lim_v: f64,
    pub expected_u: f64,
    pub expected_v: f64,
    /// False when a limit misses its expected value by more than 0.05.
    pub within_tolerance: bool,
}

/// Logarithmic-derivative limits of an accepted ground state.
pub fn log_derivative_check(sol: &BubbleSolution) -> LogDerivativeCheck {
    let (e_u, e_v) = sol.tail_exponents;
    let (_, r_hi) = sol.tail.fit_window;
    let r_lo = r_hi / 2.0;
    let p = &sol.profile;
    let mut su = 0.0;
    let mut sv = 0.0;
    let mut count = 0.0;
    for i in 0..p.r.len() {
        if p.r[i] >= r_lo && p.r[i] <= r_hi {
            su += p.r[i] * p.du[i] / p.u[i];
            sv += p.r[i] * p.dv[i] / p.v[i];
            count += 1.0;
        }
    }
    let lim_u = su / count;
    let lim_v = sv / count;
    LogDerivativeCheck {
        lim_u,
        lim_v,
        expected_u: -e_u,
        expected_v: -e_v,
        within_tolerance: (lim_u + e_u).abs() <= 0.05 && (lim_v + e_v).abs() <= 0.05,
    }
}

/// Solve for the ground state by bisection on the shooting dichotomy.
pub fn solve_ground_state(pair: &ExponentPair, tol: f64, r_max: f64) -> Result<BubbleSolution> {
    solve_ground_state_with(pair, tol, r_max, DEFAULT_NODES_PER_DECADE)
}

pub fn solve_ground_state_with(
    pair: &ExponentPair,
    tol: f64,
    r_max: f64,
    nodes_per_decade: usize,
) -> Result<BubbleSolution> {
    pair.require_critical()?;
    let decay = hyperbola::decay_exponent(pair)?;
    if decay.regime == Regime::QLog {
        return Err(Error::Domain(
            "logarithmic regime q = N/(N-2) is not supported".into(),
        ));
    }
    if !(1e-14..=1e-6).contains(&tol) {
        return Err(Error::Domain(format!(
            "tolerance {tol} outside the admissible range [1e-14, 1e-6]"
        )));
    }
    if r_max < 100.0 {
        return Err(Error::Domain(format!(
            "r_max = {r_max} too small for a tail fit; need at least 100"
        )));
    }
    let exponents = hyperbola::profile_tail_exponents(pair, &decay)?;
    let atol = (tol * 1e-2).max(1e-14);
    let shoot = |beta: f64| classify_trial(pair, beta, r_max, tol, atol, exponents);

    let mut trace: Vec<TrialOutcome> = Vec::new();
    let (mut lo, mut hi) = BRACKET_DEFAULT;
    let mut lo_out = shoot(lo);
    trace.push(lo_out);
    for _ in 0..4 {
        if lo_out.class == TrialClass::TooSmall {
            break;
        }
        lo /= 100.0;
        lo_out = shoot(lo);
        trace.push(lo_out);
    }
    let mut hi_out = shoot(hi);
    trace.push(hi_out);
    for _ in 0..4 {
        if hi_out.class == TrialClass::TooBig {
            break;
        }
        hi *= 100.0;
        hi_out = shoot(hi);
        trace.push(hi_out);
    }
    if lo_out.class != TrialClass::TooSmall || hi_out.class != TrialClass::TooBig {
        return Err(Error::Solver(format!(
            "no shooting bracket in beta [{lo:.3e}, {hi:.3e}]: endpoint classes {:?} / {:?}, crossings {:?} / {:?}",
            lo_out.class, hi_out.class, lo_out.crossing, hi_out.crossing
        )));
    }

    while hi - lo > tol * hi {
        let mid = if hi / lo > 10.0 {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        let out = shoot(mid);
        trace.push(out);
        match out.class {
            TrialClass::TooSmall => lo = mid,
            TrialClass::TooBig => hi = mid,
        }
    }
    let beta_star = 0.5 * (lo + hi);

    let grid = geometric_grid(r_max, nodes_per_decade);
    let (profile, forced_steps) = integrate_on_grid(pair, beta_star, &grid, tol, atol);
    let noise_floor = (hi - lo).max(atol);
    let tail = extract_tail(&profile, pair, noise_floor)?;
    if tail.fit_variation > 0.01 {
        return Err(Error::Accuracy(format!(
            "tail fit variation {:.3e} exceeds 0.01; increase r_max",
            tail.fit_variation
        )));
    }
    let residual = fd_ode_residual(&profile, pair);
    if residual > 1e-8 {
        return Err(Error::Accuracy(format!(
            "ODE residual {residual:.3e} exceeds 1e-8"
        )));
    }
    let meta = SolverMeta {
        tol,
        r_max,
        nodes_per_decade,
        bracket: (lo, hi),
        trace,
        forced_steps,
    };
    BubbleSolution::assemble(*pair, beta_star, profile, tail, residual, meta)
}

/// The explicit symmetric ground state u = v = (1 + r^2/(N(N-2)))^{-(N-2)/2}
/// for p = q = (N+2)/(N-2), sampled with analytic derivatives. Serves as the
/// oracle for the shooting solver.
pub fn closed_form_symmetric(n: u32) -> Result<BubbleSolution> {
    closed_form_symmetric_with(n, DEFAULT_R_MAX, DEFAULT_NODES_PER_DECADE)
}

pub fn closed_form_symmetric_with(
    n: u32,
    r_max: f64,
    nodes_per_decade: usize,
) -> Result<BubbleSolution> {
    if n < 3 {
        return Err(Error::Domain(format!("dimension N = {n} must be >= 3")));
    }
    let nf = n as f64;
    let p = (nf + 2.0) / (nf - 2.0);
    let pair = hyperbola::classify(n, p, p)?;
    let k = nf * (nf - 2.0);
    let half_exp = (nf - 2.0) / 2.0;
    let value = |r: f64| (1.0 + r * r / k).powf(-half_exp);
    let deriv = |r: f64| -(r / nf) * (1.0 + r * r / k).powf(-nf / 2.0);
    let second = |r: f64| {
        let w = 1.0 + r * r / k;
        -w.powf(-nf / 2.0) / nf + (r * r / k) * w.powf(-nf / 2.0 - 1.0)
    };
    let grid = geometric_grid(r_max, nodes_per_decade);
    let count = grid.len();
    let mut profile = RadialProfile {
        r: grid.clone(),
        u: Vec::with_capacity(count),
        v: Vec::with_capacity(count),
        du: Vec::with_capacity(count),
        dv: Vec::with_capacity(count),
    };
    for &r in &grid {
        let val = value(r);
        let der = deriv(r);
        profile.u.push(val);
        profile.v.push(val);
        profile.du.push(der);
        profile.dv.push(der);
    }
    // Residual with analytic second derivative: u'' + (N-1)/r u' + u^p.
    let mut residual: f64 = 0.0;
    for &r in grid.iter().skip(1) {
        let terms = [second(r), (nf - 1.0) / r * deriv(r), value(r).powf(p)];
        let defect = terms.iter().sum::<f64>().abs();
        residual = residual.max(defect / terms.iter().map(|t| t.abs()).sum::<f64>());
    }
    let tail = extract_tail(&profile, &pair, 1e-300)?;
    let meta = SolverMeta {
        tol: 0.0,
        r_max,
        nodes_per_decade,
        bracket: (1.0, 1.0),
        trace: Vec::new(),
        forced_steps: 0,
    };
    BubbleSolution::assemble(pair, 1.0, profile, tail, residual, meta)
}

/// A bubble rescaled to concentration scale `delta` at point `xi`.
#[derive(Clone)]
pub struct ScaledBubble {
    pub base: Arc<BubbleSolution>,
    pub delta: f64,
    pub xi: Vec<f64>,
    /// Scale exponents (a, b) = (N/(p+1), N/(q+1)).
    pub exponents: (f64, f64),
}

impl ScaledBubble {
    pub fn new(base: Arc<BubbleSolution>, delta: f64, xi: Vec<f64>) -> Result<Self> {
        if delta <= 0.0 {
            return Err(Error::Domain(format!("scale delta = {delta} must be positive")));
        }
        if xi.len() != base.pair.n as usize {
            return Err(Error::Domain(format!(
                "concentration point has dimension {}, expected {}",
                xi.len(),
                base.pair.n
            )));
        }
        let exponents = base.pair.scaling_exponents()?;
        Ok(ScaledBubble {
            base,
            delta,
            xi,
            exponents,
        })
    }

    fn radius_scaled(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for (xi, ki) in x.iter().zip(&self.xi) {
            s += (xi - ki) * (xi - ki);
        }
        s.sqrt() / self.delta
    }

    /// (u, v) of the scaled bubble at x. Exactly delta^{-a} times the unit
    /// profile evaluated at (x - xi)/delta, so scale covariance is built in.
    pub fn evaluate(&self, x: &[f64]) -> (f64, f64) {
        let z = self.radius_scaled(x);
        let (a, b) = self.exponents;
        (
            self.delta.powf(-a) * self.base.u_at(z),
            self.delta.powf(-b) * self.base.v_at(z),
        )
    }

    /// Derivative pair (Phi^i, Psi^i): i = 0 is the delta-derivative, i >= 1
    /// the derivative along frame vector tau_i (an orthonormal tangent frame
    /// supplied by the caller).
    pub fn derivative(&self, index: usize, x: &[f64], frame: &[Vec<f64>]) -> Result<(f64, f64)> {
        let dim = self.xi.len();
        let (a, b) = self.exponents;
        let z = self.radius_scaled(x);
        if index == 0 {
            let phi = self.delta.powf(-a - 1.0) * (-a * self.base.u_at(z) - z * self.base.du_at(z));
            let psi = self.delta.powf(-b - 1.0) * (-b * self.base.v_at(z) - z * self.base.dv_at(z));
            return Ok((phi, psi));
        }
        if index >= dim {
            return Err(Error::Domain(format!(
                "derivative index {index} out of range for dimension {dim}"
            )));
        }
        for (i, ti) in frame.iter().enumerate() {
            if ti.len() != dim {
                return Err(Error::Domain("frame vector of wrong dimension".into()));
            }
            for (j, tj) in frame.iter().enumerate() {
                let dot: f64 = ti.iter().zip(tj).map(|(x, y)| x * y).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                if (dot - target).abs() > 1e-10 {
                    return Err(Error::Domain(format!(
                        "frame not orthonormal: <tau_{i}, tau_{j}> = {dot}"
                    )));
                }
            }
        }
        if z < 1e-300 {
            return Ok((0.0, 0.0));
        }
        let tau = &frame[index - 1];
        let mut z_dot_tau = 0.0;
        for k in 0..dim {
            z_dot_tau += (x[k] - self.xi[k]) / self.delta * tau[k];
        }
        let dir = z_dot_tau / z;
        let phi = -self.delta.powf(-a - 1.0) * self.base.du_at(z) * dir;
        let psi = -self.delta.powf(-b - 1.0) * self.base.dv_at(z) * dir;
        Ok((phi, psi))
    }
}
