//! Arithmetic on the critical hyperbola 1/(p+1) + 1/(q+1) = (N-2)/N:
//! criticality classification, the decay exponent gamma with its regime
//! split at q = N/(N-2), bubble scaling exponents, the remainder-exponent
//! ledger controlling the reduction error, and the sign table for the
//! four almost-critical exponent perturbations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the hyperbola residual below which a pair counts as critical.
pub const CRITICAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criticality {
    Subcritical,
    Critical,
    Supercritical,
}

/// A dimension and exponent pair, canonicalized so `p >= q`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ExponentPair {
    pub n: u32,
    pub p: f64,
    pub q: f64,
    pub criticality: Criticality,
    /// True when the input (p, q) was swapped during canonicalization.
    pub swapped: bool,
}

/// Residual of the hyperbola relation for (N, p, q).
pub fn hyperbola_residual(n: u32, p: f64, q: f64) -> f64 {
    1.0 / (p + 1.0) + 1.0 / (q + 1.0) - (n as f64 - 2.0) / n as f64
}

/// Solve the hyperbola relation for q given (N, p).
pub fn q_from_p(n: u32, p: f64) -> Result<f64> {
    if n < 3 {
        return Err(Error::Domain(format!("dimension N = {n} must be >= 3")));
    }
    let target = (n as f64 - 2.0) / n as f64;
    let slot = target - 1.0 / (p + 1.0);
    if slot <= 0.0 {
        return Err(Error::Domain(format!(
            "1/(p+1) = {} must be < (N-2)/N = {target} for a finite positive q",
            1.0 / (p + 1.0)
        )));
    }
    Ok(1.0 / slot - 1.0)
}

/// Solve the hyperbola relation for p given (N, q).
pub fn p_from_q(n: u32, q: f64) -> Result<f64> {
    q_from_p(n, q)
}

/// Classify (N, p, q) against the critical hyperbola and canonicalize.
///
/// Pairs with p <= 1 or q <= 1 are rejected: the reduction scheme needs both
/// exponents strictly above 1.
pub fn classify(n: u32, p: f64, q: f64) -> Result<ExponentPair> {
    if n < 3 {
        return Err(Error::Domain(format!("dimension N = {n} must be >= 3")));
    }
    if !(p > 0.0 && q > 0.0) {
        return Err(Error::Domain("exponents must be positive".into()));
    }
    if p <= 1.0 || q <= 1.0 {
        return Err(Error::Domain(format!(
            "exponent pair rejected: p = {p}, q = {q}; both must exceed 1"
        )));
    }
    let swapped = p < q;
    let (p, q) = if swapped { (q, p) } else { (p, q) };
    let residual = hyperbola_residual(n, p, q);
    let criticality = if residual.abs() <= CRITICAL_TOL {
        Criticality::Critical
    } else if residual > 0.0 {
        Criticality::Subcritical
    } else {
        Criticality::Supercritical
    };
    Ok(ExponentPair {
        n,
        p,
        q,
        criticality,
        swapped,
    })
}

impl ExponentPair {
    /// Critical pair from (N, p) with q solved on the hyperbola.
    pub fn critical_from_p(n: u32, p: f64) -> Result<Self> {
        let q = q_from_p(n, p)?;
        let pair = classify(n, p, q)?;
        debug_assert_eq!(pair.criticality, Criticality::Critical);
        Ok(pair)
    }

    pub fn require_critical(&self) -> Result<()> {
        if self.criticality != Criticality::Critical {
            return Err(Error::Domain(format!(
                "(N, p, q) = ({}, {}, {}) is {:?}, not critical",
                self.n, self.p, self.q, self.criticality
            )));
        }
        Ok(())
    }

    /// Scale exponents (a, b) of the bubble pair: u scales as delta^{-a},
    /// v as delta^{-b}, with a = N/(p+1) and b = N/(q+1). This is the
    /// convention under which the scaled pair solves the critical system,
    /// i.e. a + 2 = q b and b + 2 = p a.
    pub fn scaling_exponents(&self) -> Result<(f64, f64)> {
        self.require_critical()?;
        let n = self.n as f64;
        let a = n / (self.p + 1.0);
        let b = n / (self.q + 1.0);
        debug_assert!((a + 2.0 - self.q * b).abs() <= 1e-11 * (a + 2.0));
        debug_assert!((b + 2.0 - self.p * a).abs() <= 1e-11 * (b + 2.0));
        Ok((a, b))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// q > N/(N-2): both components decay like r^{2-N}.
    QAbove,
    /// q < N/(N-2): the u-component decays like r^{2-q(N-2)}.
    QBelow,
    /// q = N/(N-2): logarithmic correction, gamma undefined.
    QLog,
}

/// The decay exponent gamma and its regime.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DecayExponent {
    pub regime: Regime,
    /// gamma = N-3 above the split, q(N-2)-3 below it; none in the log case.
    pub gamma: Option<f64>,
    /// Value of gamma + 1 - N/(p+1), which equals N/(q+1) above the split
    /// and Nq/(p+1) below it.
    pub gamma_identity_value: Option<f64>,
}

/// Decay regime and gamma for a critical pair.
pub fn decay_exponent(pair: &ExponentPair) -> Result<DecayExponent> {
    pair.require_critical()?;
    let n = pair.n as f64;
    let split = n / (n - 2.0);
    if (pair.q - split).abs() <= CRITICAL_TOL {
        return Ok(DecayExponent {
            regime: Regime::QLog,
            gamma: None,
            gamma_identity_value: None,
        });
    }
    let (regime, gamma, branch) = if pair.q > split {
        (Regime::QAbove, n - 3.0, n / (pair.q + 1.0))
    } else {
        (
            Regime::QBelow,
            pair.q * (n - 2.0) - 3.0,
            n * pair.q / (pair.p + 1.0),
        )
    };
    let lhs = gamma + 1.0 - n / (pair.p + 1.0);
    if (lhs - branch).abs() > 1e-12 * branch.abs().max(1.0) {
        return Err(Error::Domain(format!(
            "gamma identity violated: {lhs} vs {branch}; pair not on the hyperbola"
        )));
    }
    if lhs <= 0.0 {
        return Err(Error::Domain(format!(
            "gamma + 1 - N/(p+1) = {lhs} must be positive for a critical pair"
        )));
    }
    Ok(DecayExponent {
        regime,
        gamma: Some(gamma),
        gamma_identity_value: Some(branch),
    })
}

impl DecayExponent {
    pub fn require_gamma(&self) -> Result<f64> {
        self.gamma.ok_or_else(|| {
            Error::Domain("logarithmic regime q = N/(N-2) carries no decay exponent".into())
        })
    }
}

/// Tail exponents of the bubble profiles themselves: u ~ r^{-e_u},
/// v ~ r^{-e_v}. These are gamma + 1 on the u side and N - 2 on the v side.
pub fn profile_tail_exponents(pair: &ExponentPair, decay: &DecayExponent) -> Result<(f64, f64)> {
    let n = pair.n as f64;
    let e_v = n - 2.0;
    let e_u = match decay.regime {
        Regime::QAbove => n - 2.0,
        Regime::QBelow => pair.q * (n - 2.0) - 2.0,
        Regime::QLog => {
            return Err(Error::Domain(
                "logarithmic regime has no pure power tail".into(),
            ))
        }
    };
    Ok((e_u, e_v))
}

/// Exponent ledger of the reduction remainder.
///
/// Entries are the powers of delta controlling each remainder block; the
/// estimate closes when every entry capped at 1 stays above 1/2, i.e.
/// sigma = capped_min - 1/2 > 0.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RemainderLedger {
    /// pN/(q+1)
    pub e_uv: f64,
    /// pqN/(p+1)
    pub e_pq: f64,
    /// qN/(p+1)
    pub e_qp: f64,
    /// (gamma + 1 - N/(p+1)) p, the corrector-block exponent.
    pub e_phi: f64,
    /// Nq/(p+1), the v-side analogue.
    pub e_v: f64,
    /// min(1, entries).
    pub capped_min: f64,
    pub sigma: f64,
    /// Logarithmic factor present when e_phi sits exactly at 1.
    pub s1_log: bool,
    /// Logarithmic factor present when e_v sits exactly at 1.
    pub s2_log: bool,
    /// (5 + sqrt(8N+9)) / (4(N-2)): sigma > 0 exactly above this q.
    pub threshold_q: f64,
    /// N >= 4, p >= q > 1 and q >= 4/(N-2).
    pub hypotheses_ok: bool,
}

pub fn threshold_q(n: u32) -> f64 {
    let n = n as f64;
    (5.0 + (8.0 * n + 9.0).sqrt()) / (4.0 * (n - 2.0))
}

/// Assemble the remainder ledger for a critical pair outside the log regime.
pub fn remainder_ledger(pair: &ExponentPair) -> Result<RemainderLedger> {
    pair.require_critical()?;
    let decay = decay_exponent(pair)?;
    if decay.regime == Regime::QLog {
        return Err(Error::Domain(
            "unsupported case: q = N/(N-2) (logarithmic decay)".into(),
        ));
    }
    let gamma = decay.require_gamma()?;
    let n = pair.n as f64;
    let (p, q) = (pair.p, pair.q);
    let e_uv = p * n / (q + 1.0);
    let e_pq = p * q * n / (p + 1.0);
    let e_qp = q * n / (p + 1.0);
    let e_phi = (gamma + 1.0 - n / (p + 1.0)) * p;
    let e_v = n * q / (p + 1.0);

    // e_phi collapses onto e_uv above the split and onto e_pq below it.
    let expected = match decay.regime {
        Regime::QAbove => e_uv,
        Regime::QBelow => e_pq,
        Regime::QLog => unreachable!(),
    };
    if (e_phi - expected).abs() > 1e-12 * expected.max(1.0) {
        return Err(Error::Domain(format!(
            "ledger inconsistency: e_phi = {e_phi}, expected {expected}"
        )));
    }

    let capped_min = [e_uv, e_pq, e_qp, e_phi, e_v]
        .into_iter()
        .fold(1.0_f64, f64::min);
    let sigma = capped_min - 0.5;
    let thr = threshold_q(pair.n);
    let hypotheses_ok =
        pair.n >= 4 && pair.p >= pair.q && pair.q > 1.0 && pair.q >= 4.0 / (n - 2.0) - 1e-12;
    if q > thr + 1e-12 && sigma <= 0.0 {
        return Err(Error::Domain(format!(
            "sigma = {sigma} not positive although q = {q} > threshold {thr}"
        )));
    }
    Ok(RemainderLedger {
        e_uv,
        e_pq,
        e_qp,
        e_phi,
        e_v,
        capped_min,
        sigma,
        s1_log: (e_phi - 1.0).abs() <= 1e-12,
        s2_log: (e_v - 1.0).abs() <= 1e-12,
        threshold_q: thr,
        hypotheses_ok,
    })
}

/// One of the four almost-critical perturbations (q + sign_q eps, p + sign_p eps).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RegimeVariant {
    pub sign_q: i8,
    pub sign_p: i8,
    /// Sign of the eps*ln(delta) coefficient; 0 when degenerate.
    pub c2_sign: i8,
    /// Sign the mean curvature must have at the blow-up point; 0 when degenerate.
    pub admissible_h_sign: i8,
    /// True for the mixed-sign cases with p = q, where the coefficient vanishes.
    pub degenerate: bool,
}

/// Sign table of the eps*ln(delta) coefficient for the perturbation
/// (q + sign_q eps, p + sign_p eps).
pub fn regime_sign(sign_q: i8, sign_p: i8, p: f64, q: f64) -> Result<RegimeVariant> {
    if sign_q.abs() != 1 || sign_p.abs() != 1 {
        return Err(Error::Domain("perturbation signs must be +1 or -1".into()));
    }
    if !(p > 1.0 && q > 1.0) {
        return Err(Error::Domain("exponents must exceed 1".into()));
    }
    let value =
        -(sign_q as f64) / ((q + 1.0) * (q + 1.0)) - (sign_p as f64) / ((p + 1.0) * (p + 1.0));
    let degenerate = sign_q != sign_p && p == q;
    let c2_sign = if degenerate {
        0
    } else if value > 0.0 {
        1
    } else {
        -1
    };
    Ok(RegimeVariant {
        sign_q,
        sign_p,
        c2_sign,
        admissible_h_sign: -c2_sign,
        degenerate,
    })
}
