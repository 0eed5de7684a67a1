//! Reduced-energy landscape in the concentration scale d and boundary point
//! xi: Theta(d, xi) = -c4 H(xi) d - c2 ln d, its stationary scale d0, the
//! truncated energy expansion, and the full blow-up prediction.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bubble::BubbleSolution;
use crate::constants::EnergyConstants;
use crate::error::{Error, Result};
use crate::geometry::{BoundarySurface, CriticalPoint, SurfacePoint};
use crate::halfspace::{ProjectionExpansion, QuadricBoundaryData};
use crate::hyperbola::{self, RegimeVariant, RemainderLedger};

/// Theta(d, xi) for mean curvature H at the boundary point.
pub fn theta(ec: &EnergyConstants, h: f64, d: f64) -> Result<f64> {
    if d <= 0.0 {
        return Err(Error::Domain(format!("scale d = {d} must be positive")));
    }
    Ok(-ec.frak_c4 * h * d - ec.frak_c2 * d.ln())
}

/// Stationary concentration scale and the second derivative there.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StationaryScale {
    pub d0: f64,
    /// Theta''(d0) = c2 / d0^2, positive: the scale is a minimum.
    pub theta_dd: f64,
    pub theta_at_d0: f64,
}

/// d0 = -c2 / (c4 H), the unique stationary point of Theta for H < 0.
pub fn d_star(ec: &EnergyConstants, h: f64) -> Result<StationaryScale> {
    if h >= 0.0 {
        return Err(Error::Refusal(format!(
            "no stationary scale: Theta is monotone for H = {h} >= 0; \
             the slightly subcritical regime needs H < 0"
        )));
    }
    if !(ec.frak_c2 > 0.0 && ec.frak_c4 > 0.0) {
        return Err(Error::Accuracy(
            "reduced constants must be positive for a stationary scale".into(),
        ));
    }
    let d0 = -ec.frak_c2 / (ec.frak_c4 * h);
    Ok(StationaryScale {
        d0,
        theta_dd: ec.frak_c2 / (d0 * d0),
        theta_at_d0: theta(ec, h, d0)?,
    })
}

/// Truncated reduced energy c1 - c2 e ln e + c3 e + Theta(d) e; the o(e)
/// remainder of the expansion is not modeled.
pub fn reduced_energy_eval(ec: &EnergyConstants, eps: f64, d: f64, h: f64) -> Result<f64> {
    if !(eps > 0.0 && eps <= 0.1) {
        return Err(Error::Domain(format!(
            "eps = {eps} outside the admissible range (0, 0.1]"
        )));
    }
    Ok(ec.frak_c1 - ec.frak_c2 * eps * eps.ln() + ec.frak_c3 * eps + theta(ec, h, d)? * eps)
}

/// Theta sampled over a d-grid and a boundary chart around a point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThetaLandscape {
    /// Log-spaced concentration scales.
    pub d_grid: Vec<f64>,
    /// Chart samples: (direction index, offset, boundary point, H).
    pub chart: Vec<ChartSample>,
    /// Row i, column j holds Theta(d_grid i, chart sample j).
    pub theta: Vec<Vec<f64>>,
    /// Indices (i, j) of the minimum over the grid.
    pub minimum: (usize, usize),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChartSample {
    pub direction: usize,
    pub offset: f64,
    pub point: Vec<f64>,
    pub h: f64,
}

impl ThetaLandscape {
    /// Sample Theta over log-spaced d in [d_lo, d_hi] and chart rays along
    /// every tangent direction at `center` (projected back to the surface).
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        ec: &EnergyConstants,
        surface: &BoundarySurface,
        center: &[f64],
        radius: f64,
        arm_points: usize,
        d_lo: f64,
        d_hi: f64,
        d_count: usize,
    ) -> Result<Self> {
        if !(d_lo > 0.0 && d_hi > d_lo && d_count >= 2) {
            return Err(Error::Domain("bad d-range".into()));
        }
        if arm_points < 2 {
            return Err(Error::Domain("need at least two chart points per arm".into()));
        }
        let sp = surface.surface_point(center)?;
        let d_grid: Vec<f64> = (0..d_count)
            .map(|i| d_lo * (d_hi / d_lo).powf(i as f64 / (d_count - 1) as f64))
            .collect();
        let mut chart = Vec::new();
        for (dir, tau) in sp.frame.iter().enumerate() {
            for k in 0..arm_points {
                let offset = radius * (2.0 * k as f64 / (arm_points - 1) as f64 - 1.0);
                let probe: Vec<f64> = sp
                    .x
                    .iter()
                    .zip(tau)
                    .map(|(x, t)| x + offset * t)
                    .collect();
                let report = surface.mean_curvature(&probe)?;
                let on_surface = surface.project(&probe)?;
                chart.push(ChartSample {
                    direction: dir,
                    offset,
                    point: on_surface,
                    h: report.h,
                });
            }
        }
        let mut theta_grid = Vec::with_capacity(d_grid.len());
        let mut minimum = (0, 0);
        let mut min_value = f64::INFINITY;
        for (i, &d) in d_grid.iter().enumerate() {
            let mut row = Vec::with_capacity(chart.len());
            for (j, sample) in chart.iter().enumerate() {
                let value = theta(ec, sample.h, d)?;
                if value < min_value {
                    min_value = value;
                    minimum = (i, j);
                }
                row.push(value);
            }
            theta_grid.push(row);
        }
        Ok(ThetaLandscape {
            d_grid,
            chart,
            theta: theta_grid,
            minimum,
        })
    }
}

/// The assembled blow-up prediction: the selected boundary point, the
/// stationary scale, and the admissible perturbation regime.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlowupPrediction {
    pub xi0: SurfacePoint,
    pub h0: f64,
    pub d0: f64,
    pub theta_at_d0: f64,
    pub theta_dd: f64,
    /// (eps, delta = d0 eps) samples.
    pub delta_samples: Vec<(f64, f64)>,
    pub regime: RegimeVariant,
    /// Carried as metadata only: the zeroth-order parameter of the system
    /// does not enter the leading-order expansion computed here.
    pub mu: f64,
    pub hypotheses: RemainderLedger,
    /// Quadric data at xi0 in the principal frame, for corrector calls.
    pub rho_at_xi0: QuadricBoundaryData,
}

/// Select the admissible blow-up point on the surface and assemble the
/// prediction. Refuses when the hypotheses of the construction fail: no nondegenerate
/// critical point with negative mean curvature, or exponent hypotheses not
/// satisfied.
pub fn predict_blowup(
    surface: &BoundarySurface,
    ec: &EnergyConstants,
    sol: &BubbleSolution,
    eps_list: &[f64],
    mu: f64,
) -> Result<BlowupPrediction> {
    let ledger = hyperbola::remainder_ledger(&sol.pair)?;
    if !ledger.hypotheses_ok {
        let n = sol.pair.n;
        let floor = 4.0 / (n as f64 - 2.0);
        let mut reasons = Vec::new();
        if n < 4 {
            reasons.push(format!("N = {n} < 4"));
        }
        if sol.pair.q < floor {
            reasons.push(format!("q = {} < 4/(N-2) = {floor}", sol.pair.q));
        }
        if !(sol.pair.p >= sol.pair.q && sol.pair.q > 1.0) {
            reasons.push("p >= q > 1 violated".into());
        }
        return Err(Error::Refusal(format!(
            "exponent hypotheses not satisfied: {}",
            reasons.join("; ")
        )));
    }
    if eps_list.iter().any(|&e| !(e > 0.0 && e <= 0.1)) {
        return Err(Error::Domain(
            "every eps must lie in (0, 0.1]".into(),
        ));
    }
    let critical = surface.find_critical_points(None)?;
    if critical.is_empty() {
        return Err(Error::Refusal(
            "no critical point of the mean curvature was found".into(),
        ));
    }
    let negative: Vec<&CriticalPoint> =
        critical.iter().filter(|cp| cp.report.h < 0.0).collect();
    if negative.is_empty() {
        return Err(Error::Refusal(
            "mean curvature has no negative critical value (convex-type boundary); \
             no blow-up point exists in the slightly subcritical regime"
                .into(),
        ));
    }
    let admissible: Vec<&&CriticalPoint> = negative
        .iter()
        .filter(|cp| cp.report.nondegenerate)
        .collect();
    if admissible.is_empty() {
        return Err(Error::Refusal(
            "every negative-curvature critical point is degenerate \
             (symmetry orbit); the nondegeneracy hypothesis fails"
                .into(),
        ));
    }
    // Canonical order puts the global minimum of H first.
    let selected = admissible[0];
    let h0 = selected.report.h;
    let scale = d_star(ec, h0)?;
    let delta_samples = eps_list.iter().map(|&e| (e, scale.d0 * e)).collect();
    // The construction perturbs both exponents downward.
    let regime = hyperbola::regime_sign(-1, -1, sol.pair.p, sol.pair.q)?;

    // Quadric data in the principal frame at the selected point.
    let rho_at_xi0 = QuadricBoundaryData::new(selected.report.rho.clone());
    let xi0 = SurfacePoint {
        x: selected.point.x.clone(),
        nu: selected.point.nu.clone(),
        frame: selected.report.principal_frame.clone(),
    };
    Ok(BlowupPrediction {
        xi0,
        h0,
        d0: scale.d0,
        theta_at_d0: scale.theta_at_d0,
        theta_dd: scale.theta_dd,
        delta_samples,
        regime,
        mu,
        hypotheses: ledger,
        rho_at_xi0,
    })
}

/// One evaluated sample of the predicted near-boundary profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnsatzSample {
    pub x: Vec<f64>,
    pub u: f64,
    pub v: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnsatzField {
    pub samples: Vec<AnsatzSample>,
    pub skipped: Vec<(Vec<f64>, String)>,
    pub delta: f64,
    /// Chart validity radius used to filter the requested points.
    pub chart_radius: f64,
}

/// Evaluate the two-term near-boundary approximation of the blow-up profile
/// at ambient sample points near the predicted concentration point.
///
/// The true projected profile on the domain differs from these values by
/// the remainder orders reported in the expansion; only the half-space
/// two-term model is evaluated.
pub fn ansatz_field(
    prediction: &BlowupPrediction,
    sol: &Arc<BubbleSolution>,
    eps: f64,
    sample_points: &[Vec<f64>],
) -> Result<AnsatzField> {
    if !(eps > 0.0 && eps <= 0.1) {
        return Err(Error::Domain("eps must lie in (0, 0.1]".into()));
    }
    let delta = prediction.d0 * eps;
    let expansion = ProjectionExpansion::new(sol, prediction.rho_at_xi0.clone())?;
    let n = sol.pair.n as usize;
    let max_kappa = prediction
        .rho_at_xi0
        .rho
        .iter()
        .fold(0.0_f64, |m, r| m.max(2.0 * r.abs()));
    let chart_radius = if max_kappa > 0.0 { 0.5 / max_kappa } else { 1.0 };
    let mut samples = Vec::new();
    let mut skipped = Vec::new();
    for point in sample_points {
        if point.len() != n {
            skipped.push((point.clone(), "wrong dimension".into()));
            continue;
        }
        // Half-space chart coordinates: tangential offsets in the principal
        // frame, then the inward-normal component.
        let offset: Vec<f64> = point
            .iter()
            .zip(&prediction.xi0.x)
            .map(|(p, c)| p - c)
            .collect();
        let mut chart = Vec::with_capacity(n);
        for tau in &prediction.xi0.frame {
            chart.push(offset.iter().zip(tau).map(|(o, t)| o * t).sum::<f64>());
        }
        let inward: f64 = -offset
            .iter()
            .zip(&prediction.xi0.nu)
            .map(|(o, nu)| o * nu)
            .sum::<f64>();
        chart.push(inward);
        let range: f64 = chart.iter().map(|c| c * c).sum::<f64>().sqrt();
        if inward < 0.0 {
            skipped.push((point.clone(), "outside the domain side of the chart".into()));
            continue;
        }
        if range > chart_radius {
            skipped.push((
                point.clone(),
                format!("outside chart validity radius {chart_radius:.3}"),
            ));
            continue;
        }
        let (u, v) = expansion.eval(delta, &chart)?;
        samples.push(AnsatzSample {
            x: point.clone(),
            u,
            v,
        });
    }
    Ok(AnsatzField {
        samples,
        skipped,
        delta,
        chart_radius,
    })
}
