//! Implicit boundary surfaces in R^N: normals, tangent frames, the shape
//! operator with principal curvatures and quadric coefficients, and a
//! constrained Newton search for critical points of the mean curvature.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::halfspace::QuadricBoundaryData;

/// Minimum gradient norm for a regular surface point.
const GRAD_FLOOR: f64 = 1e-8;

type CustomFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum SurfaceFamily {
    Sphere {
        center: Vec<f64>,
        radius: f64,
    },
    /// Domain between two concentric spheres centered at the origin.
    Shell {
        r_inner: f64,
        r_outer: f64,
    },
    Ellipsoid {
        center: Vec<f64>,
        semi_axes: Vec<f64>,
    },
    /// Ball of `ball_radius` minus the origin-centered ellipsoid.
    EllipsoidalHole {
        ball_radius: f64,
        semi_axes: Vec<f64>,
    },
    Custom {
        f: CustomFn,
        bounding_radius: f64,
    },
}

impl fmt::Debug for SurfaceFamily {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SurfaceFamily::Sphere { center, radius } => fm
                .debug_struct("Sphere")
                .field("center", center)
                .field("radius", radius)
                .finish(),
            SurfaceFamily::Shell { r_inner, r_outer } => fm
                .debug_struct("Shell")
                .field("r_inner", r_inner)
                .field("r_outer", r_outer)
                .finish(),
            SurfaceFamily::Ellipsoid { center, semi_axes } => fm
                .debug_struct("Ellipsoid")
                .field("center", center)
                .field("semi_axes", semi_axes)
                .finish(),
            SurfaceFamily::EllipsoidalHole {
                ball_radius,
                semi_axes,
            } => fm
                .debug_struct("EllipsoidalHole")
                .field("ball_radius", ball_radius)
                .field("semi_axes", semi_axes)
                .finish(),
            SurfaceFamily::Custom { .. } => fm.write_str("Custom"),
        }
    }
}

/// Implicit boundary of a domain, oriented so the domain is `F < 0`.
#[derive(Debug, Clone)]
pub struct BoundarySurface {
    pub dim: usize,
    pub family: SurfaceFamily,
    /// Swap the domain to the other side of the same geometric surface.
    pub flipped: bool,
    /// Optional rigid motion: F(x) = F0(R^T (x - t)).
    pub rotation: Option<Vec<Vec<f64>>>,
    pub translation: Option<Vec<f64>>,
}

/// A point on the surface with outward normal and orthonormal tangent frame.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub x: Vec<f64>,
    pub nu: Vec<f64>,
    pub frame: Vec<Vec<f64>>,
}

/// Curvature data at a surface point. Principal curvatures are signed so a
/// convex domain has positive curvature (unit ball: H = 1); the quadric
/// coefficients rho_j = kappa_j / 2 describe the boundary graph in the
/// principal frame.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub h: f64,
    pub kappa: Vec<f64>,
    pub rho: Vec<f64>,
    /// Principal directions, one per curvature, orthonormal tangent vectors.
    pub principal_frame: Vec<Vec<f64>>,
    pub tangent_grad_h: Vec<f64>,
    pub tangent_hess_h: Vec<Vec<f64>>,
    pub nondegenerate: bool,
}

/// A located critical point of the mean curvature.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub point: SurfacePoint,
    pub report: CurvatureReport,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

impl BoundarySurface {
    pub fn sphere(dim: usize, center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.len() != dim || radius <= 0.0 {
            return Err(Error::Geometry("bad sphere parameters".into()));
        }
        Ok(BoundarySurface {
            dim,
            family: SurfaceFamily::Sphere { center, radius },
            flipped: false,
            rotation: None,
            translation: None,
        })
    }

    pub fn shell(dim: usize, r_inner: f64, r_outer: f64) -> Result<Self> {
        if !(0.0 < r_inner && r_inner < r_outer) {
            return Err(Error::Geometry("shell radii must satisfy 0 < r1 < r2".into()));
        }
        Ok(BoundarySurface {
            dim,
            family: SurfaceFamily::Shell { r_inner, r_outer },
            flipped: false,
            rotation: None,
            translation: None,
        })
    }

    pub fn ellipsoid(dim: usize, center: Vec<f64>, semi_axes: Vec<f64>) -> Result<Self> {
        if center.len() != dim || semi_axes.len() != dim || semi_axes.iter().any(|&a| a <= 0.0) {
            return Err(Error::Geometry("bad ellipsoid parameters".into()));
        }
        Ok(BoundarySurface {
            dim,
            family: SurfaceFamily::Ellipsoid { center, semi_axes },
            flipped: false,
            rotation: None,
            translation: None,
        })
    }

    pub fn ellipsoidal_hole(dim: usize, ball_radius: f64, semi_axes: Vec<f64>) -> Result<Self> {
        if semi_axes.len() != dim
            || semi_axes.iter().any(|&a| a <= 0.0)
            || semi_axes.iter().any(|&a| a >= ball_radius)
        {
            return Err(Error::Geometry(
                "hole semi-axes must be positive and inside the ball".into(),
            ));
        }
        Ok(BoundarySurface {
            dim,
            family: SurfaceFamily::EllipsoidalHole {
                ball_radius,
                semi_axes,
            },
            flipped: false,
            rotation: None,
            translation: None,
        })
    }

    pub fn custom(dim: usize, f: CustomFn, bounding_radius: f64) -> Self {
        BoundarySurface {
            dim,
            family: SurfaceFamily::Custom { f, bounding_radius },
            flipped: false,
            rotation: None,
            translation: None,
        }
    }

    /// The same geometric surface with the domain on the other side.
    pub fn complement(mut self) -> Self {
        self.flipped = !self.flipped;
        self
    }

    /// Apply a rigid motion (rotation must be orthogonal to 1e-10).
    pub fn with_motion(mut self, rotation: Vec<Vec<f64>>, translation: Vec<f64>) -> Result<Self> {
        let n = self.dim;
        if rotation.len() != n || rotation.iter().any(|row| row.len() != n) {
            return Err(Error::Geometry("rotation must be N x N".into()));
        }
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for (rk, _) in rotation.iter().enumerate() {
                    s += rotation[rk][i] * rotation[rk][j];
                }
                let target = if i == j { 1.0 } else { 0.0 };
                if (s - target).abs() > 1e-10 {
                    return Err(Error::Geometry("rotation matrix not orthogonal".into()));
                }
            }
        }
        if translation.len() != n {
            return Err(Error::Geometry("translation of wrong dimension".into()));
        }
        self.rotation = Some(rotation);
        self.translation = Some(translation);
        Ok(self)
    }

    /// Map world coordinates into the family's body frame.
    fn to_body(&self, x: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = match &self.translation {
            Some(t) => x.iter().zip(t).map(|(xi, ti)| xi - ti).collect(),
            None => x.to_vec(),
        };
        if let Some(rot) = &self.rotation {
            let mut out = vec![0.0; self.dim];
            for (i, oi) in out.iter_mut().enumerate() {
                for j in 0..self.dim {
                    // R^T y
                    *oi += rot[j][i] * y[j];
                }
            }
            y = out;
        }
        y
    }

    fn vec_to_world(&self, v: &[f64]) -> Vec<f64> {
        match &self.rotation {
            Some(rot) => {
                let mut out = vec![0.0; self.dim];
                for (i, oi) in out.iter_mut().enumerate() {
                    for j in 0..self.dim {
                        *oi += rot[i][j] * v[j];
                    }
                }
                out
            }
            None => v.to_vec(),
        }
    }

    fn body_f(&self, y: &[f64]) -> f64 {
        let val = match &self.family {
            SurfaceFamily::Sphere { center, radius } => {
                let mut s = 0.0;
                for (yi, ci) in y.iter().zip(center) {
                    s += (yi - ci) * (yi - ci);
                }
                s - radius * radius
            }
            SurfaceFamily::Shell { r_inner, r_outer } => {
                let u: f64 = y.iter().map(|v| v * v).sum();
                (u - r_inner * r_inner) * (u - r_outer * r_outer)
            }
            SurfaceFamily::Ellipsoid { center, semi_axes } => {
                let mut s = -1.0;
                for ((yi, ci), ai) in y.iter().zip(center).zip(semi_axes) {
                    s += (yi - ci) * (yi - ci) / (ai * ai);
                }
                s
            }
            SurfaceFamily::EllipsoidalHole {
                ball_radius,
                semi_axes,
            } => {
                let u: f64 = y.iter().map(|v| v * v).sum();
                let mut g = -1.0;
                for (yi, ai) in y.iter().zip(semi_axes) {
                    g += yi * yi / (ai * ai);
                }
                (u - ball_radius * ball_radius) * g
            }
            SurfaceFamily::Custom { f, .. } => f(y),
        };
        if self.flipped {
            -val
        } else {
            val
        }
    }

    fn body_grad(&self, y: &[f64]) -> Vec<f64> {
        let mut g = match &self.family {
            SurfaceFamily::Sphere { center, .. } => {
                y.iter().zip(center).map(|(yi, ci)| 2.0 * (yi - ci)).collect()
            }
            SurfaceFamily::Shell { r_inner, r_outer } => {
                let u: f64 = y.iter().map(|v| v * v).sum();
                let factor = 2.0 * (2.0 * u - r_inner * r_inner - r_outer * r_outer);
                y.iter().map(|yi| factor * yi).collect()
            }
            SurfaceFamily::Ellipsoid { center, semi_axes } => y
                .iter()
                .zip(center)
                .zip(semi_axes)
                .map(|((yi, ci), ai)| 2.0 * (yi - ci) / (ai * ai))
                .collect(),
            SurfaceFamily::EllipsoidalHole {
                ball_radius,
                semi_axes,
            } => {
                let u: f64 = y.iter().map(|v| v * v).sum();
                let h = u - ball_radius * ball_radius;
                let mut g_val = -1.0;
                for (yi, ai) in y.iter().zip(semi_axes) {
                    g_val += yi * yi / (ai * ai);
                }
                y.iter()
                    .zip(semi_axes)
                    .map(|(yi, ai)| h * 2.0 * yi / (ai * ai) + g_val * 2.0 * yi)
                    .collect()
            }
            SurfaceFamily::Custom { f, .. } => {
                let mut g = vec![0.0; self.dim];
                let h = 1e-6 * (1.0 + norm(y));
                let mut yp = y.to_vec();
                for i in 0..self.dim {
                    yp[i] = y[i] + h;
                    let fp = f(&yp);
                    yp[i] = y[i] - h;
                    let fm = f(&yp);
                    yp[i] = y[i];
                    g[i] = (fp - fm) / (2.0 * h);
                }
                g
            }
        };
        if self.flipped {
            for gi in &mut g {
                *gi = -*gi;
            }
        }
        g
    }

    fn body_hess(&self, y: &[f64]) -> Vec<Vec<f64>> {
        let n = self.dim;
        let mut hess = vec![vec![0.0; n]; n];
        match &self.family {
            SurfaceFamily::Sphere { .. } => {
                for (i, row) in hess.iter_mut().enumerate() {
                    row[i] = 2.0;
                }
            }
            SurfaceFamily::Shell { r_inner, r_outer } => {
                let u: f64 = y.iter().map(|v| v * v).sum();
                let diag = 2.0 * (2.0 * u - r_inner * r_inner - r_outer * r_outer);
                for i in 0..n {
                    for j in 0..n {
                        hess[i][j] = 8.0 * y[i] * y[j];
                    }
                    hess[i][i] += diag;
                }
            }
            SurfaceFamily::Ellipsoid { semi_axes, .. } => {
                for (i, row) in hess.iter_mut().enumerate() {
                    row[i] = 2.0 / (semi_axes[i] * semi_axes[i]);
                }
            }
            SurfaceFamily::EllipsoidalHole {
                ball_radius,
                semi_axes,
            } => {
                let u: f64 = y.iter().map(|v| v * v).sum();
                let h_val = u - ball_radius * ball_radius;
                let mut g_val = -1.0;
                for (yi, ai) in y.iter().zip(semi_axes) {
                    g_val += yi * yi / (ai * ai);
                }
                // hess = h grad2(g) + grad(g) grad(h)^T + grad(h) grad(g)^T + g grad2(h)
                let gg: Vec<f64> = y
                    .iter()
                    .zip(semi_axes)
                    .map(|(yi, ai)| 2.0 * yi / (ai * ai))
                    .collect();
                let gh: Vec<f64> = y.iter().map(|yi| 2.0 * yi).collect();
                for i in 0..n {
                    for j in 0..n {
                        hess[i][j] = gg[i] * gh[j] + gh[i] * gg[j];
                    }
                    hess[i][i] += h_val * 2.0 / (semi_axes[i] * semi_axes[i]) + g_val * 2.0;
                }
            }
            SurfaceFamily::Custom { f, .. } => {
                let h = 1e-4 * (1.0 + norm(y));
                let mut yp = y.to_vec();
                for i in 0..n {
                    for j in i..n {
                        let mut stencil = 0.0;
                        for (si, sj) in [(1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)] {
                            yp[i] += si * h;
                            yp[j] += sj * h;
                            stencil += si * sj * f(&yp);
                            yp[i] = y[i];
                            yp[j] = y[j];
                        }
                        hess[i][j] = stencil / (4.0 * h * h);
                        hess[j][i] = hess[i][j];
                    }
                }
            }
        }
        if self.flipped {
            for row in &mut hess {
                for v in row {
                    *v = -*v;
                }
            }
        }
        hess
    }

    pub fn f(&self, x: &[f64]) -> f64 {
        self.body_f(&self.to_body(x))
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        let g = self.body_grad(&self.to_body(x));
        self.vec_to_world(&g)
    }

    pub fn hess(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let h = self.body_hess(&self.to_body(x));
        match &self.rotation {
            None => h,
            Some(rot) => {
                let n = self.dim;
                // R H R^T
                let mut out = vec![vec![0.0; n]; n];
                for i in 0..n {
                    for j in 0..n {
                        let mut s = 0.0;
                        for (k, hk) in h.iter().enumerate() {
                            for (l, &hkl) in hk.iter().enumerate() {
                                s += rot[i][k] * hkl * rot[j][l];
                            }
                        }
                        out[i][j] = s;
                    }
                }
                out
            }
        }
    }

    /// Characteristic radius enclosing the whole zero set (world frame).
    pub fn bounding_radius(&self) -> f64 {
        let body = match &self.family {
            SurfaceFamily::Sphere { center, radius } => norm(center) + radius,
            SurfaceFamily::Shell { r_outer, .. } => *r_outer,
            SurfaceFamily::Ellipsoid { center, semi_axes } => {
                norm(center) + semi_axes.iter().cloned().fold(0.0, f64::max)
            }
            SurfaceFamily::EllipsoidalHole { ball_radius, .. } => *ball_radius,
            SurfaceFamily::Custom {
                bounding_radius, ..
            } => *bounding_radius,
        };
        let shift = self.translation.as_ref().map(|t| norm(t)).unwrap_or(0.0);
        body + shift
    }

    /// Newton projection onto the zero set along the gradient direction.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = x.to_vec();
        for _ in 0..60 {
            let f = self.f(&y);
            let g = self.grad(&y);
            let g2 = dot(&g, &g);
            if g2.sqrt() < GRAD_FLOOR {
                return Err(Error::Geometry(format!(
                    "singular surface point near {y:?}: |grad F| < {GRAD_FLOOR}"
                )));
            }
            if f.abs() <= 1e-14 * (1.0 + g2.sqrt() * norm(&y)) {
                return Ok(y);
            }
            for i in 0..self.dim {
                y[i] -= f * g[i] / g2;
            }
        }
        let f = self.f(&y);
        if f.abs() <= 1e-10 {
            Ok(y)
        } else {
            Err(Error::Geometry(format!(
                "projection did not converge: |F| = {:.3e}",
                f.abs()
            )))
        }
    }

    /// Surface point with outward normal and a deterministic tangent frame.
    pub fn surface_point(&self, x: &[f64]) -> Result<SurfacePoint> {
        let y = self.project(x)?;
        let g = self.grad(&y);
        let gn = norm(&g);
        if gn < GRAD_FLOOR {
            return Err(Error::Geometry("singular surface point".into()));
        }
        let nu: Vec<f64> = g.iter().map(|gi| gi / gn).collect();
        let frame = tangent_frame(&nu);
        Ok(SurfacePoint { x: y, nu, frame })
    }

    /// Shape operator restricted to the tangent space, eigen-decomposed.
    pub fn mean_curvature(&self, x: &[f64]) -> Result<CurvatureReport> {
        let sp = self.surface_point(x)?;
        self.curvature_at(&sp, true)
    }

    /// Quadric coefficients rho_j = kappa_j/2 with the principal frame.
    pub fn quadric_coefficients(&self, x: &[f64]) -> Result<(QuadricBoundaryData, Vec<Vec<f64>>)> {
        let report = self.mean_curvature(x)?;
        Ok((
            QuadricBoundaryData::new(report.rho.clone()),
            report.principal_frame.clone(),
        ))
    }

    fn curvature_only(&self, sp: &SurfacePoint) -> Result<(f64, Vec<f64>, Vec<Vec<f64>>)> {
        let n = self.dim;
        let g = self.grad(&sp.x);
        let gn = norm(&g);
        if gn < GRAD_FLOOR {
            return Err(Error::Geometry("singular surface point".into()));
        }
        let hess = self.hess(&sp.x);
        let m = n - 1;
        let mut shape = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                let mut s = 0.0;
                for (a, ha) in hess.iter().enumerate() {
                    for (b, &hab) in ha.iter().enumerate() {
                        s += sp.frame[i][a] * hab * sp.frame[j][b];
                    }
                }
                shape[(i, j)] = s / gn;
            }
        }
        let eig = shape.symmetric_eigen();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
        let kappa: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let mut principal = Vec::with_capacity(m);
        for &k in &order {
            let col = eig.eigenvectors.column(k);
            let mut dir = vec![0.0; n];
            for (i, di) in dir.iter_mut().enumerate() {
                for j in 0..m {
                    *di += col[j] * sp.frame[j][i];
                }
            }
            principal.push(dir);
        }
        let h = kappa.iter().sum::<f64>() / m as f64;
        Ok((h, kappa, principal))
    }

    fn curvature_at(&self, sp: &SurfacePoint, with_derivatives: bool) -> Result<CurvatureReport> {
        let (h, kappa, principal) = self.curvature_only(sp)?;
        let m = self.dim - 1;
        let rho: Vec<f64> = kappa.iter().map(|k| k / 2.0).collect();
        let mut grad_h = vec![0.0; m];
        let mut hess_h = vec![vec![0.0; m]; m];
        let mut nondegenerate = false;
        if with_derivatives {
            // Small step for the gradient (position accuracy), larger one
            // for the Hessian so eps/h^2 noise stays below the
            // nondegeneracy threshold.
            let step = 1e-4 * (1.0 + norm(&sp.x));
            let step_h = 3e-3 * (1.0 + norm(&sp.x));
            let h_of = |t: &[f64]| -> Result<f64> {
                let mut x = sp.x.clone();
                for (i, ti) in t.iter().enumerate() {
                    for (k, xk) in x.iter_mut().enumerate() {
                        *xk += ti * sp.frame[i][k];
                    }
                }
                let proj = self.project(&x)?;
                // Normal and frame recomputed at the probe so the restricted
                // shape operator stays consistent.
                let g = self.grad(&proj);
                let gn = norm(&g);
                let nu: Vec<f64> = g.iter().map(|v| v / gn).collect();
                let frame = tangent_frame(&nu);
                let point = SurfacePoint { x: proj, nu, frame };
                Ok(self.curvature_only(&point)?.0)
            };
            let mut t = vec![0.0; m];
            let h0 = h;
            for i in 0..m {
                t[i] = step;
                let hp = h_of(&t)?;
                t[i] = -step;
                let hm = h_of(&t)?;
                t[i] = step_h;
                let hp2 = h_of(&t)?;
                t[i] = -step_h;
                let hm2 = h_of(&t)?;
                t[i] = 0.0;
                grad_h[i] = (hp - hm) / (2.0 * step);
                hess_h[i][i] = (hp2 - 2.0 * h0 + hm2) / (step_h * step_h);
            }
            for i in 0..m {
                for j in i + 1..m {
                    let mut acc = 0.0;
                    for (si, sj) in [(1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)] {
                        t[i] = si * step_h;
                        t[j] = sj * step_h;
                        acc += si * sj * h_of(&t)?;
                        t[i] = 0.0;
                        t[j] = 0.0;
                    }
                    hess_h[i][j] = acc / (4.0 * step_h * step_h);
                    hess_h[j][i] = hess_h[i][j];
                }
            }
            let mut mat = DMatrix::<f64>::zeros(m, m);
            for i in 0..m {
                for j in 0..m {
                    mat[(i, j)] = hess_h[i][j];
                }
            }
            let eigs = mat.symmetric_eigen().eigenvalues;
            let max_abs = eigs.iter().fold(0.0_f64, |a, &e| a.max(e.abs()));
            let min_abs = eigs.iter().fold(f64::INFINITY, |a, &e| a.min(e.abs()));
            // Degenerate either by eigenvalue ratio or because an
            // eigenvalue sits at finite-difference noise level.
            let noise = 2e-6 * (1.0 + h.abs());
            nondegenerate = max_abs > noise && min_abs > (1e-6 * max_abs).max(noise);
        }
        Ok(CurvatureReport {
            h,
            kappa,
            rho,
            principal_frame: principal,
            tangent_grad_h: grad_h,
            tangent_hess_h: hess_h,
            nondegenerate,
        })
    }

    /// Deterministic quasi-uniform seeds: ray casting from the centroid
    /// along low-discrepancy directions, bisecting every sign change of F so
    /// all boundary components are hit.
    pub fn default_seeds(&self, directions: usize) -> Vec<Vec<f64>> {
        let n = self.dim;
        let origin = self.translation.clone().unwrap_or_else(|| vec![0.0; n]);
        let r_out = self.bounding_radius() * 1.2;
        let mut state = 0x9e3779b97f4a7c15_u64;
        let mut next = move || {
            // splitmix64
            state = state.wrapping_add(0x9e3779b97f4a7c15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
            z ^ (z >> 31)
        };
        let mut gauss = move || {
            let u1 = (next() as f64 + 1.0) / (u64::MAX as f64 + 2.0);
            let u2 = (next() as f64 + 1.0) / (u64::MAX as f64 + 2.0);
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        };
        // Coordinate axes first (symmetric features sit there), then
        // low-discrepancy random directions.
        let mut dirs: Vec<Vec<f64>> = Vec::new();
        for i in 0..n {
            let mut plus = vec![0.0; n];
            plus[i] = 1.0;
            let mut minus = vec![0.0; n];
            minus[i] = -1.0;
            dirs.push(plus);
            dirs.push(minus);
        }
        while dirs.len() < directions + 2 * n {
            let dir: Vec<f64> = (0..n).map(|_| gauss()).collect();
            let dn = norm(&dir);
            if dn < 1e-12 {
                continue;
            }
            dirs.push(dir.iter().map(|d| d / dn).collect());
        }
        let mut seeds = Vec::new();
        for dir in dirs {
            let samples = 400;
            let mut prev_t = r_out * 1e-6;
            let probe = |t: f64| -> Vec<f64> {
                origin
                    .iter()
                    .zip(&dir)
                    .map(|(oi, di)| oi + t * di)
                    .collect()
            };
            let mut prev_f = self.f(&probe(prev_t));
            for k in 1..=samples {
                let t = r_out * k as f64 / samples as f64;
                let f = self.f(&probe(t));
                if prev_f.signum() != f.signum() {
                    let (mut a, mut b) = (prev_t, t);
                    for _ in 0..60 {
                        let mid = 0.5 * (a + b);
                        if self.f(&probe(mid)).signum() == prev_f.signum() {
                            a = mid;
                        } else {
                            b = mid;
                        }
                    }
                    seeds.push(probe(0.5 * (a + b)));
                }
                prev_t = t;
                prev_f = f;
            }
        }
        seeds
    }

    /// Constrained Newton on the tangential gradient of H from every seed;
    /// converged points are deduplicated and canonically ordered (by H, then
    /// lexicographic coordinates).
    pub fn find_critical_points(&self, seeds: Option<&[Vec<f64>]>) -> Result<Vec<CriticalPoint>> {
        self.find_critical_points_with(seeds, 1e-9)
    }

    pub fn find_critical_points_with(
        &self,
        seeds: Option<&[Vec<f64>]>,
        grad_tol: f64,
    ) -> Result<Vec<CriticalPoint>> {
        let default_seeds;
        let seeds = match seeds {
            Some(s) => s,
            None => {
                default_seeds = self.default_seeds(24);
                &default_seeds
            }
        };
        let m = self.dim - 1;
        let mut found: Vec<CriticalPoint> = Vec::new();
        for seed in seeds {
            let mut sp = match self.surface_point(seed) {
                Ok(sp) => sp,
                Err(_) => continue,
            };
            let mut converged = false;
            for _ in 0..80 {
                let report = match self.curvature_at(&sp, true) {
                    Ok(r) => r,
                    Err(_) => break,
                };
                let gnorm = norm(&report.tangent_grad_h);
                if gnorm <= grad_tol {
                    converged = true;
                    break;
                }
                let mut hess = DMatrix::<f64>::zeros(m, m);
                for i in 0..m {
                    for j in 0..m {
                        hess[(i, j)] = report.tangent_hess_h[i][j];
                    }
                }
                let eig = hess.symmetric_eigen();
                let max_abs = eig.eigenvalues.iter().fold(0.0_f64, |a, &e| a.max(e.abs()));
                let floor = (1e-6 * max_abs).max(1e-10);
                let g = DVector::from_column_slice(&report.tangent_grad_h);
                let mut step = DVector::zeros(m);
                for k in 0..m {
                    let lambda = eig.eigenvalues[k];
                    // Noise-level eigendirections degrade to plain descent.
                    let denom = if lambda.abs() < floor { floor } else { lambda };
                    let vk = eig.eigenvectors.column(k);
                    step -= vk * (g.dot(&vk) / denom);
                }
                let cap = 0.15 * (1.0 + norm(&sp.x));
                let slen = step.norm();
                if slen > cap {
                    step *= cap / slen;
                }
                let mut x = sp.x.clone();
                for (i, xi) in x.iter_mut().enumerate() {
                    for k in 0..m {
                        *xi += step[k] * sp.frame[k][i];
                    }
                }
                sp = match self.surface_point(&x) {
                    Ok(next) => next,
                    Err(_) => break,
                };
            }
            if !converged {
                continue;
            }
            let report = self.curvature_at(&sp, true)?;
            let duplicate = found.iter().any(|cp| {
                cp.point
                    .x
                    .iter()
                    .zip(&sp.x)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
                    < 1e-6
            });
            if !duplicate {
                found.push(CriticalPoint { point: sp, report });
            }
        }
        found.sort_by(|a, b| {
            a.report
                .h
                .partial_cmp(&b.report.h)
                .unwrap()
                .then_with(|| a.point.x.partial_cmp(&b.point.x).unwrap())
        });
        Ok(found)
    }
}

/// Orthonormal tangent frame completing the unit normal, by Householder
/// reflection of the coordinate basis (deterministic).
pub fn tangent_frame(nu: &[f64]) -> Vec<Vec<f64>> {
    let n = nu.len();
    // Reflection mapping e_k -> nu where k maximizes |nu_k| (stability).
    let k = nu
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let sign = if nu[k] >= 0.0 { 1.0 } else { -1.0 };
    let mut w: Vec<f64> = nu.to_vec();
    w[k] += sign;
    let wn2 = dot(&w, &w);
    let mut frame = Vec::with_capacity(n - 1);
    for j in 0..n {
        if j == k {
            continue;
        }
        // column j of (I - 2 w w^T / |w|^2), times -sign so H e_k = nu.
        let mut col = vec![0.0; n];
        col[j] = 1.0;
        let factor = 2.0 * w[j] / wn2;
        for (i, ci) in col.iter_mut().enumerate() {
            *ci -= factor * w[i];
        }
        frame.push(col);
    }
    frame
}
