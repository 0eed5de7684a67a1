//! Adaptive explicit Runge-Kutta stepping (Dormand-Prince 5(4)) for small
//! fixed-size systems, with first-same-as-last reuse and PI step control.

/// Dormand-Prince 5(4) integrator over a `D`-dimensional state.
pub struct AdaptiveRk<const D: usize, F>
where
    F: FnMut(f64, &[f64; D]) -> [f64; D],
{
    rhs: F,
    pub t: f64,
    pub y: [f64; D],
    /// RHS at the current state (FSAL).
    pub dy: [f64; D],
    h: f64,
    rtol: f64,
    atol: f64,
    pub accepted: u64,
    pub rejected: u64,
    /// Steps forced through at the minimum step size.
    pub forced: u64,
}

/// One accepted step: the previous state and its derivative, for dense
/// (Hermite) reconstruction inside the step.
pub struct StepRecord<const D: usize> {
    pub t0: f64,
    pub y0: [f64; D],
    pub dy0: [f64; D],
    pub t1: f64,
    pub y1: [f64; D],
    pub dy1: [f64; D],
}

impl<const D: usize> StepRecord<D> {
    /// Cubic Hermite value of component `i` at `t` inside the step.
    pub fn eval(&self, i: usize, t: f64) -> f64 {
        hermite_value(
            self.t0,
            self.y0[i],
            self.dy0[i],
            self.t1,
            self.y1[i],
            self.dy1[i],
            t,
        )
    }
}

/// Cubic Hermite interpolation on [x0, x1] from values and derivatives.
pub fn hermite_value(x0: f64, f0: f64, d0: f64, x1: f64, f1: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let s = (x - x0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    h00 * f0 + h10 * h * d0 + h01 * f1 + h11 * h * d1
}

/// Derivative of the cubic Hermite interpolant at `x`.
pub fn hermite_derivative(x0: f64, f0: f64, d0: f64, x1: f64, f1: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let s = (x - x0) / h;
    let s2 = s * s;
    let dh00 = (6.0 * s2 - 6.0 * s) / h;
    let dh10 = 3.0 * s2 - 4.0 * s + 1.0;
    let dh01 = (-6.0 * s2 + 6.0 * s) / h;
    let dh11 = 3.0 * s2 - 2.0 * s;
    dh00 * f0 + dh10 * d0 + dh01 * f1 + dh11 * d1
}

// Dormand-Prince coefficients.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - bhat, the embedded error weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

impl<const D: usize, F> AdaptiveRk<D, F>
where
    F: FnMut(f64, &[f64; D]) -> [f64; D],
{
    pub fn new(mut rhs: F, t0: f64, y0: [f64; D], h0: f64, rtol: f64, atol: f64) -> Self {
        let dy = rhs(t0, &y0);
        AdaptiveRk {
            rhs,
            t: t0,
            y: y0,
            dy,
            h: h0,
            rtol,
            atol,
            accepted: 0,
            rejected: 0,
            forced: 0,
        }
    }

    fn h_min(&self) -> f64 {
        1e-13 * self.t.abs().max(1.0)
    }

    /// Take one accepted step, not stepping past `t_limit`.
    pub fn step(&mut self, t_limit: f64) -> StepRecord<D> {
        loop {
            let h = self.h.min(t_limit - self.t).max(self.h_min());
            let clipped = h < self.h;
            let t = self.t;
            let y = self.y;
            let k1 = self.dy;

            let mut y2 = [0.0; D];
            for i in 0..D {
                y2[i] = y[i] + h * A21 * k1[i];
            }
            let k2 = (self.rhs)(t + h / 5.0, &y2);
            let mut y3 = [0.0; D];
            for i in 0..D {
                y3[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
            }
            let k3 = (self.rhs)(t + 3.0 * h / 10.0, &y3);
            let mut y4 = [0.0; D];
            for i in 0..D {
                y4[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            let k4 = (self.rhs)(t + 4.0 * h / 5.0, &y4);
            let mut y5 = [0.0; D];
            for i in 0..D {
                y5[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            let k5 = (self.rhs)(t + 8.0 * h / 9.0, &y5);
            let mut y6 = [0.0; D];
            for i in 0..D {
                y6[i] = y[i]
                    + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            let k6 = (self.rhs)(t + h, &y6);
            let mut y_new = [0.0; D];
            for i in 0..D {
                y_new[i] = y[i]
                    + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
            }
            let k7 = (self.rhs)(t + h, &y_new);

            let mut err_sq = 0.0;
            for i in 0..D {
                let e = h
                    * (E1 * k1[i]
                        + E3 * k3[i]
                        + E4 * k4[i]
                        + E5 * k5[i]
                        + E6 * k6[i]
                        + E7 * k7[i]);
                let sc = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
                err_sq += (e / sc) * (e / sc);
            }
            let err = (err_sq / D as f64).sqrt();

            let at_min = h <= self.h_min() * 1.0000001;
            if err <= 1.0 || at_min {
                if err > 1.0 {
                    self.forced += 1;
                }
                let record = StepRecord {
                    t0: t,
                    y0: y,
                    dy0: k1,
                    t1: t + h,
                    y1: y_new,
                    dy1: k7,
                };
                self.t = t + h;
                self.y = y_new;
                self.dy = k7;
                self.accepted += 1;
                let factor = if err > 0.0 {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                } else {
                    5.0
                };
                let h_next = h * factor;
                // Do not let a step clipped at t_limit shrink the controller.
                self.h = if clipped { self.h.max(h_next) } else { h_next };
                return record;
            }
            self.rejected += 1;
            self.h = h * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
        }
    }

    /// Advance exactly to `t_target`, taking as many steps as needed.
    pub fn advance_to(&mut self, t_target: f64) {
        while self.t < t_target {
            self.step(t_target);
        }
    }
}
