//! Explicit Runge-Kutta steppers for small fixed-size systems.
//!
//! Two schemes: classical RK4 on a fixed grid, and the Dormand-Prince 5(4)
//! embedded pair with first-same-as-last reuse and a standard
//! `0.9 err^(-1/5)` step controller.

use nalgebra::SVector;

use crate::error::{Error, Result};

pub type Vector<const N: usize> = SVector<f64, N>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Scheme {
    Rk4 { dt: f64 },
    Dopri5 { rtol: f64, atol: f64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    /// Largest scaled local error estimate among accepted steps (0 for RK4).
    pub max_error_estimate: f64,
}

pub fn rk4_step<const N: usize, F>(f: &mut F, t: f64, y: &Vector<N>, h: f64) -> Vector<N>
where
    F: FnMut(f64, &Vector<N>) -> Vector<N>,
{
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &(y + k1 * (0.5 * h)));
    let k3 = f(t + 0.5 * h, &(y + k2 * (0.5 * h)));
    let k4 = f(t + h, &(y + k3 * h));
    y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

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
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// fifth-order weights minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// One Dormand-Prince step. Returns the fifth-order solution, the error vector
/// and the derivative at the new point.
pub fn dopri5_step<const N: usize, F>(
    f: &mut F,
    t: f64,
    y: &Vector<N>,
    h: f64,
    k1: &Vector<N>,
) -> (Vector<N>, Vector<N>, Vector<N>)
where
    F: FnMut(f64, &Vector<N>) -> Vector<N>,
{
    let k2 = f(t + C2 * h, &(y + k1 * (A21 * h)));
    let k3 = f(t + C3 * h, &(y + (k1 * A31 + k2 * A32) * h));
    let k4 = f(t + C4 * h, &(y + (k1 * A41 + k2 * A42 + k3 * A43) * h));
    let k5 = f(t + C5 * h, &(y + (k1 * A51 + k2 * A52 + k3 * A53 + k4 * A54) * h));
    let k6 = f(t + h, &(y + (k1 * A61 + k2 * A62 + k3 * A63 + k4 * A64 + k5 * A65) * h));
    let y_new = y + (k1 * A71 + k3 * A73 + k4 * A74 + k5 * A75 + k6 * A76) * h;
    let k7 = f(t + h, &y_new);
    let err = (k1 * E1 + k3 * E3 + k4 * E4 + k5 * E5 + k6 * E6 + k7 * E7) * h;
    (y_new, err, k7)
}

fn scaled_rms<const N: usize>(err: &Vector<N>, y0: &Vector<N>, y1: &Vector<N>, rtol: f64, atol: f64) -> f64 {
    let sum: f64 = (0..N)
        .map(|i| {
            let sc = atol + rtol * y0[i].abs().max(y1[i].abs());
            (err[i] / sc).powi(2)
        })
        .sum();
    (sum / N as f64).sqrt()
}

/// Incremental integrator: each call to [`Stepper::advance`] commits one step.
pub struct Stepper<const N: usize, F> {
    f: F,
    scheme: Scheme,
    t: f64,
    y: Vector<N>,
    k: Vector<N>,
    h: f64,
    h_max: f64,
    max_steps: usize,
    stats: StepStats,
}

impl<const N: usize, F> Stepper<N, F>
where
    F: FnMut(f64, &Vector<N>) -> Vector<N>,
{
    pub fn new(mut f: F, scheme: Scheme, t0: f64, y0: Vector<N>, span: f64, max_steps: usize) -> Result<Self> {
        let k = f(t0, &y0);
        let h = match scheme {
            Scheme::Rk4 { dt } => {
                if !(dt.is_finite() && dt > 0.0) {
                    return Err(Error::InvalidParams(format!("fixed step must be positive, got {dt}")));
                }
                dt
            }
            Scheme::Dopri5 { rtol, atol } => {
                if !(rtol > 0.0 && atol > 0.0) {
                    return Err(Error::InvalidParams("tolerances must be positive".into()));
                }
                let scale = |v: &Vector<N>| scaled_rms(v, &y0, &y0, rtol, atol);
                let (d0, d1) = (scale(&y0), scale(&k));
                let guess = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
                guess.min(span.abs().max(f64::MIN_POSITIVE))
            }
        };
        Ok(Self {
            f,
            scheme,
            t: t0,
            y: y0,
            k,
            h,
            h_max: span.abs(),
            max_steps,
            stats: StepStats::default(),
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &Vector<N> {
        &self.y
    }

    pub fn stats(&self) -> StepStats {
        self.stats
    }

    /// Single trial step of size `h` from the current point, not committed.
    pub fn trial(&mut self, h: f64) -> Vector<N> {
        match self.scheme {
            Scheme::Rk4 { .. } => rk4_step(&mut self.f, self.t, &self.y, h),
            Scheme::Dopri5 { .. } => dopri5_step(&mut self.f, self.t, &self.y, h, &self.k).0,
        }
    }

    /// Commit one step that does not pass `t_limit`.
    pub fn advance(&mut self, t_limit: f64) -> Result<()> {
        if self.stats.accepted >= self.max_steps {
            return Err(Error::StepFailure {
                t: self.t,
                reason: format!("step budget of {} exhausted", self.max_steps),
            });
        }
        let remaining = t_limit - self.t;
        match self.scheme {
            Scheme::Rk4 { dt } => {
                let h = if remaining < dt * (1.0 + 1e-12) { remaining } else { dt };
                self.y = rk4_step(&mut self.f, self.t, &self.y, h);
                self.t = if h == remaining { t_limit } else { self.t + h };
                self.k = (self.f)(self.t, &self.y);
                self.stats.accepted += 1;
                self.check_finite()
            }
            Scheme::Dopri5 { rtol, atol } => loop {
                let last = self.h >= remaining;
                let h = if last { remaining } else { self.h };
                if h <= 1e-14 * self.t.abs().max(1.0) {
                    return Err(Error::StepFailure {
                        t: self.t,
                        reason: format!("step size underflow (h = {h:e})"),
                    });
                }
                let (y_new, err, k_new) = dopri5_step(&mut self.f, self.t, &self.y, h, &self.k);
                let e = scaled_rms(&err, &self.y, &y_new, rtol, atol);
                if !e.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
                    self.stats.rejected += 1;
                    self.h = 0.2 * h;
                    continue;
                }
                let fac = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
                if e <= 1.0 {
                    self.t = if last { t_limit } else { self.t + h };
                    self.y = y_new;
                    self.k = k_new;
                    self.stats.accepted += 1;
                    self.stats.max_error_estimate = self.stats.max_error_estimate.max(e);
                    // keep the pre-truncation step so a short final step does not shrink the next run
                    let base = if last { self.h.max(h) } else { h };
                    self.h = (base * fac).min(self.h_max.max(f64::MIN_POSITIVE));
                    return Ok(());
                }
                self.stats.rejected += 1;
                self.h = h * fac.min(1.0);
            },
        }
    }

    fn check_finite(&self) -> Result<()> {
        if self.y.iter().any(|v| !v.is_finite()) {
            return Err(Error::StepFailure {
                t: self.t,
                reason: "state became non-finite".into(),
            });
        }
        Ok(())
    }
}
