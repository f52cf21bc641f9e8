//! First-order test plant `ẏ = a·y + b·u` for exercising the iP loop
//! against closed-form behaviour.

use crate::controller::{ip_control, IpConfig, MfcController, ReferenceTrajectory};
use crate::error::{Error, Result};
use crate::estimator::EstimatorConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarPlant {
    pub a: f64,
    pub b: f64,
}

impl ScalarPlant {
    pub fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }

    /// The true lumped term for a chosen `α`: `F = a·y + (b - α)·u`.
    pub fn exact_f(&self, y: f64, u: f64, alpha: f64) -> f64 {
        self.a * y + (self.b - alpha) * u
    }

    /// Exact ZOH coefficients `(ad, bd)` over `dt`.
    pub fn zoh(&self, dt: f64) -> (f64, f64) {
        let ad = (self.a * dt).exp();
        let bd = if self.a == 0.0 {
            self.b * dt
        } else {
            (ad - 1.0) / self.a * self.b
        };
        (ad, bd)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarRow {
    pub t: f64,
    pub y: f64,
    pub u: f64,
    pub f_hat: f64,
    pub e: f64,
    pub warming_up: bool,
}

/// Sampled loop with the windowed estimator, exact ZOH plant propagation.
pub fn run_scalar_closed_loop(
    plant: ScalarPlant,
    y0: f64,
    u0: f64,
    ip: IpConfig,
    est: EstimatorConfig,
    traj: &ReferenceTrajectory,
    duration: f64,
) -> Result<Vec<ScalarRow>> {
    let period = est.sample_interval;
    let n = (duration / period).round() as usize;
    let (ad, bd) = plant.zoh(period);
    let mut controller = MfcController::new(ip, est, u0)?;
    let mut y = y0;
    let mut rows = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = k as f64 * period;
        let (ys, yds) = traj.eval(t);
        let s = controller.update(y, ys, yds)?;
        rows.push(ScalarRow {
            t,
            y,
            u: s.u,
            f_hat: s.f_hat,
            e: s.e,
            warming_up: s.warming_up,
        });
        y = ad * y + bd * s.u;
        if !y.is_finite() {
            return Err(Error::Divergence {
                step: k + 1,
                t: t + period,
            });
        }
    }
    Ok(rows)
}

/// Continuous-time loop where the controller sees the true `F` at every
/// instant (RK4, step `dt`).
///
/// With `F = a·y + (b - α)·u` depending on `u` itself, the law is solved for
/// the consistent input `u = (ẏ* - K_P·e - a·y) / b` before being passed
/// through [`ip_control`].
pub fn run_scalar_exact_f(
    plant: ScalarPlant,
    y0: f64,
    ip: IpConfig,
    traj: &ReferenceTrajectory,
    duration: f64,
    dt: f64,
) -> Result<Vec<ScalarRow>> {
    ip.validate()?;
    if plant.b == 0.0 {
        return Err(Error::invalid("scalar plant", "b must be nonzero"));
    }
    if !(dt > 0.0) {
        return Err(Error::NonPositiveStep(dt));
    }
    let law = |t: f64, y: f64| {
        let (ys, yds) = traj.eval(t);
        let e = y - ys;
        let u_fixed = (yds - ip.kp * e - plant.a * y) / plant.b;
        let f = plant.exact_f(y, u_fixed, ip.alpha);
        (ip_control(f, yds, e, &ip).u, f, e)
    };
    let rhs = |t: f64, y: f64| plant.a * y + plant.b * law(t, y).0;

    let n = (duration / dt).round() as usize;
    let mut y = y0;
    let mut rows = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = k as f64 * dt;
        let (u, f, e) = law(t, y);
        rows.push(ScalarRow {
            t,
            y,
            u,
            f_hat: f,
            e,
            warming_up: false,
        });
        let k1 = rhs(t, y);
        let k2 = rhs(t + dt / 2.0, y + dt / 2.0 * k1);
        let k3 = rhs(t + dt / 2.0, y + dt / 2.0 * k2);
        let k4 = rhs(t + dt, y + dt * k3);
        y += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !y.is_finite() {
            return Err(Error::IntegrationBlowUp { dt });
        }
    }
    Ok(rows)
}

/// Least-squares slope of `-ln|e|` against `t` over rows with `t ∈ [t0, t1]`.
pub fn decay_rate(rows: &[ScalarRow], t0: f64, t1: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.t >= t0 && r.t <= t1 && r.e != 0.0)
        .map(|r| (r.t, r.e.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ml = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - ml)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    Some(-sxy / sxx)
}
