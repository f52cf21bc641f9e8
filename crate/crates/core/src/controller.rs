//! Intelligent proportional (iP) control law and reference trajectories.
//!
//! With the ultra-local model `ẏ = F + α·u`, the law
//!
//! ```text
//! u = -(F̂ - ẏ* + K_P·e) / α,     e = y - y*
//! ```
//!
//! reduces the closed loop to `ė + K_P·e = 0` whenever `F̂ = F`.

use crate::error::{Error, Result};
use crate::estimator::{EstimatorConfig, FEstimator};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IpConfig {
    pub alpha: f64,
    pub kp: f64,
    pub u_min: Option<f64>,
    pub u_max: Option<f64>,
}

impl Default for IpConfig {
    fn default() -> Self {
        Self {
            alpha: 10.0,
            kp: 1.0,
            u_min: None,
            u_max: None,
        }
    }
}

impl IpConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() || self.alpha == 0.0 {
            return Err(Error::invalid(
                "ip alpha",
                format!("{} (must be finite, nonzero)", self.alpha),
            ));
        }
        if !self.kp.is_finite() || self.kp <= 0.0 {
            return Err(Error::invalid(
                "ip kp",
                format!("{} (must be > 0)", self.kp),
            ));
        }
        for limit in [self.u_min, self.u_max].into_iter().flatten() {
            if !limit.is_finite() {
                return Err(Error::NonFinite("actuator limit"));
            }
        }
        if let (Some(lo), Some(hi)) = (self.u_min, self.u_max) {
            if lo >= hi {
                return Err(Error::invalid(
                    "actuator limits",
                    format!("u_min {lo} >= u_max {hi}"),
                ));
            }
        }
        Ok(())
    }

    pub fn clamp(&self, u: f64) -> (f64, bool) {
        let mut out = u;
        if let Some(hi) = self.u_max {
            out = out.min(hi);
        }
        if let Some(lo) = self.u_min {
            out = out.max(lo);
        }
        (out, out != u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IpOutput {
    pub u: f64,
    pub unclamped: f64,
    pub clamped: bool,
}

pub fn ip_control(f_hat: f64, y_star_dot: f64, e: f64, config: &IpConfig) -> IpOutput {
    let unclamped = -(f_hat - y_star_dot + config.kp * e) / config.alpha;
    let (u, clamped) = config.clamp(unclamped);
    IpOutput {
        u,
        unclamped,
        clamped,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SegmentKind {
    Hold {
        level: f64,
    },
    /// `y* = level + slope·(t - start)`.
    Ramp {
        level: f64,
        slope: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub kind: SegmentKind,
}

impl Segment {
    pub fn hold(start: f64, level: f64) -> Self {
        Self {
            start,
            kind: SegmentKind::Hold { level },
        }
    }

    pub fn ramp(start: f64, level: f64, slope: f64) -> Self {
        Self {
            start,
            kind: SegmentKind::Ramp { level, slope },
        }
    }

    pub fn eval(&self, t: f64) -> (f64, f64) {
        match self.kind {
            SegmentKind::Hold { level } => (level, 0.0),
            SegmentKind::Ramp { level, slope } => (level + slope * (t - self.start), slope),
        }
    }

    fn is_finite(&self) -> bool {
        self.start.is_finite()
            && match self.kind {
                SegmentKind::Hold { level } => level.is_finite(),
                SegmentKind::Ramp { level, slope } => level.is_finite() && slope.is_finite(),
            }
    }
}

/// Piecewise hold/ramp reference covering `[0, ∞)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTrajectory {
    segments: Vec<Segment>,
}

impl ReferenceTrajectory {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        let traj = Self { segments };
        traj.validate()?;
        Ok(traj)
    }

    pub fn constant(level: f64) -> Self {
        Self {
            segments: vec![Segment::hold(0.0, level)],
        }
    }

    /// Hold `from`, ramp linearly to `to` over `[start, start + span]`, then hold.
    pub fn hold_ramp_hold(from: f64, to: f64, start: f64, span: f64) -> Result<Self> {
        if !(span > 0.0) || !(start > 0.0) {
            return Err(Error::invalid(
                "reference",
                "ramp needs start > 0 and span > 0",
            ));
        }
        Self::new(vec![
            Segment::hold(0.0, from),
            Segment::ramp(start, from, (to - from) / span),
            Segment::hold(start + span, to),
        ])
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn validate(&self) -> Result<()> {
        match self.segments.first() {
            None => return Err(Error::invalid("reference", "no segments")),
            Some(s) if s.start != 0.0 => {
                return Err(Error::invalid(
                    "reference",
                    "first segment must start at t = 0",
                ))
            }
            _ => {}
        }
        if !self.segments.iter().all(Segment::is_finite) {
            return Err(Error::NonFinite("reference segment"));
        }
        if self.segments.windows(2).any(|w| w[1].start <= w[0].start) {
            return Err(Error::invalid(
                "reference",
                "segment starts must be strictly increasing",
            ));
        }
        Ok(())
    }

    /// `(y*, ẏ*)` at `t`; at a boundary the later segment governs.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let idx = self.segments.partition_point(|s| s.start <= t);
        self.segments[idx.saturating_sub(1)].eval(t)
    }

    /// Drops segments starting at or after `replacement[0].start` and appends
    /// `replacement`.
    pub fn splice(&mut self, replacement: &[Segment]) -> Result<()> {
        let Some(first) = replacement.first() else {
            return Ok(());
        };
        let mut segments: Vec<Segment> = self
            .segments
            .iter()
            .copied()
            .filter(|s| s.start < first.start)
            .collect();
        segments.extend_from_slice(replacement);
        let spliced = Self { segments };
        spliced.validate()?;
        *self = spliced;
        Ok(())
    }
}

pub fn reference_eval(traj: &ReferenceTrajectory, t: f64) -> (f64, f64) {
    traj.eval(t)
}

/// Result of one controller update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlStep {
    pub u: f64,
    pub f_hat: f64,
    pub e: f64,
    pub warming_up: bool,
    pub clamped: bool,
}

/// Estimator plus iP law, sampled once per control period.
///
/// Each update pushes `(y, u_prev)` and, once the window is full, applies
/// the iP law. While warming up the actuator stays at the hold value and
/// `F̂` is reported as zero.
#[derive(Debug, Clone)]
pub struct MfcController {
    ip: IpConfig,
    estimator: FEstimator,
    last_u: f64,
}

impl MfcController {
    pub fn new(ip: IpConfig, est: EstimatorConfig, hold_u: f64) -> Result<Self> {
        ip.validate()?;
        est.validate()?;
        if ip.alpha != est.alpha {
            return Err(Error::invalid(
                "alpha",
                format!(
                    "controller {} and estimator {} disagree",
                    ip.alpha, est.alpha
                ),
            ));
        }
        if !hold_u.is_finite() {
            return Err(Error::NonFinite("initial actuator value"));
        }
        Ok(Self {
            ip,
            estimator: FEstimator::new(est)?,
            last_u: hold_u,
        })
    }

    pub fn ip_config(&self) -> &IpConfig {
        &self.ip
    }

    pub fn last_u(&self) -> f64 {
        self.last_u
    }

    pub fn update(&mut self, y: f64, y_star: f64, y_star_dot: f64) -> Result<ControlStep> {
        self.estimator.push(y, self.last_u)?;
        let e = y - y_star;
        let step = match self.estimator.estimate() {
            Ok(f_hat) => {
                let out = ip_control(f_hat, y_star_dot, e, &self.ip);
                ControlStep {
                    u: out.u,
                    f_hat,
                    e,
                    warming_up: false,
                    clamped: out.clamped,
                }
            }
            Err(Error::WarmingUp { .. }) => ControlStep {
                u: self.last_u,
                f_hat: 0.0,
                e,
                warming_up: true,
                clamped: false,
            },
            Err(other) => return Err(other),
        };
        self.last_u = step.u;
        Ok(step)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stock_gains() -> IpConfig {
        IpConfig::default()
    }

    #[test]
    fn law_examples() {
        let c = stock_gains();
        assert_eq!(ip_control(0.0, 0.0, 0.0, &c).u, 0.0);
        assert!((ip_control(5.0, 0.0, 2.0, &c).u + 0.7).abs() < 1e-15);
        assert!((ip_control(-3.0, 1.0, -0.5, &c).u - 0.45).abs() < 1e-15);
    }

    #[test]
    fn positive_error_drives_input_down() {
        assert!(ip_control(0.0, 0.0, 0.3, &stock_gains()).u < 0.0);
    }

    #[test]
    fn clamping_is_reported() {
        let c = IpConfig {
            u_min: Some(10.0),
            u_max: Some(30.0),
            ..stock_gains()
        };
        let out = ip_control(-500.0, 0.0, 0.0, &c);
        assert_eq!((out.u, out.clamped, out.unclamped), (30.0, true, 50.0));
        let out = ip_control(-200.0, 0.0, 0.0, &c);
        assert_eq!((out.u, out.clamped), (20.0, false));
        let out = ip_control(0.0, 0.0, 0.0, &c);
        assert_eq!((out.u, out.clamped), (10.0, true));
    }

    #[test]
    fn config_validation() {
        assert!(stock_gains().validate().is_ok());
        assert!(IpConfig {
            kp: -1.0,
            ..stock_gains()
        }
        .validate()
        .is_err());
        assert!(IpConfig {
            kp: 0.0,
            ..stock_gains()
        }
        .validate()
        .is_err());
        assert!(IpConfig {
            alpha: 0.0,
            ..stock_gains()
        }
        .validate()
        .is_err());
        let bad = IpConfig {
            u_min: Some(5.0),
            u_max: Some(5.0),
            ..stock_gains()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn reference_examples() {
        let c = ReferenceTrajectory::constant(20.9);
        for t in [0.0, 1.0, 123.4] {
            assert_eq!(reference_eval(&c, t), (20.9, 0.0));
        }

        let ramp = ReferenceTrajectory::new(vec![Segment::ramp(0.0, 0.0, 2.0)]).unwrap();
        assert_eq!(reference_eval(&ramp, 3.0), (6.0, 2.0));

        let hr = ReferenceTrajectory::new(vec![
            Segment::hold(0.0, 20.9),
            Segment::ramp(5.0, 20.9, -0.5),
        ])
        .unwrap();
        let (y, yd) = reference_eval(&hr, 7.0);
        assert!((y - 19.9).abs() < 1e-12);
        assert_eq!(yd, -0.5);
        // boundary belongs to the later segment
        assert_eq!(reference_eval(&hr, 5.0), (20.9, -0.5));
        assert_eq!(reference_eval(&hr, 4.999), (20.9, 0.0));
    }

    #[test]
    fn step_setpoints_have_no_feedforward() {
        let steps =
            ReferenceTrajectory::new(vec![Segment::hold(0.0, 20.0), Segment::hold(1.0, 22.0)])
                .unwrap();
        assert_eq!(steps.eval(1.0), (22.0, 0.0));
        assert_eq!(steps.eval(0.999), (20.0, 0.0));
    }

    #[test]
    fn trajectory_validation() {
        assert!(ReferenceTrajectory::new(vec![]).is_err());
        assert!(ReferenceTrajectory::new(vec![Segment::hold(1.0, 20.0)]).is_err());
        assert!(
            ReferenceTrajectory::new(vec![Segment::hold(0.0, 20.0), Segment::hold(0.0, 21.0)])
                .is_err()
        );
        assert!(ReferenceTrajectory::new(vec![Segment::hold(0.0, f64::NAN)]).is_err());
    }

    #[test]
    fn splice_replaces_tail() {
        let mut t = ReferenceTrajectory::hold_ramp_hold(20.9, 22.0, 1.0, 0.5).unwrap();
        t.splice(&[Segment::hold(1.2, 25.0)]).unwrap();
        assert_eq!(t.segments().len(), 3);
        assert_eq!(t.eval(2.0), (25.0, 0.0));
        let (y, _) = t.eval(1.1);
        assert!((y - (20.9 + 0.1 * 2.2)).abs() < 1e-12);
    }

    #[test]
    fn controller_holds_during_warm_up() {
        let est = EstimatorConfig::default();
        let mut c = MfcController::new(stock_gains(), est, 19.5).unwrap();
        for _ in 0..est.window_samples - 1 {
            let s = c.update(21.0, 20.9, 0.0).unwrap();
            assert!(s.warming_up);
            assert_eq!((s.u, s.f_hat), (19.5, 0.0));
        }
        let s = c.update(21.0, 20.9, 0.0).unwrap();
        assert!(!s.warming_up);
        // constant y and u: F̂ = -α·u exactly, so u moves by -K_P·e/α
        assert!((s.f_hat + 195.0).abs() < 1e-9);
        assert!((s.u - (19.5 - 0.1 / 10.0)).abs() < 1e-9);
    }

    #[test]
    fn controller_alpha_must_match_estimator() {
        let est = EstimatorConfig {
            alpha: 5.0,
            ..EstimatorConfig::default()
        };
        assert!(MfcController::new(stock_gains(), est, 0.0).is_err());
    }
}
