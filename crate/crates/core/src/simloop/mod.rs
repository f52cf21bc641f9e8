//! Closed-loop driver: sample, estimate, control, propagate, record.
//!
//! At each control instant `t_k = k·h`:
//!
//! 1. events with time ≤ `t_k` fire (input steps, parameter changes,
//!    reference switches);
//! 2. `y = T_IT` is measured, optionally with seeded Gaussian noise;
//! 3. `(y, u_prev)` enters the estimator window and the iP law gives `u`;
//! 4. the row is recorded and the plant is propagated over `[t_k, t_k + h)`
//!    with `(u, p_it, t_out)` held.
//!
//! Propagation uses the exact ZOH discretization, recomputed whenever a
//! parameter change fires. [`Propagator::Rk4`] swaps in the RK4 oracle.

mod metrics;
mod scalar;

pub use metrics::{metrics, Metrics, Settling};
pub use scalar::{decay_rate, run_scalar_closed_loop, run_scalar_exact_f, ScalarPlant, ScalarRow};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::controller::{ControlStep, IpConfig, MfcController, ReferenceTrajectory, Segment};
use crate::error::{Error, Result};
use crate::estimator::{EstimatorConfig, FEstimator};
use crate::plant::{
    apply_param_change, build_state_space, discretize_zoh, equilibrium, rk4_propagate,
    trim_to_output, Discretization, PlantInputs, ThermalParams, ThermalState,
};

/// Any plant temperature beyond this magnitude (°C) counts as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

const EVENT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    SetPIt(f64),
    SetTOut(f64),
    /// Multiplies the air-side exchange coefficients of the current parameters.
    ScaleParams(f64),
    /// Replaces the reference from the first segment's start onwards.
    SwitchReference(Vec<Segment>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub time: f64,
    pub action: Action,
}

impl Event {
    pub fn new(time: f64, action: Action) -> Self {
        Self { time, action }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.time.is_finite() {
            return Err(Error::NonFinite("event time"));
        }
        match &self.action {
            Action::SetPIt(p) if !p.is_finite() || *p < 0.0 => Err(Error::invalid(
                "event",
                format!("p_it {p} at t = {} must be finite and >= 0", self.time),
            )),
            Action::SetTOut(t) if !t.is_finite() => Err(Error::NonFinite("t_out event")),
            Action::ScaleParams(m) if !m.is_finite() || *m <= 0.0 => Err(Error::invalid(
                "event",
                format!("multiplier {m} at t = {} must be positive", self.time),
            )),
            Action::SwitchReference(segs) => {
                if segs.is_empty() {
                    return Err(Error::invalid("event", "empty reference switch"));
                }
                if segs[0].start < self.time - EVENT_EPS {
                    return Err(Error::invalid(
                        "event",
                        format!(
                            "reference segment starts before its event at t = {}",
                            self.time
                        ),
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Time-ordered list of scheduled actions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EventSchedule {
    events: Vec<Event>,
}

impl EventSchedule {
    pub fn new(events: Vec<Event>) -> Result<Self> {
        let schedule = Self { events };
        schedule.validate_order()?;
        Ok(schedule)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn last_time(&self) -> Option<f64> {
        self.events.last().map(|e| e.time)
    }

    /// Appends an event that must come strictly after the current last one.
    pub fn push(&mut self, event: Event) -> Result<()> {
        self.events.push(event);
        if let Err(e) = self.validate_order() {
            self.events.pop();
            return Err(e);
        }
        Ok(())
    }

    /// Union of two schedules; fails when any two events share a time.
    pub fn merge(&self, other: &EventSchedule) -> Result<EventSchedule> {
        let mut events: Vec<Event> = self.events.iter().chain(&other.events).cloned().collect();
        events.sort_by(|a, b| a.time.total_cmp(&b.time));
        EventSchedule::new(events)
    }

    pub fn map_multipliers(&mut self, f: impl Fn(f64) -> f64) {
        for e in &mut self.events {
            if let Action::ScaleParams(m) = &mut e.action {
                *m = f(*m);
            }
        }
    }

    fn validate_order(&self) -> Result<()> {
        for e in &self.events {
            e.validate()?;
        }
        if self.events.windows(2).any(|w| w[1].time <= w[0].time) {
            return Err(Error::invalid(
                "event schedule",
                "times must be strictly increasing",
            ));
        }
        Ok(())
    }

    fn validate_within(&self, duration: f64) -> Result<()> {
        self.validate_order()?;
        if let Some(e) = self
            .events
            .iter()
            .find(|e| e.time < 0.0 || e.time > duration + EVENT_EPS)
        {
            return Err(Error::invalid(
                "event schedule",
                format!("event at t = {} outside [0, {duration}]", e.time),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum InitialCondition {
    /// Equilibrium with the supply air trimmed so that `T_IT = y*(0)`.
    #[default]
    Trimmed,
    /// Equilibrium under the configured initial inputs.
    Equilibrium,
    /// Every temperature at the initial `t_out`.
    Cold,
    Explicit(ThermalState),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Propagator {
    #[default]
    Zoh,
    /// RK4 substeps no longer than `max_dt` hours per control period.
    Rk4 { max_dt: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Hours.
    pub duration: f64,
    /// Hours.
    pub control_period: f64,
    pub initial: InitialCondition,
    pub initial_inputs: PlantInputs,
    pub params: ThermalParams,
    pub ip: IpConfig,
    pub est: EstimatorConfig,
    pub traj: ReferenceTrajectory,
    pub events: EventSchedule,
    /// Standard deviation of additive measurement noise on `y`, °C.
    pub noise_std: Option<f64>,
    pub seed: u64,
    pub propagator: Propagator,
}

pub const DEFAULT_SETPOINT: f64 = 20.9;
pub const DEFAULT_CONTROL_PERIOD: f64 = 1.0 / 60.0;

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            duration: 6.0,
            control_period: DEFAULT_CONTROL_PERIOD,
            initial: InitialCondition::Trimmed,
            initial_inputs: PlantInputs::new(DEFAULT_SETPOINT, 5.0, 25.0),
            params: ThermalParams::default(),
            ip: IpConfig::default(),
            est: EstimatorConfig::default(),
            traj: ReferenceTrajectory::constant(DEFAULT_SETPOINT),
            events: EventSchedule::empty(),
            noise_std: None,
            seed: 0,
            propagator: Propagator::Zoh,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.step_count()?;
        self.initial_inputs.validate()?;
        self.params.validate()?;
        self.ip.validate()?;
        self.est.validate()?;
        self.traj.validate()?;
        self.events.validate_within(self.duration)?;
        if self.ip.alpha != self.est.alpha {
            return Err(Error::invalid(
                "alpha",
                format!(
                    "controller {} and estimator {} disagree",
                    self.ip.alpha, self.est.alpha
                ),
            ));
        }
        if (self.est.sample_interval - self.control_period).abs() > 1e-12 * self.control_period {
            return Err(Error::invalid(
                "estimator sample interval",
                "must equal the control period",
            ));
        }
        if let Some(s) = self.noise_std {
            if !s.is_finite() || s < 0.0 {
                return Err(Error::invalid("noise_std", format!("{s}")));
            }
        }
        if let Propagator::Rk4 { max_dt } = self.propagator {
            if !(max_dt > 0.0) {
                return Err(Error::NonPositiveStep(max_dt));
            }
        }
        if let InitialCondition::Explicit(s) = self.initial {
            if !s.is_finite() {
                return Err(Error::NonFinite("initial state"));
            }
        }
        Ok(())
    }

    /// `duration / control_period`, which must be a whole number.
    pub fn step_count(&self) -> Result<usize> {
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            return Err(Error::invalid(
                "duration",
                format!("{} (must be > 0)", self.duration),
            ));
        }
        if !(self.control_period > 0.0) || !self.control_period.is_finite() {
            return Err(Error::NonPositiveStep(self.control_period));
        }
        let ratio = self.duration / self.control_period;
        let n = ratio.round();
        if (ratio - n).abs() > 1e-9 * ratio.max(1.0) || n < 1.0 {
            return Err(Error::invalid(
                "duration",
                format!(
                    "{} h is not a whole number of {} h control periods",
                    self.duration, self.control_period
                ),
            ));
        }
        Ok(n as usize)
    }

    /// Sets the shared `α` of controller and estimator.
    pub fn set_alpha(&mut self, alpha: f64) {
        self.ip.alpha = alpha;
        self.est.alpha = alpha;
    }

    pub fn set_control_period(&mut self, period: f64) {
        self.control_period = period;
        self.est.sample_interval = period;
    }

    /// Initial plant state and inputs after resolving [`InitialCondition`].
    pub fn resolve_initial(&self) -> Result<(ThermalState, PlantInputs)> {
        let inputs = self.initial_inputs;
        match self.initial {
            InitialCondition::Trimmed => {
                let (trimmed, state) =
                    trim_to_output(&self.params, &inputs, self.traj.eval(0.0).0)?;
                Ok((state, trimmed))
            }
            InitialCondition::Equilibrium => Ok((equilibrium(&self.params, &inputs)?, inputs)),
            InitialCondition::Cold => Ok((ThermalState::uniform(inputs.t_out), inputs)),
            InitialCondition::Explicit(state) => Ok((state, inputs)),
        }
    }
}

/// One recorded control instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    /// Measured output.
    pub y: f64,
    /// Input applied over `[t, t + h)`.
    pub u: f64,
    pub f_hat: f64,
    pub e: f64,
    pub y_star: f64,
    pub state: ThermalState,
    pub inputs: PlantInputs,
    pub warming_up: bool,
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub control_period: f64,
    pub rows: Vec<TraceRow>,
}

impl SimTrace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.e).collect()
    }

    pub fn max_abs_error_after(&self, t0: f64) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.t >= t0)
            .map(|r| r.e.abs())
            .fold(0.0, f64::max)
    }
}

struct PlantRunner {
    params: ThermalParams,
    disc: Discretization,
    propagator: Propagator,
    period: f64,
}

impl PlantRunner {
    fn new(params: ThermalParams, propagator: Propagator, period: f64) -> Result<Self> {
        Ok(Self {
            disc: discretize_zoh(&build_state_space(&params)?, period)?,
            params,
            propagator,
            period,
        })
    }

    fn rescale(&mut self, multiplier: f64) -> Result<()> {
        self.params = apply_param_change(&self.params, multiplier)?;
        self.disc = discretize_zoh(&build_state_space(&self.params)?, self.period)?;
        Ok(())
    }

    fn advance(&self, x: &ThermalState, v: &PlantInputs) -> Result<ThermalState> {
        match self.propagator {
            Propagator::Zoh => Ok(self.disc.step(x, v)),
            Propagator::Rk4 { max_dt } => rk4_propagate(x, v, &self.params, self.period, max_dt),
        }
    }
}

/// Shared stepping skeleton; `policy(k, y, y*, ẏ*)` chooses the input.
fn simulate(
    config: &SimConfig,
    mut policy: impl FnMut(usize, f64, f64, f64, f64) -> Result<ControlStep>,
) -> Result<SimTrace> {
    config.validate()?;
    let n = config.step_count()?;
    let period = config.control_period;
    let (mut x, mut inputs) = config.resolve_initial()?;
    let mut plant = PlantRunner::new(config.params, config.propagator, period)?;
    let mut traj = config.traj.clone();
    let events = config.events.events();
    let mut next_event = 0;

    let mut noise = match config.noise_std {
        Some(s) if s > 0.0 => Some((
            ChaCha8Rng::seed_from_u64(config.seed),
            Normal::new(0.0, s).map_err(|e| Error::invalid("noise_std", e.to_string()))?,
        )),
        _ => None,
    };

    let mut rows = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = k as f64 * period;
        while next_event < events.len() && events[next_event].time <= t + EVENT_EPS * period {
            match &events[next_event].action {
                Action::SetPIt(p) => inputs.p_it = *p,
                Action::SetTOut(v) => inputs.t_out = *v,
                Action::ScaleParams(m) => plant.rescale(*m)?,
                Action::SwitchReference(segs) => traj.splice(segs)?,
            }
            next_event += 1;
        }

        let mut y = x.t_it;
        if let Some((rng, dist)) = noise.as_mut() {
            y += dist.sample(rng);
        }
        let (y_star, y_star_dot) = traj.eval(t);
        let step = policy(k, t, y, y_star, y_star_dot)?;
        inputs.t_air_in = step.u;

        rows.push(TraceRow {
            t,
            y,
            u: step.u,
            f_hat: step.f_hat,
            e: y - y_star,
            y_star,
            state: x,
            inputs,
            warming_up: step.warming_up,
            clamped: step.clamped,
        });

        if k < n {
            x = plant.advance(&x, &inputs).map_err(|_| Error::Divergence {
                step: k + 1,
                t: t + period,
            })?;
            let bad = x
                .to_array()
                .iter()
                .any(|v| !v.is_finite() || v.abs() > DIVERGENCE_LIMIT);
            if bad {
                return Err(Error::Divergence {
                    step: k + 1,
                    t: t + period,
                });
            }
        }
    }
    Ok(SimTrace {
        control_period: period,
        rows,
    })
}

/// Runs the iP loop described by `config`.
pub fn run_closed_loop(config: &SimConfig) -> Result<SimTrace> {
    config.validate()?;
    let (_, inputs) = config.resolve_initial()?;
    let mut controller = MfcController::new(config.ip, config.est, inputs.t_air_in)?;
    simulate(config, |_, _, y, y_star, y_star_dot| {
        controller.update(y, y_star, y_star_dot)
    })
}

/// Runs the plant with a prescribed supply-air sequence, one value per
/// control period. The estimator still runs passively so the `f_hat`
/// column is populated.
pub fn run_open_loop(config: &SimConfig, u_signal: &[f64]) -> Result<SimTrace> {
    config.validate()?;
    let n = config.step_count()?;
    if u_signal.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: u_signal.len(),
        });
    }
    if u_signal.iter().any(|u| !u.is_finite()) {
        return Err(Error::NonFinite("open-loop input"));
    }
    let (_, inputs) = config.resolve_initial()?;
    let mut estimator = FEstimator::new(config.est)?;
    let mut u_prev = inputs.t_air_in;
    simulate(config, |k, _, y, y_star, _| {
        estimator.push(y, u_prev)?;
        let (f_hat, warming_up) = match estimator.estimate() {
            Ok(f) => (f, false),
            Err(Error::WarmingUp { .. }) => (0.0, true),
            Err(e) => return Err(e),
        };
        let u = u_signal[k.min(n - 1)];
        u_prev = u;
        Ok(ControlStep {
            u,
            f_hat,
            e: y - y_star,
            warming_up,
            clamped: false,
        })
    })
}
