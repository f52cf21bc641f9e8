//! Built-in scenario builders and CPU load traces.
//!
//! Step sizes, pre-event levels and the ramp reference below are chosen
//! defaults; the builders take them as arguments.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::controller::ReferenceTrajectory;
use crate::error::{Error, Result};
use crate::plant::PlantInputs;
use crate::simloop::{Action, Event, EventSchedule, SimConfig, DEFAULT_SETPOINT};

pub const BASE_P_IT: f64 = 5.0;
pub const STEP_P_IT: f64 = 10.0;
pub const BASE_T_OUT: f64 = 25.0;
pub const STEP_T_OUT: f64 = 32.0;
pub const STEP_TIME: f64 = 1.0;
pub const STEP_SCENARIO_DURATION: f64 = 6.0;

pub const RAMP_START: f64 = 1.0;
pub const RAMP_SPAN: f64 = 0.5;
pub const RAMP_TARGET: f64 = 22.0;

pub const PARAM_CHANGE_TIME: f64 = 2.7;
pub const PARAM_CHANGE_DURATION: f64 = 10.0;

pub const REALISTIC_MEAN_KW: f64 = 5.0;
pub const REALISTIC_BURST_KW: f64 = 3.0;

fn base_config(duration: f64) -> SimConfig {
    SimConfig {
        duration,
        initial_inputs: PlantInputs::new(DEFAULT_SETPOINT, BASE_P_IT, BASE_T_OUT),
        traj: ReferenceTrajectory::constant(DEFAULT_SETPOINT),
        ..SimConfig::default()
    }
}

fn check_step_time(step_time: f64, duration: f64) -> Result<()> {
    if !step_time.is_finite() || step_time < 0.0 || step_time > duration {
        return Err(Error::invalid(
            "step time",
            format!("{step_time} h outside [0, {duration}] h"),
        ));
    }
    Ok(())
}

/// Setpoint hold with constant inputs and no events.
pub fn scenario_baseline() -> SimConfig {
    base_config(STEP_SCENARIO_DURATION)
}

/// CPU load steps from `base_kw` to `step_kw` at `step_time`.
pub fn scenario_sudden_cpu(base_kw: f64, step_kw: f64, step_time: f64) -> Result<SimConfig> {
    if !(base_kw >= 0.0 && step_kw >= 0.0) || !base_kw.is_finite() || !step_kw.is_finite() {
        return Err(Error::invalid(
            "cpu load",
            format!("{base_kw} -> {step_kw} kW"),
        ));
    }
    let mut cfg = base_config(STEP_SCENARIO_DURATION);
    check_step_time(step_time, cfg.duration)?;
    cfg.initial_inputs.p_it = base_kw;
    cfg.events = EventSchedule::new(vec![Event::new(step_time, Action::SetPIt(step_kw))])?;
    cfg.validate()?;
    Ok(cfg)
}

/// Ambient temperature steps from `base_c` to `step_c` at `step_time`.
pub fn scenario_sudden_tout(base_c: f64, step_c: f64, step_time: f64) -> Result<SimConfig> {
    if !base_c.is_finite() || !step_c.is_finite() {
        return Err(Error::NonFinite("ambient temperature"));
    }
    let mut cfg = base_config(STEP_SCENARIO_DURATION);
    check_step_time(step_time, cfg.duration)?;
    cfg.initial_inputs.t_out = base_c;
    cfg.events = EventSchedule::new(vec![Event::new(step_time, Action::SetTOut(step_c))])?;
    cfg.validate()?;
    Ok(cfg)
}

/// Hold 20.9 °C, ramp to 22.0 °C over 30 minutes starting at 1 h, hold.
pub fn default_reference_change() -> ReferenceTrajectory {
    ReferenceTrajectory::hold_ramp_hold(DEFAULT_SETPOINT, RAMP_TARGET, RAMP_START, RAMP_SPAN)
        .expect("static trajectory is valid")
}

/// Constant disturbances; the reference follows `traj`, delivered as one
/// reference switch per segment after the first.
pub fn scenario_reference_change(traj: &ReferenceTrajectory) -> Result<SimConfig> {
    traj.validate()?;
    let segments = traj.segments();
    let last_start = segments.last().map_or(0.0, |s| s.start);
    let duration = STEP_SCENARIO_DURATION.max((last_start + 4.0).ceil());
    let mut cfg = base_config(duration);
    cfg.traj = ReferenceTrajectory::new(vec![segments[0]])?;
    cfg.events = EventSchedule::new(
        segments[1..]
            .iter()
            .map(|s| Event::new(s.start, Action::SwitchReference(vec![*s])))
            .collect(),
    )?;
    cfg.validate()?;
    Ok(cfg)
}

/// Air-side exchange coefficients scaled by `multiplier` at `change_time`
/// with every input held constant.
pub fn scenario_param_change(multiplier: f64, change_time: f64) -> Result<SimConfig> {
    if !multiplier.is_finite() || multiplier <= 0.0 {
        return Err(Error::invalid(
            "parameter multiplier",
            format!("{multiplier} is not a positive finite number"),
        ));
    }
    let mut cfg = base_config(PARAM_CHANGE_DURATION);
    check_step_time(change_time, cfg.duration)?;
    cfg.events = EventSchedule::new(vec![Event::new(
        change_time,
        Action::ScaleParams(multiplier),
    )])?;
    cfg.validate()?;
    Ok(cfg)
}

/// CPU load follows `trace` (zero-order hold, sampled at control instants).
pub fn scenario_load_trace(trace: &LoadTrace, duration: f64) -> Result<SimConfig> {
    let mut cfg = base_config(duration);
    cfg.initial_inputs.p_it = trace.value_at(0.0);
    cfg.events = EventSchedule::new(trace.to_events(cfg.control_period, cfg.step_count()?))?;
    cfg.validate()?;
    Ok(cfg)
}

/// CPU load from [`synth_load`] seeded with `seed`.
pub fn scenario_realistic_cpu(seed: u64) -> Result<SimConfig> {
    let trace = synth_load(
        seed,
        REALISTIC_MEAN_KW,
        REALISTIC_BURST_KW,
        STEP_SCENARIO_DURATION,
    )?;
    let mut cfg = scenario_load_trace(&trace, STEP_SCENARIO_DURATION)?;
    cfg.seed = seed;
    Ok(cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Baseline,
    SuddenCpu,
    RealisticCpu,
    SuddenTout,
    ReferenceChange,
    ParamChange,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioOptions {
    /// Used by `param-change`.
    pub multiplier: f64,
    /// Used by `realistic-cpu`.
    pub seed: u64,
}

impl Default for ScenarioOptions {
    fn default() -> Self {
        Self {
            multiplier: 1.5,
            seed: 0,
        }
    }
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::Baseline,
        Scenario::SuddenCpu,
        Scenario::RealisticCpu,
        Scenario::SuddenTout,
        Scenario::ReferenceChange,
        Scenario::ParamChange,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Baseline => "baseline",
            Scenario::SuddenCpu => "sudden-cpu",
            Scenario::RealisticCpu => "realistic-cpu",
            Scenario::SuddenTout => "sudden-tout",
            Scenario::ReferenceChange => "reference-change",
            Scenario::ParamChange => "param-change",
        }
    }

    pub fn available() -> String {
        Self::ALL.map(Scenario::name).join(", ")
    }

    pub fn build(self, opts: &ScenarioOptions) -> Result<SimConfig> {
        match self {
            Scenario::Baseline => Ok(scenario_baseline()),
            Scenario::SuddenCpu => scenario_sudden_cpu(BASE_P_IT, STEP_P_IT, STEP_TIME),
            Scenario::RealisticCpu => scenario_realistic_cpu(opts.seed),
            Scenario::SuddenTout => scenario_sudden_tout(BASE_T_OUT, STEP_T_OUT, STEP_TIME),
            Scenario::ReferenceChange => scenario_reference_change(&default_reference_change()),
            Scenario::ParamChange => scenario_param_change(opts.multiplier, PARAM_CHANGE_TIME),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| Error::UnknownScenario {
                name: s.to_string(),
                available: Self::available(),
            })
    }
}

/// CPU load samples `(t [h], p_it [kW])`, zero-order hold between samples.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadTrace {
    samples: Vec<(f64, f64)>,
}

impl LoadTrace {
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyTrace);
        }
        for (i, &(t, p)) in samples.iter().enumerate() {
            if !t.is_finite() || !p.is_finite() {
                return Err(Error::NonFinite("load trace sample"));
            }
            if p < 0.0 {
                return Err(Error::invalid(
                    "load trace",
                    format!("negative load {p} at t = {t}"),
                ));
            }
            if i > 0 && t < samples[i - 1].0 {
                return Err(Error::invalid(
                    "load trace",
                    format!("time goes backwards at t = {t}"),
                ));
            }
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    /// Held value at `t`; before the first sample the first value applies.
    pub fn value_at(&self, t: f64) -> f64 {
        let idx = self.samples.partition_point(|s| s.0 <= t);
        self.samples[idx.saturating_sub(1)].1
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().map(|s| s.1).sum::<f64>() / self.samples.len() as f64
    }

    /// `set_p_it` events at the control instants `1..=steps` where the held
    /// value changes.
    pub fn to_events(&self, period: f64, steps: usize) -> Vec<Event> {
        let mut current = self.value_at(0.0);
        let mut events = Vec::new();
        for k in 1..=steps {
            let t = k as f64 * period;
            let v = self.value_at(t);
            if v != current {
                events.push(Event::new(t, Action::SetPIt(v)));
                current = v;
            }
        }
        events
    }

    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "t,p_it")?;
        for (t, p) in &self.samples {
            writeln!(w, "{t},{p}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("ascii output")
    }
}

/// Parses `t,p_it` rows. A non-numeric first row is taken as a header;
/// blank lines and `#` comments are skipped.
pub fn parse_load_trace(text: &str) -> Result<LoadTrace> {
    let mut samples = Vec::new();
    let mut seen_row = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected 2 columns, found {}", fields.len()),
            });
        }
        let parsed = (fields[0].parse::<f64>(), fields[1].parse::<f64>());
        match parsed {
            (Ok(t), Ok(p)) => {
                if !t.is_finite() || !p.is_finite() {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: "non-finite value".into(),
                    });
                }
                if p < 0.0 {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("negative load {p}"),
                    });
                }
                if let Some(&(prev, _)) = samples.last() {
                    if t < prev {
                        return Err(Error::Parse {
                            line: line_no,
                            msg: format!("time {t} precedes previous sample {prev}"),
                        });
                    }
                }
                samples.push((t, p));
            }
            (Err(_), Err(_)) if !seen_row => {}
            _ => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("malformed row `{line}`"),
                })
            }
        }
        seen_row = true;
    }
    LoadTrace::new(samples)
}

pub fn load_trace_from_csv(path: impl AsRef<Path>) -> Result<LoadTrace> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_load_trace(&text)
}

/// Sample spacing of [`synth_load`], hours.
pub const SYNTH_STEP: f64 = 1.0 / 60.0;
/// Half-width of the random-walk band as a fraction of the mean.
pub const WALK_BAND: f64 = 0.2;
const WALK_REVERSION: f64 = 0.05;
const WALK_SIGMA: f64 = 0.02;
/// Burst arrivals per hour while idle.
const BURST_RATE: f64 = 0.5;
const BURST_MIN_H: f64 = 0.1;
const BURST_MAX_H: f64 = 0.5;

/// Seeded synthetic CPU load: a mean-reverting walk clamped to a band plus
/// randomly timed rectangular bursts.
///
/// The walk is centred below `mean_kw` by the expected burst contribution,
/// so the long-run mean stays at `mean_kw`.
pub fn synth_load(
    seed: u64,
    mean_kw: f64,
    burst_amplitude: f64,
    duration: f64,
) -> Result<LoadTrace> {
    if !(mean_kw > 0.0) || !mean_kw.is_finite() {
        return Err(Error::invalid(
            "mean load",
            format!("{mean_kw} (must be > 0)"),
        ));
    }
    if !(burst_amplitude >= 0.0) || !(duration > 0.0) {
        return Err(Error::invalid(
            "synthetic load",
            format!("burst {burst_amplitude}, duration {duration}"),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mean_burst_len = 0.5 * (BURST_MIN_H + BURST_MAX_H);
    let busy = BURST_RATE * mean_burst_len / (1.0 + BURST_RATE * mean_burst_len);
    let center = (mean_kw - busy * 0.75 * burst_amplitude).max(0.0);
    let (lo, hi) = (
        (center - WALK_BAND * mean_kw).max(0.0),
        center + WALK_BAND * mean_kw,
    );

    let n = (duration / SYNTH_STEP).round() as usize;
    let mut walk = center;
    let mut burst_left = 0.0;
    let mut burst_level = 0.0;
    let mut samples = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = k as f64 * SYNTH_STEP;
        let z: f64 = StandardNormal.sample(&mut rng);
        walk = (walk + WALK_REVERSION * (center - walk) + WALK_SIGMA * mean_kw * z).clamp(lo, hi);

        if burst_left <= 0.0
            && burst_amplitude > 0.0
            && rng.random::<f64>() < BURST_RATE * SYNTH_STEP
        {
            burst_left = rng.random_range(BURST_MIN_H..BURST_MAX_H);
            burst_level = burst_amplitude * rng.random_range(0.5..1.0);
        }
        let burst = if burst_left > 0.0 {
            burst_left -= SYNTH_STEP;
            burst_level
        } else {
            0.0
        };
        samples.push((t, (walk + burst).max(0.0)));
    }
    LoadTrace::new(samples)
}
