//! Command-line front end: config files, named scenarios, trace export.
//!
//! # Config file
//!
//! Flat `section.key = value` lines; `#` starts a comment. Every key is
//! optional and missing keys keep their defaults.
//!
//! ```text
//! sim.duration = 6              # hours
//! sim.control_period = 0.0166…  # hours
//! sim.initial = trimmed         # trimmed | equilibrium | cold | six comma-separated temperatures
//! sim.seed = 0
//! sim.noise_std = none          # or a standard deviation in °C
//! sim.propagator = zoh          # zoh | rk4:<max_dt>
//! plant.a11 = 2.7248            # a11 … a62
//! plant.form = dissipative      # dissipative | as_printed
//! inputs.t_air_in = 20.9
//! inputs.p_it = 5
//! inputs.t_out = 25
//! ip.alpha = 10
//! ip.kp = 1
//! ip.u_min = none
//! ip.u_max = none
//! est.window = 5
//! est.quadrature = simpson      # simpson | trapezoid
//! ref.setpoint = 20.9
//! ref.segments = 0 hold 20.9; 1 ramp 20.9 2.2; 1.5 hold 22
//! event.cpu = 1 p_it 10         # <time> p_it|t_out|scale <value>
//! event.ref = 2 reference 2 hold 21
//! ```
//!
//! # Output files
//!
//! `trace.csv`, `metrics.txt` and the four panel files `panel_pit.csv`,
//! `panel_tout.csv`, `panel_u.csv`, `panel_y.csv`. Numbers are written with
//! nine significant digits, except the `e` column, which holds the exact
//! `f64` difference of the written `y` and `y_star` values.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand};

use crate::controller::{ReferenceTrajectory, Segment, SegmentKind};
use crate::error::{Error, Result};
use crate::estimator::Quadrature;
use crate::plant::{ModelForm, ThermalParams, ThermalState};
use crate::scenarios::{Scenario, ScenarioOptions};
use crate::simloop::{
    metrics, run_closed_loop, Action, Event, EventSchedule, InitialCondition, Metrics, Propagator,
    SimConfig, SimTrace,
};

pub const SIG_DIGITS: usize = 9;
/// Band (°C) and minimum dwell (h) used for the settling metrics.
pub const SETTLE_BAND: f64 = 0.1;
pub const SETTLE_WINDOW: f64 = 0.5;

pub const TRACE_HEADER: &str = "t,y,u,f_hat,e,y_star,t_it,t_rack,t_c_aisle,t_c_wall,t_h_aisle,t_h_wall,p_it,t_out,warming_up,clamped";
pub const PANEL_FILES: [&str; 4] = [
    "panel_pit.csv",
    "panel_tout.csv",
    "panel_u.csv",
    "panel_y.csv",
];

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigSource {
    Scenario(Scenario),
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub kp: Option<f64>,
    pub alpha: Option<f64>,
    pub window: Option<usize>,
    pub seed: Option<u64>,
    pub multiplier: Option<f64>,
    pub noise_std: Option<f64>,
}

pub const SWEEP_KEYS: [&str; 6] = ["kp", "alpha", "window", "seed", "multiplier", "noise_std"];

impl Overrides {
    /// Sets one override from its textual value; `key` is one of [`SWEEP_KEYS`].
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |msg: String| Error::invalid("override", format!("{key} = {value}: {msg}"));
        let float = || value.trim().parse::<f64>().map_err(|e| bad(e.to_string()));
        let int = || value.trim().parse::<u64>().map_err(|e| bad(e.to_string()));
        match key {
            "kp" => self.kp = Some(float()?),
            "alpha" => self.alpha = Some(float()?),
            "window" => self.window = Some(int()? as usize),
            "seed" => self.seed = Some(int()?),
            "multiplier" => self.multiplier = Some(float()?),
            "noise_std" | "noise-std" => self.noise_std = Some(float()?),
            _ => {
                return Err(bad(format!(
                    "unknown key (expected one of {})",
                    SWEEP_KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }
}

/// `key=v1,v2,…`: one run per value, each in `<out>/<key>=<value>/`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub key: String,
    pub values: Vec<String>,
}

impl std::str::FromStr for Sweep {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (key, values) = s
            .split_once('=')
            .ok_or_else(|| Error::invalid("sweep", format!("`{s}` is not key=v1,v2,...")))?;
        let key = key.trim().replace('-', "_");
        if !SWEEP_KEYS.contains(&key.as_str()) {
            return Err(Error::invalid(
                "sweep",
                format!(
                    "unknown key `{key}` (expected one of {})",
                    SWEEP_KEYS.join(", ")
                ),
            ));
        }
        let values: Vec<String> = values
            .split(',')
            .map(|v| v.trim().to_string())
            .filter(|v| !v.is_empty())
            .collect();
        if values.is_empty() {
            return Err(Error::invalid("sweep", "no values"));
        }
        let mut probe = Overrides::default();
        for v in &values {
            probe.set(&key, v)?;
        }
        Ok(Sweep { key, values })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub source: ConfigSource,
    pub out_dir: PathBuf,
    pub overrides: Overrides,
    pub sweep: Option<Sweep>,
}

impl RunManifest {
    pub fn scenario(scenario: Scenario, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            source: ConfigSource::Scenario(scenario),
            out_dir: out_dir.into(),
            overrides: Overrides::default(),
            sweep: None,
        }
    }

    pub fn config_file(path: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            source: ConfigSource::File(path.into()),
            ..Self::scenario(Scenario::Baseline, out_dir)
        }
    }
}

/// Outcome of one run written to `out_dir`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub metrics: Metrics,
    pub post_event: Option<PostEvent>,
}

/// Settling measured from the last scheduled event onwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PostEvent {
    pub event_time: f64,
    pub max_abs_error: f64,
    /// Hours from the event until the error stays inside [`SETTLE_BAND`].
    pub settling_delay: Option<f64>,
}

// ---------------------------------------------------------------------------
// config parsing

fn cfg_err(line: usize, key: &str, msg: impl Into<String>) -> Error {
    Error::Config {
        line,
        key: key.to_string(),
        msg: msg.into(),
    }
}

fn parse_f64(line: usize, key: &str, v: &str) -> Result<f64> {
    let x: f64 = v
        .parse()
        .map_err(|_| cfg_err(line, key, format!("expected a number, got `{v}`")))?;
    if !x.is_finite() {
        return Err(cfg_err(line, key, "must be finite"));
    }
    Ok(x)
}

fn parse_positive(line: usize, key: &str, v: &str) -> Result<f64> {
    let x = parse_f64(line, key, v)?;
    if x <= 0.0 {
        return Err(cfg_err(line, key, format!("{x} must be > 0")));
    }
    Ok(x)
}

fn parse_optional(line: usize, key: &str, v: &str) -> Result<Option<f64>> {
    if v == "none" {
        Ok(None)
    } else {
        parse_f64(line, key, v).map(Some)
    }
}

fn parse_int(line: usize, key: &str, v: &str) -> Result<u64> {
    v.parse().map_err(|_| {
        cfg_err(
            line,
            key,
            format!("expected a non-negative integer, got `{v}`"),
        )
    })
}

/// `<start> hold <level>` or `<start> ramp <level> <slope>`, `;`-separated.
fn parse_segments(line: usize, key: &str, v: &str) -> Result<Vec<Segment>> {
    v.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            let tok: Vec<&str> = s.split_whitespace().collect();
            let num = |i: usize| parse_f64(line, key, tok[i]);
            match tok.as_slice() {
                [_, "hold", _] => Ok(Segment::hold(num(0)?, num(2)?)),
                [_, "ramp", _, _] => Ok(Segment::ramp(num(0)?, num(2)?, num(3)?)),
                _ => Err(cfg_err(
                    line,
                    key,
                    format!("bad segment `{s}` (expected `<start> hold <level>` or `<start> ramp <level> <slope>`)"),
                )),
            }
        })
        .collect()
}

fn parse_event(line: usize, key: &str, v: &str) -> Result<Event> {
    let (time, rest) = v
        .split_once(char::is_whitespace)
        .ok_or_else(|| cfg_err(line, key, "expected `<time> <action> <value>`"))?;
    let time = parse_f64(line, key, time)?;
    let (kind, arg) = rest
        .trim()
        .split_once(char::is_whitespace)
        .unwrap_or((rest.trim(), ""));
    let arg = arg.trim();
    let action = match kind {
        "p_it" => Action::SetPIt(parse_f64(line, key, arg)?),
        "t_out" => Action::SetTOut(parse_f64(line, key, arg)?),
        "scale" => Action::ScaleParams(parse_positive(line, key, arg)?),
        "reference" => {
            let segs = parse_segments(line, key, arg)?;
            if segs.is_empty() {
                return Err(cfg_err(
                    line,
                    key,
                    "reference switch needs at least one segment",
                ));
            }
            Action::SwitchReference(segs)
        }
        other => {
            return Err(cfg_err(
                line,
                key,
                format!("unknown action `{other}` (expected p_it, t_out, scale or reference)"),
            ))
        }
    };
    let event = Event::new(time, action);
    event
        .validate()
        .map_err(|e| cfg_err(line, key, e.to_string()))?;
    Ok(event)
}

fn parse_initial(line: usize, key: &str, v: &str) -> Result<InitialCondition> {
    match v {
        "trimmed" => Ok(InitialCondition::Trimmed),
        "equilibrium" => Ok(InitialCondition::Equilibrium),
        "cold" => Ok(InitialCondition::Cold),
        _ => {
            let temps = v
                .split(',')
                .map(|t| parse_f64(line, key, t.trim()))
                .collect::<Result<Vec<f64>>>()?;
            let arr: [f64; 6] = temps.try_into().map_err(|_| {
                cfg_err(
                    line,
                    key,
                    "expected trimmed, equilibrium, cold or six temperatures",
                )
            })?;
            Ok(InitialCondition::Explicit(ThermalState::from_array(arr)))
        }
    }
}

fn parse_propagator(line: usize, key: &str, v: &str) -> Result<Propagator> {
    match v.split_once(':') {
        None if v == "zoh" => Ok(Propagator::Zoh),
        Some(("rk4", dt)) => Ok(Propagator::Rk4 {
            max_dt: parse_positive(line, key, dt.trim())?,
        }),
        _ => Err(cfg_err(
            line,
            key,
            format!("expected zoh or rk4:<max_dt>, got `{v}`"),
        )),
    }
}

/// Parses a config file into a validated [`SimConfig`]; absent keys keep
/// their defaults, so empty text yields `SimConfig::default()`.
pub fn parse_config(text: &str) -> Result<SimConfig> {
    let mut cfg = SimConfig::default();
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut events: Vec<(usize, Event)> = Vec::new();
    let mut period = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.split_once('#').map_or(raw, |(body, _)| body).trim();
        if trimmed.is_empty() {
            continue;
        }
        let (key, value) = trimmed
            .split_once('=')
            .ok_or_else(|| cfg_err(line, trimmed, "expected `section.key = value`"))?;
        let key = key.trim();
        let v = value.trim().trim_matches('"').trim();
        if let Some(first) = seen.insert(key.to_string(), line) {
            return Err(cfg_err(
                line,
                key,
                format!("duplicate key (first set on line {first})"),
            ));
        }

        match key {
            "sim.duration" => cfg.duration = parse_positive(line, key, v)?,
            "sim.control_period" => period = Some(parse_positive(line, key, v)?),
            "sim.initial" => cfg.initial = parse_initial(line, key, v)?,
            "sim.seed" => cfg.seed = parse_int(line, key, v)?,
            "sim.noise_std" => {
                cfg.noise_std = parse_optional(line, key, v)?;
                if cfg.noise_std.is_some_and(|s| s < 0.0) {
                    return Err(cfg_err(line, key, "must be >= 0"));
                }
            }
            "sim.propagator" => cfg.propagator = parse_propagator(line, key, v)?,
            "plant.form" => {
                cfg.params.form = v.parse::<ModelForm>().map_err(|e| cfg_err(line, key, e))?
            }
            "inputs.t_air_in" => cfg.initial_inputs.t_air_in = parse_f64(line, key, v)?,
            "inputs.p_it" => {
                let p = parse_f64(line, key, v)?;
                if p < 0.0 {
                    return Err(cfg_err(line, key, format!("{p} must be >= 0")));
                }
                cfg.initial_inputs.p_it = p;
            }
            "inputs.t_out" => cfg.initial_inputs.t_out = parse_f64(line, key, v)?,
            "ip.alpha" => {
                let a = parse_f64(line, key, v)?;
                if a == 0.0 {
                    return Err(cfg_err(line, key, "must be nonzero"));
                }
                cfg.set_alpha(a);
            }
            "ip.kp" => cfg.ip.kp = parse_positive(line, key, v)?,
            "ip.u_min" => cfg.ip.u_min = parse_optional(line, key, v)?,
            "ip.u_max" => cfg.ip.u_max = parse_optional(line, key, v)?,
            "est.window" => {
                let n = parse_int(line, key, v)? as usize;
                if n < 3 {
                    return Err(cfg_err(line, key, format!("{n} must be >= 3")));
                }
                cfg.est.window_samples = n;
            }
            "est.quadrature" => {
                cfg.est.quadrature = v.parse::<Quadrature>().map_err(|e| cfg_err(line, key, e))?
            }
            "ref.setpoint" | "ref.segments" => {
                let other = if key == "ref.setpoint" {
                    "ref.segments"
                } else {
                    "ref.setpoint"
                };
                if seen.contains_key(other) {
                    return Err(cfg_err(line, key, format!("conflicts with `{other}`")));
                }
                cfg.traj = if key == "ref.setpoint" {
                    ReferenceTrajectory::constant(parse_f64(line, key, v)?)
                } else {
                    ReferenceTrajectory::new(parse_segments(line, key, v)?)
                        .map_err(|e| cfg_err(line, key, e.to_string()))?
                };
            }
            _ if key.starts_with("plant.") => {
                let name = &key["plant.".len()..];
                let slot = cfg
                    .params
                    .coefficient_mut(name)
                    .ok_or_else(|| cfg_err(line, key, "unknown key"))?;
                *slot = parse_f64(line, key, v)?;
            }
            _ if key.starts_with("event.") && key.len() > "event.".len() => {
                events.push((line, parse_event(line, key, v)?));
            }
            _ => return Err(cfg_err(line, key, "unknown key")),
        }
    }

    if let Some(h) = period {
        cfg.set_control_period(h);
    }
    events.sort_by(|a, b| a.1.time.total_cmp(&b.1.time));
    for pair in events.windows(2) {
        if pair[0].1.time == pair[1].1.time {
            let line = pair[0].0.max(pair[1].0);
            let key = seen
                .iter()
                .find(|(_, &l)| l == line)
                .map_or("event", |(k, _)| k);
            return Err(cfg_err(
                line,
                key,
                format!(
                    "another event is already scheduled at t = {}",
                    pair[1].1.time
                ),
            ));
        }
    }
    cfg.events = EventSchedule::new(events.into_iter().map(|(_, e)| e).collect())?;
    cfg.validate()?;
    Ok(cfg)
}

fn opt_str(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), |x| x.to_string())
}

fn segments_str(segs: &[Segment]) -> String {
    segs.iter()
        .map(|s| match s.kind {
            SegmentKind::Hold { level } => format!("{} hold {}", s.start, level),
            SegmentKind::Ramp { level, slope } => format!("{} ramp {} {}", s.start, level, slope),
        })
        .collect::<Vec<_>>()
        .join("; ")
}

/// Serializes every field; `parse_config(&config_to_string(c))` returns `c`.
pub fn config_to_string(cfg: &SimConfig) -> String {
    let mut s = String::new();
    let mut kv = |k: &str, v: String| writeln!(s, "{k} = {v}").expect("string write");
    kv("sim.duration", cfg.duration.to_string());
    kv("sim.control_period", cfg.control_period.to_string());
    kv(
        "sim.initial",
        match cfg.initial {
            InitialCondition::Trimmed => "trimmed".into(),
            InitialCondition::Equilibrium => "equilibrium".into(),
            InitialCondition::Cold => "cold".into(),
            InitialCondition::Explicit(x) => x.to_array().map(|t| t.to_string()).join(", "),
        },
    );
    kv("sim.seed", cfg.seed.to_string());
    kv("sim.noise_std", opt_str(cfg.noise_std));
    kv(
        "sim.propagator",
        match cfg.propagator {
            Propagator::Zoh => "zoh".into(),
            Propagator::Rk4 { max_dt } => format!("rk4:{max_dt}"),
        },
    );
    for (name, value) in ThermalParams::COEFFICIENT_NAMES
        .iter()
        .zip(cfg.params.coefficients())
    {
        kv(&format!("plant.{name}"), value.to_string());
    }
    kv("plant.form", cfg.params.form.as_str().into());
    kv("inputs.t_air_in", cfg.initial_inputs.t_air_in.to_string());
    kv("inputs.p_it", cfg.initial_inputs.p_it.to_string());
    kv("inputs.t_out", cfg.initial_inputs.t_out.to_string());
    kv("ip.alpha", cfg.ip.alpha.to_string());
    kv("ip.kp", cfg.ip.kp.to_string());
    kv("ip.u_min", opt_str(cfg.ip.u_min));
    kv("ip.u_max", opt_str(cfg.ip.u_max));
    kv("est.window", cfg.est.window_samples.to_string());
    kv("est.quadrature", cfg.est.quadrature.as_str().into());
    match cfg.traj.segments() {
        [Segment {
            start,
            kind: SegmentKind::Hold { level },
        }] if *start == 0.0 => kv("ref.setpoint", level.to_string()),
        segs => kv("ref.segments", segments_str(segs)),
    }
    for (i, e) in cfg.events.events().iter().enumerate() {
        let action = match &e.action {
            Action::SetPIt(p) => format!("p_it {p}"),
            Action::SetTOut(t) => format!("t_out {t}"),
            Action::ScaleParams(m) => format!("scale {m}"),
            Action::SwitchReference(segs) => format!("reference {}", segments_str(segs)),
        };
        kv(&format!("event.e{}", i + 1), format!("{} {action}", e.time));
    }
    s
}

// ---------------------------------------------------------------------------
// output

/// `%g`-style formatting with [`SIG_DIGITS`] significant digits.
pub fn format_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= SIG_DIGITS as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_fraction(mantissa), exp.abs())
    } else {
        let decimals = (SIG_DIGITS as i32 - 1 - exp) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn rounded(x: f64) -> f64 {
    format_sig(x).parse().unwrap_or(x)
}

pub fn write_trace_csv(trace: &SimTrace, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{TRACE_HEADER}")?;
    for r in &trace.rows {
        let (y, ys) = (rounded(r.y), rounded(r.y_star));
        let mut cols = vec![
            format_sig(r.t),
            format_sig(y),
            format_sig(r.u),
            format_sig(r.f_hat),
            format!("{}", y - ys),
            format_sig(ys),
        ];
        cols.extend(r.state.to_array().map(format_sig));
        cols.push(format_sig(r.inputs.p_it));
        cols.push(format_sig(r.inputs.t_out));
        cols.push(u8::from(r.warming_up).to_string());
        cols.push(u8::from(r.clamped).to_string());
        writeln!(w, "{}", cols.join(","))?;
    }
    Ok(())
}

pub fn trace_csv_string(trace: &SimTrace) -> String {
    let mut buf = Vec::new();
    write_trace_csv(trace, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("ascii output")
}

fn write_panel(
    path: &Path,
    header: &str,
    trace: &SimTrace,
    cols: impl Fn(&crate::simloop::TraceRow) -> Vec<f64>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut body = || -> std::io::Result<()> {
        writeln!(w, "{header}")?;
        for r in &trace.rows {
            let vals: Vec<String> = cols(r).into_iter().map(format_sig).collect();
            writeln!(w, "{}", vals.join(","))?;
        }
        w.flush()
    };
    body().map_err(|e| Error::io(path, e))
}

fn post_event_metrics(trace: &SimTrace, config: &SimConfig) -> Result<Option<PostEvent>> {
    let Some(te) = config.events.last_time() else {
        return Ok(None);
    };
    let start = trace
        .rows
        .partition_point(|r| r.t < te - 1e-9 * trace.control_period);
    let tail = SimTrace {
        control_period: trace.control_period,
        rows: trace.rows[start..].to_vec(),
    };
    if tail.is_empty() {
        return Ok(None);
    }
    let m = metrics(&tail, SETTLE_BAND, SETTLE_WINDOW)?;
    Ok(Some(PostEvent {
        event_time: te,
        max_abs_error: tail.rows.iter().map(|r| r.e.abs()).fold(0.0, f64::max),
        settling_delay: m.settling_time.time().map(|t| t - te),
    }))
}

/// `key=value` lines describing a finished run.
pub fn metrics_text(
    label: &str,
    config: &SimConfig,
    trace: &SimTrace,
    m: &Metrics,
    post: Option<&PostEvent>,
) -> String {
    let mut s = String::new();
    let mut kv = |k: &str, v: String| writeln!(s, "{k}={v}").expect("string write");
    let opt = |v: Option<f64>| v.map_or_else(|| "not_settled".to_string(), format_sig);
    kv("source", label.to_string());
    kv("duration_h", format_sig(config.duration));
    kv("rows", trace.len().to_string());
    kv("alpha", format_sig(config.ip.alpha));
    kv("kp", format_sig(config.ip.kp));
    kv("window", config.est.window_samples.to_string());
    kv("seed", config.seed.to_string());
    kv("settle_band", format_sig(SETTLE_BAND));
    kv("settle_window_h", format_sig(SETTLE_WINDOW));
    kv("rms_error", format_sig(m.rms_error));
    kv(
        "max_abs_error",
        format_sig(trace.rows.iter().map(|r| r.e.abs()).fold(0.0, f64::max)),
    );
    kv("settling_time_h", opt(m.settling_time.time()));
    kv(
        "max_abs_error_after_settle",
        opt(m.max_abs_error_after_settle),
    );
    kv("control_effort", format_sig(m.control_effort));
    if let Some(p) = post {
        kv("last_event_time_h", format_sig(p.event_time));
        kv("post_event_max_abs_error", format_sig(p.max_abs_error));
        kv("post_event_settling_time_h", opt(p.settling_delay));
    }
    s
}

/// Runs `config` and writes the trace, metrics and panel files into `out_dir`.
pub fn run_and_write(config: &SimConfig, label: &str, out_dir: &Path) -> Result<RunReport> {
    let trace = run_closed_loop(config)?;
    let m = metrics(&trace, SETTLE_BAND, SETTLE_WINDOW)?;
    let post = post_event_metrics(&trace, config)?;

    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let write_file = |name: &str, body: &str| {
        let path = out_dir.join(name);
        std::fs::write(&path, body).map_err(|e| Error::io(path, e))
    };
    write_file("trace.csv", &trace_csv_string(&trace))?;
    write_file(
        "metrics.txt",
        &metrics_text(label, config, &trace, &m, post.as_ref()),
    )?;
    write_panel(&out_dir.join("panel_pit.csv"), "t,p_it", &trace, |r| {
        vec![r.t, r.inputs.p_it]
    })?;
    write_panel(&out_dir.join("panel_tout.csv"), "t,t_out", &trace, |r| {
        vec![r.t, r.inputs.t_out]
    })?;
    write_panel(&out_dir.join("panel_u.csv"), "t,u", &trace, |r| {
        vec![r.t, r.u]
    })?;
    write_panel(&out_dir.join("panel_y.csv"), "t,y,y_star", &trace, |r| {
        vec![r.t, r.y, r.y_star]
    })?;

    Ok(RunReport {
        out_dir: out_dir.to_path_buf(),
        metrics: m,
        post_event: post,
    })
}

/// Builds the config named by `source` and applies `ov`.
pub fn build_config(source: &ConfigSource, ov: &Overrides) -> Result<SimConfig> {
    let mut cfg = match source {
        ConfigSource::Scenario(s) => {
            let mut opts = ScenarioOptions::default();
            if let Some(m) = ov.multiplier {
                opts.multiplier = m;
            }
            if let Some(seed) = ov.seed {
                opts.seed = seed;
            }
            s.build(&opts)?
        }
        ConfigSource::File(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let mut cfg = parse_config(&text)?;
            if let Some(m) = ov.multiplier {
                cfg.events.map_multipliers(|_| m);
            }
            cfg
        }
    };
    if let Some(kp) = ov.kp {
        cfg.ip.kp = kp;
    }
    if let Some(alpha) = ov.alpha {
        cfg.set_alpha(alpha);
    }
    if let Some(n) = ov.window {
        cfg.est.window_samples = n;
    }
    if let Some(seed) = ov.seed {
        cfg.seed = seed;
    }
    if let Some(sd) = ov.noise_std {
        cfg.noise_std = (sd != 0.0).then_some(sd);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn source_label(source: &ConfigSource) -> String {
    match source {
        ConfigSource::Scenario(s) => format!("scenario:{s}"),
        ConfigSource::File(p) => format!("config:{}", p.display()),
    }
}

/// Executes a manifest. A sweep runs its variants on separate threads and
/// fails if any variant fails.
pub fn run_cli(manifest: &RunManifest) -> Result<Vec<RunReport>> {
    let label = source_label(&manifest.source);
    let Some(sweep) = &manifest.sweep else {
        let cfg = build_config(&manifest.source, &manifest.overrides)?;
        return Ok(vec![run_and_write(&cfg, &label, &manifest.out_dir)?]);
    };

    let jobs = sweep
        .values
        .iter()
        .map(|v| {
            let mut ov = manifest.overrides;
            ov.set(&sweep.key, v)?;
            let dir = manifest.out_dir.join(format!("{}={v}", sweep.key));
            Ok((build_config(&manifest.source, &ov)?, dir))
        })
        .collect::<Result<Vec<_>>>()?;

    let results: Vec<Result<RunReport>> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|(cfg, dir)| scope.spawn(|| run_and_write(cfg, &label, dir)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    results.into_iter().collect()
}

// ---------------------------------------------------------------------------
// argument parsing

#[derive(Debug, Parser)]
#[command(
    name = "mfc-thermal",
    version,
    about = "Model-free iP control of a data-center thermal plant"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a named scenario or a config file and write trace, metrics and panels.
    Run(RunArgs),
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
#[command(group(ArgGroup::new("source").required(true).args(["scenario", "config"])))]
pub struct RunArgs {
    /// baseline, sudden-cpu, realistic-cpu, sudden-tout, reference-change, param-change
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub kp: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub multiplier: Option<f64>,
    #[arg(long)]
    pub noise_std: Option<f64>,
    /// `key=v1,v2,...` over kp, alpha, window, seed, multiplier, noise_std
    #[arg(long)]
    pub sweep: Option<String>,
}

impl RunArgs {
    pub fn to_manifest(&self) -> Result<RunManifest> {
        let source = match (&self.scenario, &self.config) {
            (Some(name), None) => ConfigSource::Scenario(name.parse()?),
            (None, Some(path)) => ConfigSource::File(path.clone()),
            _ => {
                return Err(Error::invalid(
                    "run",
                    "give exactly one of --scenario or --config",
                ))
            }
        };
        Ok(RunManifest {
            source,
            out_dir: self.out.clone(),
            overrides: Overrides {
                kp: self.kp,
                alpha: self.alpha,
                window: self.window,
                seed: self.seed,
                multiplier: self.multiplier,
                noise_std: self.noise_std,
            },
            sweep: self.sweep.as_deref().map(str::parse).transpose()?,
        })
    }
}

/// Parses `args` (program name first), runs, reports to stdout/stderr and
/// returns the process exit code.
pub fn main_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let Command::Run(run) = cli.command;
    match run.to_manifest().and_then(|m| run_cli(&m)) {
        Ok(reports) => {
            for r in reports {
                let settle = r
                    .metrics
                    .settling_time
                    .time()
                    .map_or("not_settled".into(), format_sig);
                println!(
                    "{}: rms_error={} settling_time_h={settle}",
                    r.out_dir.display(),
                    format_sig(r.metrics.rms_error)
                );
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig_formatting() {
        assert_eq!(format_sig(20.9), "20.9");
        assert_eq!(format_sig(1.0 / 60.0), "0.0166666667");
        assert_eq!(format_sig(-0.0), "0");
        assert_eq!(format_sig(123456789.4), "123456789");
        assert_eq!(format_sig(1234567891.0), "1.23456789e+09");
        assert_eq!(format_sig(1.5e-7), "1.5e-07");
        assert_eq!(format_sig(9.9999999999), "10");
        assert_eq!(format_sig(f64::NAN), "nan");
    }

    #[test]
    fn empty_config_is_default() {
        assert_eq!(parse_config("").unwrap(), SimConfig::default());
        assert_eq!(parse_config("# nothing\n\n").unwrap(), SimConfig::default());
    }

    #[test]
    fn negative_gain_names_key_and_line() {
        match parse_config("sim.duration = 2\nip.kp = -1\n") {
            Err(Error::Config { line, key, .. }) => {
                assert_eq!((line, key.as_str()), (2, "ip.kp"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        assert!(matches!(
            parse_config("ip.gain = 2"),
            Err(Error::Config { line: 1, .. })
        ));
        assert!(matches!(
            parse_config("plant.a99 = 2"),
            Err(Error::Config { line: 1, .. })
        ));
        assert!(matches!(
            parse_config("ip.kp = 1\nip.kp = 2"),
            Err(Error::Config { line: 2, .. })
        ));
        assert!(matches!(
            parse_config("ip.kp = fast"),
            Err(Error::Config { line: 1, .. })
        ));
        assert!(matches!(
            parse_config("ref.setpoint = 20\nref.segments = 0 hold 21"),
            Err(Error::Config { line: 2, .. })
        ));
        assert!(matches!(
            parse_config("event.a = 1 p_it 3\nevent.b = 1 t_out 30"),
            Err(Error::Config { line: 2, .. })
        ));
    }

    #[test]
    fn inline_comments() {
        let cfg = parse_config("ip.kp = 2   # faster\n# header\n").unwrap();
        assert_eq!(cfg.ip.kp, 2.0);
    }

    #[test]
    fn default_round_trip() {
        let d = SimConfig::default();
        assert_eq!(parse_config(&config_to_string(&d)).unwrap(), d);
    }

    #[test]
    fn full_round_trip() {
        let text = "\
sim.duration = 3
sim.initial = 20, 21, 22, 23, 24, 25
sim.seed = 7
sim.noise_std = 0.02
sim.propagator = rk4:0.001
plant.a12 = -30
plant.form = as_printed
inputs.p_it = 8
ip.alpha = 5
ip.kp = 2
ip.u_min = 10
ip.u_max = 30
est.window = 7
est.quadrature = trapezoid
ref.segments = 0 hold 20.9; 1 ramp 20.9 2.2; 1.5 hold 22
event.b = 2 reference 2 hold 21
event.a = 0.5 p_it 10
event.c = 2.5 scale 1.5
event.d = 2.75 t_out 30
";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.ip.alpha, 5.0);
        assert_eq!(cfg.est.alpha, 5.0);
        assert_eq!(cfg.events.events().len(), 4);
        assert_eq!(cfg.events.events()[0].time, 0.5);
        assert_eq!(parse_config(&config_to_string(&cfg)).unwrap(), cfg);
    }

    #[test]
    fn sweep_argument() {
        let s: Sweep = "kp=0.5, 1,2".parse().unwrap();
        assert_eq!(s.values, ["0.5", "1", "2"]);
        assert!("gain=1".parse::<Sweep>().is_err());
        assert!("window=1.5".parse::<Sweep>().is_err());
        assert!("kp=".parse::<Sweep>().is_err());
    }

    #[test]
    fn overrides_apply() {
        let ov = Overrides {
            kp: Some(2.0),
            alpha: Some(4.0),
            noise_std: Some(0.0),
            ..Overrides::default()
        };
        let cfg = build_config(&ConfigSource::Scenario(Scenario::SuddenCpu), &ov).unwrap();
        assert_eq!((cfg.ip.kp, cfg.ip.alpha, cfg.est.alpha), (2.0, 4.0, 4.0));
        assert_eq!(cfg.noise_std, None);
        let bad = Overrides {
            kp: Some(-1.0),
            ..Overrides::default()
        };
        assert!(build_config(&ConfigSource::Scenario(Scenario::Baseline), &bad).is_err());
    }
}
