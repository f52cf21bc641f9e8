use std::fmt;

use super::SimTrace;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Settling {
    At(f64),
    NotSettled,
}

impl Settling {
    pub fn time(self) -> Option<f64> {
        match self {
            Settling::At(t) => Some(t),
            Settling::NotSettled => None,
        }
    }
}

impl fmt::Display for Settling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Settling::At(t) => write!(f, "{t:.3} h"),
            Settling::NotSettled => f.write_str("not settled"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub rms_error: f64,
    /// Largest `|e|` from the settling instant to the end of the trace.
    pub max_abs_error_after_settle: Option<f64>,
    pub settling_time: Settling,
    /// `Σ |u_k - u_{k-1}|`.
    pub control_effort: f64,
}

/// Tracking summary. The settling time is the earliest row time from which
/// `|e| <= settle_band` holds through the end of the trace, provided at
/// least `settle_window` of trace remains after it.
pub fn metrics(trace: &SimTrace, settle_band: f64, settle_window: f64) -> Result<Metrics> {
    if !(settle_band > 0.0) {
        return Err(Error::invalid(
            "settle band",
            format!("{settle_band} (must be > 0)"),
        ));
    }
    if !(settle_window >= 0.0) {
        return Err(Error::invalid("settle window", format!("{settle_window}")));
    }
    let rows = &trace.rows;
    let Some(last) = rows.last() else {
        return Err(Error::invalid("trace", "empty"));
    };

    let rms_error = (rows.iter().map(|r| r.e * r.e).sum::<f64>() / rows.len() as f64).sqrt();
    let control_effort = rows.windows(2).map(|w| (w[1].u - w[0].u).abs()).sum();

    let first_inside = rows
        .iter()
        .rposition(|r| r.e.abs() > settle_band)
        .map_or(0, |i| i + 1);
    let settled = first_inside < rows.len()
        && last.t - rows[first_inside].t >= settle_window - 1e-9 * trace.control_period;

    let (settling_time, max_abs_error_after_settle) = if settled {
        let tail_max = rows[first_inside..]
            .iter()
            .map(|r| r.e.abs())
            .fold(0.0, f64::max);
        (Settling::At(rows[first_inside].t), Some(tail_max))
    } else {
        (Settling::NotSettled, None)
    };

    Ok(Metrics {
        rms_error,
        max_abs_error_after_settle,
        settling_time,
        control_effort,
    })
}
