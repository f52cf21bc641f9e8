//! Air-side exchange coefficients change by ×0.5 or ×1.5 at t = 2.7 h while
//! the controller keeps its gains.
//!
//!     cargo run --example param_change

use mfc_thermal::scenarios::{scenario_param_change, PARAM_CHANGE_TIME};
use mfc_thermal::simloop::{metrics, run_closed_loop};

fn main() -> Result<(), mfc_thermal::Error> {
    for m in [0.5, 0.8, 1.0, 1.5, 2.0] {
        let trace = run_closed_loop(&scenario_param_change(m, PARAM_CHANGE_TIME)?)?;
        let stats = metrics(&trace, 0.1, 0.5)?;
        println!(
            "x{m:<4} peak |e| after change {:.4} °C, settling {}, control effort {:.3}",
            trace.max_abs_error_after(PARAM_CHANGE_TIME),
            stats.settling_time,
            stats.control_effort
        );
    }
    Ok(())
}
