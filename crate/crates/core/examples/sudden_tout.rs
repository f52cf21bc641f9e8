//! Outside temperature steps from 25 °C to 32 °C at t = 1 h.
//!
//!     cargo run --example sudden_tout

use mfc_thermal::scenarios::{scenario_sudden_tout, BASE_T_OUT, STEP_TIME};
use mfc_thermal::simloop::{metrics, run_closed_loop};

fn main() -> Result<(), mfc_thermal::Error> {
    for step_to in [28.0, 32.0, 36.0] {
        let cfg = scenario_sudden_tout(BASE_T_OUT, step_to, STEP_TIME)?;
        let trace = run_closed_loop(&cfg)?;
        let m = metrics(&trace, 0.1, 0.5)?;
        let last = trace.rows.last().unwrap();
        println!(
            "T_out {BASE_T_OUT} -> {step_to}: peak |e| {:.3} °C, settling {}, final supply air {:.2} °C",
            trace.max_abs_error_after(STEP_TIME),
            m.settling_time,
            last.u
        );
    }
    Ok(())
}
