//! CPU load jumps from 5 kW to 10 kW at t = 1 h; the iP loop pulls the IT
//! temperature back to 20.9 °C by lowering the supply air.
//!
//!     cargo run --example sudden_cpu

use mfc_thermal::scenarios::{scenario_sudden_cpu, BASE_P_IT, STEP_P_IT, STEP_TIME};
use mfc_thermal::simloop::{metrics, run_closed_loop};

fn main() -> Result<(), mfc_thermal::Error> {
    let cfg = scenario_sudden_cpu(BASE_P_IT, STEP_P_IT, STEP_TIME)?;
    let trace = run_closed_loop(&cfg)?;

    println!(
        "{:>6} {:>8} {:>8} {:>9} {:>6}",
        "t [h]", "y [°C]", "u [°C]", "F̂", "P_IT"
    );
    for r in trace.rows.iter().step_by(15) {
        println!(
            "{:6.2} {:8.3} {:8.3} {:9.3} {:6.1}",
            r.t, r.y, r.u, r.f_hat, r.inputs.p_it
        );
    }

    let m = metrics(&trace, 0.1, 0.5)?;
    println!(
        "\npeak |e| after step: {:.3} °C, settling (|e| < 0.1) {}, rms {:.4}",
        trace.max_abs_error_after(STEP_TIME),
        m.settling_time,
        m.rms_error
    );
    Ok(())
}
