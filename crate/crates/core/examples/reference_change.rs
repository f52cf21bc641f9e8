//! Setpoint ramp 20.9 °C -> 22.0 °C over 30 minutes, plus a custom
//! staircase built from segments.
//!
//!     cargo run --example reference_change

use mfc_thermal::controller::{ReferenceTrajectory, Segment};
use mfc_thermal::scenarios::{default_reference_change, scenario_reference_change};
use mfc_thermal::simloop::run_closed_loop;

fn report(name: &str, traj: &ReferenceTrajectory) -> Result<(), mfc_thermal::Error> {
    let trace = run_closed_loop(&scenario_reference_change(traj)?)?;
    let worst = trace.rows.iter().map(|r| r.e.abs()).fold(0.0, f64::max);
    println!(
        "{name}: worst |e| {worst:.3} °C over {} h",
        trace.rows.last().unwrap().t
    );
    for r in trace.rows.iter().step_by(20).take(10) {
        println!("  t={:5.2}  y*={:7.3}  y={:7.3}", r.t, r.y_star, r.y);
    }
    Ok(())
}

fn main() -> Result<(), mfc_thermal::Error> {
    report("ramp", &default_reference_change())?;

    let stairs = ReferenceTrajectory::new(vec![
        Segment::hold(0.0, 20.9),
        Segment::hold(1.0, 21.4),
        Segment::ramp(2.0, 21.4, -1.0),
        Segment::hold(2.5, 20.9),
    ])?;
    report("staircase", &stairs)
}
