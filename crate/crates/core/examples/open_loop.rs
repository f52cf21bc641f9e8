//! Open-loop step in supply-air temperature, with the estimator running
//! passively alongside.
//!
//!     cargo run --example open_loop

use mfc_thermal::plant::PlantInputs;
use mfc_thermal::simloop::{run_open_loop, InitialCondition, SimConfig};

fn main() -> Result<(), mfc_thermal::Error> {
    let cfg = SimConfig {
        duration: 4.0,
        initial: InitialCondition::Equilibrium,
        initial_inputs: PlantInputs::new(20.0, 5.0, 25.0),
        ..SimConfig::default()
    };
    let n = cfg.step_count()?;
    // supply air drops by 2 °C after the first hour
    let u: Vec<f64> = (0..n).map(|k| if k < 60 { 20.0 } else { 18.0 }).collect();
    let trace = run_open_loop(&cfg, &u)?;
    for r in trace.rows.iter().step_by(30) {
        println!(
            "t={:4.1} h  u={:5.1}  T_IT={:7.3}  F̂={:8.3}",
            r.t, r.u, r.y, r.f_hat
        );
    }
    Ok(())
}
