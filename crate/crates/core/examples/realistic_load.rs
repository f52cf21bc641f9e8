//! Tracking under a bursty CPU load. With a path argument the load is read
//! from a `t,p_it` CSV; otherwise a seeded synthetic trace is generated and
//! written to `synthetic_load.csv` in the temp directory.
//!
//!     cargo run --example realistic_load [-- load.csv]

use mfc_thermal::scenarios::{load_trace_from_csv, scenario_load_trace, synth_load};
use mfc_thermal::simloop::{metrics, run_closed_loop};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let trace = match std::env::args().nth(1) {
        Some(path) => load_trace_from_csv(path)?,
        None => {
            let t = synth_load(2024, 5.0, 3.0, 12.0)?;
            let path = std::env::temp_dir().join("synthetic_load.csv");
            t.write_csv(std::fs::File::create(&path)?)?;
            println!("wrote {}", path.display());
            t
        }
    };
    let duration = trace.samples().last().map_or(1.0, |s| s.0).floor().max(1.0);
    let sim = run_closed_loop(&scenario_load_trace(&trace, duration)?)?;
    let m = metrics(&sim, 0.1, 0.5)?;

    let (lo, hi) = trace
        .samples()
        .iter()
        .fold((f64::MAX, f64::MIN), |(lo, hi), s| {
            (lo.min(s.1), hi.max(s.1))
        });
    println!(
        "load {lo:.2}..{hi:.2} kW (mean {:.2}) over {duration} h",
        trace.mean()
    );
    println!(
        "rms error {:.4} °C, worst {:.3} °C, control effort {:.2}",
        m.rms_error,
        sim.rows.iter().map(|r| r.e.abs()).fold(0.0, f64::max),
        m.control_effort
    );
    Ok(())
}
