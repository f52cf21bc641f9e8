//! Gain sweep on the sudden-CPU scenario; runs execute concurrently, each in
//! its own subdirectory.
//!
//!     cargo run --example sweep

use mfc_thermal::cli::{run_cli, RunManifest};
use mfc_thermal::scenarios::Scenario;

fn main() -> Result<(), mfc_thermal::Error> {
    let out = std::env::temp_dir().join("mfc-thermal-sweep");
    let mut manifest = RunManifest::scenario(Scenario::SuddenCpu, &out);
    manifest.sweep = Some("kp=0.5,1,2,4".parse()?);

    for r in run_cli(&manifest)? {
        println!(
            "{:<40} rms {:.4} °C  settling {}  effort {:.2}",
            r.out_dir.display(),
            r.metrics.rms_error,
            r.metrics.settling_time,
            r.metrics.control_effort
        );
    }
    Ok(())
}
