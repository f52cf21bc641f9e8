//! A run described by a config file, written out as trace, metrics and
//! panel CSVs.
//!
//!     cargo run --example config_file

use mfc_thermal::cli::{config_to_string, parse_config, run_and_write};

const CONFIG: &str = "
# six hours, a load step and a hotter afternoon
sim.duration = 6
ip.kp = 1.5
inputs.p_it = 6
event.load = 1 p_it 9
event.heat = 3 t_out 31
";

fn main() -> Result<(), mfc_thermal::Error> {
    let cfg = parse_config(CONFIG)?;
    println!("resolved config:\n{}", config_to_string(&cfg));

    let out = std::env::temp_dir().join("mfc-thermal-config-example");
    let report = run_and_write(&cfg, "example", &out)?;
    println!("wrote {}", out.display());
    println!(
        "{}",
        std::fs::read_to_string(out.join("metrics.txt")).unwrap_or_default()
    );
    println!("settling {}", report.metrics.settling_time);
    Ok(())
}
