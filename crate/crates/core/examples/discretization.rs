//! Exact ZOH discretization of the thermal plant against a fine RK4 run,
//! and the open-loop spectrum of both sign conventions.
//!
//!     cargo run --release --example discretization

use mfc_thermal::plant::*;

fn main() -> Result<(), mfc_thermal::Error> {
    for form in [ModelForm::Dissipative, ModelForm::AsPrinted] {
        let ss = build_state_space(&ThermalParams::default().with_form(form))?;
        let eig: Vec<String> = ss
            .spectrum()
            .iter()
            .map(|l| format!("{:.3}", l.re))
            .collect();
        println!(
            "{:>11}: eigenvalues [{}] -> {}",
            form.as_str(),
            eig.join(", "),
            if ss.is_open_loop_stable() {
                "stable"
            } else {
                "unstable"
            }
        );
    }

    let params = ThermalParams::default();
    let h = 1.0 / 60.0;
    let disc = discretize_zoh(&build_state_space(&params)?, h)?;
    let v = PlantInputs::new(18.0, 8.0, 30.0);
    let mut zoh = ThermalState::uniform(25.0);
    let mut rk4 = zoh;
    println!(
        "\n{:>5} {:>10} {:>10} {:>10}",
        "min", "T_IT zoh", "T_IT rk4", "max gap"
    );
    for k in 1..=60 {
        zoh = disc.step(&zoh, &v);
        rk4 = rk4_propagate(&rk4, &v, &params, h, 1e-5)?;
        if k % 10 == 0 {
            println!(
                "{k:5} {:10.5} {:10.5} {:10.2e}",
                zoh.t_it,
                rk4.t_it,
                zoh.max_abs_diff(&rk4)
            );
        }
    }
    println!("equilibrium: {}", equilibrium(&params, &v)?);
    Ok(())
}
