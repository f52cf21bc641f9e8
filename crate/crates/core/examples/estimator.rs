//! The windowed estimate of F on signals with a known answer.
//!
//!     cargo run --example estimator

use mfc_thermal::estimator::{EstimatorConfig, FEstimator, Quadrature};

fn main() -> Result<(), mfc_thermal::Error> {
    let alpha = 10.0;
    let h = 1.0 / 60.0;

    // ẏ = F + α·u with F = 3 and u = 0.2: y(t) = y0 + (3 + α·0.2)·t
    for quadrature in [Quadrature::Trapezoid, Quadrature::Simpson] {
        let cfg = EstimatorConfig {
            alpha,
            window_samples: 5,
            sample_interval: h,
            quadrature,
        };
        let mut est = FEstimator::new(cfg)?;
        for k in 0..5 {
            let t = k as f64 * h;
            est.push(20.0 + (3.0 + alpha * 0.2) * t, 0.2)?;
        }
        println!(
            "{:>9}: F̂ = {:.6} (true 3)",
            quadrature.as_str(),
            est.estimate()?
        );
    }

    // a sinusoidal drift: F(t) = cos(t), tracked with a short window
    let cfg = EstimatorConfig::default();
    let mut est = FEstimator::new(cfg)?;
    println!("\n{:>6} {:>9} {:>9}", "t [h]", "F̂", "F");
    for k in 0..=360 {
        let t = k as f64 * h;
        est.push(t.sin(), 0.0)?;
        if k % 60 == 0 && k > 0 {
            // the window centre lags the newest sample by τ/2
            let lag = cfg.horizon() / 2.0;
            println!("{t:6.2} {:9.5} {:9.5}", est.estimate()?, (t - lag).cos());
        }
    }
    Ok(())
}
