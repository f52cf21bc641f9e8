use mfc_thermal::estimator::*;
use proptest::prelude::*;

fn config(n: usize, h: f64, alpha: f64, q: Quadrature) -> EstimatorConfig {
    EstimatorConfig {
        alpha,
        window_samples: n,
        sample_interval: h,
        quadrature: q,
    }
}

fn estimate(cfg: &EstimatorConfig, y: impl Fn(f64) -> f64, u: impl Fn(f64) -> f64) -> f64 {
    let mut w = SampleWindow::new(cfg.window_samples).unwrap();
    for j in 0..cfg.window_samples {
        let s = j as f64 * cfg.sample_interval;
        w.push(y(s), u(s)).unwrap();
    }
    estimate_f(&w, cfg).unwrap()
}

/// Midpoint rule with a million panels on the continuous estimator integral.
fn dense_estimate(tau: f64, alpha: f64, y: impl Fn(f64) -> f64, u: impl Fn(f64) -> f64) -> f64 {
    let m = 1_000_000;
    let d = tau / m as f64;
    let integral: f64 = (0..m)
        .map(|i| {
            let s = (i as f64 + 0.5) * d;
            (tau - 2.0 * s) * y(s) + alpha * s * (tau - s) * u(s)
        })
        .sum::<f64>()
        * d;
    -6.0 / tau.powi(3) * integral
}

#[test]
fn quadratic_output_matches_dense_quadrature() {
    let tau = 1.0;
    let dense = dense_estimate(tau, 10.0, |s| s * s, |_| 0.0);
    // for y = σ² the continuous estimate is τ
    assert!((dense - tau).abs() < 1e-9, "{dense}");
    let simpson = estimate(
        &config(61, tau / 60.0, 10.0, Quadrature::Simpson),
        |s| s * s,
        |_| 0.0,
    );
    assert!((simpson - dense).abs() < 1e-9, "{simpson} vs {dense}");
}

#[test]
fn trapezoid_converges_at_second_order() {
    let tau = 1.0;
    let exact = dense_estimate(tau, 10.0, |s| s * s, |_| 0.0);
    let err = |n: usize| {
        let cfg = config(n, tau / (n - 1) as f64, 10.0, Quadrature::Trapezoid);
        (estimate(&cfg, |s| s * s, |_| 0.0) - exact).abs()
    };
    for (coarse, fine) in [(11, 21), (21, 41), (41, 81)] {
        let ratio = err(coarse) / err(fine);
        assert!(
            (ratio - 4.0).abs() <= 0.4,
            "{coarse}->{fine}: ratio {ratio}"
        );
    }
}

#[test]
fn sinusoid_agrees_with_dense_quadrature() {
    let tau = 0.2;
    let y = |s: f64| (7.0 * s).sin() + 20.0;
    let u = |s: f64| (3.0 * s).cos();
    let dense = dense_estimate(tau, 10.0, y, u);
    let est = estimate(&config(101, tau / 100.0, 10.0, Quadrature::Simpson), y, u);
    assert!((est - dense).abs() < 1e-6, "{est} vs {dense}");
}

fn quadrature() -> impl Strategy<Value = Quadrature> {
    prop_oneof![Just(Quadrature::Trapezoid), Just(Quadrature::Simpson)]
}

proptest! {
    #[test]
    fn estimate_is_linear_in_the_window(
        ys1 in prop::collection::vec(-50.0..50.0f64, 7),
        ys2 in prop::collection::vec(-50.0..50.0f64, 7),
        us1 in prop::collection::vec(-50.0..50.0f64, 7),
        us2 in prop::collection::vec(-50.0..50.0f64, 7),
        a in -4.0..4.0f64, b in -4.0..4.0f64,
        q in quadrature(),
    ) {
        let cfg = config(7, 0.05, 10.0, q);
        let run = |ys: &[f64], us: &[f64]| {
            let mut w = SampleWindow::new(7).unwrap();
            for (y, u) in ys.iter().zip(us) {
                w.push(*y, *u).unwrap();
            }
            estimate_f(&w, &cfg).unwrap()
        };
        let mix = |p: &[f64], r: &[f64]| p.iter().zip(r).map(|(x, z)| a * x + b * z).collect::<Vec<_>>();
        let lhs = run(&mix(&ys1, &ys2), &mix(&us1, &us2));
        let rhs = a * run(&ys1, &us1) + b * run(&ys2, &us2);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.abs().max(1e3));
    }

    #[test]
    fn affine_output_and_constant_input_are_recovered(
        c in -100.0..100.0f64,
        slope in -50.0..50.0f64,
        u0 in -30.0..30.0f64,
        alpha in prop_oneof![-20.0..-0.5f64, 0.5..20.0f64],
        half in 1usize..20,
        h in 1e-3..1.0f64,
    ) {
        let cfg = config(2 * half + 1, h, alpha, Quadrature::Simpson);
        let f = estimate(&cfg, |s| c + slope * s, |_| u0);
        let expected = slope - alpha * u0;
        let scale = (slope.abs() + (alpha * u0).abs() + c.abs() / cfg.horizon()).max(1.0);
        prop_assert!((f - expected).abs() <= 1e-9 * scale, "{} vs {}", f, expected);
    }

    #[test]
    fn offsets_in_y_never_leak(
        ys in prop::collection::vec(-50.0..50.0f64, 9),
        offset in -1e3..1e3f64,
        q in quadrature(),
    ) {
        let cfg = config(9, 1.0 / 60.0, 10.0, q);
        let run = |shift: f64| {
            let mut w = SampleWindow::new(9).unwrap();
            for y in &ys {
                w.push(y + shift, 0.0).unwrap();
            }
            estimate_f(&w, &cfg).unwrap()
        };
        let base = run(0.0);
        prop_assert!((run(offset) - base).abs() <= 1e-9 * (offset.abs() + 50.0) / cfg.horizon());
    }
}
