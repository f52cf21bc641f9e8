use mfc_thermal::controller::*;
use proptest::prelude::*;

fn cfg(alpha: f64, kp: f64) -> IpConfig {
    IpConfig {
        alpha,
        kp,
        ..IpConfig::default()
    }
}

fn alpha() -> impl Strategy<Value = f64> {
    prop_oneof![-50.0..-0.1f64, 0.1..50.0f64]
}

proptest! {
    #[test]
    fn law_cancels_the_estimate(f in -1e3..1e3f64, yd in -10.0..10.0f64, e in -10.0..10.0f64,
                                a in alpha(), kp in 0.01..20.0f64) {
        // with F = F̂ the model closes to ẏ = ẏ* - K_P·e
        let out = ip_control(f, yd, e, &cfg(a, kp));
        let ydot = f + a * out.u;
        prop_assert!((ydot - (yd - kp * e)).abs() <= 1e-9 * (f.abs() + yd.abs() + kp * e.abs()).max(1.0));
    }

    #[test]
    fn law_is_homogeneous(f in -1e3..1e3f64, yd in -10.0..10.0f64, e in -10.0..10.0f64,
                          k in -5.0..5.0f64, a in alpha()) {
        let c = cfg(a, 1.0);
        let u = ip_control(f, yd, e, &c).u;
        let scaled = ip_control(k * f, k * yd, k * e, &c).u;
        prop_assert!((scaled - k * u).abs() <= 1e-9 * (k * u).abs().max(1.0));
    }

    #[test]
    fn clamping_is_monotone_and_bounded(f1 in -1e3..1e3f64, f2 in -1e3..1e3f64,
                                        lo in -20.0..10.0f64, width in 0.1..30.0f64) {
        let c = IpConfig { u_min: Some(lo), u_max: Some(lo + width), ..cfg(10.0, 1.0) };
        let (a, b) = (ip_control(f1, 0.0, 0.0, &c), ip_control(f2, 0.0, 0.0, &c));
        for out in [a, b] {
            prop_assert!((lo..=lo + width).contains(&out.u));
            prop_assert_eq!(out.clamped, out.u != out.unclamped);
        }
        if a.unclamped <= b.unclamped {
            prop_assert!(a.u <= b.u);
        } else {
            prop_assert!(a.u >= b.u);
        }
    }

    #[test]
    fn reference_is_continuous_across_ramp_ends(from in 15.0..25.0f64, to in 15.0..25.0f64,
                                               start in 0.1..5.0f64, span in 0.05..3.0f64) {
        let traj = ReferenceTrajectory::hold_ramp_hold(from, to, start, span).unwrap();
        let eps = 1e-9;
        prop_assert!((traj.eval(start - eps).0 - traj.eval(start).0).abs() < 1e-6);
        prop_assert!((traj.eval(start + span - eps).0 - traj.eval(start + span).0).abs() < 1e-6);
        prop_assert_eq!(traj.eval(start + span + 1.0), (to, 0.0));
    }
}
