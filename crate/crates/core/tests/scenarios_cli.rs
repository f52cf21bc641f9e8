use std::fs;
use std::path::Path;

use mfc_thermal::cli::*;
use mfc_thermal::scenarios::*;
use mfc_thermal::simloop::{metrics, run_closed_loop};

#[test]
fn every_named_scenario_runs_and_settles() {
    for s in Scenario::ALL {
        let cfg = s.build(&ScenarioOptions::default()).unwrap();
        let trace = run_closed_loop(&cfg).unwrap_or_else(|e| panic!("{s}: {e}"));
        let m = metrics(&trace, SETTLE_BAND, SETTLE_WINDOW).unwrap();
        assert!(m.settling_time.time().is_some(), "{s} did not settle");
    }
}

#[test]
fn reference_change_follows_the_ramp() {
    let cfg = scenario_reference_change(&default_reference_change()).unwrap();
    let trace = run_closed_loop(&cfg).unwrap();
    let at = |t: f64| trace.rows.iter().find(|r| (r.t - t).abs() < 1e-9).unwrap();
    assert_eq!(at(0.5).y_star, 20.9);
    assert!((at(1.25).y_star - 21.45).abs() < 1e-9);
    assert_eq!(at(3.0).y_star, 22.0);
    assert!(trace.max_abs_error_after(3.0) < 0.1);
}

#[test]
fn load_trace_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("load.csv");
    let trace = synth_load(5, 5.0, 3.0, 2.0).unwrap();
    trace.write_csv(fs::File::create(&path).unwrap()).unwrap();
    assert_eq!(load_trace_from_csv(&path).unwrap(), trace);
    assert!(load_trace_from_csv(dir.path().join("missing.csv")).is_err());
}

#[test]
fn synthetic_load_keeps_its_mean() {
    for seed in 0..5 {
        let trace = synth_load(seed, 5.0, 3.0, 200.0).unwrap();
        let mean = trace.mean();
        assert!((mean - 5.0).abs() <= 0.5, "seed {seed}: mean {mean}");
    }
}

#[test]
fn recorded_load_drives_the_plant() {
    let trace = parse_load_trace("t,p_it\n0,5\n1.5,9\n3,6\n").unwrap();
    let cfg = scenario_load_trace(&trace, 5.0).unwrap();
    let sim = run_closed_loop(&cfg).unwrap();
    for row in &sim.rows {
        assert_eq!(
            row.inputs.p_it,
            trace.value_at(row.t + 1e-9),
            "t = {}",
            row.t
        );
    }
}

fn header(path: &Path) -> String {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string()
}

fn metrics_map(dir: &Path) -> std::collections::HashMap<String, String> {
    fs::read_to_string(dir.join("metrics.txt"))
        .unwrap()
        .lines()
        .map(|l| {
            let (k, v) = l.split_once('=').unwrap();
            (k.to_string(), v.to_string())
        })
        .collect()
}

#[test]
fn run_writes_trace_metrics_and_panels() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cpu");
    let code = main_from_args([
        "mfc-thermal",
        "run",
        "--scenario",
        "sudden-cpu",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    for f in ["trace.csv", "metrics.txt"].into_iter().chain(PANEL_FILES) {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    assert_eq!(header(&out.join("trace.csv")), TRACE_HEADER);
    assert_eq!(header(&out.join("panel_pit.csv")), "t,p_it");
    assert_eq!(header(&out.join("panel_tout.csv")), "t,t_out");
    assert_eq!(header(&out.join("panel_u.csv")), "t,u");
    assert_eq!(header(&out.join("panel_y.csv")), "t,y,y_star");
    let m = metrics_map(&out);
    assert_eq!(m["rows"], "361");
    assert_ne!(m["settling_time_h"], "not_settled");
}

#[test]
fn error_column_is_exact_difference() {
    let dir = tempfile::tempdir().unwrap();
    let mut manifest = RunManifest::scenario(Scenario::ReferenceChange, dir.path());
    manifest.overrides.noise_std = Some(0.03);
    run_cli(&manifest).unwrap();
    let text = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let cols: Vec<&str> = TRACE_HEADER.split(',').collect();
    let idx = |name: &str| cols.iter().position(|c| *c == name).unwrap();
    for line in text.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(f[idx("e")], f[idx("y")] - f[idx("y_star")], "{line}");
    }
}

#[test]
fn seeded_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        let mut m = RunManifest::scenario(Scenario::RealisticCpu, &out);
        m.overrides.seed = Some(42);
        m.overrides.noise_std = Some(0.01);
        run_cli(&m).unwrap();
        fs::read(out.join("trace.csv")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn param_change_reports_post_event_settling() {
    let dir = tempfile::tempdir().unwrap();
    let code = main_from_args([
        "mfc-thermal",
        "run",
        "--scenario",
        "param-change",
        "--multiplier",
        "0.5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let m = metrics_map(dir.path());
    assert_eq!(m["last_event_time_h"], "2.7");
    let delay: f64 = m["post_event_settling_time_h"].parse().unwrap();
    assert!(delay > 0.0 && delay < 7.3, "{delay}");
    let peak: f64 = m["post_event_max_abs_error"].parse().unwrap();
    assert!(peak > SETTLE_BAND);
}

#[test]
fn bad_invocations_fail_with_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_ne!(
        main_from_args(["mfc-thermal", "run", "--scenario", "nope", "--out", out]),
        0
    );
    assert_ne!(main_from_args(["mfc-thermal", "run", "--out", out]), 0);
    assert_ne!(
        main_from_args([
            "mfc-thermal",
            "run",
            "--scenario",
            "baseline",
            "--kp",
            "-1",
            "--out",
            out
        ]),
        0
    );
    let err = "nope".parse::<Scenario>().unwrap_err().to_string();
    for s in Scenario::ALL {
        assert!(err.contains(s.name()), "{err}");
    }

    // an existing file where the output directory should go
    let blocker = dir.path().join("blocker");
    fs::write(&blocker, "x").unwrap();
    let m = RunManifest::scenario(Scenario::Baseline, blocker.join("sub"));
    assert!(matches!(run_cli(&m), Err(mfc_thermal::Error::Io { .. })));
}

#[test]
fn config_file_drives_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.cfg");
    fs::write(
        &cfg_path,
        "sim.duration = 4\nip.kp = 2\nevent.heat = 1 t_out 30\nevent.load = 2 p_it 8\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let reports = run_cli(&RunManifest::config_file(&cfg_path, &out)).unwrap();
    assert_eq!(reports.len(), 1);
    assert_eq!(reports[0].post_event.unwrap().event_time, 2.0);
    let m = metrics_map(&out);
    assert_eq!(m["kp"], "2");
    assert_eq!(m["rows"], "241");

    fs::write(&cfg_path, "sim.duration = 4\nip.kp = -1\n").unwrap();
    let err = run_cli(&RunManifest::config_file(&cfg_path, &out))
        .unwrap_err()
        .to_string();
    assert!(err.contains("line 2") && err.contains("ip.kp"), "{err}");
}

#[test]
fn sweep_writes_one_directory_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = RunManifest::scenario(Scenario::SuddenTout, dir.path());
    m.sweep = Some("kp=0.5,1,2".parse().unwrap());
    let reports = run_cli(&m).unwrap();
    assert_eq!(reports.len(), 3);
    let rms: Vec<f64> = reports.iter().map(|r| r.metrics.rms_error).collect();
    assert!(rms[0] > rms[1] && rms[1] > rms[2], "{rms:?}");
    for v in ["0.5", "1", "2"] {
        let sub = dir.path().join(format!("kp={v}"));
        assert!(sub.join("trace.csv").is_file());
        assert_eq!(metrics_map(&sub)["kp"], v);
    }
    // each sweep member matches a standalone run
    let single = dir.path().join("single");
    let mut one = RunManifest::scenario(Scenario::SuddenTout, &single);
    one.overrides.kp = Some(2.0);
    run_cli(&one).unwrap();
    assert_eq!(
        fs::read(single.join("trace.csv")).unwrap(),
        fs::read(dir.path().join("kp=2/trace.csv")).unwrap()
    );
}
