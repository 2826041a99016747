use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use coopkin::config::DEFAULT_SCENARIO;
use coopkin::logs::{read_run_log, read_twist_log_file, run_log_header, write_twist_log, TwistSample};
use coopkin_core::rigidmotion::{transform_twist, KinematicParams, Twist, UnitQuaternion};
use coopkin_core::Vec3;
use tempfile::TempDir;

fn coopkin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coopkin")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_scenario(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Key `k` from `key: value` report lines.
fn report_value(text: &str, k: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{k}: ")))
        .unwrap_or_else(|| panic!("no `{k}` in report:\n{text}"))
        .to_string()
}

fn theta() -> KinematicParams {
    KinematicParams::new(
        Vec3::new(0.1, -0.2, 0.3),
        UnitQuaternion::from_axis_angle(&Vec3::new(0.3, -0.5, 0.8), 30f64.to_radians()).unwrap(),
    )
}

/// Twist log of a body moving with `ω₁(t)`, `v₁(t)` through the map `θ`.
fn synth_log(n: usize, w1: impl Fn(f64) -> Vec3, v1: impl Fn(f64) -> Vec3) -> Vec<TwistSample> {
    let th = theta();
    (0..n)
        .map(|k| {
            let t = k as f64 * 1e-3;
            let a = Twist::new(v1(t), w1(t));
            TwistSample { t, twist1: a, twist2: transform_twist(&th, &a) }
        })
        .collect()
}

fn save_log(dir: &Path, name: &str, rows: &[TwistSample]) -> PathBuf {
    let p = dir.join(name);
    write_twist_log(std::fs::File::create(&p).unwrap(), rows).unwrap();
    p
}

#[test]
fn missing_config_exits_2_and_names_the_path() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("no_such_scenario.toml");
    let out = coopkin(&["simulate", "--config", s(&missing), "--out", s(dir.path())]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("no_such_scenario.toml"), "{}", stderr(&out));
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_scenario(dir.path(), "bad.toml", &DEFAULT_SCENARIO.replace("[run]", "[run]\nstep = 1"));
    let out = coopkin(&["analyze", "--config", s(&cfg)]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("step"), "{}", stderr(&out));
}

#[test]
fn default_scenario_writes_all_artifacts() {
    let dir = TempDir::new().unwrap();
    let cfg = write_scenario(dir.path(), "default.toml", DEFAULT_SCENARIO);
    let out_dir = dir.path().join("out");
    let out = coopkin(&["simulate", "--config", s(&cfg), "--out", s(&out_dir)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let csv = std::fs::read_to_string(out_dir.join("run_log.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(
        header,
        "t,x0,x1,x2,x3,x4,x5,xd0,xd1,xd2,xd3,xd4,xd5,e0,e1,e2,e3,e4,e5,edot0,edot1,edot2,edot3,edot4,edot5,\
etah0,etah1,etah2,etah3,rhoh0,rhoh1,rhoh2,theta_err,u1_norm,u2_norm,pe_lambda_min,V,g_norm,pe_flag,degen_flag"
    );
    assert_eq!(header, run_log_header().join(","));
    assert_eq!(csv.lines().count(), 1 + 10_001);

    let resolved = std::fs::read_to_string(out_dir.join("config.resolved.toml")).unwrap();
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    use sha2::Digest;
    let digest: String = sha2::Sha256::digest(resolved.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
    assert_eq!(manifest["config_sha256"], digest);
    assert_eq!(manifest["seed"], 1);
    assert_eq!(manifest["completed"], true);
    for f in manifest["outputs"].as_array().unwrap() {
        assert!(out_dir.join(f.as_str().unwrap()).exists(), "{f}");
    }
    let report = std::fs::read_to_string(out_dir.join("stability_report.txt")).unwrap();
    assert_eq!(report_value(&report, "admissible"), "true");
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("stability_report.json")).unwrap()).unwrap();
    assert!(json["sigma"].as_f64().unwrap() > 0.0);
}

#[test]
fn seed_flag_is_recorded() {
    let dir = TempDir::new().unwrap();
    let cfg = write_scenario(
        dir.path(),
        "short.toml",
        &DEFAULT_SCENARIO.replace("duration = 10.0", "duration = 0.2").replace("linear_std = 0.0", "linear_std = 1e-4"),
    );
    let run = |seed: &str, name: &str| {
        let o = dir.path().join(name);
        let out = coopkin(&["simulate", "--config", s(&cfg), "--out", s(&o), "--seed", seed]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        o
    };
    let (a, b, c) = (run("7", "a"), run("7", "b"), run("8", "c"));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 7);
    let read = |d: &Path| std::fs::read_to_string(d.join("twists.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
}

#[test]
fn no_adapt_adds_second_log_and_comparison() {
    let dir = TempDir::new().unwrap();
    let text = DEFAULT_SCENARIO
        .replace("rho = [0.1000005, -0.2, 0.3]", "rho = [0.105, -0.21, 0.315]")
        .replace("duration = 10.0", "duration = 4.0");
    let cfg = write_scenario(dir.path(), "paired.toml", &text);
    let out_dir = dir.path().join("out");
    let out = coopkin(&["simulate", "--config", s(&cfg), "--out", s(&out_dir), "--no-adapt"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let path = out_dir.join("run_log_no_adapt.csv");
    let off = read_run_log(std::fs::File::open(&path).unwrap(), &path).unwrap();
    assert!(off.iter().all(|r| r.rho_hat == off[0].rho_hat));
    let cmp = std::fs::read_to_string(out_dir.join("comparison.txt")).unwrap();
    let ratio: f64 = report_value(&cmp, "rms_ratio").parse().unwrap();
    let on: f64 = report_value(&cmp, "tracking_rms_adaptive").parse().unwrap();
    let off_rms: f64 = report_value(&cmp, "tracking_rms_no_adapt").parse().unwrap();
    assert!((ratio - off_rms / on).abs() <= 1e-12 * ratio);
    assert!(ratio > 1.0, "{cmp}");
}

#[test]
fn run_log_round_trip_is_bit_exact() {
    let dir = TempDir::new().unwrap();
    let cfg = write_scenario(dir.path(), "short.toml", &DEFAULT_SCENARIO.replace("duration = 10.0", "duration = 0.5"));
    let out_dir = dir.path().join("out");
    assert_eq!(code(&coopkin(&["simulate", "--config", s(&cfg), "--out", s(&out_dir)])), 0);

    let scenario = coopkin::config::Scenario::load(&cfg).unwrap();
    let mut config = scenario.sim_config(true).unwrap();
    config.noise.seed = scenario.run.seed;
    let log = coopkin_core::sim::run(config).unwrap();
    let path = out_dir.join("run_log.csv");
    let rows = read_run_log(std::fs::File::open(&path).unwrap(), &path).unwrap();
    assert_eq!(rows.len(), log.records.len());
    for (row, rec) in rows.iter().zip(&log.records) {
        assert_eq!(*row, coopkin::logs::RunLogRow::from(rec));
        assert_eq!(row.theta_err.to_bits(), rec.theta_err.to_bits());
    }
    let twists = read_twist_log_file(&out_dir.join("twists.csv")).unwrap();
    for (tw, rec) in twists.iter().zip(&log.records) {
        assert_eq!(tw.twist2.to_vector6(), rec.twist2);
    }
}

#[test]
fn calibrate_recovers_theta_from_synthesized_log() {
    let dir = TempDir::new().unwrap();
    let rows = synth_log(
        10_000,
        |t| Vec3::new((1.3 * t).sin(), (0.7 * t).cos(), 0.5 * (2.1 * t).sin() + 0.2),
        |t| Vec3::new(0.1 * t.cos(), -0.2 * (1.7 * t).sin(), 0.05),
    );
    let log = save_log(dir.path(), "twists.csv", &rows);
    let out = coopkin(&["calibrate", "--log", s(&log), "--out", s(dir.path())]);
    assert_eq!(code(&out), 0, "{}\n{}", stdout(&out), stderr(&out));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("calibration_report.json")).unwrap()).unwrap();
    let v = |k: &str| -> Vec<f64> { json[k].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect() };
    let est = KinematicParams::new(
        Vec3::from_column_slice(&v("rho_hat")),
        UnitQuaternion::from_vector4(&coopkin_core::Vec4::from_column_slice(&v("eta_hat"))).unwrap(),
    );
    assert!(theta().distance(&est) < 1e-6, "{}", theta().distance(&est));
    assert!(stdout(&out).contains("verdict: identifiable"));
}

#[test]
fn calibrate_round_trips_a_simulated_log() {
    let dir = TempDir::new().unwrap();
    let cfg = write_scenario(dir.path(), "default.toml", DEFAULT_SCENARIO);
    let out_dir = dir.path().join("out");
    assert_eq!(code(&coopkin(&["simulate", "--config", s(&cfg), "--out", s(&out_dir)])), 0);
    let est_cfg = write_scenario(dir.path(), "est.toml", "[estimators]\nmu_attitude = 0.5\nmu_displacement = 0.5\n");
    let log = out_dir.join("twists.csv");
    let out = coopkin(&["calibrate", "--log", s(&log), "--config", s(&est_cfg)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rho: Vec<f64> = report_value(&stdout(&out), "rho_hat")
        .trim_matches(['[', ']'])
        .split(", ")
        .map(|x| x.parse().unwrap())
        .collect();
    assert!((Vec3::from_column_slice(&rho) - theta().rho).norm() < 1e-6, "{rho:?}");
    assert!(out_dir.join("calibration_report.txt").exists());
}

#[test]
fn collinear_log_is_not_identifiable() {
    let dir = TempDir::new().unwrap();
    let axis = Vec3::new(0.2, 0.9, -0.4);
    let rows = synth_log(5000, |t| axis * (2.0 * t).sin(), |t| Vec3::new(t.cos(), 0.3, -0.2 * t));
    let log = save_log(dir.path(), "collinear.csv", &rows);
    let out = coopkin(&["calibrate", "--log", s(&log), "--out", s(dir.path())]);
    assert_eq!(code(&out), 4);
    assert!(stdout(&out).contains("verdict: non-identifiable"));
    assert!(stdout(&out).contains("eta_hat: ["), "estimates are still printed");
}

#[test]
fn empty_or_malformed_log_exits_2() {
    let dir = TempDir::new().unwrap();
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    assert_eq!(code(&coopkin(&["calibrate", "--log", s(&empty)])), 2);
    let header_only = dir.path().join("header.csv");
    std::fs::write(&header_only, "t,v1x,v1y,v1z,w1x,w1y,w1z,v2x,v2y,v2z,w2x,w2y,w2z\n").unwrap();
    assert_eq!(code(&coopkin(&["calibrate", "--log", s(&header_only)])), 2);
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "t,v1x,v1y,v1z,w1x,w1y,w1z,v2x,v2y,v2z,w2x,w2y,w2z\n0,0,0,0,0,0,0,0,0,0,0,0,0\n0.001,0,0,0,0,0\n")
        .unwrap();
    let out = coopkin(&["calibrate", "--log", s(&bad)]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
    assert_eq!(code(&coopkin(&["pe-audit", "--log", s(&bad)])), 2);
}

#[test]
fn analyze_default_is_admissible_with_positive_sigma() {
    let dir = TempDir::new().unwrap();
    let cfg = write_scenario(dir.path(), "default.toml", DEFAULT_SCENARIO);
    let out = coopkin(&["analyze", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(report_value(&text, "sigma").parse::<f64>().unwrap() > 0.0);
    assert_eq!(report_value(&text, "admissible"), "true");
    assert_eq!(report_value(&text, "r_z_source"), "kappa-ratio");
    let pc: f64 = report_value(&text, "p_condition_number").parse().unwrap();
    assert!(pc >= 1.0);
    assert!(dir.path().join("stability_report.json").exists());
}

#[test]
fn zero_derivative_gain_exits_5() {
    let dir = TempDir::new().unwrap();
    let text = DEFAULT_SCENARIO.replace("gd = [10.0, 10.0, 10.0, 10.0, 10.0, 10.0]", "gd = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0]");
    let cfg = write_scenario(dir.path(), "gd0.toml", &text);
    assert_eq!(code(&coopkin(&["analyze", "--config", s(&cfg)])), 5);
    assert_eq!(code(&coopkin(&["simulate", "--config", s(&cfg), "--out", s(dir.path())])), 5);
}

#[test]
fn zero_eps_t_uses_fallback_radius() {
    let dir = TempDir::new().unwrap();
    let text = DEFAULT_SCENARIO.replace("region_margin = 0.1", "region_margin = 0.1\neps_t = 0.0\nr_z_fallback = 2.5")
        .replace("r_z_fallback = 1.0\n", "");
    let cfg = write_scenario(dir.path(), "eps0.toml", &text);
    let out = coopkin(&["analyze", "--config", s(&cfg)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(report_value(&text, "kappa2").parse::<f64>().unwrap(), 0.0);
    assert_eq!(report_value(&text, "r_z_source"), "fallback");
    assert_eq!(report_value(&text, "r_z").parse::<f64>().unwrap(), 2.5);
    assert!(text.contains("note: kappa2 = 0"), "{text}");
    assert!(stderr(&out).contains("fallback"));
}

#[test]
fn pe_audit_rotating_passes_fixed_fails() {
    let dir = TempDir::new().unwrap();
    let make = |name: &str, text: String| {
        let cfg = write_scenario(dir.path(), &format!("{name}.toml"), &text);
        let o = dir.path().join(name);
        let out = coopkin(&["simulate", "--config", s(&cfg), "--out", s(&o)]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        o.join("twists.csv")
    };
    let rotating = make("rotating", DEFAULT_SCENARIO.replace("duration = 10.0", "duration = 8.0"));
    let fixed = make(
        "fixed",
        DEFAULT_SCENARIO.replace("rotating-axis-sine", "fixed-axis-sine").replace("duration = 10.0", "duration = 8.0"),
    );

    let out = coopkin(&["pe-audit", "--log", s(&rotating), "--window", "2000", "--threshold", "1.0"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let text = stdout(&out);
    assert_eq!(text.lines().filter(|l| l.ends_with(",pass")).count(), 4);

    let out = coopkin(&["pe-audit", "--log", s(&fixed), "--window", "2000", "--threshold", "1.0"]);
    assert_eq!(code(&out), 4);
    let text = stdout(&out);
    assert_eq!(text.lines().filter(|l| l.ends_with(",fail")).count(), 4, "{text}");
    assert!(text.contains("verdict: not persistently exciting"));
}

#[test]
fn pe_audit_long_window_warns() {
    let dir = TempDir::new().unwrap();
    let rows = synth_log(300, |t| Vec3::new((9.0 * t).sin(), (7.0 * t).cos(), 1.0), |_| Vec3::zeros());
    let log = save_log(dir.path(), "short.csv", &rows);
    let out = coopkin(&["pe-audit", "--log", s(&log), "--window", "2000", "--threshold", "1.0"]);
    assert!(stderr(&out).contains("warning"), "{}", stderr(&out));
    let text = stdout(&out);
    let windows: Vec<&str> = text.lines().filter(|l| l.starts_with("0,")).collect();
    assert_eq!(windows.len(), 1);
    assert!(windows[0].contains(",300,"), "{}", windows[0]);
    assert!(matches!(code(&out), 0 | 4));
}

#[test]
fn runtime_halt_exits_3_and_keeps_partial_log() {
    let dir = TempDir::new().unwrap();
    let text = DEFAULT_SCENARIO
        .replace(
            "initial_error = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]",
            "initial_error = [0.0, 0.0, 0.0, 0.0, 1.5, 0.0, 0.0, 0.0, 0.0, 0.0, 20.0, 0.0]",
        )
        .replace(
            "region_margin = 0.1",
            "region_margin = 0.1\n\n[analysis.region]\npose_center = [0.05, 0.05, 0.55, 0.4, 0.15, 0.4]\n\
pose_half_width = [0.15, 0.15, 0.15, 0.4, 0.35, 0.3]\nmax_speed = 2.0",
        );
    let cfg = write_scenario(dir.path(), "halt.toml", &text);
    let out_dir = dir.path().join("out");
    let out = coopkin(&["simulate", "--config", s(&cfg), "--out", s(&out_dir)]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    assert!(stderr(&out).contains("halted"), "{}", stderr(&out));
    let path = out_dir.join("run_log.csv");
    let rows = read_run_log(std::fs::File::open(&path).unwrap(), &path).unwrap();
    assert!(!rows.is_empty() && rows.len() < 10_001);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["completed"], false);
}
