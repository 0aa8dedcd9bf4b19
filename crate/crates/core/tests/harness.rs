use std::fs;
use std::path::Path;

use freejac::harness::{
    error_exit_code, execute, exit_code, plot_script, run, Command, ExperimentConfig, RunOptions, EXIT_CONFIG,
    EXIT_FAIL, EXIT_NUMERICAL, EXIT_PASS,
};
use freejac::Error;

fn write_config(dir: &Path, json: &str) -> std::path::PathBuf {
    let p = dir.join("config.json");
    fs::write(&p, json).unwrap();
    p
}

fn config_error(json: &str) -> String {
    match ExperimentConfig::from_json(json) {
        Err(e @ Error::Config(_)) => e.to_string(),
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn config_errors_name_the_field() {
    assert!(config_error(r#"{"command": "theory-profile", "sigma_w": [1.0, 2.0]}"#).contains("one per layer"));
    assert!(config_error(r#"{"command": "theory-profile", "depth": 2, "sigma_w": [1.0, -2.0]}"#).contains("sigma_w[2]"));
    assert!(config_error(r#"{"command": "theory-profile", "depth": 3, "sigma_w2": [1, 1, 0]}"#).contains("sigma_w2[3]"));
    assert!(config_error(r#"{"command": "verify-freeness", "sweep": [64, 32]}"#).contains("sweep"));
    assert!(config_error(r#"{"command": "verify-freeness", "trials": 0}"#).contains("trials"));
    assert!(config_error(r#"{"command": "theory-profile", "colour": 3}"#).contains("colour"));
    assert!(config_error(r#"{"command": "fly"}"#).contains("fly"));
    assert!(config_error(r#"{"command": "theory-profile", "tolerances": {"wobble": 0.1}}"#).contains("wobble"));
    assert!(config_error(r#"{"command": "predict-vs-empirical", "moment_order": 5}"#).contains("moment_order"));
    assert!(config_error(r#"{"command": "theory-profile", "activation": "softplus"}"#).contains("softplus"));
    assert!(!config_error("{").is_empty());
}

#[test]
fn every_command_has_a_default_config() {
    for c in Command::ALL {
        let cfg = ExperimentConfig::from_json(&format!(r#"{{"command": "{}"}}"#, c.name())).unwrap();
        assert_eq!(cfg.command, c);
    }
}

#[test]
fn run_writes_report_tables_timing_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"command": "simulate-spectrum", "depth": 2, "sweep": [32], "trials": 2, "seed": 5, "output_dir": "out"}"#,
    );
    let (report, files) = run(&cfg, &RunOptions::default()).unwrap();
    assert!(report.pass);
    // A relative output_dir resolves against the config's directory.
    assert_eq!(files.report, dir.path().join("out/simulate-spectrum_report.json"));
    assert!(files.timing.exists());
    assert!(files.plot_script.as_ref().is_some_and(|p| p.exists()));
    for t in &files.tables {
        let text = fs::read_to_string(t).unwrap();
        assert!(text.lines().count() > 1, "{t:?} is empty");
    }
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&files.report).unwrap()).unwrap();
    assert_eq!(json["command"], "simulate-spectrum");
    assert_eq!(json["seed"], 5);
    assert!(json.get("wall_clock_seconds").is_none());
}

#[test]
fn reruns_are_byte_identical_and_overrides_apply() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"command": "verify-freeness", "depth": 1, "sweep": [16, 32], "trials": 3, "seed": 9,
            "words": ["W1 D1^2 W1t D1^2"], "control_words": []}"#,
    );
    let read_all = |out: &Path| -> Vec<(String, Vec<u8>)> {
        let mut v: Vec<_> = fs::read_dir(out)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| !p.to_string_lossy().ends_with("_timing.json"))
            .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
            .collect();
        v.sort();
        v
    };
    let opts = |sub: &str, seed: Option<u64>| RunOptions { output_dir: Some(dir.path().join(sub)), seed };
    run(&cfg, &opts("a", None)).unwrap();
    run(&cfg, &opts("b", None)).unwrap();
    let (reseeded, _) = run(&cfg, &opts("c", Some(10))).unwrap();
    assert_eq!(reseeded.seed, 10);
    assert_eq!(read_all(&dir.path().join("a")), read_all(&dir.path().join("b")));
    assert_ne!(read_all(&dir.path().join("a")), read_all(&dir.path().join("c")));
}

#[test]
fn prediction_tables_have_the_documented_header() {
    let cfg = ExperimentConfig::from_json(
        r#"{"command": "predict-vs-empirical", "depth": 2, "sweep": [32, 64], "trials": 2, "moment_order": 3}"#,
    )
    .unwrap();
    let report = execute(&cfg).unwrap();
    for name in ["jacobian", "fim"] {
        let t = report.table(name).unwrap();
        let csv = t.to_csv().unwrap();
        assert_eq!(csv.lines().next().unwrap(), "layer,k,empirical,theory,rel_err");
        // One row per (layer, k) at the largest width.
        assert_eq!(csv.lines().count(), 1 + 2 * 3);
    }
    assert!(report.table("detail").is_some());
}

#[test]
fn theory_profile_is_closed_form_for_relu() {
    let cfg = ExperimentConfig::from_json(r#"{"command": "theory-profile", "depth": 3, "sigma_w": 1.4142135623730951}"#)
        .unwrap();
    let report = execute(&cfg).unwrap();
    let t = report.table("profile").unwrap();
    let q = t.column_index("q").unwrap();
    let csv = t.to_csv().unwrap();
    for line in csv.lines().skip(2) {
        let v: f64 = line.split(',').nth(q).unwrap().parse().unwrap();
        assert!((v - 2.0).abs() < 1e-12, "{line}");
    }
}

#[test]
fn invariance_defaults_pass() {
    let cfg = ExperimentConfig::from_json(r#"{"command": "verify-invariance"}"#).unwrap();
    let report = execute(&cfg).unwrap();
    assert!(report.pass, "{:?}", report.failures);
}

#[test]
fn tight_tolerance_fails_with_reasons() {
    let cfg = ExperimentConfig::from_json(
        r#"{"command": "gaussian-propagation", "depth": 1, "sweep": [32, 64], "trials": 2, "tolerances": {"ks": 1e-9}}"#,
    )
    .unwrap();
    let r = execute(&cfg);
    assert_eq!(exit_code(&r, |r| r.pass), EXIT_FAIL);
    assert!(!r.unwrap().failures.is_empty());
}

#[test]
fn exit_codes_follow_error_kinds() {
    assert_eq!(exit_code(&Ok::<_, Error>(true), |&b| b), EXIT_PASS);
    assert_eq!(error_exit_code(&Error::Config("x".into())), EXIT_CONFIG);
    assert_eq!(error_exit_code(&Error::InvalidArgument("x".into())), EXIT_CONFIG);
    assert_eq!(error_exit_code(&Error::ZeroVector), EXIT_NUMERICAL);
    assert_eq!(error_exit_code(&Error::NonInvertibleSeries(0.0)), EXIT_NUMERICAL);
    let missing = run(Path::new("/nonexistent/config.json"), &RunOptions::default());
    assert_eq!(exit_code(&missing, |r| r.0.pass), EXIT_CONFIG);
}

#[test]
fn plot_script_refuses_an_empty_report() {
    let cfg = ExperimentConfig::from_json(r#"{"command": "theory-profile", "depth": 2}"#).unwrap();
    let mut report = execute(&cfg).unwrap();
    assert!(plot_script(&report).unwrap().contains("matplotlib"));
    report.table_data.clear();
    assert!(matches!(plot_script(&report), Err(Error::InvalidArgument(_))));
}
