use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phasebell")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> serde_json::Value {
    let mut all = args.to_vec();
    all.extend(["--format", "json"]);
    let o = run(&all);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_str(&stdout(&o)).unwrap()
}

fn scaled_at_origin(state: &str) -> f64 {
    json(&["eval", "--state", state])["rows"][0]["scaled"].as_f64().unwrap()
}

#[test]
fn vacuum_and_single_photon_at_origin() {
    assert!((scaled_at_origin(r#"{"kind": "fock", "number": 0}"#) - 1.0).abs() < 1e-12);
    assert!((scaled_at_origin(r#"{"kind": "fock", "number": 1}"#) + 1.0).abs() < 1e-12);
}

#[test]
fn eval_grid_csv_has_a_row_per_point() {
    let o = run(&["eval", "--state", r#"{"kind": "cat", "gamma": 2.0}"#, "--grid", "-3:3:7,-1:1:5"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("# seed=0"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 35);
}

#[test]
fn coherent_state_is_not_nonclassical() {
    let v = json(&[
        "test",
        "--state",
        r#"{"kind": "gaussian", "alpha": [0.7, -0.3]}"#,
        "--geometry",
        r#"{"shape": "rectangle", "base": [-0.2, 0.1, 0.4, 0.5], "theta": 0.3}"#,
    ]);
    assert_eq!(v["nonclassical"], false);
}

#[test]
fn optimally_tested_squeezed_vacuum_is_nonclassical() {
    let v = json(&[
        "test",
        "--state",
        r#"{"kind": "gaussian", "r": 1.0}"#,
        "--geometry",
        r#"{"shape": "rectangle", "optimal": true}"#,
    ]);
    assert_eq!(v["nonclassical"], true);
    assert_eq!(v["genuinely_non_gaussian"], false);
}

#[test]
fn squeezed_vacuum_two_photon_mixture_is_genuinely_non_gaussian() {
    let state = r#"{"kind": "mixture", "components": [
        {"weight": 0.3, "state": {"kind": "fock", "number": 0}},
        {"weight": 0.7, "state": {"kind": "fock", "number": 2}}]}"#;
    let v = json(&[
        "test",
        "--state",
        state,
        "--geometry",
        r#"{"shape": "parallelogram", "squeeze": {"r": 1.0}, "optimal": true}"#,
    ]);
    assert_eq!(v["genuinely_non_gaussian"], true, "{v}");
    assert!(v["nonclassical"].is_null());
}

#[test]
fn spec_errors_exit_with_two() {
    let o = run(&["eval", "--state", r#"{"kind": "gaussian", "r": }"#]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));
    let o = run(&["eval", "--state", r#"{"kind": "fock"}"#]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["eval", "--state", r#"{"kind": "fock", "number": 0}"#, "--s", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn repro_is_deterministic_and_embeds_the_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let o = run(&["repro", "fig9", "--seed", "5", "--output", dir.path().to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("fig9/squeezed_vacuum.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    let text = String::from_utf8(read(&a)).unwrap();
    assert!(text.starts_with("# figure=fig9 seed=5"));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.path().join("fig9/squeezed_vacuum.json")).unwrap()).unwrap();
    assert_eq!(doc["config"]["seed"], 5);
    assert_eq!(doc["data"]["chain_ok"], true);
}

#[test]
fn repro_fig2_reports_the_gaussian_maxima() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["repro", "fig2", "--output", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("fig2/maxima.json")).unwrap()).unwrap();
    let s0 = &doc["data"]["s0"];
    assert!((s0["J_max"].as_f64().unwrap() - 8.0 / 3f64.powf(9.0 / 8.0)).abs() < 1e-4);
    assert!((s0["J_prime_max"].as_f64().unwrap() - 2.0).abs() < 1e-6);
}

#[test]
fn bounds_reports_classical_and_gaussian_values() {
    let v = json(&["bounds", "--s", "0", "--kind", "triangle"]);
    assert_eq!(v["classical_bound"], 1.0);
    assert!((v["gaussian_mixture_bound"].as_f64().unwrap() - 2.0).abs() < 1e-12);
}
