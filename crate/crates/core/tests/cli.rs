use std::process::{Command, Output};

fn otto(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_otto-sta"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn evaluate_prints_summary_and_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = otto(&["evaluate", "--out", out]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("C_AB = 4.6561725292"), "{}", stdout(&o));
    assert!(dir.path().join("evaluate/report.json").is_file());
}

#[test]
fn tau_override_reaches_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = otto(&["evaluate", "--tau", "3", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("evaluate/report.json")).unwrap()).unwrap();
    assert_eq!(report["params"]["tau"], 3.0);
}

#[test]
fn config_file_with_unknown_key_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"tau": 3}"#).unwrap();
    let o = otto(&["evaluate", "--config", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).starts_with("error: "), "{}", stderr(&o));
}

#[test]
fn relative_checkpoint_resolves_next_to_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let small =
        r#"{"training_points": 65, "ensemble": {"n_restarts": 1}, "schedule": {"passes": 4, "steps_per_pass": 30}}"#;
    let cfg = dir.path().join("small.json");
    std::fs::write(&cfg, small).unwrap();
    let o = otto(&[
        "optimize",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let eval_cfg = dir.path().join("eval.json");
    std::fs::write(
        &eval_cfg,
        r#"{"profile": {"kind": "checkpoint", "path": "out/optimize/best_profile.json"}}"#,
    )
    .unwrap();
    let o = otto(&[
        "evaluate",
        "--config",
        eval_cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn export_without_run_explains_itself() {
    let dir = tempfile::tempdir().unwrap();
    let o = otto(&["export", "--out", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("nothing to export"), "{}", stderr(&o));
}
