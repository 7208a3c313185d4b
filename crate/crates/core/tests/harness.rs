use std::path::Path;

use otto_sta::harness::{
    cmd_audit, cmd_evaluate, cmd_export, cmd_optimize, cmd_sweep, ExperimentConfig, ProfileSource, SweepMode,
    BEST_PROFILE_FILE,
};
use otto_sta::profiles::io::ProfileDocument;
use otto_sta::thermo::CycleParams;
use otto_sta::Error;

const SMALL: &str = r#"{
    "training_points": 65,
    "ensemble": {"n_restarts": 2, "base_seed": 3},
    "schedule": {"passes": 4, "steps_per_pass": 40},
    "sweep": {"taus": [3, 6], "restarts": 1, "schedule": {"passes": 4, "steps_per_pass": 30}},
    "audit": {"ensemble": {"n_restarts": 1}, "schedule": {"passes": 2, "steps_per_pass": 30}}
}"#;

fn small(out: &Path) -> ExperimentConfig {
    ExperimentConfig {
        output_dir: out.to_path_buf(),
        ..ExperimentConfig::from_json(SMALL).unwrap()
    }
}

/// Data rows of a CSV written by the harness.
fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# "));
    lines.next().unwrap();
    lines.map(|l| l.split(',').map(str::to_owned).collect()).collect()
}

#[test]
fn evaluate_benchmark_writes_report_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let (r, files) = cmd_evaluate(&small(dir.path())).unwrap();
    let c = &r.evaluation.cycle;
    assert!((c.c_ab - 4.65617252923151).abs() < 1e-9);
    assert!(c.eps < c.eps_ad && c.eps_ad == 0.25);
    assert_eq!(r.profile_kind, "polynomial");
    assert_eq!(files.len(), 2);
    assert_eq!(csv_rows(&dir.path().join("evaluate/trace.csv")).len(), 2049);
}

#[test]
fn constant_profile_fails_boundary_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        profile: ProfileSource::Constant { omega: 0.3 },
        ..small(dir.path())
    };
    assert!(matches!(cmd_evaluate(&cfg), Err(Error::BoundaryViolation { .. })));
    assert!(!dir.path().join("evaluate").exists());
}

#[test]
fn optimize_refuses_closed_window() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        params: CycleParams::new(0.4, 0.5, 1.0, 0.75, 6.0).unwrap(),
        ..small(dir.path())
    };
    assert!(matches!(cmd_optimize(&cfg), Err(Error::OutsideCoolingWindow { .. })));
}

#[test]
fn export_needs_a_prior_run() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(cmd_export(&small(dir.path())), Err(Error::NothingToExport(_))));
}

#[test]
fn optimize_export_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path());
    let (report, _) = cmd_optimize(&cfg).unwrap();
    assert!(report.best.residuals.max_abs() < 1e-10);
    assert_eq!(report.candidates.len() + report.failures.len(), 2);

    let best = std::fs::read_to_string(dir.path().join(BEST_PROFILE_FILE)).unwrap();
    let files = cmd_export(&cfg).unwrap();
    let exported = std::fs::read_to_string(dir.path().join("export/profile.json")).unwrap();
    assert_eq!(best, exported);
    assert_eq!(
        ProfileDocument::from_json(&exported).unwrap().to_json().unwrap(),
        exported
    );
    assert_eq!(csv_rows(&dir.path().join("export/profile_trace.csv")).len(), 2049);

    let first: Vec<_> = files.iter().map(|f| std::fs::read(f).unwrap()).collect();
    let again = cmd_export(&cfg).unwrap();
    let second: Vec<_> = again.iter().map(|f| std::fs::read(f).unwrap()).collect();
    assert_eq!(first, second);

    let from_checkpoint = ExperimentConfig {
        profile: ProfileSource::Checkpoint {
            path: dir.path().join(BEST_PROFILE_FILE),
        },
        ..cfg
    };
    let (r, _) = cmd_evaluate(&from_checkpoint).unwrap();
    assert_eq!(r.profile_kind, "tabulated");
    assert_eq!(r.evaluation.cycle.c_ab, report.best.cycle.c_ab);
}

#[test]
fn checkpoint_for_other_endpoints_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path());
    cmd_optimize(&cfg).unwrap();
    let other = ExperimentConfig {
        params: CycleParams::reference(5.0),
        profile: ProfileSource::Checkpoint {
            path: dir.path().join(BEST_PROFILE_FILE),
        },
        ..cfg
    };
    assert!(matches!(cmd_evaluate(&other), Err(Error::Config(_))));
}

#[test]
fn sweep_modes_fill_every_column() {
    for mode in [SweepMode::Reuse, SweepMode::PerTau] {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small(dir.path());
        cfg.sweep.mode = mode;
        let (r, _) = cmd_sweep(&cfg).unwrap();
        assert_eq!(r.rows.len(), 2);
        for row in &r.rows {
            assert!(row.errors.is_empty(), "{:?}", row.errors);
            let (nn, poly) = (row.eps_nn.unwrap(), row.eps_poly.unwrap());
            assert!(0.0 < nn && nn < row.eps_ad && 0.0 < poly && poly < row.eps_ad);
            assert!(row.chi_na.is_some());
        }
        let text = std::fs::read_to_string(dir.path().join("sweep/sweep.csv")).unwrap();
        assert_eq!(
            text.lines().nth(1).unwrap(),
            "tau,chi_nn,chi_poly,chi_na,eps_nn,eps_poly,eps_ad"
        );
        assert_eq!(csv_rows(&dir.path().join("sweep/sweep.csv")).len(), 2);
    }
}

#[test]
fn polynomial_sweep_scales_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path());
    cfg.sweep.mode = SweepMode::Reuse;
    let (r, _) = cmd_sweep(&cfg).unwrap();
    // The cost of a fixed shape goes as 1/τ².
    let (a, b) = (r.rows[0].c_ab_poly.unwrap(), r.rows[1].c_ab_poly.unwrap());
    assert!((a / b - 4.0).abs() < 1e-8, "{}", a / b);
    let (a, b) = (r.rows[0].c_ab_nn.unwrap(), r.rows[1].c_ab_nn.unwrap());
    assert!((a / b - 4.0).abs() < 1e-6, "{}", a / b);
}

#[test]
fn audit_reports_without_failing() {
    let dir = tempfile::tempdir().unwrap();
    let (r, files) = cmd_audit(&small(dir.path())).unwrap();
    assert_eq!(r.params, CycleParams::audit_reference());
    assert!(r.q4 > 0.0);
    assert!((r.eps_ad - 2.125).abs() < 1e-12 && (r.eps_c - 3.0).abs() < 1e-12);
    assert!(r.examined > 0);
    let sel = r.selected.as_ref().unwrap();
    let v = &r.post_processed.as_ref().unwrap().evaluation;
    assert!(v.residuals.max_abs() < 1e-10);
    assert!(v.hsta_input_energy >= sel.evaluation.hsta_input_energy);
    assert_eq!(r.violation_found, r.q4 > 0.0 && sel.evaluation.hsta_input_energy < 0.0);
    assert!(files.iter().all(|f| f.is_file()));
}
