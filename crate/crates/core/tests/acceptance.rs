//! Acceptance run: one line per criterion, nonzero exit if any hard check
//! fails. Pass criterion numbers after `--` to run a subset.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use otto_sta::costs::{ermakov_residual, QuadratureGrid, StrokeContext};
use otto_sta::diffengine::fd_check;
use otto_sta::harness::{cmd_audit, cmd_optimize, cmd_sweep, ExperimentConfig, OptimizeReport, SweepMode};
use otto_sta::optimizer::{init_parameters, PenaltyWeights, TrainingProblem, TrainingSchedule};
use otto_sta::profiles::{
    Architecture, CorrectedProfile, Endpoints, NeuralProfile, PolynomialAnsatz, ProfileModel, SmoothedRampAnsatz,
};
use otto_sta::thermo::{
    adiabatic_efficiency_closed_form, carnot_efficiency, heat_extracted, work_compression, work_expansion, CycleParams,
};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "met"
    } else {
        "missed"
    }
}

fn random_params(rng: &mut ChaCha8Rng) -> CycleParams {
    let omega1 = rng.random_range(0.05..1.0);
    let omega2 = omega1 * rng.random_range(1.05..4.0);
    let beta1 = rng.random_range(0.5..3.0);
    let beta2 = beta1 * rng.random_range(0.2..0.95);
    let tau = rng.random_range(1.0..12.0);
    CycleParams::new(omega1, omega2, beta1, beta2, tau).unwrap()
}

fn random_window_params(rng: &mut ChaCha8Rng) -> CycleParams {
    loop {
        let p = random_params(rng);
        if p.in_cooling_window() {
            return p;
        }
    }
}

fn c1_closed_forms() -> Verdict {
    let carnot = carnot_efficiency(1.0, 0.75).unwrap();
    let carnot_ok = carnot == 3.0;
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let p = random_window_params(&mut rng);
        let q4 = heat_extracted(&p);
        let ratio = q4 / (work_compression(&p) + work_expansion(&p));
        let closed = adiabatic_efficiency_closed_form(p.omega1, p.omega2);
        worst = worst.max((ratio - closed).abs() / closed);
    }
    let mut sign_mismatches = 0;
    for _ in 0..1000 {
        let p = random_params(&mut rng);
        if (heat_extracted(&p) > 0.0) != (p.beta1 * p.omega1 < p.beta2 * p.omega2) {
            sign_mismatches += 1;
        }
    }
    let pass = carnot_ok && worst < 1e-12 && sign_mismatches == 0;
    verdict(
        pass,
        format!(
            "eps_C = {carnot}; max rel err eps_ad {worst:.2e} (< 1e-12); Q4 sign mismatches {sign_mismatches}/1000"
        ),
    )
}

fn optimize_report() -> &'static OptimizeReport {
    static REPORT: OnceLock<OptimizeReport> = OnceLock::new();
    REPORT.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            params: CycleParams::reference(6.0),
            output_dir: dir.path().to_path_buf(),
            ..ExperimentConfig::default()
        };
        assert_eq!(cfg.ensemble.n_restarts, 32);
        cmd_optimize(&cfg).unwrap().0
    })
}

fn c2_beats_benchmark() -> Verdict {
    let r = optimize_report();
    let ratio = r.c_ab_ratio;
    verdict(
        ratio < 1.0,
        format!(
            "best C_AB {:.6} vs benchmark {:.6}, ratio {ratio:.4} (hard < 1); target <= 0.75 {}; stretch <= 0.5 {}",
            r.best.costs.c_ab.value,
            r.benchmark.costs.c_ab.value,
            mark(ratio <= 0.75),
            mark(ratio <= 0.5)
        ),
    )
}

fn c3_sweep() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig {
        output_dir: dir.path().to_path_buf(),
        ..ExperimentConfig::default()
    };
    cfg.sweep.taus = (2..=12).map(f64::from).collect();
    cfg.sweep.mode = SweepMode::PerTau;
    let report = cmd_sweep(&cfg).unwrap().0;
    let mut chi_everywhere = true;
    let mut max_ratio = f64::NEG_INFINITY;
    let mut below = true;
    let mut eps_nn = Vec::new();
    let mut eps_poly = Vec::new();
    for row in &report.rows {
        match (row.chi_nn, row.chi_poly, row.eps_nn, row.eps_poly) {
            (Some(cn), Some(cp), Some(en), Some(ep)) => {
                chi_everywhere &= cn >= cp;
                max_ratio = max_ratio.max(cn / cp);
                below &= en < row.eps_ad && ep < row.eps_ad;
                eps_nn.push(en);
                eps_poly.push(ep);
            }
            _ => {
                chi_everywhere = false;
                below = false;
            }
        }
    }
    let rising = |v: &[f64]| v.windows(2).all(|w| w[1] >= w[0]);
    let last = report.rows.last().unwrap();
    let gap = |e: Option<f64>| e.map_or(f64::INFINITY, |e| (last.eps_ad - e) / last.eps_ad);
    let (gap_nn, gap_poly) = (gap(last.eps_nn), gap(last.eps_poly));
    let approach = below && rising(&eps_nn) && rising(&eps_poly) && gap_nn <= 0.05 && gap_poly <= 0.05;
    let pass = chi_everywhere && max_ratio >= 1.5 && approach;
    verdict(
        pass,
        format!(
            "chi_nn >= chi_poly at all {} points: {chi_everywhere}; max ratio {max_ratio:.3} (>= 1.5; soft 2.0 {}); \
             eps below eps_ad and rising: {}; gap at tau=12 nn {gap_nn:.3}, poly {gap_poly:.3} (<= 0.05)",
            report.rows.len(),
            mark(max_ratio >= 2.0),
            below && rising(&eps_nn) && rising(&eps_poly),
        ),
    )
}

fn c4_audit() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        output_dir: dir.path().to_path_buf(),
        ..ExperimentConfig::default()
    };
    let r = cmd_audit(&cfg).unwrap().0;
    let Some(sel) = &r.selected else {
        return verdict(false, format!("no ramp examined; skipped: {:?}", r.skipped));
    };
    let e = &sel.evaluation;
    let eps = e.cycle.eps;
    let bounds = 0.0 < eps && eps <= r.eps_ad && r.eps_ad <= r.eps_c;
    let pass = r.violation_found && bounds;
    verdict(
        pass,
        format!(
            "Q4 {:.4e}, W1+W3+H_STA {:.4e} (< 0 with Q4 > 0: {}); eps under C {eps:.4} with eps_ad {:.4}, \
             eps_C {:.4} (bounds {}); eps within 50% of 0.47 {}",
            r.q4,
            e.hsta_input_energy,
            r.violation_found,
            r.eps_ad,
            r.eps_c,
            if bounds { "hold" } else { "broken" },
            mark((eps - 0.47).abs() <= 0.5 * 0.47)
        ),
    )
}

fn positive(p: &impl ProfileModel, grid: &QuadratureGrid) -> bool {
    p.jets(grid.nodes()).iter().all(|j| j.omega > 0.0)
}

fn c5_ermakov() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut worst: BTreeMap<&str, f64> = BTreeMap::new();
    for _ in 0..10 {
        let p = random_params(&mut rng);
        let ep = Endpoints::compression(&p);
        let ctx = StrokeContext::compression(&p);
        let grid = QuadratureGrid::new(p.tau, 2049).unwrap();
        let mut record = |name, r: f64| {
            let w = worst.entry(name).or_insert(0.0);
            *w = w.max(r);
        };
        let alpha = loop {
            let mut a = vec![10.0, -15.0, 6.0, 0.0, 0.0];
            a.iter_mut().for_each(|x| *x += rng.random_range(-0.5..0.5));
            let trial = PolynomialAnsatz::new(a.clone(), ep).unwrap();
            if positive(&trial, &grid) {
                break a;
            }
        };
        let poly = PolynomialAnsatz::new(alpha, ep).unwrap();
        record("polynomial", ermakov_residual(&poly, &ctx, &grid));
        if let Ok(corrected) = CorrectedProfile::new(poly, ep, 0.05 * p.tau) {
            record("polynomial_postprocessed", ermakov_residual(&corrected, &ctx, &grid));
        }
        let t1 = rng.random_range(0.15..0.4) * p.tau;
        let t2 = rng.random_range(0.6..0.85) * p.tau;
        let sigma = rng.random_range(0.02..0.1) * p.tau;
        let ramp = SmoothedRampAnsatz::new(t1, t2, sigma, ep).unwrap();
        record("smoothed_ramp", ermakov_residual(&ramp, &ctx, &grid));
        let arch = Architecture::default();
        let theta = init_parameters(&mut rng, &arch);
        let net = NeuralProfile::new(arch, theta, ep).unwrap();
        assert!(positive(&net, &grid));
        record("neural", ermakov_residual(&net, &ctx, &grid));
    }
    let pass = worst.values().all(|&r| r < 1e-8);
    let detail = worst
        .iter()
        .map(|(k, v)| format!("{k} {v:.2e}"))
        .collect::<Vec<_>>()
        .join(", ");
    verdict(pass, format!("max residual over 10 configs: {detail} (< 1e-8)"))
}

fn c6_gradients() -> Verdict {
    let problem = TrainingProblem {
        architecture: Architecture::reduced(2, 8),
        ..TrainingProblem::new(CycleParams::reference(6.0))
    };
    let schedule = TrainingSchedule::default();
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut worst = 0.0f64;
    let mut flagged = 0;
    for k in 0..50 {
        let weights: PenaltyWeights = schedule.pass_weights(k % schedule.passes);
        let obj = problem.objective(weights).unwrap();
        let theta = init_parameters(&mut rng, &problem.architecture);
        // Near ε^(1/5), the roundoff/truncation balance of the fourth-order stencil.
        let r = fd_check(&obj, &theta, 1e-3).unwrap();
        worst = worst.max(r.max_deviation);
        flagged += r.kink_flagged.len();
    }
    verdict(
        worst < 1e-5,
        format!(
            "max relative deviation {worst:.2e} over 50 parameter draws, step 1e-3 (< 1e-5); \
             {flagged} kink components excluded"
        ),
    )
}

fn c7_constraints() -> Verdict {
    let r = optimize_report();
    let worst = r.candidates.iter().map(|c| c.residual_max).fold(0.0, f64::max);
    let inverted = r.candidates.iter().filter(|c| c.trap_inverted).count();
    let min_sq = r
        .candidates
        .iter()
        .map(|c| c.min_omega_sq)
        .fold(f64::INFINITY, f64::min);
    let reported = r.candidates.iter().all(|c| c.min_omega_sq.is_finite());
    verdict(
        worst < 1e-10 && reported && !r.candidates.is_empty(),
        format!(
            "{} post-processed ramps, max residual {worst:.2e} (< 1e-10); min Omega^2 {min_sq:.4e}; \
             trap inversion flagged on {inverted}",
            r.candidates.len()
        ),
    )
}

fn read_tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn c8_determinism() -> Verdict {
    let base = ExperimentConfig::from_json(
        r#"{"training_points": 129, "ensemble": {"n_restarts": 4, "base_seed": 77},
            "schedule": {"passes": 4, "steps_per_pass": 60}}"#,
    )
    .unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let cfg = ExperimentConfig {
            output_dir: dir.path().to_path_buf(),
            ..base.clone()
        };
        cmd_optimize(&cfg).unwrap();
    }
    let (ta, tb) = (read_tree(a.path()), read_tree(b.path()));
    let same = !ta.is_empty() && ta == tb;
    verdict(
        same,
        format!(
            "{} files compared: {}",
            ta.len(),
            if same { "byte-identical" } else { "differ" }
        ),
    )
}

fn main() {
    let criteria: [(u32, &str, fn() -> Verdict); 8] = [
        (1, "closed-form oracles", c1_closed_forms),
        (2, "optimizer beats benchmark", c2_beats_benchmark),
        (3, "figure-of-merit sweep", c3_sweep),
        (4, "metric-flaw audit", c4_audit),
        (5, "Ermakov witness", c5_ermakov),
        (6, "gradient exactness", c6_gradients),
        (7, "constraint attainment", c7_constraints),
        (8, "determinism", c8_determinism),
    ];
    let selected: Vec<u32> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = Vec::new();
    let mut ran = 0;
    for (n, name, run) in criteria {
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|_| verdict(false, "panicked (see message above)".into()));
        let secs = start.elapsed().as_secs_f64();
        println!(
            "criterion {n} ({name}): {} | {} [{secs:.1}s]",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        if !v.pass {
            failed.push(n);
        }
    }
    println!("acceptance: {}/{ran} passed", ran - failed.len());
    if !failed.is_empty() {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
