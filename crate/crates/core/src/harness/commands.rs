use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, SweepMode};
use super::output::{CsvTable, OutputSet};
use crate::costs::{hsta_density, sta_cost_density, QuadratureOptions, StrokeContext};
use crate::error::{Error, Result};
use crate::optimizer::{
    run_ensemble, Candidate, CostMetric, EnsembleConfig, EnsembleOutcome, PassSummary, RestartFailure, StrokeCosts,
    TrainingSchedule,
};
use crate::profiles::io::ProfileDocument;
use crate::profiles::{
    boundary_residuals, postprocess_stretch_smooth, AnyProfile, BoundaryResiduals, Endpoints, PolynomialAnsatz,
    ProfileModel, Reversed, TabulatedProfile,
};
use crate::thermo::{
    adiabatic_efficiency_closed_form, carnot_efficiency, heat_extracted, sudden_quench_benchmark, work_compression,
    work_expansion, CycleParams, CycleReport,
};

/// Largest boundary residual accepted from a profile that claims to be a
/// valid stroke.
pub const BOUNDARY_TOLERANCE: f64 = 1e-10;

pub const BEST_PROFILE_FILE: &str = "optimize/best_profile.json";

/// A ramp judged under both cost metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileEvaluation {
    pub residuals: BoundaryResiduals,
    pub costs: StrokeCosts,
    /// Schmidt-norm energetics.
    pub cycle: CycleReport,
    /// W1 + W3 + ⟨H_STA⟩ over both strokes.
    pub hsta_input_energy: f64,
    /// Q4 / (W1 + W3 + ⟨H_STA⟩); negative when that energy is.
    pub eps_hsta: f64,
}

pub fn evaluate_profile(
    profile: &impl ProfileModel,
    params: &CycleParams,
    quadrature: &QuadratureOptions,
) -> Result<ProfileEvaluation> {
    let residuals = boundary_residuals(profile, &Endpoints::compression(params));
    let costs = StrokeCosts::evaluate(profile, params, quadrature)?;
    let cycle = CycleReport::assemble(params, costs.c_ab.value, costs.c_cd.value)?;
    let hsta_input_energy = cycle.w1 + cycle.w3 + costs.hsta_ab.value + costs.hsta_cd.value;
    Ok(ProfileEvaluation {
        residuals,
        costs,
        cycle,
        hsta_input_energy,
        eps_hsta: cycle.q4 / hsta_input_energy,
    })
}

/// `t, ω, ω̇, ω̈, Ω², cost rates` of both strokes on `ts`; the expansion
/// columns belong to the time-reversed ramp at the same `t`.
pub fn profile_trace(profile: &impl ProfileModel, params: &CycleParams, ts: &[f64]) -> CsvTable {
    let (cc, ce) = (StrokeContext::compression(params), StrokeContext::expansion(params));
    let rev = Reversed(profile);
    let mut table = CsvTable::new(
        "t: time; omega, omega_dot, omega_ddot: compression ramp and its derivatives; \
         omega_eff_sq: effective trap frequency squared; density_ab, density_cd: Schmidt-norm cost rates \
         of the compression and expansion strokes; hsta_density_ab: signed H_STA rate",
        vec![
            "t",
            "omega",
            "omega_dot",
            "omega_ddot",
            "omega_eff_sq",
            "density_ab",
            "density_cd",
            "hsta_density_ab",
        ],
    );
    for (j, jr) in profile.jets(ts).iter().zip(rev.jets(ts)) {
        table.push_values(&[
            j.t,
            j.omega,
            j.domega,
            j.ddomega,
            j.effective_frequency_sq().omega_sq,
            sta_cost_density(j, &cc),
            sta_cost_density(&jr, &ce),
            hsta_density(j, &cc),
        ]);
    }
    table
}

fn training_trace(outcome: &EnsembleOutcome) -> CsvTable {
    let mut table = CsvTable::new(
        "restart: restart index; pass: zero-based pass; step: update count within the pass; \
         cf: penalty objective (empty where it was not finite)",
        vec!["restart", "pass", "step", "cf"],
    );
    let mut rows: Vec<_> = outcome.candidates.iter().flat_map(|c| c.trace.iter()).collect();
    rows.sort_by_key(|r| (r.restart, r.pass, r.step));
    for r in rows {
        let cf = r.cf.is_finite().then_some(r.cf);
        table.push(vec![
            Some(r.restart as f64),
            Some(r.pass as f64),
            Some(r.step as f64),
            cf,
        ]);
    }
    table
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateReport {
    pub params: CycleParams,
    pub profile_kind: String,
    pub evaluation: ProfileEvaluation,
}

fn kind_name(p: &AnyProfile) -> &'static str {
    match p {
        AnyProfile::Constant(_) => "constant",
        AnyProfile::Polynomial(_) => "polynomial",
        AnyProfile::SmoothedRamp(_) => "smoothed_ramp",
        AnyProfile::Neural(_) => "neural",
        AnyProfile::Corrected(_) => "corrected",
        AnyProfile::Tabulated(_) => "tabulated",
    }
}

/// Energetics and traces of the configured ramp.
pub fn cmd_evaluate(cfg: &ExperimentConfig) -> Result<(EvaluateReport, Vec<PathBuf>)> {
    cfg.validate()?;
    cfg.params.require_cooling_window()?;
    let profile = match cfg.static_profile()? {
        Some(p) => p,
        None => AnyProfile::Tabulated(optimize_ensemble(cfg)?.best().profile.clone()),
    };
    boundary_residuals(&profile, &Endpoints::compression(&cfg.params)).require(BOUNDARY_TOLERANCE)?;
    let evaluation = evaluate_profile(&profile, &cfg.params, &cfg.quadrature)?;
    let report = EvaluateReport {
        params: cfg.params,
        profile_kind: kind_name(&profile).into(),
        evaluation,
    };
    let ts = cfg.quadrature.grid(cfg.params.tau)?.nodes().to_vec();
    let dir = cfg.output_dir.join("evaluate");
    let mut out = OutputSet::default();
    out.json(dir.join("report.json"), &report)?;
    out.csv(dir.join("trace.csv"), &profile_trace(&profile, &cfg.params, &ts));
    Ok((report, out.write()?))
}

fn optimize_ensemble(cfg: &ExperimentConfig) -> Result<EnsembleOutcome> {
    cfg.params.require_cooling_window()?;
    let problem = cfg.problem(cfg.params, CostMetric::Schmidt);
    run_ensemble(&cfg.ensemble, &cfg.schedule, &problem)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSummary {
    pub restart: usize,
    pub selection: f64,
    pub c_ab: f64,
    pub c_cd: f64,
    pub raw_residual_max: f64,
    pub residual_max: f64,
    pub min_omega_sq: f64,
    pub trap_inverted: bool,
}

impl CandidateSummary {
    fn of(c: &Candidate) -> Self {
        Self {
            restart: c.restart,
            selection: c.selection,
            c_ab: c.costs.c_ab.value,
            c_cd: c.costs.c_cd.value,
            raw_residual_max: c.raw_residuals.max_abs(),
            residual_max: c.residuals.max_abs(),
            min_omega_sq: c.costs.min_omega_sq,
            trap_inverted: c.costs.trap_inverted,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeReport {
    pub params: CycleParams,
    pub ensemble: EnsembleConfig,
    pub schedule: TrainingSchedule,
    pub best_restart: usize,
    pub best: ProfileEvaluation,
    pub best_raw_residuals: BoundaryResiduals,
    pub best_passes: Vec<PassSummary>,
    pub benchmark: ProfileEvaluation,
    /// ⟨C_AB⟩ of the best ramp over that of the benchmark polynomial.
    pub c_ab_ratio: f64,
    pub candidates: Vec<CandidateSummary>,
    pub failures: Vec<RestartFailure>,
}

/// Trains the configured ensemble and writes its best ramp, a report and
/// the training traces.
pub fn cmd_optimize(cfg: &ExperimentConfig) -> Result<(OptimizeReport, Vec<PathBuf>)> {
    cfg.validate()?;
    let outcome = optimize_ensemble(cfg)?;
    let best = outcome.best();
    let evaluation = evaluate_profile(&best.profile, &cfg.params, &cfg.quadrature)?;
    let poly = PolynomialAnsatz::benchmark(Endpoints::compression(&cfg.params));
    let benchmark = evaluate_profile(&poly, &cfg.params, &cfg.quadrature)?;
    let report = OptimizeReport {
        params: cfg.params,
        ensemble: cfg.ensemble,
        schedule: cfg.schedule.clone(),
        best_restart: best.restart,
        c_ab_ratio: evaluation.costs.c_ab.value / benchmark.costs.c_ab.value,
        best: evaluation,
        best_raw_residuals: best.raw_residuals,
        best_passes: best.passes.clone(),
        benchmark,
        candidates: outcome.candidates.iter().map(CandidateSummary::of).collect(),
        failures: outcome.failures.clone(),
    };
    let mut out = OutputSet::default();
    let doc = ProfileDocument::neural_with_table(&best.raw, &best.profile);
    out.text(cfg.output_dir.join(BEST_PROFILE_FILE), doc.to_json()?);
    out.json(cfg.output_dir.join("optimize/report.json"), &report)?;
    out.csv(
        cfg.output_dir.join("optimize/training_trace.csv"),
        &training_trace(&outcome),
    );
    Ok((report, out.write()?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub tau: f64,
    pub chi_nn: Option<f64>,
    pub chi_poly: Option<f64>,
    pub chi_na: Option<f64>,
    pub eps_nn: Option<f64>,
    pub eps_poly: Option<f64>,
    pub eps_ad: f64,
    pub c_ab_nn: Option<f64>,
    pub c_ab_poly: Option<f64>,
    /// Why a cell is empty, per column group.
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub params: CycleParams,
    pub mode: SweepMode,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn table(&self) -> CsvTable {
        let mut t = CsvTable::new(
            "tau: stroke time; chi_*: figure of merit of the trained network, the benchmark polynomial and \
             the sudden quench; eps_*: cooling efficiency; eps_ad: adiabatic efficiency; empty cells mark \
             failed points",
            vec!["tau", "chi_nn", "chi_poly", "chi_na", "eps_nn", "eps_poly", "eps_ad"],
        );
        for r in &self.rows {
            t.push(vec![
                Some(r.tau),
                r.chi_nn,
                r.chi_poly,
                r.chi_na,
                r.eps_nn,
                r.eps_poly,
                Some(r.eps_ad),
            ]);
        }
        t
    }
}

fn sweep_row(tau: f64, params: &CycleParams, quadrature: &QuadratureOptions, nn: Result<TabulatedProfile>) -> SweepRow {
    let p = params.with_tau(tau);
    let mut errors = Vec::new();
    let mut note = |what: &str, e: &Error| errors.push(format!("{what}: {e}"));
    let nn = nn.and_then(|table| evaluate_profile(&table, &p, quadrature));
    let poly = evaluate_profile(&PolynomialAnsatz::benchmark(Endpoints::compression(&p)), &p, quadrature);
    let na = sudden_quench_benchmark(&p);
    let pick = |r: &Result<ProfileEvaluation>, f: fn(&ProfileEvaluation) -> f64| r.as_ref().ok().map(f);
    let row = SweepRow {
        tau,
        chi_nn: pick(&nn, |e| e.cycle.chi),
        chi_poly: pick(&poly, |e| e.cycle.chi),
        chi_na: na.as_ref().ok().map(|r| r.chi),
        eps_nn: pick(&nn, |e| e.cycle.eps),
        eps_poly: pick(&poly, |e| e.cycle.eps),
        eps_ad: adiabatic_efficiency_closed_form(p.omega1, p.omega2),
        c_ab_nn: pick(&nn, |e| e.costs.c_ab.value),
        c_ab_poly: pick(&poly, |e| e.costs.c_ab.value),
        errors: Vec::new(),
    };
    if let Err(e) = &nn {
        note("nn", e);
    }
    if let Err(e) = &poly {
        note("poly", e);
    }
    if let Err(e) = &na {
        note("na", e);
    }
    SweepRow { errors, ..row }
}

/// The trained shape to rescale in reuse mode: the configured checkpoint
/// if there is one, otherwise a fresh ensemble at the configured τ.
fn reuse_base(cfg: &ExperimentConfig) -> Result<TabulatedProfile> {
    match cfg.static_profile()? {
        Some(AnyProfile::Tabulated(t)) => Ok(t),
        Some(AnyProfile::Neural(n)) => {
            postprocess_stretch_smooth(&n, Endpoints::compression(&cfg.params), &cfg.postprocess)
        }
        _ => {
            let problem = cfg.problem(cfg.params, CostMetric::Schmidt);
            let ensemble = EnsembleConfig {
                n_restarts: cfg.sweep.restarts,
                ..cfg.ensemble
            };
            Ok(run_ensemble(&ensemble, &cfg.sweep.schedule, &problem)?
                .best()
                .profile
                .clone())
        }
    }
}

/// Figure of merit and efficiency of the three strategies over the τ grid.
pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<(SweepReport, Vec<PathBuf>)> {
    cfg.validate()?;
    cfg.params.require_cooling_window()?;
    let ensemble = EnsembleConfig {
        n_restarts: cfg.sweep.restarts,
        ..cfg.ensemble
    };
    let base = match cfg.sweep.mode {
        SweepMode::Reuse => Some(reuse_base(cfg)?),
        SweepMode::PerTau => None,
    };
    let rows: Vec<SweepRow> = cfg
        .sweep
        .taus
        .par_iter()
        .map(|&tau| {
            let nn = match &base {
                Some(b) => b.rescaled(tau),
                None => {
                    let problem = cfg.problem(cfg.params.with_tau(tau), CostMetric::Schmidt);
                    run_ensemble(&ensemble, &cfg.sweep.schedule, &problem).map(|o| o.best().profile.clone())
                }
            };
            sweep_row(tau, &cfg.params, &cfg.quadrature, nn)
        })
        .collect();
    let report = SweepReport {
        params: cfg.params,
        mode: cfg.sweep.mode,
        rows,
    };
    let mut out = OutputSet::default();
    out.csv(cfg.output_dir.join("sweep/sweep.csv"), &report.table());
    out.json(cfg.output_dir.join("sweep/report.json"), &report)?;
    Ok((report, out.write()?))
}

/// One ramp examined by the audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub restart: usize,
    /// Pass whose end point this is; `None` for the post-processed ramp.
    pub pass: Option<usize>,
    pub evaluation: ProfileEvaluation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundVerdicts {
    /// 0 < ε under the Schmidt-norm metric.
    pub eps_positive: bool,
    pub eps_below_adiabatic: bool,
    pub adiabatic_below_carnot: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub params: CycleParams,
    pub q4: f64,
    pub w1_plus_w3: f64,
    pub eps_ad: f64,
    pub eps_c: f64,
    /// The examined ramp with the lowest W1 + W3 + ⟨H_STA⟩.
    pub selected: Option<AuditEntry>,
    /// Q4 > 0 together with W1 + W3 + ⟨H_STA⟩ < 0 for the selected ramp.
    pub violation_found: bool,
    pub verdicts: Option<BoundVerdicts>,
    /// The post-processed ramp of the selected restart. Exact boundary
    /// conditions make ⟨H_STA⟩ a sum of squares, so it cannot violate.
    pub post_processed: Option<AuditEntry>,
    pub examined: usize,
    pub skipped: Vec<String>,
}

/// Trains against ⟨H_STA⟩ and looks for a ramp on which that metric makes
/// the input energy negative while heat is still extracted.
pub fn cmd_audit(cfg: &ExperimentConfig) -> Result<(AuditReport, Vec<PathBuf>)> {
    cfg.validate()?;
    let params = cfg.audit.params;
    params.require_cooling_window()?;
    let problem = cfg.problem(params, CostMetric::Hsta);
    let outcome = run_ensemble(&cfg.audit.ensemble, &cfg.audit.schedule, &problem)?;
    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    for c in &outcome.candidates {
        for (k, theta) in c.checkpoints.iter().enumerate() {
            match evaluate_profile(&c.raw.with_theta(theta), &params, &cfg.quadrature) {
                Ok(evaluation) => entries.push(AuditEntry {
                    restart: c.restart,
                    pass: Some(k),
                    evaluation,
                }),
                Err(e) => skipped.push(format!("restart {} pass {k}: {e}", c.restart)),
            }
        }
    }
    let examined = entries.len();
    let selected = entries.into_iter().min_by(|a, b| {
        let key = |e: &AuditEntry| e.evaluation.hsta_input_energy;
        key(a).total_cmp(&key(b))
    });
    let q4 = heat_extracted(&params);
    let post_processed = match &selected {
        Some(s) => {
            let c = outcome
                .candidates
                .iter()
                .find(|c| c.restart == s.restart)
                .expect("selected restart is a candidate");
            Some(AuditEntry {
                restart: c.restart,
                pass: None,
                evaluation: evaluate_profile(&c.profile, &params, &cfg.quadrature)?,
            })
        }
        None => None,
    };
    let eps_ad = adiabatic_efficiency_closed_form(params.omega1, params.omega2);
    let eps_c = carnot_efficiency(params.beta1, params.beta2)?;
    let verdicts = selected.as_ref().map(|s| {
        let eps = s.evaluation.cycle.eps;
        BoundVerdicts {
            eps_positive: eps > 0.0,
            eps_below_adiabatic: eps <= eps_ad,
            adiabatic_below_carnot: eps_ad <= eps_c,
        }
    });
    let report = AuditReport {
        params,
        q4,
        w1_plus_w3: work_compression(&params) + work_expansion(&params),
        eps_ad,
        eps_c,
        violation_found: selected
            .as_ref()
            .is_some_and(|s| q4 > 0.0 && s.evaluation.hsta_input_energy < 0.0),
        verdicts,
        selected,
        post_processed,
        examined,
        skipped,
    };
    let mut out = OutputSet::default();
    out.json(cfg.output_dir.join("audit/report.json"), &report)?;
    if let Some(s) = &report.selected {
        let c = outcome
            .candidates
            .iter()
            .find(|c| c.restart == s.restart)
            .expect("candidate");
        let net = c.raw.with_theta(&c.checkpoints[s.pass.expect("raw entry")]);
        let doc = ProfileDocument::from_profile(&AnyProfile::Neural(net));
        out.text(cfg.output_dir.join("audit/profile.json"), doc.to_json()?);
    }
    Ok((report, out.write()?))
}

/// Re-emits the stored best ramp with plot-ready traces on the quadrature
/// grid.
pub fn cmd_export(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    cfg.params.validate()?;
    let source = cfg.output_dir.join(BEST_PROFILE_FILE);
    if !source.is_file() {
        return Err(Error::NothingToExport(source));
    }
    let doc = ProfileDocument::load(&source)?;
    let ep = doc.endpoints()?;
    let params = CycleParams {
        tau: ep.tau,
        ..cfg.params
    };
    if (params.omega1, params.omega2) != (ep.omega1, ep.omega2) {
        return Err(Error::Config(format!(
            "stored profile runs {} -> {}, config has {} -> {}",
            ep.omega1, ep.omega2, params.omega1, params.omega2
        )));
    }
    let profile = doc.to_profile()?;
    let ts = cfg.quadrature.grid(ep.tau)?.nodes().to_vec();
    let dir = export_dir(&cfg.output_dir);
    let mut out = OutputSet::default();
    out.text(dir.join("profile.json"), doc.to_json()?);
    out.csv(dir.join("profile_trace.csv"), &profile_trace(&profile, &params, &ts));
    out.write()
}

pub fn export_dir(out: &Path) -> PathBuf {
    out.join("export")
}
