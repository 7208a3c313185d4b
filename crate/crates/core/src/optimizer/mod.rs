//! Penalty-method training of network ramps.
//!
//! Each restart draws its own initial parameters, then runs a fixed number
//! of Adam passes. Every pass keeps the lowest-objective parameters it saw
//! and hands those to the next; residual weights grow between passes and the
//! ordering weight is switched off for the last one. Trained ramps are
//! post-processed onto the exact boundary conditions and ranked by the
//! energetic cost of both driven strokes.

mod adam;
mod objective;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use adam::{adam_step, AdamConfig, AdamState};
pub use objective::{penalty_objective, Breakdown, CostMetric, PenaltyObjective, PenaltyWeights};

use crate::costs::{hsta_cost, sta_cost, CostEstimate, QuadratureGrid, QuadratureOptions, StrokeContext};
use crate::diffengine::Differentiable;
use crate::error::{Error, Result};
use crate::profiles::{
    boundary_residuals, postprocess_stretch_smooth, scan_trap_inversion, Architecture, BoundaryResiduals, Endpoints,
    NeuralProfile, PostprocessOptions, ProfileModel, Reversed, TabulatedProfile,
};
use crate::thermo::CycleParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingSchedule {
    pub passes: usize,
    pub steps_per_pass: usize,
    /// Weights of the first pass.
    pub initial_weights: PenaltyWeights,
    /// Factor applied to the six residual weights from one pass to the next.
    pub ramp_factor: f64,
    /// Ordering weight used in the last pass.
    pub final_p_delta: f64,
    pub adam: AdamConfig,
}

impl Default for TrainingSchedule {
    fn default() -> Self {
        Self {
            passes: 4,
            steps_per_pass: 300,
            initial_weights: PenaltyWeights::uniform(1.0, 1e3),
            ramp_factor: 10.0,
            final_p_delta: 0.0,
            adam: AdamConfig::default(),
        }
    }
}

impl TrainingSchedule {
    pub fn sweep_default() -> Self {
        Self {
            steps_per_pass: 150,
            ..Self::default()
        }
    }

    pub fn full_fidelity() -> Self {
        Self {
            steps_per_pass: 1000,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.passes == 0 {
            return Err(Error::Config("schedule needs at least one pass".into()));
        }
        if !(self.ramp_factor > 0.0 && self.ramp_factor.is_finite()) {
            return Err(Error::Config(format!(
                "ramp factor must be positive, got {}",
                self.ramp_factor
            )));
        }
        if !(self.final_p_delta >= 0.0 && self.final_p_delta <= self.initial_weights.p_delta) {
            return Err(Error::Config(
                "final ordering weight must lie in [0, initial ordering weight]".into(),
            ));
        }
        self.initial_weights.validate()?;
        self.adam.validate()
    }

    /// Weights of pass `k` (zero-based).
    pub fn pass_weights(&self, k: usize) -> PenaltyWeights {
        let p_delta = if k + 1 == self.passes {
            self.final_p_delta
        } else {
            self.initial_weights.p_delta
        };
        self.initial_weights.ramped(self.ramp_factor.powi(k as i32), p_delta)
    }
}

/// Xavier-normal weights, zero biases.
pub fn init_parameters(rng: &mut ChaCha8Rng, arch: &Architecture) -> Vec<f64> {
    let mut theta = vec![0.0; arch.param_count()];
    for (fan_in, fan_out, w, _) in arch.layer_shapes() {
        let std = (2.0 / (fan_in + fan_out) as f64).sqrt();
        let normal = Normal::new(0.0, std).expect("positive standard deviation");
        for x in &mut theta[w..w + fan_in * fan_out] {
            *x = normal.sample(rng);
        }
    }
    theta
}

/// Everything that evolves while one restart trains.
#[derive(Debug, Clone)]
pub struct TrainerState {
    pub theta: Vec<f64>,
    pub adam: AdamState,
    pub weights: PenaltyWeights,
    pub pass: usize,
    pub step: usize,
    pub seed: u64,
    pub stream: u64,
}

#[derive(Debug, Clone)]
pub struct PassOutcome {
    pub best_theta: Vec<f64>,
    pub best_cf: f64,
    /// Objective before each update, plus the value after the last one.
    pub trace: Vec<f64>,
    /// Set when the pass stopped early on repeated non-finite objectives.
    pub aborted: bool,
}

const MAX_CONSECUTIVE_FAILURES: usize = 3;

/// Runs `steps` Adam updates from `theta` with fresh moments and returns
/// the lowest-objective parameters seen.
///
/// A non-finite objective or gradient returns the parameters to the best
/// point so far and clears the moments; after a few in a row the pass stops.
pub fn train_pass<D: Differentiable + ?Sized>(
    objective: &D,
    theta: &[f64],
    steps: usize,
    adam: AdamConfig,
) -> Result<PassOutcome> {
    let (cf0, mut grad) = objective.value_and_gradient(theta)?;
    if !cf0.is_finite() {
        return Err(Error::NonFiniteObjective {
            term: "initial objective",
        });
    }
    let mut state = AdamState::new(theta.len(), adam);
    let mut current = theta.to_vec();
    let mut best_theta = current.clone();
    let mut best_cf = cf0;
    let mut trace = Vec::with_capacity(steps + 1);
    trace.push(cf0);
    let mut failures = 0;
    let mut aborted = false;
    for _ in 0..steps {
        if adam_step(&mut state, &mut current, &grad).is_err() {
            failures += 1;
        } else {
            match objective.value_and_gradient(&current) {
                Ok((cf, g)) if cf.is_finite() => {
                    trace.push(cf);
                    if cf < best_cf {
                        best_cf = cf;
                        best_theta.copy_from_slice(&current);
                    }
                    grad = g;
                    failures = 0;
                    continue;
                }
                _ => failures += 1,
            }
        }
        trace.push(f64::NAN);
        if failures >= MAX_CONSECUTIVE_FAILURES {
            aborted = true;
            break;
        }
        current.copy_from_slice(&best_theta);
        state.reset();
        grad = objective.gradient(&current)?;
    }
    Ok(PassOutcome {
        best_theta,
        best_cf,
        trace,
        aborted,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleConfig {
    pub n_restarts: usize,
    pub base_seed: u64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            n_restarts: 32,
            base_seed: 2024,
        }
    }
}

impl EnsembleConfig {
    /// The restart's generator: the base seed selects the key, the restart
    /// index the stream.
    pub fn rng(&self, restart: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.base_seed);
        rng.set_stream(restart as u64);
        rng
    }
}

/// What is being optimized, independent of how hard.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingProblem {
    pub params: CycleParams,
    #[serde(default)]
    pub architecture: Architecture,
    /// Node count of the fixed Simpson grid used inside the objective.
    #[serde(default = "default_training_points")]
    pub training_points: usize,
    #[serde(default)]
    pub metric: CostMetric,
    #[serde(default)]
    pub postprocess: PostprocessOptions,
    #[serde(default)]
    pub quadrature: QuadratureOptions,
}

fn default_training_points() -> usize {
    257
}

impl TrainingProblem {
    pub fn new(params: CycleParams) -> Self {
        Self {
            params,
            architecture: Architecture::default(),
            training_points: default_training_points(),
            metric: CostMetric::Schmidt,
            postprocess: PostprocessOptions::default(),
            quadrature: QuadratureOptions::default(),
        }
    }

    pub fn endpoints(&self) -> Endpoints {
        Endpoints::compression(&self.params)
    }

    pub fn objective(&self, weights: PenaltyWeights) -> Result<PenaltyObjective> {
        let net = NeuralProfile::zeros(self.architecture.clone(), self.endpoints())?;
        PenaltyObjective::new(
            net,
            StrokeContext::compression(&self.params),
            QuadratureGrid::new(self.params.tau, self.training_points)?,
            weights,
            self.metric,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassSummary {
    pub pass: usize,
    pub weights: PenaltyWeights,
    pub initial_cf: f64,
    pub best_cf: f64,
    pub steps_run: usize,
    pub aborted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub restart: usize,
    pub pass: usize,
    pub step: usize,
    pub cf: f64,
}

/// Costs of a post-processed ramp on both driven strokes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrokeCosts {
    pub c_ab: CostEstimate,
    pub c_cd: CostEstimate,
    pub hsta_ab: CostEstimate,
    pub hsta_cd: CostEstimate,
    pub min_omega_sq: f64,
    pub trap_inverted: bool,
}

impl StrokeCosts {
    pub fn evaluate(profile: &impl ProfileModel, params: &CycleParams, quadrature: &QuadratureOptions) -> Result<Self> {
        let grid = quadrature.grid(params.tau)?;
        let (cc, ce) = (StrokeContext::compression(params), StrokeContext::expansion(params));
        let tol = quadrature.tolerance;
        let rev = Reversed(profile);
        let (min_omega_sq, trap_inverted) = scan_trap_inversion(profile, grid.refined().nodes());
        Ok(Self {
            c_ab: sta_cost(profile, &cc, &grid, tol)?,
            c_cd: sta_cost(&rev, &ce, &grid, tol)?,
            hsta_ab: hsta_cost(profile, &cc, &grid, tol)?,
            hsta_cd: hsta_cost(&rev, &ce, &grid, tol)?,
            min_omega_sq,
            trap_inverted,
        })
    }

    pub fn selection_key(&self, metric: CostMetric) -> f64 {
        match metric {
            CostMetric::Schmidt => self.c_ab.value + self.c_cd.value,
            CostMetric::Hsta => self.hsta_ab.value + self.hsta_cd.value,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Candidate {
    pub restart: usize,
    /// Trained network before post-processing.
    pub raw: NeuralProfile,
    pub raw_residuals: BoundaryResiduals,
    /// Best parameters at the end of every pass, in order.
    pub checkpoints: Vec<Vec<f64>>,
    pub passes: Vec<PassSummary>,
    pub trace: Vec<TraceRow>,
    pub profile: TabulatedProfile,
    pub residuals: BoundaryResiduals,
    pub costs: StrokeCosts,
    pub selection: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartFailure {
    pub restart: usize,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct EnsembleOutcome {
    /// Ascending by selection metric.
    pub candidates: Vec<Candidate>,
    pub failures: Vec<RestartFailure>,
}

impl EnsembleOutcome {
    pub fn best(&self) -> &Candidate {
        &self.candidates[0]
    }
}

/// Trains one restart through every pass without post-processing.
pub fn train_restart(
    problem: &TrainingProblem,
    schedule: &TrainingSchedule,
    ensemble: &EnsembleConfig,
    restart: usize,
) -> Result<(NeuralProfile, Vec<Vec<f64>>, Vec<PassSummary>, Vec<TraceRow>)> {
    schedule.validate()?;
    let mut rng = ensemble.rng(restart);
    let mut state = TrainerState {
        theta: init_parameters(&mut rng, &problem.architecture),
        adam: AdamState::new(problem.architecture.param_count(), schedule.adam),
        weights: schedule.pass_weights(0),
        pass: 0,
        step: 0,
        seed: ensemble.base_seed,
        stream: restart as u64,
    };
    let mut objective = problem.objective(state.weights)?;
    let mut checkpoints = Vec::with_capacity(schedule.passes);
    let mut passes = Vec::with_capacity(schedule.passes);
    let mut trace = Vec::new();
    for k in 0..schedule.passes {
        state.pass = k;
        state.weights = schedule.pass_weights(k);
        objective.set_weights(state.weights)?;
        let out = train_pass(&objective, &state.theta, schedule.steps_per_pass, schedule.adam)?;
        trace.extend(out.trace.iter().enumerate().map(|(step, &cf)| TraceRow {
            restart,
            pass: k,
            step,
            cf,
        }));
        state.step += out.trace.len() - 1;
        passes.push(PassSummary {
            pass: k,
            weights: state.weights,
            initial_cf: out.trace[0],
            best_cf: out.best_cf,
            steps_run: out.trace.len() - 1,
            aborted: out.aborted,
        });
        state.theta = out.best_theta;
        checkpoints.push(state.theta.clone());
    }
    let net = objective.network(&state.theta);
    Ok((net, checkpoints, passes, trace))
}

/// Post-processes a trained network and evaluates it on the converged grid.
pub fn finish_candidate(
    problem: &TrainingProblem,
    restart: usize,
    raw: NeuralProfile,
    checkpoints: Vec<Vec<f64>>,
    passes: Vec<PassSummary>,
    trace: Vec<TraceRow>,
) -> Result<Candidate> {
    let ep = problem.endpoints();
    let raw_residuals = boundary_residuals(&raw, &ep);
    let profile = postprocess_stretch_smooth(&raw, ep, &problem.postprocess)?;
    let residuals = boundary_residuals(&profile, &ep);
    let costs = StrokeCosts::evaluate(&profile, &problem.params, &problem.quadrature)?;
    Ok(Candidate {
        restart,
        raw,
        raw_residuals,
        checkpoints,
        passes,
        trace,
        profile,
        residuals,
        selection: costs.selection_key(problem.metric),
        costs,
    })
}

pub fn run_ensemble(
    ensemble: &EnsembleConfig,
    schedule: &TrainingSchedule,
    problem: &TrainingProblem,
) -> Result<EnsembleOutcome> {
    if ensemble.n_restarts == 0 {
        return Err(Error::Config("ensemble needs at least one restart".into()));
    }
    schedule.validate()?;
    problem.params.validate()?;
    let results: Vec<Result<Candidate>> = (0..ensemble.n_restarts)
        .into_par_iter()
        .map(|r| {
            let (raw, checkpoints, passes, trace) = train_restart(problem, schedule, ensemble, r)?;
            finish_candidate(problem, r, raw, checkpoints, passes, trace)
        })
        .collect();
    let mut candidates = Vec::new();
    let mut failures = Vec::new();
    for (restart, r) in results.into_iter().enumerate() {
        match r {
            Ok(c) => candidates.push(c),
            Err(e) => failures.push(RestartFailure {
                restart,
                message: e.to_string(),
            }),
        }
    }
    if candidates.is_empty() {
        let details = failures
            .iter()
            .map(|f| format!("restart {}: {}", f.restart, f.message))
            .collect::<Vec<_>>()
            .join("; ");
        return Err(Error::AllRestartsFailed {
            count: failures.len(),
            details,
        });
    }
    candidates.sort_by(|a, b| a.selection.total_cmp(&b.selection).then(a.restart.cmp(&b.restart)));
    Ok(EnsembleOutcome { candidates, failures })
}
