use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::costs::QuadratureOptions;
use crate::error::{Error, Result};
use crate::optimizer::{CostMetric, EnsembleConfig, TrainingProblem, TrainingSchedule};
use crate::profiles::io::ProfileDocument;
use crate::profiles::{
    AnyProfile, Architecture, ConstantProfile, Endpoints, PolynomialAnsatz, PostprocessOptions, SmoothedRampAnsatz,
};
use crate::thermo::CycleParams;

/// Where the ramp under study comes from. Every variant is a struct so
/// that stray keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSource {
    /// The (10, −15, 6) polynomial.
    Benchmark {},
    Polynomial {
        alpha: Vec<f64>,
    },
    /// Absolute times; see [`SmoothedRampAnsatz`].
    SmoothedRamp {
        t1: f64,
        t2: f64,
        sigma: f64,
    },
    /// A profile document written by an earlier run.
    Checkpoint {
        path: PathBuf,
    },
    /// Train an ensemble first and use its best ramp.
    Optimize {},
    Constant {
        omega: f64,
    },
}

impl Default for ProfileSource {
    fn default() -> Self {
        Self::Benchmark {}
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    /// Train a fresh ensemble at every τ.
    PerTau,
    /// Train once at the configured τ and rescale time for every other point.
    Reuse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub taus: Vec<f64>,
    pub mode: SweepMode,
    pub restarts: usize,
    pub schedule: TrainingSchedule,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            taus: (1..=12).map(f64::from).collect(),
            mode: SweepMode::PerTau,
            restarts: 8,
            schedule: TrainingSchedule::sweep_default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuditConfig {
    pub params: CycleParams,
    pub ensemble: EnsembleConfig,
    pub schedule: TrainingSchedule,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            params: CycleParams::audit_reference(),
            ensemble: EnsembleConfig {
                n_restarts: 8,
                ..EnsembleConfig::default()
            },
            schedule: TrainingSchedule::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub params: CycleParams,
    pub profile: ProfileSource,
    pub quadrature: QuadratureOptions,
    pub architecture: Architecture,
    pub training_points: usize,
    pub postprocess: PostprocessOptions,
    pub ensemble: EnsembleConfig,
    pub schedule: TrainingSchedule,
    pub sweep: SweepConfig,
    pub audit: AuditConfig,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let problem = TrainingProblem::new(CycleParams::reference(6.0));
        Self {
            params: problem.params,
            profile: ProfileSource::default(),
            quadrature: problem.quadrature,
            architecture: problem.architecture,
            training_points: problem.training_points,
            postprocess: problem.postprocess,
            ensemble: EnsembleConfig::default(),
            schedule: TrainingSchedule::default(),
            sweep: SweepConfig::default(),
            audit: AuditConfig::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

/// Command-line settings that take precedence over the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tau: Option<f64>,
    pub out: Option<PathBuf>,
    pub restarts: Option<usize>,
    pub full_fidelity: bool,
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)?;
        Ok(cfg)
    }

    /// Reads a config file. Relative checkpoint paths resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&s)?;
        if let ProfileSource::Checkpoint { path: p } = &mut cfg.profile {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if o.full_fidelity {
            self.schedule = TrainingSchedule::full_fidelity();
            self.sweep.schedule = TrainingSchedule::full_fidelity();
            self.sweep.restarts = self.ensemble.n_restarts;
            self.audit.schedule = TrainingSchedule::full_fidelity();
        }
        if let Some(seed) = o.seed {
            self.ensemble.base_seed = seed;
            self.audit.ensemble.base_seed = seed;
        }
        if let Some(tau) = o.tau {
            self.params.tau = tau;
        }
        if let Some(out) = &o.out {
            self.output_dir = out.clone();
        }
        if let Some(n) = o.restarts {
            self.ensemble.n_restarts = n;
            self.sweep.restarts = n;
            self.audit.ensemble.n_restarts = n;
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.audit.params.validate()?;
        self.schedule.validate()?;
        self.sweep.schedule.validate()?;
        self.audit.schedule.validate()?;
        self.architecture.validate()?;
        self.quadrature.grid(self.params.tau)?;
        if self.training_points < 3 || self.training_points.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "training_points must be odd and >= 3, got {}",
                self.training_points
            )));
        }
        let taus = &self.sweep.taus;
        if taus.is_empty() || taus.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(Error::Config("sweep taus must be positive and finite".into()));
        }
        if taus.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("sweep taus must be strictly increasing".into()));
        }
        if let ProfileSource::Checkpoint { path } = &self.profile {
            if !path.is_file() {
                return Err(Error::Config(format!("checkpoint {} does not exist", path.display())));
            }
        }
        Ok(())
    }

    pub fn problem(&self, params: CycleParams, metric: CostMetric) -> TrainingProblem {
        TrainingProblem {
            params,
            architecture: self.architecture.clone(),
            training_points: self.training_points,
            metric,
            postprocess: self.postprocess,
            quadrature: self.quadrature,
        }
    }

    /// The configured ramp, except for [`ProfileSource::Optimize`], which
    /// needs a training run and yields `None`.
    pub fn static_profile(&self) -> Result<Option<AnyProfile>> {
        let ep = Endpoints::compression(&self.params);
        Ok(Some(match &self.profile {
            ProfileSource::Benchmark {} => AnyProfile::Polynomial(PolynomialAnsatz::benchmark(ep)),
            ProfileSource::Polynomial { alpha } => AnyProfile::Polynomial(PolynomialAnsatz::new(alpha.clone(), ep)?),
            ProfileSource::SmoothedRamp { t1, t2, sigma } => {
                AnyProfile::SmoothedRamp(SmoothedRampAnsatz::new(*t1, *t2, *sigma, ep)?)
            }
            ProfileSource::Constant { omega } => AnyProfile::Constant(ConstantProfile {
                omega: *omega,
                endpoints: ep,
            }),
            ProfileSource::Checkpoint { path } => {
                let doc = ProfileDocument::load(path)?;
                let found = doc.endpoints()?;
                if found != ep {
                    return Err(Error::Config(format!(
                        "checkpoint {} was made for {found:?}, config asks for {ep:?}",
                        path.display()
                    )));
                }
                doc.to_profile()?
            }
            ProfileSource::Optimize {} => return Ok(None),
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_the_default() {
        assert_eq!(ExperimentConfig::from_json("{}").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"restarts": 3}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"profile": {"kind": "benchmark", "x": 1}}"#).is_err());
    }

    #[test]
    fn profile_sources_parse() {
        let c =
            ExperimentConfig::from_json(r#"{"profile": {"kind": "smoothed_ramp", "t1": 1.5, "t2": 4, "sigma": 0.5}}"#)
                .unwrap();
        assert!(matches!(c.static_profile().unwrap(), Some(AnyProfile::SmoothedRamp(_))));
        let c = ExperimentConfig::from_json(r#"{"profile": {"kind": "optimize"}}"#).unwrap();
        assert!(c.static_profile().unwrap().is_none());
    }

    #[test]
    fn sweep_grid_must_increase() {
        let mut c = ExperimentConfig::default();
        c.validate().unwrap();
        c.sweep.taus = vec![1.0, 3.0, 2.0];
        assert!(c.validate().is_err());
        c.sweep.taus = vec![0.0, 1.0];
        assert!(c.validate().is_err());
    }

    #[test]
    fn missing_checkpoint_rejected() {
        let c = ExperimentConfig {
            profile: ProfileSource::Checkpoint {
                path: "/nonexistent/profile.json".into(),
            },
            ..ExperimentConfig::default()
        };
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn overrides_win() {
        let mut c = ExperimentConfig::default();
        c.apply(&Overrides {
            seed: Some(5),
            tau: Some(4.0),
            restarts: Some(2),
            full_fidelity: true,
            ..Overrides::default()
        });
        assert_eq!(c.ensemble.base_seed, 5);
        assert_eq!(c.params.tau, 4.0);
        assert_eq!((c.ensemble.n_restarts, c.sweep.restarts), (2, 2));
        assert_eq!(c.schedule.steps_per_pass, 1000);
    }
}
