use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid cycle parameters: {0}")]
    InvalidParameters(String),

    #[error("no refrigeration regime: beta1 = {beta1} must exceed beta2 = {beta2} > 0")]
    NoRefrigeration { beta1: f64, beta2: f64 },

    #[error("outside the cooling window: beta1*omega1 = {cold} must be below beta2*omega2 = {hot}")]
    OutsideCoolingWindow { cold: f64, hot: f64 },

    #[error("cost metric violation: total input energy {denominator} is not positive")]
    MetricViolation { denominator: f64 },

    #[error("sudden quench closes the cooling window: Q4 = {q4}")]
    QuenchClosesWindow { q4: f64 },

    #[error("frequency must stay positive, got omega({t}) = {omega}")]
    NonPositiveFrequency { t: f64, omega: f64 },

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("stretch factor {scale} is not positive (profile endpoint ordering inverted)")]
    InvertedStretch { scale: f64 },

    #[error("boundary conditions violated: max residual {max} exceeds {tolerance}")]
    BoundaryViolation { max: f64, tolerance: f64 },

    #[error("invalid quadrature grid: {0}")]
    InvalidGrid(String),

    #[error("quadrature did not converge: {coarse} vs {fine} (relative change {rel_change:e} > {tolerance:e})")]
    QuadratureNotConverged {
        coarse: f64,
        fine: f64,
        rel_change: f64,
        tolerance: f64,
    },

    #[error("non-finite integrand value at node {index} (t = {t})")]
    NonFiniteIntegrand { index: usize, t: f64 },

    #[error("non-finite gradient entry {index}, first produced by `{primitive}`")]
    NonFiniteGradient { index: usize, primitive: &'static str },

    #[error("non-finite objective, offending term `{term}`")]
    NonFiniteObjective { term: &'static str },

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("all {count} restarts failed: {details}")]
    AllRestartsFailed { count: usize, details: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("nothing to export: {0} not found (run `optimize` first)")]
    NothingToExport(PathBuf),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
