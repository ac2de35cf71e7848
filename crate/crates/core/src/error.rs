//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by schedules, networks, samplers, the codec and the
/// experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("singular noise target at t = {t}: sigma_t is zero")]
    SingularTarget { t: f64 },

    #[error("training diverged at iteration {iteration}")]
    TrainingDiverged { iteration: usize },

    #[error("sampler diverged at step {step}")]
    SamplerDiverged { step: usize },

    #[error("incomplete trajectory: {0}")]
    IncompleteTrajectory(&'static str),

    #[error("deep fade: |h| = {h} below equalization threshold")]
    DeepFade { h: f64 },

    #[error("zero-power signal: batch cannot be power-normalized")]
    ZeroPower,

    #[error("degenerate entropy: {0}")]
    DegenerateEntropy(String),

    #[error("sample count {n} exceeds exact-assignment cap {cap}; use the 1D or Gaussian variants")]
    SizeLimit { n: usize, cap: usize },

    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("config parse error: {0}")]
    ConfigParse(String),
}

impl Error {
    /// Wrap an error with the pipeline stage it occurred in.
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
