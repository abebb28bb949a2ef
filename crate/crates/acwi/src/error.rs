//! Error types shared across the crate.
//!
//! Each subsystem has its own error enum so callers can match on the failures
//! they can actually handle; the top-level [`Error`] collects them for code
//! that drives a whole run end to end.

use thiserror::Error;

/// Errors from the autodiff / network layer.
#[derive(Debug, Error)]
pub enum NnError {
    /// Input or parameter shapes do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    /// The scalar loss evaluated to NaN or infinity; backprop refused.
    #[error("non-finite loss value {0}")]
    NonFiniteLoss(f64),
    /// A gradient became non-finite during an optimizer step.
    #[error("non-finite gradient in parameter '{0}'")]
    NonFiniteGradient(String),
    /// A parameter became non-finite after an optimizer step.
    #[error("non-finite value in parameter '{0}' after update")]
    NonFiniteParameter(String),
    /// A parameter name was requested that the set does not contain.
    #[error("unknown parameter '{0}'")]
    UnknownParameter(String),
    /// A class label was out of range for the logit width.
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    /// Underlying file I/O failed.
    #[error("checkpoint I/O: {0}")]
    Io(#[from] std::io::Error),
    /// A checkpoint file was malformed.
    #[error("malformed checkpoint: {0}")]
    MalformedCheckpoint(String),
}

/// Errors from environment construction and stepping.
#[derive(Debug, Error)]
pub enum EnvError {
    /// The environment id is not one of the supported names.
    #[error("unknown environment '{0}'")]
    UnknownEnv(String),
    /// The size parameter is outside the supported range for this layout.
    #[error("invalid size {size} for environment '{env}': {reason}")]
    InvalidSize {
        env: String,
        size: usize,
        reason: String,
    },
    /// `step` was called after the episode already ended.
    #[error("step called on a finished episode; call reset first")]
    EpisodeOver,
}

/// Errors from configuration loading and validation.
#[derive(Debug, Error)]
pub enum ConfigError {
    /// Reading the file failed.
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    /// TOML syntax or schema problems.
    #[error("cannot parse config: {0}")]
    Parse(String),
    /// An override expression was malformed.
    #[error("bad override '{0}': {1}")]
    BadOverride(String, String),
    /// A semantic constraint was violated (ranges, enums, cross-field rules).
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Errors from the training loop.
#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    /// Run-artifact I/O (metrics, checkpoints, manifests) failed.
    #[error("run I/O: {0}")]
    Io(#[from] std::io::Error),
    /// Serialization of run artifacts failed.
    #[error("serialization: {0}")]
    Serde(String),
    /// A checkpoint did not match the run being resumed.
    #[error("resume mismatch: {0}")]
    ResumeMismatch(String),
}

/// Errors from post-hoc analysis.
#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("analysis I/O: {0}")]
    Io(#[from] std::io::Error),
    /// An input artifact (metrics CSV, snapshot file) was malformed.
    #[error("malformed artifact {path}: {reason}")]
    MalformedArtifact { path: String, reason: String },
    /// Inputs were empty or inconsistent with each other.
    #[error("invalid analysis input: {0}")]
    InvalidInput(String),
    /// Numerical routine failed to make progress.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Top-level error for code driving full experiments.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}
