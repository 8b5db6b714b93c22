use thiserror::Error;

/// Errors surfaced by construction and checking operations.
///
/// Numerical routines report failure through their result types (residuals,
/// per-gap flags); `Error` is reserved for contract violations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("free nilpotent algebra on {generators} generators of step {step} exceeds the basis cap of {cap} elements")]
    BasisCapExceeded {
        generators: usize,
        step: usize,
        cap: usize,
    },
    #[error("operands belong to different algebras")]
    AlgebraMismatch,
    #[error("relation {index} is not homogeneous: support spans layers {layers:?}")]
    NonHomogeneousRelation { index: usize, layers: Vec<usize> },
    #[error("vector has wrong dimension: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown group preset '{0}'")]
    UnknownPreset(String),
    #[error("could not parse group spec: {0}")]
    GroupSpec(String),
    #[error("control path is not finite at t = {0}")]
    NonFiniteControl(f64),
    #[error("no obstruction direction available for this group; run a reachability probe or use a preset with a registered obstruction")]
    NoObstructionDirection,
    #[error("step {step} group not supported: {what} requires step <= {max_step}")]
    StepTooLarge {
        what: &'static str,
        step: usize,
        max_step: usize,
    },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
