use thiserror::Error;

/// Failures raised by the dynamics, entropy and experiment layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error(
        "cannot place {requested} disks of radius {radius} in the initial region: {reason} \
         (packing limit {limit})"
    )]
    Packing {
        requested: usize,
        radius: f64,
        limit: usize,
        reason: &'static str,
    },

    #[error("fixed-point overflow in {context}")]
    Overflow { context: &'static str },

    #[error("empty system: entropy needs at least one particle")]
    EmptySystem,

    #[error("particle count mismatch: {left} vs {right}")]
    CountMismatch { left: usize, right: usize },

    #[error("integrators are not compatible for a joint step: {0}")]
    Incompatible(String),

    #[error("divergence must be strictly positive in the fit window (step {step} has {value})")]
    NonPositiveDivergence { step: u64, value: f64 },

    #[error("fit window holds {0} usable samples, need at least 3")]
    ShortWindow(usize),

    #[error("series has no divergence channel")]
    MissingDivergence,

    #[error("protocol precondition violated: {0}")]
    Protocol(String),
}

pub type Result<T, E = SimError> = std::result::Result<T, E>;
