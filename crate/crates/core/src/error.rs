use thiserror::Error;

use crate::hilbert::Point;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("empty set: {0}")]
    EmptySet(String),

    #[error("invalid set parameters: {0}")]
    InvalidSet(String),

    #[error("intersection is infeasible (max violation {violation:e} after {sweeps} sweeps)")]
    Infeasible { violation: f64, sweeps: usize },

    #[error("point {point} lies outside the mapping domain")]
    OutsideDomain { point: Point },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("attractive-set approximation is the whole space (every sample was a fixed point)")]
    WholeSpaceApprox,

    #[error("trace too short for tail estimation: {len} steps, need at least {min}")]
    TraceTooShort { len: usize, min: usize },

    #[error("orbit left the domain at step {step}: {point}")]
    OrbitLeftDomain { step: usize, point: Point },

    #[error("no feasible grid point found")]
    NoFeasibleGridPoint,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}
