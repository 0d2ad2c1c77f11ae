use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The field contains NaN or infinite entries.
    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("gauge parameter lambda must be non-zero")]
    SingularGauge,

    #[error("time step {dt} exceeds the stability bound {bound}; reduce dt or force it")]
    UnstableTimeStep { dt: f64, bound: f64 },

    #[error("integration produced NaN at t = {t}; try a smaller time step")]
    Blowup { t: f64 },

    #[error("norm drifted by {drift:e} at t = {t} (limit {limit:e})")]
    NormDrift { t: f64, drift: f64, limit: f64 },

    #[error("initial state not normalized: |norm^2 - 1| = {0:e}")]
    NotNormalized(f64),

    /// A structural invariant failed (non-orthogonal pair, mismatched
    /// density matrices, ...).
    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;
