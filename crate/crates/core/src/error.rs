use serde::Serialize;
use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("field is not locally integrable near the origin: {0}")]
    NonIntegrableField(String),
    #[error("quadrature did not reach the requested tolerance (estimate {estimate:e}, error {error:e})")]
    QuadratureFailure { estimate: f64, error: f64 },
    #[error("custom field carries no integrability declaration")]
    UnknownClass,
    #[error("point t = {t} lies outside the domain of {what}")]
    DomainError { what: &'static str, t: f64 },
    #[error("value is unbounded: grows without saturation along the cap sequence {caps:?}")]
    Unbounded { caps: Vec<(f64, f64)> },
    #[error("test function support [{lo}, {hi}] leaks past the grid [{grid_lo}, {grid_hi}]")]
    SupportError { lo: f64, hi: f64, grid_lo: f64, grid_hi: f64 },
    #[error("precondition violated: {0}")]
    PreconditionError(String),
    #[error("invalid parameters: {0}")]
    ParameterError(String),
    #[error("total flux {flux} is not an integer")]
    FluxNotInteger { flux: f64 },
    #[error("mode truncation failed: required |m| > {needed} exceeds the limit {limit}; extend the grid")]
    NoTruncation { needed: f64, limit: i64 },
    #[error("Prüfer integration could not meet the phase tolerance near s = {s}")]
    StiffnessFailure { s: f64 },
    #[error("counting function never reaches 10 on the coupling ladder")]
    InsufficientGrowth,
}

pub type Result<T> = std::result::Result<T, Error>;

/// Non-fatal conditions that must surface in every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum Warning {
    /// An exactly zero pivot was perturbed during an LDLᵀ sweep.
    ZeroPivot { index: usize, perturbation: f64 },
    /// The level-set ratio changed sign between scan samples.
    ScanResolution { s_lo: f64, s_hi: f64 },
    /// Mode truncation could not be certified on the grid.
    NoTruncation { detail: String },
    /// A functional kept growing along the cap sequence.
    Unbounded { detail: String },
    /// The truncated ends are not classically forbidden by the required margin.
    ForbiddenMargin { margin: f64 },
}
