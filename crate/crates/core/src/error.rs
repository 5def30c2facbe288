use thiserror::Error;

use crate::model::{AlternativeId, CurrentMode};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown coefficient `{0}`")]
    UnknownCoefficient(String),

    #[error("invalid model specification: {0}")]
    Specification(String),

    #[error("invalid attribute `{field}` = {value} on {alternative}")]
    InvalidAttribute {
        alternative: AlternativeId,
        field: &'static str,
        value: f64,
    },

    #[error("{what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("{0} must be at least 1")]
    ZeroCount(&'static str),

    #[error("value {0} is outside the open unit interval")]
    OutsideUnitInterval(f64),

    #[error("non-commute congestion needs a positive travel time")]
    ZeroTravelTime,

    #[error("no alternative is available")]
    NoAvailableAlternative,

    #[error("individual {individual}, task {task}: chosen alternative {chosen} is unavailable")]
    ChosenUnavailable {
        individual: u64,
        task: u32,
        chosen: AlternativeId,
    },

    #[error("individual {individual}, task {task}: no recorded choice")]
    MissingChoice { individual: u64, task: u32 },

    #[error("individual {0} has zero simulated probability")]
    ZeroProbability(u64),

    #[error("non-finite log-likelihood")]
    NonFinite,

    #[error("undefined scenario cell: {mode} at {distance_km} km")]
    UndefinedCell { mode: CurrentMode, distance_km: f64 },

    #[error("cost coefficient is zero")]
    ZeroCostCoefficient,

    #[error("null log-likelihood must be negative, got {0}")]
    InvalidNullLikelihood(f64),

    #[error("Hessian is not invertible")]
    SingularHessian,

    #[error("parameter `{0}` is not identified: its covariate is zero in every available row")]
    Unidentified(String),

    #[error("optimizer did not converge after {iterations} iterations (gradient norm {gradient_norm:.3e})")]
    NotConverged {
        iterations: usize,
        gradient_norm: f64,
    },

    #[error("design error: {0}")]
    Design(String),

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error("malformed marginals: {0}")]
    Marginals(String),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
