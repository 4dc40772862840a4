use thiserror::Error;

use crate::model::AltId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("subset {subset_id} is out of range for a plan with {n_subsets} subsets")]
    SubsetOutOfRange { subset_id: usize, n_subsets: usize },

    #[error("payload shape mismatch: {0}")]
    PayloadShapeMismatch(String),

    #[error("alternative a{} is not part of the expected scope", .0 + 1)]
    AlienAlternative(AltId),

    #[error("invalid ranking: {0}")]
    InvalidRanking(String),

    #[error("invalid plan geometry m={m}, k={k}, s={s}: {reason}")]
    InvalidGeometry { m: usize, k: usize, s: usize, reason: String },

    #[error("invalid plan: {0}")]
    InvalidPlan(String),

    #[error("empty profile")]
    EmptyProfile,

    #[error("rule {rule} cannot aggregate {what}")]
    UnsupportedRuleForFormat { rule: String, what: String },

    #[error("no usable reports for pair (a{}, a{})", .0 + 1, .1 + 1)]
    NoReports(AltId, AltId),

    #[error("conditional cell {0} is empty or degenerate and smoothing is disabled")]
    DegenerateConditional(String),

    #[error("subset {0} has no ballots")]
    EmptySubset(usize),

    #[error("dispersion {0} is outside (0, 1]")]
    InvalidDispersion(f64),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("instance too large for exact enumeration: {0}")]
    InstanceTooLarge(String),

    #[error("rankings do not share the same scope")]
    ScopeMismatch,

    #[error("pairwise distance {d} is outside 1..={max}")]
    InvalidDistance { d: usize, max: usize },

    #[error("top-t size {t} is outside 1..={max}")]
    InvalidT { t: usize, max: usize },

    #[error("empty sample")]
    EmptySample,

    #[error("empty grid")]
    EmptyGrid,

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
