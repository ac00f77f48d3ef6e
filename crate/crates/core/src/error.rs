use thiserror::Error;

use crate::switched_system::Violation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error(
        "basis matrix is singular: pivot {pivot:e} at column {column} is below tolerance {tol:e}"
    )]
    SingularBasis { column: usize, pivot: f64, tol: f64 },

    #[error("basis condition estimate {condition:e} exceeds {limit:e}; the recovered matrix would be unreliable")]
    IllConditioned { condition: f64, limit: f64 },

    #[error("matrix contains a non-finite entry")]
    NonFinite,

    #[error("invalid event: {0}")]
    InvalidEvent(String),

    #[error("alphabets differ: {0}")]
    AlphabetMismatch(String),

    #[error("malformed automaton: {0}")]
    MalformedAutomaton(String),

    #[error("failed to parse model: {0}")]
    Parse(String),

    #[error("model failed validation: {}", fmt_violations(.0))]
    Validation(Vec<Violation>),

    #[error("recovered matrix is ambiguous: within tolerance of labels {0:?}")]
    AmbiguousLabel(Vec<usize>),

    #[error("observation store is not closed: access word {access} has no representative for event {event}")]
    NotClosed { access: usize, event: usize },

    #[error("word is not a counterexample for the current hypothesis")]
    NotACounterexample,

    #[error("learning budget exceeded after {rounds} rounds")]
    BudgetExceeded { rounds: usize },

    #[error("generation failed: {0}")]
    GenerationFailed(String),
}

fn fmt_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

pub type Result<T> = std::result::Result<T, Error>;
