//! Identification of black-box, event-driven switched linear systems.
//!
//! A switched system is a finite automaton whose nodes are labelled with
//! full-rank matrices; on each event the automaton moves, and the continuous
//! state is multiplied by the matrix of the node being visited. Given only an
//! IO-generator (simulate from chosen initial states along chosen event words)
//! and an equivalence checker, [`learner::learn`] recovers an automaton with
//! the same language and the subsystem matrices themselves.
//!
//! - [`linalg`]: dense matrices and the basis solve.
//! - [`automaton`]: labelled automata, runs, product-based equivalence.
//! - [`switched_system`]: executions and the JSON model format.
//! - [`oracle`]: IO-generator and equivalence-checker interfaces.
//! - [`output_query`]: the matrix at the end of a word, from IO queries.
//! - [`learner`]: the access-word/test-word learning loop.
//! - [`benchgen`]: seeded random systems and benchmark rows.

pub mod automaton;
pub mod benchgen;
pub mod error;
pub mod learner;
pub mod linalg;
pub mod oracle;
pub mod output_query;
pub mod switched_system;

pub use automaton::{language_equivalent, EventAlphabet, Fa, Word};
pub use error::{Error, Result};
pub use learner::{learn, LearnResult, Learner, LearnerConfig};
pub use linalg::Matrix;
pub use oracle::{
    BoundedTestingEquivalence, EquivalenceOracle, ObservationOracle, QueryStats,
    WhiteBoxEquivalence, WhiteBoxObservation,
};
pub use output_query::{compute_output, OutputConfig};
pub use switched_system::SwitchedSystem;
