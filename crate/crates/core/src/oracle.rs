//! The two oracles a learner talks to: an IO-generator that simulates the
//! hidden system, and an equivalence checker that either accepts a hypothesis
//! or returns a word on which it is wrong.
//!
//! All query accounting lives here so every learning strategy is measured the
//! same way.

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::automaton::{language_equivalent, EventAlphabet, Word};
use crate::error::Result;
use crate::linalg::{mat_approx_eq, Matrix};
use crate::output_query::{compute_output, OutputConfig};
use crate::switched_system::SwitchedSystem;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryStats {
    /// Simulated initial states; a `d x k` query counts `k`.
    pub io_queries: u64,
    /// Runs of the matrix-recovery routine.
    pub output_computations: u64,
    pub equivalence_queries: u64,
}

impl QueryStats {
    pub fn since(&self, earlier: &QueryStats) -> QueryStats {
        QueryStats {
            io_queries: self.io_queries - earlier.io_queries,
            output_computations: self.output_computations - earlier.output_computations,
            equivalence_queries: self.equivalence_queries - earlier.equivalence_queries,
        }
    }
}

/// Monotone IO and output counters, safe to bump from several threads.
#[derive(Debug, Default)]
pub struct QueryCounter {
    io: AtomicU64,
    outputs: AtomicU64,
}

impl QueryCounter {
    pub fn add_io(&self, n: u64) {
        self.io.fetch_add(n, Ordering::Relaxed);
    }

    pub fn add_output(&self) {
        self.outputs.fetch_add(1, Ordering::Relaxed);
    }

    /// Equivalence queries are counted by the equivalence oracle, so the
    /// snapshot leaves them at zero.
    pub fn snapshot(&self) -> QueryStats {
        QueryStats {
            io_queries: self.io.load(Ordering::Relaxed),
            output_computations: self.outputs.load(Ordering::Relaxed),
            equivalence_queries: 0,
        }
    }
}

/// Black-box access to executions of a hidden switched system.
pub trait ObservationOracle {
    fn alphabet(&self) -> &EventAlphabet;

    fn dimension(&self) -> usize;

    /// `exec(X0, w)` of the hidden system; counts one IO query per column.
    fn exec_query(&self, x0: &Matrix, w: &Word) -> Result<Vec<Matrix>>;

    fn counter(&self) -> &QueryCounter;

    fn stats(&self) -> QueryStats {
        self.counter().snapshot()
    }
}

/// Checks a hypothesis against the hidden system.
pub trait EquivalenceOracle {
    /// `None` if the hypothesis is accepted, otherwise a counterexample.
    fn check(&self, hypothesis: &SwitchedSystem) -> Result<Option<Word>>;

    fn equivalence_queries(&self) -> u64;
}

/// IO-generator backed by a known system.
#[derive(Debug)]
pub struct WhiteBoxObservation {
    hidden: SwitchedSystem,
    counter: QueryCounter,
}

impl WhiteBoxObservation {
    pub fn new(hidden: SwitchedSystem) -> Self {
        Self {
            hidden,
            counter: QueryCounter::default(),
        }
    }

    pub fn hidden(&self) -> &SwitchedSystem {
        &self.hidden
    }
}

impl ObservationOracle for WhiteBoxObservation {
    fn alphabet(&self) -> &EventAlphabet {
        self.hidden.alphabet()
    }

    fn dimension(&self) -> usize {
        self.hidden.dim()
    }

    fn exec_query(&self, x0: &Matrix, w: &Word) -> Result<Vec<Matrix>> {
        let out = self.hidden.exec(x0, w)?;
        self.counter.add_io(x0.cols() as u64);
        Ok(out)
    }

    fn counter(&self) -> &QueryCounter {
        &self.counter
    }
}

/// Exact equivalence by product search against a known system. Labels are
/// compared as matrices within `tol`.
#[derive(Debug)]
pub struct WhiteBoxEquivalence {
    hidden: SwitchedSystem,
    tol: f64,
    queries: AtomicU64,
}

impl WhiteBoxEquivalence {
    pub fn new(hidden: SwitchedSystem, tol: f64) -> Self {
        Self {
            hidden,
            tol,
            queries: AtomicU64::new(0),
        }
    }
}

/// Product-search equivalence of two switched systems with matrix labels
/// compared within `tol`.
pub fn systems_equivalent(
    a: &SwitchedSystem,
    b: &SwitchedSystem,
    tol: f64,
) -> Result<Option<Word>> {
    language_equivalent(a.fa(), b.fa(), |la, lb| {
        mat_approx_eq(a.matrix(la), b.matrix(lb), tol).unwrap_or(false)
    })
}

impl EquivalenceOracle for WhiteBoxEquivalence {
    fn check(&self, hypothesis: &SwitchedSystem) -> Result<Option<Word>> {
        self.queries.fetch_add(1, Ordering::Relaxed);
        systems_equivalent(&self.hidden, hypothesis, self.tol)
    }

    fn equivalence_queries(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }
}

/// Fully black-box equivalence by exhaustive testing of every word up to
/// `max_len` events, shortest first and lexicographic by event index within a
/// length.
///
/// Exhausting the bound is reported as "equivalent", which is only as sound as
/// the bound is large.
pub struct BoundedTestingEquivalence<'a, O: ?Sized> {
    obs: &'a O,
    max_len: usize,
    tol: f64,
    output: OutputConfig,
    queries: AtomicU64,
}

impl<'a, O: ObservationOracle + ?Sized> BoundedTestingEquivalence<'a, O> {
    pub fn new(obs: &'a O, max_len: usize, tol: f64, output: OutputConfig) -> Self {
        Self {
            obs,
            max_len,
            tol,
            output,
            queries: AtomicU64::new(0),
        }
    }
}

impl<O: ObservationOracle + ?Sized> EquivalenceOracle for BoundedTestingEquivalence<'_, O> {
    fn check(&self, hypothesis: &SwitchedSystem) -> Result<Option<Word>> {
        self.queries.fetch_add(1, Ordering::Relaxed);
        let k = self.obs.alphabet().len();
        for len in 0..=self.max_len {
            let mut digits = vec![0usize; len];
            loop {
                let w = Word::from(digits.clone());
                let actual = compute_output(self.obs, &w, &self.output)?;
                let predicted = hypothesis.output_matrix(&w)?;
                if !mat_approx_eq(&actual, predicted, self.tol)? {
                    return Ok(Some(w));
                }
                if !next_word(&mut digits, k) {
                    break;
                }
            }
        }
        Ok(None)
    }

    fn equivalence_queries(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }
}

/// Advances `digits` to the next word of the same length in lexicographic
/// order; `false` once every word has been visited.
fn next_word(digits: &mut [usize], k: usize) -> bool {
    for pos in (0..digits.len()).rev() {
        digits[pos] += 1;
        if digits[pos] < k {
            return true;
        }
        digits[pos] = 0;
    }
    false
}
