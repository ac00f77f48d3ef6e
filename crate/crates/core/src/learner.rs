//! Multi-label L*: learns an automaton whose language (sequence of node
//! matrices along every run) equals that of the hidden switched system.
//!
//! The learner keeps a set `Q` of access words, conjectured to reach pairwise
//! distinct states, and a set `T` of test words that witness the distinctness:
//! two words `u, v` are T-equivalent when `Output(u t) = Output(v t)` for every
//! `t` in `T`. The pair `(Q, T)` is kept separable (no two access words are
//! T-equivalent) and is closed before each hypothesis is built (every `q e` is
//! T-equivalent to some access word). Counterexamples are reduced to one new
//! access word and one new test word by binary search over the counterexample.

use std::collections::HashMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::automaton::{EventId, Fa, LabelId, Word};
use crate::error::{Error, Result};
use crate::linalg::DEFAULT_LABEL_TOL;
use crate::oracle::{EquivalenceOracle, ObservationOracle, QueryStats};
use crate::output_query::{cached_output, LabelRegistry, OutputCache, OutputConfig};
use crate::switched_system::{ModelFile, SwitchedSystem};

#[derive(Clone, Debug)]
pub struct LearnerConfig {
    /// Max-abs tolerance under which two recovered matrices are the same label.
    pub label_tol: f64,
    pub output: OutputConfig,
    /// Main-loop round cap. `None` uses `10 * |Σ| * (|Q| + 1)` with the
    /// current number of access words.
    pub max_rounds: Option<usize>,
    /// Re-check separability of `(Q, T)` after every mutation and count
    /// violations in the stats.
    pub check_separability: bool,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            label_tol: DEFAULT_LABEL_TOL,
            output: OutputConfig::default(),
            max_rounds: None,
            check_separability: false,
        }
    }
}

/// Access words, test words and the label of every `q · t`.
#[derive(Clone, Debug, Default)]
pub struct ObservationStore {
    access: Vec<Word>,
    tests: Vec<Word>,
    /// `rows[i][j]` is the label of `access[i] · tests[j]`.
    rows: Vec<Vec<LabelId>>,
}

impl ObservationStore {
    pub fn access_words(&self) -> &[Word] {
        &self.access
    }

    pub fn test_words(&self) -> &[Word] {
        &self.tests
    }

    pub fn row(&self, i: usize) -> &[LabelId] {
        &self.rows[i]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Closedness {
    Closed,
    /// `access_words[access] · event` has no T-equivalent access word.
    Defect {
        access: usize,
        event: EventId,
    },
}

/// What one counterexample contributed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterexampleRecord {
    pub word: Word,
    /// `i` with `O_i != O_{i+1}`.
    pub split: usize,
    pub access_word: Word,
    pub test_word: Word,
    /// Output labels requested during the search, cached or not.
    pub output_evaluations: usize,
    /// Output computations run against the IO-generator by the search.
    pub output_computations: u64,
    /// Output computations run afterwards to fill the new row and column.
    pub fill_computations: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LearnStats {
    pub queries: QueryStats,
    /// Hypotheses built (one equivalence query each).
    pub rounds: usize,
    pub wall_ms: u64,
    pub hypothesis_sizes: Vec<usize>,
    pub counterexamples: Vec<CounterexampleRecord>,
    pub separability_checks: usize,
    pub separability_violations: usize,
}

/// Flat stats object written next to learned models.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsSummary {
    pub io_queries: u64,
    pub output_computations: u64,
    pub equivalence_queries: u64,
    pub rounds: usize,
    pub wall_ms: u64,
}

impl LearnStats {
    pub fn summary(&self) -> StatsSummary {
        StatsSummary {
            io_queries: self.queries.io_queries,
            output_computations: self.queries.output_computations,
            equivalence_queries: self.queries.equivalence_queries,
            rounds: self.rounds,
            wall_ms: self.wall_ms,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LearnResult {
    pub system: SwitchedSystem,
    pub access_words: Vec<Word>,
    pub test_words: Vec<Word>,
    pub stats: LearnStats,
}

#[derive(Serialize)]
struct LearnResultFile {
    #[serde(flatten)]
    model: ModelFile,
    stats: StatsSummary,
}

impl LearnResult {
    /// The model schema with an added `stats` object.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&LearnResultFile {
            model: self.system.to_model(),
            stats: self.stats.summary(),
        })
        .expect("learn result serializes")
    }
}

/// `u ≡_T v`: every test word gives the same output label after both.
pub fn t_equivalent<F>(u: &Word, v: &Word, tests: &[Word], mut query: F) -> Result<bool>
where
    F: FnMut(&Word) -> Result<LabelId>,
{
    for t in tests {
        if query(&u.concat(t))? != query(&v.concat(t))? {
            return Ok(false);
        }
    }
    Ok(true)
}

pub struct Learner<'a, O: ?Sized> {
    obs: &'a O,
    cfg: LearnerConfig,
    store: ObservationStore,
    registry: LabelRegistry,
    cache: OutputCache,
    separability_checks: usize,
    separability_violations: usize,
}

impl<'a, O: ObservationOracle + ?Sized> Learner<'a, O> {
    /// Starts from `Q = T = {ε}`.
    pub fn new(obs: &'a O, cfg: LearnerConfig) -> Result<Self> {
        let mut learner = Self {
            obs,
            registry: LabelRegistry::new(cfg.label_tol),
            cfg,
            store: ObservationStore::default(),
            cache: OutputCache::default(),
            separability_checks: 0,
            separability_violations: 0,
        };
        learner.store.tests.push(Word::empty());
        learner.push_access(Word::empty())?;
        Ok(learner)
    }

    pub fn store(&self) -> &ObservationStore {
        &self.store
    }

    pub fn registry(&self) -> &LabelRegistry {
        &self.registry
    }

    /// Label id of `Output(w)`, memoized.
    pub fn output_label(&mut self, w: &Word) -> Result<LabelId> {
        cached_output(
            self.obs,
            &mut self.registry,
            &mut self.cache,
            w,
            &self.cfg.output,
        )
    }

    fn row_of(&mut self, u: &Word) -> Result<Vec<LabelId>> {
        let tests = self.store.tests.clone();
        tests
            .iter()
            .map(|t| self.output_label(&u.concat(t)))
            .collect()
    }

    /// T-equivalence under the current test words.
    pub fn t_equivalent(&mut self, u: &Word, v: &Word) -> Result<bool> {
        let tests = self.store.tests.clone();
        t_equivalent(u, v, &tests, |w| self.output_label(w))
    }

    /// Exhaustive pairwise check that no two access words are T-equivalent.
    pub fn is_separable(&self) -> bool {
        let rows = &self.store.rows;
        (0..rows.len()).all(|i| (i + 1..rows.len()).all(|j| rows[i] != rows[j]))
    }

    fn after_mutation(&mut self) {
        if self.cfg.check_separability {
            self.separability_checks += 1;
            if !self.is_separable() {
                self.separability_violations += 1;
            }
        }
    }

    fn push_access(&mut self, q: Word) -> Result<()> {
        let row = self.row_of(&q)?;
        self.store.access.push(q);
        self.store.rows.push(row);
        self.after_mutation();
        Ok(())
    }

    fn push_test(&mut self, t: Word) -> Result<()> {
        let mut column = Vec::with_capacity(self.store.access.len());
        for q in self.store.access.clone() {
            column.push(self.output_label(&q.concat(&t))?);
        }
        for (row, label) in self.store.rows.iter_mut().zip(column) {
            row.push(label);
        }
        self.store.tests.push(t);
        self.after_mutation();
        Ok(())
    }

    fn row_index(&self) -> HashMap<Vec<LabelId>, usize> {
        self.store
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| (r.clone(), i))
            .collect()
    }

    /// First `(q, e)` in (Q order, Σ order) whose extension has no
    /// T-equivalent access word.
    pub fn is_closed(&mut self) -> Result<Closedness> {
        let index = self.row_index();
        for i in 0..self.store.access.len() {
            for e in 0..self.obs.alphabet().len() {
                let qe = self.store.access[i].append(e);
                if !index.contains_key(&self.row_of(&qe)?) {
                    return Ok(Closedness::Defect {
                        access: i,
                        event: e,
                    });
                }
            }
        }
        Ok(Closedness::Closed)
    }

    /// Adds defect extensions to `Q` until `(Q, T)` is closed; returns how many
    /// access words were added.
    ///
    /// The scan continues past each addition instead of restarting: `T` is
    /// fixed here, so pairs already matched stay matched and the result is
    /// the same as repeatedly adding the first defect.
    pub fn close(&mut self) -> Result<usize> {
        let mut index = self.row_index();
        let mut added = 0;
        let mut i = 0;
        while i < self.store.access.len() {
            for e in 0..self.obs.alphabet().len() {
                let qe = self.store.access[i].append(e);
                let row = self.row_of(&qe)?;
                if !index.contains_key(&row) {
                    index.insert(row.clone(), self.store.access.len());
                    self.store.access.push(qe);
                    self.store.rows.push(row);
                    self.after_mutation();
                    added += 1;
                }
            }
            i += 1;
        }
        Ok(added)
    }

    /// Hypothesis on the access words: `ε` is initial, `δ'(q, e)` is the access
    /// word T-equivalent to `q e`, `γ'(q)` is the label of `Output(q)`.
    pub fn build_hypothesis(&mut self) -> Result<SwitchedSystem> {
        let index = self.row_index();
        let k = self.obs.alphabet().len();
        let mut delta = Vec::with_capacity(self.store.access.len());
        for i in 0..self.store.access.len() {
            let mut succ = Vec::with_capacity(k);
            for e in 0..k {
                let qe = self.store.access[i].append(e);
                match index.get(&self.row_of(&qe)?) {
                    Some(&j) => succ.push(j),
                    None => {
                        return Err(Error::NotClosed {
                            access: i,
                            event: e,
                        })
                    }
                }
            }
            delta.push(succ);
        }
        // tests[0] is ε, so the first column is Output(q).
        let gamma = self.store.rows.iter().map(|r| r[0]).collect();
        let fa = Fa::new(self.obs.alphabet().clone(), 0, delta, gamma)?;
        SwitchedSystem::new(fa, self.registry.matrices().to_vec(), self.obs.dimension())
    }

    /// Turns a counterexample into a new access word and a new test word.
    ///
    /// With `q'_i` the hypothesis state after `w[..i]` (as its access word) and
    /// `O_i = Output(q'_i · w[i..])`, `O_0` is the hidden output of `w` and
    /// `O_n` the hypothesis output, so they differ. Binary search on a range
    /// with differing endpoints finds `i` with `O_i != O_{i+1}`; then
    /// `q'_i · w[i]` is a new state and `w[i+1..]` separates it from `q'_{i+1}`.
    pub fn process_counterexample(
        &mut self,
        w: &Word,
        hypothesis: &SwitchedSystem,
    ) -> Result<CounterexampleRecord> {
        let before = self.obs.stats();
        let states = hypothesis.fa().run(w)?;
        let n = w.len();
        let mut evaluations = 0;
        let mut o = |learner: &mut Self, i: usize| {
            evaluations += 1;
            let word = learner.store.access[states[i]].concat(&w.suffix_from(i));
            learner.output_label(&word)
        };

        let (mut lo, mut hi) = (0, n);
        let o_lo = o(self, lo)?;
        let o_hi = o(self, hi)?;
        if o_lo == o_hi {
            return Err(Error::NotACounterexample);
        }
        // Invariant: O_lo == O_0 and O_hi != O_0.
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if o(self, mid)? != o_lo {
                hi = mid;
            } else {
                lo = mid;
            }
        }

        let searched = self.obs.stats().since(&before).output_computations;
        let before_fill = self.obs.stats();
        let access_word = self.store.access[states[lo]].append(w.events()[lo]);
        let test_word = w.suffix_from(lo + 1);
        if !self.store.tests.contains(&test_word) {
            self.push_test(test_word.clone())?;
        }
        if !self.store.access.contains(&access_word) {
            self.push_access(access_word.clone())?;
        }
        Ok(CounterexampleRecord {
            word: w.clone(),
            split: lo,
            access_word,
            test_word,
            output_evaluations: evaluations,
            output_computations: searched,
            fill_computations: self.obs.stats().since(&before_fill).output_computations,
        })
    }

    /// Runs the main loop until the equivalence oracle accepts a hypothesis.
    pub fn run<E>(mut self, eq: &E) -> Result<LearnResult>
    where
        E: EquivalenceOracle + ?Sized,
    {
        let started = Instant::now();
        let eq_before = eq.equivalence_queries();
        let k = self.obs.alphabet().len();
        let mut stats = LearnStats::default();
        loop {
            let cap = self
                .cfg
                .max_rounds
                .unwrap_or(10 * k * (self.store.access.len() + 1));
            if stats.rounds >= cap {
                return Err(Error::BudgetExceeded {
                    rounds: stats.rounds,
                });
            }
            stats.rounds += 1;
            self.close()?;
            let hypothesis = self.build_hypothesis()?;
            stats.hypothesis_sizes.push(hypothesis.num_nodes());
            match eq.check(&hypothesis)? {
                None => {
                    stats.queries = self.obs.stats();
                    stats.queries.equivalence_queries = eq.equivalence_queries() - eq_before;
                    stats.wall_ms = started.elapsed().as_millis() as u64;
                    stats.separability_checks = self.separability_checks;
                    stats.separability_violations = self.separability_violations;
                    return Ok(LearnResult {
                        system: hypothesis,
                        access_words: self.store.access,
                        test_words: self.store.tests,
                        stats,
                    });
                }
                Some(w) => {
                    let record = self.process_counterexample(&w, &hypothesis)?;
                    stats.counterexamples.push(record);
                }
            }
        }
    }
}

/// Learns the system behind `obs`, using `eq` to validate hypotheses.
pub fn learn<O, E>(obs: &O, eq: &E, cfg: LearnerConfig) -> Result<LearnResult>
where
    O: ObservationOracle + ?Sized,
    E: EquivalenceOracle + ?Sized,
{
    Learner::new(obs, cfg)?.run(eq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::EventAlphabet;
    use crate::linalg::{identity, Matrix};
    use crate::oracle::{WhiteBoxEquivalence, WhiteBoxObservation};
    use crate::switched_system::tests::four_node_system;

    fn words(alphabet: &EventAlphabet, ws: &[&str]) -> Vec<Word> {
        ws.iter().map(|s| alphabet.parse_word(s).unwrap()).collect()
    }

    #[test]
    fn first_closure_adds_e1_then_e2() {
        let obs = WhiteBoxObservation::new(four_node_system());
        let mut l = Learner::new(&obs, LearnerConfig::default()).unwrap();
        assert_eq!(
            l.is_closed().unwrap(),
            Closedness::Defect {
                access: 0,
                event: 0
            }
        );
        let e1 = obs.alphabet().parse_word("e1").unwrap();
        assert!(!l.t_equivalent(&e1, &Word::empty()).unwrap());
        assert!(l.t_equivalent(&e1, &e1).unwrap());
        assert_eq!(l.close().unwrap(), 2);
        assert_eq!(
            l.store().access_words(),
            words(obs.alphabet(), &["", "e1", "e2"])
        );
        assert_eq!(l.is_closed().unwrap(), Closedness::Closed);
        assert_eq!(l.close().unwrap(), 0);
    }

    #[test]
    fn counterexample_adds_e1e2_and_e2() {
        let obs = WhiteBoxObservation::new(four_node_system());
        let mut l = Learner::new(&obs, LearnerConfig::default()).unwrap();
        l.close().unwrap();
        let hyp = l.build_hypothesis().unwrap();
        assert_eq!(hyp.num_nodes(), 3);
        assert_eq!(
            hyp.fa().transitions(),
            vec![vec![1, 2], vec![0, 2], vec![2, 0]]
        );
        let w = obs.alphabet().parse_word("e1 e2 e2").unwrap();
        let rec = l.process_counterexample(&w, &hyp).unwrap();
        assert_eq!(rec.split, 1);
        assert_eq!(obs.alphabet().format_word(&rec.access_word), "e1 e2");
        assert_eq!(obs.alphabet().format_word(&rec.test_word), "e2");
        assert!(rec.output_evaluations <= 4);
        assert!(l.is_separable());
        assert_eq!(l.store().test_words(), words(obs.alphabet(), &["", "e2"]));
    }

    #[test]
    fn rejects_non_counterexample() {
        let obs = WhiteBoxObservation::new(four_node_system());
        let mut l = Learner::new(&obs, LearnerConfig::default()).unwrap();
        l.close().unwrap();
        let hyp = l.build_hypothesis().unwrap();
        let w = obs.alphabet().parse_word("e1 e1").unwrap();
        assert!(matches!(
            l.process_counterexample(&w, &hyp),
            Err(Error::NotACounterexample)
        ));
    }

    #[test]
    fn hypothesis_requires_closure() {
        let obs = WhiteBoxObservation::new(four_node_system());
        let mut l = Learner::new(&obs, LearnerConfig::default()).unwrap();
        assert!(matches!(
            l.build_hypothesis(),
            Err(Error::NotClosed {
                access: 0,
                event: 0
            })
        ));
    }

    #[test]
    fn learns_four_node_system() {
        let sys = four_node_system();
        let obs = WhiteBoxObservation::new(sys.clone());
        let eq = WhiteBoxEquivalence::new(sys.clone(), DEFAULT_LABEL_TOL);
        let res = learn(&obs, &eq, LearnerConfig::default()).unwrap();
        assert_eq!(res.system.num_nodes(), 4);
        assert_eq!(res.stats.queries.equivalence_queries, 2);
        assert_eq!(res.test_words, words(sys.alphabet(), &["", "e2"]));
        assert_eq!(eq.check(&res.system).unwrap(), None);
        let json = res.to_json();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["stats"]["equivalence_queries"], 2);
        assert_eq!(v["num_nodes"], 4);
    }

    #[test]
    fn single_node_system() {
        let alphabet = EventAlphabet::numbered(3).unwrap();
        let fa = Fa::new(alphabet, 0, vec![vec![0, 0, 0]], vec![0]).unwrap();
        let a = Matrix::from_rows(&[[0.5, 1.0], [-1.0, 2.0]]).unwrap();
        let sys = SwitchedSystem::new(fa, vec![a], 2).unwrap();
        let obs = WhiteBoxObservation::new(sys.clone());
        let eq = WhiteBoxEquivalence::new(sys, DEFAULT_LABEL_TOL);
        let res = learn(&obs, &eq, LearnerConfig::default()).unwrap();
        assert_eq!(res.system.num_nodes(), 1);
        assert_eq!(res.system.fa().transitions(), vec![vec![0, 0, 0]]);
        assert_eq!(res.stats.rounds, 1);
        assert_eq!(res.stats.queries.equivalence_queries, 1);
    }

    struct AlwaysWrong;

    impl EquivalenceOracle for AlwaysWrong {
        fn check(&self, _: &SwitchedSystem) -> Result<Option<Word>> {
            Ok(Some(Word::from(vec![0])))
        }

        fn equivalence_queries(&self) -> u64 {
            0
        }
    }

    #[test]
    fn broken_equivalence_oracle_fails_fast() {
        let alphabet = EventAlphabet::numbered(1).unwrap();
        let fa = Fa::new(alphabet, 0, vec![vec![0]], vec![0]).unwrap();
        let sys = SwitchedSystem::new(fa, vec![identity(2)], 2).unwrap();
        let obs = WhiteBoxObservation::new(sys);
        let err = learn(&obs, &AlwaysWrong, LearnerConfig::default()).unwrap_err();
        assert!(matches!(err, Error::NotACounterexample));
    }
}
