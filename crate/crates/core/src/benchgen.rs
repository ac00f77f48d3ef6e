//! Seeded random switched systems and the benchmark runner built on them.
//!
//! Transitions and node labels are drawn uniformly; matrix entries are uniform
//! in `[-1, 1]` and rejection-sampled until full rank. Randomness comes from
//! ChaCha8 so a seed reproduces the same model on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::automaton::{EventAlphabet, Fa};
use crate::error::{Error, Result};
use crate::learner::{learn, LearnResult, LearnerConfig};
use crate::linalg::{is_full_rank, Matrix};
use crate::oracle::{systems_equivalent, WhiteBoxEquivalence, WhiteBoxObservation};
use crate::switched_system::SwitchedSystem;

const STRUCTURE_ATTEMPTS: usize = 64;
const MATRIX_ATTEMPTS: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub num_nodes: usize,
    pub num_events: usize,
    pub num_labels: usize,
    pub dim: usize,
    pub seed: u64,
    #[serde(default = "default_rank_threshold")]
    pub full_rank_threshold: f64,
    #[serde(default = "default_true")]
    pub require_reachable: bool,
}

fn default_rank_threshold() -> f64 {
    1e-6
}

fn default_true() -> bool {
    true
}

impl GenConfig {
    pub fn new(
        num_nodes: usize,
        num_events: usize,
        num_labels: usize,
        dim: usize,
        seed: u64,
    ) -> Self {
        Self {
            num_nodes,
            num_events,
            num_labels,
            dim,
            seed,
            full_rank_threshold: default_rank_threshold(),
            require_reachable: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("nodes", self.num_nodes),
            ("events", self.num_events),
            ("labels", self.num_labels),
            ("dimension", self.dim),
        ] {
            if v == 0 {
                return Err(Error::GenerationFailed(format!(
                    "{name} must be at least 1"
                )));
            }
        }
        if !(self.full_rank_threshold >= 0.0) {
            return Err(Error::GenerationFailed(
                "rank threshold must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

fn random_fa(cfg: &GenConfig, alphabet: &EventAlphabet, rng: &mut ChaCha8Rng) -> Result<Fa> {
    let n = cfg.num_nodes;
    let delta = (0..n)
        .map(|_| {
            (0..cfg.num_events)
                .map(|_| rng.random_range(0..n))
                .collect()
        })
        .collect();
    let gamma = (0..n)
        .map(|_| rng.random_range(0..cfg.num_labels))
        .collect();
    Fa::new(alphabet.clone(), 0, delta, gamma)
}

/// Renumbers label ids to `0..N` in order of first use.
fn compact_labels(fa: &Fa) -> Result<(Fa, usize)> {
    let mut map: Vec<Option<usize>> = Vec::new();
    let mut next = 0;
    let gamma = fa
        .gamma()
        .iter()
        .map(|&l| {
            if l >= map.len() {
                map.resize(l + 1, None);
            }
            *map[l].get_or_insert_with(|| {
                next += 1;
                next - 1
            })
        })
        .collect();
    let fa = Fa::new(fa.alphabet().clone(), fa.initial(), fa.transitions(), gamma)?;
    Ok((fa, next))
}

fn random_full_rank(d: usize, threshold: f64, rng: &mut ChaCha8Rng) -> Result<Matrix> {
    for _ in 0..MATRIX_ATTEMPTS {
        let data = (0..d * d).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let m = Matrix::new(d, d, data)?;
        if is_full_rank(&m, threshold) {
            return Ok(m);
        }
    }
    Err(Error::GenerationFailed(format!(
        "no full-rank {d}x{d} matrix after {MATRIX_ATTEMPTS} draws"
    )))
}

/// A random complete switched system with a single initial node (node 0).
///
/// With `require_reachable`, transition tables are redrawn until every node is
/// reachable; if that keeps failing the reachable part of the last draw is
/// used, so the node count can then be below `num_nodes`. Only labels that
/// some node uses get a matrix.
pub fn random_system(cfg: &GenConfig) -> Result<SwitchedSystem> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let alphabet = EventAlphabet::numbered(cfg.num_events)?;

    let mut fa = random_fa(cfg, &alphabet, &mut rng)?;
    if cfg.require_reachable {
        let mut attempts = 1;
        while fa.reachable_part().num_nodes() < fa.num_nodes() && attempts < STRUCTURE_ATTEMPTS {
            fa = random_fa(cfg, &alphabet, &mut rng)?;
            attempts += 1;
        }
        fa = fa.reachable_part();
    }
    let (fa, used) = compact_labels(&fa)?;
    let matrices = (0..used)
        .map(|_| random_full_rank(cfg.dim, cfg.full_rank_threshold, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    SwitchedSystem::new(fa, matrices, cfg.dim)
}

/// One CSV row of a benchmark sweep.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchRow {
    pub nodes: usize,
    pub events: usize,
    pub labels: usize,
    pub d: usize,
    pub seed: u64,
    pub io_queries: u64,
    pub output_computations: u64,
    pub equivalence_queries: u64,
    pub rounds: usize,
    pub wall_ms: u64,
}

#[derive(Clone, Debug)]
pub struct BenchOutcome {
    pub row: BenchRow,
    pub hidden: SwitchedSystem,
    pub result: LearnResult,
    /// Learned model passed an exact product check against the hidden one.
    pub verified: bool,
}

/// Generates a system, learns it through white-box oracles, and checks the
/// result against the generated model.
pub fn run_benchmark(cfg: &GenConfig, learner: &LearnerConfig) -> Result<BenchOutcome> {
    let hidden = random_system(cfg)?;
    let obs = WhiteBoxObservation::new(hidden.clone());
    let eq = WhiteBoxEquivalence::new(hidden.clone(), learner.label_tol);
    let result = learn(&obs, &eq, learner.clone())?;
    let verified = systems_equivalent(&hidden, &result.system, learner.label_tol)?.is_none();
    let s = result.stats.summary();
    Ok(BenchOutcome {
        row: BenchRow {
            nodes: cfg.num_nodes,
            events: cfg.num_events,
            labels: cfg.num_labels,
            d: cfg.dim,
            seed: cfg.seed,
            io_queries: s.io_queries,
            output_computations: s.output_computations,
            equivalence_queries: s.equivalence_queries,
            rounds: s.rounds,
            wall_ms: s.wall_ms,
        },
        hidden,
        result,
        verified,
    })
}
