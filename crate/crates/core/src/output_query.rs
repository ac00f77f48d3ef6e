//! Recovering `Output(w)`, the matrix labelling the last node of the run of
//! `w`, from IO queries alone, and turning recovered matrices into discrete
//! label ids.
//!
//! With `X = last(exec(X0, w[..n-1]))` and `X' = last(exec(X0, w))` we have
//! `X' = Output(w) X`, so `Output(w)` is the solution of a square linear system
//! whenever the columns of `X` form a basis. That holds for any invertible
//! `X0` because every subsystem matrix is full rank.

use std::collections::HashMap;

use crate::automaton::{LabelId, Word};
use crate::error::{Error, Result};
use crate::linalg::{self, identity, Matrix, DEFAULT_PIVOT_TOL};
use crate::oracle::ObservationOracle;

/// How the initial states of the two IO queries are chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BasisStrategy {
    /// Always start from `I_d`: exactly two `d`-column queries per word.
    Identity,
    /// Start from `I_d`. While the reached basis `X` has a condition estimate
    /// above `max_condition`, or a scale outside
    /// `[1 / max_condition, max_condition]`, replace the initial states `X0` by `X0 R⁻¹`
    /// (`X = QR`) and query the prefix again, at most `max_passes` times.
    ///
    /// Products of many subsystem matrices become very ill-conditioned, and
    /// the simulator's final rounding is then amplified by `cond(X)` in the
    /// solve. Re-querying from rescaled initial states keeps `X` close to
    /// orthonormal at the cost of `d` extra IO queries per pass.
    Reconditioned {
        max_condition: f64,
        max_passes: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OutputConfig {
    /// Pivot threshold of the linear solve.
    pub pivot_tol: f64,
    pub basis: BasisStrategy,
    /// Refuse to solve when the final basis is worse conditioned than this.
    /// Rounding in the simulated states is then amplified past any useful
    /// label tolerance.
    pub max_solve_condition: f64,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            pivot_tol: DEFAULT_PIVOT_TOL,
            basis: BasisStrategy::Reconditioned {
                max_condition: 1e4,
                max_passes: 8,
            },
            max_solve_condition: 1e16,
        }
    }
}

impl OutputConfig {
    pub fn identity_basis() -> Self {
        Self {
            basis: BasisStrategy::Identity,
            ..Self::default()
        }
    }
}

/// Intermediate values of one output computation.
#[derive(Clone, Debug)]
pub struct OutputTrace {
    /// Initial states used for the final pair of queries.
    pub initial: Matrix,
    /// `last(exec(initial, w[..n-1]))`; for `w = ε` this is `initial` itself.
    pub basis: Matrix,
    /// `last(exec(initial, w))`.
    pub image: Matrix,
    /// Number of re-conditioning passes performed.
    pub passes: usize,
    pub output: Matrix,
}

/// `Output(w)` recovered from IO queries.
pub fn compute_output<O>(obs: &O, w: &Word, cfg: &OutputConfig) -> Result<Matrix>
where
    O: ObservationOracle + ?Sized,
{
    Ok(compute_output_trace(obs, w, cfg)?.output)
}

fn last(mut states: Vec<Matrix>) -> Matrix {
    states.pop().expect("an execution is never empty")
}

/// Like [`compute_output`], keeping the matrices it was derived from.
pub fn compute_output_trace<O>(obs: &O, w: &Word, cfg: &OutputConfig) -> Result<OutputTrace>
where
    O: ObservationOracle + ?Sized,
{
    let d = obs.dimension();
    obs.counter().add_output();
    let mut x0 = identity(d);

    if w.is_empty() {
        // exec(I, ε) = I, A_γ(q0)
        let image = last(obs.exec_query(&x0, w)?);
        return Ok(OutputTrace {
            basis: x0.clone(),
            initial: x0,
            output: image.clone(),
            image,
            passes: 0,
        });
    }

    let prefix = w.prefix(w.len() - 1);
    let mut basis = last(obs.exec_query(&x0, &prefix)?);
    let mut passes = 0;
    if let BasisStrategy::Reconditioned {
        max_condition,
        max_passes,
    } = cfg.basis
    {
        while passes < max_passes {
            let Some(f) = linalg::orthonormalizing_factor(&basis) else {
                break;
            };
            let well_scaled = f.scale * max_condition >= 1.0 && f.scale <= max_condition;
            if f.condition <= max_condition && well_scaled {
                break;
            }
            x0 = linalg::mat_mul(&x0, &f.r_inv)?;
            basis = last(obs.exec_query(&x0, &prefix)?);
            passes += 1;
        }
    }
    if let Some(f) = linalg::orthonormalizing_factor(&basis) {
        if f.condition > cfg.max_solve_condition {
            return Err(Error::IllConditioned {
                condition: f.condition,
                limit: cfg.max_solve_condition,
            });
        }
    }
    let image = last(obs.exec_query(&x0, w)?);
    let output = linalg::solve_for_a(&basis, &image, cfg.pivot_tol)?;
    Ok(OutputTrace {
        initial: x0,
        basis,
        image,
        passes,
        output,
    })
}

/// Recovered matrices interned as label ids.
///
/// Any two canonical matrices differ by more than `2 * tol` in max-abs norm,
/// so a matrix within `tol` of one of them is within `tol` of no other.
#[derive(Clone, Debug)]
pub struct LabelRegistry {
    canonical: Vec<Matrix>,
    tol: f64,
}

impl LabelRegistry {
    pub fn new(tol: f64) -> Self {
        Self {
            canonical: Vec::new(),
            tol,
        }
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn len(&self) -> usize {
        self.canonical.len()
    }

    pub fn is_empty(&self) -> bool {
        self.canonical.is_empty()
    }

    pub fn matrices(&self) -> &[Matrix] {
        &self.canonical
    }

    pub fn matrix(&self, id: LabelId) -> &Matrix {
        &self.canonical[id]
    }

    /// Id of the canonical matrix within `tol` of `m`, registering `m` as a
    /// new label if there is none.
    ///
    /// A matrix within `tol` of two labels, or not within `tol` of any label
    /// but within `2 * tol` of one, cannot be placed without breaking the
    /// separation of labels and is rejected as ambiguous.
    pub fn classify(&mut self, m: &Matrix) -> Result<LabelId> {
        let mut near = Vec::new();
        let mut close = Vec::new();
        for (id, c) in self.canonical.iter().enumerate() {
            let dist = c.max_abs_diff(m)?;
            if dist <= self.tol {
                near.push(id);
            } else if dist <= 2.0 * self.tol {
                close.push(id);
            }
        }
        match near.as_slice() {
            [id] => Ok(*id),
            [] if close.is_empty() => {
                self.canonical.push(m.clone());
                Ok(self.canonical.len() - 1)
            }
            [] => Err(Error::AmbiguousLabel(close)),
            _ => Err(Error::AmbiguousLabel(near)),
        }
    }
}

/// Memoized label ids keyed by the exact word.
#[derive(Clone, Debug, Default)]
pub struct OutputCache {
    map: HashMap<Word, LabelId>,
}

impl OutputCache {
    pub fn get(&self, w: &Word) -> Option<LabelId> {
        self.map.get(w).copied()
    }

    pub fn insert(&mut self, w: Word, id: LabelId) {
        self.map.insert(w, id);
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn clear(&mut self) {
        self.map.clear();
    }
}

/// Label id of `Output(w)`, computed at most once per word.
pub fn cached_output<O>(
    obs: &O,
    registry: &mut LabelRegistry,
    cache: &mut OutputCache,
    w: &Word,
    cfg: &OutputConfig,
) -> Result<LabelId>
where
    O: ObservationOracle + ?Sized,
{
    if let Some(id) = cache.get(w) {
        return Ok(id);
    }
    let m = compute_output(obs, w, cfg)?;
    let id = registry.classify(&m)?;
    cache.insert(w.clone(), id);
    Ok(id)
}
