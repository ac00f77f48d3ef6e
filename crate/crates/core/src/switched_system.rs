//! Switched linear systems: an automaton whose node labels are full-rank
//! `d x d` matrices, plus the JSON model format.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::automaton::{EventAlphabet, Fa, LabelId, Word};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, DEFAULT_PIVOT_TOL};

/// A reason a model is not a valid switched system.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    RankDeficientLabel(LabelId),
    MissingMatrix(LabelId),
    BadDimension(LabelId),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::RankDeficientLabel(j) => write!(f, "label {j} is not full rank"),
            Violation::MissingMatrix(j) => write!(f, "label {j} has no matrix"),
            Violation::BadDimension(j) => write!(f, "label {j} has the wrong dimension"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SwitchedSystem {
    fa: Fa,
    matrices: Vec<Matrix>,
    dim: usize,
}

impl SwitchedSystem {
    /// Assembles a system and rejects it if [`validate`](Self::validate)
    /// reports anything at the default pivot tolerance.
    pub fn new(fa: Fa, matrices: Vec<Matrix>, dim: usize) -> Result<Self> {
        let sys = Self::from_parts(fa, matrices, dim);
        let violations = sys.validate(DEFAULT_PIVOT_TOL);
        if violations.is_empty() {
            Ok(sys)
        } else {
            Err(Error::Validation(violations))
        }
    }

    /// Assembles a system without checking it.
    pub fn from_parts(fa: Fa, matrices: Vec<Matrix>, dim: usize) -> Self {
        Self { fa, matrices, dim }
    }

    pub fn fa(&self) -> &Fa {
        &self.fa
    }

    pub fn alphabet(&self) -> &EventAlphabet {
        self.fa.alphabet()
    }

    pub fn matrices(&self) -> &[Matrix] {
        &self.matrices
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_nodes(&self) -> usize {
        self.fa.num_nodes()
    }

    pub fn matrix(&self, label: LabelId) -> &Matrix {
        &self.matrices[label]
    }

    /// The matrix labelling the last node of the run of `w`.
    pub fn output_matrix(&self, w: &Word) -> Result<&Matrix> {
        Ok(self.matrix(self.fa.output_of(w)?))
    }

    /// Lists every broken invariant; empty means the model is valid.
    pub fn validate(&self, rank_tol: f64) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut used: Vec<LabelId> = self.fa.gamma().to_vec();
        used.sort_unstable();
        used.dedup();
        for &j in &used {
            if j >= self.matrices.len() {
                out.push(Violation::MissingMatrix(j));
            }
        }
        for (j, m) in self.matrices.iter().enumerate() {
            if m.rows() != self.dim || m.cols() != self.dim {
                out.push(Violation::BadDimension(j));
            } else if !linalg::is_full_rank(m, rank_tol) {
                out.push(Violation::RankDeficientLabel(j));
            }
        }
        out
    }

    /// Execution from the state matrix `x0` (`d x k`, one initial state per
    /// column): `X0 X1 ... X_{n+1}` with `X_{i+1} = Ā_i X_i`, where `Ā_i` is the
    /// matrix of the `i`-th node of the run. The last node's matrix is applied
    /// too, so the result has `|w| + 2` entries.
    pub fn exec(&self, x0: &Matrix, w: &Word) -> Result<Vec<Matrix>> {
        if x0.rows() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "initial state has {} rows, system dimension is {}",
                x0.rows(),
                self.dim
            )));
        }
        let run = self.fa.run(w)?;
        let mut states = Vec::with_capacity(run.len() + 1);
        states.push(x0.clone());
        let mut x = x0.clone();
        for q in run {
            x = linalg::mat_mul(self.matrix(self.fa.label(q)), &x)?;
            if !x.is_finite() {
                return Err(Error::NonFinite);
            }
            states.push(x.clone());
        }
        Ok(states)
    }

    pub fn to_model(&self) -> ModelFile {
        ModelFile {
            d: self.dim,
            events: self.alphabet().names().to_vec(),
            num_nodes: self.num_nodes(),
            initial: self.fa.initial(),
            delta: self.fa.transitions(),
            gamma: self.fa.gamma().to_vec(),
            matrices: self.matrices.clone(),
        }
    }

    pub fn from_model(model: ModelFile) -> Result<Self> {
        if model.d == 0 {
            return Err(Error::Parse("dimension must be positive".into()));
        }
        if model.num_nodes != model.gamma.len() {
            return Err(Error::Parse(format!(
                "num_nodes is {} but gamma has {} entries",
                model.num_nodes,
                model.gamma.len()
            )));
        }
        let alphabet = EventAlphabet::new(model.events)?;
        let fa = Fa::new(alphabet, model.initial, model.delta, model.gamma)?;
        Self::new(fa, model.matrices, model.d)
    }

    pub fn save_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_model()).expect("model serializes")
    }

    /// Parses and validates a model.
    pub fn load_json(text: &str) -> Result<Self> {
        let model: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_model(model)
    }
}

/// On-disk model. `matrices[k]` is the matrix of label id `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub d: usize,
    pub events: Vec<String>,
    pub num_nodes: usize,
    pub initial: usize,
    pub delta: Vec<Vec<usize>>,
    pub gamma: Vec<usize>,
    pub matrices: Vec<Matrix>,
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::automaton::tests::four_node_fa;
    use crate::linalg::identity;

    pub(crate) fn four_node_system() -> SwitchedSystem {
        let m = |r: &[&[f64]]| Matrix::from_rows(r).unwrap();
        SwitchedSystem::new(
            four_node_fa(),
            vec![
                m(&[&[1.0, 0.3], &[0.7, 1.2]]),
                m(&[&[0.4, 0.8], &[-0.7, 0.6]]),
                m(&[&[1.2, 0.7], &[1.6, 0.1]]),
            ],
            2,
        )
        .unwrap()
    }

    fn word(sys: &SwitchedSystem, s: &str) -> Word {
        sys.alphabet().parse_word(s).unwrap()
    }

    #[test]
    fn exec_sample_trajectory() {
        let sys = four_node_system();
        let x = Matrix::column_vector(&[0.5, 0.5]).unwrap();
        let states = sys.exec(&x, &word(&sys, "e1 e2 e1 e2 e2")).unwrap();
        assert_eq!(states.len(), 7);
        let expected = [
            [0.5, 0.5],
            [0.65, 0.95],
            [1.445, 1.135],
            [1.486, -0.3305],
            [0.33, -1.2385],
            [-0.04155, -1.2552],
            [-1.02078, -0.724035],
        ];
        for (s, e) in states.iter().zip(expected) {
            assert!((s.get(0, 0) - e[0]).abs() < 1e-9, "{s} vs {e:?}");
            assert!((s.get(1, 0) - e[1]).abs() < 1e-9, "{s} vs {e:?}");
        }
    }

    #[test]
    fn exec_single_event() {
        let sys = four_node_system();
        let x = Matrix::column_vector(&[1.0, 0.0]).unwrap();
        let states = sys.exec(&x, &word(&sys, "e1")).unwrap();
        let flat: Vec<Vec<f64>> = states.iter().map(|s| s.column(0)).collect();
        let expected = [[1.0, 0.0], [1.0, 0.7], [1.69, 1.67]];
        for (s, e) in flat.iter().zip(expected) {
            assert!((s[0] - e[0]).abs() < 1e-12 && (s[1] - e[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn exec_empty_word_applies_initial_label() {
        let sys = four_node_system();
        let states = sys.exec(&identity(2), &Word::empty()).unwrap();
        assert_eq!(states.len(), 2);
        assert_eq!(states[0], identity(2));
        assert_eq!(&states[1], sys.matrix(0));
    }

    #[test]
    fn exec_errors() {
        let sys = four_node_system();
        assert!(matches!(
            sys.exec(&identity(3), &Word::empty()),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            sys.exec(&identity(2), &Word::from(vec![5])),
            Err(Error::InvalidEvent(_))
        ));
    }

    #[test]
    fn validate_reports_violations() {
        let sys = four_node_system();
        assert!(sys.validate(DEFAULT_PIVOT_TOL).is_empty());

        let mut mats = sys.matrices().to_vec();
        mats[1] = Matrix::zeros(2, 2);
        let bad = SwitchedSystem::from_parts(sys.fa().clone(), mats, 2);
        assert_eq!(
            bad.validate(DEFAULT_PIVOT_TOL),
            vec![Violation::RankDeficientLabel(1)]
        );

        let mut mats = sys.matrices().to_vec();
        mats[2] = identity(3);
        let bad = SwitchedSystem::from_parts(sys.fa().clone(), mats, 2);
        assert_eq!(
            bad.validate(DEFAULT_PIVOT_TOL),
            vec![Violation::BadDimension(2)]
        );

        let bad = SwitchedSystem::from_parts(sys.fa().clone(), sys.matrices()[..2].to_vec(), 2);
        assert_eq!(
            bad.validate(DEFAULT_PIVOT_TOL),
            vec![Violation::MissingMatrix(2)]
        );
        assert!(matches!(
            SwitchedSystem::new(sys.fa().clone(), sys.matrices()[..2].to_vec(), 2),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn json_round_trip() {
        let sys = four_node_system();
        let text = sys.save_json();
        let back = SwitchedSystem::load_json(&text).unwrap();
        assert_eq!(back, sys);
        assert_eq!(back.save_json(), text);
        assert_eq!(back.num_nodes(), 4);
        assert_eq!(back.matrices().len(), 3);
        assert_eq!(back.alphabet().len(), 2);
    }

    #[test]
    fn load_rejects_missing_matrix_and_garbage() {
        let sys = four_node_system();
        let mut model = sys.to_model();
        model.matrices.pop();
        let text = serde_json::to_string(&model).unwrap();
        assert!(matches!(
            SwitchedSystem::load_json(&text),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            SwitchedSystem::load_json("{\"d\": 2"),
            Err(Error::Parse(_))
        ));
    }
}
