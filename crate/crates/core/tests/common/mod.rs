#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use swlearn::automaton::{EventAlphabet, Fa, LabelId, Word};
use swlearn::benchgen::GenConfig;
use swlearn::{Matrix, SwitchedSystem};

pub fn m(rows: &[&[f64]]) -> Matrix {
    Matrix::from_rows(rows).unwrap()
}

/// Four nodes q0..q3 over e1, e2 with labels A1, A2, A2, A3.
pub fn four_node_system() -> SwitchedSystem {
    let fa = Fa::new(
        EventAlphabet::new(["e1", "e2"]).unwrap(),
        0,
        vec![vec![3, 1], vec![2, 0], vec![1, 3], vec![0, 2]],
        vec![0, 1, 1, 2],
    )
    .unwrap();
    SwitchedSystem::new(
        fa,
        vec![
            m(&[&[1.0, 0.3], &[0.7, 1.2]]),
            m(&[&[0.4, 0.8], &[-0.7, 0.6]]),
            m(&[&[1.2, 0.7], &[1.6, 0.1]]),
        ],
        2,
    )
    .unwrap()
}

/// Three-mode plant: `f` (fault) keeps the current mode, `g` advances the
/// schedule A1 -> A2 -> A2 -> A3 -> A1.
pub fn fault_mode_system() -> SwitchedSystem {
    let fa = Fa::new(
        EventAlphabet::new(["f", "g"]).unwrap(),
        0,
        vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 0]],
        vec![0, 1, 1, 2],
    )
    .unwrap();
    SwitchedSystem::new(
        fa,
        vec![
            m(&[&[0.2, 0.4, 0.8], &[0.3, 0.6, 0.9], &[0.5, 1.5, 1.5]]),
            m(&[&[-1.0, 0.1, 0.2], &[0.3, -1.0, 0.4], &[0.5, 0.6, -1.0]]),
            m(&[&[-0.1, -0.2, 0.3], &[-0.1, -0.4, 0.6], &[0.8, 0.7, -0.6]]),
        ],
        3,
    )
    .unwrap()
}

/// The hypothesis built from `Q = {ε, e1, e2}`, `T = {ε}` on the four-node
/// system: nodes ε (A1), e1 (A3), e2 (A2).
pub fn three_node_hypothesis() -> SwitchedSystem {
    let sys = four_node_system();
    let fa = Fa::new(
        sys.alphabet().clone(),
        0,
        vec![vec![1, 2], vec![0, 2], vec![2, 0]],
        vec![0, 2, 1],
    )
    .unwrap();
    SwitchedSystem::new(fa, sys.matrices().to_vec(), 2).unwrap()
}

pub fn words(alphabet: &EventAlphabet, ws: &[&str]) -> Vec<Word> {
    ws.iter().map(|s| alphabet.parse_word(s).unwrap()).collect()
}

/// Partition refinement over label and successor classes. Returns the class
/// of every node; classes coincide exactly for language-equivalent states.
pub fn nerode_classes(fa: &Fa) -> Vec<usize> {
    let n = fa.num_nodes();
    let k = fa.alphabet().len();
    let mut class: Vec<usize> = {
        let mut seen: Vec<LabelId> = Vec::new();
        fa.gamma()
            .iter()
            .map(|l| match seen.iter().position(|x| x == l) {
                Some(i) => i,
                None => {
                    seen.push(*l);
                    seen.len() - 1
                }
            })
            .collect()
    };
    loop {
        let mut sigs: Vec<Vec<usize>> = Vec::new();
        let next: Vec<usize> = (0..n)
            .map(|q| {
                let mut sig = vec![class[q]];
                sig.extend((0..k).map(|e| class[fa.step(q, e)]));
                match sigs.iter().position(|s| *s == sig) {
                    Some(i) => i,
                    None => {
                        sigs.push(sig);
                        sigs.len() - 1
                    }
                }
            })
            .collect();
        let before = *class.iter().max().unwrap();
        let after = *next.iter().max().unwrap();
        class = next;
        if before == after {
            return class;
        }
    }
}

/// Number of states of a minimal automaton for the reachable language.
pub fn minimal_node_count(fa: &Fa) -> usize {
    let r = fa.reachable_part();
    let classes = nerode_classes(&r);
    classes.iter().max().unwrap() + 1
}

pub fn random_word(rng: &mut impl Rng, events: usize, max_len: usize) -> Word {
    let len = rng.random_range(0..=max_len);
    Word::from(
        (0..len)
            .map(|_| rng.random_range(0..events))
            .collect::<Vec<_>>(),
    )
}

/// Configuration of the `i`-th system of the seeded property suite.
pub fn suite_config(i: u64) -> GenConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + i);
    GenConfig::new(
        rng.random_range(1..=12),
        rng.random_range(1..=4),
        rng.random_range(1..=6),
        rng.random_range(1..=5),
        1000 + i,
    )
}

pub mod strategies {
    use proptest::prelude::*;
    use swlearn::automaton::{EventAlphabet, Fa, Word};
    use swlearn::linalg::{is_full_rank, Matrix};

    /// Complete FA with `1..=max_nodes` nodes over `1..=max_events` events
    /// and labels below `labels`.
    pub fn fa(max_nodes: usize, max_events: usize, labels: usize) -> impl Strategy<Value = Fa> {
        (1..=max_nodes, 1..=max_events).prop_flat_map(move |(n, k)| {
            (
                prop::collection::vec(prop::collection::vec(0..n, k), n),
                prop::collection::vec(0..labels, n),
                0..n,
            )
                .prop_map(move |(delta, gamma, init)| {
                    Fa::new(EventAlphabet::numbered(k).unwrap(), init, delta, gamma).unwrap()
                })
        })
    }

    pub fn word(events: usize, max_len: usize) -> impl Strategy<Value = Word> {
        prop::collection::vec(0..events, 0..=max_len).prop_map(Word::from)
    }

    pub fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
        prop::collection::vec(-1.0f64..1.0, rows * cols)
            .prop_map(move |data| Matrix::new(rows, cols, data).unwrap())
    }

    pub fn full_rank(d: usize) -> impl Strategy<Value = Matrix> {
        matrix(d, d).prop_filter("full rank", |m| is_full_rank(m, 1e-6))
    }
}
