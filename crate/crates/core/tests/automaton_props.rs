mod common;

use common::nerode_classes;
use common::strategies::{fa, word};
use proptest::prelude::*;
use swlearn::automaton::{language_equivalent, Fa, Word};

/// Every word over `k` events of length at most `max_len`, shortest first.
fn all_words(k: usize, max_len: usize) -> Vec<Word> {
    let mut out = vec![Word::empty()];
    let mut layer = vec![Word::empty()];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|w| (0..k).map(move |e| w.append(e)))
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

fn walk(fa: &Fa, w: &Word) -> Vec<usize> {
    let table = fa.transitions();
    let mut q = fa.initial();
    let mut run = vec![q];
    for &e in w.iter() {
        q = table[q][e];
        run.push(q);
    }
    run
}

/// Two automata over the same alphabet.
fn fa_pair() -> impl Strategy<Value = (Fa, Fa)> {
    (1usize..=2).prop_flat_map(|k| {
        let one = |k: usize| {
            (1usize..=3).prop_flat_map(move |n| {
                (
                    prop::collection::vec(prop::collection::vec(0..n, k), n),
                    prop::collection::vec(0usize..2, n),
                )
                    .prop_map(move |(delta, gamma)| {
                        Fa::new(
                            swlearn::EventAlphabet::numbered(k).unwrap(),
                            0,
                            delta,
                            gamma,
                        )
                        .unwrap()
                    })
            })
        };
        (one(k), one(k))
    })
}

proptest! {
    #[test]
    fn run_matches_rewalk(a in fa(8, 3, 4), raw in word(3, 12)) {
        let w = Word::from(raw.iter().map(|&e| e % a.alphabet().len()).collect::<Vec<_>>());
        let run = a.run(&w).unwrap();
        prop_assert_eq!(run.len(), w.len() + 1);
        prop_assert_eq!(&run, &walk(&a, &w));
        let labels = a.language_of(&w).unwrap();
        prop_assert_eq!(labels.len(), w.len() + 1);
        prop_assert_eq!(labels, run.iter().map(|&q| a.gamma()[q]).collect::<Vec<_>>());
    }

    #[test]
    fn run_is_compositional(a in fa(8, 3, 4), u in word(3, 6), v in word(3, 6)) {
        let k = a.alphabet().len();
        let fold = |w: &Word| Word::from(w.iter().map(|&e| e % k).collect::<Vec<_>>());
        let (u, v) = (fold(&u), fold(&v));
        let full = a.run(&u.concat(&v)).unwrap();
        let mid = a.walk(a.initial(), &u).unwrap();
        let tail = a.rerooted(mid).unwrap().run(&v).unwrap();
        prop_assert_eq!(&full[u.len()..], &tail[..]);
    }

    #[test]
    fn product_check_matches_brute_force((a, b) in fa_pair()) {
        let bound = a.num_nodes() * b.num_nodes();
        let words = all_words(a.alphabet().len(), bound);
        let first_diff = words
            .iter()
            .find(|w| a.output_of(w).unwrap() != b.output_of(w).unwrap());
        let found = language_equivalent(&a, &b, |x, y| x == y).unwrap();
        let back = language_equivalent(&b, &a, |x, y| x == y).unwrap();
        prop_assert_eq!(found.is_none(), back.is_none());
        match (found, first_diff) {
            (None, None) => {}
            (Some(w), Some(d)) => {
                prop_assert_ne!(a.output_of(&w).unwrap(), b.output_of(&w).unwrap());
                prop_assert_eq!(w.len(), d.len(), "counterexample is not shortest");
            }
            (f, d) => prop_assert!(false, "product {:?} vs brute force {:?}", f, d),
        }
    }

    #[test]
    fn reachable_part_is_equivalent(a in fa(8, 3, 4)) {
        let r = a.reachable_part();
        prop_assert!(r.num_nodes() <= a.num_nodes());
        prop_assert_eq!(r.initial(), 0);
        prop_assert_eq!(language_equivalent(&a, &r, |x, y| x == y).unwrap(), None);
    }

    #[test]
    fn nerode_classes_agree_with_product_check(a in fa(6, 2, 3)) {
        // Two states are equivalent iff the automata rooted there are.
        let classes = nerode_classes(&a);
        for p in 0..a.num_nodes() {
            for q in 0..a.num_nodes() {
                let same = language_equivalent(
                    &a.rerooted(p).unwrap(),
                    &a.rerooted(q).unwrap(),
                    |x, y| x == y,
                )
                .unwrap()
                .is_none();
                prop_assert_eq!(same, classes[p] == classes[q]);
            }
        }
    }
}
