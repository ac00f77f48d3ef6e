//! Event-deterministic labelled finite automata.
//!
//! Nodes carry opaque label ids; what a label *means* (for switched systems, a
//! matrix) lives elsewhere, and comparisons between labels of two automata are
//! injected as a predicate.

use std::collections::{HashMap, VecDeque};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = usize;
pub type EventId = usize;
pub type LabelId = usize;

/// Ordered, duplicate-free list of event names.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct EventAlphabet {
    names: Vec<String>,
}

impl EventAlphabet {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(Error::MalformedAutomaton("alphabet is empty".into()));
        }
        for (i, n) in names.iter().enumerate() {
            if n.is_empty() || n.chars().any(char::is_whitespace) {
                return Err(Error::MalformedAutomaton(format!(
                    "event name {n:?} must be non-empty without whitespace"
                )));
            }
            if names[..i].contains(n) {
                return Err(Error::MalformedAutomaton(format!("duplicate event {n:?}")));
            }
        }
        Ok(Self { names })
    }

    /// Events named `e1`, `e2`, ... `eN`.
    pub fn numbered(n: usize) -> Result<Self> {
        Self::new((1..=n).map(|i| format!("e{i}")))
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, e: EventId) -> &str {
        &self.names[e]
    }

    pub fn index_of(&self, name: &str) -> Option<EventId> {
        self.names.iter().position(|n| n == name)
    }

    /// Parses a whitespace-separated list of event names. The empty string is ε.
    pub fn parse_word(&self, text: &str) -> Result<Word> {
        text.split_whitespace()
            .map(|tok| {
                self.index_of(tok)
                    .ok_or_else(|| Error::InvalidEvent(format!("unknown event {tok:?}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Word::from)
    }

    /// Space-separated event names; `ε` for the empty word.
    pub fn format_word(&self, w: &Word) -> String {
        if w.is_empty() {
            return "ε".into();
        }
        w.iter()
            .map(|&e| self.names.get(e).map(String::as_str).unwrap_or("?"))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn check_word(&self, w: &Word) -> Result<()> {
        match w.iter().find(|&&e| e >= self.len()) {
            Some(e) => Err(Error::InvalidEvent(format!(
                "event index {e} out of range for {} events",
                self.len()
            ))),
            None => Ok(()),
        }
    }
}

impl TryFrom<Vec<String>> for EventAlphabet {
    type Error = Error;

    fn try_from(v: Vec<String>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<EventAlphabet> for Vec<String> {
    fn from(a: EventAlphabet) -> Self {
        a.names
    }
}

/// A finite sequence of event indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<EventId>);

impl Word {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn events(&self) -> &[EventId] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, EventId> {
        self.0.iter()
    }

    /// `self · other`.
    pub fn concat(&self, other: &Word) -> Word {
        let mut v = Vec::with_capacity(self.len() + other.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// `self · e`.
    pub fn append(&self, e: EventId) -> Word {
        let mut v = self.0.clone();
        v.push(e);
        Word(v)
    }

    /// The first `n` events.
    pub fn prefix(&self, n: usize) -> Word {
        Word(self.0[..n].to_vec())
    }

    /// Events from position `i` (0-based) to the end.
    pub fn suffix_from(&self, i: usize) -> Word {
        Word(self.0[i..].to_vec())
    }
}

impl From<Vec<EventId>> for Word {
    fn from(v: Vec<EventId>) -> Self {
        Word(v)
    }
}

impl Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.events().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Vec::<EventId>::deserialize(d).map(Word::from)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "ε");
        }
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

/// A complete, event-deterministic automaton with labelled nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fa {
    alphabet: EventAlphabet,
    initial: NodeId,
    /// `delta[q * |Σ| + e]`
    delta: Vec<NodeId>,
    gamma: Vec<LabelId>,
}

impl Fa {
    /// `delta[q][e]` is the successor of node `q` on event `e`.
    pub fn new(
        alphabet: EventAlphabet,
        initial: NodeId,
        delta: Vec<Vec<NodeId>>,
        gamma: Vec<LabelId>,
    ) -> Result<Self> {
        let n = gamma.len();
        if n == 0 {
            return Err(Error::MalformedAutomaton("automaton has no nodes".into()));
        }
        if delta.len() != n {
            return Err(Error::MalformedAutomaton(format!(
                "{n} labels but {} transition rows",
                delta.len()
            )));
        }
        if initial >= n {
            return Err(Error::MalformedAutomaton(format!(
                "initial node {initial} out of range"
            )));
        }
        let k = alphabet.len();
        let mut flat = Vec::with_capacity(n * k);
        for (q, row) in delta.iter().enumerate() {
            if row.len() != k {
                return Err(Error::MalformedAutomaton(format!(
                    "node {q} has {} transitions, expected {k}",
                    row.len()
                )));
            }
            if let Some(bad) = row.iter().find(|&&t| t >= n) {
                return Err(Error::MalformedAutomaton(format!(
                    "node {q} transitions to missing node {bad}"
                )));
            }
            flat.extend_from_slice(row);
        }
        Ok(Self {
            alphabet,
            initial,
            delta: flat,
            gamma,
        })
    }

    pub fn alphabet(&self) -> &EventAlphabet {
        &self.alphabet
    }

    pub fn num_nodes(&self) -> usize {
        self.gamma.len()
    }

    pub fn initial(&self) -> NodeId {
        self.initial
    }

    pub fn gamma(&self) -> &[LabelId] {
        &self.gamma
    }

    pub fn label(&self, q: NodeId) -> LabelId {
        self.gamma[q]
    }

    pub fn step(&self, q: NodeId, e: EventId) -> NodeId {
        self.delta[q * self.alphabet.len() + e]
    }

    pub fn transitions(&self) -> Vec<Vec<NodeId>> {
        self.delta
            .chunks(self.alphabet.len())
            .map(<[NodeId]>::to_vec)
            .collect()
    }

    /// Same automaton started from `q`.
    pub fn rerooted(&self, q: NodeId) -> Result<Fa> {
        if q >= self.num_nodes() {
            return Err(Error::MalformedAutomaton(format!("node {q} out of range")));
        }
        Ok(Fa {
            initial: q,
            ..self.clone()
        })
    }

    /// Node reached from `q` after reading `w`.
    pub fn walk(&self, q: NodeId, w: &Word) -> Result<NodeId> {
        self.alphabet.check_word(w)?;
        Ok(w.iter().fold(q, |q, &e| self.step(q, e)))
    }

    /// `q0 q1 ... qn` for `w = e1 ... en`.
    pub fn run(&self, w: &Word) -> Result<Vec<NodeId>> {
        self.alphabet.check_word(w)?;
        let mut nodes = Vec::with_capacity(w.len() + 1);
        let mut q = self.initial;
        nodes.push(q);
        for &e in w.iter() {
            q = self.step(q, e);
            nodes.push(q);
        }
        Ok(nodes)
    }

    /// Labels along the run of `w`.
    pub fn language_of(&self, w: &Word) -> Result<Vec<LabelId>> {
        Ok(self.run(w)?.into_iter().map(|q| self.gamma[q]).collect())
    }

    /// Label of the last node of the run of `w`.
    pub fn output_of(&self, w: &Word) -> Result<LabelId> {
        Ok(self.gamma[self.walk(self.initial, w)?])
    }

    /// Restriction to the nodes reachable from the initial node, renumbered in
    /// breadth-first discovery order.
    pub fn reachable_part(&self) -> Fa {
        let k = self.alphabet.len();
        let mut new_id = vec![usize::MAX; self.num_nodes()];
        let mut order = vec![self.initial];
        new_id[self.initial] = 0;
        let mut head = 0;
        while head < order.len() {
            let q = order[head];
            head += 1;
            for e in 0..k {
                let t = self.step(q, e);
                if new_id[t] == usize::MAX {
                    new_id[t] = order.len();
                    order.push(t);
                }
            }
        }
        let delta = order
            .iter()
            .flat_map(|&q| (0..k).map(move |e| (q, e)))
            .map(|(q, e)| new_id[self.step(q, e)])
            .collect();
        Fa {
            alphabet: self.alphabet.clone(),
            initial: 0,
            delta,
            gamma: order.iter().map(|&q| self.gamma[q]).collect(),
        }
    }

    /// Graphviz rendering: nodes `q{i} / A{label}`, one edge per transition.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph fa {\n    rankdir=LR;\n");
        s.push_str("    __start [shape=none, label=\"\", width=0, height=0];\n");
        for q in 0..self.num_nodes() {
            let _ = writeln!(
                s,
                "    q{q} [shape=circle, label=\"q{q} / A{}\"];",
                self.gamma[q]
            );
        }
        let _ = writeln!(s, "    __start -> q{};", self.initial);
        for q in 0..self.num_nodes() {
            for e in 0..self.alphabet.len() {
                let _ = writeln!(
                    s,
                    "    q{q} -> q{} [label=\"{}\"];",
                    self.step(q, e),
                    self.alphabet.name(e)
                );
            }
        }
        s.push_str("}\n");
        s
    }
}

/// Breadth-first search over the product of `a` and `b`.
///
/// Returns `None` when every reachable pair of nodes carries labels that
/// `label_eq` accepts, and otherwise a shortest word on which the outputs of
/// the two automata disagree. Events are explored in alphabet order, so the
/// counterexample is deterministic.
pub fn language_equivalent<F>(a: &Fa, b: &Fa, mut label_eq: F) -> Result<Option<Word>>
where
    F: FnMut(LabelId, LabelId) -> bool,
{
    if a.alphabet != b.alphabet {
        return Err(Error::AlphabetMismatch(format!(
            "{:?} vs {:?}",
            a.alphabet.names(),
            b.alphabet.names()
        )));
    }
    let k = a.alphabet.len();
    let nb = b.num_nodes();
    let index = |p: NodeId, q: NodeId| p * nb + q;

    // parent[pair] = (previous pair, event)
    let mut parent: HashMap<usize, (usize, EventId)> = HashMap::new();
    let start = index(a.initial, b.initial);
    let mut seen = vec![false; a.num_nodes() * nb];
    seen[start] = true;

    let rebuild = |parent: &HashMap<usize, (usize, EventId)>, mut at: usize| {
        let mut events = Vec::new();
        while at != start {
            let (prev, e) = parent[&at];
            events.push(e);
            at = prev;
        }
        events.reverse();
        Word::from(events)
    };

    if !label_eq(a.label(a.initial), b.label(b.initial)) {
        return Ok(Some(Word::empty()));
    }
    let mut queue = VecDeque::from([(a.initial, b.initial)]);
    while let Some((p, q)) = queue.pop_front() {
        for e in 0..k {
            let (p2, q2) = (a.step(p, e), b.step(q, e));
            let id = index(p2, q2);
            if seen[id] {
                continue;
            }
            seen[id] = true;
            parent.insert(id, (index(p, q), e));
            if !label_eq(a.label(p2), b.label(q2)) {
                return Ok(Some(rebuild(&parent, id)));
            }
            queue.push_back((p2, q2));
        }
    }
    Ok(None)
}
