//! EW-QBAF data model and structural queries.
//!
//! A [`Qbaf`] is always valid: it is built from an unchecked [`QbafData`]
//! document through [`Qbaf::new`], which runs [`validate`] first. Arguments
//! are kept sorted by id and edges by `(source, target)`, so two QBAFs with
//! the same content compare equal and serialize to the same bytes.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{QbafError, Result};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ArgumentId(String);

impl ArgumentId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    fn is_well_formed(&self) -> bool {
        !self.0.is_empty() && !self.0.chars().any(char::is_whitespace)
    }
}

impl fmt::Display for ArgumentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ArgumentId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

impl From<String> for ArgumentId {
    fn from(s: String) -> Self {
        Self(s)
    }
}

impl std::borrow::Borrow<str> for ArgumentId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Attack,
    Support,
}

impl Polarity {
    pub fn is_attack(self) -> bool {
        matches!(self, Polarity::Attack)
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarity::Attack => "attack",
            Polarity::Support => "support",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Argument {
    pub id: ArgumentId,
    pub base_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edge {
    pub source: ArgumentId,
    pub target: ArgumentId,
    pub polarity: Polarity,
    pub weight: f64,
}

/// Unchecked QBAF document, exactly as it appears on the wire.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QbafData {
    pub arguments: Vec<Argument>,
    pub edges: Vec<Edge>,
}

/// A structural problem found by [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    MalformedId(String),
    DuplicateArgument(ArgumentId),
    BaseScoreOutOfRange { id: ArgumentId, value: f64 },
    WeightOutOfRange { source: ArgumentId, target: ArgumentId, value: f64 },
    UnknownEndpoint { source: ArgumentId, target: ArgumentId, missing: ArgumentId },
    DuplicateEdgePair { source: ArgumentId, target: ArgumentId },
    SelfLoop(ArgumentId),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MalformedId(id) => write!(f, "malformed argument id `{id}`"),
            Violation::DuplicateArgument(id) => write!(f, "duplicate argument `{id}`"),
            Violation::BaseScoreOutOfRange { id, value } => {
                write!(f, "base score out of range for `{id}`: {value}")
            }
            Violation::WeightOutOfRange { source, target, value } => {
                write!(f, "weight out of range on ({source}, {target}): {value}")
            }
            Violation::UnknownEndpoint { source, target, missing } => {
                write!(f, "edge ({source}, {target}) names unknown argument `{missing}`")
            }
            Violation::DuplicateEdgePair { source, target } => {
                write!(f, "duplicate edge pair ({source}, {target})")
            }
            Violation::SelfLoop(id) => write!(f, "self-loop on `{id}`"),
        }
    }
}

fn in_unit_interval(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

/// Checks every structural invariant of an EW-QBAF document.
pub fn validate(data: &QbafData) -> std::result::Result<(), Vec<Violation>> {
    let mut violations = Vec::new();
    let mut ids = HashSet::new();
    for arg in &data.arguments {
        if !arg.id.is_well_formed() {
            violations.push(Violation::MalformedId(arg.id.0.clone()));
        }
        if !ids.insert(&arg.id) {
            violations.push(Violation::DuplicateArgument(arg.id.clone()));
        }
        if !in_unit_interval(arg.base_score) {
            violations.push(Violation::BaseScoreOutOfRange {
                id: arg.id.clone(),
                value: arg.base_score,
            });
        }
    }

    let mut pairs = HashSet::new();
    for edge in &data.edges {
        for end in [&edge.source, &edge.target] {
            if !ids.contains(end) {
                violations.push(Violation::UnknownEndpoint {
                    source: edge.source.clone(),
                    target: edge.target.clone(),
                    missing: end.clone(),
                });
            }
        }
        if edge.source == edge.target {
            violations.push(Violation::SelfLoop(edge.source.clone()));
        }
        if !in_unit_interval(edge.weight) {
            violations.push(Violation::WeightOutOfRange {
                source: edge.source.clone(),
                target: edge.target.clone(),
                value: edge.weight,
            });
        }
        if !pairs.insert((&edge.source, &edge.target)) {
            violations.push(Violation::DuplicateEdgePair {
                source: edge.source.clone(),
                target: edge.target.clone(),
            });
        }
    }

    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// Saturating count of distinct directed paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PathCount {
    Zero,
    One,
    Many,
}

impl PathCount {
    pub fn saturating_add(self, other: PathCount) -> PathCount {
        match (self, other) {
            (PathCount::Zero, x) | (x, PathCount::Zero) => x,
            _ => PathCount::Many,
        }
    }
}

/// Classification of an edge relative to a topic argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeClass {
    Direct,
    Indirect,
    Multifold,
    Independent,
}

/// A validated, immutable EW-QBAF.
#[derive(Debug, Clone)]
pub struct Qbaf {
    arguments: Vec<Argument>,
    edges: Vec<Edge>,
    index: HashMap<ArgumentId, usize>,
    ends: Vec<(usize, usize)>,
    incoming: Vec<Vec<usize>>,
    outgoing: Vec<Vec<usize>>,
    order: Option<Vec<usize>>,
}

impl PartialEq for Qbaf {
    fn eq(&self, other: &Self) -> bool {
        self.arguments == other.arguments && self.edges == other.edges
    }
}

impl Qbaf {
    pub fn new(mut data: QbafData) -> Result<Self> {
        validate(&data).map_err(QbafError::Invalid)?;
        data.arguments.sort_by(|a, b| a.id.cmp(&b.id));
        data.edges
            .sort_by(|a, b| (&a.source, &a.target).cmp(&(&b.source, &b.target)));

        let index: HashMap<ArgumentId, usize> = data
            .arguments
            .iter()
            .enumerate()
            .map(|(i, a)| (a.id.clone(), i))
            .collect();
        let n = data.arguments.len();
        let mut incoming = vec![Vec::new(); n];
        let mut outgoing = vec![Vec::new(); n];
        let ends: Vec<(usize, usize)> = data
            .edges
            .iter()
            .enumerate()
            .map(|(e, edge)| {
                let (s, t) = (index[&edge.source], index[&edge.target]);
                outgoing[s].push(e);
                incoming[t].push(e);
                (s, t)
            })
            .collect();
        let order = kahn_order(n, &ends, &outgoing);

        Ok(Self {
            arguments: data.arguments,
            edges: data.edges,
            index,
            ends,
            incoming,
            outgoing,
            order,
        })
    }

    pub fn empty() -> Self {
        Self::new(QbafData::default()).expect("empty QBAF is valid")
    }

    pub fn arguments(&self) -> &[Argument] {
        &self.arguments
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.arguments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arguments.is_empty()
    }

    pub fn to_data(&self) -> QbafData {
        QbafData {
            arguments: self.arguments.clone(),
            edges: self.edges.clone(),
        }
    }

    pub fn argument_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub(crate) fn require_argument(&self, id: &str) -> Result<usize> {
        self.argument_index(id)
            .ok_or_else(|| QbafError::UnknownArgument(id.to_owned()))
    }

    pub fn edge_index(&self, source: &str, target: &str) -> Option<usize> {
        self.edges
            .binary_search_by(|e| (e.source.as_str(), e.target.as_str()).cmp(&(source, target)))
            .ok()
    }

    pub(crate) fn require_edge(&self, source: &str, target: &str) -> Result<usize> {
        self.edge_index(source, target)
            .ok_or_else(|| QbafError::UnknownEdge {
                source_id: source.to_owned(),
                target_id: target.to_owned(),
            })
    }

    /// `(source, target)` argument indices of edge `e`.
    pub fn edge_ends(&self, e: usize) -> (usize, usize) {
        self.ends[e]
    }

    pub fn incoming(&self, arg: usize) -> &[usize] {
        &self.incoming[arg]
    }

    pub fn outgoing(&self, arg: usize) -> &[usize] {
        &self.outgoing[arg]
    }

    pub fn base_scores(&self) -> Vec<f64> {
        self.arguments.iter().map(|a| a.base_score).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.weight).collect()
    }

    /// Same graph with a replaced edge weight function (aligned with [`Qbaf::edges`]).
    pub fn with_weights(&self, weights: &[f64]) -> Result<Self> {
        if weights.len() != self.edges.len() {
            return Err(QbafError::InvalidRequest(format!(
                "expected {} weights, got {}",
                self.edges.len(),
                weights.len()
            )));
        }
        let mut data = self.to_data();
        for (edge, &w) in data.edges.iter_mut().zip(weights) {
            edge.weight = w;
        }
        Self::new(data)
    }

    /// Same graph with replaced base scores (aligned with [`Qbaf::arguments`]).
    pub fn with_base_scores(&self, scores: &[f64]) -> Result<Self> {
        if scores.len() != self.arguments.len() {
            return Err(QbafError::InvalidRequest(format!(
                "expected {} base scores, got {}",
                self.arguments.len(),
                scores.len()
            )));
        }
        let mut data = self.to_data();
        for (arg, &b) in data.arguments.iter_mut().zip(scores) {
            arg.base_score = b;
        }
        Self::new(data)
    }

    pub fn is_acyclic(&self) -> bool {
        self.order.is_some()
    }

    /// Argument indices in topological order, or `None` when the graph has a cycle.
    pub fn topological_indices(&self) -> Option<&[usize]> {
        self.order.as_deref()
    }

    /// Topological order with ties broken by argument id; `None` marks a cyclic graph.
    pub fn topological_order(&self) -> Option<Vec<&ArgumentId>> {
        self.order
            .as_ref()
            .map(|o| o.iter().map(|&i| &self.arguments[i].id).collect())
    }

    /// Saturating number of directed paths (length ≥ 1) from `from` to `to`.
    pub fn path_count(&self, from: &str, to: &str) -> Result<PathCount> {
        let order = self.order.as_ref().ok_or(QbafError::Cyclic)?;
        let from = self.require_argument(from)?;
        let to = self.require_argument(to)?;
        let mut counts = vec![PathCount::Zero; self.len()];
        for &e in &self.outgoing[from] {
            let t = self.ends[e].1;
            counts[t] = counts[t].saturating_add(PathCount::One);
        }
        let start = order.iter().position(|&i| i == from).unwrap_or(0);
        for &v in &order[start..] {
            if counts[v] == PathCount::Zero || v == from {
                continue;
            }
            for &e in &self.outgoing[v] {
                let t = self.ends[e].1;
                counts[t] = counts[t].saturating_add(counts[v]);
            }
        }
        Ok(counts[to])
    }

    /// Saturating path counts from every argument to `topic`.
    pub(crate) fn path_counts_to(&self, topic: usize) -> Result<Vec<PathCount>> {
        let order = self.order.as_ref().ok_or(QbafError::Cyclic)?;
        let mut counts = vec![PathCount::Zero; self.len()];
        for &v in order.iter().rev() {
            let mut c = PathCount::Zero;
            for &e in &self.outgoing[v] {
                let t = self.ends[e].1;
                let via = if t == topic { PathCount::One } else { counts[t] };
                c = c.saturating_add(via);
            }
            counts[v] = c;
        }
        Ok(counts)
    }

    pub fn classify_edge(&self, source: &str, target: &str, topic: &str) -> Result<EdgeClass> {
        let e = self.require_edge(source, target)?;
        let topic = self.require_argument(topic)?;
        let counts = self.path_counts_to(topic)?;
        Ok(class_from_counts(self.ends[e].1, topic, &counts))
    }

    /// Classes of every edge w.r.t. `topic`, aligned with [`Qbaf::edges`].
    pub fn classify_edges(&self, topic: &str) -> Result<Vec<EdgeClass>> {
        let topic = self.require_argument(topic)?;
        let counts = self.path_counts_to(topic)?;
        Ok(self
            .ends
            .iter()
            .map(|&(_, t)| class_from_counts(t, topic, &counts))
            .collect())
    }

    /// Indices of `topic` and every argument with a path to it.
    pub(crate) fn ancestors_of(&self, topic: usize) -> Vec<bool> {
        let mut seen = vec![false; self.len()];
        seen[topic] = true;
        let mut stack = vec![topic];
        while let Some(v) = stack.pop() {
            for &e in &self.incoming[v] {
                let s = self.ends[e].0;
                if !seen[s] {
                    seen[s] = true;
                    stack.push(s);
                }
            }
        }
        seen
    }
}

fn class_from_counts(target: usize, topic: usize, counts: &[PathCount]) -> EdgeClass {
    if target == topic {
        return EdgeClass::Direct;
    }
    match counts[target] {
        PathCount::Zero => EdgeClass::Independent,
        PathCount::One => EdgeClass::Indirect,
        PathCount::Many => EdgeClass::Multifold,
    }
}

/// Kahn's algorithm; the smallest available index (= smallest id) goes first.
fn kahn_order(n: usize, ends: &[(usize, usize)], outgoing: &[Vec<usize>]) -> Option<Vec<usize>> {
    let mut indegree = vec![0usize; n];
    for &(_, t) in ends {
        indegree[t] += 1;
    }
    let mut ready: BinaryHeap<Reverse<usize>> = (0..n)
        .filter(|&i| indegree[i] == 0)
        .map(Reverse)
        .collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(v)) = ready.pop() {
        order.push(v);
        for &e in &outgoing[v] {
            let t = ends[e].1;
            indegree[t] -= 1;
            if indegree[t] == 0 {
                ready.push(Reverse(t));
            }
        }
    }
    (order.len() == n).then_some(order)
}

/// Parses a QBAF document and validates it.
pub fn parse_qbaf(text: &[u8]) -> Result<Qbaf> {
    let data: QbafData = serde_json::from_slice(text).map_err(|e| QbafError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    Qbaf::new(data)
}

/// Canonical serialization: arguments sorted by id, edges by `(source, target)`.
pub fn serialize_qbaf(q: &Qbaf) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(&q.to_data()).expect("QBAF serialization is infallible");
    out.push(b'\n');
    out
}
