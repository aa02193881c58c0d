//! Slow reference implementations used to check the fast paths.
//!
//! Nothing here is tuned; [`strength_recursive`] and [`enumerate_paths`]
//! are exponential on dense graphs.

use crate::error::{QbafError, Result};
use crate::model::{PathCount, Qbaf};
use crate::semantics::{aggregate, strength_of, SemanticsSpec};

/// Unordered reals with multiplicity.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RealMultiset(Vec<f64>);

impl RealMultiset {
    pub fn new(values: impl Into<Vec<f64>>) -> Self {
        Self(values.into())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn sorted_desc(&self) -> Vec<f64> {
        let mut v = self.0.clone();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    /// Multiset equality up to `tolerance` per matched element.
    pub fn approx_eq(&self, other: &RealMultiset, tolerance: f64) -> bool {
        let (a, b) = (self.sorted_desc(), other.sorted_desc());
        a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= tolerance)
    }
}

impl From<&[f64]> for RealMultiset {
    fn from(v: &[f64]) -> Self {
        Self(v.to_vec())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domination {
    StrictlyDominates,
    Dominates,
    NoDomination,
}

impl Domination {
    pub fn holds(self) -> bool {
        !matches!(self, Domination::NoDomination)
    }
}

/// Non-zero elements, multiplicities kept.
pub fn core(s: &RealMultiset) -> RealMultiset {
    RealMultiset(s.0.iter().copied().filter(|&x| x != 0.0).collect())
}

/// Whether `Core(T)` injects into `Core(S)` with every element mapped to one
/// at least as large. Matching descending-sorted cores pairwise is optimal.
pub fn dominates(s: &RealMultiset, t: &RealMultiset) -> Domination {
    let cs = core(s).sorted_desc();
    let ct = core(t).sorted_desc();
    if cs.is_empty() && ct.is_empty() {
        return Domination::Dominates;
    }
    if ct.len() > cs.len() || ct.iter().zip(&cs).any(|(x, y)| x > y) {
        return Domination::NoDomination;
    }
    // with equal sizes, strictness means some matched pair differs
    if cs.len() > ct.len() || ct.iter().zip(&cs).any(|(x, y)| x < y) {
        Domination::StrictlyDominates
    } else {
        Domination::Dominates
    }
}

pub fn balanced(s: &RealMultiset, t: &RealMultiset) -> bool {
    balanced_within(s, t, 0.0)
}

pub fn balanced_within(s: &RealMultiset, t: &RealMultiset, tolerance: f64) -> bool {
    core(s).approx_eq(&core(t), tolerance)
}

/// Naive recursion over parents, re-expanding shared ancestors every time.
pub fn strength_recursive(q: &Qbaf, spec: &SemanticsSpec, arg: &str) -> Result<f64> {
    if !q.is_acyclic() {
        return Err(QbafError::Cyclic);
    }
    let v = q.require_argument(arg)?;
    Ok(recurse(q, spec, v))
}

fn recurse(q: &Qbaf, spec: &SemanticsSpec, v: usize) -> f64 {
    let mut attacks = Vec::new();
    let mut supports = Vec::new();
    for &e in q.incoming(v) {
        let edge = &q.edges()[e];
        let x = recurse(q, spec, q.edge_ends(e).0) * edge.weight;
        if edge.polarity.is_attack() {
            attacks.push(x);
        } else {
            supports.push(x);
        }
    }
    spec.influence(q.arguments()[v].base_score, aggregate(spec.kind, &attacks, &supports))
}

/// Central difference of `σ(topic)` in `w(edge)`, one-sided within `h` of 0 or 1.
pub fn finite_difference_grae(
    q: &Qbaf,
    spec: &SemanticsSpec,
    topic: &str,
    edge: (&str, &str),
    h: f64,
) -> Result<f64> {
    if h.is_nan() || h <= 0.0 {
        return Err(QbafError::InvalidRequest("step must be positive".into()));
    }
    let e = q.require_edge(edge.0, edge.1)?;
    let w = q.edges()[e].weight;
    let at = |x: f64| -> Result<f64> {
        let mut weights = q.weights();
        weights[e] = x;
        strength_of(&q.with_weights(&weights)?, spec, topic)
    };
    let (lo, hi) = ((w - h).max(0.0), (w + h).min(1.0));
    Ok((at(hi)? - at(lo)?) / (hi - lo))
}

/// Exhaustive scan of one edge weight over `{0, 1/res, …, 1}`.
///
/// Returns the weight whose strength is closest to `target`, unless even that
/// one misses by more than `error_threshold`.
pub fn grid_search_single_edge(
    q: &Qbaf,
    spec: &SemanticsSpec,
    topic: &str,
    edge: (&str, &str),
    target: f64,
    resolution: usize,
    error_threshold: f64,
) -> Result<Option<f64>> {
    let e = q.require_edge(edge.0, edge.1)?;
    let mut weights = q.weights();
    let mut best: Option<(f64, f64)> = None;
    for k in 0..=resolution.max(1) {
        let w = k as f64 / resolution.max(1) as f64;
        weights[e] = w;
        let s = strength_of(&q.with_weights(&weights)?, spec, topic)?;
        let gap = (s - target).abs();
        if best.is_none_or(|(g, _)| gap < g) {
            best = Some((gap, w));
        }
    }
    Ok(best.and_then(|(gap, w)| (gap <= error_threshold).then_some(w)))
}

/// Every directed path (as edge index lists) from `from` to `to`, by DFS.
pub fn enumerate_paths(q: &Qbaf, from: &str, to: &str) -> Result<Vec<Vec<usize>>> {
    if !q.is_acyclic() {
        return Err(QbafError::Cyclic);
    }
    let from = q.require_argument(from)?;
    let to = q.require_argument(to)?;
    let mut paths = Vec::new();
    let mut stack = Vec::new();
    dfs(q, from, to, &mut stack, &mut paths);
    Ok(paths)
}

fn dfs(q: &Qbaf, v: usize, to: usize, stack: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    for &e in q.outgoing(v) {
        stack.push(e);
        let t = q.edge_ends(e).1;
        if t == to {
            out.push(stack.clone());
        } else {
            dfs(q, t, to, stack, out);
        }
        stack.pop();
    }
}

pub fn path_count_by_enumeration(q: &Qbaf, from: &str, to: &str) -> Result<PathCount> {
    Ok(match enumerate_paths(q, from, to)?.len() {
        0 => PathCount::Zero,
        1 => PathCount::One,
        _ => PathCount::Many,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ms(v: &[f64]) -> RealMultiset {
        RealMultiset::new(v.to_vec())
    }

    #[test]
    fn core_drops_zeros() {
        assert_eq!(core(&ms(&[0.0, 0.3, 0.0, 0.3])), ms(&[0.3, 0.3]));
        assert_eq!(core(&ms(&[])), ms(&[]));
        assert_eq!(core(&ms(&[0.1])), ms(&[0.1]));
    }

    #[test]
    fn domination_examples() {
        assert_eq!(dominates(&ms(&[]), &ms(&[])), Domination::Dominates);
        assert_eq!(dominates(&ms(&[0.5, 0.3]), &ms(&[0.4])), Domination::StrictlyDominates);
        assert_eq!(dominates(&ms(&[0.2]), &ms(&[0.5])), Domination::NoDomination);
        assert_eq!(dominates(&ms(&[0.5, 0.0]), &ms(&[0.5])), Domination::Dominates);
        assert_eq!(dominates(&ms(&[0.5]), &ms(&[])), Domination::StrictlyDominates);
    }

    #[test]
    fn balance_examples() {
        assert!(balanced(&ms(&[0.0, 0.3]), &ms(&[0.3])));
        assert!(balanced(&ms(&[]), &ms(&[0.0])));
        assert!(!balanced(&ms(&[0.3]), &ms(&[0.4])));
        assert!(balanced_within(&ms(&[0.3]), &ms(&[0.3 + 1e-12]), 1e-9));
    }
}
