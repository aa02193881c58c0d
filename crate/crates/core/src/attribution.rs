//! Gradient-based relation attribution explanations (G-RAEs).
//!
//! The G-RAE of an edge `r` for a topic argument is `∂σ(topic)/∂w(r)`.
//! [`grae_exact`] gets all of them from one forward pass and one reverse
//! sweep over the topological order. [`grae_approx`] perturbs one weight at
//! a time and re-evaluates, as a difference quotient.

use serde::{Deserialize, Serialize};

use crate::error::{QbafError, Result};
use crate::model::{ArgumentId, Qbaf};
use crate::par;
use crate::semantics::{Aggregation, Evaluator, SemanticsSpec};

pub const DEFAULT_PERTURBATION: f64 = 1e-5;
pub const DEFAULT_ZERO_TOLERANCE: f64 = 1e-9;

/// Minimum `|R| * (|A| + |R|)` before perturbation probes are farmed out.
const PARALLEL_PROBE_WORK: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributionInfluence {
    Positive,
    Negative,
    Neutral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GradientMethod {
    #[default]
    Approx,
    Exact,
}

pub fn classify_influence(score: f64, zero_tolerance: f64) -> AttributionInfluence {
    if score.abs() <= zero_tolerance {
        AttributionInfluence::Neutral
    } else if score > 0.0 {
        AttributionInfluence::Positive
    } else {
        AttributionInfluence::Negative
    }
}

/// G-RAE of every edge for one topic, aligned with [`Qbaf::edges`].
#[derive(Debug, Clone, PartialEq)]
pub struct GraeMap {
    topic: ArgumentId,
    edges: Vec<(ArgumentId, ArgumentId)>,
    scores: Vec<f64>,
}

impl GraeMap {
    fn new(q: &Qbaf, topic: &str, scores: Vec<f64>) -> Self {
        Self {
            topic: topic.into(),
            edges: q
                .edges()
                .iter()
                .map(|e| (e.source.clone(), e.target.clone()))
                .collect(),
            scores,
        }
    }

    pub fn topic(&self) -> &ArgumentId {
        &self.topic
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn score(&self, source: &str, target: &str) -> Option<f64> {
        self.edges
            .iter()
            .position(|(s, t)| s.as_str() == source && t.as_str() == target)
            .map(|i| self.scores[i])
    }

    /// Edge indices by decreasing score; ties keep edge order.
    pub fn ranked(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.scores.len()).collect();
        idx.sort_by(|&a, &b| self.scores[b].total_cmp(&self.scores[a]));
        idx
    }

    pub fn edge(&self, i: usize) -> (&ArgumentId, &ArgumentId) {
        let (s, t) = &self.edges[i];
        (s, t)
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

pub fn grae_exact(q: &Qbaf, spec: &SemanticsSpec, topic: &str) -> Result<GraeMap> {
    spec.validate()?;
    let t = q.require_argument(topic)?;
    let eval = Evaluator::new(q, *spec);
    let scores = exact_gradient(&eval, &q.weights(), t)?;
    Ok(GraeMap::new(q, topic, scores))
}

pub fn grae_approx(q: &Qbaf, spec: &SemanticsSpec, topic: &str, perturbation: f64) -> Result<GraeMap> {
    spec.validate()?;
    check_perturbation(perturbation)?;
    let t = q.require_argument(topic)?;
    let eval = Evaluator::new(q, *spec);
    let scores = approx_gradient(&eval, &q.weights(), t, perturbation)?;
    Ok(GraeMap::new(q, topic, scores))
}

pub(crate) fn check_perturbation(perturbation: f64) -> Result<()> {
    if perturbation == 0.0 || perturbation.is_nan() || perturbation.abs() > 1.0 {
        return Err(QbafError::InvalidRequest(format!(
            "perturbation must be nonzero with magnitude at most 1, got {perturbation}"
        )));
    }
    Ok(())
}

pub(crate) fn gradient(
    eval: &Evaluator<'_>,
    weights: &[f64],
    topic: usize,
    method: GradientMethod,
    perturbation: f64,
) -> Result<Vec<f64>> {
    match method {
        GradientMethod::Exact => exact_gradient(eval, weights, topic),
        GradientMethod::Approx => approx_gradient(eval, weights, topic, perturbation),
    }
}

/// Reverse accumulation of `∂σ(topic)/∂w` over the reversed topological order.
pub(crate) fn exact_gradient(eval: &Evaluator<'_>, weights: &[f64], topic: usize) -> Result<Vec<f64>> {
    let q = eval.qbaf();
    let order = q.topological_indices().ok_or(QbafError::Cyclic)?;
    let strengths = eval.forward(weights)?;
    let spec = eval.spec();

    let mut adjoint = vec![0.0; q.len()];
    adjoint[topic] = 1.0;
    let mut grad = vec![0.0; weights.len()];
    let mut factors: Vec<f64> = Vec::new();
    let mut excl: Vec<f64> = Vec::new();

    for &v in order.iter().rev() {
        if adjoint[v] == 0.0 {
            continue;
        }
        let z = eval.aggregate_at(v, weights, &strengths);
        let dz = adjoint[v] * spec.influence_slope(eval.base(v), z);
        if dz == 0.0 {
            continue;
        }
        let incoming = q.incoming(v);
        match spec.kind.aggregation() {
            Aggregation::Sum => {
                for &e in incoming {
                    let s = q.edge_ends(e).0;
                    let dx = if eval.is_attack(e) { -dz } else { dz };
                    grad[e] = dx * strengths[s];
                    adjoint[s] += dx * weights[e];
                }
            }
            Aggregation::Product => {
                // ∂z/∂x = -Π_{A∖x}(1-y) for attacks, +Π_{S∖x}(1-y) for supports
                for attack in [true, false] {
                    factors.clear();
                    factors.extend(
                        incoming
                            .iter()
                            .filter(|&&e| eval.is_attack(e) == attack)
                            .map(|&e| 1.0 - strengths[q.edge_ends(e).0] * weights[e]),
                    );
                    exclusive_products(&factors, &mut excl);
                    let sign = if attack { -1.0 } else { 1.0 };
                    let group = incoming.iter().filter(|&&e| eval.is_attack(e) == attack);
                    for (&e, &p) in group.zip(&excl) {
                        let s = q.edge_ends(e).0;
                        let dx = dz * sign * p;
                        grad[e] = dx * strengths[s];
                        adjoint[s] += dx * weights[e];
                    }
                }
            }
        }
    }
    for g in &mut grad {
        if *g == 0.0 {
            *g = 0.0;
        }
    }
    Ok(grad)
}

/// `out[i] = Π_{j≠i} factors[j]` without division.
fn exclusive_products(factors: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.resize(factors.len(), 1.0);
    let mut acc = 1.0;
    for (i, &f) in factors.iter().enumerate() {
        out[i] = acc;
        acc *= f;
    }
    acc = 1.0;
    for (i, &f) in factors.iter().enumerate().rev() {
        out[i] *= acc;
        acc *= f;
    }
}

/// One-edge-at-a-time difference quotients. A probe that would leave
/// `[0, 1]` goes the other way instead.
pub(crate) fn approx_gradient(
    eval: &Evaluator<'_>,
    weights: &[f64],
    topic: usize,
    perturbation: f64,
) -> Result<Vec<f64>> {
    let q = eval.qbaf();
    let order = q.topological_indices().ok_or(QbafError::Cyclic)?;
    let strengths = eval.forward(weights)?;
    let base_value = strengths[topic];

    // ancestors of the topic in topological order; the topic itself comes last
    let relevant = q.ancestors_of(topic);
    let chain: Vec<usize> = order.iter().copied().filter(|&v| relevant[v]).collect();
    let mut chain_pos = vec![usize::MAX; q.len()];
    for (i, &v) in chain.iter().enumerate() {
        chain_pos[v] = i;
    }

    let probe = |e: usize| -> f64 {
        let target = q.edge_ends(e).1;
        if !relevant[target] {
            return 0.0;
        }
        let mut step = perturbation;
        let probe_w = weights[e] + step;
        if !(0.0..=1.0).contains(&probe_w) {
            step = -step;
        }
        let mut w = weights.to_vec();
        w[e] += step;
        let mut s = strengths.clone();
        eval.forward_over(&chain[chain_pos[target]..], &w, &mut s);
        let d = (s[topic] - base_value) / step;
        if d == 0.0 {
            0.0
        } else {
            d
        }
    };

    let m = weights.len();
    let work = m.saturating_mul(q.len() + m);
    Ok(if par::is_parallel() && work >= PARALLEL_PROBE_WORK {
        par::map_indexed(m, probe)
    } else {
        (0..m).map(probe).collect()
    })
}
