//! Modular gradual semantics for EW-QBAFs.
//!
//! Each semantics pairs an aggregation function over the edge-weighted
//! strengths of attackers and supporters with an influence function that
//! moves the base score. DF-QuAD aggregates by product, the others by sum.
//!
//! Acyclic graphs are evaluated by one forward pass in topological order.
//! Cyclic graphs are iterated synchronously from the base scores until the
//! max-norm change drops below `convergence_epsilon`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{QbafError, Result};
use crate::model::{ArgumentId, Qbaf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SemanticsKind {
    DfQuad,
    Qe,
    Reb,
    Mlp,
}

impl SemanticsKind {
    pub const ALL: [SemanticsKind; 4] = [
        SemanticsKind::DfQuad,
        SemanticsKind::Qe,
        SemanticsKind::Reb,
        SemanticsKind::Mlp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SemanticsKind::DfQuad => "dfquad",
            SemanticsKind::Qe => "qe",
            SemanticsKind::Reb => "reb",
            SemanticsKind::Mlp => "mlp",
        }
    }

    pub fn aggregation(self) -> Aggregation {
        match self {
            SemanticsKind::DfQuad => Aggregation::Product,
            _ => Aggregation::Sum,
        }
    }
}

impl fmt::Display for SemanticsKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for SemanticsKind {
    type Err = QbafError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dfquad" => Ok(SemanticsKind::DfQuad),
            "qe" => Ok(SemanticsKind::Qe),
            "reb" => Ok(SemanticsKind::Reb),
            "mlp" => Ok(SemanticsKind::Mlp),
            other => Err(QbafError::InvalidSpec(format!("unknown semantics `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregation {
    Sum,
    Product,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SemanticsSpec {
    pub kind: SemanticsKind,
    pub convergence_epsilon: f64,
    pub max_update_rounds: usize,
    /// Base scores are clamped to `[logit_clamp, 1 - logit_clamp]` before the
    /// logit in the MLP influence function.
    pub logit_clamp: f64,
}

impl Default for SemanticsSpec {
    fn default() -> Self {
        Self::new(SemanticsKind::Mlp)
    }
}

impl SemanticsSpec {
    pub const DEFAULT_EPSILON: f64 = 1e-6;
    pub const DEFAULT_MAX_ROUNDS: usize = 10_000;
    pub const DEFAULT_LOGIT_CLAMP: f64 = 1e-9;

    pub fn new(kind: SemanticsKind) -> Self {
        Self {
            kind,
            convergence_epsilon: Self::DEFAULT_EPSILON,
            max_update_rounds: Self::DEFAULT_MAX_ROUNDS,
            logit_clamp: Self::DEFAULT_LOGIT_CLAMP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.convergence_epsilon.is_nan() || self.convergence_epsilon <= 0.0 {
            return Err(QbafError::InvalidSpec("convergence_epsilon must be positive".into()));
        }
        if self.max_update_rounds == 0 {
            return Err(QbafError::InvalidSpec("max_update_rounds must be at least 1".into()));
        }
        if !(self.logit_clamp > 0.0 && self.logit_clamp < 0.5) {
            return Err(QbafError::InvalidSpec("logit_clamp must lie in (0, 0.5)".into()));
        }
        Ok(())
    }

    pub fn influence(&self, base: f64, aggregate: f64) -> f64 {
        influence_with_clamp(self.kind, base, aggregate, self.logit_clamp)
    }

    /// Partial derivative of the influence function in its aggregate argument.
    pub fn influence_slope(&self, base: f64, aggregate: f64) -> f64 {
        match self.kind {
            SemanticsKind::DfQuad => {
                if aggregate > 0.0 {
                    1.0 - base
                } else if aggregate < 0.0 {
                    base
                } else {
                    0.0
                }
            }
            SemanticsKind::Qe => base * qe_h_slope(-aggregate) + (1.0 - base) * qe_h_slope(aggregate),
            SemanticsKind::Reb => {
                let e = aggregate.exp();
                let denom = 1.0 + base * e;
                (1.0 - base * base) * base * e / (denom * denom)
            }
            SemanticsKind::Mlp => {
                let s = self.influence(base, aggregate);
                s * (1.0 - s)
            }
        }
    }
}

/// `agg(A, S) = Σ S − Σ A`.
pub fn aggregate_sum(attack_values: &[f64], support_values: &[f64]) -> f64 {
    support_values.iter().sum::<f64>() - attack_values.iter().sum::<f64>()
}

/// `agg(A, S) = Π_A (1 − x) − Π_S (1 − x)`.
pub fn aggregate_product(attack_values: &[f64], support_values: &[f64]) -> f64 {
    let pa: f64 = attack_values.iter().map(|x| 1.0 - x).product();
    let ps: f64 = support_values.iter().map(|x| 1.0 - x).product();
    pa - ps
}

pub fn aggregate(kind: SemanticsKind, attack_values: &[f64], support_values: &[f64]) -> f64 {
    match kind.aggregation() {
        Aggregation::Sum => aggregate_sum(attack_values, support_values),
        Aggregation::Product => aggregate_product(attack_values, support_values),
    }
}

/// Influence function of `kind` with the default MLP clamp.
pub fn influence(kind: SemanticsKind, base: f64, aggregate: f64) -> f64 {
    influence_with_clamp(kind, base, aggregate, SemanticsSpec::DEFAULT_LOGIT_CLAMP)
}

fn influence_with_clamp(kind: SemanticsKind, base: f64, aggregate: f64, clamp: f64) -> f64 {
    let v = match kind {
        SemanticsKind::DfQuad => {
            let h = |x: f64| x.max(0.0);
            base - base * h(-aggregate) + (1.0 - base) * h(aggregate)
        }
        SemanticsKind::Qe => base - base * qe_h(-aggregate) + (1.0 - base) * qe_h(aggregate),
        SemanticsKind::Reb => 1.0 - (1.0 - base * base) / (1.0 + base * aggregate.exp()),
        SemanticsKind::Mlp => {
            let b = base.clamp(clamp, 1.0 - clamp);
            logistic((b / (1.0 - b)).ln() + aggregate)
        }
    };
    v.clamp(0.0, 1.0)
}

fn qe_h(x: f64) -> f64 {
    let p = x.max(0.0);
    let p2 = p * p;
    p2 / (1.0 + p2)
}

fn qe_h_slope(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let d = 1.0 + x * x;
    2.0 * x / (d * d)
}

pub(crate) fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Per-argument strengths; `None` marks an undefined strength.
#[derive(Debug, Clone, PartialEq)]
pub struct StrengthMap {
    ids: Vec<ArgumentId>,
    values: Vec<Option<f64>>,
}

impl StrengthMap {
    pub fn get(&self, id: &str) -> Option<Option<f64>> {
        self.ids
            .binary_search_by(|probe| probe.as_str().cmp(id))
            .ok()
            .map(|i| self.values[i])
    }

    /// Strength of a defined argument; panics on unknown ids.
    pub fn value(&self, id: &str) -> Option<f64> {
        self.get(id).unwrap_or_else(|| panic!("unknown argument `{id}`"))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ArgumentId, Option<f64>)> {
        self.ids.iter().zip(self.values.iter().copied())
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn all_defined(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }
}

/// Forward evaluation over a fixed graph with swappable edge weights.
pub(crate) struct Evaluator<'a> {
    q: &'a Qbaf,
    spec: SemanticsSpec,
    base: Vec<f64>,
    attack: Vec<bool>,
}

impl<'a> Evaluator<'a> {
    pub(crate) fn new(q: &'a Qbaf, spec: SemanticsSpec) -> Self {
        Self {
            q,
            spec,
            base: q.base_scores(),
            attack: q.edges().iter().map(|e| e.polarity.is_attack()).collect(),
        }
    }

    pub(crate) fn qbaf(&self) -> &'a Qbaf {
        self.q
    }

    pub(crate) fn spec(&self) -> &SemanticsSpec {
        &self.spec
    }

    pub(crate) fn is_attack(&self, e: usize) -> bool {
        self.attack[e]
    }

    pub(crate) fn base(&self, v: usize) -> f64 {
        self.base[v]
    }

    /// Aggregate of `v` from the current `strengths` under `weights`.
    pub(crate) fn aggregate_at(&self, v: usize, weights: &[f64], strengths: &[f64]) -> f64 {
        let incoming = self.q.incoming(v);
        match self.spec.kind.aggregation() {
            Aggregation::Sum => {
                let mut z = 0.0;
                for &e in incoming {
                    let x = strengths[self.q.edge_ends(e).0] * weights[e];
                    if self.attack[e] {
                        z -= x;
                    } else {
                        z += x;
                    }
                }
                z
            }
            Aggregation::Product => {
                let (mut pa, mut ps) = (1.0, 1.0);
                for &e in incoming {
                    let x = strengths[self.q.edge_ends(e).0] * weights[e];
                    if self.attack[e] {
                        pa *= 1.0 - x;
                    } else {
                        ps *= 1.0 - x;
                    }
                }
                pa - ps
            }
        }
    }

    pub(crate) fn node_value(&self, v: usize, weights: &[f64], strengths: &[f64]) -> f64 {
        self.spec
            .influence(self.base[v], self.aggregate_at(v, weights, strengths))
    }

    /// One forward pass over `order`; `strengths` must already hold the
    /// values of every argument not listed in `order`.
    pub(crate) fn forward_over(&self, order: &[usize], weights: &[f64], strengths: &mut [f64]) {
        for &v in order {
            strengths[v] = self.node_value(v, weights, strengths);
        }
    }

    pub(crate) fn forward(&self, weights: &[f64]) -> Result<Vec<f64>> {
        let order = self.q.topological_indices().ok_or(QbafError::Cyclic)?;
        let mut strengths = self.base.clone();
        self.forward_over(order, weights, &mut strengths);
        Ok(strengths)
    }

    /// Synchronous iteration; returns the final strengths and the
    /// per-argument change of the last round.
    fn iterate(&self, weights: &[f64]) -> (Vec<f64>, Vec<f64>, bool) {
        let n = self.q.len();
        let mut current = self.base.clone();
        let mut next = vec![0.0; n];
        let mut delta = vec![0.0; n];
        for _ in 0..self.spec.max_update_rounds {
            let mut max_change: f64 = 0.0;
            for v in 0..n {
                next[v] = self.node_value(v, weights, &current);
                delta[v] = (next[v] - current[v]).abs();
                max_change = max_change.max(delta[v]);
            }
            std::mem::swap(&mut current, &mut next);
            if max_change < self.spec.convergence_epsilon {
                return (current, delta, true);
            }
        }
        (current, delta, false)
    }
}

/// Evaluates every argument of `q` under `spec`.
pub fn compute_strengths(q: &Qbaf, spec: &SemanticsSpec) -> Result<StrengthMap> {
    spec.validate()?;
    let eval = Evaluator::new(q, *spec);
    let weights = q.weights();
    let values = if q.is_acyclic() {
        eval.forward(&weights)?.into_iter().map(Some).collect()
    } else {
        let (strengths, delta, converged) = eval.iterate(&weights);
        if converged {
            strengths.into_iter().map(Some).collect()
        } else {
            let tainted = downstream_of_unsettled(q, &delta, spec.convergence_epsilon);
            strengths
                .into_iter()
                .zip(tainted)
                .map(|(s, bad)| (!bad).then_some(s))
                .collect()
        }
    };
    Ok(StrengthMap {
        ids: q.arguments().iter().map(|a| a.id.clone()).collect(),
        values,
    })
}

/// Strength of one argument of an acyclic QBAF.
pub fn strength_of(q: &Qbaf, spec: &SemanticsSpec, topic: &str) -> Result<f64> {
    spec.validate()?;
    let t = q.require_argument(topic)?;
    Ok(Evaluator::new(q, *spec).forward(&q.weights())?[t])
}

/// Arguments whose last change reached epsilon, closed under successors.
fn downstream_of_unsettled(q: &Qbaf, delta: &[f64], epsilon: f64) -> Vec<bool> {
    let mut tainted: Vec<bool> = delta.iter().map(|&d| d >= epsilon).collect();
    let mut stack: Vec<usize> = (0..q.len()).filter(|&v| tainted[v]).collect();
    while let Some(v) = stack.pop() {
        for &e in q.outgoing(v) {
            let t = q.edge_ends(e).1;
            if !tainted[t] {
                tainted[t] = true;
                stack.push(t);
            }
        }
    }
    tainted
}
