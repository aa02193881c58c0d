//! JSON documents shared by the CLI `--json` output and the HTTP routes.
//!
//! Both adapters render through [`canonical`], so the same inputs give
//! byte-identical bodies.

use ewqbaf::{
    attainable_interval, classify_influence, compute_strengths, contest_with_progress, grae_approx, grae_exact,
    ArgumentId, AttainableInterval, AttributionInfluence, ContestProgress, ContestRequest, ContestStatus,
    GradientMethod, Polarity, Qbaf, Result, SemanticsKind, SemanticsSpec, DEFAULT_ZERO_TOLERANCE,
};
use serde::{Deserialize, Serialize};

pub fn canonical<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("views serialize");
    s.push('\n');
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrengthEntry {
    pub id: ArgumentId,
    /// `None` when a cycle did not settle.
    pub strength: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrengthsView {
    pub semantics: SemanticsKind,
    pub strengths: Vec<StrengthEntry>,
}

pub fn strengths(q: &Qbaf, kind: SemanticsKind) -> Result<StrengthsView> {
    let map = compute_strengths(q, &SemanticsSpec::new(kind))?;
    Ok(StrengthsView {
        semantics: kind,
        strengths: map
            .iter()
            .map(|(id, strength)| StrengthEntry { id: id.clone(), strength })
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraeEntry {
    pub source: ArgumentId,
    pub target: ArgumentId,
    pub polarity: Polarity,
    pub score: f64,
    pub influence: AttributionInfluence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraesView {
    pub topic: ArgumentId,
    pub semantics: SemanticsKind,
    pub method: GradientMethod,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<f64>,
    /// Highest score first.
    pub graes: Vec<GraeEntry>,
}

pub fn graes(q: &Qbaf, kind: SemanticsKind, topic: &str, exact: bool, perturbation: f64) -> Result<GraesView> {
    let spec = SemanticsSpec::new(kind);
    let map = if exact {
        grae_exact(q, &spec, topic)?
    } else {
        grae_approx(q, &spec, topic, perturbation)?
    };
    let graes = map
        .ranked()
        .into_iter()
        .map(|i| {
            let edge = &q.edges()[i];
            let score = map.scores()[i];
            GraeEntry {
                source: edge.source.clone(),
                target: edge.target.clone(),
                polarity: edge.polarity,
                score,
                influence: classify_influence(score, DEFAULT_ZERO_TOLERANCE),
            }
        })
        .collect();
    Ok(GraesView {
        topic: map.topic().clone(),
        semantics: kind,
        method: if exact { GradientMethod::Exact } else { GradientMethod::Approx },
        perturbation: (!exact).then_some(perturbation),
        graes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalView {
    pub topic: ArgumentId,
    pub semantics: SemanticsKind,
    pub min: f64,
    pub max: f64,
}

impl IntervalView {
    fn new(interval: AttainableInterval, kind: SemanticsKind) -> Self {
        Self {
            topic: interval.topic,
            semantics: kind,
            min: interval.min,
            max: interval.max,
        }
    }
}

pub fn interval(q: &Qbaf, kind: SemanticsKind, topic: &str) -> Result<IntervalView> {
    Ok(IntervalView::new(attainable_interval(q, &SemanticsSpec::new(kind), topic)?, kind))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightEntry {
    pub source: ArgumentId,
    pub target: ArgumentId,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeView {
    pub status: ContestStatus,
    pub topic: ArgumentId,
    pub semantics: SemanticsKind,
    pub desired_strength: f64,
    pub final_strength: f64,
    pub iterations_used: usize,
    pub attempts_used: usize,
    pub interval: IntervalView,
    /// Proposed weight of every edge, in edge order.
    pub weights: Vec<WeightEntry>,
}

impl OutcomeView {
    pub fn weight_values(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w.weight).collect()
    }
}

pub fn contest<F>(q: &Qbaf, kind: SemanticsKind, req: &ContestRequest, on_progress: F) -> Result<OutcomeView>
where
    F: FnMut(&ContestProgress),
{
    let out = contest_with_progress(q, &SemanticsSpec::new(kind), req, on_progress)?;
    Ok(OutcomeView {
        status: out.status,
        topic: req.topic.clone(),
        semantics: kind,
        desired_strength: req.desired_strength,
        final_strength: out.final_strength,
        iterations_used: out.iterations_used,
        attempts_used: out.attempts_used,
        interval: IntervalView::new(out.interval, kind),
        weights: q
            .edges()
            .iter()
            .zip(&out.weights)
            .map(|(e, &weight)| WeightEntry {
                source: e.source.clone(),
                target: e.target.clone(),
                weight,
            })
            .collect(),
    })
}
