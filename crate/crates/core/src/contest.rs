//! Attainability analysis and the iterative contestation solver.
//!
//! The solver moves every edge weight along its G-RAE, toward the desired
//! strength of the topic, clamping to `[0, 1]` after each step. The step
//! shrinks linearly with the remaining gap and is halved whenever a step
//! would not reduce it. When an attempt runs out of iterations it restarts
//! from uniformly random weights.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::attribution::{self, GradientMethod, DEFAULT_PERTURBATION};
use crate::error::{QbafError, Result};
use crate::model::{ArgumentId, Qbaf};
use crate::semantics::{Evaluator, SemanticsSpec};

/// Slack on the interval bounds in the attainability pre-check.
pub const ATTAINABILITY_SLACK: f64 = 1e-6;

/// Step halvings tried per iteration before the point counts as stationary.
pub const MAX_BACKTRACKS: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttainableInterval {
    pub topic: ArgumentId,
    pub min: f64,
    pub max: f64,
}

impl AttainableInterval {
    pub fn contains(&self, s: f64, slack: f64) -> bool {
        s >= self.min - slack && s <= self.max + slack
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.min + self.max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContestRequest {
    pub topic: ArgumentId,
    #[serde(alias = "target")]
    pub desired_strength: f64,
    #[serde(default = "defaults::error_threshold")]
    pub error_threshold: f64,
    #[serde(default = "defaults::max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "defaults::max_attempts")]
    pub max_attempts: usize,
    #[serde(default = "defaults::perturbation")]
    pub perturbation: f64,
    #[serde(default = "defaults::step_min")]
    pub step_min: f64,
    #[serde(default = "defaults::step_max")]
    pub step_max: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub gradient: GradientMethod,
}

mod defaults {
    pub fn error_threshold() -> f64 {
        0.01
    }
    pub fn max_iterations() -> usize {
        1000
    }
    pub fn max_attempts() -> usize {
        10
    }
    pub fn perturbation() -> f64 {
        super::DEFAULT_PERTURBATION
    }
    pub fn step_min() -> f64 {
        0.5
    }
    pub fn step_max() -> f64 {
        25.0
    }
}

impl ContestRequest {
    pub fn new(topic: impl Into<ArgumentId>, desired_strength: f64) -> Self {
        Self {
            topic: topic.into(),
            desired_strength,
            error_threshold: defaults::error_threshold(),
            max_iterations: defaults::max_iterations(),
            max_attempts: defaults::max_attempts(),
            perturbation: defaults::perturbation(),
            step_min: defaults::step_min(),
            step_max: defaults::step_max(),
            seed: 0,
            gradient: GradientMethod::Approx,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(QbafError::InvalidRequest(msg.to_owned()));
        if !(0.0..=1.0).contains(&self.desired_strength) {
            return bad("desired_strength must lie in [0, 1]");
        }
        if !(self.error_threshold > 0.0 && self.error_threshold < 1.0) {
            return bad("error_threshold must lie in (0, 1)");
        }
        if self.max_iterations == 0 || self.max_attempts == 0 {
            return bad("max_iterations and max_attempts must be positive");
        }
        if !(self.step_min > 0.0 && self.step_min <= self.step_max && self.step_max.is_finite()) {
            return bad("steps must satisfy 0 < step_min <= step_max");
        }
        attribution::check_perturbation(self.perturbation)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContestStatus {
    Solved,
    Unattainable,
    IterationBudgetExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContestOutcome {
    pub status: ContestStatus,
    /// Revised weight function, aligned with [`Qbaf::edges`].
    pub weights: Vec<f64>,
    pub final_strength: f64,
    /// Iterations summed over all attempts.
    pub iterations_used: usize,
    pub attempts_used: usize,
    pub interval: AttainableInterval,
}

/// Emitted after every solver iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContestProgress {
    pub attempt: usize,
    /// Global iteration counter, monotone across attempts.
    pub iteration: usize,
    pub strength: f64,
}

/// Weight functions maximizing and minimizing the strength of `topic`.
pub fn max_min_weight_functions(q: &Qbaf, topic: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let t = q.require_argument(topic)?;
    let mut wmax = Vec::with_capacity(q.edges().len());
    let mut wmin = Vec::with_capacity(q.edges().len());
    for (e, edge) in q.edges().iter().enumerate() {
        let attack = edge.polarity.is_attack();
        let into_topic = q.edge_ends(e).1 == t;
        wmax.push(if attack { 0.0 } else { 1.0 });
        // attacks on the topic and supports elsewhere at full weight
        wmin.push(if attack == into_topic { 1.0 } else { 0.0 });
    }
    Ok((wmax, wmin))
}

pub fn attainable_interval(q: &Qbaf, spec: &SemanticsSpec, topic: &str) -> Result<AttainableInterval> {
    spec.validate()?;
    let t = q.require_argument(topic)?;
    let eval = Evaluator::new(q, *spec);
    interval_with(&eval, t)
}

fn interval_with(eval: &Evaluator<'_>, t: usize) -> Result<AttainableInterval> {
    let q = eval.qbaf();
    let (wmax, wmin) = max_min_weight_functions(q, q.arguments()[t].id.as_str())?;
    let max = eval.forward(&wmax)?[t];
    let min = eval.forward(&wmin)?[t];
    Ok(AttainableInterval {
        topic: q.arguments()[t].id.clone(),
        min,
        max,
    })
}

/// `clamp(step_max · gap / initial_gap, step_min, step_max)`.
pub fn step_size(gap: f64, initial_gap: f64, step_min: f64, step_max: f64) -> f64 {
    (step_max * gap.abs() / initial_gap.abs().max(1e-12)).clamp(step_min, step_max)
}

pub fn contest(q: &Qbaf, spec: &SemanticsSpec, req: &ContestRequest) -> Result<ContestOutcome> {
    contest_with_progress(q, spec, req, |_| {})
}

pub fn contest_with_progress<F>(
    q: &Qbaf,
    spec: &SemanticsSpec,
    req: &ContestRequest,
    mut on_progress: F,
) -> Result<ContestOutcome>
where
    F: FnMut(&ContestProgress),
{
    spec.validate()?;
    req.validate()?;
    if !q.is_acyclic() {
        return Err(QbafError::Cyclic);
    }
    let t = q.require_argument(req.topic.as_str())?;
    let eval = Evaluator::new(q, *spec);
    let interval = interval_with(&eval, t)?;
    let target = req.desired_strength;
    let delta = req.error_threshold;

    let original = q.weights();
    let initial_strength = eval.forward(&original)?[t];
    let outcome = |status, weights, final_strength, iterations_used, attempts_used| ContestOutcome {
        status,
        weights,
        final_strength,
        iterations_used,
        attempts_used,
        interval: interval.clone(),
    };

    if !interval.contains(target, ATTAINABILITY_SLACK) {
        return Ok(outcome(ContestStatus::Unattainable, original, initial_strength, 0, 0));
    }
    if (initial_strength - target).abs() <= delta {
        return Ok(outcome(ContestStatus::Solved, original, initial_strength, 0, 1));
    }

    let mut iterations = 0usize;
    let mut best: Option<(f64, Vec<f64>, f64)> = None;
    for attempt in 0..req.max_attempts {
        let mut weights = if attempt == 0 {
            original.clone()
        } else {
            restart_weights(req.seed, attempt, original.len())
        };
        let mut current = eval.forward(&weights)?[t];
        let initial_gap = target - current;

        for _ in 0..req.max_iterations {
            if (current - target).abs() <= delta {
                break;
            }
            let grad = attribution::gradient(&eval, &weights, t, req.gradient, req.perturbation)?;
            let direction = (target - current).signum();
            let mut h = step_size(target - current, initial_gap, req.step_min, req.step_max);
            // halve the step until the gap shrinks, so a steep topic cannot
            // bounce between the box corners forever
            let mut accepted = None;
            for _ in 0..MAX_BACKTRACKS {
                let candidate: Vec<f64> = weights
                    .iter()
                    .zip(&grad)
                    .map(|(w, g)| (w + g * h * direction).clamp(0.0, 1.0))
                    .collect();
                if candidate == weights {
                    break;
                }
                let s = eval.forward(&candidate)?[t];
                if (s - target).abs() < (current - target).abs() {
                    accepted = Some((candidate, s));
                    break;
                }
                h *= 0.5;
            }
            iterations += 1;
            let Some((next, s)) = accepted else {
                // stationary point; further iterations would repeat it
                break;
            };
            weights = next;
            current = s;
            on_progress(&ContestProgress {
                attempt: attempt + 1,
                iteration: iterations,
                strength: current,
            });
        }

        let gap = (current - target).abs();
        if gap <= delta {
            return Ok(outcome(ContestStatus::Solved, weights, current, iterations, attempt + 1));
        }
        if best.as_ref().is_none_or(|(g, _, _)| gap < *g) {
            best = Some((gap, weights, current));
        }
    }

    let (_, weights, strength) = best.expect("at least one attempt runs");
    Ok(outcome(
        ContestStatus::IterationBudgetExhausted,
        weights,
        strength,
        iterations,
        req.max_attempts,
    ))
}

/// Uniform weights for restart `attempt` (≥ 1): ChaCha8 seeded with the
/// request seed, on stream `attempt`.
pub fn restart_weights(seed: u64, attempt: usize, len: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(attempt as u64);
    (0..len).map(|_| rng.random::<f64>()).collect()
}
