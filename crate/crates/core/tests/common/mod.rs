#![allow(dead_code)]

use ewqbaf::semantics::aggregate;
use ewqbaf::{Argument, Edge, Polarity, Qbaf, QbafData, SemanticsKind, SemanticsSpec};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random DAG on `1..=max_args` arguments. Ids are shuffled so that the
/// lexicographic order is not a topological one.
pub fn random_dag(rng: &mut ChaCha8Rng, max_args: usize) -> Qbaf {
    let n = rng.random_range(1..=max_args);
    let density = rng.random_range(0.05..0.6);
    let mut ids: Vec<String> = (0..n).map(|i| format!("v{i:02}")).collect();
    ids.shuffle(rng);
    let arguments = ids
        .iter()
        .map(|id| Argument { id: id.as_str().into(), base_score: rng.random() })
        .collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(density) {
                edges.push(Edge {
                    source: ids[i].as_str().into(),
                    target: ids[j].as_str().into(),
                    polarity: if rng.random_bool(0.5) { Polarity::Attack } else { Polarity::Support },
                    weight: rng.random(),
                });
            }
        }
    }
    Qbaf::new(QbafData { arguments, edges }).unwrap()
}

/// An argument with the most ancestors, ties broken by id.
pub fn deepest_topic(q: &Qbaf) -> String {
    let mut best = (0, String::new());
    for a in q.arguments() {
        let count = q
            .arguments()
            .iter()
            .filter(|b| b.id != a.id && q.path_count(b.id.as_str(), a.id.as_str()).unwrap() != ewqbaf::PathCount::Zero)
            .count();
        if best.1.is_empty() || count > best.0 {
            best = (count, a.id.to_string());
        }
    }
    best.1
}

/// Aggregate of every argument with at least one parent, given strengths.
pub fn aggregates(q: &Qbaf, kind: SemanticsKind, strengths: &[f64]) -> Vec<Option<f64>> {
    (0..q.len())
        .map(|v| {
            if q.incoming(v).is_empty() {
                return None;
            }
            let (mut att, mut sup) = (Vec::new(), Vec::new());
            for &e in q.incoming(v) {
                let x = strengths[q.edge_ends(e).0] * q.edges()[e].weight;
                if q.edges()[e].polarity.is_attack() { att.push(x) } else { sup.push(x) }
            }
            Some(aggregate(kind, &att, &sup))
        })
        .collect()
}

/// Whether some aggregate sits within `margin` of the DF-QuAD kink at 0.
pub fn near_kink(q: &Qbaf, spec: &SemanticsSpec, margin: f64) -> bool {
    if spec.kind != SemanticsKind::DfQuad {
        return false;
    }
    let s = ewqbaf::compute_strengths(q, spec).unwrap();
    let strengths: Vec<f64> = s.values().iter().map(|v| v.unwrap()).collect();
    aggregates(q, spec.kind, &strengths).into_iter().flatten().any(|z| z.abs() < margin)
}

pub fn movie() -> Qbaf {
    ewqbaf::parse_qbaf(include_bytes!("../../fixtures/movie.json")).unwrap()
}
