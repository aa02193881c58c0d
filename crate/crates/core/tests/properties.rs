mod common;

use ewqbaf::oracle;
use ewqbaf::{
    compute_strengths, grae_approx, grae_exact, parse_qbaf, serialize_qbaf, Argument, Edge, EdgeClass, Polarity, Qbaf,
    QbafData, SemanticsKind, SemanticsSpec,
};
use proptest::prelude::*;

fn kind() -> impl Strategy<Value = SemanticsKind> {
    prop::sample::select(SemanticsKind::ALL.to_vec())
}

/// Arguments `x0..x{n-1}`; candidate edges only go from lower to higher index.
fn dag(max_args: usize) -> impl Strategy<Value = Qbaf> {
    (1..=max_args)
        .prop_flat_map(|n| {
            let pairs = n * (n - 1) / 2;
            (
                prop::collection::vec(0.0..=1.0f64, n),
                prop::collection::vec(prop::option::weighted(0.3, (any::<bool>(), 0.0..=1.0f64)), pairs),
            )
        })
        .prop_map(|(bases, slots)| {
            let n = bases.len();
            let arguments = bases
                .iter()
                .enumerate()
                .map(|(i, &b)| Argument { id: format!("x{i}").into(), base_score: b })
                .collect();
            let mut edges = Vec::new();
            let mut k = 0;
            for i in 0..n {
                for j in i + 1..n {
                    if let Some((attack, weight)) = slots[k] {
                        edges.push(Edge {
                            source: format!("x{i}").into(),
                            target: format!("x{j}").into(),
                            polarity: if attack { Polarity::Attack } else { Polarity::Support },
                            weight,
                        });
                    }
                    k += 1;
                }
            }
            Qbaf::new(QbafData { arguments, edges }).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn strengths_stay_in_unit_interval(q in dag(12), kind in kind()) {
        let s = compute_strengths(&q, &SemanticsSpec::new(kind)).unwrap();
        for (_, v) in s.iter() {
            let v = v.unwrap();
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn forward_pass_matches_recursion(q in dag(10), kind in kind()) {
        let spec = SemanticsSpec::new(kind);
        let s = compute_strengths(&q, &spec).unwrap();
        for (id, v) in s.iter() {
            let slow = oracle::strength_recursive(&q, &spec, id.as_str()).unwrap();
            prop_assert!((v.unwrap() - slow).abs() <= 1e-12);
        }
    }

    #[test]
    fn serialization_round_trips(q in dag(10)) {
        let bytes = serialize_qbaf(&q);
        let back = parse_qbaf(&bytes).unwrap();
        prop_assert_eq!(&back, &q);
        prop_assert_eq!(serialize_qbaf(&back), bytes);
    }

    #[test]
    fn path_counts_match_enumeration(q in dag(9)) {
        for a in q.arguments() {
            for b in q.arguments() {
                let fast = q.path_count(a.id.as_str(), b.id.as_str()).unwrap();
                let slow = oracle::path_count_by_enumeration(&q, a.id.as_str(), b.id.as_str()).unwrap();
                prop_assert_eq!(fast, slow, "{} -> {}", a.id, b.id);
            }
        }
    }

    #[test]
    fn independent_edges_have_zero_attribution(q in dag(10), kind in kind(), t in any::<prop::sample::Index>()) {
        let spec = SemanticsSpec::new(kind);
        let topic = q.arguments()[t.index(q.len())].id.clone();
        let classes = q.classify_edges(topic.as_str()).unwrap();
        let exact = grae_exact(&q, &spec, topic.as_str()).unwrap();
        let approx = grae_approx(&q, &spec, topic.as_str(), 1e-5).unwrap();
        for (e, class) in classes.iter().enumerate() {
            if *class == EdgeClass::Independent {
                prop_assert_eq!(exact.scores()[e], 0.0);
                prop_assert_eq!(approx.scores()[e], 0.0);
            }
        }
    }

    #[test]
    fn exact_and_approx_agree(q in dag(10), kind in kind(), t in any::<prop::sample::Index>()) {
        let spec = SemanticsSpec::new(kind);
        prop_assume!(!common::near_kink(&q, &spec, 1e-4));
        let topic = q.arguments()[t.index(q.len())].id.clone();
        let exact = grae_exact(&q, &spec, topic.as_str()).unwrap();
        let approx = grae_approx(&q, &spec, topic.as_str(), 1e-5).unwrap();
        for (a, b) in exact.scores().iter().zip(approx.scores()) {
            prop_assert!((a - b).abs() <= 1e-4, "{a} vs {b}");
        }
    }
}
