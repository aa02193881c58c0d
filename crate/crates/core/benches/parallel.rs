use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ewqbaf::bench::{generate_mlp_like, generate_prs, MlpGenConfig, PrsGenConfig};
use ewqbaf::{contest, grae_approx, ContestRequest, SemanticsKind, SemanticsSpec};

fn sequential_pool() -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap()
}

fn approx_grae(c: &mut Criterion) {
    let spec = SemanticsSpec::new(SemanticsKind::Mlp);
    let pool = sequential_pool();
    let mut group = c.benchmark_group("grae_approx");
    for layers in [vec![8, 32, 1], vec![8, 32, 16, 1], vec![8, 32, 16, 8, 1]] {
        let cfg = MlpGenConfig { layer_sizes: layers, connect_prob: 1.0, seed: 1 };
        let q = generate_mlp_like(&cfg).unwrap();
        let topic = cfg.topic();
        let edges = q.edges().len();
        group.bench_with_input(BenchmarkId::new("parallel", edges), &q, |b, q| {
            b.iter(|| grae_approx(q, &spec, topic.as_str(), 1e-5).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("sequential", edges), &q, |b, q| {
            b.iter(|| pool.install(|| grae_approx(q, &spec, topic.as_str(), 1e-5).unwrap()))
        });
    }
    group.finish();
}

fn contest_prs(c: &mut Criterion) {
    let spec = SemanticsSpec::new(SemanticsKind::Qe);
    let pool = sequential_pool();
    let mut group = c.benchmark_group("contest_prs");
    group.sample_size(10);
    for n in [20, 50, 100] {
        let cfg = PrsGenConfig::new(n, 3);
        let q = generate_prs(&cfg).unwrap();
        let topic = cfg.topic();
        let interval = ewqbaf::attainable_interval(&q, &spec, topic.as_str()).unwrap();
        let req = ContestRequest::new(topic, interval.midpoint());
        group.bench_with_input(BenchmarkId::new("parallel", n), &q, |b, q| {
            b.iter(|| contest(q, &spec, &req).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("sequential", n), &q, |b, q| {
            b.iter(|| pool.install(|| contest(q, &spec, &req).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, approx_grae, contest_prs);
criterion_main!(benches);
