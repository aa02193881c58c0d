//! Random EW-QBAF generators and the contest experiment runner.
//!
//! Generation is driven by ChaCha8 seeded with the config seed. Graph `i` of
//! a sweep uses stream `i`, so a single graph can be regenerated without
//! replaying the ones before it. Within a graph, base scores are drawn
//! first in argument order, then for each candidate pair: edge presence,
//! polarity, weight.

use std::fmt;
use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::contest::{attainable_interval, contest, ContestRequest, ContestStatus};
use crate::error::{QbafError, Result};
use crate::model::{Argument, ArgumentId, Edge, Polarity, Qbaf, QbafData};
use crate::par::{IntoParallelIterator, ParallelIterator};
use crate::semantics::SemanticsSpec;

pub const DEFAULT_REPETITIONS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrsGenConfig {
    pub n: usize,
    pub p: f64,
    pub seed: u64,
}

impl PrsGenConfig {
    /// Edge probability `2/n`, capped at 1.
    pub fn new(n: usize, seed: u64) -> Self {
        Self { n, p: (2.0 / n.max(1) as f64).min(1.0), seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(QbafError::InvalidSpec("n must be at least 1".into()));
        }
        check_probability(self.p)
    }

    pub fn topic(&self) -> ArgumentId {
        ArgumentId::new(format!("a{}", self.n))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpGenConfig {
    pub layer_sizes: Vec<usize>,
    pub connect_prob: f64,
    pub seed: u64,
}

impl MlpGenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 {
            return Err(QbafError::InvalidSpec("at least two layers required".into()));
        }
        if self.layer_sizes.contains(&0) {
            return Err(QbafError::InvalidSpec("layer sizes must be positive".into()));
        }
        if self.layer_sizes.last() != Some(&1) {
            return Err(QbafError::InvalidSpec("last layer must have exactly one argument".into()));
        }
        check_probability(self.connect_prob)
    }

    pub fn topic(&self) -> ArgumentId {
        mlp_id(self.layer_sizes.len() - 1, 0)
    }
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(QbafError::InvalidSpec(format!("probability {p} outside [0, 1]")))
    }
}

fn mlp_id(layer: usize, idx: usize) -> ArgumentId {
    ArgumentId::new(format!("l{layer}_{idx}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Prs,
    Mlp,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Prs => "prs",
            Family::Mlp => "mlp",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum GenConfig {
    Prs(PrsGenConfig),
    Mlp(MlpGenConfig),
}

impl GenConfig {
    pub fn family(&self) -> Family {
        match self {
            GenConfig::Prs(_) => Family::Prs,
            GenConfig::Mlp(_) => Family::Mlp,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            GenConfig::Prs(c) => c.validate(),
            GenConfig::Mlp(c) => c.validate(),
        }
    }

    pub fn topic(&self) -> ArgumentId {
        match self {
            GenConfig::Prs(c) => c.topic(),
            GenConfig::Mlp(c) => c.topic(),
        }
    }

    pub fn generate(&self, index: u64) -> Result<Qbaf> {
        match self {
            GenConfig::Prs(c) => generate_prs_indexed(c, index),
            GenConfig::Mlp(c) => generate_mlp_like_indexed(c, index),
        }
    }

    /// Short descriptor, e.g. `n=10 p=0.2` or `8-32-1 p=0.5`.
    pub fn descriptor(&self) -> String {
        match self {
            GenConfig::Prs(c) => format!("n={} p={}", c.n, c.p),
            GenConfig::Mlp(c) => {
                let layers: Vec<String> = c.layer_sizes.iter().map(ToString::to_string).collect();
                format!("{} p={}", layers.join("-"), c.connect_prob)
            }
        }
    }
}

fn rng_for(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn random_edge(rng: &mut ChaCha8Rng, p: f64, source: &ArgumentId, target: &ArgumentId) -> Option<Edge> {
    if !rng.random_bool(p) {
        return None;
    }
    let polarity = if rng.random_bool(0.5) { Polarity::Attack } else { Polarity::Support };
    Some(Edge {
        source: source.clone(),
        target: target.clone(),
        polarity,
        weight: rng.random::<f64>(),
    })
}

pub fn generate_prs(cfg: &PrsGenConfig) -> Result<Qbaf> {
    generate_prs_indexed(cfg, 0)
}

/// Arguments `a1..an`; each pair `i < j` gets an edge `ai → aj` with probability `p`.
pub fn generate_prs_indexed(cfg: &PrsGenConfig, index: u64) -> Result<Qbaf> {
    cfg.validate()?;
    let mut rng = rng_for(cfg.seed, index);
    let arguments: Vec<Argument> = (1..=cfg.n)
        .map(|i| Argument {
            id: ArgumentId::new(format!("a{i}")),
            base_score: rng.random::<f64>(),
        })
        .collect();
    let mut edges = Vec::new();
    for i in 0..cfg.n {
        for j in i + 1..cfg.n {
            edges.extend(random_edge(&mut rng, cfg.p, &arguments[i].id, &arguments[j].id));
        }
    }
    Qbaf::new(QbafData { arguments, edges })
}

pub fn generate_mlp_like(cfg: &MlpGenConfig) -> Result<Qbaf> {
    generate_mlp_like_indexed(cfg, 0)
}

/// Layered DAG with arguments `l{layer}_{idx}`; edges only between adjacent layers.
pub fn generate_mlp_like_indexed(cfg: &MlpGenConfig, index: u64) -> Result<Qbaf> {
    cfg.validate()?;
    let mut rng = rng_for(cfg.seed, index);
    let layers: Vec<Vec<ArgumentId>> = cfg
        .layer_sizes
        .iter()
        .enumerate()
        .map(|(l, &size)| (0..size).map(|i| mlp_id(l, i)).collect())
        .collect();
    let arguments: Vec<Argument> = layers
        .iter()
        .flatten()
        .map(|id| Argument {
            id: id.clone(),
            base_score: rng.random::<f64>(),
        })
        .collect();
    let mut edges = Vec::new();
    for pair in layers.windows(2) {
        for source in &pair[0] {
            for target in &pair[1] {
                edges.extend(random_edge(&mut rng, cfg.connect_prob, source, target));
            }
        }
    }
    Qbaf::new(QbafData { arguments, edges })
}

/// Aggregated contest results for one grid point. Statistics are `None`
/// when no repetitions ran.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub family: Family,
    pub config: String,
    pub semantics: String,
    pub repetitions: usize,
    pub solved: usize,
    pub validity: Option<f64>,
    pub attempts_avg: Option<f64>,
    pub attempts_max: Option<usize>,
    pub runtime_median_s: Option<f64>,
    pub runtime_avg_s: Option<f64>,
    pub edges_avg: Option<f64>,
    pub iterations_avg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
struct RepResult {
    solved: bool,
    attempts: usize,
    iterations: usize,
    runtime_s: f64,
    edges: usize,
}

fn run_one(cfg: &GenConfig, index: u64, spec: &SemanticsSpec, defaults: &ContestRequest) -> RepResult {
    let failed = |edges| RepResult {
        solved: false,
        attempts: defaults.max_attempts,
        iterations: 0,
        runtime_s: 0.0,
        edges,
    };
    let Ok(q) = cfg.generate(index) else {
        return failed(0);
    };
    let topic = cfg.topic();
    let Ok(interval) = attainable_interval(&q, spec, topic.as_str()) else {
        return failed(q.edges().len());
    };
    let req = ContestRequest {
        topic,
        desired_strength: interval.midpoint(),
        ..defaults.clone()
    };
    let start = Instant::now();
    let outcome = contest(&q, spec, &req);
    let runtime_s = start.elapsed().as_secs_f64();
    match outcome {
        Ok(o) => RepResult {
            solved: o.status == ContestStatus::Solved,
            attempts: o.attempts_used,
            iterations: o.iterations_used,
            runtime_s,
            edges: q.edges().len(),
        },
        Err(_) => failed(q.edges().len()),
    }
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn summarize(cfg: &GenConfig, spec: &SemanticsSpec, reps: &[RepResult]) -> BenchRow {
    let n = reps.len();
    let mut row = BenchRow {
        family: cfg.family(),
        config: cfg.descriptor(),
        semantics: spec.kind.name().to_string(),
        repetitions: n,
        solved: reps.iter().filter(|r| r.solved).count(),
        validity: None,
        attempts_avg: None,
        attempts_max: None,
        runtime_median_s: None,
        runtime_avg_s: None,
        edges_avg: None,
        iterations_avg: None,
    };
    if n == 0 {
        return row;
    }
    let mean = |f: &dyn Fn(&RepResult) -> f64| reps.iter().map(f).sum::<f64>() / n as f64;
    let mut runtimes: Vec<f64> = reps.iter().map(|r| r.runtime_s).collect();
    runtimes.sort_by(f64::total_cmp);
    row.validity = Some(row.solved as f64 / n as f64);
    row.attempts_avg = Some(mean(&|r| r.attempts as f64));
    row.attempts_max = reps.iter().map(|r| r.attempts).max();
    row.runtime_median_s = Some(median(&runtimes));
    row.runtime_avg_s = Some(mean(&|r| r.runtime_s));
    row.edges_avg = Some(mean(&|r| r.edges as f64));
    row.iterations_avg = Some(mean(&|r| r.iterations as f64));
    row
}

pub fn run_experiment(
    grid: &[GenConfig],
    repetitions: usize,
    spec: &SemanticsSpec,
    defaults: &ContestRequest,
) -> Result<Vec<BenchRow>> {
    run_experiment_with(grid, repetitions, spec, defaults, |_| Ok(()))
}

/// As [`run_experiment`], handing each row to `on_row` as soon as its grid
/// point finishes. Repetitions within a grid point may run in parallel.
pub fn run_experiment_with<F>(
    grid: &[GenConfig],
    repetitions: usize,
    spec: &SemanticsSpec,
    defaults: &ContestRequest,
    mut on_row: F,
) -> Result<Vec<BenchRow>>
where
    F: FnMut(&BenchRow) -> Result<()>,
{
    spec.validate()?;
    defaults.validate()?;
    for cfg in grid {
        cfg.validate()?;
    }
    let mut rows = Vec::with_capacity(grid.len());
    for cfg in grid {
        let reps: Vec<RepResult> = (0..repetitions as u64)
            .into_par_iter()
            .map(|i| run_one(cfg, i, spec, defaults))
            .collect();
        let row = summarize(cfg, spec, &reps);
        on_row(&row)?;
        rows.push(row);
    }
    Ok(rows)
}

pub const CSV_HEADER: [&str; 8] = [
    "family",
    "config",
    "semantics",
    "validity",
    "attempts_avg",
    "attempts_max",
    "runtime_median_s",
    "runtime_avg_s",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes rows one per line; undefined statistics become empty fields.
pub struct CsvRowWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> CsvRowWriter<W> {
    pub fn new(out: W) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(out);
        inner.write_record(CSV_HEADER).map_err(csv_err)?;
        inner.flush().map_err(io_err)?;
        Ok(Self { inner })
    }

    pub fn write(&mut self, row: &BenchRow) -> Result<()> {
        self.inner
            .write_record([
                row.family.to_string(),
                row.config.clone(),
                row.semantics.clone(),
                opt(row.validity),
                opt(row.attempts_avg),
                opt(row.attempts_max),
                opt(row.runtime_median_s),
                opt(row.runtime_avg_s),
            ])
            .map_err(csv_err)?;
        self.inner.flush().map_err(io_err)
    }
}

fn csv_err(e: csv::Error) -> QbafError {
    QbafError::InvalidRequest(format!("csv output: {e}"))
}

fn io_err(e: std::io::Error) -> QbafError {
    QbafError::InvalidRequest(format!("output: {e}"))
}

pub fn rows_to_csv(rows: &[BenchRow]) -> Result<String> {
    let mut buf = Vec::new();
    let mut w = CsvRowWriter::new(&mut buf)?;
    for row in rows {
        w.write(row)?;
    }
    drop(w);
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

pub fn rows_to_json(rows: &[BenchRow]) -> String {
    serde_json::to_string_pretty(rows).expect("rows serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::SemanticsKind;

    #[test]
    fn single_argument() {
        let q = generate_prs(&PrsGenConfig::new(1, 3)).unwrap();
        assert_eq!(q.len(), 1);
        assert!(q.edges().is_empty());
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = PrsGenConfig { n: 10, p: 0.2, seed: 42 };
        assert_eq!(generate_prs(&cfg).unwrap(), generate_prs(&cfg).unwrap());
        let other = generate_prs_indexed(&cfg, 1).unwrap();
        assert_ne!(generate_prs(&cfg).unwrap(), other);
    }

    #[test]
    fn full_mlp_counts() {
        let cfg = MlpGenConfig {
            layer_sizes: vec![8, 32, 16, 8, 1],
            connect_prob: 1.0,
            seed: 0,
        };
        let q = generate_mlp_like(&cfg).unwrap();
        assert_eq!(q.len(), 65);
        assert_eq!(q.edges().len(), 904);
        assert!(q.is_acyclic());
    }

    #[test]
    fn no_edges_at_zero() {
        let cfg = MlpGenConfig {
            layer_sizes: vec![3, 2, 1],
            connect_prob: 0.0,
            seed: 5,
        };
        assert!(generate_mlp_like(&cfg).unwrap().edges().is_empty());
    }

    #[test]
    fn config_checks() {
        assert!(PrsGenConfig { n: 0, p: 0.5, seed: 0 }.validate().is_err());
        assert!(PrsGenConfig { n: 3, p: 1.5, seed: 0 }.validate().is_err());
        let bad = |l: Vec<usize>| MlpGenConfig { layer_sizes: l, connect_prob: 0.5, seed: 0 }.validate().is_err();
        assert!(bad(vec![1]));
        assert!(bad(vec![3, 2]));
        assert!(bad(vec![3, 0, 1]));
    }

    #[test]
    fn zero_repetitions() {
        let grid = [GenConfig::Prs(PrsGenConfig::new(10, 1))];
        let spec = SemanticsSpec::new(SemanticsKind::Reb);
        let rows = run_experiment(&grid, 0, &spec, &ContestRequest::new("a10", 0.5)).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].validity, None);
        assert_eq!(rows[0].attempts_max, None);
        let csv = rows_to_csv(&rows).unwrap();
        assert_eq!(csv.lines().next().unwrap(), CSV_HEADER.join(","));
        assert_eq!(csv.lines().nth(1).unwrap(), "prs,n=10 p=0.2,reb,,,,,");
    }

    #[test]
    fn small_sweep() {
        let grid = [
            GenConfig::Prs(PrsGenConfig::new(8, 7)),
            GenConfig::Prs(PrsGenConfig::new(12, 7)),
        ];
        let spec = SemanticsSpec::new(SemanticsKind::Qe);
        let mut seen = Vec::new();
        let rows = run_experiment_with(&grid, 3, &spec, &ContestRequest::new("x", 0.5), |r| {
            seen.push(r.config.clone());
            Ok(())
        })
        .unwrap();
        assert_eq!(seen, ["n=8 p=0.25", "n=12 p=0.16666666666666666"]);
        for row in &rows {
            assert_eq!(row.repetitions, 3);
            let v = row.validity.unwrap();
            assert!((0.0..=1.0).contains(&v));
            assert!(row.attempts_max.unwrap() as f64 >= row.attempts_avg.unwrap());
            assert!(row.attempts_avg.unwrap() >= 1.0);
        }
        let json: Vec<BenchRow> = serde_json::from_str(&rows_to_json(&rows)).unwrap();
        assert_eq!(json, rows);
    }
}
