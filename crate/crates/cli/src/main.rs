use std::fs;
use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ewqbaf::bench::{self, CsvRowWriter, GenConfig, MlpGenConfig, PrsGenConfig};
use ewqbaf::{
    parse_qbaf, serialize_qbaf, validate, ContestRequest, ContestStatus, GradientMethod, Qbaf, QbafData, QbafError,
    SemanticsKind, SemanticsSpec, DEFAULT_PERTURBATION,
};
use ewqbaf_cli::server::{router, AppState};
use ewqbaf_cli::store::Store;
use ewqbaf_cli::views::{self, canonical};

#[derive(Parser)]
#[command(name = "ewqbaf", version, about = "Evaluate, explain and contest edge-weighted QBAFs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a QBAF document and report every violation.
    Validate { file: PathBuf },
    /// Print the strength of every argument.
    Eval {
        file: PathBuf,
        #[arg(long, default_value = "mlp")]
        semantics: SemanticsKind,
        #[arg(long)]
        json: bool,
    },
    /// Rank edges by their attribution to a topic.
    Grae {
        file: PathBuf,
        #[arg(long)]
        topic: String,
        #[arg(long, default_value = "mlp")]
        semantics: SemanticsKind,
        /// Use the exact gradient instead of a perturbation.
        #[arg(long)]
        exact: bool,
        #[arg(long, default_value_t = DEFAULT_PERTURBATION)]
        eps: f64,
        #[arg(long)]
        json: bool,
    },
    /// Print the range of strengths the topic can reach by reweighting.
    Attain {
        file: PathBuf,
        #[arg(long)]
        topic: String,
        #[arg(long, default_value = "mlp")]
        semantics: SemanticsKind,
        #[arg(long)]
        json: bool,
    },
    /// Search for edge weights that move the topic to a target strength.
    Contest(ContestArgs),
    /// Run the contestation benchmark over generated graphs.
    Bench(BenchArgs),
    /// Serve the HTTP API.
    Serve {
        #[arg(long, env = "QBAF_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        /// Static files served for paths outside the API.
        #[arg(long)]
        ui_dir: Option<PathBuf>,
        /// Directory that keeps handles across restarts.
        #[arg(long, env = "QBAF_STORE")]
        store: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ContestArgs {
    file: PathBuf,
    #[arg(long)]
    topic: String,
    #[arg(long)]
    target: f64,
    #[arg(long, default_value = "mlp")]
    semantics: SemanticsKind,
    #[arg(long, default_value_t = 0.01)]
    error_threshold: f64,
    #[arg(long, default_value_t = 1000)]
    max_iterations: usize,
    #[arg(long, default_value_t = 10)]
    max_attempts: usize,
    #[arg(long, default_value_t = DEFAULT_PERTURBATION)]
    perturbation: f64,
    #[arg(long, default_value_t = 0.5)]
    step_min: f64,
    #[arg(long, default_value_t = 25.0)]
    step_max: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "approx")]
    gradient: Gradient,
    /// Exit with status 1 unless the target is reached.
    #[arg(long)]
    strict: bool,
    /// Write the QBAF with the proposed weights here.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Gradient {
    Approx,
    Exact,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Prs,
    Mlp,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// Argument counts for random graphs.
    #[arg(long, value_delimiter = ',', default_value = "10,20,30,40,50")]
    sizes: Vec<usize>,
    /// Edge probability for random graphs; 2/n when omitted.
    #[arg(long)]
    p: Option<f64>,
    /// Layer structures for layered graphs, e.g. `8-32-1`.
    #[arg(long, value_delimiter = ',', default_value = "8-32-1,8-32-16-1,8-32-16-8-1")]
    layers: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "0.5,1")]
    connect_probs: Vec<f64>,
    #[arg(long, default_value_t = bench::DEFAULT_REPETITIONS)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "mlp")]
    semantics: SemanticsKind,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

/// A failed run: status 1 for domain outcomes, 2 for bad input.
struct Exit {
    code: u8,
    message: String,
}

impl Exit {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
}

impl From<QbafError> for Exit {
    fn from(e: QbafError) -> Self {
        let code = if matches!(e, QbafError::Cyclic) { 1 } else { 2 };
        Self { code, message: e.to_string() }
    }
}

fn io_exit(path: &Path) -> impl FnOnce(io::Error) -> Exit + '_ {
    move |e| Exit::usage(format!("{}: {e}", path.display()))
}

fn read_qbaf(path: &Path) -> Result<Qbaf, Exit> {
    let bytes = fs::read(path).map_err(io_exit(path))?;
    Ok(parse_qbaf(&bytes)?)
}

fn fmt_strength(s: Option<f64>) -> String {
    s.map_or_else(|| "undefined".to_string(), |s| format!("{s:.6}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn run(command: Command) -> Result<u8, Exit> {
    match command {
        Command::Validate { file } => validate_file(&file),
        Command::Eval { file, semantics, json } => {
            let view = views::strengths(&read_qbaf(&file)?, semantics)?;
            if json {
                print!("{}", canonical(&view));
            } else {
                let width = view.strengths.iter().map(|e| e.id.as_str().len()).max().unwrap_or(0);
                for e in &view.strengths {
                    println!("{:<width$}  {}", e.id.as_str(), fmt_strength(e.strength));
                }
            }
            Ok(0)
        }
        Command::Grae { file, topic, semantics, exact, eps, json } => {
            let view = views::graes(&read_qbaf(&file)?, semantics, &topic, exact, eps)?;
            if json {
                print!("{}", canonical(&view));
            } else {
                for g in &view.graes {
                    println!(
                        "{} -> {} ({})  {:+.6}  {:?}",
                        g.source, g.target, g.polarity, g.score, g.influence
                    );
                }
            }
            Ok(0)
        }
        Command::Attain { file, topic, semantics, json } => {
            let view = views::interval(&read_qbaf(&file)?, semantics, &topic)?;
            if json {
                print!("{}", canonical(&view));
            } else {
                println!("{}: [{:.6}, {:.6}]", view.topic, view.min, view.max);
            }
            Ok(0)
        }
        Command::Contest(args) => contest(args),
        Command::Bench(args) => run_bench(args),
        Command::Serve { port, host, ui_dir, store } => serve(SocketAddr::new(host, port), ui_dir, store),
    }
}

fn validate_file(path: &Path) -> Result<u8, Exit> {
    let bytes = fs::read(path).map_err(io_exit(path))?;
    let data: QbafData = serde_json::from_slice(&bytes).map_err(|e| Exit::usage(format!("parse error: {e}")))?;
    match validate(&data) {
        Ok(()) => {
            let q = Qbaf::new(data)?;
            let shape = if q.is_acyclic() { "acyclic" } else { "cyclic" };
            println!("ok: {} arguments, {} edges, {shape}", q.len(), q.edges().len());
            Ok(0)
        }
        Err(violations) => {
            for v in &violations {
                println!("{v}");
            }
            Ok(1)
        }
    }
}

fn contest(args: ContestArgs) -> Result<u8, Exit> {
    let q = read_qbaf(&args.file)?;
    let req = ContestRequest {
        topic: args.topic.as_str().into(),
        desired_strength: args.target,
        error_threshold: args.error_threshold,
        max_iterations: args.max_iterations,
        max_attempts: args.max_attempts,
        perturbation: args.perturbation,
        step_min: args.step_min,
        step_max: args.step_max,
        seed: args.seed,
        gradient: match args.gradient {
            Gradient::Approx => GradientMethod::Approx,
            Gradient::Exact => GradientMethod::Exact,
        },
    };
    let view = views::contest(&q, args.semantics, &req, |_| {})?;
    if let Some(out) = &args.out {
        let revised = q.with_weights(&view.weight_values())?;
        fs::write(out, serialize_qbaf(&revised)).map_err(io_exit(out))?;
    }
    if args.json {
        print!("{}", canonical(&view));
    } else {
        println!("status: {:?}", view.status);
        println!(
            "{}: {:.6} (wanted {}, attainable [{:.6}, {:.6}])",
            view.topic, view.final_strength, view.desired_strength, view.interval.min, view.interval.max
        );
        println!("iterations: {}, attempts: {}", view.iterations_used, view.attempts_used);
        for (w, e) in view.weights.iter().zip(q.edges()) {
            if w.weight != e.weight {
                println!("  {} -> {}: {:.6} -> {:.6}", w.source, w.target, e.weight, w.weight);
            }
        }
    }
    Ok(if args.strict && view.status != ContestStatus::Solved { 1 } else { 0 })
}

fn parse_layers(s: &str) -> Result<Vec<usize>, Exit> {
    s.split('-')
        .map(|n| n.trim().parse().map_err(|_| Exit::usage(format!("bad layer structure `{s}`"))))
        .collect()
}

fn bench_grid(args: &BenchArgs) -> Result<Vec<GenConfig>, Exit> {
    Ok(match args.family {
        FamilyArg::Prs => args
            .sizes
            .iter()
            .map(|&n| {
                let mut c = PrsGenConfig::new(n, args.seed);
                if let Some(p) = args.p {
                    c.p = p;
                }
                GenConfig::Prs(c)
            })
            .collect(),
        FamilyArg::Mlp => {
            let mut grid = Vec::new();
            for layers in &args.layers {
                let layer_sizes = parse_layers(layers)?;
                for &connect_prob in &args.connect_probs {
                    grid.push(GenConfig::Mlp(MlpGenConfig {
                        layer_sizes: layer_sizes.clone(),
                        connect_prob,
                        seed: args.seed,
                    }));
                }
            }
            grid
        }
    })
}

fn run_bench(args: BenchArgs) -> Result<u8, Exit> {
    let grid = bench_grid(&args)?;
    let spec = SemanticsSpec::new(args.semantics);
    let defaults = ContestRequest::new("", 0.5);
    let mut out: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(fs::File::create(path).map_err(io_exit(path))?),
        None => Box::new(io::stdout().lock()),
    };
    match args.format {
        Format::Csv => {
            let mut writer = CsvRowWriter::new(&mut out)?;
            bench::run_experiment_with(&grid, args.reps, &spec, &defaults, |row| writer.write(row))?;
        }
        Format::Json => {
            let rows = bench::run_experiment(&grid, args.reps, &spec, &defaults)?;
            writeln!(out, "{}", bench::rows_to_json(&rows)).map_err(|e| Exit::usage(e.to_string()))?;
        }
    }
    Ok(0)
}

fn serve(addr: SocketAddr, ui_dir: Option<PathBuf>, store: Option<PathBuf>) -> Result<u8, Exit> {
    let store = match store {
        Some(dir) => Store::open(&dir).map_err(io_exit(&dir))?,
        None => Store::in_memory(),
    };
    let app = router(Arc::new(AppState { store }), ui_dir);
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Exit::usage(e.to_string()))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| Exit::usage(format!("bind {addr}: {e}")))?;
        eprintln!("listening on http://{addr}");
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| Exit::usage(e.to_string()))?;
        Ok(0)
    })
}
