use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use linkbias_cli::config::{read_json, MethodKind};
use linkbias_cli::{cmd_report, cmd_run, cmd_split, CliError, CliResult, RunConfig, SplitConfig};
use linkbias_core::{EdgeOperator, SplitMode};

#[derive(Parser)]
#[command(
    name = "linkbias",
    version,
    about = "Link prediction evaluation and bias audits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split an edge list into a learning graph and future edges.
    Split(SplitArgs),
    /// Train, score and audit methods over several seeds.
    Run(Box<RunArgs>),
    /// Tabulate and plot finished runs.
    Report(ReportArgs),
}

#[derive(Copy, Clone, ValueEnum)]
enum Mode {
    Static,
    Temporal,
}

impl From<Mode> for SplitMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Static => SplitMode::Static,
            Mode::Temporal => SplitMode::Temporal,
        }
    }
}

#[derive(Args)]
struct InputArgs {
    /// Whitespace-separated edge list (`u v`, `u v w`, `u v t` or `u v w t`).
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Fraction of edges kept for learning.
    #[arg(long)]
    fraction: Option<f64>,
    /// Lines carry a weight column (ignored).
    #[arg(long)]
    weighted: bool,
}

#[derive(Args)]
struct SplitArgs {
    /// JSON file with the same fields as the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory written by `split`.
    #[arg(long)]
    split: Option<PathBuf>,
    #[command(flatten)]
    input: InputArgs,
    /// heuristics, embedding, trained or trained-grid.
    #[arg(long = "method", value_delimiter = ',')]
    methods: Vec<MethodKind>,
    /// Node embeddings; `{seed}` is replaced by the run seed.
    #[arg(long)]
    embedding_file: Option<String>,
    #[arg(long)]
    operator: Option<EdgeOperator>,
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    #[arg(long)]
    sample_size: Option<usize>,
    #[arg(long)]
    min_positives: Option<usize>,
    #[arg(long)]
    quota_positives: Option<usize>,
    /// Largest k written to the precision@k CSV.
    #[arg(long)]
    precision_max_k: Option<usize>,
    #[arg(long)]
    hub_fraction: Option<f64>,
    /// Learning edges sampled as positive training examples.
    #[arg(long)]
    positive_fraction: Option<f64>,
    #[arg(long)]
    l2_lambda: Option<f64>,
    #[arg(long)]
    walk_p: Option<f64>,
    #[arg(long)]
    walk_q: Option<f64>,
    #[arg(long)]
    walk_dim: Option<usize>,
    #[arg(long)]
    walk_length: Option<usize>,
    #[arg(long)]
    walks_per_node: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long, num_args = 1.., required = true)]
    runs: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn split_config(args: SplitArgs) -> CliResult<SplitConfig> {
    let mut cfg: SplitConfig = match &args.config {
        Some(path) => read_json(path)?,
        None => SplitConfig::default(),
    };
    if args.input.input.is_some() {
        cfg.input = args.input.input;
    }
    set(&mut cfg.mode, args.input.mode.map(Into::into));
    set(&mut cfg.fraction, args.input.fraction);
    cfg.weighted |= args.input.weighted;
    set(&mut cfg.seed, args.seed);
    if args.out.is_some() {
        cfg.out = args.out;
    }
    Ok(cfg)
}

fn run_config(args: RunArgs) -> CliResult<RunConfig> {
    let mut cfg: RunConfig = match &args.config {
        Some(path) => read_json(path)?,
        None => RunConfig::default(),
    };
    if args.split.is_some() {
        cfg.split_dir = args.split;
        cfg.split.input = None;
    }
    if args.input.input.is_some() {
        cfg.split.input = args.input.input;
        cfg.split_dir = None;
    }
    set(&mut cfg.split.mode, args.input.mode.map(Into::into));
    set(&mut cfg.split.fraction, args.input.fraction);
    cfg.split.weighted |= args.input.weighted;
    if !args.methods.is_empty() {
        cfg.methods = args.methods;
    }
    if args.embedding_file.is_some() {
        cfg.embedding_file = args.embedding_file;
    }
    set(&mut cfg.operator, args.operator);
    if !args.seeds.is_empty() {
        cfg.seeds = args.seeds;
    }
    set(&mut cfg.sample_size, args.sample_size);
    set(&mut cfg.min_positives, args.min_positives);
    set(&mut cfg.quota_positives, args.quota_positives);
    set(&mut cfg.precision_max_k, args.precision_max_k);
    set(&mut cfg.hub_fraction, args.hub_fraction);
    set(
        &mut cfg.classifier.positive_fraction,
        args.positive_fraction,
    );
    set(&mut cfg.classifier.l2_lambda, args.l2_lambda);
    set(&mut cfg.walk.p, args.walk_p);
    set(&mut cfg.walk.q, args.walk_q);
    set(&mut cfg.walk_dim, args.walk_dim);
    set(&mut cfg.walk.walk_length, args.walk_length);
    set(&mut cfg.walk.walks_per_node, args.walks_per_node);
    set(&mut cfg.walk.window, args.window);
    set(&mut cfg.walk.epochs, args.epochs);
    if args.out.is_some() {
        cfg.out = args.out;
    }
    Ok(cfg)
}

fn execute(command: Command) -> CliResult<()> {
    match command {
        Command::Split(args) => {
            let info = cmd_split(&split_config(args)?)?;
            println!(
                "learning graph: {} nodes, {} edges; prediction edges: {}",
                info.learning_nodes, info.learning_edges, info.prediction_edges
            );
        }
        Command::Run(args) => {
            let outcome = cmd_run(&run_config(*args)?)?;
            for (method, r) in &outcome.manifest.aggregates {
                println!(
                    "{method}: AP {:.4} ± {:.4}, ROC {:.4} ± {:.4} over {} seed(s)",
                    r.ap.mean,
                    r.ap.std,
                    r.auroc.mean,
                    r.auroc.std,
                    r.runs.len()
                );
            }
            println!("results in {}", outcome.out.display());
            let failures = &outcome.manifest.failures;
            if !failures.is_empty() {
                return Err(CliError::Stage(format!(
                    "{} failure(s): {}",
                    failures.len(),
                    failures.join("; ")
                )));
            }
        }
        Command::Report(args) => {
            let report = cmd_report(&args.runs, &args.out)?;
            println!(
                "{} row(s) written to {}",
                report.rows.len(),
                args.out.display()
            );
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match execute(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
