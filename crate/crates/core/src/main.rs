use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use adaptive_bt::bench::{
    build_canonical_tree, canonical_xml, declared_strategy_ids, emit_results, run_episode,
    run_experiment_with, trial_seed, BenchError, Behavior, Experiment, ExperimentConfig, SimConfig,
};
use adaptive_bt::adaptive::DataStore;
use adaptive_bt::bench::run::EpisodeSpec;
use adaptive_bt::def::{has_errors, parse_with_models, validate_switch_coverage, TreeDocument};
use adaptive_bt::sim::{leaf_models, leaf_registry};

#[derive(Parser)]
#[command(name = "adaptive-bt", version, about = "Adaptive behavior-tree valve experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write the results CSV and summary
    Run(RunArgs),
    /// Check a tree definition file
    Validate {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run a single episode, printing the trace of every tick
    Tick(TickArgs),
    /// Print the canonical tree for a behavior
    Tree {
        #[arg(long, default_value = "adaptive")]
        behavior: Behavior,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    experiment: Experiment,
    #[arg(long)]
    behavior: Behavior,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u32>,
    #[arg(long)]
    attempts: Option<u32>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write every F/T record of the run to this CSV file
    #[arg(long)]
    data_store: Option<PathBuf>,
    /// Results CSV; defaults to results_<experiment>_<behavior>.csv
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use this tree instead of the generated canonical one
    #[arg(long)]
    tree: Option<PathBuf>,
    /// Only run trials on this device
    #[arg(long)]
    device: Option<String>,
    /// Run trials on worker threads (ignored when data is retained)
    #[arg(long)]
    parallel: bool,
}

#[derive(Args)]
struct TickArgs {
    /// Defaults to the canonical tree for the behavior.
    #[arg(long)]
    tree: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "A")]
    experiment: Experiment,
    #[arg(long, default_value = "adaptive")]
    behavior: Behavior,
    #[arg(long)]
    device: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

fn load_config(path: Option<&Path>) -> Result<SimConfig, BenchError> {
    match path {
        Some(p) => SimConfig::load(p),
        None => Ok(SimConfig::default()),
    }
}

fn load_tree(path: &Path) -> Result<TreeDocument, BenchError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
    parse_with_models(&text, &leaf_models()).map_err(BenchError::Tree)
}

fn experiment_config(
    sim: &SimConfig,
    experiment: Experiment,
    behavior: Behavior,
    device: Option<&str>,
) -> Result<ExperimentConfig, BenchError> {
    let mut cfg = ExperimentConfig::new(sim, experiment, behavior)?;
    if let Some(id) = device {
        cfg.devices = vec![sim.device(id)?.clone()];
    }
    Ok(cfg)
}

fn run(args: RunArgs) -> Result<ExitCode, BenchError> {
    let sim = load_config(args.config.as_deref())?;
    let mut cfg = experiment_config(&sim, args.experiment, args.behavior, args.device.as_deref())?;
    cfg.seed = args.seed.unwrap_or(cfg.seed);
    cfg.trials = args.trials.unwrap_or(cfg.trials);
    cfg.num_attempts = args.attempts.unwrap_or(cfg.num_attempts);
    cfg.parallel = args.parallel;
    let doc = match &args.tree {
        Some(p) => load_tree(p)?,
        None => build_canonical_tree(&cfg.registry, cfg.behavior).map_err(BenchError::Tree)?,
    };
    let report = run_experiment_with(&cfg, &doc)?;
    let out = args
        .out
        .unwrap_or_else(|| PathBuf::from(format!("results_{}_{}.csv", cfg.experiment, cfg.behavior)));
    let title = format!(
        "Experiment {} / behavior {} / seed {} / {} attempts",
        cfg.experiment, cfg.behavior, cfg.seed, cfg.num_attempts
    );
    let text = emit_results(&report.results, cfg.num_attempts, &title, &out)?;
    print!("{text}");
    if let Some(path) = &args.data_store {
        report.archive.persist(path)?;
    }
    for r in &report.results {
        for e in &r.errors {
            eprintln!("trial {} ({}): {e}", r.trial, r.device_id);
        }
    }
    Ok(if report.all_succeeded() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn validate(tree: &Path, config: Option<&Path>) -> Result<ExitCode, BenchError> {
    let text = std::fs::read_to_string(tree)
        .map_err(|e| BenchError::Config(format!("{}: {e}", tree.display())))?;
    let doc = match parse_with_models(&text, &leaf_models()) {
        Ok(doc) => doc,
        Err(diagnostics) => {
            for d in &diagnostics {
                println!("{d}");
            }
            return Ok(ExitCode::from(2));
        }
    };
    let ids = match declared_strategy_ids(&doc) {
        Some(ids) => ids,
        None => load_config(config)?.registry.ids(),
    };
    let diagnostics = validate_switch_coverage(&doc, &ids);
    for d in &diagnostics {
        println!("{d}");
    }
    Ok(if has_errors(&diagnostics) { ExitCode::from(2) } else { ExitCode::SUCCESS })
}

fn tick(args: TickArgs) -> Result<ExitCode, BenchError> {
    let sim = load_config(args.config.as_deref())?;
    let mut cfg = experiment_config(&sim, args.experiment, args.behavior, args.device.as_deref())?;
    cfg.seed = args.seed.unwrap_or(cfg.seed);
    cfg.validate()?;
    let doc = match &args.tree {
        Some(p) => load_tree(p)?,
        None => build_canonical_tree(&cfg.registry, cfg.behavior).map_err(BenchError::Tree)?,
    };
    let leaves = leaf_registry();
    let device = &cfg.devices[0];
    let spec = EpisodeSpec {
        doc: &doc,
        leaves: &leaves,
        config: &cfg,
        device,
        trial: 1,
        seed: trial_seed(cfg.seed, 0, 1),
    };
    let mut dump = |n: u64, ep: &adaptive_bt::sim::Episode, status, trace: &adaptive_bt::bt::TickTrace| {
        let nodes: Vec<String> = trace.entries.iter().map(|e| format!("{}={}", e.node, e.status)).collect();
        println!("tick {n} t={:.1} root={status} | {}", ep.world.sim_time(), nodes.join(" "));
        for e in &trace.errors {
            println!("  error {e}");
        }
        for r in &trace.retries {
            println!(
                "  retry {} reason={} exempt={} failures={}",
                r.node,
                r.reason.as_deref().unwrap_or("-"),
                r.exempt,
                r.failures
            );
        }
    };
    let (result, _) = run_episode(&spec, DataStore::new(), Some(&mut dump))?;
    println!(
        "result: {} in {:.1} s, attempts {}, strategies [{}]",
        if result.success { "success" } else { "failure" },
        result.sim_time,
        result.attempts_consumed,
        result.strategy_sequence.join(" -> ")
    );
    Ok(if result.success { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run(args),
        Command::Validate { tree, config } => validate(&tree, config.as_deref()),
        Command::Tick(args) => tick(args),
        Command::Tree { behavior, config } => load_config(config.as_deref()).map(|sim| {
            print!("{}", canonical_xml(&sim.registry, behavior));
            ExitCode::SUCCESS
        }),
    };
    outcome.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    })
}
