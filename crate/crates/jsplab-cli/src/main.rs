//! Command-line laboratory: generates seeded instance sets, enumerates
//! their optimal sets, and runs the experiment suites, emitting CSV tables
//! and JSON summaries that replay byte for byte under a fixed seed.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use jsplab::exact::{enumerate_optima, optimal_makespan, ExactBudget, ExactError, OptimalSet};
use jsplab::experiments::{
    cost_model_suite, descent_suite, init_suite, rld_suite, structure_suite, tenure_suite,
    LabInstance, SuiteArtifact,
};
use jsplab::instance::{Dur, Instance};
use jsplab::markov::EstimationConfig;
use jsplab::rng::derive_seed;
use jsplab::tabu::{TabuConfig, SMALL_INTERVAL};
use serde_json::json;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "jsplab", version, about = "Job-shop scheduling experimentation laboratory")]
struct Cli {
    /// Worker threads for data-parallel stages (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded instance set with an index manifest.
    Generate(GenerateArgs),
    /// Solve instances exactly and write optimal-set sidecars.
    Enumerate(EnumerateArgs),
    /// Run an experiment suite over a prepared instance directory.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Jobs per instance.
    #[arg(long)]
    n: usize,
    /// Machines per instance.
    #[arg(long)]
    m: usize,
    /// Workflow partitions: 1 = random, m = flowshop.
    #[arg(long, default_value_t = 1)]
    wf: usize,
    /// Number of instances.
    #[arg(long)]
    count: usize,
    /// Smallest operation duration.
    #[arg(long, default_value_t = 1)]
    lb: Dur,
    /// Largest operation duration.
    #[arg(long, default_value_t = 99)]
    ub: Dur,
    /// Master seed; instance k uses the k-th derived seed.
    #[arg(long)]
    seed: u64,
    /// Output directory.
    #[arg(long, env = "JSPLAB_OUT")]
    out: PathBuf,
}

#[derive(Args)]
struct EnumerateArgs {
    /// Directory of instance files (*.json).
    #[arg(long)]
    instances: PathBuf,
    /// Branch-and-bound node budget per instance.
    #[arg(long, default_value_t = 200_000_000)]
    budget: u64,
    /// Optimal-set member cap per instance.
    #[arg(long, default_value_t = 4_000_000)]
    members: usize,
    /// Sidecar output directory (defaults to the instance directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    CostModel,
    Rld,
    Descent,
    Tenure,
    Init,
    Structure,
}

impl Suite {
    fn name(self) -> &'static str {
        match self {
            Suite::CostModel => "cost-model",
            Suite::Rld => "rld",
            Suite::Descent => "descent",
            Suite::Tenure => "tenure",
            Suite::Init => "init",
            Suite::Structure => "structure",
        }
    }
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, value_enum)]
    suite: Suite,
    /// Directory of instances with optimal-set sidecars; the structure
    /// suite instead expects random/, workflow/, and flowshop/ inside it.
    #[arg(long)]
    instances: PathBuf,
    /// Tabu trials per instance (cost measurements).
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Master seed for the whole suite.
    #[arg(long)]
    seed: u64,
    /// Output directory for <suite>.csv and <suite>.json.
    #[arg(long, env = "JSPLAB_OUT")]
    out: PathBuf,
    /// Tenure interval lower bound.
    #[arg(long, default_value_t = SMALL_INTERVAL.0)]
    l_min: usize,
    /// Tenure interval upper bound.
    #[arg(long, default_value_t = SMALL_INTERVAL.1)]
    l_max: usize,
    /// Tenure resample period.
    #[arg(long, default_value_t = 15)]
    resample: u64,
    /// Iteration cap per tabu run.
    #[arg(long, default_value_t = 1_000_000)]
    cap: u64,
    /// Minimum accepted samples per distance (model estimation).
    #[arg(long, default_value_t = 50)]
    s_min: usize,
    /// Maximum accepted samples per distance (model estimation).
    #[arg(long, default_value_t = 250)]
    s_max: usize,
    /// Iterations between estimation samples.
    #[arg(long, default_value_t = 100)]
    sample_interval: u64,
    /// Total tabu iterations allowed per model estimation.
    #[arg(long, default_value_t = 400_000_000)]
    estimation_budget: u64,
    /// Simulations per prediction (cost-model suite).
    #[arg(long, default_value_t = 10_000)]
    sims: usize,
    /// Random local optima per landscape measurement.
    #[arg(long, default_value_t = 1_000)]
    lopt_samples: usize,
    /// Series length for the descent suite.
    #[arg(long, default_value_t = 100_000)]
    series: usize,
    /// Descents per initialization method (init suite).
    #[arg(long, default_value_t = 1_000)]
    descents: usize,
    /// Tenure intervals for the tenure suite, e.g. 6:14,10:18,14:22.
    #[arg(long, default_value = "6:14,10:18,14:22")]
    intervals: String,
    /// Synthetic-sample size for the RLD exponential test (0 = analytic).
    #[arg(long, default_value_t = 0)]
    synthetic_draws: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    init_threads(cli.threads)?;
    match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Enumerate(args) => cmd_enumerate(args),
        Command::Experiment(args) => cmd_experiment(args),
    }
}

#[cfg(feature = "parallel")]
fn init_threads(threads: usize) -> Result<()> {
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the worker pool")?;
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn init_threads(_threads: usize) -> Result<()> {
    Ok(())
}

fn cmd_generate(args: GenerateArgs) -> Result<ExitCode> {
    if args.count == 0 {
        bail!("--count must be at least 1");
    }
    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let mut files = Vec::with_capacity(args.count);
    for k in 0..args.count {
        let inst = Instance::generate(args.n, args.m, args.wf, args.lb, args.ub, derive_seed(args.seed, k as u64))?;
        let name = format!("j{}x{}w{}_{k:04}.json", args.n, args.m, args.wf);
        fs::write(args.out.join(&name), inst.to_json())
            .with_context(|| format!("writing {name}"))?;
        files.push(name);
    }
    let manifest = json!({
        "n": args.n,
        "m": args.m,
        "wf": args.wf,
        "lb": args.lb,
        "ub": args.ub,
        "seed": args.seed,
        "count": args.count,
        "files": files,
    });
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(args.out.join("manifest.json"), text)?;
    println!("wrote {} instances and manifest.json to {}", args.count, args.out.display());
    Ok(ExitCode::SUCCESS)
}

/// Instance files in `dir`, as sorted (stem, path) pairs; sidecars,
/// manifests, and reports are not instances.
fn instance_files(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut found = Vec::new();
    let entries = fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))?;
    for entry in entries {
        let path = entry?.path();
        let name = match path.file_name().and_then(|n| n.to_str()) {
            Some(name) => name,
            None => continue,
        };
        if !name.ends_with(".json")
            || name.ends_with(".opt.json")
            || name == "manifest.json"
            || name == "enumerate_report.json"
        {
            continue;
        }
        found.push((name.trim_end_matches(".json").to_owned(), path));
    }
    found.sort();
    Ok(found)
}

fn cmd_enumerate(args: EnumerateArgs) -> Result<ExitCode> {
    let out = args.out.clone().unwrap_or_else(|| args.instances.clone());
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let files = instance_files(&args.instances)?;
    if files.is_empty() {
        bail!("no instance files (*.json) in {}", args.instances.display());
    }
    let budget = ExactBudget { nodes: args.budget, members: args.members };
    let (mut solved, mut skipped, mut exceeded) = (Vec::new(), Vec::new(), Vec::new());
    for (stem, path) in files {
        let text = fs::read_to_string(&path)
            .with_context(|| format!("reading {}", path.display()))?;
        let inst = Instance::from_json(&text)
            .with_context(|| format!("parsing {}", path.display()))?;
        let sidecar = out.join(format!("{stem}.opt.json"));
        if sidecar.exists() {
            OptimalSet::load(&sidecar, &inst).with_context(|| {
                format!("existing sidecar {} does not match the instance", sidecar.display())
            })?;
            println!("{stem}: already solved, skipping");
            skipped.push(stem);
            continue;
        }
        match solve_one(&inst, budget) {
            Ok(opt) => {
                opt.save(&sidecar)?;
                println!("{stem}: c* = {}, {} optimal solutions", opt.c_star(), opt.len());
                solved.push(stem);
            }
            Err(err @ (ExactError::BudgetExceeded { .. } | ExactError::MemberCapExceeded { .. })) => {
                println!("{stem}: {err}");
                exceeded.push(stem);
            }
            Err(err) => return Err(err).with_context(|| format!("solving {stem}")),
        }
    }
    let report = json!({
        "node_budget": args.budget,
        "member_cap": args.members,
        "solved": solved,
        "skipped": skipped,
        "exceeded": exceeded,
    });
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    fs::write(out.join("enumerate_report.json"), text)?;
    if exceeded.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("{} instance(s) exceeded the budget; see enumerate_report.json", exceeded.len());
        Ok(ExitCode::FAILURE)
    }
}

fn solve_one(inst: &Instance, budget: ExactBudget) -> Result<OptimalSet, ExactError> {
    let c_star = optimal_makespan(inst, budget.nodes)?;
    enumerate_optima(inst, c_star, budget)
}

/// Loads every instance in `dir` along with its optimal-set sidecar.
fn load_set(dir: &Path) -> Result<Vec<LabInstance>> {
    let files = instance_files(dir)?;
    if files.is_empty() {
        bail!("no instance files (*.json) in {}", dir.display());
    }
    let mut set = Vec::with_capacity(files.len());
    for (stem, path) in files {
        let text = fs::read_to_string(&path)
            .with_context(|| format!("reading {}", path.display()))?;
        let inst = Instance::from_json(&text)
            .with_context(|| format!("parsing {}", path.display()))?;
        let sidecar = dir.join(format!("{stem}.opt.json"));
        if !sidecar.exists() {
            bail!(
                "instance {stem}: missing optimal-set sidecar {}; run `jsplab enumerate --instances {}` first",
                sidecar.display(),
                dir.display(),
            );
        }
        let opt = OptimalSet::load(&sidecar, &inst)
            .with_context(|| format!("loading {}", sidecar.display()))?;
        set.push(LabInstance { id: stem, inst, opt });
    }
    Ok(set)
}

/// The structure suite's class layout: one subdirectory per class.
fn load_classes(dir: &Path) -> Result<Vec<(String, Vec<LabInstance>)>> {
    let mut classes = Vec::new();
    for class in ["random", "workflow", "flowshop"] {
        let sub = dir.join(class);
        if !sub.is_dir() {
            bail!(
                "structure suite expects random/, workflow/, and flowshop/ under {} (missing {class}/)",
                dir.display(),
            );
        }
        classes.push((class.to_owned(), load_set(&sub)?));
    }
    Ok(classes)
}

fn parse_intervals(text: &str) -> Result<Vec<(usize, usize)>> {
    let mut intervals = Vec::new();
    for part in text.split(',') {
        let (lo, hi) = part
            .split_once(':')
            .with_context(|| format!("bad interval {part:?}; expected l_min:l_max"))?;
        let lo: usize = lo.trim().parse().with_context(|| format!("bad interval {part:?}"))?;
        let hi: usize = hi.trim().parse().with_context(|| format!("bad interval {part:?}"))?;
        if lo < 1 || lo > hi {
            bail!("bad interval {part:?}: need 1 <= l_min <= l_max");
        }
        intervals.push((lo, hi));
    }
    Ok(intervals)
}

fn cmd_experiment(args: ExperimentArgs) -> Result<ExitCode> {
    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let tabu = TabuConfig {
        resample_period: args.resample,
        iteration_cap: args.cap,
        ..TabuConfig::with_interval(args.l_min, args.l_max)
    };
    let est = EstimationConfig {
        s_min: args.s_min,
        s_max: args.s_max,
        sample_interval: args.sample_interval,
        iteration_budget: args.estimation_budget,
        tabu,
    };
    let art: SuiteArtifact = match args.suite {
        Suite::CostModel => cost_model_suite(
            &load_set(&args.instances)?,
            args.trials,
            args.sims,
            &est,
            args.lopt_samples,
            args.seed,
        )?,
        Suite::Rld => rld_suite(
            &load_set(&args.instances)?,
            args.trials,
            tabu,
            (args.synthetic_draws > 0).then_some(args.synthetic_draws),
            args.seed,
        )?,
        Suite::Descent => {
            descent_suite(&load_set(&args.instances)?, args.series, tabu, args.seed)?
        }
        Suite::Tenure => tenure_suite(
            &load_set(&args.instances)?,
            &parse_intervals(&args.intervals)?,
            args.trials,
            &est,
            args.lopt_samples,
            args.seed,
        )?,
        Suite::Init => init_suite(
            &load_set(&args.instances)?,
            args.trials,
            args.descents,
            tabu,
            args.seed,
        )?,
        Suite::Structure => structure_suite(
            &load_classes(&args.instances)?,
            args.trials,
            &est,
            args.lopt_samples,
            args.seed,
        )?,
    };
    let csv_path = args.out.join(format!("{}.csv", args.suite.name()));
    let json_path = args.out.join(format!("{}.json", args.suite.name()));
    fs::write(&csv_path, &art.csv)
        .with_context(|| format!("writing {}", csv_path.display()))?;
    let mut text = serde_json::to_string_pretty(&art.summary)?;
    text.push('\n');
    fs::write(&json_path, &text)
        .with_context(|| format!("writing {}", json_path.display()))?;
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    print!("{text}");
    Ok(ExitCode::SUCCESS)
}
