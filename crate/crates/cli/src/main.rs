use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::json;

use mapf_bench::{
    base_seed_from_env, export_results, parse_agent_range, parse_algorithms, render_heatmap, run_benchmark,
    scalability_sweep, write_sweep_csv, Algorithm, BenchmarkSpec, ExportFormat, HeatMapFormat,
};
use mapf_core::deadlock::{BankersState, GrantOutcome};
use mapf_core::grid::{CollisionModel, GridLayout};
use mapf_core::layouts::{
    all_reference_models, build_layout, resolve_layout, sample_tasks, save_layout, LayoutMeta, TaskSet,
    VariantParams,
};
use mapf_core::rng_from_seed;
use mapf_core::solvers::{
    joint_bfs_oracle, solve_cbs_with, solve_ma_astar_with, CbsConfig, MaAstarConfig, OracleOutcome, SolverBudget,
    DEFAULT_ORACLE_CAP, DEFAULT_WALL_MS,
};
use mapf_protocol::{bind_tcp, serve_listener, serve_stdio, SessionDefaults, DEFAULT_MAX_SESSIONS};

#[derive(Parser)]
#[command(name = "mapf", version, about = "Deadlock-capable multi-agent path finding benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan one instance with MA-A* or CBS and write the solution as JSON.
    Solve(SolveArgs),
    /// Run algorithms over seeded instances and write per-run records.
    Bench(BenchArgs),
    /// Repeat a benchmark over a range of agent counts.
    Sweep(SweepArgs),
    /// Banker's safety checks.
    #[command(subcommand)]
    Deadlock(DeadlockCommand),
    /// Exhaustive joint search for small instances.
    Oracle(OracleArgs),
    /// Serve the episode protocol over stdio or TCP.
    Serve(ServeArgs),
    /// List or export the reference layouts.
    #[command(subcommand)]
    Layouts(LayoutsCommand),
}

#[derive(Args)]
struct LayoutArgs {
    /// Reference model id (e.g. rm2.1) or layout file path.
    #[arg(long)]
    layout: String,
    #[arg(long)]
    variant: Option<String>,
    /// Directory searched for layout files by name.
    #[arg(long)]
    layout_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    layout: LayoutArgs,
    /// Agent count; defaults to the layout's shipped tasks when it has them.
    #[arg(long)]
    agents: Option<usize>,
    #[arg(long)]
    algo: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_WALL_MS)]
    budget_ms: u64,
    #[arg(long, default_value = "standard")]
    collision: CollisionModel,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    layout: LayoutArgs,
    #[arg(long)]
    episodes: usize,
    /// Comma-separated subset of ma-astar, cbs, random, external.
    #[arg(long)]
    algos: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_WALL_MS)]
    budget_ms: u64,
    #[arg(long, default_value = "standard")]
    collision: CollisionModel,
    #[arg(long, default_value_t = 100)]
    t_max: usize,
    /// Restrict policies to non-colliding actions.
    #[arg(long)]
    action_mask: bool,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Shell command for the external policy.
    #[arg(long)]
    policy_cmd: Option<String>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long)]
    agents: usize,
    /// Records file; `.json` selects JSON, anything else CSV.
    #[arg(long)]
    out: PathBuf,
    /// Heat map file, `.csv` or `.pgm`. With several algorithms one file per
    /// algorithm is written, suffixed with its name.
    #[arg(long)]
    heatmap: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Inclusive range LO..HI.
    #[arg(long)]
    agents: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum DeadlockCommand {
    /// Check a Banker's state file and optionally a request against it.
    Check {
        #[arg(long)]
        file: PathBuf,
    },
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    layout: LayoutArgs,
    #[arg(long)]
    agents: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Largest joint state space to enumerate.
    #[arg(long, default_value_t = DEFAULT_ORACLE_CAP)]
    cap: u128,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, conflicts_with = "tcp")]
    stdio: bool,
    /// Port on 127.0.0.1.
    #[arg(long)]
    tcp: Option<u16>,
    #[arg(long)]
    layout_dir: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MAX_SESSIONS)]
    max_sessions: usize,
}

#[derive(Subcommand)]
enum LayoutsCommand {
    List,
    /// Write every reference layout as a grid file plus JSON sidecar.
    Export {
        #[arg(long)]
        dir: PathBuf,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Solve(args) => solve(args),
        Command::Bench(args) => bench(args),
        Command::Sweep(args) => sweep(args),
        Command::Deadlock(DeadlockCommand::Check { file }) => deadlock_check(&file),
        Command::Oracle(args) => oracle(args),
        Command::Serve(args) => serve(args),
        Command::Layouts(LayoutsCommand::List) => {
            for id in all_reference_models() {
                println!("{}", id.name());
            }
            Ok(())
        }
        Command::Layouts(LayoutsCommand::Export { dir }) => export_layouts(&dir),
    }
}

fn seed_or_env(seed: Option<u64>) -> Result<u64> {
    match seed {
        Some(s) => Ok(s),
        None => Ok(base_seed_from_env()?),
    }
}

/// Grid plus tasks: the layout's own tasks when the agent count allows,
/// otherwise a seeded sample.
fn load_instance(layout: &LayoutArgs, agents: Option<usize>, seed: u64) -> Result<(GridLayout, TaskSet)> {
    let params = VariantParams::default();
    let built = resolve_layout(&layout.layout, layout.variant.as_deref(), &params, layout.layout_dir.as_deref())
        .with_context(|| format!("cannot load layout {:?}", layout.layout))?;
    let tasks = match (built.default_tasks, agents) {
        (Some(tasks), None) => tasks,
        (Some(tasks), Some(n)) if n == tasks.len() => tasks,
        (_, Some(n)) => sample_tasks(&built.grid, n, &mut rng_from_seed(seed))?,
        (None, None) => bail!("--agents is required for a layout without shipped tasks"),
    };
    Ok((built.grid, tasks))
}

fn solve(args: SolveArgs) -> Result<()> {
    let seed = seed_or_env(args.seed)?;
    let (grid, tasks) = load_instance(&args.layout, args.agents, seed)?;
    let budget = SolverBudget::with_wall_ms(args.budget_ms);
    let solution = match args.algo.parse::<Algorithm>()? {
        Algorithm::MaAstar => {
            let config = MaAstarConfig {
                model: args.collision,
                ..MaAstarConfig::default()
            };
            solve_ma_astar_with(&grid, &tasks, &budget, &config)?
        }
        Algorithm::Cbs => solve_cbs_with(&grid, &tasks, &budget, &CbsConfig { model: args.collision })?,
        other => bail!("{other} is not a planner; use ma-astar or cbs"),
    };
    let mut out = solution.to_json();
    out["layout"] = json!(grid.name());
    out["seed"] = json!(seed);
    out["tasks"] = serde_json::to_value(&tasks)?;
    std::fs::write(&args.out, serde_json::to_string_pretty(&out)? + "\n")
        .with_context(|| format!("cannot write {}", args.out.display()))?;
    println!(
        "{}: status={} makespan={} sum_of_costs={} expansions={} wall_ms={:.1}",
        args.algo, solution.status, solution.makespan, solution.sum_of_costs, solution.stats.expansions, solution.stats.wall_ms
    );
    Ok(())
}

fn bench_spec(run: &RunArgs, agents: usize) -> Result<BenchmarkSpec> {
    let algorithms = parse_algorithms(&run.algos)?;
    let built = resolve_layout(
        &run.layout.layout,
        run.layout.variant.as_deref(),
        &VariantParams::default(),
        run.layout.layout_dir.as_deref(),
    )
    .with_context(|| format!("cannot load layout {:?}", run.layout.layout))?;
    let mut spec = BenchmarkSpec::new(Arc::new(built.grid), agents, run.episodes, algorithms);
    spec.base_seed = seed_or_env(run.seed)?;
    spec.budget.wall_ms = run.budget_ms;
    spec.collision = run.collision;
    spec.t_max = run.t_max;
    spec.action_mask = run.action_mask;
    spec.jobs = run.jobs;
    spec.policy_cmd = run.policy_cmd.clone();
    Ok(spec)
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("heatmap");
    let name = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}-{suffix}.{ext}"),
        None => format!("{stem}-{suffix}"),
    };
    path.with_file_name(name)
}

fn bench(args: BenchArgs) -> Result<()> {
    let spec = bench_spec(&args.run, args.agents)?;
    let report = run_benchmark(&spec)?;
    export_results(&report.records, ExportFormat::from_path(&args.out), &args.out)?;
    for s in &report.summaries {
        let median = s.timesteps.as_ref().map_or("-".to_string(), |b| format!("{:.1}", b.median));
        println!(
            "{}: success {}/{} ({:.1}%), median timesteps {}, mean wall {:.1} ms, deadlocks {}",
            s.algorithm,
            s.successes,
            s.instances,
            100.0 * s.success_rate,
            median,
            s.mean_wall_ms,
            s.deadlocks
        );
    }
    if let Some(path) = &args.heatmap {
        let format = HeatMapFormat::from_path(path);
        if report.heatmaps.len() == 1 {
            render_heatmap(&report.heatmaps[0].1, format, path)?;
        } else {
            for (algorithm, map) in &report.heatmaps {
                render_heatmap(map, format, &with_suffix(path, algorithm.id()))?;
            }
        }
    }
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<()> {
    let range = parse_agent_range(&args.agents)?;
    let spec = bench_spec(&args.run, *range.start())?;
    let rows = scalability_sweep(&spec, range)?;
    write_sweep_csv(&rows, &args.out)?;
    for r in &rows {
        println!("{} agents {}: success {}/{}", r.agents, r.algorithm, r.successes, r.instances);
    }
    Ok(())
}

#[derive(Deserialize)]
struct RequestSpec {
    process: usize,
    vector: Vec<u64>,
}

#[derive(Deserialize)]
struct BankersFile {
    #[serde(flatten)]
    state: BankersState,
    #[serde(default)]
    request: Option<RequestSpec>,
}

fn deadlock_check(path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let file: BankersFile = serde_json::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))?;
    file.state.validate()?;
    let safety = file.state.is_safe()?;
    let mut out = json!({ "safe": safety.safe, "order": safety.order });
    if let Some(req) = file.request {
        out["request"] = match file.state.grant_request(req.process, &req.vector)? {
            GrantOutcome::Granted(next) => json!({ "outcome": "granted", "available": next.available }),
            GrantOutcome::DeniedUnsafe => json!({ "outcome": "denied-unsafe" }),
            GrantOutcome::DeniedInvalid(reason) => json!({ "outcome": "denied-invalid", "reason": reason }),
        };
    }
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn oracle(args: OracleArgs) -> Result<()> {
    let seed = seed_or_env(args.seed)?;
    let (grid, tasks) = load_instance(&args.layout, args.agents, seed)?;
    let out = match joint_bfs_oracle(&grid, &tasks, args.cap)? {
        OracleOutcome::Solved(opt) => json!({
            "status": "solved",
            "makespan": opt.makespan,
            "sum_of_costs": opt.sum_of_costs,
        }),
        OracleOutcome::Infeasible => json!({ "status": "infeasible" }),
    };
    println!("{out}");
    Ok(())
}

fn serve(args: ServeArgs) -> Result<()> {
    let defaults = SessionDefaults {
        layout_dir: args.layout_dir,
    };
    match args.tcp {
        Some(port) => {
            let listener = bind_tcp(("127.0.0.1", port)).with_context(|| format!("cannot bind port {port}"))?;
            eprintln!("listening on {}", listener.local_addr()?);
            serve_listener(listener, defaults, args.max_sessions)?;
        }
        None if args.stdio => serve_stdio(defaults)?,
        None => bail!("choose --stdio or --tcp PORT"),
    }
    Ok(())
}

fn export_layouts(dir: &Path) -> Result<()> {
    for id in all_reference_models() {
        let built = build_layout(id, &VariantParams::default())?;
        let meta = LayoutMeta {
            name: id.name(),
            family: Some(id.family),
            variant: Some(id.variant),
            params: VariantParams::default(),
            default_tasks: built.default_tasks,
        };
        let (grid_path, _) = save_layout(dir, &built.grid, &meta)?;
        println!("{}", grid_path.display());
    }
    Ok(())
}
