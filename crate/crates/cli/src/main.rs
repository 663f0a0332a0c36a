use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use quadstab::acceptance;
use quadstab::experiment::{run_many, run_one, summarize, write_sweep_csv, RunConfig, RunOptions, RunReport, SweepPlan};
use quadstab::sim::{
    export_dot, export_snapshot, write_trace, DeliveryPolicy, InitTopology, Placement, ScenarioConfig, ScheduleConfig,
};
use quadstab::verify::write_violations;

const EXIT_CONFIG: u8 = 2;
const EXIT_VIOLATION: u8 = 3;
const EXIT_NON_CONVERGED: u8 = 4;

#[derive(Parser)]
#[command(name = "quadstab", version, about = "Simulate and check the self-stabilizing quadtree overlay")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One seeded run with all monitors attached.
    Run(RunArgs),
    /// Cartesian product of configurations, run in parallel.
    Sweep(SweepArgs),
    /// The fixed acceptance suite.
    Check(CheckArgs),
}

fn placement(s: &str) -> Result<Placement, String> {
    match s {
        "uniform" => Ok(Placement::Uniform),
        "min-dist" => Ok(Placement::MinDist),
        _ => Err(format!("unknown placement {s:?} (uniform, min-dist)")),
    }
}

fn topology(s: &str) -> Result<InitTopology, String> {
    match s {
        "list-random" => Ok(InitTopology::ListRandom),
        "quad-only" => Ok(InitTopology::QuadOnly),
        "line" => Ok(InitTopology::Line),
        "star" => Ok(InitTopology::Star),
        "mixed" => Ok(InitTopology::Mixed),
        _ => Err(format!("unknown topology {s:?} (list-random, quad-only, line, star, mixed)")),
    }
}

fn policy(s: &str) -> Result<DeliveryPolicy, String> {
    match s {
        "random" => Ok(DeliveryPolicy::Random),
        "lifo" => Ok(DeliveryPolicy::Lifo),
        "oldest-last" => Ok(DeliveryPolicy::OldestLast),
        _ => Err(format!("unknown policy {s:?} (random, lifo, oldest-last)")),
    }
}

#[derive(Debug, Clone)]
struct Numbers(Vec<u64>);

#[derive(Debug, Clone)]
struct Topologies(Vec<InitTopology>);

#[derive(Debug, Clone)]
struct Policies(Vec<DeliveryPolicy>);

fn numbers(s: &str) -> Result<Numbers, String> {
    number_list(s).map(Numbers)
}

/// Comma-separated values and inclusive `a..b` ranges; empty means none.
fn number_list(s: &str) -> Result<Vec<u64>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: u64 = a.trim().parse().map_err(|e| format!("{part}: {e}"))?;
            let b: u64 = b.trim().parse().map_err(|e| format!("{part}: {e}"))?;
            if a > b {
                return Err(format!("empty range {part}"));
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|e| format!("{part}: {e}"))?);
        }
    }
    Ok(out)
}

fn list_of<T>(s: &str, item: fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    s.split(',').map(str::trim).filter(|p| !p.is_empty()).map(item).collect()
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (JSON); replaces the scenario flags.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 30)]
    bits: u8,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "uniform", value_parser = placement)]
    placement: Placement,
    #[arg(long = "init", default_value = "list-random", value_parser = topology)]
    init: InitTopology,
    /// Initial in-flight LINEARIZE/QLINEARIZE messages.
    #[arg(long, default_value_t = 0)]
    inflight: usize,
    /// Schedule seed, defaults to the scenario seed.
    #[arg(long)]
    schedule_seed: Option<u64>,
    #[arg(long, default_value_t = 3)]
    delta: u64,
    #[arg(long, default_value = "random", value_parser = policy)]
    policy: DeliveryPolicy,
    #[arg(long, default_value_t = 2)]
    searches_per_round: usize,
    /// Defaults to 200 * n.
    #[arg(long)]
    max_rounds: Option<u64>,
    /// Rounds to continue after the first legitimate state.
    #[arg(long, default_value_t = 0)]
    closure_rounds: u64,
    /// Report JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Graphviz rendering of the final explicit edges.
    #[arg(long)]
    dot: Option<PathBuf>,
    /// JSON-lines trace.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Final state snapshot (JSON).
    #[arg(long)]
    snapshot: Option<PathBuf>,
    /// Violations as JSON-lines.
    #[arg(long)]
    violations: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Node counts, e.g. `2..32` or `4,8,16`.
    #[arg(long, default_value = "2..32", value_parser = numbers)]
    n: Numbers,
    #[arg(long, default_value = "2", value_parser = numbers)]
    dims: Numbers,
    #[arg(long, default_value = "1..10", value_parser = numbers)]
    seeds: Numbers,
    #[arg(long, default_value = "list-random,quad-only,line,star,mixed", value_parser = |s: &str| list_of(s, topology).map(Topologies))]
    inits: Topologies,
    #[arg(long, default_value = "random", value_parser = |s: &str| list_of(s, policy).map(Policies))]
    policies: Policies,
    #[arg(long, default_value = "uniform", value_parser = placement)]
    placement: Placement,
    #[arg(long, default_value_t = 30)]
    bits: u8,
    #[arg(long, default_value_t = 3)]
    delta: u64,
    #[arg(long, default_value_t = 2)]
    searches_per_round: usize,
    /// Defaults to 200 * n.
    #[arg(long)]
    max_rounds: Option<u64>,
    /// Defaults to n.
    #[arg(long)]
    inflight: Option<usize>,
    #[arg(long, default_value_t = 0)]
    closure_rounds: u64,
    /// Per-run CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    /// Run only these criteria, e.g. `1,8`.
    #[arg(long, value_parser = numbers)]
    only: Option<Numbers>,
}

fn create(path: &Path) -> Result<BufWriter<File>, String> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn config_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_CONFIG)
}

fn run_config(args: &RunArgs) -> Result<RunConfig, String> {
    let scenario = match &args.scenario {
        Some(path) => {
            let file = File::open(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            serde_json::from_reader::<_, ScenarioConfig>(std::io::BufReader::new(file))
                .map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => ScenarioConfig {
            bits: args.bits,
            placement: args.placement,
            init_topology: args.init,
            init_inflight: args.inflight,
            ..ScenarioConfig::new(args.n, args.dim, args.seed)
        },
    };
    let n = scenario.node_count();
    let mut schedule = ScheduleConfig::new(args.schedule_seed.unwrap_or(scenario.seed), n);
    schedule.delta = args.delta;
    schedule.policy = args.policy;
    schedule.searches_per_round = args.searches_per_round;
    if let Some(m) = args.max_rounds {
        schedule.max_rounds = m;
    }
    schedule.validate().map_err(|e| e.to_string())?;
    Ok(RunConfig {
        scenario,
        schedule,
        closure_rounds: args.closure_rounds,
    })
}

fn print_summary(r: &RunReport) {
    match r.converged_round {
        Some(round) => println!("converged in round {round} ({} rounds run)", r.rounds_run),
        None => println!("NON_CONVERGED after {} rounds", r.rounds_run),
    }
    println!(
        "searches: {} completed, max hops {}{}",
        r.searches_completed,
        r.max_hops,
        r.hop_bound.map(|b| format!(" (bound {b})")).unwrap_or_default()
    );
    let sent: u64 = r.message_counts.iter().map(|c| c.total()).sum();
    println!("messages sent: {sent}");
    if r.total_violations() == 0 {
        println!("violations: none");
    } else {
        for (k, c) in r.violations.iter().filter(|(_, &c)| c > 0) {
            println!("violations: {c} {}", k.label());
        }
    }
    println!("trace hash: {}", r.trace_hash);
}

fn cmd_run(args: RunArgs) -> ExitCode {
    let cfg = match run_config(&args) {
        Ok(c) => c,
        Err(e) => return config_error(e),
    };
    let opts = RunOptions {
        record_trace: args.trace.is_some(),
    };
    let artifacts = match run_one(&cfg, opts) {
        Ok(a) => a,
        Err(e) => return config_error(e),
    };
    let report = &artifacts.report;
    let written = (|| -> Result<(), String> {
        if let Some(path) = &args.out {
            let mut w = create(path)?;
            serde_json::to_writer_pretty(&mut w, report).map_err(|e| e.to_string())?;
            writeln!(w).and_then(|_| w.flush()).map_err(|e| e.to_string())?;
        }
        if let Some(path) = &args.trace {
            write_trace(artifacts.trace.as_deref().unwrap_or(&[]), create(path)?).map_err(|e| e.to_string())?;
        }
        if let Some(path) = &args.dot {
            create(path)?
                .write_all(export_dot(&artifacts.final_state).as_bytes())
                .map_err(|e| e.to_string())?;
        }
        if let Some(path) = &args.snapshot {
            let mut w = create(path)?;
            serde_json::to_writer_pretty(&mut w, &export_snapshot(&artifacts.final_state))
                .map_err(|e| e.to_string())?;
            w.flush().map_err(|e| e.to_string())?;
        }
        if let Some(path) = &args.violations {
            write_violations(&artifacts.violations, create(path)?).map_err(|e| e.to_string())?;
        }
        Ok(())
    })();
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::FAILURE;
    }
    print_summary(report);
    if report.total_violations() > 0 {
        if let Some(v) = artifacts.violations.first() {
            eprintln!("first violation: {} in round {}: {}", v.kind.label(), v.round, v.details);
        }
        ExitCode::from(EXIT_VIOLATION)
    } else if !report.converged() {
        ExitCode::from(EXIT_NON_CONVERGED)
    } else {
        ExitCode::SUCCESS
    }
}

fn cmd_sweep(args: SweepArgs) -> ExitCode {
    let plan = SweepPlan {
        ns: args.n.0.iter().map(|&n| n as usize).collect(),
        dims: args.dims.0.iter().map(|&d| d as usize).collect(),
        seeds: args.seeds.0,
        inits: args.inits.0,
        policies: args.policies.0,
        placement: args.placement,
        bits: args.bits,
        delta: args.delta,
        searches_per_round: args.searches_per_round,
        max_rounds: args.max_rounds,
        inflight: args.inflight,
        closure_rounds: args.closure_rounds,
    };
    let configs = plan.configs();
    let results = run_many(&configs);
    let mut reports = Vec::with_capacity(results.len());
    for (cfg, r) in configs.iter().zip(results) {
        match r {
            Ok(rep) => reports.push(rep),
            Err(e) => {
                return config_error(format!(
                    "n={} d={} seed={}: {e}",
                    cfg.scenario.n, cfg.scenario.dimension, cfg.scenario.seed
                ))
            }
        }
    }
    if let Some(path) = &args.out {
        let written = create(path).and_then(|w| write_sweep_csv(&reports, w).map_err(|e| e.to_string()));
        if let Err(e) = written {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    println!("{:>5} {:>3} {:>6} {:>9} {:>11} {:>12} {:>8} {:>10}", "n", "d", "runs", "converged", "max round", "mean round", "max hops", "violations");
    for s in summarize(&reports) {
        println!(
            "{:>5} {:>3} {:>6} {:>9} {:>11} {:>12} {:>8} {:>10}",
            s.n,
            s.dim,
            s.runs,
            s.converged,
            s.max_converged_round.map_or("-".into(), |r| r.to_string()),
            s.mean_converged_round.map_or("-".into(), |r| format!("{r:.1}")),
            s.max_hops,
            s.violations
        );
    }
    let describe = |r: &RunReport| {
        format!(
            "n={} d={} seed={} init={:?} policy={:?}",
            r.scenario.n, r.scenario.dimension, r.scenario.seed, r.scenario.init_topology, r.schedule.policy
        )
    };
    if let Some(bad) = reports.iter().find(|r| r.total_violations() > 0) {
        eprintln!("violations in run {}", describe(bad));
        return ExitCode::from(EXIT_VIOLATION);
    }
    if let Some(stuck) = reports.iter().find(|r| !r.converged()) {
        eprintln!("run {} did not converge", describe(stuck));
        return ExitCode::from(EXIT_NON_CONVERGED);
    }
    ExitCode::SUCCESS
}

fn cmd_check(args: CheckArgs) -> ExitCode {
    let criteria: [fn() -> acceptance::CriterionResult; 10] = [
        acceptance::criterion_1,
        acceptance::criterion_2,
        acceptance::criterion_3,
        acceptance::criterion_4,
        acceptance::criterion_5,
        acceptance::criterion_6,
        acceptance::criterion_7,
        acceptance::criterion_8,
        acceptance::criterion_9,
        acceptance::criterion_10,
    ];
    let mut failed = 0;
    for (i, criterion) in criteria.iter().enumerate() {
        let id = i as u64 + 1;
        if args.only.as_ref().is_some_and(|only| !only.0.contains(&id)) {
            continue;
        }
        let r = criterion();
        println!("{r}");
        if !r.passed {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::from(EXIT_VIOLATION)
    } else {
        ExitCode::SUCCESS
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Check(a) => cmd_check(a),
    }
}
