//! Seeded runs with every monitor attached, and parameter sweeps.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::sim::{
    generate_scenario, DeliveryPolicy, InitTopology, MessageCounts, Placement, ScenarioConfig, ScheduleConfig,
    SimError, Simulation, SystemState, TraceEvent,
};
use crate::verify::{hop_bound, MonitorConfig, Monitors, Oracle, Violation, ViolationKind};

pub const REPORT_SCHEMA: &str = "quadstab.report/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub schedule: ScheduleConfig,
    /// Rounds to keep running after the first legitimate state.
    pub closure_rounds: u64,
}

impl RunConfig {
    /// Scenario and schedule share `seed`; `max_rounds` is `200 * n`.
    pub fn new(n: usize, dim: usize, seed: u64) -> Self {
        RunConfig {
            scenario: ScenarioConfig::new(n, dim, seed),
            schedule: ScheduleConfig::new(seed, n),
            closure_rounds: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Converged,
    NonConverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    pub scenario: ScenarioConfig,
    pub schedule: ScheduleConfig,
    pub closure_rounds: u64,
    pub verdict: Verdict,
    pub converged_round: Option<u64>,
    pub rounds_run: u64,
    pub violations: BTreeMap<ViolationKind, usize>,
    pub searches_completed: usize,
    /// Searches checked against an earlier successful one.
    pub searchability_checks: u64,
    pub hop_histogram: BTreeMap<u32, u64>,
    pub max_hops: u32,
    pub hop_bound: Option<u32>,
    /// Messages sent per round, by kind.
    pub message_counts: Vec<MessageCounts>,
    pub initial_messages_outstanding: usize,
    pub max_lineage_hops: u32,
    pub lineage_in_flight: usize,
    pub trace_hash: String,
    pub wall_time_ms: u64,
}

impl RunReport {
    pub fn total_violations(&self) -> usize {
        self.violations.values().sum()
    }

    pub fn converged(&self) -> bool {
        self.verdict == Verdict::Converged
    }

    /// The report with the wall-time field zeroed, for comparisons.
    pub fn without_timing(&self) -> RunReport {
        RunReport {
            wall_time_ms: 0,
            ..self.clone()
        }
    }
}

/// Everything a run produced.
pub struct RunArtifacts {
    pub report: RunReport,
    pub violations: Vec<Violation>,
    pub final_state: SystemState,
    pub trace: Option<Vec<TraceEvent>>,
    /// Round by which every initial in-flight message had been delivered.
    pub initial_consumed_by: Option<u64>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub record_trace: bool,
}

pub fn run_one(cfg: &RunConfig, opts: RunOptions) -> Result<RunArtifacts, SimError> {
    let started = Instant::now();
    let state = generate_scenario(&cfg.scenario)?;
    run_state(cfg, state, opts, started)
}

/// Runs from an explicit initial state (e.g. an imported snapshot).
pub fn run_from_state(cfg: &RunConfig, state: SystemState, opts: RunOptions) -> Result<RunArtifacts, SimError> {
    run_state(cfg, state, opts, Instant::now())
}

fn run_state(cfg: &RunConfig, state: SystemState, opts: RunOptions, started: Instant) -> Result<RunArtifacts, SimError> {
    let n = state.nodes.len();
    let oracle = Oracle::for_state(&state)?;
    let bound = (cfg.scenario.placement == Placement::MinDist).then(|| hop_bound(n));
    let mut monitors = Monitors::new(oracle, MonitorConfig { hop_bound: bound });
    monitors.start(&state);
    let had_initial = state.mailboxes.values().flatten().any(|e| e.enqueued_round.is_none());

    let mut sim = Simulation::new(state, cfg.schedule.clone())?;
    if opts.record_trace {
        sim = sim.record_trace();
    }
    let mut initial_consumed_by = (!had_initial).then_some(0);
    let mut stop_at = None;
    loop {
        let round = sim.state().round;
        if stop_at.is_none() {
            if let Some(r) = monitors.converged_round() {
                stop_at = Some(r + cfg.closure_rounds);
            }
        }
        match stop_at {
            Some(end) if round >= end => break,
            None if round >= cfg.schedule.max_rounds => break,
            _ => {}
        }
        sim.run_round(&mut monitors);
        if initial_consumed_by.is_none() && sim.initial_outstanding() == 0 {
            initial_consumed_by = Some(sim.state().round);
        }
    }

    let violations = monitors.violations();
    let mut counts: BTreeMap<ViolationKind, usize> = ViolationKind::ALL.iter().map(|&k| (k, 0)).collect();
    for v in &violations {
        *counts.get_mut(&v.kind).unwrap() += 1;
    }
    let converged_round = monitors.converged_round();
    let report = RunReport {
        schema: REPORT_SCHEMA.to_string(),
        scenario: cfg.scenario.clone(),
        schedule: cfg.schedule.clone(),
        closure_rounds: cfg.closure_rounds,
        verdict: if converged_round.is_some() {
            Verdict::Converged
        } else {
            Verdict::NonConverged
        },
        converged_round,
        rounds_run: sim.state().round,
        violations: counts,
        searches_completed: monitors.search.ledger.completed(),
        searchability_checks: monitors.search.checked,
        hop_histogram: monitors.hops.histogram.clone(),
        max_hops: monitors.hops.max_hops,
        hop_bound: bound,
        message_counts: sim.sent_per_round().to_vec(),
        initial_messages_outstanding: sim.initial_outstanding(),
        max_lineage_hops: sim.max_lineage_hops(),
        lineage_in_flight: sim.lineage_in_flight(),
        trace_hash: sim.trace_hash(),
        wall_time_ms: started.elapsed().as_millis() as u64,
    };
    let trace = sim.trace().map(<[TraceEvent]>::to_vec);
    Ok(RunArtifacts {
        report,
        violations,
        final_state: sim.into_state(),
        trace,
        initial_consumed_by,
    })
}

/// Cartesian product of run parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub ns: Vec<usize>,
    pub dims: Vec<usize>,
    pub seeds: Vec<u64>,
    pub inits: Vec<InitTopology>,
    pub policies: Vec<DeliveryPolicy>,
    pub placement: Placement,
    pub bits: u8,
    pub delta: u64,
    pub searches_per_round: usize,
    /// `None` means `200 * n`.
    pub max_rounds: Option<u64>,
    /// `None` means `n` initial in-flight messages.
    pub inflight: Option<usize>,
    pub closure_rounds: u64,
}

impl SweepPlan {
    pub fn configs(&self) -> Vec<RunConfig> {
        let mut out = Vec::new();
        for &n in &self.ns {
            for &dim in &self.dims {
                for &init in &self.inits {
                    for &policy in &self.policies {
                        for &seed in &self.seeds {
                            let mut cfg = RunConfig::new(n, dim, seed);
                            cfg.scenario.bits = self.bits;
                            cfg.scenario.placement = self.placement;
                            cfg.scenario.init_topology = init;
                            cfg.scenario.init_inflight = self.inflight.unwrap_or(n);
                            cfg.schedule.policy = policy;
                            cfg.schedule.delta = self.delta;
                            cfg.schedule.searches_per_round = self.searches_per_round;
                            if let Some(m) = self.max_rounds {
                                cfg.schedule.max_rounds = m;
                            }
                            cfg.closure_rounds = self.closure_rounds;
                            out.push(cfg);
                        }
                    }
                }
            }
        }
        out
    }
}

/// Runs every config in parallel; results keep the input order.
pub fn run_many(configs: &[RunConfig]) -> Vec<Result<RunReport, String>> {
    configs
        .par_iter()
        .map(|cfg| {
            run_one(cfg, RunOptions::default())
                .map(|a| a.report)
                .map_err(|e| e.to_string())
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct CsvRow<'a> {
    n: usize,
    dim: usize,
    seed: u64,
    init: &'a str,
    policy: &'a str,
    placement: &'a str,
    verdict: &'a str,
    converged_round: Option<u64>,
    rounds_run: u64,
    max_hops: u32,
    searches: usize,
    violations: usize,
    trace_hash: &'a str,
}

fn kebab<T: Serialize>(value: &T) -> String {
    serde_json::to_value(value)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

pub fn write_sweep_csv<W: Write>(reports: &[RunReport], sink: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(sink);
    for r in reports {
        let (init, policy, placement) = (
            kebab(&r.scenario.init_topology),
            kebab(&r.schedule.policy),
            kebab(&r.scenario.placement),
        );
        w.serialize(CsvRow {
            n: r.scenario.node_count(),
            dim: r.scenario.dimension,
            seed: r.scenario.seed,
            init: &init,
            policy: &policy,
            placement: &placement,
            verdict: if r.converged() { "CONVERGED" } else { "NON_CONVERGED" },
            converged_round: r.converged_round,
            rounds_run: r.rounds_run,
            max_hops: r.max_hops,
            searches: r.searches_completed,
            violations: r.total_violations(),
            trace_hash: &r.trace_hash,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Per (n, dim) aggregate of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub n: usize,
    pub dim: usize,
    pub runs: usize,
    pub converged: usize,
    pub max_converged_round: Option<u64>,
    pub mean_converged_round: Option<f64>,
    pub max_hops: u32,
    pub violations: usize,
}

pub fn summarize(reports: &[RunReport]) -> Vec<SweepSummary> {
    let mut groups: BTreeMap<(usize, usize), Vec<&RunReport>> = BTreeMap::new();
    for r in reports {
        groups
            .entry((r.scenario.node_count(), r.scenario.dimension))
            .or_default()
            .push(r);
    }
    groups
        .into_iter()
        .map(|((n, dim), rs)| {
            let rounds: Vec<u64> = rs.iter().filter_map(|r| r.converged_round).collect();
            SweepSummary {
                n,
                dim,
                runs: rs.len(),
                converged: rounds.len(),
                max_converged_round: rounds.iter().copied().max(),
                mean_converged_round: (!rounds.is_empty())
                    .then(|| rounds.iter().sum::<u64>() as f64 / rounds.len() as f64),
                max_hops: rs.iter().map(|r| r.max_hops).max().unwrap_or(0),
                violations: rs.iter().map(|r| r.total_violations()).sum(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_node_converges_at_round_zero() {
        let cfg = RunConfig::new(1, 2, 1);
        let a = run_one(&cfg, RunOptions::default()).unwrap();
        assert_eq!(a.report.converged_round, Some(0));
        assert_eq!(a.report.total_violations(), 0);
    }

    #[test]
    fn small_run_converges_cleanly() {
        let mut cfg = RunConfig::new(8, 2, 1);
        cfg.scenario.init_inflight = 8;
        cfg.closure_rounds = 20;
        let a = run_one(&cfg, RunOptions::default()).unwrap();
        assert!(a.report.converged(), "{:?}", a.report);
        assert_eq!(a.report.total_violations(), 0, "{:?}", a.violations);
        assert_eq!(a.report.rounds_run, a.report.converged_round.unwrap() + 20);
        assert_eq!(a.report.initial_messages_outstanding, 0);
        assert!(a.initial_consumed_by.unwrap() <= cfg.schedule.delta);
    }

    #[test]
    fn reports_are_reproducible() {
        let mut cfg = RunConfig::new(6, 2, 5);
        cfg.scenario.init_topology = InitTopology::Star;
        let a = run_one(&cfg, RunOptions::default()).unwrap().report;
        let b = run_one(&cfg, RunOptions::default()).unwrap().report;
        assert_eq!(
            serde_json::to_string(&a.without_timing()).unwrap(),
            serde_json::to_string(&b.without_timing()).unwrap()
        );
    }

    #[test]
    fn empty_sweep_is_empty() {
        let plan = SweepPlan {
            ns: vec![4],
            dims: vec![2],
            seeds: vec![],
            inits: vec![InitTopology::Line],
            policies: vec![DeliveryPolicy::Random],
            placement: Placement::Uniform,
            bits: 30,
            delta: 3,
            searches_per_round: 2,
            max_rounds: None,
            inflight: None,
            closure_rounds: 0,
        };
        assert!(plan.configs().is_empty());
        let mut buf = Vec::new();
        write_sweep_csv(&[], &mut buf).unwrap();
        assert!(buf.is_empty());
    }
}
