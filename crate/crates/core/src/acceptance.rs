//! The fixed acceptance suite. Every criterion has pinned seeds and sizes,
//! and the large batches are computed once and shared.

use std::cmp::Ordering;
use std::fmt;

use once_cell::sync::Lazy;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::experiment::{run_one, RunConfig, RunOptions, RunReport};
use crate::sim::{generate_scenario, DeliveryPolicy, InitTopology, Placement, ScheduleConfig, Simulation};
use crate::space::{Coord, Space};
use crate::verify::{MonitorConfig, Monitors, Oracle, ViolationKind};

pub const CONVERGENCE_NS: [usize; 7] = [1, 2, 3, 4, 8, 16, 32];
pub const CONVERGENCE_SEEDS: u64 = 100;
pub const HOP_NS: [usize; 5] = [4, 8, 16, 32, 64];
pub const HOP_SEEDS: u64 = 20;
pub const HIGHER_DIM_NS: [usize; 2] = [8, 16];
pub const HIGHER_DIM_SEEDS: u64 = 25;
pub const CLOSURE_ROUNDS: u64 = 100;
pub const ORDER_PAIRS: usize = 100_000;
pub const ORDER_TRIPLES: usize = 20_000;

const POLICIES: [DeliveryPolicy; 3] = [DeliveryPolicy::Random, DeliveryPolicy::Lifo, DeliveryPolicy::OldestLast];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:>2} {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail
        )
    }
}

/// One finished run of a batch.
#[derive(Debug, Clone)]
pub struct BatchRun {
    pub config: RunConfig,
    pub report: RunReport,
    pub first_violation: Option<String>,
    pub initial_consumed_by: Option<u64>,
}

/// The configuration used for seed `seed` of the convergence batch: the
/// initial topology cycles with the seed, the delivery policy every five
/// seeds.
pub fn batch_config(n: usize, dim: usize, seed: u64) -> RunConfig {
    let mut cfg = RunConfig::new(n, dim, seed);
    cfg.scenario.init_topology = InitTopology::ALL[(seed % 5) as usize];
    cfg.scenario.init_inflight = n;
    cfg.schedule.policy = POLICIES[((seed / 5) % 3) as usize];
    cfg.closure_rounds = CLOSURE_ROUNDS;
    cfg
}

pub fn hop_config(n: usize, seed: u64) -> RunConfig {
    let mut cfg = batch_config(n, 2, seed);
    cfg.scenario.placement = Placement::MinDist;
    cfg
}

fn run_batch(configs: Vec<RunConfig>) -> Vec<BatchRun> {
    configs
        .into_par_iter()
        .map(|config| {
            let a = run_one(&config, RunOptions::default())
                .unwrap_or_else(|e| panic!("acceptance run {config:?} failed to start: {e}"));
            BatchRun {
                report: a.report,
                first_violation: a.violations.first().map(|v| format!("{} in round {}: {}", v.kind.label(), v.round, v.details)),
                initial_consumed_by: a.initial_consumed_by,
                config,
            }
        })
        .collect()
}

/// d = 2 convergence batch.
pub static PLANE_BATCH: Lazy<Vec<BatchRun>> = Lazy::new(|| {
    let configs = CONVERGENCE_NS
        .iter()
        .flat_map(|&n| (1..=CONVERGENCE_SEEDS).map(move |s| batch_config(n, 2, s)))
        .collect();
    run_batch(configs)
});

/// Separated placements for the hop bounds.
pub static HOP_BATCH: Lazy<Vec<BatchRun>> = Lazy::new(|| {
    let configs = HOP_NS
        .iter()
        .flat_map(|&n| (1..=HOP_SEEDS).map(move |s| hop_config(n, s)))
        .collect();
    run_batch(configs)
});

/// d = 3 repetition of the convergence batch.
pub static CUBE_BATCH: Lazy<Vec<BatchRun>> = Lazy::new(|| {
    let configs = HIGHER_DIM_NS
        .iter()
        .flat_map(|&n| (1..=HIGHER_DIM_SEEDS).map(move |s| batch_config(n, 3, s)))
        .collect();
    run_batch(configs)
});

fn describe(run: &BatchRun) -> String {
    format!(
        "n={} d={} seed={} init={:?} policy={:?}",
        run.config.scenario.n,
        run.config.scenario.dimension,
        run.config.scenario.seed,
        run.config.scenario.init_topology,
        run.config.schedule.policy
    )
}

fn count(batch: &[BatchRun], kind: ViolationKind) -> usize {
    batch.iter().map(|r| r.report.violations[&kind]).sum()
}

fn first_with(batch: &[BatchRun], kind: ViolationKind) -> Option<&BatchRun> {
    batch.iter().find(|r| r.report.violations[&kind] > 0)
}

fn zero_of(id: u8, name: &'static str, batch: &[BatchRun], kinds: &[ViolationKind], extra: &str) -> CriterionResult {
    let mut failures = Vec::new();
    for &k in kinds {
        let c = count(batch, k);
        if c > 0 {
            let r = first_with(batch, k).unwrap();
            failures.push(format!(
                "{c} {} (first: {}; {})",
                k.label(),
                describe(r),
                r.first_violation.as_deref().unwrap_or("")
            ));
        }
    }
    CriterionResult {
        id,
        name,
        passed: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("{} runs, 0 violations{extra}", batch.len())
        } else {
            failures.join("; ")
        },
    }
}

fn convergence(id: u8, name: &'static str, batch: &[BatchRun]) -> CriterionResult {
    let stuck: Vec<&BatchRun> = batch.iter().filter(|r| !r.report.converged()).collect();
    let slowest = batch.iter().filter_map(|r| r.report.converged_round).max().unwrap_or(0);
    CriterionResult {
        id,
        name,
        passed: stuck.is_empty(),
        detail: match stuck.first() {
            None => format!("{} runs converged, slowest at round {slowest}", batch.len()),
            Some(r) => format!("{} of {} NON_CONVERGED (first: {})", stuck.len(), batch.len(), describe(r)),
        },
    }
}

fn closure(id: u8, batch: &[BatchRun]) -> CriterionResult {
    let short = batch
        .iter()
        .filter(|r| r.report.converged())
        .find(|r| r.report.rounds_run != r.report.converged_round.unwrap() + CLOSURE_ROUNDS);
    if let Some(r) = short {
        return CriterionResult {
            id,
            name: "closure",
            passed: false,
            detail: format!("run {} did not continue {CLOSURE_ROUNDS} rounds", describe(r)),
        };
    }
    zero_of(
        id,
        "closure",
        batch,
        &[ViolationKind::Closure],
        &format!(", {CLOSURE_ROUNDS} rounds past convergence each"),
    )
}

pub fn criterion_1() -> CriterionResult {
    convergence(1, "convergence (d=2)", &PLANE_BATCH)
}

pub fn criterion_2() -> CriterionResult {
    closure(2, &PLANE_BATCH)
}

fn searches(batch: &[BatchRun]) -> usize {
    batch.iter().map(|r| r.report.searches_completed).sum()
}

fn checks(batch: &[BatchRun]) -> u64 {
    batch.iter().map(|r| r.report.searchability_checks).sum()
}

pub fn criterion_3() -> CriterionResult {
    let mut r = zero_of(
        3,
        "geographic monotonic searchability",
        &PLANE_BATCH,
        &[ViolationKind::MonotonicGeo],
        &format!(
            ", {} searches, {} checked against an earlier success",
            searches(&PLANE_BATCH),
            checks(&PLANE_BATCH)
        ),
    );
    if checks(&PLANE_BATCH) == 0 {
        r.passed = false;
        r.detail = "no search was ever compared against an earlier success".into();
    }
    r
}

pub fn criterion_4() -> CriterionResult {
    zero_of(
        4,
        "standard monotonic searchability",
        &PLANE_BATCH,
        &[ViolationKind::MonotonicStd],
        "",
    )
}

pub fn criterion_5() -> CriterionResult {
    let batch = &*HOP_BATCH;
    let max_ratio = batch
        .iter()
        .map(|r| (r.report.max_hops, r.report.hop_bound.unwrap_or(0)))
        .max_by(|a, b| (a.0 * b.1.max(1)).cmp(&(b.0 * a.1.max(1))))
        .unwrap_or((0, 0));
    let mut r = zero_of(
        5,
        "hop bounds",
        batch,
        &[ViolationKind::DistanceBound, ViolationKind::HopBound],
        &format!(
            ", {} searches, tightest max hops {} against bound {}",
            searches(batch),
            max_ratio.0,
            max_ratio.1
        ),
    );
    // the per-hop distance bound holds in every state, so the other batches count too
    let elsewhere = count(&PLANE_BATCH, ViolationKind::DistanceBound) + count(&CUBE_BATCH, ViolationKind::DistanceBound);
    if elsewhere > 0 {
        r.passed = false;
        r.detail.push_str(&format!("; {elsewhere} DISTANCE_BOUND in the other batches"));
    }
    r
}

/// Converges a small run, then moves one node's right neighbor further
/// away and reports whether the region monitor notices.
pub fn q_monotone_negative_control() -> bool {
    let cfg = batch_config(8, 2, 3);
    let state = generate_scenario(&cfg.scenario).expect("control scenario");
    let oracle = Oracle::for_state(&state).expect("control oracle");
    let sorted = oracle.sorted().to_vec();
    let mut monitors = Monitors::new(oracle, MonitorConfig { hop_bound: None });
    monitors.start(&state);
    let mut sim = Simulation::new(state, ScheduleConfig::new(3, 8)).expect("control schedule");
    while monitors.converged_round().is_none() && sim.state().round < 1_600 {
        sim.run_round(&mut monitors);
    }
    if monitors.violation_count() > 0 || monitors.converged_round().is_none() {
        return false;
    }
    sim.state_mut().nodes.get_mut(&sorted[0]).unwrap().right = Some(sorted[2].clone());
    crate::sim::Observer::on_round_end(&mut monitors, sim.state());
    monitors.q_monotone.violations.iter().any(|v| v.kind == ViolationKind::QMonotone)
}

pub fn criterion_6() -> CriterionResult {
    let mut r = zero_of(6, "Q(v) monotonicity", &PLANE_BATCH, &[ViolationKind::QMonotone], "");
    if q_monotone_negative_control() {
        r.detail.push_str(", negative control fires");
    } else {
        r.passed = false;
        r.detail.push_str("; negative control did not fire");
    }
    r
}

pub fn criterion_7() -> CriterionResult {
    let batch = &*PLANE_BATCH;
    let mut r = zero_of(7, "connectivity", batch, &[ViolationKind::Connectivity], "");
    let late = batch.iter().find(|b| {
        b.initial_consumed_by
            .is_none_or(|round| round > b.config.schedule.delta)
    });
    if let Some(b) = late {
        r.passed = false;
        r.detail.push_str(&format!(
            "; initial messages of {} consumed only by round {:?}",
            describe(b),
            b.initial_consumed_by
        ));
    }
    let lingering = batch.iter().find(|b| b.report.lineage_in_flight > 0);
    if let Some(b) = lingering {
        r.passed = false;
        r.detail
            .push_str(&format!("; verbatim copies of initial messages still in flight in {}", describe(b)));
    }
    if r.passed {
        let longest = batch.iter().map(|b| b.report.max_lineage_hops).max().unwrap_or(0);
        r.detail.push_str(&format!(
            ", initial messages consumed within delta, longest verbatim forwarding chain {longest}"
        ));
    }
    r
}

/// Equivalence, antisymmetry and sampled transitivity of the order.
pub fn order_check(dim: usize, pairs: usize, triples: usize, seed: u64) -> Result<(), String> {
    let space = Space::new(dim, 30).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coord = |rng: &mut ChaCha8Rng| {
        // random odd mantissas; sometimes share a prefix to force deep splits
        let axes: Vec<u64> = (0..dim).map(|_| rng.gen_range(0..1u64 << 29) * 2 + 1).collect();
        Coord::new(30, &axes).unwrap()
    };
    let near = |rng: &mut ChaCha8Rng, c: &Coord| {
        let axes: Vec<u64> = c
            .axes()
            .iter()
            .map(|&m| {
                let flip = rng.gen_range(0..16u32);
                (m ^ (2u64 << flip)) | 1
            })
            .collect();
        Coord::new(30, &axes).unwrap()
    };
    for i in 0..pairs {
        let u = coord(&mut rng);
        let v = if i % 4 == 0 { near(&mut rng, &u) } else { coord(&mut rng) };
        let a = space.order(&u, &v);
        let b = space.interleave_compare(&u, &v).map_err(|e| e.to_string())?;
        if a != b {
            return Err(format!("order and interleaving disagree on {u:?}, {v:?}"));
        }
        if u != v && space.order(&v, &u) != a.reverse() {
            return Err(format!("not antisymmetric on {u:?}, {v:?}"));
        }
    }
    for _ in 0..triples {
        let u = coord(&mut rng);
        let v = near(&mut rng, &u);
        let w = near(&mut rng, &v);
        let (uv, vw, uw) = (space.order(&u, &v), space.order(&v, &w), space.order(&u, &w));
        if uv == vw && uv != Ordering::Equal && uw != uv {
            return Err(format!("not transitive on {u:?}, {v:?}, {w:?}"));
        }
    }
    Ok(())
}

pub fn criterion_8() -> CriterionResult {
    let results: Vec<(usize, Result<(), String>)> = [2usize, 3, 4]
        .into_par_iter()
        .map(|d| (d, order_check(d, ORDER_PAIRS, ORDER_TRIPLES, 8 + d as u64)))
        .collect();
    let failures: Vec<String> = results
        .iter()
        .filter_map(|(d, r)| r.as_ref().err().map(|e| format!("d={d}: {e}")))
        .collect();
    CriterionResult {
        id: 8,
        name: "ordering oracle equivalence",
        passed: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("{ORDER_PAIRS} pairs and {ORDER_TRIPLES} triples for each d in 2, 3, 4")
        } else {
            failures.join("; ")
        },
    }
}

pub fn criterion_9() -> CriterionResult {
    let batch = &*CUBE_BATCH;
    let conv = convergence(9, "d=3 generalization", batch);
    if !conv.passed {
        return conv;
    }
    let zero = zero_of(
        9,
        "d=3 generalization",
        batch,
        &[
            ViolationKind::Closure,
            ViolationKind::MonotonicGeo,
            ViolationKind::MonotonicStd,
            ViolationKind::QMonotone,
            ViolationKind::Connectivity,
            ViolationKind::DistanceBound,
        ],
        "",
    );
    if zero.passed {
        CriterionResult {
            detail: format!("{}, all converged and kept {CLOSURE_ROUNDS} closure rounds", zero.detail),
            ..zero
        }
    } else {
        zero
    }
}

/// Runs picked from every batch, repeated.
pub fn criterion_10() -> CriterionResult {
    let picks: Vec<&BatchRun> = [&*PLANE_BATCH, &*HOP_BATCH, &*CUBE_BATCH]
        .into_iter()
        .flat_map(|b| b.iter().step_by(b.len().div_ceil(4).max(1)))
        .collect();
    let mismatch = picks.par_iter().find_any(|b| {
        let again = run_one(&b.config, RunOptions::default()).expect("replay");
        again.report.trace_hash != b.report.trace_hash
            || again.report.without_timing() != b.report.without_timing()
    });
    CriterionResult {
        id: 10,
        name: "determinism",
        passed: mismatch.is_none(),
        detail: match mismatch {
            None => format!("{} replayed runs matched their trace hash", picks.len()),
            Some(b) => format!("replay of {} diverged", describe(b)),
        },
    }
}

pub fn run_all() -> Vec<CriterionResult> {
    vec![
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
        criterion_9(),
        criterion_10(),
    ]
}
