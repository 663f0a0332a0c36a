use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{Oracle, Violation, ViolationKind};
use crate::protocol::{SearchOutcome, SearchRequest};
use crate::sim::{EventKind, Observer, SystemState, TraceEvent};
use crate::space::{distance_sq_units, Coord, Region, Space};

/// `4 * ceil(log2 n) + 2`.
pub fn hop_bound(n: usize) -> u32 {
    let log = if n <= 1 { 0 } else { usize::BITS - (n - 1).leading_zeros() };
    4 * log + 2
}

/// Squared diameter, in units of `2^-2bits`, of any region at depth `k`.
/// `None` past the maximum depth.
pub fn depth_diameter_sq_units(space: &Space, k: usize) -> Option<u128> {
    if k > space.max_depth() {
        return None;
    }
    let d = space.dim();
    let bits = space.bits() as usize;
    Some(
        (0..d)
            .map(|axis| {
                let cuts = (k + d - 1 - axis) / d;
                1u128 << (2 * (bits - cuts))
            })
            .sum(),
    )
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LedgerEntry {
    pub request_id: u64,
    pub initiated_step: u64,
    pub terminated_step: u64,
    pub round: u64,
    pub result: Coord,
    pub hops: u32,
    pub trail: Vec<Coord>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeyHistory {
    /// Answer in every legitimate state, `None` for an empty leaf.
    pub oracle: Option<Coord>,
    /// The target is the position of an existing node.
    pub node_target: bool,
    pub entries: Vec<LedgerEntry>,
    /// Termination step of the first search that returned the oracle answer.
    pub first_success: Option<u64>,
    /// For empty-leaf keys: the first result of a search started after
    /// legitimacy was reached.
    pub settled: Option<Coord>,
}

/// Append-only per-(initiator, target) history of finished searches.
#[derive(Debug, Clone, Default)]
pub struct SearchLedger {
    pub keys: BTreeMap<(Coord, Coord), KeyHistory>,
    started: HashMap<u64, u64>,
}

impl SearchLedger {
    pub fn record_start(&mut self, req: &SearchRequest, step: u64) {
        self.started.insert(req.request_id, step);
    }

    pub fn initiated_step(&self, request_id: u64) -> Option<u64> {
        self.started.get(&request_id).copied()
    }

    pub fn completed(&self) -> usize {
        self.keys.values().map(|k| k.entries.len()).sum()
    }
}

/// Geographic and standard monotonic searchability.
#[derive(Debug, Clone)]
pub struct SearchMonitor {
    pub ledger: SearchLedger,
    pub violations: Vec<Violation>,
    /// Step at which legitimacy was first observed.
    pub legitimate_since: Option<u64>,
    /// Searches compared against an earlier success.
    pub checked: u64,
}

impl SearchMonitor {
    pub fn new() -> Self {
        SearchMonitor {
            ledger: SearchLedger::default(),
            violations: Vec::new(),
            legitimate_since: None,
            checked: 0,
        }
    }

    pub fn on_start(&mut self, req: &SearchRequest, step: u64) {
        self.ledger.record_start(req, step);
    }

    pub fn on_end(&mut self, oracle: &Oracle, outcome: &SearchOutcome, step: u64, round: u64) {
        let initiated = self
            .ledger
            .initiated_step(outcome.request_id)
            .expect("every finished search was started");
        let key = (outcome.initiator.clone(), outcome.target.clone());
        let hist = self.ledger.keys.entry(key).or_insert_with(|| KeyHistory {
            oracle: oracle.search_answer(&outcome.target).cloned(),
            node_target: oracle.target(&outcome.target).is_some(),
            ..KeyHistory::default()
        });
        match &hist.oracle {
            Some(answer) => {
                if let Some(t) = hist.first_success {
                    if initiated > t {
                        self.checked += 1;
                    }
                    if initiated > t && outcome.result != *answer {
                        let kind = if hist.node_target {
                            ViolationKind::MonotonicStd
                        } else {
                            ViolationKind::MonotonicGeo
                        };
                        self.violations.push(Violation::new(
                            kind,
                            round,
                            format!(
                                "search #{} from {} for {} returned {} after {} was returned at step {t}",
                                outcome.request_id, outcome.initiator, outcome.target, outcome.result, answer
                            ),
                        ));
                    }
                }
                if outcome.result == *answer && hist.first_success.is_none() {
                    hist.first_success = Some(step);
                }
            }
            None => {
                if self.legitimate_since.is_some_and(|t| initiated > t) {
                    if hist.settled.is_some() {
                        self.checked += 1;
                    }
                    match &hist.settled {
                        None => hist.settled = Some(outcome.result.clone()),
                        Some(prev) if *prev != outcome.result => {
                            self.violations.push(Violation::new(
                                ViolationKind::MonotonicGeo,
                                round,
                                format!(
                                    "search #{} from {} for empty-leaf target {} returned {} after {} in a legitimate state",
                                    outcome.request_id, outcome.initiator, outcome.target, outcome.result, prev
                                ),
                            ));
                        }
                        Some(_) => {}
                    }
                }
            }
        }
        hist.entries.push(LedgerEntry {
            request_id: outcome.request_id,
            initiated_step: initiated,
            terminated_step: step,
            round,
            result: outcome.result.clone(),
            hops: outcome.hops,
            trail: outcome.trail.clone(),
        });
    }
}

impl Default for SearchMonitor {
    fn default() -> Self {
        Self::new()
    }
}

/// Quad regions of a node never disappear once it has acted.
#[derive(Debug, Clone, Default)]
pub struct QMonotoneMonitor {
    acted: BTreeSet<Coord>,
    views: BTreeMap<Coord, Vec<Region>>,
    pub violations: Vec<Violation>,
}

impl QMonotoneMonitor {
    pub fn on_event(&mut self, event: &TraceEvent) {
        if matches!(event.kind, EventKind::Timeout | EventKind::Deliver) {
            self.acted.insert(event.node.clone());
        }
    }

    pub fn on_round_end(&mut self, state: &SystemState) {
        for c in &self.acted {
            let v = &state.nodes[c];
            let quads = match state.space.compute_regions(c, v.left.as_ref(), v.right.as_ref()) {
                Ok(view) => view.quads,
                Err(e) => {
                    self.violations.push(Violation::new(
                        ViolationKind::QMonotone,
                        state.round,
                        format!("node {c}: list neighbors out of order after acting ({e})"),
                    ));
                    continue;
                }
            };
            if let Some(old) = self.views.get(c) {
                let lost: Vec<String> = old
                    .iter()
                    .filter(|r| !quads.contains(r))
                    .map(|r| state.space.path_string(r))
                    .collect();
                if !lost.is_empty() {
                    self.violations.push(Violation::new(
                        ViolationKind::QMonotone,
                        state.round,
                        format!("node {c} lost quad regions {}", lost.join(", ")),
                    ));
                }
            }
            self.views.insert(c.clone(), quads);
        }
    }
}

/// Weak connectivity of explicit plus implicit edges.
#[derive(Debug, Clone, Default)]
pub struct ConnectivityMonitor {
    pub violations: Vec<Violation>,
}

impl ConnectivityMonitor {
    pub fn check(&mut self, state: &SystemState) {
        let parts = state.components();
        if parts > 1 {
            self.violations.push(Violation::new(
                ViolationKind::Connectivity,
                state.round,
                format!("{parts} weakly connected components"),
            ));
        }
    }
}

/// Per-hop distance bound and the logarithmic hop bound.
#[derive(Debug, Clone)]
pub struct HopMonitor {
    space: Space,
    bound: Option<u32>,
    pub histogram: BTreeMap<u32, u64>,
    pub max_hops: u32,
    pub violations: Vec<Violation>,
}

impl HopMonitor {
    pub fn new(space: Space, bound: Option<u32>) -> Self {
        HopMonitor {
            space,
            bound,
            histogram: BTreeMap::new(),
            max_hops: 0,
            violations: Vec::new(),
        }
    }

    pub fn on_end(&mut self, outcome: &SearchOutcome, round: u64) {
        *self.histogram.entry(outcome.hops).or_default() += 1;
        self.max_hops = self.max_hops.max(outcome.hops);
        if let Some(b) = self.bound {
            if outcome.hops > b {
                self.violations.push(Violation::new(
                    ViolationKind::HopBound,
                    round,
                    format!(
                        "search #{} for {} took {} hops, bound {b}",
                        outcome.request_id, outcome.target, outcome.hops
                    ),
                ));
            }
        }
        for (k, at) in outcome.trail.iter().enumerate().skip(1) {
            let dist = distance_sq_units(at, &outcome.target);
            let ok = depth_diameter_sq_units(&self.space, k).is_some_and(|limit| dist <= limit);
            if !ok {
                self.violations.push(Violation::new(
                    ViolationKind::DistanceBound,
                    round,
                    format!(
                        "search #{} at hop {k}: node {at} is too far from target {}",
                        outcome.request_id, outcome.target
                    ),
                ));
            }
        }
    }
}

type Edges = (Option<Coord>, Option<Coord>, Vec<Coord>);

/// Detects the first legitimate state and afterwards any change of a
/// node's list or quad variables.
#[derive(Debug, Clone, Default)]
pub struct ClosureMonitor {
    pub legitimate_round: Option<u64>,
    pub legitimate_step: Option<u64>,
    frozen: Option<BTreeMap<Coord, Edges>>,
    pub violations: Vec<Violation>,
}

impl ClosureMonitor {
    pub fn check(&mut self, oracle: &Oracle, state: &SystemState) {
        match &self.frozen {
            None => {
                if oracle.is_legitimate(state) {
                    self.legitimate_round = Some(state.round);
                    self.legitimate_step = Some(state.step);
                    self.frozen = Some(
                        state
                            .nodes
                            .iter()
                            .map(|(c, v)| (c.clone(), (v.left.clone(), v.right.clone(), v.quad.clone())))
                            .collect(),
                    );
                }
            }
            Some(frozen) => {
                for (c, v) in &state.nodes {
                    let (l, r, q) = &frozen[c];
                    if v.left != *l || v.right != *r || v.quad != *q {
                        self.violations.push(Violation::new(
                            ViolationKind::Closure,
                            state.round,
                            format!("node {c} changed its edges after legitimacy"),
                        ));
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonitorConfig {
    /// Terminal hop bound, applied when placements are separated.
    pub hop_bound: Option<u32>,
}

/// All monitors behind one [`Observer`].
pub struct Monitors {
    pub oracle: Oracle,
    pub search: SearchMonitor,
    pub q_monotone: QMonotoneMonitor,
    pub connectivity: ConnectivityMonitor,
    pub hops: HopMonitor,
    pub closure: ClosureMonitor,
}

impl Monitors {
    pub fn new(oracle: Oracle, cfg: MonitorConfig) -> Self {
        let space = oracle.space().clone();
        Monitors {
            oracle,
            search: SearchMonitor::new(),
            q_monotone: QMonotoneMonitor::default(),
            connectivity: ConnectivityMonitor::default(),
            hops: HopMonitor::new(space, cfg.hop_bound),
            closure: ClosureMonitor::default(),
        }
    }

    /// Checks the initial state; call once before the first step.
    pub fn start(&mut self, state: &SystemState) {
        self.connectivity.check(state);
        self.closure_check(state);
    }

    fn closure_check(&mut self, state: &SystemState) {
        self.closure.check(&self.oracle, state);
        self.search.legitimate_since = self.closure.legitimate_step;
    }

    pub fn converged_round(&self) -> Option<u64> {
        self.closure.legitimate_round
    }

    /// Everything reported so far, ordered by round.
    pub fn violations(&self) -> Vec<Violation> {
        let mut all: Vec<Violation> = [
            &self.search.violations,
            &self.q_monotone.violations,
            &self.connectivity.violations,
            &self.hops.violations,
            &self.closure.violations,
        ]
        .into_iter()
        .flatten()
        .cloned()
        .collect();
        all.sort_by_key(|v| v.round);
        all
    }

    pub fn violation_count(&self) -> usize {
        self.search.violations.len()
            + self.q_monotone.violations.len()
            + self.connectivity.violations.len()
            + self.hops.violations.len()
            + self.closure.violations.len()
    }
}

impl Observer for Monitors {
    fn on_event(&mut self, _state: &SystemState, event: &TraceEvent) {
        self.q_monotone.on_event(event);
    }

    fn on_search_start(&mut self, req: &SearchRequest, step: u64, _round: u64) {
        self.search.on_start(req, step);
    }

    fn on_search_end(&mut self, outcome: &SearchOutcome, step: u64, round: u64) {
        self.search.on_end(&self.oracle, outcome, step, round);
        self.hops.on_end(outcome, round);
    }

    fn on_round_end(&mut self, state: &SystemState) {
        self.q_monotone.on_round_end(state);
        self.connectivity.check(state);
        self.closure_check(state);
    }
}
