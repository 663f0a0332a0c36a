use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Lineage, SimError, SystemState};
use crate::protocol::Message;
use crate::space::{distance_sq_units, Coord, Region, Space};

pub const SCENARIO_SCHEMA: &str = "quadstab.scenario/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    Uniform,
    /// Pairwise Euclidean distance at least `1/n`.
    MinDist,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitTopology {
    ListRandom,
    QuadOnly,
    Line,
    Star,
    Mixed,
}

impl InitTopology {
    pub const ALL: [InitTopology; 5] = [
        InitTopology::ListRandom,
        InitTopology::QuadOnly,
        InitTopology::Line,
        InitTopology::Star,
        InitTopology::Mixed,
    ];
}

fn default_schema() -> String {
    SCENARIO_SCHEMA.to_string()
}

fn default_bits() -> u8 {
    30
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    #[serde(default = "default_schema")]
    pub schema: String,
    #[serde(default)]
    pub n: usize,
    pub dimension: usize,
    #[serde(default = "default_bits")]
    pub bits: u8,
    pub seed: u64,
    /// Explicit positions; overrides `n` and `placement` when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<Vec<Coord>>,
    pub placement: Placement,
    pub init_topology: InitTopology,
    #[serde(default)]
    pub init_inflight: usize,
}

impl ScenarioConfig {
    pub fn new(n: usize, dimension: usize, seed: u64) -> Self {
        ScenarioConfig {
            schema: default_schema(),
            n,
            dimension,
            bits: default_bits(),
            seed,
            nodes: None,
            placement: Placement::Uniform,
            init_topology: InitTopology::ListRandom,
            init_inflight: 0,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.as_ref().map_or(self.n, Vec::len)
    }
}

/// Builds the initial system state: positions, (possibly inconsistent)
/// variables and corrupted in-flight messages, all referring to existing
/// nodes and weakly connected.
pub fn generate_scenario(cfg: &ScenarioConfig) -> Result<SystemState, SimError> {
    if cfg.schema != SCENARIO_SCHEMA {
        return Err(SimError::Config(format!("unsupported scenario schema {:?}", cfg.schema)));
    }
    let space = Space::new(cfg.dimension, cfg.bits)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let coords = match &cfg.nodes {
        Some(nodes) => {
            for c in nodes {
                space.check_coord(c)?;
            }
            let mut sorted = nodes.clone();
            sorted.sort();
            sorted.dedup();
            if sorted.len() != nodes.len() {
                return Err(SimError::Config("duplicate node coordinates".into()));
            }
            nodes.clone()
        }
        None => place(&space, cfg.n, cfg.placement, &mut rng)?,
    };
    if coords.is_empty() {
        return Err(SimError::Config("a scenario needs at least one node".into()));
    }
    let mut state = SystemState::new(space, coords.iter().cloned());
    wire_topology(&mut state, cfg.init_topology, &mut rng);
    add_inflight(&mut state, cfg.init_inflight, &mut rng);
    if !state.weakly_connected() {
        return Err(SimError::Disconnected);
    }
    Ok(state)
}

fn place(space: &Space, n: usize, placement: Placement, rng: &mut ChaCha8Rng) -> Result<Vec<Coord>, SimError> {
    let capacity = 1u128 << ((space.bits() as usize - 1) * space.dim()).min(127);
    if (n as u128) > capacity {
        return Err(SimError::Placement(format!("{n} nodes do not fit at {space}")));
    }
    match placement {
        Placement::Uniform => {
            let mut seen = std::collections::BTreeSet::new();
            let mut out = Vec::with_capacity(n);
            while out.len() < n {
                let c = random_coord(space, rng);
                if seen.insert(c.clone()) {
                    out.push(c);
                }
            }
            Ok(out)
        }
        Placement::MinDist => {
            for _ in 0..100 {
                if let Some(pts) = jittered_grid(space, n, rng) {
                    if min_dist_holds(&pts, n) {
                        return Ok(pts);
                    }
                }
            }
            Err(SimError::Placement(format!(
                "no 1/{n}-separated placement of {n} nodes at {space}"
            )))
        }
    }
}

pub(crate) fn random_coord(space: &Space, rng: &mut ChaCha8Rng) -> Coord {
    let axes: Vec<u64> = (0..space.dim())
        .map(|_| rng.gen_range(0..(1u64 << space.bits())) | 1)
        .collect();
    Coord::new(space.bits(), &axes).expect("odd mantissa in range")
}

/// One point per grid cell, kept `1/(2n)` away from the cell walls.
fn jittered_grid(space: &Space, n: usize, rng: &mut ChaCha8Rng) -> Option<Vec<Coord>> {
    let d = space.dim();
    if n == 1 {
        return Some(vec![random_coord(space, rng)]);
    }
    let mut m = 1usize;
    while m.checked_pow(d as u32)? < n {
        m += 1;
    }
    if m > n {
        return None;
    }
    let scale = 1u64 << space.bits();
    let margin = scale.div_ceil(2 * n as u64);
    let bound = |k: usize| ((k as u128 * scale as u128) / m as u128) as u64;
    let total = m.checked_pow(d as u32)?;
    let mut cells: Vec<usize> = (0..total).collect();
    cells.shuffle(rng);
    let mut out = Vec::with_capacity(n);
    for &cell in &cells[..n] {
        let mut rest = cell;
        let mut axes = Vec::with_capacity(d);
        for _ in 0..d {
            let k = rest % m;
            rest /= m;
            let lo = bound(k) + margin;
            let hi = bound(k + 1).checked_sub(margin)?;
            if lo > hi {
                return None;
            }
            let x = (rng.gen_range(lo..=hi) | 1).min(scale - 1);
            axes.push(x);
        }
        out.push(Coord::new(space.bits(), &axes).ok()?);
    }
    Some(out)
}

/// Exhaustive pairwise check of `||u - v|| >= 1/n`.
pub fn min_dist_holds(points: &[Coord], n: usize) -> bool {
    let Some(first) = points.first() else {
        return true;
    };
    let unit = 1u128 << (2 * first.bits() as u32);
    let nn = (n as u128) * (n as u128);
    points.iter().enumerate().all(|(i, a)| {
        points[i + 1..]
            .iter()
            .all(|b| distance_sq_units(a, b).saturating_mul(nn) >= unit)
    })
}

fn wire_topology(state: &mut SystemState, topology: InitTopology, rng: &mut ChaCha8Rng) {
    let space = state.space.clone();
    let mut perm: Vec<Coord> = state.nodes.keys().cloned().collect();
    perm.shuffle(rng);
    let n = perm.len();
    match topology {
        InitTopology::ListRandom => {
            for i in 1..n {
                let j = rng.gen_range(0..i);
                let target = perm[j].clone();
                let v = state.nodes.get_mut(&perm[i]).unwrap();
                if rng.gen_bool(0.5) {
                    v.left = Some(target);
                } else {
                    v.right = Some(target);
                }
            }
            for i in 0..n {
                if n < 2 {
                    break;
                }
                let extra = perm[rng.gen_range(0..n)].clone();
                let v = state.nodes.get_mut(&perm[i]).unwrap();
                if extra == v.id || !rng.gen_bool(0.5) {
                    continue;
                }
                if v.left.is_none() {
                    v.left = Some(extra);
                } else if v.right.is_none() {
                    v.right = Some(extra);
                }
            }
        }
        InitTopology::QuadOnly => {
            for i in 1..n {
                let j = rng.gen_range(0..i);
                let target = perm[j].clone();
                state.nodes.get_mut(&perm[i]).unwrap().insert_quad(&space, target);
            }
            for i in 0..n {
                for _ in 0..rng.gen_range(0..=2) {
                    let extra = perm[rng.gen_range(0..n)].clone();
                    if extra != perm[i] {
                        state.nodes.get_mut(&perm[i]).unwrap().insert_quad(&space, extra);
                    }
                }
            }
        }
        InitTopology::Line => {
            for i in 0..n.saturating_sub(1) {
                let next = perm[i + 1].clone();
                state.nodes.get_mut(&perm[i]).unwrap().right = Some(next);
            }
        }
        InitTopology::Star => {
            for i in 1..n {
                let center = perm[0].clone();
                state.nodes.get_mut(&perm[i]).unwrap().left = Some(center);
            }
        }
        InitTopology::Mixed => {
            for i in 1..n {
                let j = rng.gen_range(0..i);
                let (holder, target) = if rng.gen_bool(0.5) { (i, j) } else { (j, i) };
                let target = perm[target].clone();
                let v = state.nodes.get_mut(&perm[holder]).unwrap();
                match rng.gen_range(0..3) {
                    0 if v.left.is_none() => v.left = Some(target),
                    1 if v.right.is_none() => v.right = Some(target),
                    _ => v.insert_quad(&space, target),
                }
            }
            for _ in 0..n / 2 {
                let a = perm[rng.gen_range(0..n)].clone();
                let b = perm[rng.gen_range(0..n)].clone();
                if a != b {
                    state.nodes.get_mut(&a).unwrap().insert_quad(&space, b);
                }
            }
        }
    }
}

fn random_region(space: &Space, rng: &mut ChaCha8Rng) -> Region {
    let depth = rng.gen_range(1..=2 * space.dim());
    let mut r = space.root();
    for _ in 0..depth {
        let (l, rr) = space.split(&r).expect("shallow split");
        r = if rng.gen_bool(0.5) { l } else { rr };
    }
    r
}

fn add_inflight(state: &mut SystemState, count: usize, rng: &mut ChaCha8Rng) {
    let coords: Vec<Coord> = state.nodes.keys().cloned().collect();
    let space = state.space.clone();
    for _ in 0..count {
        let dest = coords[rng.gen_range(0..coords.len())].clone();
        let node = coords[rng.gen_range(0..coords.len())].clone();
        let msg = if rng.gen_bool(0.5) {
            Message::Linearize { node }
        } else {
            let area = if rng.gen_bool(0.3) {
                None
            } else {
                Some(random_region(&space, rng))
            };
            Message::QLinearize { node, area }
        };
        let id = state.next_envelope_id();
        state.push_envelope(
            dest,
            msg,
            None,
            Some(Lineage { origin: id, hops: 0 }),
            id,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_node_is_bare() {
        let cfg = ScenarioConfig::new(1, 2, 9);
        let s = generate_scenario(&cfg).unwrap();
        assert_eq!(s.nodes.len(), 1);
        let v = s.nodes.values().next().unwrap();
        assert!(v.left.is_none() && v.right.is_none() && v.quad.is_empty());
    }

    #[test]
    fn quad_only_has_no_list_edges() {
        let mut cfg = ScenarioConfig::new(8, 2, 4);
        cfg.init_topology = InitTopology::QuadOnly;
        let s = generate_scenario(&cfg).unwrap();
        assert!(s.nodes.values().all(|v| v.left.is_none() && v.right.is_none()));
        assert!(s.nodes.values().any(|v| !v.quad.is_empty()));
        assert!(s.weakly_connected());
    }

    #[test]
    fn min_dist_sixteen_nodes() {
        for seed in 0..20 {
            let mut cfg = ScenarioConfig::new(16, 2, seed);
            cfg.placement = Placement::MinDist;
            let s = generate_scenario(&cfg).unwrap();
            let pts: Vec<Coord> = s.nodes.keys().cloned().collect();
            // brute force in floating point, independent of the integer check
            for (i, a) in pts.iter().enumerate() {
                for b in &pts[i + 1..] {
                    let (ua, ub) = (a.to_unit(), b.to_unit());
                    let d = ((ua[0] - ub[0]).powi(2) + (ua[1] - ub[1]).powi(2)).sqrt();
                    assert!(d >= 1.0 / 16.0 - 1e-12, "seed {seed}: {d}");
                }
            }
        }
    }

    #[test]
    fn min_dist_small_and_three_dim() {
        for (n, d) in [(2, 2), (3, 2), (4, 2), (8, 3), (64, 2)] {
            let mut cfg = ScenarioConfig::new(n, d, 1);
            cfg.placement = Placement::MinDist;
            let s = generate_scenario(&cfg).unwrap();
            let pts: Vec<Coord> = s.nodes.keys().cloned().collect();
            assert_eq!(pts.len(), n);
            assert!(min_dist_holds(&pts, n));
        }
    }

    #[test]
    fn every_topology_connected_with_inflight() {
        for topo in InitTopology::ALL {
            for seed in 0..10 {
                let mut cfg = ScenarioConfig::new(12, 2, seed);
                cfg.init_topology = topo;
                cfg.init_inflight = 12;
                let s = generate_scenario(&cfg).unwrap();
                assert!(s.weakly_connected());
                assert_eq!(s.in_flight(), 12);
                assert!(s.references_known());
            }
        }
    }

    #[test]
    fn explicit_nodes_must_be_unique() {
        let mut cfg = ScenarioConfig::new(0, 2, 1);
        let c = Coord::from_unit(30, &[0.5, 0.5]).unwrap();
        cfg.nodes = Some(vec![c.clone(), c]);
        assert!(matches!(generate_scenario(&cfg), Err(SimError::Config(_))));
    }

    #[test]
    fn placement_can_be_unsatisfiable() {
        let mut cfg = ScenarioConfig::new(5, 2, 1);
        cfg.bits = 1;
        assert!(matches!(generate_scenario(&cfg), Err(SimError::Placement(_))));
    }
}
