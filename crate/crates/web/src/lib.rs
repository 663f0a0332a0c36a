//! Browser bindings for the quadstab demo page.
//!
//! Each exported operation has a plain Rust twin returning a JSON string so
//! the logic can be tested natively; the `wasm_bindgen` wrappers only turn
//! errors into JavaScript exceptions.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use quadstab::protocol::{Message, SearchRequest};
use quadstab::sim::{generate_scenario, InitTopology, ScenarioConfig, ScheduleConfig, Simulation};
use quadstab::verify::Oracle;
use quadstab::{Coord, Space};

const BITS: u8 = 20;

#[derive(Serialize)]
struct Leaf {
    path: String,
    bounds: Vec<(f64, f64)>,
    inhabitant: Option<usize>,
}

#[derive(Serialize)]
struct Division {
    leaves: Vec<Leaf>,
    /// Indices of the input points in traversal order.
    order: Vec<usize>,
}

fn parse_points(json: &str) -> Result<Vec<Coord>, String> {
    let raw: Vec<[f64; 2]> = serde_json::from_str(json).map_err(|e| format!("bad point list: {e}"))?;
    let pts = raw
        .iter()
        .map(|p| Coord::from_unit(BITS, p).map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    for (i, p) in pts.iter().enumerate() {
        if pts[..i].contains(p) {
            return Err(format!("point {i} coincides with an earlier point"));
        }
    }
    Ok(pts)
}

/// Divides the unit square around `points_json` (`[[x, y], ...]`) and
/// returns the leaf regions plus the traversal order of the points.
pub fn divide_json(points_json: &str) -> Result<String, String> {
    let pts = parse_points(points_json)?;
    let space = Space::new(2, BITS).map_err(|e| e.to_string())?;
    let tree = space.quad_division(&pts, &space.root()).map_err(|e| e.to_string())?;
    let index = |c: &Coord| pts.iter().position(|p| p == c).expect("tree points come from the input");
    let leaves = tree
        .leaves()
        .into_iter()
        .map(|i| {
            let region = &tree.node(i).region;
            Leaf {
                path: space.path_string(region),
                bounds: region.bounds(),
                inhabitant: tree.inhabitant(i).map(index),
            }
        })
        .collect();
    let order = tree.dfs_order().into_iter().map(index).collect();
    Ok(serde_json::to_string(&Division { leaves, order }).unwrap())
}

#[derive(Serialize)]
struct Frame {
    round: u64,
    legitimate: bool,
    in_flight: usize,
    nodes: Vec<Vec<f64>>,
    list: Vec<(usize, usize)>,
    quad: Vec<(usize, usize)>,
}

#[derive(Serialize)]
struct Trail {
    hops: u32,
    /// Node indices visited, starting at the initiator.
    path: Vec<usize>,
    result: usize,
    expected: Option<usize>,
}

/// A running simulation of the overlay in the unit square.
pub struct Overlay {
    sim: Simulation,
    oracle: Oracle,
    nodes: Vec<Coord>,
}

fn topology(name: &str) -> Result<InitTopology, String> {
    serde_json::from_value(serde_json::Value::String(name.to_string()))
        .map_err(|_| format!("unknown topology {name:?}"))
}

impl Overlay {
    pub fn create(n: usize, seed: u64, init: &str) -> Result<Self, String> {
        let mut scen = ScenarioConfig::new(n, 2, seed);
        scen.bits = BITS;
        scen.init_topology = topology(init)?;
        scen.init_inflight = n;
        let state = generate_scenario(&scen).map_err(|e| e.to_string())?;
        let oracle = Oracle::for_state(&state).map_err(|e| e.to_string())?;
        let nodes = oracle.sorted().to_vec();
        let sim = Simulation::new(state, ScheduleConfig::new(seed, n)).map_err(|e| e.to_string())?;
        Ok(Overlay { sim, oracle, nodes })
    }

    fn index(&self, c: &Coord) -> usize {
        self.nodes.iter().position(|p| p == c).expect("known node")
    }

    pub fn frame_json(&self) -> String {
        let state = self.sim.state();
        let mut list = Vec::new();
        let mut quad = Vec::new();
        for v in state.nodes.values() {
            let i = self.index(&v.id);
            for w in v.left.iter().chain(v.right.iter()) {
                list.push((i, self.index(w)));
            }
            for w in &v.quad {
                quad.push((i, self.index(w)));
            }
        }
        let frame = Frame {
            round: state.round,
            legitimate: self.oracle.is_legitimate(state),
            in_flight: state.in_flight(),
            nodes: self.nodes.iter().map(Coord::to_unit).collect(),
            list,
            quad,
        };
        serde_json::to_string(&frame).unwrap()
    }

    /// Runs one scheduler round and returns the new frame.
    pub fn step_json(&mut self) -> String {
        self.sim.run_round(&mut ());
        self.frame_json()
    }

    /// Routes a search from node `from` towards `(x, y)` over the current
    /// edges, delivering hop by hop without touching the running simulation.
    pub fn search_json(&self, from: usize, x: f64, y: f64) -> Result<String, String> {
        let start = self.nodes.get(from).ok_or_else(|| format!("no node {from}"))?.clone();
        let target = Coord::from_unit(BITS, &[x, y]).map_err(|e| e.to_string())?;
        let space = &self.sim.state().space;
        let mut nodes = self.sim.state().nodes.clone();
        let mut at = start.clone();
        let mut msg = Message::Search(SearchRequest::new(start, target.clone(), 0));
        for _ in 0..=4 * self.nodes.len() {
            let fx = nodes.get_mut(&at).expect("known node").handle(space, msg);
            if let Some(done) = fx.terminal {
                let trail = Trail {
                    hops: done.hops,
                    path: done.trail.iter().map(|c| self.index(c)).collect(),
                    result: self.index(&done.result),
                    expected: self.oracle.search_answer(&target).map(|c| self.index(c)),
                };
                return Ok(serde_json::to_string(&trail).unwrap());
            }
            let (next, m) = fx
                .outbound
                .into_iter()
                .find(|(_, m)| matches!(m, Message::Search(_)))
                .ok_or("search was dropped")?;
            at = next;
            msg = m;
        }
        Err("search did not terminate".into())
    }
}

#[wasm_bindgen]
pub fn divide(points_json: &str) -> Result<String, JsValue> {
    divide_json(points_json).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub struct Demo(Overlay);

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(n: usize, seed: u64, init: &str) -> Result<Demo, JsValue> {
        Overlay::create(n, seed, init).map(Demo).map_err(|e| JsValue::from_str(&e))
    }

    pub fn frame(&self) -> String {
        self.0.frame_json()
    }

    pub fn step(&mut self) -> String {
        self.0.step_json()
    }

    pub fn search(&self, from: usize, x: f64, y: f64) -> Result<String, JsValue> {
        self.0.search_json(from, x, y).map_err(|e| JsValue::from_str(&e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn division_of_four_points() {
        let out: Value =
            serde_json::from_str(&divide_json("[[0.1,0.9],[0.4,0.6],[0.6,0.2],[0.9,0.8]]").unwrap()).unwrap();
        assert_eq!(out["leaves"].as_array().unwrap().len(), 5);
        let mut order: Vec<u64> = out["order"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
        order.sort();
        assert_eq!(order, vec![0, 1, 2, 3]);
        let inhabited = out["leaves"].as_array().unwrap().iter().filter(|l| !l["inhabitant"].is_null()).count();
        assert_eq!(inhabited, 4);
    }

    #[test]
    fn division_rejects_bad_input() {
        assert!(divide_json("[[0.1,0.2],[0.1,0.2]]").is_err());
        assert!(divide_json("[[1.5,0.2]]").is_err());
        assert!(divide_json("nope").is_err());
    }

    #[test]
    fn overlay_converges_and_routes() {
        let mut demo = Overlay::create(12, 4, "star").unwrap();
        let mut frame: Value = serde_json::from_str(&demo.frame_json()).unwrap();
        assert_eq!(frame["nodes"].as_array().unwrap().len(), 12);
        for _ in 0..500 {
            if frame["legitimate"] == true {
                break;
            }
            frame = serde_json::from_str(&demo.step_json()).unwrap();
        }
        assert_eq!(frame["legitimate"], true);
        for (x, y) in [(0.05, 0.05), (0.5, 0.5), (0.93, 0.12)] {
            for from in [0, 5, 11] {
                let t: Value = serde_json::from_str(&demo.search_json(from, x, y).unwrap()).unwrap();
                assert_eq!(t["path"][0], from);
                if !t["expected"].is_null() {
                    assert_eq!(t["result"], t["expected"]);
                }
            }
        }
    }

    #[test]
    fn unknown_topology_is_an_error() {
        assert!(Overlay::create(4, 1, "ring").is_err());
        assert!(Overlay::create(4, 1, "line").unwrap().search_json(9, 0.5, 0.5).is_err());
    }
}
