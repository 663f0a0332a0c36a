use std::collections::{BTreeMap, HashMap};

use super::{Violation, ViolationKind};
use crate::protocol::NodeState;
use crate::sim::SystemState;
use crate::space::{Coord, DivisionTree, LocalView, Region, Space, SpaceError};

/// What the legitimate state prescribes for one node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeTarget {
    pub pred: Option<Coord>,
    pub succ: Option<Coord>,
    pub view: LocalView,
    /// Per quad region: its earliest inhabitant, `None` for empty regions.
    pub first_inhabitant: Vec<Option<Coord>>,
}

impl NodeTarget {
    pub fn nonempty(&self, i: usize) -> bool {
        self.first_inhabitant[i].is_some()
    }
}

/// Global knowledge over a fixed node set: the division tree of all nodes,
/// the induced order and every node's global `A(v)` and `Q(v)`.
#[derive(Debug, Clone)]
pub struct Oracle {
    space: Space,
    tree: DivisionTree,
    sorted: Vec<Coord>,
    targets: BTreeMap<Coord, NodeTarget>,
}

impl Oracle {
    pub fn new(space: &Space, coords: &[Coord]) -> Result<Self, SpaceError> {
        if coords.is_empty() {
            return Err(SpaceError::InvalidSpace("the oracle needs at least one node".into()));
        }
        let tree = space.quad_division(coords, &space.root())?;
        let sorted: Vec<Coord> = tree.dfs_order().into_iter().cloned().collect();

        // earliest inhabitant of every subtree
        let mut first: Vec<Option<usize>> = vec![None; tree.nodes().len()];
        for i in (0..tree.nodes().len()).rev() {
            let node = tree.node(i);
            first[i] = match node.children {
                Some([l, r]) => first[l].or(first[r]),
                None => node.point,
            };
        }

        let rank: HashMap<&Coord, usize> = sorted.iter().enumerate().map(|(i, c)| (c, i)).collect();
        let mut targets = BTreeMap::new();
        for v in &sorted {
            let mut quads = Vec::new();
            let mut inhabitants = Vec::new();
            let mut at = 0;
            while let Some([l, r]) = tree.node(at).children {
                let (own, sib) = if tree.node(l).region.contains(v) { (l, r) } else { (r, l) };
                quads.push(tree.node(sib).region.clone());
                inhabitants.push(first[sib].map(|p| tree.points()[p].clone()));
                at = own;
            }
            let k = rank[v];
            targets.insert(
                v.clone(),
                NodeTarget {
                    pred: k.checked_sub(1).map(|i| sorted[i].clone()),
                    succ: sorted.get(k + 1).cloned(),
                    view: LocalView {
                        area: tree.node(at).region.clone(),
                        quads,
                    },
                    first_inhabitant: inhabitants,
                },
            );
        }
        Ok(Oracle {
            space: space.clone(),
            tree,
            sorted,
            targets,
        })
    }

    pub fn for_state(state: &SystemState) -> Result<Self, SpaceError> {
        Oracle::new(&state.space, &state.coords())
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn tree(&self) -> &DivisionTree {
        &self.tree
    }

    /// All nodes in the global order.
    pub fn sorted(&self) -> &[Coord] {
        &self.sorted
    }

    pub fn target(&self, v: &Coord) -> Option<&NodeTarget> {
        self.targets.get(v)
    }

    /// The node a search for `target` ends at in any legitimate state, or
    /// `None` when the target's leaf is empty.
    pub fn search_answer(&self, target: &Coord) -> Option<&Coord> {
        self.tree.locate(target).and_then(|leaf| self.tree.inhabitant(leaf))
    }

    pub fn is_legitimate(&self, state: &SystemState) -> bool {
        state.nodes.len() == self.targets.len()
            && state.nodes.values().all(|v| self.list_ok(v))
            && state.nodes.values().all(|v| self.quad_problem(v).is_none())
    }

    /// Every way `state` falls short of legitimacy, list conditions first.
    pub fn legitimacy_violations(&self, state: &SystemState) -> Vec<Violation> {
        let mut out = Vec::new();
        for v in state.nodes.values() {
            if !self.list_ok(v) {
                let t = &self.targets[&v.id];
                out.push(Violation::new(
                    ViolationKind::Legitimacy,
                    state.round,
                    format!(
                        "node {}: list ({}, {}) but expected ({}, {})",
                        v.id,
                        show(&v.left),
                        show(&v.right),
                        show(&t.pred),
                        show(&t.succ)
                    ),
                ));
            }
        }
        for v in state.nodes.values() {
            if let Some(problem) = self.quad_problem(v) {
                out.push(Violation::new(
                    ViolationKind::Legitimacy,
                    state.round,
                    format!("node {}: {problem}", v.id),
                ));
            }
        }
        out
    }

    fn list_ok(&self, v: &NodeState) -> bool {
        match self.targets.get(&v.id) {
            Some(t) => v.left == t.pred && v.right == t.succ,
            None => false,
        }
    }

    fn quad_problem(&self, v: &NodeState) -> Option<String> {
        let t = self.targets.get(&v.id)?;
        let mut hits = vec![0usize; t.view.quads.len()];
        for w in &v.quad {
            if !self.targets.contains_key(w) {
                return Some(format!("quad member {w} is not a node"));
            }
            match t.view.quads.iter().position(|q| q.contains(w)) {
                Some(i) => hits[i] += 1,
                None => return Some(format!("quad member {w} lies outside every quad region")),
            }
        }
        for (i, &h) in hits.iter().enumerate() {
            let want = usize::from(t.nonempty(i));
            if h != want {
                return Some(format!(
                    "quad region {} holds {h} members, expected {want}",
                    self.space.path_string(&t.view.quads[i])
                ));
            }
        }
        None
    }

    /// A legitimate state built directly from the global tree: list
    /// neighbors from the order and the earliest inhabitant of every
    /// non-empty quad region. Mailboxes are empty.
    pub fn legitimate_state(&self) -> SystemState {
        let mut state = SystemState::new(self.space.clone(), self.sorted.iter().cloned());
        for (c, t) in &self.targets {
            let v = state.nodes.get_mut(c).unwrap();
            v.left = t.pred.clone();
            v.right = t.succ.clone();
            for w in t.first_inhabitant.iter().flatten() {
                v.insert_quad(&self.space, w.clone());
            }
        }
        state
    }

    /// Quad regions of the global view of `v`.
    pub fn quads_of(&self, v: &Coord) -> Option<&[Region]> {
        self.targets.get(v).map(|t| t.view.quads.as_slice())
    }
}

fn show(c: &Option<Coord>) -> String {
    c.as_ref().map_or_else(|| "ABSENT".to_string(), Coord::to_string)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::Message;
    use crate::SearchRequest;

    fn plane() -> Space {
        Space::new(2, 30).unwrap()
    }

    fn pt(s: &Space, xs: &[f64]) -> Coord {
        Coord::from_unit(s.bits(), xs).unwrap()
    }

    fn example(s: &Space) -> Vec<Coord> {
        // a, b in the NW quarter, c in SE, d' in NE
        vec![
            pt(s, &[0.1, 0.9]),
            pt(s, &[0.4, 0.6]),
            pt(s, &[0.9, 0.1]),
            pt(s, &[0.8, 0.8]),
        ]
    }

    #[test]
    fn single_node_tree_and_legitimacy() {
        let s = plane();
        let v = pt(&s, &[0.3, 0.3]);
        let o = Oracle::new(&s, std::slice::from_ref(&v)).unwrap();
        assert_eq!(o.tree().leaves().len(), 2);
        let t = o.target(&v).unwrap();
        assert_eq!(t.view.quads.len(), 1);
        assert!(!t.nonempty(0));
        let state = SystemState::new(s, [v]);
        assert!(o.is_legitimate(&state));
    }

    #[test]
    fn four_node_example() {
        let s = plane();
        let pts = example(&s);
        let o = Oracle::new(&s, &pts).unwrap();
        assert_eq!(o.tree().leaves().len(), 5);
        assert_eq!(o.sorted(), &[pts[0].clone(), pts[1].clone(), pts[3].clone(), pts[2].clone()]);
        assert_eq!(o.search_answer(&pt(&s, &[0.9, 0.9])), Some(&pts[3]));
        assert_eq!(o.search_answer(&pt(&s, &[0.2, 0.2])), None);
        for p in &pts {
            assert_eq!(o.search_answer(p), Some(p));
        }
    }

    #[test]
    fn two_nodes_by_hand() {
        let s = plane();
        let a = pt(&s, &[0.25, 0.5]);
        let b = pt(&s, &[0.75, 0.5]);
        let o = Oracle::new(&s, &[a.clone(), b.clone()]).unwrap();
        let mut state = SystemState::new(s.clone(), [a.clone(), b.clone()]);
        assert!(!o.is_legitimate(&state));
        for (v, w) in [(&a, &b), (&b, &a)] {
            let n = state.nodes.get_mut(v).unwrap();
            if s.precedes(v, w) {
                n.right = Some(w.clone());
            } else {
                n.left = Some(w.clone());
            }
        }
        // list is right, quad edges still missing
        let vs = o.legitimacy_violations(&state);
        assert_eq!(vs.len(), 2);
        state.nodes.get_mut(&a).unwrap().quad = vec![b.clone()];
        state.nodes.get_mut(&b).unwrap().quad = vec![a.clone()];
        assert!(o.is_legitimate(&state));
        assert_eq!(o.legitimate_state(), state);
    }

    #[test]
    fn swapped_list_names_the_node() {
        let s = plane();
        let pts = example(&s);
        let o = Oracle::new(&s, &pts).unwrap();
        let mut state = o.legitimate_state();
        let v = state.nodes.get_mut(&pts[1]).unwrap();
        std::mem::swap(&mut v.left, &mut v.right);
        let vs = o.legitimacy_violations(&state);
        assert_eq!(vs.len(), 1);
        assert_eq!(vs[0].kind, ViolationKind::Legitimacy);
        assert!(vs[0].details.contains(&pts[1].to_string()));
    }

    #[test]
    fn extra_quad_member_is_not_legitimate() {
        let s = plane();
        let pts = example(&s);
        let o = Oracle::new(&s, &pts).unwrap();
        let mut state = o.legitimate_state();
        // a already has one member for the east half; add the other
        let a = state.nodes.get_mut(&pts[0]).unwrap();
        assert!(a.quad.contains(&pts[3]));
        a.insert_quad(&s, pts[2].clone());
        assert!(!o.is_legitimate(&state));
    }

    #[test]
    fn constructed_state_routes_to_nodes() {
        let s = plane();
        let pts = example(&s);
        let o = Oracle::new(&s, &pts).unwrap();
        let state = o.legitimate_state();
        for init in &pts {
            for target in &pts {
                let mut at = init.clone();
                let mut req = SearchRequest::new(init.clone(), target.clone(), 0);
                loop {
                    let mut node = state.nodes[&at].clone();
                    let fx = node.handle_search(&s, req.clone());
                    if let Some(done) = fx.terminal {
                        assert_eq!(&done.result, target);
                        break;
                    }
                    let (next, msg) = fx.outbound.into_iter().next().unwrap();
                    let Message::Search(r) = msg else { unreachable!() };
                    req = r;
                    at = next;
                }
            }
        }
    }
}
