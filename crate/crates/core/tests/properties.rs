use std::cmp::Ordering;
use std::collections::BTreeSet;

use proptest::prelude::*;
use quadstab::protocol::{Message, NodeState, SearchRequest};
use quadstab::sim::{generate_scenario, InitTopology, ScenarioConfig, ScheduleConfig, Simulation};
use quadstab::space::{Coord, Placement, Space};
use quadstab::verify::Oracle;

/// A space and a set of distinct coordinates in it. Few bits make shared
/// prefixes (and deep cuts) common.
fn space_and_points(max_points: usize) -> impl Strategy<Value = (Space, Vec<Coord>)> {
    (2usize..=4, 3u8..=12).prop_flat_map(move |(dim, bits)| {
        let mantissa = (0u64..1 << (bits - 1)).prop_map(|m| 2 * m + 1);
        let point = proptest::collection::vec(mantissa, dim);
        proptest::collection::btree_set(point, 1..=max_points).prop_map(move |set| {
            let space = Space::new(dim, bits).unwrap();
            let pts = set.into_iter().map(|axes| Coord::new(bits, &axes).unwrap()).collect();
            (space, pts)
        })
    })
}

/// Sum of leaf volumes given their depths.
fn total_volume(depths: &[usize]) -> f64 {
    depths.iter().map(|&d| 0.5f64.powi(d as i32)).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn order_matches_interleaving((space, pts) in space_and_points(12)) {
        for u in &pts {
            for v in &pts {
                if u == v {
                    prop_assert_eq!(space.order(u, v), Ordering::Equal);
                    prop_assert!(space.order_compare(u, v).is_err());
                    continue;
                }
                let o = space.order(u, v);
                prop_assert_eq!(Ok(o), space.interleave_compare(u, v));
                prop_assert_eq!(space.order(v, u), o.reverse());
            }
        }
        for a in &pts {
            for b in &pts {
                for c in &pts {
                    if space.precedes(a, b) && space.precedes(b, c) {
                        prop_assert!(space.precedes(a, c));
                    }
                }
            }
        }
    }

    #[test]
    fn order_is_the_tree_order((space, pts) in space_and_points(16)) {
        let tree = space.quad_division(&pts, &space.root()).unwrap();
        let mut sorted = pts.clone();
        sorted.sort_by(|a, b| space.order(a, b));
        let dfs: Vec<Coord> = tree.dfs_order().into_iter().cloned().collect();
        prop_assert_eq!(sorted, dfs);
    }

    #[test]
    fn division_partitions_minimally((space, pts) in space_and_points(16)) {
        let tree = space.quad_division(&pts, &space.root()).unwrap();
        let leaves = tree.leaves();
        let depths: Vec<usize> = leaves.iter().map(|&i| tree.node(i).region.depth()).collect();
        prop_assert!((total_volume(&depths) - 1.0).abs() < 1e-12);
        for p in &pts {
            let holding: Vec<_> = leaves.iter().filter(|&&i| tree.node(i).region.contains(p)).collect();
            prop_assert_eq!(holding.len(), 1);
            prop_assert_eq!(tree.inhabitant(*holding[0]), Some(p));
        }
        for (i, node) in tree.nodes().iter().enumerate() {
            let inside = pts.iter().filter(|p| node.region.contains(p)).count();
            match node.children {
                None => prop_assert!(inside <= 1),
                // only the root may be cut while holding fewer than two points
                Some(_) if i != 0 => prop_assert!(inside >= 2),
                Some(_) => {}
            }
        }
    }

    #[test]
    fn local_view_from_neighbors_is_global((space, pts) in space_and_points(16)) {
        let oracle = Oracle::new(&space, &pts).unwrap();
        let tree = oracle.tree();
        for v in &pts {
            let t = oracle.target(v).unwrap();
            let view = space.compute_regions(v, t.pred.as_ref(), t.succ.as_ref()).unwrap();
            prop_assert_eq!(&view, &t.view);
            let expected: Vec<_> = tree.quad_regions_of(v).into_iter().cloned().collect();
            prop_assert_eq!(&view.quads, &expected);
            prop_assert_eq!(Some(&view.area), tree.region_locate(v));
        }
    }

    #[test]
    fn closer_neighbors_refine((space, pts) in space_and_points(12), pick in any::<prop::sample::Index>()) {
        let mut sorted = pts.clone();
        sorted.sort_by(|a, b| space.order(a, b));
        let k = pick.index(sorted.len());
        let v = &sorted[k];
        let before: Vec<&Coord> = sorted[..k].iter().collect();
        let after: Vec<&Coord> = sorted[k + 1..].iter().collect();
        // walk left neighbors from far to near, right neighbors likewise
        let mut prev: Option<Vec<_>> = None;
        for l in before.iter().map(Some).chain([None]) {
            let quads = space.compute_regions(v, l.copied(), None).unwrap().quads;
            if let (Some(p), Some(_)) = (&prev, l) {
                prop_assert!(p.iter().all(|r| quads.contains(r)));
            }
            prev = Some(quads);
        }
        let mut prev: Option<Vec<_>> = None;
        for r in after.iter().rev() {
            let quads = space.compute_regions(v, None, Some(r)).unwrap().quads;
            if let Some(p) = &prev {
                prop_assert!(p.iter().all(|q| quads.contains(q)));
            }
            prev = Some(quads);
        }
    }

    #[test]
    fn handlers_never_lose_references(
        (space, pts) in space_and_points(8),
        picks in proptest::collection::vec(any::<prop::sample::Index>(), 6),
        quad_mask in any::<u16>(),
        kind in 0u8..3,
    ) {
        let at = |i: usize| pts[picks[i].index(pts.len())].clone();
        let me = at(0);
        let mut v = NodeState::new(me.clone());
        v.left = Some(at(1));
        v.right = Some(at(2));
        for (i, p) in pts.iter().enumerate() {
            if quad_mask & (1 << (i % 16)) != 0 {
                v.insert_quad(&space, p.clone());
            }
        }
        let mut before: BTreeSet<Coord> = v.known().cloned().collect();
        let fx = match kind {
            0 => v.handle_timeout(&space),
            1 => {
                before.insert(at(3));
                v.handle(&space, Message::Linearize { node: at(3) })
            }
            _ => {
                before.insert(at(3));
                let area = space.compute_regions(&me, None, None).unwrap().quads[0].clone();
                v.handle(&space, Message::QLinearize { node: at(3), area: Some(area) })
            }
        };
        let mut after: BTreeSet<Coord> = v.known().cloned().collect();
        for (_, msg) in &fx.outbound {
            after.extend(msg.payload_coords().into_iter().cloned());
        }
        before.remove(&me);
        prop_assert!(before.is_subset(&after), "lost {:?}", before.difference(&after).collect::<Vec<_>>());
        // list variables are consistent after any action
        if let Some(l) = &v.left { prop_assert!(space.precedes(l, &me)); }
        if let Some(r) = &v.right { prop_assert!(space.precedes(&me, r)); }
    }

    #[test]
    fn sanitation_is_idempotent(
        (space, pts) in space_and_points(8),
        picks in proptest::collection::vec(any::<prop::sample::Index>(), 3),
        quad_mask in any::<u16>(),
    ) {
        let at = |i: usize| pts[picks[i].index(pts.len())].clone();
        let mut v = NodeState::new(at(0));
        v.left = Some(at(1));
        v.right = Some(at(2));
        for (i, p) in pts.iter().enumerate() {
            if quad_mask & (1 << (i % 16)) != 0 {
                v.insert_quad(&space, p.clone());
            }
        }
        v.sanitize_list(&space);
        v.sanitize_quad(&space);
        let once = v.clone();
        let fx = v.sanitize_list(&space);
        prop_assert!(fx.outbound.is_empty());
        let fx = v.sanitize_quad(&space);
        prop_assert!(fx.outbound.is_empty());
        prop_assert_eq!(&v, &once);
        // one member per quad region, none in the own area
        let view = v.local_view(&space);
        for region in &view.quads {
            prop_assert!(v.quad.iter().filter(|q| region.contains(q)).count() <= 1);
        }
        prop_assert!(v.quad.iter().all(|q| !view.area.contains(q)));
    }

    #[test]
    fn search_forwards_into_the_target_region(
        (space, pts) in space_and_points(8),
        picks in proptest::collection::vec(any::<prop::sample::Index>(), 4),
        quad_mask in any::<u16>(),
    ) {
        let at = |i: usize| pts[picks[i].index(pts.len())].clone();
        let me = at(0);
        let mut v = NodeState::new(me.clone());
        v.left = Some(at(1));
        v.right = Some(at(2));
        for (i, p) in pts.iter().enumerate() {
            if quad_mask & (1 << (i % 16)) != 0 {
                v.insert_quad(&space, p.clone());
            }
        }
        let target = at(3);
        let fx = v.handle_search(&space, SearchRequest::new(me.clone(), target.clone(), 0));
        let view = v.local_view(&space);
        match fx.terminal {
            Some(done) => {
                prop_assert_eq!(&done.result, &me);
                // either our own area or an uncovered quad region
                if let Placement::Quad(i) = view.locate(&target) {
                    prop_assert!(v.quad.iter().all(|q| !view.quads[i].contains(q)));
                }
            }
            None => {
                let searches: Vec<_> = fx.outbound.iter().filter(|(_, m)| matches!(m, Message::Search(_))).collect();
                prop_assert_eq!(searches.len(), 1);
                let (next, _) = searches[0];
                let Placement::Quad(i) = view.locate(&target) else {
                    return Err(TestCaseError::fail("forwarded although the target is in the own area"));
                };
                prop_assert!(view.quads[i].contains(next));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn constructed_legitimate_state_is_stable((space, pts) in space_and_points(12), seed in 0u64..1000) {
        let oracle = Oracle::new(&space, &pts).unwrap();
        let state = oracle.legitimate_state();
        prop_assert!(oracle.is_legitimate(&state));
        // searches for node positions return the node along strictly deeper regions
        for init in &pts {
            for target in &pts {
                let mut at = init.clone();
                let mut req = SearchRequest::new(init.clone(), target.clone(), 0);
                let mut depth = 0;
                loop {
                    let mut node = state.nodes[&at].clone();
                    let view = node.local_view(&space);
                    let fx = node.handle_search(&space, req.clone());
                    if let Some(done) = fx.terminal {
                        prop_assert_eq!(&done.result, target);
                        break;
                    }
                    let Placement::Quad(i) = view.locate(target) else { unreachable!() };
                    prop_assert!(view.quads[i].depth() > depth);
                    depth = view.quads[i].depth();
                    let (next, msg) = fx.outbound.into_iter().next().unwrap();
                    let Message::Search(r) = msg else { unreachable!() };
                    req = r;
                    at = next;
                }
            }
        }
        // the protocol leaves it alone
        let mut cfg = ScheduleConfig::new(seed, pts.len());
        cfg.searches_per_round = 0;
        let mut sim = Simulation::new(state.clone(), cfg).unwrap();
        for _ in 0..10 {
            sim.run_round(&mut ());
            for (c, v) in &sim.state().nodes {
                let orig = &state.nodes[c];
                prop_assert_eq!((&v.left, &v.right, &v.quad), (&orig.left, &orig.right, &orig.quad));
            }
        }
    }

    #[test]
    fn replays_hash_identically(n in 1usize..12, seed in 0u64..10_000, topo in 0usize..5) {
        let run = || {
            let mut scen = ScenarioConfig::new(n, 2, seed);
            scen.init_topology = InitTopology::ALL[topo];
            scen.init_inflight = n;
            let mut sim = Simulation::new(generate_scenario(&scen).unwrap(), ScheduleConfig::new(seed, n)).unwrap();
            for _ in 0..8 {
                sim.run_round(&mut ());
            }
            sim.trace_hash()
        };
        prop_assert_eq!(run(), run());
    }

    #[test]
    fn generated_scenarios_are_well_formed(n in 1usize..24, dim in 2usize..4, seed in 0u64..10_000, topo in 0usize..5) {
        let mut scen = ScenarioConfig::new(n, dim, seed);
        scen.init_topology = InitTopology::ALL[topo];
        scen.init_inflight = n;
        let state = generate_scenario(&scen).unwrap();
        prop_assert_eq!(state.nodes.len(), n);
        prop_assert!(state.weakly_connected());
        prop_assert!(state.references_known());
        prop_assert_eq!(state.in_flight(), n);
    }
}
