//! Per-node state machine: list linearization, quad-edge maintenance and
//! greedy quad routing.
//!
//! Every handler starts with the consistency checks, works only on
//! coordinates the node already holds, and reports what it sends in an
//! [`Effects`] value. Local calls (delegating a reference back into the list
//! protocol) run synchronously inside the same handler.

mod message;

use std::cmp::Ordering;

use crate::space::{Coord, LocalView, Placement, Region, Space};

pub use message::{Message, MessageKind, SearchRequest};

/// Protocol variables of one node.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NodeState {
    pub id: Coord,
    pub left: Option<Coord>,
    pub right: Option<Coord>,
    /// Quad neighbors, kept sorted by the space order.
    pub quad: Vec<Coord>,
    /// Round-robin counter over `quad` for delegation.
    pub rr_quad: u64,
    /// Round-robin counter over uncovered quad regions.
    pub rr_area: u64,
}

/// Where and how a search ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchOutcome {
    pub request_id: u64,
    pub initiator: Coord,
    pub target: Coord,
    pub result: Coord,
    pub hops: u32,
    pub trail: Vec<Coord>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Effects {
    pub outbound: Vec<(Coord, Message)>,
    pub terminal: Option<SearchOutcome>,
}

impl Effects {
    fn send(&mut self, to: Coord, msg: Message) {
        self.outbound.push((to, msg));
    }
}

impl NodeState {
    pub fn new(id: Coord) -> Self {
        NodeState {
            id,
            left: None,
            right: None,
            quad: Vec::new(),
            rr_quad: 0,
            rr_area: 0,
        }
    }

    /// Every coordinate held in a variable (the explicit out-edges).
    pub fn known(&self) -> impl Iterator<Item = &Coord> {
        self.left.iter().chain(self.right.iter()).chain(self.quad.iter())
    }

    /// Inserts into `quad` keeping the space order; exact duplicates are
    /// ignored.
    pub fn insert_quad(&mut self, space: &Space, w: Coord) {
        if let Err(pos) = self.quad.binary_search_by(|x| space.order(x, &w)) {
            self.quad.insert(pos, w);
        }
    }

    /// Local view from the current (sanitized) list neighbors.
    pub fn local_view(&self, space: &Space) -> LocalView {
        space
            .compute_regions(&self.id, self.left.as_ref(), self.right.as_ref())
            .expect("list neighbors are sanitized before the local view is computed")
    }

    /// Clears `left` if it does not precede us and `right` if it does not
    /// follow us; cleared references other than ourselves go back through
    /// linearization.
    pub fn sanitize_list(&mut self, space: &Space) -> Effects {
        let mut fx = Effects::default();
        self.sanitize_list_into(space, &mut fx);
        fx
    }

    fn sanitize_list_into(&mut self, space: &Space, fx: &mut Effects) {
        let mut removed = Vec::new();
        if let Some(l) = &self.left {
            if space.order(l, &self.id) != Ordering::Less {
                let l = self.left.take().unwrap();
                if l != self.id {
                    removed.push(l);
                }
            }
        }
        if let Some(r) = &self.right {
            if space.order(&self.id, r) != Ordering::Less {
                let r = self.right.take().unwrap();
                if r != self.id {
                    removed.push(r);
                }
            }
        }
        for w in removed {
            self.linearize(space, w, fx);
        }
    }

    /// Keeps at most one quad neighbor per quad region (the earliest in the
    /// space order); the others, and any neighbor inside our own area, are
    /// handed to linearization. Expects a sanitized list.
    pub fn sanitize_quad(&mut self, space: &Space) -> Effects {
        let mut fx = Effects::default();
        self.sanitize_quad_into(space, &mut fx);
        fx
    }

    fn sanitize_quad_into(&mut self, space: &Space, fx: &mut Effects) {
        if self.quad.is_empty() {
            return;
        }
        let view = self.local_view(space);
        let mut covered = vec![false; view.quads.len()];
        let mut evicted = Vec::new();
        let members = std::mem::take(&mut self.quad);
        for w in members {
            if w == self.id {
                continue;
            }
            match view.locate(&w) {
                Placement::Quad(i) if !covered[i] => {
                    covered[i] = true;
                    self.quad.push(w);
                }
                _ => evicted.push(w),
            }
        }
        for w in evicted {
            self.linearize(space, w, fx);
        }
    }

    fn sanitize(&mut self, space: &Space, fx: &mut Effects) {
        self.sanitize_list_into(space, fx);
        self.sanitize_quad_into(space, fx);
    }

    /// The four-case linearization step on a sanitized list.
    fn linearize(&mut self, space: &Space, w: Coord, fx: &mut Effects) {
        match space.order(&w, &self.id) {
            Ordering::Equal => {}
            Ordering::Less => match self.left.take() {
                None => self.left = Some(w),
                Some(l) => match space.order(&w, &l) {
                    Ordering::Less => {
                        fx.send(l.clone(), Message::Linearize { node: w });
                        self.left = Some(l);
                    }
                    Ordering::Equal => self.left = Some(l),
                    Ordering::Greater => {
                        fx.send(w.clone(), Message::Linearize { node: l });
                        self.left = Some(w);
                    }
                },
            },
            Ordering::Greater => match self.right.take() {
                None => self.right = Some(w),
                Some(r) => match space.order(&w, &r) {
                    Ordering::Greater => {
                        fx.send(r.clone(), Message::Linearize { node: w });
                        self.right = Some(r);
                    }
                    Ordering::Equal => self.right = Some(r),
                    Ordering::Less => {
                        fx.send(w.clone(), Message::Linearize { node: r });
                        self.right = Some(w);
                    }
                },
            },
        }
    }

    fn introduce(&self, fx: &mut Effects, msg: Message) {
        if let Some(l) = &self.left {
            fx.send(l.clone(), msg.clone());
        }
        if let Some(r) = &self.right {
            fx.send(r.clone(), msg);
        }
    }

    pub fn handle_list_timeout(&mut self, space: &Space) -> Effects {
        let mut fx = Effects::default();
        self.sanitize_list_into(space, &mut fx);
        self.introduce(&mut fx, Message::Linearize { node: self.id.clone() });
        fx
    }

    pub fn handle_linearize(&mut self, space: &Space, w: Coord) -> Effects {
        let mut fx = Effects::default();
        self.sanitize_list_into(space, &mut fx);
        self.linearize(space, w, &mut fx);
        fx
    }

    pub fn handle_quad_timeout(&mut self, space: &Space) -> Effects {
        let mut fx = Effects::default();
        self.sanitize(space, &mut fx);
        if !self.quad.is_empty() {
            let w = self.quad[(self.rr_quad % self.quad.len() as u64) as usize].clone();
            self.rr_quad = self.rr_quad.wrapping_add(1);
            self.linearize(space, w, &mut fx);
        }
        let view = self.local_view(space);
        let uncovered = self.uncovered(&view);
        let area = if uncovered.is_empty() {
            None
        } else {
            let pick = uncovered[(self.rr_area % uncovered.len() as u64) as usize].clone();
            self.rr_area = self.rr_area.wrapping_add(1);
            Some(pick)
        };
        self.introduce(
            &mut fx,
            Message::QLinearize {
                node: self.id.clone(),
                area,
            },
        );
        fx
    }

    /// Both timeout subroutines, list first.
    pub fn handle_timeout(&mut self, space: &Space) -> Effects {
        let mut fx = self.handle_list_timeout(space);
        let quad = self.handle_quad_timeout(space);
        fx.outbound.extend(quad.outbound);
        fx
    }

    pub fn handle_qlinearize(&mut self, space: &Space, w: Coord, area: Option<Region>) -> Effects {
        let mut fx = Effects::default();
        self.sanitize(space, &mut fx);
        self.linearize(space, w.clone(), &mut fx);
        let view = self.local_view(space);
        if w != self.id {
            if let Placement::Quad(i) = view.locate(&w) {
                let region = &view.quads[i];
                if !self.quad.iter().any(|q| region.contains(q)) {
                    self.insert_quad(space, w.clone());
                }
            }
        }
        if let Some(area) = area {
            if w != self.id {
                let answer = if area.contains(&self.id) {
                    Some(self.id.clone())
                } else {
                    self.quad.iter().find(|q| area.contains(q)).cloned()
                };
                if let Some(answer) = answer {
                    fx.send(w, Message::QLinearize { node: answer, area: None });
                }
            }
        }
        fx
    }

    pub fn handle_search(&mut self, space: &Space, mut req: SearchRequest) -> Effects {
        let mut fx = Effects::default();
        self.sanitize(space, &mut fx);
        let view = self.local_view(space);
        let next = match view.locate(&req.target) {
            Placement::Area => None,
            Placement::Quad(i) => {
                let region = &view.quads[i];
                self.quad.iter().find(|q| region.contains(q)).cloned()
            }
        };
        match next {
            Some(w) => {
                req.hops += 1;
                req.trail.push(w.clone());
                fx.send(w, Message::Search(req));
            }
            None => {
                fx.send(
                    req.initiator.clone(),
                    Message::SearchResult {
                        request_id: req.request_id,
                        result: self.id.clone(),
                    },
                );
                fx.terminal = Some(SearchOutcome {
                    request_id: req.request_id,
                    initiator: req.initiator,
                    target: req.target,
                    result: self.id.clone(),
                    hops: req.hops,
                    trail: req.trail,
                });
            }
        }
        fx
    }

    /// Dispatches a delivered message.
    pub fn handle(&mut self, space: &Space, msg: Message) -> Effects {
        match msg {
            Message::Linearize { node } => self.handle_linearize(space, node),
            Message::QLinearize { node, area } => self.handle_qlinearize(space, node, area),
            Message::Search(req) => self.handle_search(space, req),
            Message::SearchResult { .. } => Effects::default(),
        }
    }

    /// Quad regions without a quad neighbor, in view order.
    pub fn uncovered<'a>(&self, view: &'a LocalView) -> Vec<&'a Region> {
        view.quads
            .iter()
            .filter(|r| !self.quad.iter().any(|q| r.contains(q)))
            .collect()
    }
}

/// Input of one atomic action.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Input {
    Timeout,
    Deliver(Message),
}

/// Value-level transition: the state after the action and its effects.
pub fn transition(space: &Space, state: &NodeState, input: Input) -> (NodeState, Effects) {
    let mut next = state.clone();
    let fx = match input {
        Input::Timeout => next.handle_timeout(space),
        Input::Deliver(msg) => next.handle(space, msg),
    };
    (next, fx)
}
