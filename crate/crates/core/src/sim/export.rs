use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{Envelope, Lineage, SimError, SystemState, TraceEvent};
use crate::protocol::{Message, NodeState, SearchRequest};
use crate::space::{Convention, Coord, Space};

pub const SNAPSHOT_SCHEMA: &str = "quadstab.snapshot/1";

/// Writes one JSON object per line. An empty trace writes nothing.
pub fn write_trace<W: Write>(events: &[TraceEvent], mut sink: W) -> Result<(), SimError> {
    for e in events {
        serde_json::to_writer(&mut sink, e)?;
        sink.write_all(b"\n")?;
    }
    sink.flush()?;
    Ok(())
}

/// Wire form of a message. Regions travel as their path from the root,
/// e.g. `"LRL"`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MessageWire {
    Linearize {
        node: Coord,
    },
    #[serde(rename = "QLINEARIZE")]
    QLinearize {
        node: Coord,
        area: Option<String>,
    },
    Search {
        initiator: Coord,
        target: Coord,
        request_id: u64,
        hops: u32,
        trail: Vec<Coord>,
    },
    #[serde(rename = "SEARCHRESULT")]
    SearchResult {
        request_id: u64,
        result: Coord,
    },
}

impl MessageWire {
    pub fn from_message(space: &Space, msg: &Message) -> Self {
        match msg {
            Message::Linearize { node } => MessageWire::Linearize { node: node.clone() },
            Message::QLinearize { node, area } => MessageWire::QLinearize {
                node: node.clone(),
                area: area.as_ref().map(|a| space.path_string(a)),
            },
            Message::Search(r) => MessageWire::Search {
                initiator: r.initiator.clone(),
                target: r.target.clone(),
                request_id: r.request_id,
                hops: r.hops,
                trail: r.trail.clone(),
            },
            Message::SearchResult { request_id, result } => MessageWire::SearchResult {
                request_id: *request_id,
                result: result.clone(),
            },
        }
    }

    pub fn into_message(self, space: &Space) -> Result<Message, SimError> {
        Ok(match self {
            MessageWire::Linearize { node } => Message::Linearize { node },
            MessageWire::QLinearize { node, area } => Message::QLinearize {
                node,
                area: area.map(|p| space.region_from_path(&p)).transpose()?,
            },
            MessageWire::Search {
                initiator,
                target,
                request_id,
                hops,
                trail,
            } => Message::Search(SearchRequest {
                initiator,
                target,
                request_id,
                hops,
                trail,
            }),
            MessageWire::SearchResult { request_id, result } => Message::SearchResult { request_id, result },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeWire {
    pub id: Coord,
    pub left: Option<Coord>,
    pub right: Option<Coord>,
    pub quad: Vec<Coord>,
    #[serde(default)]
    pub rr_quad: u64,
    #[serde(default)]
    pub rr_area: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvelopeWire {
    pub dest: Coord,
    pub id: u64,
    pub enqueued_round: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lineage: Option<Lineage>,
    pub message: MessageWire,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub schema: String,
    pub dimension: usize,
    pub bits: u8,
    /// Per axis: does the smaller half come first in the order.
    pub smaller_first: Vec<bool>,
    pub step: u64,
    pub round: u64,
    pub next_envelope: u64,
    pub next_request: u64,
    pub nodes: Vec<NodeWire>,
    pub messages: Vec<EnvelopeWire>,
}

pub fn export_snapshot(state: &SystemState) -> Snapshot {
    let space = &state.space;
    Snapshot {
        schema: SNAPSHOT_SCHEMA.to_string(),
        dimension: space.dim(),
        bits: space.bits(),
        smaller_first: space.convention().flags().to_vec(),
        step: state.step,
        round: state.round,
        next_envelope: state.next_envelope,
        next_request: state.next_request,
        nodes: state
            .nodes
            .values()
            .map(|v| NodeWire {
                id: v.id.clone(),
                left: v.left.clone(),
                right: v.right.clone(),
                quad: v.quad.clone(),
                rr_quad: v.rr_quad,
                rr_area: v.rr_area,
            })
            .collect(),
        messages: state
            .mailboxes
            .iter()
            .flat_map(|(dest, mb)| {
                mb.iter().map(move |e| EnvelopeWire {
                    dest: dest.clone(),
                    id: e.id,
                    enqueued_round: e.enqueued_round,
                    lineage: e.lineage,
                    message: MessageWire::from_message(space, &e.msg),
                })
            })
            .collect(),
    }
}

pub fn import_snapshot(snap: Snapshot) -> Result<SystemState, SimError> {
    if snap.schema != SNAPSHOT_SCHEMA {
        return Err(SimError::Snapshot(format!("unsupported schema {:?}", snap.schema)));
    }
    let space = Space::with_convention(snap.dimension, snap.bits, Convention::new(&snap.smaller_first))?;
    let mut nodes = BTreeMap::new();
    for w in snap.nodes {
        for c in std::iter::once(&w.id).chain(&w.left).chain(&w.right).chain(&w.quad) {
            space.check_coord(c)?;
        }
        let state = NodeState {
            id: w.id.clone(),
            left: w.left,
            right: w.right,
            quad: w.quad,
            rr_quad: w.rr_quad,
            rr_area: w.rr_area,
        };
        if nodes.insert(w.id.clone(), state).is_some() {
            return Err(SimError::Snapshot(format!("node {} listed twice", w.id)));
        }
    }
    let mut state = SystemState::new(space.clone(), std::iter::empty());
    state.mailboxes = nodes.keys().map(|c| (c.clone(), Vec::new())).collect();
    state.nodes = nodes;
    for e in snap.messages {
        let msg = e.message.into_message(&space)?;
        let mailbox = state
            .mailboxes
            .get_mut(&e.dest)
            .ok_or_else(|| SimError::Snapshot(format!("message for unknown node {}", e.dest)))?;
        mailbox.push(Envelope {
            id: e.id,
            msg,
            enqueued_round: e.enqueued_round,
            lineage: e.lineage,
        });
    }
    if !state.references_known() {
        return Err(SimError::Snapshot("a variable or message refers to an unknown node".into()));
    }
    state.step = snap.step;
    state.round = snap.round;
    state.next_envelope = snap.next_envelope;
    state.next_request = snap.next_request;
    Ok(state)
}

/// Graphviz rendering of the explicit edges. Nodes are pinned at their
/// positions (scaled by 10); list edges are blue, quad edges red.
pub fn export_dot(state: &SystemState) -> String {
    let index: BTreeMap<&Coord, usize> = state.nodes.keys().enumerate().map(|(i, c)| (c, i)).collect();
    let mut out = String::from("digraph overlay {\n  node [shape=point];\n");
    for (c, i) in &index {
        let u = c.to_unit();
        let pos = if u.len() == 2 {
            format!(", pos=\"{:.4},{:.4}!\"", u[0] * 10.0, u[1] * 10.0)
        } else {
            String::new()
        };
        let _ = writeln!(out, "  n{i} [label=\"{c}\"{pos}];");
    }
    for (c, v) in &state.nodes {
        let from = index[c];
        for w in v.left.iter().chain(v.right.iter()) {
            if let Some(to) = index.get(w) {
                let _ = writeln!(out, "  n{from} -> n{to} [kind=list, color=blue];");
            }
        }
        for w in &v.quad {
            if let Some(to) = index.get(w) {
                let _ = writeln!(out, "  n{from} -> n{to} [kind=quad, color=red];");
            }
        }
    }
    out.push_str("}\n");
    out
}
