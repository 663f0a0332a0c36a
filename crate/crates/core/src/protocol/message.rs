use std::fmt;

use crate::space::{Coord, Region};

/// A search travelling through the overlay.
///
/// `hops` and `trail` are bookkeeping for the hop monitors; routing never
/// reads them.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SearchRequest {
    pub initiator: Coord,
    pub target: Coord,
    pub request_id: u64,
    pub hops: u32,
    /// Nodes that processed the request, starting at the initiator.
    pub trail: Vec<Coord>,
}

impl SearchRequest {
    pub fn new(initiator: Coord, target: Coord, request_id: u64) -> Self {
        SearchRequest {
            trail: vec![initiator.clone()],
            initiator,
            target,
            request_id,
            hops: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Message {
    Linearize { node: Coord },
    QLinearize { node: Coord, area: Option<Region> },
    Search(SearchRequest),
    SearchResult { request_id: u64, result: Coord },
}

impl Message {
    pub fn kind(&self) -> MessageKind {
        match self {
            Message::Linearize { .. } => MessageKind::Linearize,
            Message::QLinearize { .. } => MessageKind::QLinearize,
            Message::Search(_) => MessageKind::Search,
            Message::SearchResult { .. } => MessageKind::SearchResult,
        }
    }

    /// Every coordinate the message carries (its implicit edges).
    pub fn payload_coords(&self) -> Vec<&Coord> {
        match self {
            Message::Linearize { node } | Message::QLinearize { node, .. } => vec![node],
            Message::Search(req) => {
                let mut out = vec![&req.initiator];
                out.extend(req.trail.iter());
                out
            }
            Message::SearchResult { result, .. } => vec![result],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MessageKind {
    Linearize,
    QLinearize,
    Search,
    SearchResult,
}

impl MessageKind {
    pub const ALL: [MessageKind; 4] = [
        MessageKind::Linearize,
        MessageKind::QLinearize,
        MessageKind::Search,
        MessageKind::SearchResult,
    ];

    pub fn label(self) -> &'static str {
        match self {
            MessageKind::Linearize => "LINEARIZE",
            MessageKind::QLinearize => "QLINEARIZE",
            MessageKind::Search => "SEARCH",
            MessageKind::SearchResult => "SEARCHRESULT",
        }
    }
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Message::Linearize { node } => write!(f, "LINEARIZE({node})"),
            Message::QLinearize { node, area } => match area {
                Some(a) => write!(f, "QLINEARIZE({node}, depth {} at {:?})", a.depth(), a.bounds()),
                None => write!(f, "QLINEARIZE({node}, NONE)"),
            },
            Message::Search(r) => write!(
                f,
                "SEARCH(#{} from {} for {}, hops {})",
                r.request_id, r.initiator, r.target, r.hops
            ),
            Message::SearchResult { request_id, result } => {
                write!(f, "SEARCHRESULT(#{request_id}, {result})")
            }
        }
    }
}
