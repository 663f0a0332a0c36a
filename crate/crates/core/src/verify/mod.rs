//! Global oracles and runtime monitors.

mod monitor;
mod oracle;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use monitor::{
    depth_diameter_sq_units, hop_bound, ClosureMonitor, ConnectivityMonitor, HopMonitor, LedgerEntry, MonitorConfig,
    Monitors, QMonotoneMonitor, SearchLedger, SearchMonitor,
};
pub use oracle::{NodeTarget, Oracle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationKind {
    Legitimacy,
    Closure,
    MonotonicGeo,
    MonotonicStd,
    QMonotone,
    Connectivity,
    HopBound,
    DistanceBound,
}

impl ViolationKind {
    pub const ALL: [ViolationKind; 8] = [
        ViolationKind::Legitimacy,
        ViolationKind::Closure,
        ViolationKind::MonotonicGeo,
        ViolationKind::MonotonicStd,
        ViolationKind::QMonotone,
        ViolationKind::Connectivity,
        ViolationKind::HopBound,
        ViolationKind::DistanceBound,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ViolationKind::Legitimacy => "LEGITIMACY",
            ViolationKind::Closure => "CLOSURE",
            ViolationKind::MonotonicGeo => "MONOTONIC_GEO",
            ViolationKind::MonotonicStd => "MONOTONIC_STD",
            ViolationKind::QMonotone => "Q_MONOTONE",
            ViolationKind::Connectivity => "CONNECTIVITY",
            ViolationKind::HopBound => "HOP_BOUND",
            ViolationKind::DistanceBound => "DISTANCE_BOUND",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub round: u64,
    pub details: String,
}

impl Violation {
    pub fn new(kind: ViolationKind, round: u64, details: impl Into<String>) -> Self {
        Violation {
            kind,
            round,
            details: details.into(),
        }
    }
}

/// JSON-lines, one violation per line.
pub fn write_violations<W: Write>(violations: &[Violation], mut sink: W) -> std::io::Result<()> {
    for v in violations {
        serde_json::to_writer(&mut sink, v)?;
        sink.write_all(b"\n")?;
    }
    sink.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_labels_match_serde() {
        for k in ViolationKind::ALL {
            assert_eq!(serde_json::to_value(k).unwrap(), k.label());
        }
    }

    #[test]
    fn jsonl_output() {
        let vs = vec![
            Violation::new(ViolationKind::Closure, 4, "x"),
            Violation::new(ViolationKind::HopBound, 5, "y"),
        ];
        let mut buf = Vec::new();
        write_violations(&vs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("{\"kind\":\"CLOSURE\",\"round\":4"));
    }
}
