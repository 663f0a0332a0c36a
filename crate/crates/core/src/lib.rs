//! Self-stabilizing quadtree overlay with monotonic searchability.
//!
//! The crate is split the same way the system is:
//!
//! * [`space`]: exact dyadic geometry. Recursive cuts of the unit d-cube,
//!   the depth-first total order over nodes, and the per-node local view
//!   (`A(v)` and the quad regions `Q(v)`).
//! * [`protocol`]: the per-node state machine (list linearization, quad-edge
//!   maintenance and greedy quad routing) as transition functions.
//! * [`sim`]: a seeded asynchronous scheduler with non-FIFO, bounded-delay
//!   delivery, scenario generation and trace/snapshot/DOT export.
//! * [`verify`]: global oracles and online monitors (legitimacy, closure,
//!   searchability, region monotonicity, connectivity, hop bounds).
//! * [`experiment`] and [`acceptance`]: seeded runs with all monitors
//!   attached, sweeps, and the fixed acceptance suite.

pub mod acceptance;
pub mod experiment;
pub mod protocol;
pub mod sim;
pub mod space;
pub mod verify;

pub use protocol::{Effects, Message, NodeState, SearchOutcome, SearchRequest};
pub use sim::{ScenarioConfig, ScheduleConfig, Simulation, SystemState};
pub use space::{Coord, DivisionTree, Region, Side, Space, SpaceError};
