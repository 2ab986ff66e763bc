//! Ring-of-modules execution: priority loops, execution diagrams,
//! equalization, sorting, handshaking and fault detection.

pub mod diagram;
pub mod equalize;
pub mod fault;
pub mod handshake;
pub mod priority;
pub mod sort;

pub use diagram::{diagram_rotating, diagram_shared, held_fragment, DiagramCell, ExecutionDiagram};
pub use equalize::{equalize, pairing, spread, EqualizeTrace, Phase};
pub use fault::{detect_fault, expected_state, Detection, FaultBehavior};
pub use handshake::{run_handshake, AState, Command, HandshakeConfig, HandshakeReport, ModuleStats, COMMANDS};
pub use priority::{independence_level, parse_priority_loop, run_priority_loop, PriorityLoop, RingError, RunMode, RunResult};
pub use sort::{ring_sort, SortTrace};
