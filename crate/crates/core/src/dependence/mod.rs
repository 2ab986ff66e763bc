//! Connection equations, programs with predecessors, dependence cones and
//! wavefront schedules.

pub mod equation;
pub mod nest;
pub mod poly;
pub mod predecessor;

pub use equation::{
    build_connection_equations, solve_connection, ConnectionEquation, EquationClass, Site, Solution, SolveVerdict, DEFAULT_BUDGET,
};
pub use nest::{parse_loop_nest, AccessSite, LoopNest};
pub use poly::{parse_poly_str, Poly};
pub use predecessor::{
    check_parallel_set, dependence_cone, execute_sequential, execute_wavefront, fmt_point, parse_predecessor_program,
    ready_wavefronts, DependencePlan, IterationPoint, PredecessorProgram,
};

use crate::text::ParseError;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DepError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("not an L-schema: {0}")]
    NotLSchema(String),
    #[error("loop nest is not forward oriented")]
    NotForward,
    #[error("{0}")]
    Bounds(String),
    #[error("enumeration exceeds the budget of {budget} points")]
    Budget { budget: u64 },
    #[error("integer overflow while solving")]
    Overflow,
    #[error("cyclic dependence: {to} reads {from}, which is not strictly earlier")]
    Cyclic { from: String, to: String },
    #[error("rejected: {0}")]
    Rejected(String),
    #[error("missing boundary datum at {0}")]
    MissingBoundary(String),
    #[error("point {0} is outside the domain")]
    OutOfDomain(String),
    #[error("{0} read by {1} before it was computed")]
    NotReady(String, String),
    #[error("kernel: {0}")]
    Kernel(String),
}
