//! Program schemas: syntax, validation, io-sets and execution.

pub mod ast;
pub mod exec;
pub mod interp;
pub mod iosets;
pub mod parse;
pub mod validate;
pub mod value;

pub use ast::{IndexExpr, InstrKind, Instruction, Operand, Procedure, Schema, Variable, MAIN};
pub use exec::{execute, run_procedure, runs_equal, Access, ExecError, ExecutionResult, Outcome, Step, Verdict};
pub use interp::{
    parse_interpretation, random_standard_interpretation, AnyInterpretation, Cell, DiagramMode, Interpretation, Memory,
    Semantics, StandardInterpretation,
};
pub use iosets::{io_sets, IoSets};
pub use parse::parse_schema;
pub use validate::{validate_l, ValidationReport};
pub use value::{Term, TermKind, Value};
