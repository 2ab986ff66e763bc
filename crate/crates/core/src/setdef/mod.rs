//! Systems of named-set definitions: the four forms, agreed and selected
//! families, selection algorithms for one-form systems, a propositional
//! encoding and a small dictionary algebra.

pub mod ast;
pub mod dict;
pub mod encode;
pub mod eval;
pub mod solve;

use crate::text::ParseError;

pub use ast::{parse_system, Body, Form, Formula, Kind, NameRef, Quant, SetName, System, TermExpr, UNIVERSE};
pub use dict::{flatten, hierarchy, DictError, Dictionary, Entry, FlatLine};
pub use encode::{horn_export, to_boolean_constraints, BoolExpr, Constraints, Horn, HornClause};
pub use eval::{
    brute_force_variants, check_agreed, check_selected, complete, eval_formula, family_from, show_family, AgreedReport, Family,
    SelectedReport, Truth, Variants, DEFAULT_CAP,
};
pub use solve::{prefix_len, random_system, solve_120, solve_130, Solution120, Solution130, Verdict};

#[derive(Debug, thiserror::Error)]
pub enum SetdefError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Invalid(String),
    #[error("set name `{0}` is not defined")]
    Unresolved(String),
    #[error("not in class: {0}")]
    NotInClass(String),
    #[error("{bits} free membership bits exceed the cap of {cap}")]
    Cap { bits: usize, cap: usize },
    #[error("{0}")]
    Unsupported(String),
    #[error("predicate is undefined at {0}")]
    VoidPredicate(String),
}
