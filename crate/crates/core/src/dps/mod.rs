//! Data processing specifications: open systems applied step by step as
//! their input sets change, with representations of partial recursive
//! functions and Petri nets.

pub mod engine;
pub mod parse;
pub mod petri;
pub mod pr;

use crate::schema::Value;
use crate::setdef::Formula;
use crate::text::ParseError;

pub use engine::{applicable, apply_system, run_dps, summation_dps, token, token_value, DpsRun, DpsStep, Status, Writes};
pub use parse::parse_dps;
pub use petri::{decode_marking, encode_marking, fire, parse_petri, petri_to_dps, random_net, Marking, PetriNet, Transition};
pub use pr::{build_pr, parse_pr, pr_start, PrSpec};

#[derive(Debug, thiserror::Error)]
pub enum DpsError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Invalid(String),
    #[error("systems {first} and {second} both write `{name}` in one step")]
    Conflict { name: String, first: String, second: String },
    #[error("function `{0}` is undefined on its arguments")]
    Undefined(String),
}

/// Functions applied element-wise over the product of argument sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Func {
    Zero,
    Succ,
    /// The m-th argument, 1-based.
    Proj(usize),
    /// An arithmetic builtin of the schema interpretations.
    Builtin(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SetExpr {
    Lit(Vec<Value>),
    Apply(Func, Vec<String>),
    /// Splits the set into pairs, sums each pair and carries an odd element.
    /// Pairs follow sorted order, or a seeded shuffle.
    PairSum(String, Option<u64>),
    /// Counter tokens `1..=|S| + delta`.
    Count(String, i64),
    /// Runs a nested specification to quiescence on the given sets and
    /// takes its `z`.
    Call(Box<Dps>, Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Guard {
    /// A closed formula over the current sets, which must be true.
    Holds(Formula),
    /// The set has at least this many elements.
    AtLeast(String, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trigger {
    /// Applicable when an input changed at the previous step.
    Updated,
    /// Applicable whenever the guard holds.
    Always,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DpsSystem {
    pub name: String,
    pub inputs: Vec<String>,
    pub trigger: Trigger,
    pub guards: Vec<Guard>,
    /// All rules read the family as it was when the system started.
    pub rules: Vec<(String, SetExpr)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Every applicable system reads the previous step's family.
    Snapshot,
    /// Applicable systems run one after another, in declared or seeded order.
    Sequential(Option<u64>),
    /// One applicable system per step, the first or a seeded choice.
    Single(Option<u64>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dps {
    pub systems: Vec<DpsSystem>,
    pub start: Vec<String>,
    pub strategy: Strategy,
    /// Under the snapshot strategy, merge same-step writes by union instead
    /// of failing.
    pub merge_union: bool,
}

impl Dps {
    pub fn new(systems: Vec<DpsSystem>, start: &[&str]) -> Self {
        Dps { systems, start: start.iter().map(|s| s.to_string()).collect(), strategy: Strategy::Snapshot, merge_union: false }
    }

    /// Systems may read the sets they write, as the summation and recursion
    /// constructions do, but may write each set once.
    pub fn validate(&self) -> Result<(), DpsError> {
        for s in &self.systems {
            let mut outs: Vec<&String> = s.rules.iter().map(|(n, _)| n).collect();
            outs.sort();
            if outs.windows(2).any(|w| w[0] == w[1]) {
                return Err(DpsError::Invalid(format!("system {} writes a set twice", s.name)));
            }
        }
        Ok(())
    }
}
