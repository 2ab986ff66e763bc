//! Bracket-depth witness for the number of controllers.
//!
//! Every iteration starts from a fresh term memory: simple variables hold
//! atoms `v#n` and arrays hold self-named cells. The separated body runs
//! once under a total standard interpretation, and every array access is
//! observed. A cell read counts as one bracket level when one of its index
//! variables holds a term computed in the same iteration; the witness is
//! the deepest such nesting found in any index position.

use std::collections::BTreeMap;

use super::separate::SeparatedLoop;
use crate::schema::interp::{Cell, Memory, StandardInterpretation};
use crate::schema::value::{Term, TermKind, Value};
use crate::schema::{run_procedure, Outcome};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WitnessError {
    #[error("iteration {0} ran out of fuel")]
    Fuel(usize),
}

pub fn controller_depth_witness(sep: &SeparatedLoop, iterations: usize, seed: u64, fuel: u64) -> Result<usize, WitnessError> {
    let schema = sep.schema();
    let names = schema.all_names();
    let mut best = 0;
    for it in 0..iterations {
        let mut mem = Memory::new();
        for n in &names {
            mem.insert(Cell::Simple(n.clone()), Value::atom(&format!("{n}#{it}")));
        }
        let sem = StandardInterpretation::total(seed.wrapping_add(it as u64));
        let mut memo: BTreeMap<Term, usize> = BTreeMap::new();
        let mut deepest = 0usize;
        let mut obs = |a: &crate::schema::Access<'_>| {
            let fresh = a.vars.iter().any(|v| matches!(v, Value::Term(t) if !t.is_atom()));
            let inner = a.vars.iter().map(|v| depth(v, &memo)).max().unwrap_or(0);
            deepest = deepest.max(inner);
            if !a.write {
                let cell = Term::cell(a.array, a.index.to_vec());
                memo.insert(cell, if fresh { 1 + inner } else { 0 });
            }
        };
        let r = run_procedure(schema, &sep.body, &sem, mem, fuel, Some(&mut obs));
        if r.outcome == Outcome::FuelExhausted {
            return Err(WitnessError::Fuel(it));
        }
        best = best.max(deepest);
    }
    Ok(best)
}

fn depth(v: &Value, memo: &BTreeMap<Term, usize>) -> usize {
    let Value::Term(t) = v else { return 0 };
    match t.kind() {
        TermKind::Atom(_) => 0,
        TermKind::App(_, args) => args.iter().map(|a| depth(a, memo)).max().unwrap_or(0),
        TermKind::Cell(..) => memo.get(t).copied().unwrap_or(0),
    }
}
