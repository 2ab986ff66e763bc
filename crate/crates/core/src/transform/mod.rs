//! Loop transformations: forward orientation, controller/kernel separation
//! and the bracket-depth witness for the controller count.

pub mod forward;
pub mod separate;
pub mod witness;

use std::collections::{BTreeMap, BTreeSet};

use crate::schema::{Procedure, Schema, ValidationReport};

pub use forward::{forward_violations, is_forward_oriented, to_forward_oriented};
pub use separate::{check_separated, separate_loop, SeparatedLoop, Separation};
pub use witness::controller_depth_witness;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransformError {
    #[error("not an L-schema: {0}")]
    NotLSchema(ValidationReport),
    #[error("no loop instruction labelled `{0}`")]
    NoSuchLoop(String),
    #[error("loop `{0}` is not forward oriented")]
    NotForward(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

/// Generator of names not yet used in a schema.
pub(crate) struct Fresh {
    used: BTreeSet<String>,
}

impl Fresh {
    pub fn for_schema(s: &Schema) -> Self {
        let mut used = s.all_labels();
        used.extend(s.all_names());
        used.extend(s.procs.keys().cloned());
        Fresh { used }
    }

    pub fn name(&mut self, base: &str) -> String {
        let mut n = 1;
        let mut cand = base.to_string();
        while self.used.contains(&cand) {
            n += 1;
            cand = format!("{base}_{n}");
        }
        self.used.insert(cand.clone());
        cand
    }
}

/// Strict ancestors of every instruction label within one procedure.
pub(crate) fn ancestors(p: &Procedure) -> BTreeMap<String, BTreeSet<String>> {
    let order = p.topo_order().unwrap_or_default();
    let mut anc: BTreeMap<String, BTreeSet<String>> = order.iter().map(|l| (l.clone(), BTreeSet::new())).collect();
    for l in &order {
        let ins = p.get(l).expect("label in procedure");
        let mine = anc[l].clone();
        for s in ins.successors() {
            if let Some(set) = anc.get_mut(s) {
                set.extend(mine.iter().cloned());
                set.insert(l.clone());
            }
        }
    }
    anc
}

/// Procedures reachable from main, others dropped.
pub(crate) fn prune_unreachable(s: &mut Schema) {
    let mut keep = BTreeSet::new();
    let mut stack: Vec<String> = s.main.instrs.iter().filter_map(|i| i.callee().map(String::from)).collect();
    while let Some(n) = stack.pop() {
        if keep.insert(n.clone()) {
            if let Some(p) = s.procs.get(&n) {
                stack.extend(p.instrs.iter().filter_map(|i| i.callee().map(String::from)));
            }
        }
    }
    s.procs.retain(|k, _| keep.contains(k));
}
