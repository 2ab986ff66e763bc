use std::collections::{BTreeMap, BTreeSet};

use super::ast::{InstrKind, Schema, Variable};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    pub reason: &'static str,
    pub detail: String,
}

pub const LABEL_ORDER: &str = "label order violated";
pub const RECURSIVE: &str = "recursive procedure";
pub const MALFORMED: &str = "malformed schema";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub problems: Vec<Problem>,
}

impl ValidationReport {
    pub fn is_l_schema(&self) -> bool {
        self.problems.is_empty()
    }

    pub fn has(&self, reason: &str) -> bool {
        self.problems.iter().any(|p| p.reason == reason)
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.problems.is_empty() {
            return write!(f, "L-schema: yes");
        }
        write!(f, "L-schema: no")?;
        for p in &self.problems {
            write!(f, "\n  {}: {}", p.reason, p.detail)?;
        }
        Ok(())
    }
}

/// Checks the L-schema conditions: acyclic label order at every level and
/// no recursive procedures, plus basic well-formedness.
pub fn validate_l(schema: &Schema) -> ValidationReport {
    let mut problems = Vec::new();
    let mut push = |reason, detail: String| problems.push(Problem { reason, detail });

    let mut arity: BTreeMap<String, usize> = BTreeMap::new();
    let mut dims: BTreeMap<String, usize> = BTreeMap::new();
    let mut call_graph: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();

    for p in schema.levels() {
        if p.finals.len() != 1 {
            push(MALFORMED, format!("level `{}` has {} final labels", p.name, p.finals.len()));
        }
        let labels: BTreeSet<&str> = p.labels().collect();
        if !labels.contains(p.start.as_str()) {
            push(MALFORMED, format!("level `{}`: start label `{}` not defined", p.name, p.start));
        }
        for ins in &p.instrs {
            for s in ins.successors() {
                if !labels.contains(s) {
                    push(MALFORMED, format!("`{}` jumps to `{s}` outside level `{}`", ins.label, p.name));
                }
            }
            if let Some(callee) = ins.callee() {
                if !schema.procs.contains_key(callee) {
                    push(MALFORMED, format!("`{}` calls unknown procedure `{callee}`", ins.label));
                }
                call_graph.entry(p.name.clone()).or_default().insert(callee.to_string());
            }
            let sym = match &ins.kind {
                InstrKind::Assign { func, args, .. } => Some((func, args.len())),
                InstrKind::Cond { pred, args, .. } | InstrKind::Loop { pred, args, .. } => Some((pred, args.len())),
                InstrKind::Call { .. } => None,
            };
            if let Some((name, n)) = sym {
                if let Some(&prev) = arity.get(name) {
                    if prev != n {
                        push(MALFORMED, format!("symbol `{name}` used with arity {n} and {prev}"));
                    }
                } else {
                    arity.insert(name.clone(), n);
                }
            }
            for v in ins.variables() {
                if let Variable::Indexed { array, index } = v {
                    match dims.get(array) {
                        Some(&d) if d != index.len() => {
                            push(MALFORMED, format!("array `{array}` used with {} and {d} indexes", index.len()))
                        }
                        _ => {
                            dims.insert(array.clone(), index.len());
                        }
                    }
                }
            }
        }
        if p.topo_order().is_none() {
            push(LABEL_ORDER, format!("cycle among labels of level `{}`", p.name));
        }
    }

    for name in std::iter::once(super::ast::MAIN.to_string()).chain(schema.procs.keys().cloned()) {
        if reaches(&call_graph, &name, &name) {
            push(RECURSIVE, format!("`{name}` reaches itself through calls"));
        }
    }

    ValidationReport { problems }
}

fn reaches(graph: &BTreeMap<String, BTreeSet<String>>, from: &str, target: &str) -> bool {
    let mut stack: Vec<&str> = graph.get(from).map(|s| s.iter().map(|x| x.as_str()).collect()).unwrap_or_default();
    let mut seen = BTreeSet::new();
    while let Some(n) = stack.pop() {
        if n == target {
            return true;
        }
        if seen.insert(n) {
            if let Some(next) = graph.get(n) {
                stack.extend(next.iter().map(|x| x.as_str()));
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::parse_schema;

    #[test]
    fn straight_line_is_l() {
        let s = parse_schema("start m0\nm0: x = f(x) then m1\nm1: y = g(x) then m2\nm2: halt").unwrap();
        assert!(validate_l(&s).is_l_schema());
    }

    #[test]
    fn self_call_is_recursive() {
        let s = parse_schema("start m0\nm0: do P then m1\nm1: halt\nproc P start b0\nb0: do P then b1\nb1: halt").unwrap();
        let r = validate_l(&s);
        assert!(!r.is_l_schema());
        assert!(r.has(RECURSIVE));
    }

    #[test]
    fn back_edge_violates_order() {
        let s = parse_schema("start m0\nm0: x = f(x) then m1\nm1: if p(x) then m0 else m2\nm2: halt").unwrap();
        let r = validate_l(&s);
        assert!(r.has(LABEL_ORDER));
        assert!(!r.has(RECURSIVE));
    }

    #[test]
    fn two_finals_flagged() {
        let s = parse_schema("start m0\nm0: if p(x) then m1 else m2\nm1: halt\nm2: halt").unwrap();
        assert!(validate_l(&s).has(MALFORMED));
    }
}
