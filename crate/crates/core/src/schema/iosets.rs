//! Ind / Arg / Val sets of instructions and procedures.

use std::collections::BTreeSet;

use super::ast::{InstrKind, Instruction, Operand, Procedure, Schema, Variable};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IoSets {
    /// Simple variables used inside index expressions.
    pub ind: BTreeSet<String>,
    pub arg: BTreeSet<Variable>,
    pub val: BTreeSet<Variable>,
}

impl IoSets {
    pub fn union_with(&mut self, other: &IoSets) {
        self.ind.extend(other.ind.iter().cloned());
        self.arg.extend(other.arg.iter().cloned());
        self.val.extend(other.val.iter().cloned());
    }

    /// Ind as variables, for intersection with Val.
    pub fn ind_vars(&self) -> BTreeSet<Variable> {
        self.ind.iter().map(|s| Variable::Simple(s.clone())).collect()
    }

    /// Names of simple variables written.
    pub fn val_simple(&self) -> BTreeSet<String> {
        self.val
            .iter()
            .filter_map(|v| match v {
                Variable::Simple(s) => Some(s.clone()),
                _ => None,
            })
            .collect()
    }

    /// Base names (simple variable or array) of written variables.
    pub fn val_bases(&self) -> BTreeSet<String> {
        self.val.iter().map(|v| v.base().to_string()).collect()
    }

    /// Base names of argument variables, including index variables.
    pub fn arg_bases(&self) -> BTreeSet<String> {
        self.arg.iter().map(|v| v.base().to_string()).chain(self.ind.iter().cloned()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IoError {
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("unknown procedure `{0}`")]
    UnknownProcedure(String),
}

pub fn io_sets(schema: &Schema, label: &str) -> Result<IoSets, IoError> {
    let (_, ins) = schema.locate(label).ok_or_else(|| IoError::UnknownLabel(label.to_string()))?;
    instr_io(schema, ins)
}

/// Io sets of an instruction that need not belong to the schema; callees
/// are looked up in it.
pub fn instr_io(schema: &Schema, ins: &Instruction) -> Result<IoSets, IoError> {
    let mut out = IoSets::default();
    match &ins.kind {
        InstrKind::Assign { target, args, .. } => {
            add_index_vars(&mut out.ind, target);
            add_operands(&mut out, args);
            out.val.insert(target.clone());
        }
        InstrKind::Cond { args, .. } => add_operands(&mut out, args),
        InstrKind::Loop { body, args, .. } => {
            out = proc_io(schema, body, 0)?;
            add_operands(&mut out, args);
        }
        InstrKind::Call { body, .. } => out = proc_io(schema, body, 0)?,
    }
    let ind = out.ind_vars();
    out.arg.extend(ind);
    Ok(out)
}

/// Union over every instruction of the named procedure.
pub fn proc_io(schema: &Schema, name: &str, depth: usize) -> Result<IoSets, IoError> {
    let p = schema.proc(name).ok_or_else(|| IoError::UnknownProcedure(name.to_string()))?;
    if depth > schema.procs.len() + 1 {
        return Ok(IoSets::default());
    }
    procedure_io(schema, p, depth)
}

pub fn procedure_io(schema: &Schema, p: &Procedure, depth: usize) -> Result<IoSets, IoError> {
    let mut out = IoSets::default();
    for ins in &p.instrs {
        let part = match &ins.kind {
            InstrKind::Loop { body, args, .. } => {
                let mut s = proc_io(schema, body, depth + 1)?;
                add_operands(&mut s, args);
                s
            }
            InstrKind::Call { body, .. } => proc_io(schema, body, depth + 1)?,
            _ => instr_io(schema, ins)?,
        };
        out.union_with(&part);
    }
    let ind = out.ind_vars();
    out.arg.extend(ind);
    Ok(out)
}

/// Io sets of an instruction list that need not form a procedure.
pub fn labels_io<'a>(schema: &Schema, labels: impl IntoIterator<Item = &'a str>) -> Result<IoSets, IoError> {
    let mut out = IoSets::default();
    for l in labels {
        out.union_with(&io_sets(schema, l)?);
    }
    Ok(out)
}

fn add_index_vars(ind: &mut BTreeSet<String>, v: &Variable) {
    ind.extend(v.index_vars().into_iter().map(String::from));
}

fn add_operands(out: &mut IoSets, args: &[Operand]) {
    for a in args {
        if let Operand::Var(v) = a {
            add_index_vars(&mut out.ind, v);
            out.arg.insert(v.clone());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::ast::IndexExpr;
    use crate::schema::parse_schema;

    fn s(n: &str) -> Variable {
        Variable::simple(n)
    }

    #[test]
    fn assignment_sets() {
        let sch = parse_schema("start m0\nm0: x0 = g(x1, a[k(z)]) then m1\nm1: halt").unwrap();
        let io = io_sets(&sch, "m0").unwrap();
        assert_eq!(io.ind, BTreeSet::from(["z".to_string()]));
        let a = Variable::indexed("a", vec![IndexExpr::apply("k", &["z"])]);
        assert_eq!(io.arg, BTreeSet::from([s("x1"), s("z"), a]));
        assert_eq!(io.val, BTreeSet::from([s("x0")]));
    }

    #[test]
    fn conditional_has_no_val() {
        let sch = parse_schema("start m0\nm0: if p(x1) then m1 else m1\nm1: halt").unwrap();
        let io = io_sets(&sch, "m0").unwrap();
        assert!(io.val.is_empty());
        assert_eq!(io.arg, BTreeSet::from([s("x1")]));
    }

    #[test]
    fn loop_unions_body() {
        let src = "start m0\nm0: do B while lt(i, n) then m1\nm1: halt\n\
                   proc B start b0\nb0: a[k(i)] = g(x) then b1\nb1: i = succ(i) then b2\nb2: y = h(a[k(i)]) then b3\nb3: halt";
        let sch = parse_schema(src).unwrap();
        let io = io_sets(&sch, "m0").unwrap();
        assert!(io.ind.contains("i"));
        let aw = Variable::indexed("a", vec![IndexExpr::apply("k", &["i"])]);
        assert!(io.val.contains(&aw));
        assert!(io.val.contains(&s("i")));
        assert!(io.val.contains(&s("y")));
        assert!(io.arg.contains(&s("n")));
        assert!(io.arg.contains(&s("x")));
    }

    #[test]
    fn unknown_label() {
        let sch = parse_schema("start m0: halt").unwrap();
        assert_eq!(io_sets(&sch, "zz"), Err(IoError::UnknownLabel("zz".into())));
    }
}
