use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::value::Value;

/// Index expression `k(z1,...,zn)`; a bare simple variable is the identity
/// index and has `func == None`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IndexExpr {
    pub func: Option<String>,
    pub vars: Vec<String>,
}

impl IndexExpr {
    pub fn var(v: &str) -> Self {
        IndexExpr { func: None, vars: vec![v.to_string()] }
    }

    pub fn apply(f: &str, vars: &[&str]) -> Self {
        IndexExpr { func: Some(f.to_string()), vars: vars.iter().map(|s| s.to_string()).collect() }
    }
}

impl fmt::Display for IndexExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.func {
            None => write!(f, "{}", self.vars[0]),
            Some(g) => write!(f, "{g}({})", self.vars.join(",")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variable {
    Simple(String),
    Indexed { array: String, index: Vec<IndexExpr> },
}

impl Variable {
    pub fn simple(name: &str) -> Self {
        Variable::Simple(name.to_string())
    }

    pub fn indexed(array: &str, index: Vec<IndexExpr>) -> Self {
        Variable::Indexed { array: array.to_string(), index }
    }

    /// Name of the simple variable or the array.
    pub fn base(&self) -> &str {
        match self {
            Variable::Simple(s) => s,
            Variable::Indexed { array, .. } => array,
        }
    }

    /// Simple variables occurring in index positions.
    pub fn index_vars(&self) -> Vec<&str> {
        match self {
            Variable::Simple(_) => vec![],
            Variable::Indexed { index, .. } => index.iter().flat_map(|e| e.vars.iter().map(|s| s.as_str())).collect(),
        }
    }

    pub fn is_indexed(&self) -> bool {
        matches!(self, Variable::Indexed { .. })
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variable::Simple(s) => write!(f, "{s}"),
            Variable::Indexed { array, index } => {
                write!(f, "{array}[")?;
                for (i, e) in index.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{e}")?;
                }
                write!(f, "]")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operand {
    Var(Variable),
    /// Integer, string or label literal.
    Lit(Value),
}

impl Operand {
    pub fn var(&self) -> Option<&Variable> {
        match self {
            Operand::Var(v) => Some(v),
            Operand::Lit(_) => None,
        }
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Var(v) => write!(f, "{v}"),
            Operand::Lit(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InstrKind {
    Assign {
        target: Variable,
        func: String,
        args: Vec<Operand>,
        next: String,
    },
    Cond {
        pred: String,
        args: Vec<Operand>,
        then_to: String,
        else_to: String,
    },
    /// `do body while pred(args) then next`
    Loop {
        body: String,
        pred: String,
        args: Vec<Operand>,
        next: String,
    },
    /// `do body then next`
    Call {
        body: String,
        next: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instruction {
    pub label: String,
    pub kind: InstrKind,
}

impl Instruction {
    pub fn assign(label: &str, target: Variable, func: &str, args: Vec<Operand>, next: &str) -> Self {
        Instruction { label: label.into(), kind: InstrKind::Assign { target, func: func.into(), args, next: next.into() } }
    }

    pub fn cond(label: &str, pred: &str, args: Vec<Operand>, then_to: &str, else_to: &str) -> Self {
        Instruction {
            label: label.into(),
            kind: InstrKind::Cond { pred: pred.into(), args, then_to: then_to.into(), else_to: else_to.into() },
        }
    }

    pub fn call(label: &str, body: &str, next: &str) -> Self {
        Instruction { label: label.into(), kind: InstrKind::Call { body: body.into(), next: next.into() } }
    }

    pub fn successors(&self) -> Vec<&str> {
        match &self.kind {
            InstrKind::Assign { next, .. } | InstrKind::Loop { next, .. } | InstrKind::Call { next, .. } => vec![next],
            InstrKind::Cond { then_to, else_to, .. } => vec![then_to, else_to],
        }
    }

    pub fn successors_mut(&mut self) -> Vec<&mut String> {
        match &mut self.kind {
            InstrKind::Assign { next, .. } | InstrKind::Loop { next, .. } | InstrKind::Call { next, .. } => vec![next],
            InstrKind::Cond { then_to, else_to, .. } => vec![then_to, else_to],
        }
    }

    /// Procedure invoked by a loop or call instruction.
    pub fn callee(&self) -> Option<&str> {
        match &self.kind {
            InstrKind::Loop { body, .. } | InstrKind::Call { body, .. } => Some(body),
            _ => None,
        }
    }

    /// Every variable occurrence: target first, then operands.
    pub fn variables(&self) -> Vec<&Variable> {
        match &self.kind {
            InstrKind::Assign { target, args, .. } => {
                std::iter::once(target).chain(args.iter().filter_map(Operand::var)).collect()
            }
            InstrKind::Cond { args, .. } | InstrKind::Loop { args, .. } => args.iter().filter_map(Operand::var).collect(),
            InstrKind::Call { .. } => vec![],
        }
    }
}

fn write_args(f: &mut fmt::Formatter<'_>, args: &[Operand]) -> fmt::Result {
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{a}")?;
    }
    Ok(())
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.label)?;
        match &self.kind {
            InstrKind::Assign { target, func, args, next } => {
                write!(f, "{target} = ")?;
                if func == "id" && args.len() == 1 {
                    write!(f, "{}", args[0])?;
                } else {
                    write!(f, "{func}(")?;
                    write_args(f, args)?;
                    write!(f, ")")?;
                }
                write!(f, " then {next}")
            }
            InstrKind::Cond { pred, args, then_to, else_to } => {
                write!(f, "if {pred}(")?;
                write_args(f, args)?;
                write!(f, ") then {then_to} else {else_to}")
            }
            InstrKind::Loop { body, pred, args, next } => {
                write!(f, "do {body} while {pred}(")?;
                write_args(f, args)?;
                write!(f, ") then {next}")
            }
            InstrKind::Call { body, next } => write!(f, "do {body} then {next}"),
        }
    }
}

/// A schema level: the main program or one named sub-schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Procedure {
    pub name: String,
    pub start: String,
    pub instrs: Vec<Instruction>,
    /// Labels declared with `halt`. A well-formed level has exactly one.
    pub finals: Vec<String>,
}

impl Procedure {
    pub fn new(name: &str, start: &str, final_label: &str) -> Self {
        Procedure { name: name.into(), start: start.into(), instrs: vec![], finals: vec![final_label.into()] }
    }

    pub fn get(&self, label: &str) -> Option<&Instruction> {
        self.instrs.iter().find(|i| i.label == label)
    }

    pub fn get_mut(&mut self, label: &str) -> Option<&mut Instruction> {
        self.instrs.iter_mut().find(|i| i.label == label)
    }

    pub fn final_label(&self) -> &str {
        &self.finals[0]
    }

    pub fn is_final(&self, label: &str) -> bool {
        self.finals.iter().any(|f| f == label)
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.instrs.iter().map(|i| i.label.as_str()).chain(self.finals.iter().map(|s| s.as_str()))
    }

    /// Instruction labels in a topological order of the successor relation,
    /// ties broken by position in the source. `None` if there is a cycle.
    pub fn topo_order(&self) -> Option<Vec<String>> {
        let pos: BTreeMap<&str, usize> = self.instrs.iter().enumerate().map(|(i, x)| (x.label.as_str(), i)).collect();
        let mut indeg = vec![0usize; self.instrs.len()];
        for ins in &self.instrs {
            for s in ins.successors() {
                if let Some(&j) = pos.get(s) {
                    indeg[j] += 1;
                }
            }
        }
        let mut ready: BTreeSet<usize> = (0..self.instrs.len()).filter(|&i| indeg[i] == 0).collect();
        let mut out = Vec::with_capacity(self.instrs.len());
        while let Some(&i) = ready.iter().next() {
            ready.remove(&i);
            out.push(self.instrs[i].label.clone());
            for s in self.instrs[i].successors() {
                if let Some(&j) = pos.get(s) {
                    indeg[j] -= 1;
                    if indeg[j] == 0 {
                        ready.insert(j);
                    }
                }
            }
        }
        (out.len() == self.instrs.len()).then_some(out)
    }

    fn fmt_body(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for ins in &self.instrs {
            writeln!(f, "{ins}")?;
        }
        for l in &self.finals {
            writeln!(f, "{l}: halt")?;
        }
        Ok(())
    }
}

pub const MAIN: &str = "main";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    pub main: Procedure,
    pub procs: BTreeMap<String, Procedure>,
    /// Auxiliary variables excluded from memory comparison.
    pub aux: BTreeSet<String>,
}

impl Schema {
    pub fn proc(&self, name: &str) -> Option<&Procedure> {
        if name == MAIN {
            Some(&self.main)
        } else {
            self.procs.get(name)
        }
    }

    pub fn proc_mut(&mut self, name: &str) -> Option<&mut Procedure> {
        if name == MAIN {
            Some(&mut self.main)
        } else {
            self.procs.get_mut(name)
        }
    }

    pub fn levels(&self) -> impl Iterator<Item = &Procedure> {
        std::iter::once(&self.main).chain(self.procs.values())
    }

    /// Finds the procedure holding an instruction with this input label.
    pub fn locate(&self, label: &str) -> Option<(&Procedure, &Instruction)> {
        self.levels().find_map(|p| p.get(label).map(|i| (p, i)))
    }

    pub fn instruction_count(&self) -> usize {
        self.levels().map(|p| p.instrs.len()).sum()
    }

    /// Every label in use at any level.
    pub fn all_labels(&self) -> BTreeSet<String> {
        self.levels().flat_map(|p| p.labels().map(String::from)).collect()
    }

    /// Every simple variable, array name and procedure name.
    pub fn all_names(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self.aux.iter().cloned().collect();
        for p in self.levels() {
            out.insert(p.name.clone());
            for ins in &p.instrs {
                for v in ins.variables() {
                    out.insert(v.base().to_string());
                    out.extend(v.index_vars().into_iter().map(String::from));
                }
            }
        }
        out
    }

    /// Depth of loop nesting reachable from the main level.
    pub fn loop_depth(&self) -> usize {
        fn depth(s: &Schema, p: &Procedure, guard: usize) -> usize {
            if guard == 0 {
                return 0;
            }
            p.instrs
                .iter()
                .filter_map(|i| match &i.kind {
                    InstrKind::Loop { body, .. } => s.procs.get(body).map(|b| 1 + depth(s, b, guard - 1)),
                    InstrKind::Call { body, .. } => s.procs.get(body).map(|b| depth(s, b, guard - 1)),
                    _ => None,
                })
                .max()
                .unwrap_or(0)
        }
        depth(self, &self.main, self.procs.len() + 1)
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.aux.is_empty() {
            writeln!(f, "aux {}", self.aux.iter().cloned().collect::<Vec<_>>().join(", "))?;
        }
        writeln!(f, "start {}", self.main.start)?;
        self.main.fmt_body(f)?;
        for p in self.procs.values() {
            writeln!(f, "proc {} start {}", p.name, p.start)?;
            p.fmt_body(f)?;
        }
        Ok(())
    }
}
