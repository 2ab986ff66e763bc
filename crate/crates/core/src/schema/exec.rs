use std::collections::BTreeSet;

use super::ast::{IndexExpr, InstrKind, Operand, Procedure, Schema, Variable, MAIN};
use super::interp::{builtin_predicate, Cell, Memory, Semantics};
use super::validate::{validate_l, ValidationReport};
use super::value::Value;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Halted,
    /// A function, predicate or cell had no value at `label`.
    Undefined {
        label: String,
        reason: String,
    },
    FuelExhausted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub label: String,
    /// Iteration numbers (from 1) of the enclosing loops, outermost first.
    pub iters: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionResult {
    pub outcome: Outcome,
    pub memory: Memory,
    pub trace: Vec<Step>,
    pub fuel_used: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExecError {
    #[error("not an L-schema: {0}")]
    NotLSchema(ValidationReport),
    #[error("fuel must be positive")]
    NoFuel,
}

/// One array access observed during a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Access<'a> {
    pub label: &'a str,
    pub array: &'a str,
    pub index: &'a [Value],
    pub write: bool,
    /// Values of the simple variables in the index expressions, in order.
    pub vars: &'a [Value],
}

/// Runs a validated L-schema from its start label.
pub fn execute(schema: &Schema, sem: &dyn Semantics, fuel: u64) -> Result<ExecutionResult, ExecError> {
    let report = validate_l(schema);
    if !report.is_l_schema() {
        return Err(ExecError::NotLSchema(report));
    }
    if fuel == 0 {
        return Err(ExecError::NoFuel);
    }
    Ok(run_procedure(schema, MAIN, sem, Memory::new(), fuel, None))
}

/// Runs one level of a schema on a given memory without validation. The
/// caller is responsible for passing an L-schema.
pub fn run_procedure(
    schema: &Schema,
    proc_name: &str,
    sem: &dyn Semantics,
    memory: Memory,
    fuel: u64,
    observer: Option<&mut dyn FnMut(&Access<'_>)>,
) -> ExecutionResult {
    let mut m = Machine { schema, sem, memory, trace: vec![], fuel, used: 0, iters: vec![], observer };
    let Some(p) = schema.proc(proc_name) else {
        return ExecutionResult {
            outcome: Outcome::Undefined { label: String::new(), reason: format!("unknown procedure `{proc_name}`") },
            memory: m.memory,
            trace: m.trace,
            fuel_used: 0,
        };
    };
    let r = m.run(p);
    let outcome = match r {
        Ok(()) => {
            m.trace.push(Step { label: p.final_label().to_string(), iters: vec![] });
            Outcome::Halted
        }
        Err(Stop::Undefined(label, reason)) => Outcome::Undefined { label, reason },
        Err(Stop::Fuel) => Outcome::FuelExhausted,
    };
    ExecutionResult { outcome, memory: m.memory, trace: m.trace, fuel_used: m.used }
}

enum Stop {
    Undefined(String, String),
    Fuel,
}

struct Machine<'s, 'o> {
    schema: &'s Schema,
    sem: &'s dyn Semantics,
    memory: Memory,
    trace: Vec<Step>,
    fuel: u64,
    used: u64,
    iters: Vec<u64>,
    observer: Option<&'o mut dyn FnMut(&Access<'_>)>,
}

impl<'s> Machine<'s, '_> {
    fn tick(&mut self, label: &str) -> Result<(), Stop> {
        if self.used >= self.fuel {
            return Err(Stop::Fuel);
        }
        self.used += 1;
        self.trace.push(Step { label: label.to_string(), iters: self.iters.clone() });
        Ok(())
    }

    fn run(&mut self, p: &'s Procedure) -> Result<(), Stop> {
        let mut label = p.start.clone();
        loop {
            if p.is_final(&label) {
                return Ok(());
            }
            let Some(ins) = p.get(&label) else {
                return Err(Stop::Undefined(label.clone(), format!("no instruction labelled `{label}`")));
            };
            match &ins.kind {
                InstrKind::Assign { target, func, args, next } => {
                    self.tick(&ins.label)?;
                    let vals = self.operands(&ins.label, args)?;
                    let v = if func == "id" && vals.len() == 1 { vals.into_iter().next() } else { self.sem.apply(func, &vals) };
                    let v = v.ok_or_else(|| undef(&ins.label, format!("`{func}` undefined on these arguments")))?;
                    let cell = self.cell(&ins.label, target, true)?;
                    self.memory.insert(cell, v);
                    label = next.clone();
                }
                InstrKind::Cond { pred, args, then_to, else_to } => {
                    self.tick(&ins.label)?;
                    let b = self.test(&ins.label, pred, args)?;
                    label = if b { then_to.clone() } else { else_to.clone() };
                }
                InstrKind::Loop { body, pred, args, next } => {
                    let b = self.body(&ins.label, body)?;
                    self.iters.push(0);
                    loop {
                        *self.iters.last_mut().expect("loop frame") += 1;
                        self.run(b)?;
                        self.tick(&ins.label)?;
                        if !self.test(&ins.label, pred, args)? {
                            break;
                        }
                    }
                    self.iters.pop();
                    label = next.clone();
                }
                InstrKind::Call { body, next } => {
                    let b = self.body(&ins.label, body)?;
                    self.run(b)?;
                    label = next.clone();
                }
            }
        }
    }

    fn body(&self, label: &str, name: &str) -> Result<&'s Procedure, Stop> {
        let schema: &'s Schema = self.schema;
        schema.procs.get(name).ok_or_else(|| undef(label, format!("unknown procedure `{name}`")))
    }

    fn test(&mut self, label: &str, pred: &str, args: &[Operand]) -> Result<bool, Stop> {
        let vals = self.operands(label, args)?;
        let b = if pred == "eq" && vals.len() == 2 { builtin_predicate("eq", &vals) } else { self.sem.test(pred, &vals) };
        b.ok_or_else(|| undef(label, format!("`{pred}` undefined on these arguments")))
    }

    fn operands(&mut self, label: &str, args: &[Operand]) -> Result<Vec<Value>, Stop> {
        args.iter()
            .map(|a| match a {
                Operand::Lit(v) => Ok(v.clone()),
                Operand::Var(v) => self.read(label, v),
            })
            .collect()
    }

    fn read(&mut self, label: &str, v: &Variable) -> Result<Value, Stop> {
        let cell = self.cell(label, v, false)?;
        if let Some(x) = self.memory.get(&cell) {
            return Ok(x.clone());
        }
        self.sem.start_value(&cell).ok_or_else(|| undef(label, format!("cell `{cell}` is empty")))
    }

    fn simple(&self, label: &str, name: &str) -> Result<Value, Stop> {
        let cell = Cell::Simple(name.to_string());
        if let Some(x) = self.memory.get(&cell) {
            return Ok(x.clone());
        }
        self.sem.start_value(&cell).ok_or_else(|| undef(label, format!("cell `{name}` is empty")))
    }

    fn index(&self, label: &str, e: &IndexExpr, seen: &mut Vec<Value>) -> Result<Value, Stop> {
        let vals: Vec<Value> = e.vars.iter().map(|v| self.simple(label, v)).collect::<Result<_, _>>()?;
        seen.extend(vals.iter().cloned());
        match &e.func {
            None => Ok(vals.into_iter().next().expect("identity index has one variable")),
            Some(f) if f == "id" && vals.len() == 1 => Ok(vals.into_iter().next().expect("one value")),
            Some(f) => self.sem.apply(f, &vals).ok_or_else(|| undef(label, format!("index function `{f}` undefined"))),
        }
    }

    fn cell(&mut self, label: &str, v: &Variable, write: bool) -> Result<Cell, Stop> {
        match v {
            Variable::Simple(s) => Ok(Cell::Simple(s.clone())),
            Variable::Indexed { array, index } => {
                let mut vars = Vec::new();
                let idx: Vec<Value> = index.iter().map(|e| self.index(label, e, &mut vars)).collect::<Result<_, _>>()?;
                if let Some(obs) = self.observer.as_mut() {
                    obs(&Access { label, array, index: &idx, write, vars: &vars });
                }
                Ok(Cell::Indexed(array.clone(), idx))
            }
        }
    }
}

fn undef(label: &str, reason: String) -> Stop {
    Stop::Undefined(label.to_string(), reason)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Equal,
    Different(String),
    /// One side ran out of fuel.
    Indeterminate,
}

/// Compares two runs under one interpretation: equal when both halt with
/// the same memory outside auxiliary variables, or both end without result.
pub fn runs_equal(s1: &Schema, s2: &Schema, sem: &dyn Semantics, fuel: u64) -> Result<Verdict, ExecError> {
    let r1 = execute(s1, sem, fuel)?;
    let r2 = execute(s2, sem, fuel)?;
    Ok(compare_results(&r1, &r2, &s1.aux.union(&s2.aux).cloned().collect()))
}

pub fn compare_results(r1: &ExecutionResult, r2: &ExecutionResult, aux: &BTreeSet<String>) -> Verdict {
    match (&r1.outcome, &r2.outcome) {
        (Outcome::FuelExhausted, _) | (_, Outcome::FuelExhausted) => Verdict::Indeterminate,
        (Outcome::Undefined { .. }, Outcome::Undefined { .. }) => Verdict::Equal,
        (Outcome::Halted, Outcome::Halted) => {
            let keep = |m: &Memory| -> Memory {
                m.iter().filter(|(c, _)| !aux.contains(c.base())).map(|(c, v)| (c.clone(), v.clone())).collect()
            };
            let (a, b) = (keep(&r1.memory), keep(&r2.memory));
            if a == b {
                Verdict::Equal
            } else {
                let diff = a
                    .iter()
                    .find(|(c, v)| b.get(c) != Some(v))
                    .map(|(c, v)| format!("{c}: {v} vs {}", b.get(c).map(|x| x.to_string()).unwrap_or("empty".into())))
                    .or_else(|| b.keys().find(|c| !a.contains_key(c)).map(|c| format!("{c}: empty vs written")))
                    .unwrap_or_default();
                Verdict::Different(diff)
            }
        }
        (o1, o2) => Verdict::Different(format!("{o1:?} vs {o2:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::interp::{Interpretation, StandardInterpretation};
    use crate::schema::parse_schema;

    #[test]
    fn constant_assign_halts() {
        let s = parse_schema("start m0\nm0: x = o() then m1\nm1: halt").unwrap();
        let mut i = Interpretation::default();
        i.set_function("o", vec![], Value::int(0));
        let r = execute(&s, &i, 10).unwrap();
        assert_eq!(r.outcome, Outcome::Halted);
        assert_eq!(r.memory.get(&Cell::Simple("x".into())), Some(&Value::int(0)));
        assert_eq!(r.trace.last().unwrap().label, "m1");
    }

    #[test]
    fn term_model_path() {
        let s = parse_schema("start m0\nm0: x = f(x) then m1\nm1: x = f(x) then m2\nm2: halt").unwrap();
        let mut si = StandardInterpretation::default();
        si.start.insert(Cell::Simple("x".into()), Value::atom("q1"));
        let r = execute(&s, &si, 10).unwrap();
        assert_eq!(r.memory[&Cell::Simple("x".into())].to_string(), "f(f(q1))");
    }

    #[test]
    fn strict_empty_diagram_is_undefined() {
        let s = parse_schema("start m0\nm0: if p(x) then m1 else m1\nm1: halt").unwrap();
        let r = execute(&s, &StandardInterpretation::default(), 10).unwrap();
        assert!(matches!(r.outcome, Outcome::Undefined { ref label, .. } if label == "m0"));
    }

    #[test]
    fn fuel_is_distinct_from_undefined() {
        let s = parse_schema(
            "start m0\nm0: do B while lt(i, n) then m1\nm1: halt\nproc B start b0\nb0: i = succ(i) then b1\nb1: halt",
        )
        .unwrap();
        let mut i = Interpretation::with_builtins();
        i.set("i", Value::int(0)).set("n", Value::int(100));
        let r = execute(&s, &i, 20).unwrap();
        assert_eq!(r.outcome, Outcome::FuelExhausted);
        let r = execute(&s, &i, 1000).unwrap();
        assert_eq!(r.outcome, Outcome::Halted);
        assert_eq!(r.fuel_used, 200);
        assert_eq!(r.trace[1].iters, vec![1]);
        assert_eq!(r.trace[3].iters, vec![2]);
    }

    #[test]
    fn empty_cell_is_undefined() {
        let s = parse_schema("start m0\nm0: x = add(y, 1) then m1\nm1: halt").unwrap();
        let r = execute(&s, &Interpretation::with_builtins(), 10).unwrap();
        assert!(matches!(r.outcome, Outcome::Undefined { .. }));
    }

    #[test]
    fn non_l_schema_rejected() {
        let s = parse_schema("start m0\nm0: x = f(x) then m0\nm1: halt").unwrap();
        assert!(matches!(execute(&s, &Interpretation::default(), 10), Err(ExecError::NotLSchema(_))));
    }

    #[test]
    fn runs_equal_cases() {
        let a = parse_schema("start m0\nm0: x = f(x) then m1\nm1: halt").unwrap();
        let b = parse_schema("start m0\nm0: x = f(x) then m1\nm1: y = g(x) then m2\nm2: halt").unwrap();
        let si = StandardInterpretation::total(1);
        assert_eq!(runs_equal(&a, &a, &si, 10).unwrap(), Verdict::Equal);
        assert!(matches!(runs_equal(&a, &b, &si, 10).unwrap(), Verdict::Different(_)));
    }
}
