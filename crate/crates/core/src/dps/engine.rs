//! Step semantics of a specification.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::schema::interp::builtin_function;
use crate::schema::value::{fnv, mix};
use crate::schema::{AnyInterpretation, Interpretation, Term, TermKind, Value};
use crate::setdef::{eval_formula, Family, SetName, System, Truth};

use super::{Dps, DpsError, DpsSystem, Func, Guard, SetExpr, Strategy, Trigger};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Quiescent,
    FuelExhausted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DpsStep {
    pub step: usize,
    pub applied: Vec<String>,
    pub updated: Vec<String>,
    /// Digest of the family after the step.
    pub digest: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DpsRun {
    pub family: Family,
    pub steps: Vec<DpsStep>,
    pub status: Status,
    /// System applications, nested ones included.
    pub applications: u64,
}

impl DpsRun {
    pub fn set(&self, name: &str) -> BTreeSet<Value> {
        get(&self.family, name)
    }
}

pub(crate) fn get(f: &Family, name: &str) -> BTreeSet<Value> {
    f.get(&SetName::plain(name)).cloned().unwrap_or_default()
}

fn put(f: &mut Family, name: &str, s: BTreeSet<Value>) {
    if s.is_empty() {
        f.remove(&SetName::plain(name));
    } else {
        f.insert(SetName::plain(name), s);
    }
}

pub fn digest(f: &Family) -> u64 {
    let mut h = 0x5EED;
    for (n, s) in f {
        h = mix(h ^ fnv(7, n.to_string().as_bytes()));
        for v in s {
            h = mix(h ^ v.stable_hash());
        }
    }
    h
}

/// Element `v` tagged with a counter so equal values stay distinct.
pub fn token(id: i64, v: Value) -> Value {
    Value::Term(Term::app("tok", vec![Value::int(id), v]))
}

fn untag(v: &Value) -> (Value, Value) {
    if let Value::Term(t) = v {
        if let TermKind::App(f, args) = t.kind() {
            if &**f == "tok" && args.len() == 2 {
                return (args[0].clone(), args[1].clone());
            }
        }
    }
    (v.clone(), v.clone())
}

/// The value carried by a token; other values are returned as they are.
pub fn token_value(v: &Value) -> Value {
    untag(v).1
}

/// Seeded choice shared by the single-step strategy and the Petri firing
/// sequence.
pub fn pick(seed: u64, step: usize, n: usize) -> usize {
    ChaCha8Rng::seed_from_u64(seed ^ mix(step as u64)).gen_range(0..n)
}

struct Fuel {
    left: u64,
    used: u64,
}

impl Fuel {
    fn take(&mut self) -> bool {
        if self.left == 0 {
            return false;
        }
        self.left -= 1;
        self.used += 1;
        true
    }
}

fn guard_holds(g: &Guard, f: &Family) -> Result<bool, DpsError> {
    match g {
        Guard::AtLeast(n, k) => Ok(get(f, n).len() >= *k),
        Guard::Holds(formula) => {
            let mut names = Vec::new();
            formula.domains(&mut names);
            let sys = System {
                universe: Vec::new(),
                inputs: names.into_iter().map(|n| n.base).collect(),
                forms: Vec::new(),
                interp: AnyInterpretation::Concrete(Interpretation::with_builtins()),
            };
            let t = eval_formula(&sys, f, formula, &Default::default()).map_err(|e| DpsError::Invalid(e.to_string()))?;
            Ok(t == Truth::True)
        }
    }
}

fn ready(s: &DpsSystem, f: &Family, updated: &BTreeSet<String>, first: bool) -> Result<bool, DpsError> {
    if s.inputs.iter().any(|n| get(f, n).is_empty()) {
        return Ok(false);
    }
    let triggered = match s.trigger {
        Trigger::Always => true,
        Trigger::Updated if s.inputs.is_empty() => first,
        Trigger::Updated => s.inputs.iter().any(|n| updated.contains(n)),
    };
    if !triggered {
        return Ok(false);
    }
    for g in &s.guards {
        if !guard_holds(g, f)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Indices of systems applicable on `family` after the sets in `updated`
/// changed; `first` marks the first step, where the start sets count as
/// changed and systems without inputs may run.
pub fn applicable(dps: &Dps, family: &Family, updated: &BTreeSet<String>, first: bool) -> Result<Vec<usize>, DpsError> {
    let mut out = Vec::new();
    for (i, s) in dps.systems.iter().enumerate() {
        if ready(s, family, updated, first)? {
            out.push(i);
        }
    }
    Ok(out)
}

fn apply_func(f: &Func, args: &[Value]) -> Result<Value, DpsError> {
    let undefined = |name: &str| DpsError::Undefined(name.to_string());
    match f {
        Func::Zero => Ok(Value::int(0)),
        Func::Succ => builtin_function("succ", args.get(..1).ok_or_else(|| undefined("succ"))?).ok_or_else(|| undefined("succ")),
        Func::Proj(m) => args.get(m.wrapping_sub(1)).cloned().ok_or_else(|| undefined(&format!("proj {m}"))),
        Func::Builtin(name) => builtin_function(name, args).ok_or_else(|| undefined(name)),
    }
}

fn eval_expr(e: &SetExpr, f: &Family, step: usize, fuel: &mut Fuel) -> Result<Option<BTreeSet<Value>>, DpsError> {
    Ok(Some(match e {
        SetExpr::Lit(vs) => vs.iter().cloned().collect(),
        SetExpr::Apply(func, args) => {
            let mut tuples: Vec<Vec<Value>> = vec![Vec::new()];
            for a in args {
                let s = get(f, a);
                tuples = tuples
                    .into_iter()
                    .flat_map(|t| {
                        s.iter().map(move |v| {
                            let mut t = t.clone();
                            t.push(v.clone());
                            t
                        })
                    })
                    .collect();
            }
            tuples.iter().map(|t| apply_func(func, t)).collect::<Result<_, _>>()?
        }
        SetExpr::PairSum(name, seed) => {
            let mut items: Vec<Value> = get(f, name).into_iter().collect();
            if let Some(seed) = seed {
                items.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ mix(step as u64)));
            }
            let mut out = BTreeSet::new();
            for pair in items.chunks(2) {
                match pair {
                    [a, b] => {
                        let (ia, va) = untag(a);
                        let (ib, vb) = untag(b);
                        let sum = builtin_function("add", &[va, vb]).ok_or_else(|| DpsError::Undefined("plus".into()))?;
                        let id = ia.min(ib);
                        let id = id.as_i64().ok_or_else(|| DpsError::Invalid(format!("token id {id} is not an integer")))?;
                        out.insert(token(id, sum));
                    }
                    [a] => {
                        out.insert(a.clone());
                    }
                    _ => unreachable!(),
                }
            }
            out
        }
        SetExpr::Count(name, delta) => {
            let n = get(f, name).len() as i64 + delta;
            if n < 0 {
                return Err(DpsError::Invalid(format!("count of `{name}` would be {n}")));
            }
            (1..=n).map(Value::int).collect()
        }
        SetExpr::Call(inner, args) => {
            let mut start = Family::new();
            for (param, arg) in inner.start.iter().zip(args) {
                put(&mut start, param, get(f, arg));
            }
            let run = run_inner(inner, start, fuel)?;
            if run.status == Status::FuelExhausted {
                return Ok(None);
            }
            get(&run.family, "z")
        }
    }))
}

/// New values of the sets a system writes.
pub type Writes = Vec<(String, BTreeSet<Value>)>;

/// The sets a system writes when applied to `family`, or `None` when fuel
/// ran out inside a nested call.
pub fn apply_system(s: &DpsSystem, family: &Family, step: usize, fuel: u64) -> Result<Option<Writes>, DpsError> {
    apply_with(s, family, step, &mut Fuel { left: fuel, used: 0 })
}

fn apply_with(s: &DpsSystem, family: &Family, step: usize, fuel: &mut Fuel) -> Result<Option<Writes>, DpsError> {
    let mut out = Vec::new();
    for (name, e) in &s.rules {
        match eval_expr(e, family, step, fuel)? {
            Some(set) => out.push((name.clone(), set)),
            None => return Ok(None),
        }
    }
    Ok(Some(out))
}

fn run_inner(dps: &Dps, start: Family, fuel: &mut Fuel) -> Result<DpsRun, DpsError> {
    dps.validate()?;
    let mut family = start;
    let mut updated: BTreeSet<String> = dps.start.iter().filter(|n| !get(&family, n).is_empty()).cloned().collect();
    let mut steps = Vec::new();
    let used_before = fuel.used;
    let finish = |family, steps, status, fuel: &Fuel| DpsRun { family, steps, status, applications: fuel.used - used_before };
    for step in 1.. {
        let ready = applicable(dps, &family, &updated, step == 1)?;
        if ready.is_empty() {
            return Ok(finish(family, steps, Status::Quiescent, fuel));
        }
        let before = family.clone();
        let mut applied = Vec::new();
        let exhausted = match dps.strategy {
            Strategy::Snapshot => {
                let mut writes: BTreeMap<String, (String, BTreeSet<Value>)> = BTreeMap::new();
                let mut out_of_fuel = false;
                for &i in &ready {
                    let s = &dps.systems[i];
                    if !fuel.take() {
                        out_of_fuel = true;
                        break;
                    }
                    let Some(w) = apply_with(s, &before, step, fuel)? else {
                        out_of_fuel = true;
                        break;
                    };
                    applied.push(s.name.clone());
                    for (n, set) in w {
                        match writes.get_mut(&n) {
                            Some((_, old)) if dps.merge_union => old.extend(set),
                            Some((first, _)) => {
                                return Err(DpsError::Conflict { name: n, first: first.clone(), second: s.name.clone() })
                            }
                            None => {
                                writes.insert(n, (s.name.clone(), set));
                            }
                        }
                    }
                }
                if !out_of_fuel {
                    for (n, (_, set)) in writes {
                        put(&mut family, &n, set);
                    }
                }
                out_of_fuel
            }
            Strategy::Sequential(seed) => {
                let mut order = ready.clone();
                if let Some(seed) = seed {
                    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ mix(step as u64)));
                }
                let mut out_of_fuel = false;
                for i in order {
                    let s = &dps.systems[i];
                    if !s.guards.iter().map(|g| guard_holds(g, &family)).collect::<Result<Vec<_>, _>>()?.iter().all(|&b| b) {
                        continue;
                    }
                    if !fuel.take() {
                        out_of_fuel = true;
                        break;
                    }
                    let Some(w) = apply_with(s, &family, step, fuel)? else {
                        out_of_fuel = true;
                        break;
                    };
                    applied.push(s.name.clone());
                    for (n, set) in w {
                        put(&mut family, &n, set);
                    }
                }
                out_of_fuel
            }
            Strategy::Single(seed) => {
                let i = match seed {
                    Some(seed) => ready[pick(seed, step, ready.len())],
                    None => ready[0],
                };
                let s = &dps.systems[i];
                if !fuel.take() {
                    true
                } else {
                    match apply_with(s, &before, step, fuel)? {
                        Some(w) => {
                            applied.push(s.name.clone());
                            for (n, set) in w {
                                put(&mut family, &n, set);
                            }
                            false
                        }
                        None => true,
                    }
                }
            }
        };
        if exhausted {
            return Ok(finish(family, steps, Status::FuelExhausted, fuel));
        }
        let names: BTreeSet<&SetName> = before.keys().chain(family.keys()).collect();
        updated = names.into_iter().filter(|n| before.get(*n) != family.get(*n)).map(|n| n.base.clone()).collect();
        steps.push(DpsStep { step, applied, updated: updated.iter().cloned().collect(), digest: digest(&family) });
    }
    unreachable!()
}

/// Runs until no system is applicable or `fuel` system applications have
/// been spent.
pub fn run_dps(dps: &Dps, start: &Family, fuel: u64) -> Result<DpsRun, DpsError> {
    let mut f = Fuel { left: fuel, used: 0 };
    run_inner(dps, start.clone(), &mut f)
}

/// Pairwise summation of `S1`: each step pairs the elements, sums each pair
/// and puts the sums back, until fewer than two remain.
pub fn summation_dps(seed: Option<u64>) -> Dps {
    let f1 = DpsSystem {
        name: "F1".into(),
        inputs: vec!["S1".into()],
        trigger: Trigger::Updated,
        guards: vec![Guard::AtLeast("S1".into(), 2)],
        rules: vec![("S1".into(), SetExpr::PairSum("S1".into(), seed))],
    };
    Dps::new(vec![f1], &["S1"])
}
