//! Propositional encoding of property systems: one variable per
//! (set name, element) pair saying the element belongs to the set.

use std::collections::BTreeSet;
use std::fmt;

use crate::schema::Value;

use super::ast::{Body, Formula, Kind, Quant, SetName, System};
use super::eval::{complete, Bindings, Ctx, Family, Truth};
use super::solve::shape;
use super::SetdefError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoolExpr {
    Const(bool),
    Var(usize),
    Not(Box<BoolExpr>),
    And(Vec<BoolExpr>),
    Or(Vec<BoolExpr>),
}

impl BoolExpr {
    pub fn negate(e: BoolExpr) -> BoolExpr {
        match e {
            BoolExpr::Const(b) => BoolExpr::Const(!b),
            BoolExpr::Not(inner) => *inner,
            other => BoolExpr::Not(Box::new(other)),
        }
    }

    fn join(xs: Vec<BoolExpr>, conj: bool) -> BoolExpr {
        let mut out = Vec::new();
        for x in xs {
            match x {
                BoolExpr::Const(b) if b == conj => {}
                BoolExpr::Const(_) => return BoolExpr::Const(!conj),
                BoolExpr::And(ys) if conj => out.extend(ys),
                BoolExpr::Or(ys) if !conj => out.extend(ys),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => BoolExpr::Const(conj),
            1 => out.pop().expect("one"),
            _ if conj => BoolExpr::And(out),
            _ => BoolExpr::Or(out),
        }
    }

    pub fn and(xs: Vec<BoolExpr>) -> BoolExpr {
        BoolExpr::join(xs, true)
    }

    pub fn or(xs: Vec<BoolExpr>) -> BoolExpr {
        BoolExpr::join(xs, false)
    }

    pub fn eval(&self, a: &[bool]) -> bool {
        match self {
            BoolExpr::Const(b) => *b,
            BoolExpr::Var(i) => a[*i],
            BoolExpr::Not(e) => !e.eval(a),
            BoolExpr::And(xs) => xs.iter().all(|x| x.eval(a)),
            BoolExpr::Or(xs) => xs.iter().any(|x| x.eval(a)),
        }
    }
}

impl fmt::Display for BoolExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |xs: &[BoolExpr], sep: &str| xs.iter().map(|x| format!("({x})")).collect::<Vec<_>>().join(sep);
        match self {
            BoolExpr::Const(b) => write!(f, "{b}"),
            BoolExpr::Var(i) => write!(f, "v{i}"),
            BoolExpr::Not(e) => write!(f, "!{e}"),
            BoolExpr::And(xs) => f.write_str(&join(xs, " & ")),
            BoolExpr::Or(xs) => f.write_str(&join(xs, " | ")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraints {
    /// Variable `i` says `vars[i].1` belongs to `vars[i].0`.
    pub vars: Vec<(SetName, Value)>,
    /// All must hold.
    pub constraints: Vec<BoolExpr>,
    /// Sets fixed by enumeration forms.
    pub fixed: Family,
}

impl Constraints {
    pub fn satisfied(&self, a: &[bool]) -> bool {
        self.constraints.iter().all(|c| c.eval(a))
    }

    fn family(&self, a: &[bool]) -> Family {
        let mut f = self.fixed.clone();
        for (i, (n, v)) in self.vars.iter().enumerate() {
            if a[i] {
                f.entry(n.clone()).or_default().insert(v.clone());
            }
        }
        f
    }

    fn assignments(&self, cap: usize) -> Result<Vec<Vec<bool>>, SetdefError> {
        let bits = self.vars.len();
        if bits > cap {
            return Err(SetdefError::Cap { bits, cap });
        }
        Ok((0u64..(1u64 << bits))
            .map(|m| (0..bits).map(|i| m >> i & 1 == 1).collect::<Vec<bool>>())
            .filter(|a| self.satisfied(a))
            .collect())
    }

    /// Families of all satisfying assignments.
    pub fn solutions(&self, cap: usize) -> Result<Vec<Family>, SetdefError> {
        Ok(self.assignments(cap)?.iter().map(|a| self.family(a)).collect())
    }

    /// Satisfying assignments where no single false variable can be set.
    pub fn selected_solutions(&self, cap: usize) -> Result<Vec<Family>, SetdefError> {
        let sat = self.assignments(cap)?;
        let set: BTreeSet<&Vec<bool>> = sat.iter().collect();
        Ok(sat
            .iter()
            .filter(|a| {
                (0..a.len()).all(|i| {
                    if a[i] {
                        return true;
                    }
                    let mut b = (*a).clone();
                    b[i] = true;
                    !set.contains(&b)
                })
            })
            .map(|a| self.family(a))
            .collect())
    }
}

struct Encoder<'a> {
    ctx: Ctx<'a>,
    vars: &'a [(SetName, Value)],
    beta: BTreeSet<String>,
}

impl Encoder<'_> {
    fn var(&self, n: &SetName, v: &Value) -> Option<usize> {
        self.vars.iter().position(|(m, w)| m == n && w == v)
    }

    /// Expands quantifiers into the variables. An undefined atom is encoded
    /// false and its guard, the memberships under which it is reached, is
    /// recorded so it can be forbidden.
    fn expand(&self, f: &Formula, b: &Bindings, guard: &mut Vec<usize>, voids: &mut Vec<Vec<usize>>) -> BoolExpr {
        match f {
            Formula::Const(v) => BoolExpr::Const(*v),
            Formula::Atom(..) => match self.ctx.eval(f, b) {
                Truth::True => BoolExpr::Const(true),
                Truth::False => BoolExpr::Const(false),
                Truth::Void => {
                    voids.push(guard.clone());
                    BoolExpr::Const(false)
                }
            },
            Formula::Not(a) => BoolExpr::negate(self.expand(a, b, guard, voids)),
            Formula::And(xs) => BoolExpr::and(xs.iter().map(|x| self.expand(x, b, guard, voids)).collect()),
            Formula::Or(xs) => BoolExpr::or(xs.iter().map(|x| self.expand(x, b, guard, voids)).collect()),
            Formula::Implies(x, y) => {
                let l = BoolExpr::negate(self.expand(x, b, guard, voids));
                BoolExpr::or(vec![l, self.expand(y, b, guard, voids)])
            }
            Formula::Quant(q, v, d, body) => {
                let forall = *q == Quant::Forall;
                let mut parts = Vec::new();
                if self.beta.contains(&d.base) {
                    let Some(name) = self.ctx.name(d, b) else {
                        voids.push(guard.clone());
                        return BoolExpr::Const(false);
                    };
                    for e in &self.ctx.universe {
                        let Some(i) = self.var(&name, e) else { continue };
                        let mut inner = b.clone();
                        inner.insert(v.clone(), e.clone());
                        guard.push(i);
                        let phi = self.expand(body, &inner, guard, voids);
                        guard.pop();
                        parts.push(if forall {
                            BoolExpr::or(vec![BoolExpr::negate(BoolExpr::Var(i)), phi])
                        } else {
                            BoolExpr::and(vec![BoolExpr::Var(i), phi])
                        });
                    }
                } else {
                    let Some(ms) = self.ctx.members(d, b) else {
                        voids.push(guard.clone());
                        return BoolExpr::Const(false);
                    };
                    for e in ms {
                        let mut inner = b.clone();
                        inner.insert(v.clone(), e);
                        parts.push(self.expand(body, &inner, guard, voids));
                    }
                }
                if forall {
                    BoolExpr::and(parts)
                } else {
                    BoolExpr::or(parts)
                }
            }
        }
    }
}

/// Encodes a system of enumeration and property forms. Satisfying
/// assignments correspond to agreed families.
pub fn to_boolean_constraints(sys: &System) -> Result<Constraints, SetdefError> {
    if let Some(f) = sys.forms.iter().find(|f| matches!(f.kind(), Kind::Gamma | Kind::Delta)) {
        return Err(SetdefError::Unsupported(format!("line {}: {} forms are not encodable", f.line, f.kind())));
    }
    if !sys.inputs.is_empty() {
        return Err(SetdefError::Unsupported("systems with inputs are not encodable".into()));
    }
    let beta: BTreeSet<String> = sys.forms.iter().filter(|f| f.kind() == Kind::Beta).map(|f| f.name.base.clone()).collect();
    if let Some(f) = sys.forms.iter().find(|f| f.selectors.iter().any(|s| beta.contains(&s.domain.base))) {
        return Err(SetdefError::Unsupported(format!("line {}: a selector ranges over a property set", f.line)));
    }
    let fixed = complete(sys, &Family::new())?;
    let ctx = Ctx::new(sys, &fixed);
    let mut groups = Vec::new();
    let mut vars = Vec::new();
    for form in sys.forms.iter().filter(|f| f.kind() == Kind::Beta) {
        for (name, group) in ctx.candidates(form) {
            for v in &ctx.universe {
                vars.push((name.clone(), v.clone()));
            }
            groups.push((form, name, group));
        }
    }
    let enc = Encoder { ctx: Ctx::new(sys, &fixed), vars: &vars, beta };
    let mut constraints = Vec::new();
    for (form, name, group) in &groups {
        let Body::Beta(f) = &form.body else { unreachable!() };
        let mut voids = Vec::new();
        let mut parts: Vec<BoolExpr> = group.iter().map(|b| enc.expand(f, b, &mut Vec::new(), &mut voids)).collect();
        for g in voids {
            parts.push(BoolExpr::negate(BoolExpr::and(g.into_iter().map(BoolExpr::Var).collect())));
        }
        let absent = BoolExpr::and(
            enc.ctx.universe.iter().filter_map(|v| enc.var(name, v)).map(|i| BoolExpr::negate(BoolExpr::Var(i))).collect(),
        );
        constraints.push(BoolExpr::or(vec![BoolExpr::and(parts), absent]));
    }
    constraints.retain(|c| *c != BoolExpr::Const(true));
    Ok(Constraints { vars, constraints, fixed })
}

/// A disjunction of literals; `(i, true)` is the variable itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HornClause {
    pub literals: Vec<(usize, bool)>,
}

impl HornClause {
    pub fn positives(&self) -> usize {
        self.literals.iter().filter(|l| l.1).count()
    }
}

/// Clauses over "element is removed" variables for a ∀∃ property: an
/// element is removed once all its supporters are.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Horn {
    pub elements: Vec<Value>,
    pub clauses: Vec<HornClause>,
}

impl Horn {
    pub fn is_horn(&self) -> bool {
        self.clauses.iter().all(|c| c.positives() <= 1)
    }

    /// Least model by forward chaining.
    pub fn least_model(&self) -> Vec<bool> {
        let mut m = vec![false; self.elements.len()];
        loop {
            let mut changed = false;
            for c in &self.clauses {
                let Some(&(head, _)) = c.literals.iter().find(|l| l.1) else { continue };
                if !m[head] && c.literals.iter().filter(|l| !l.1).all(|&(i, _)| m[i]) {
                    m[head] = true;
                    changed = true;
                }
            }
            if !changed {
                return m;
            }
        }
    }

    /// Elements never removed.
    pub fn kept(&self) -> BTreeSet<Value> {
        let m = self.least_model();
        self.elements.iter().zip(m).filter(|(_, r)| !r).map(|(v, _)| v.clone()).collect()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.clauses {
            let lits: Vec<String> = c
                .literals
                .iter()
                .map(|&(i, pos)| format!("{}removed({})", if pos { "" } else { "!" }, self.elements[i]))
                .collect();
            out.push_str(&lits.join(" | "));
            out.push('\n');
        }
        out
    }
}

pub fn horn_export(sys: &System) -> Result<Horn, SetdefError> {
    let s = shape(sys, 2)?;
    if s.table.quants != [Quant::Forall, Quant::Exists] {
        return Err(SetdefError::NotInClass("Horn export needs a forall-exists property".into()));
    }
    let n = s.table.n;
    let clauses = (0..n)
        .map(|x| {
            let mut literals = vec![(x, true)];
            literals.extend((0..n).filter(|&y| s.table.at(&[x, y])).map(|y| (y, false)));
            HornClause { literals }
        })
        .collect();
    Ok(Horn { elements: s.universe, clauses })
}

#[cfg(test)]
mod tests {
    use super::super::ast::parse_system;
    use super::super::eval::{brute_force_variants, DEFAULT_CAP};
    use super::*;

    #[test]
    fn empty_universe_has_one_solution() {
        let sys = parse_system("universe\nS = { forall x in S p(x) }").unwrap();
        let c = to_boolean_constraints(&sys).unwrap();
        assert!(c.vars.is_empty());
        assert!(c.constraints.is_empty());
        assert_eq!(c.solutions(DEFAULT_CAP).unwrap(), vec![Family::new()]);
    }

    #[test]
    fn gamma_refused() {
        let sys = parse_system("universe a\nS0 = {a}\nC = { S0, e(x, y) }").unwrap();
        assert!(matches!(to_boolean_constraints(&sys), Err(SetdefError::Unsupported(_))));
    }

    #[test]
    fn strict_voids_are_guarded() {
        let sys = parse_system("universe a, b\nS = { forall x in S p(x) }\n[diagram]\np(a)").unwrap();
        let c = to_boolean_constraints(&sys).unwrap();
        let oracle = brute_force_variants(&sys, &Family::new(), DEFAULT_CAP).unwrap();
        assert_eq!(c.solutions(DEFAULT_CAP).unwrap(), oracle.agreed);
        assert_eq!(oracle.agreed.len(), 2);
    }

    #[test]
    fn horn_least_model_is_removal() {
        let sys = parse_system(
            "universe a, b, c\nS = { forall x in S exists y in S p(x, y) }\n[mode]\nclosed\n[diagram]\np(a, b)\np(b, a)\np(c, c)\np(b, c)",
        )
        .unwrap();
        let h = horn_export(&sys).unwrap();
        assert!(h.is_horn());
        assert_eq!(h.kept().len(), 3);
        assert!(h.render().starts_with("removed(a) | !removed(b)"));
    }
}
