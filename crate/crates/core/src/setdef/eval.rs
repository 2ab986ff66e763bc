//! Formula values, agreed and selected families, and the exhaustive oracle.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::schema::{Semantics, Value};

use super::ast::{Body, Form, Formula, Kind, NameRef, Quant, SetName, System, TermExpr, UNIVERSE};
use super::SetdefError;

/// Sets by concrete name. An absent name is the empty set.
pub type Family = BTreeMap<SetName, BTreeSet<Value>>;
pub type Bindings = BTreeMap<String, Value>;

/// Default limit on free membership bits for exhaustive enumeration.
pub const DEFAULT_CAP: usize = 16;

pub fn family_from(sets: impl IntoIterator<Item = (SetName, Vec<Value>)>) -> Family {
    let mut f = Family::new();
    for (n, vs) in sets {
        f.entry(n).or_default().extend(vs);
    }
    f.retain(|_, s| !s.is_empty());
    f
}

pub fn show_family(f: &Family) -> String {
    if f.is_empty() {
        return "{}".into();
    }
    let parts: Vec<String> = f
        .iter()
        .map(|(n, s)| {
            let items: Vec<String> = s.iter().map(|v| v.to_string()).collect();
            format!("{n} = {{{}}}", items.join(", "))
        })
        .collect();
    parts.join("; ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truth {
    True,
    False,
    Void,
}

impl Truth {
    fn of(b: bool) -> Truth {
        if b {
            Truth::True
        } else {
            Truth::False
        }
    }

    fn not(self) -> Truth {
        match self {
            Truth::True => Truth::False,
            Truth::False => Truth::True,
            Truth::Void => Truth::Void,
        }
    }

    /// Void anywhere makes the result void; there is no short circuit.
    fn fold(xs: impl IntoIterator<Item = Truth>, conj: bool) -> Truth {
        let mut acc = Truth::of(conj);
        for x in xs {
            acc = match (acc, x) {
                (Truth::Void, _) | (_, Truth::Void) => Truth::Void,
                (Truth::True, Truth::True) => Truth::True,
                (Truth::False, Truth::False) => Truth::False,
                _ => Truth::of(!conj),
            };
        }
        acc
    }
}

impl fmt::Display for Truth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Truth::True => "true",
            Truth::False => "false",
            Truth::Void => "void",
        })
    }
}

pub(crate) struct Ctx<'a> {
    pub sys: &'a System,
    pub family: &'a Family,
    pub universe: BTreeSet<Value>,
}

impl<'a> Ctx<'a> {
    pub fn new(sys: &'a System, family: &'a Family) -> Self {
        let mut universe: BTreeSet<Value> = sys.universe.iter().cloned().collect();
        let delta: BTreeSet<&str> = sys.forms.iter().filter(|f| f.kind() == Kind::Delta).map(|f| f.name.base.as_str()).collect();
        for (n, s) in family {
            if delta.contains(n.base.as_str()) {
                universe.extend(s.iter().cloned());
            }
        }
        Ctx { sys, family, universe }
    }

    pub fn term(&self, t: &TermExpr, b: &Bindings) -> Option<Value> {
        match t {
            TermExpr::Sym(s) => Some(b.get(s).cloned().unwrap_or_else(|| Value::atom(s))),
            TermExpr::Const(v) => Some(v.clone()),
            TermExpr::App(f, args) => {
                let args: Option<Vec<Value>> = args.iter().map(|a| self.term(a, b)).collect();
                self.sys.interp.apply(f, &args?)
            }
        }
    }

    pub fn name(&self, n: &NameRef, b: &Bindings) -> Option<SetName> {
        let param = match &n.param {
            None => None,
            Some(t) => Some(self.term(t, b)?),
        };
        Some(SetName { base: n.base.clone(), param })
    }

    /// Members of a domain, `None` when its name term is undefined.
    pub fn members(&self, n: &NameRef, b: &Bindings) -> Option<Vec<Value>> {
        if n.base == UNIVERSE && n.param.is_none() {
            return Some(self.universe.iter().cloned().collect());
        }
        let name = self.name(n, b)?;
        Some(self.family.get(&name).map(|s| s.iter().cloned().collect()).unwrap_or_default())
    }

    pub fn eval(&self, f: &Formula, b: &Bindings) -> Truth {
        match f {
            Formula::Const(v) => Truth::of(*v),
            Formula::Atom(p, args) => {
                let args: Option<Vec<Value>> = args.iter().map(|a| self.term(a, b)).collect();
                match args.and_then(|a| self.sys.interp.test(p, &a)) {
                    Some(v) => Truth::of(v),
                    None => Truth::Void,
                }
            }
            Formula::Not(a) => self.eval(a, b).not(),
            Formula::And(xs) => Truth::fold(xs.iter().map(|x| self.eval(x, b)), true),
            Formula::Or(xs) => Truth::fold(xs.iter().map(|x| self.eval(x, b)), false),
            Formula::Implies(x, y) => Truth::fold([self.eval(x, b).not(), self.eval(y, b)], false),
            Formula::Quant(q, v, d, body) => {
                let Some(ms) = self.members(d, b) else { return Truth::Void };
                let vals = ms.into_iter().map(|m| {
                    let mut inner = b.clone();
                    inner.insert(v.clone(), m);
                    self.eval(body, &inner)
                });
                Truth::fold(vals, *q == Quant::Forall)
            }
        }
    }

    /// Acceptable maps of a form's selector, level by level.
    pub fn maps(&self, form: &Form) -> Vec<Bindings> {
        let mut out = vec![Bindings::new()];
        for s in &form.selectors {
            let mut next = Vec::new();
            for b in &out {
                for m in self.members(&s.domain, b).unwrap_or_default() {
                    let mut nb = b.clone();
                    nb.insert(s.var.clone(), m);
                    next.push(nb);
                }
            }
            out = next;
        }
        out
    }

    /// Concrete names a form defines, with the maps that produce each.
    pub fn candidates(&self, form: &Form) -> BTreeMap<SetName, Vec<Bindings>> {
        let mut out: BTreeMap<SetName, Vec<Bindings>> = BTreeMap::new();
        for b in self.maps(form) {
            if let Some(n) = self.name(&form.name, &b) {
                out.entry(n).or_default().push(b);
            }
        }
        out
    }

    /// The set an α, γ or δ form fixes for one name.
    pub fn expected(&self, form: &Form, name: &SetName, group: &[Bindings]) -> BTreeSet<Value> {
        match &form.body {
            Body::Alpha(items) => items.iter().cloned().collect(),
            Body::Delta(t) => group.iter().filter_map(|b| self.term(t, b)).collect(),
            Body::Gamma(base, step) => {
                let mut m: BTreeSet<Value> = BTreeSet::new();
                for b in group {
                    m.extend(self.members(base, b).unwrap_or_default());
                }
                loop {
                    let joined: Vec<Value> = self
                        .universe
                        .iter()
                        .filter(|x| !m.contains(*x))
                        .filter(|x| {
                            group.iter().any(|b| {
                                m.iter().any(|y| {
                                    let mut inner = b.clone();
                                    inner.insert("x".into(), (*x).clone());
                                    inner.insert("y".into(), y.clone());
                                    self.eval(step, &inner) == Truth::True
                                })
                            })
                        })
                        .cloned()
                        .collect();
                    if joined.is_empty() {
                        return m;
                    }
                    m.extend(joined);
                }
            }
            Body::Beta(_) => self.family.get(name).cloned().unwrap_or_default(),
        }
    }
}

fn check_domains(sys: &System, f: &Formula) -> Result<(), SetdefError> {
    let mut ds = Vec::new();
    f.domains(&mut ds);
    let known = sys.defined();
    match ds.iter().find(|d| d.base != UNIVERSE && !known.contains(&d.base) && !sys.inputs.contains(&d.base)) {
        Some(d) => Err(SetdefError::Unresolved(d.base.clone())),
        None => Ok(()),
    }
}

pub fn eval_formula(sys: &System, family: &Family, f: &Formula, bindings: &Bindings) -> Result<Truth, SetdefError> {
    check_domains(sys, f)?;
    Ok(Ctx::new(sys, family).eval(f, bindings))
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AgreedReport {
    pub issues: Vec<String>,
}

impl AgreedReport {
    pub fn ok(&self) -> bool {
        self.issues.is_empty()
    }
}

fn set_text(s: &BTreeSet<Value>) -> String {
    let items: Vec<String> = s.iter().map(|v| v.to_string()).collect();
    format!("{{{}}}", items.join(", "))
}

pub fn check_agreed(sys: &System, family: &Family) -> AgreedReport {
    let ctx = Ctx::new(sys, family);
    let mut issues = Vec::new();
    let mut covered: BTreeSet<SetName> = BTreeSet::new();
    let empty = BTreeSet::new();
    for form in &sys.forms {
        for (name, group) in ctx.candidates(form) {
            let actual = family.get(&name).unwrap_or(&empty);
            covered.insert(name.clone());
            match &form.body {
                Body::Beta(f) => {
                    if let Some(v) = actual.iter().find(|v| !ctx.universe.contains(*v)) {
                        issues.push(format!("{name}: {v} is outside the universe"));
                    }
                    if !actual.is_empty() {
                        let t = Truth::fold(group.iter().map(|b| ctx.eval(f, b)), true);
                        if t != Truth::True {
                            issues.push(format!("{name}: property is {t} on {}", set_text(actual)));
                        }
                    }
                }
                _ => {
                    let want = ctx.expected(form, &name, &group);
                    if &want != actual {
                        issues.push(format!(
                            "{name}: {} form gives {}, family has {}",
                            form.kind(),
                            set_text(&want),
                            set_text(actual)
                        ));
                    }
                }
            }
        }
    }
    let defined = sys.defined();
    for (name, s) in family {
        if sys.inputs.contains(&name.base) || covered.contains(name) || s.is_empty() {
            continue;
        }
        if defined.contains(&name.base) {
            issues.push(format!("{name}: no acceptable map produces this name"));
        } else {
            issues.push(format!("{name}: no form defines this name"));
        }
    }
    AgreedReport { issues }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectedReport {
    pub agreed: AgreedReport,
    /// A single element whose addition keeps the family agreed.
    pub witness: Option<(SetName, Value)>,
}

impl SelectedReport {
    pub fn selected(&self) -> bool {
        self.agreed.ok() && self.witness.is_none()
    }
}

fn beta_names(ctx: &Ctx) -> BTreeSet<SetName> {
    ctx.sys.forms.iter().filter(|f| f.kind() == Kind::Beta).flat_map(|f| ctx.candidates(f).into_keys()).collect()
}

/// Only sets of β forms can grow: the other three kinds fix their sets
/// exactly, so enlarging one never stays agreed.
pub fn check_selected(sys: &System, family: &Family) -> SelectedReport {
    let agreed = check_agreed(sys, family);
    if !agreed.ok() {
        return SelectedReport { agreed, witness: None };
    }
    let ctx = Ctx::new(sys, family);
    for name in beta_names(&ctx) {
        for v in &ctx.universe {
            if family.get(&name).is_some_and(|s| s.contains(v)) {
                continue;
            }
            let mut bigger = family.clone();
            bigger.entry(name.clone()).or_default().insert(v.clone());
            if check_agreed(sys, &bigger).ok() {
                return SelectedReport { agreed, witness: Some((name, v.clone())) };
            }
        }
    }
    SelectedReport { agreed, witness: None }
}

/// Fills in the sets of α, γ and δ forms given the β and input sets.
pub fn complete(sys: &System, given: &Family) -> Result<Family, SetdefError> {
    let fixed: BTreeSet<&str> = sys
        .forms
        .iter()
        .filter(|f| f.kind() == Kind::Beta)
        .map(|f| f.name.base.as_str())
        .chain(sys.inputs.iter().map(String::as_str))
        .collect();
    let kept: Family =
        given.iter().filter(|(n, _)| fixed.contains(n.base.as_str())).map(|(n, s)| (n.clone(), s.clone())).collect();
    let mut current = kept.clone();
    for _ in 0..256 {
        let ctx = Ctx::new(sys, &current);
        let mut next = kept.clone();
        for form in sys.forms.iter().filter(|f| f.kind() != Kind::Beta) {
            for (name, group) in ctx.candidates(form) {
                let s = ctx.expected(form, &name, &group);
                next.entry(name).or_default().extend(s);
            }
        }
        next.retain(|_, s| !s.is_empty());
        if next == current {
            return Ok(current);
        }
        current = next;
    }
    Err(SetdefError::Invalid("the α, γ and δ sets do not stabilize".into()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variants {
    pub agreed: Vec<Family>,
    pub selected: Vec<Family>,
}

fn contains(big: &Family, small: &Family) -> bool {
    small.iter().all(|(n, s)| big.get(n).is_some_and(|b| b.is_superset(s)))
}

impl Variants {
    /// The agreed family containing every other agreed family, if any.
    pub fn maximum(&self) -> Option<&Family> {
        self.agreed.iter().find(|m| self.agreed.iter().all(|f| contains(m, f)))
    }
}

/// Enumerates every membership pattern of the β sets (over the names the
/// α, γ and δ sets admit) and keeps the agreed and the selected ones.
pub fn brute_force_variants(sys: &System, input: &Family, cap: usize) -> Result<Variants, SetdefError> {
    let base = complete(sys, input)?;
    let ctx = Ctx::new(sys, &base);
    let names: Vec<SetName> = beta_names(&ctx).into_iter().collect();
    let universe: Vec<Value> = ctx.universe.iter().cloned().collect();
    let bits = names.len() * universe.len();
    if bits > cap {
        return Err(SetdefError::Cap { bits, cap });
    }
    let mut agreed = BTreeSet::new();
    for mask in 0u64..(1u64 << bits) {
        let mut fam = input.clone();
        for (i, n) in names.iter().enumerate() {
            for (j, v) in universe.iter().enumerate() {
                if mask >> (i * universe.len() + j) & 1 == 1 {
                    fam.entry(n.clone()).or_default().insert(v.clone());
                }
            }
        }
        let fam = complete(sys, &fam)?;
        if check_agreed(sys, &fam).ok() {
            agreed.insert(fam);
        }
    }
    let selected = agreed
        .iter()
        .filter(|f| {
            !names.iter().any(|n| {
                universe.iter().any(|v| {
                    if f.get(n).is_some_and(|s| s.contains(v)) {
                        return false;
                    }
                    let mut g = (*f).clone();
                    g.entry(n.clone()).or_default().insert(v.clone());
                    agreed.contains(&g)
                })
            })
        })
        .cloned()
        .collect();
    Ok(Variants { agreed: agreed.into_iter().collect(), selected })
}

#[cfg(test)]
mod tests {
    use super::super::ast::parse_system;
    use super::*;

    fn atoms(xs: &[&str]) -> Vec<Value> {
        xs.iter().map(|x| Value::atom(x)).collect()
    }

    fn fam(sets: &[(&str, &[&str])]) -> Family {
        family_from(sets.iter().map(|(n, xs)| (SetName::plain(n), atoms(xs))))
    }

    #[test]
    fn empty_domains() {
        let sys = parse_system("universe a\nS = {a}").unwrap();
        let f =
            Formula::Quant(Quant::Exists, "x".into(), NameRef { base: "S".into(), param: None }, Box::new(Formula::Const(true)));
        assert_eq!(eval_formula(&sys, &Family::new(), &f, &Bindings::new()).unwrap(), Truth::False);
        let g =
            Formula::Quant(Quant::Forall, "x".into(), NameRef { base: "S".into(), param: None }, Box::new(Formula::Const(false)));
        assert_eq!(eval_formula(&sys, &Family::new(), &g, &Bindings::new()).unwrap(), Truth::True);
        let bad =
            Formula::Quant(Quant::Forall, "x".into(), NameRef { base: "T".into(), param: None }, Box::new(Formula::Const(false)));
        assert!(matches!(eval_formula(&sys, &Family::new(), &bad, &Bindings::new()), Err(SetdefError::Unresolved(_))));
    }

    #[test]
    fn strict_missing_atom_is_void() {
        let sys = parse_system("universe a, b\nS = { forall x in S p(x) }\n[diagram]\np(a)").unwrap();
        let form = &sys.forms[0];
        let Body::Beta(f) = &form.body else { panic!() };
        assert_eq!(eval_formula(&sys, &fam(&[("S", &["a"])]), f, &Bindings::new()).unwrap(), Truth::True);
        assert_eq!(eval_formula(&sys, &fam(&[("S", &["a", "b"])]), f, &Bindings::new()).unwrap(), Truth::Void);
    }

    #[test]
    fn void_is_not_short_circuited() {
        let sys = parse_system("universe a\nS = { false & p(a) }\n[diagram]\nq(a)").unwrap();
        let Body::Beta(f) = &sys.forms[0].body else { panic!() };
        assert_eq!(eval_formula(&sys, &Family::new(), f, &Bindings::new()).unwrap(), Truth::Void);
    }

    #[test]
    fn alpha_set_must_be_present() {
        let sys = parse_system("universe a\nS = {a}").unwrap();
        assert!(!check_agreed(&sys, &Family::new()).ok());
        assert!(check_agreed(&sys, &fam(&[("S", &["a"])])).ok());
        assert!(!check_agreed(&sys, &fam(&[("S", &["a"]), ("T", &["a"])])).ok());
    }

    #[test]
    fn delta_image_and_universe_growth() {
        let sys = parse_system("universe a, b\nS0 = {a, b}\nT = { f(z) ; z in S0 }").unwrap();
        let full = complete(&sys, &Family::new()).unwrap();
        let t = &full[&SetName::plain("T")];
        assert_eq!(t.len(), 2);
        assert!(check_agreed(&sys, &full).ok());
        assert_eq!(Ctx::new(&sys, &full).universe.len(), 4);
    }

    #[test]
    fn parameterised_names() {
        let sys = parse_system("universe a, b\nS0 = {a, b}\nT[z] = { z ; z in S0 }").unwrap();
        let full = complete(&sys, &Family::new()).unwrap();
        assert_eq!(full.len(), 3);
        assert!(full.contains_key(&SetName::with("T", Value::atom("b"))));
        assert!(check_agreed(&sys, &full).ok());
    }

    #[test]
    fn nonmaximal_family_has_witness() {
        let sys = parse_system("universe a, b\nS = { forall x in S forall y in S p(x, y) }\n[mode]\nclosed\n[diagram]\np(a,a)\np(a,b)\np(b,a)\np(b,b)").unwrap();
        let r = check_selected(&sys, &fam(&[("S", &["a"])]));
        assert!(r.agreed.ok());
        assert_eq!(r.witness, Some((SetName::plain("S"), Value::atom("b"))));
        assert!(check_selected(&sys, &fam(&[("S", &["a", "b"])])).selected());
        let empty = check_selected(&sys, &Family::new());
        assert!(empty.agreed.ok() && !empty.selected());
    }

    #[test]
    fn brute_force_respects_cap() {
        let sys = parse_system("universe a, b, c\nS = { forall x in S p(x, x) }\n[mode]\nclosed").unwrap();
        assert!(matches!(brute_force_variants(&sys, &Family::new(), 2), Err(SetdefError::Cap { bits: 3, cap: 2 })));
        let v = brute_force_variants(&sys, &Family::new(), DEFAULT_CAP).unwrap();
        assert_eq!(v.agreed, vec![Family::new()]);
        assert_eq!(v.selected, vec![Family::new()]);
    }
}
