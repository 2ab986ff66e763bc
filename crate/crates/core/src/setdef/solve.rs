//! Selection algorithms for one-form systems whose property is a quantifier
//! prefix over the defined set followed by a quantifier-free predicate.

use std::collections::BTreeSet;
use std::fmt;

use crate::schema::Value;

use super::ast::{Body, Quant, SetName, System};
use super::eval::{family_from, Bindings, Ctx, Family, Truth};
use super::SetdefError;

/// Predicate of the matrix tabulated over the universe.
#[derive(Debug, Clone)]
pub(crate) struct Table {
    pub n: usize,
    pub arity: usize,
    pub quants: Vec<Quant>,
    data: Vec<bool>,
}

impl Table {
    pub fn at(&self, args: &[usize]) -> bool {
        self.data[args.iter().fold(0, |acc, &a| acc * self.n + a)]
    }

    fn holds_from(&self, members: &[usize], level: usize, args: &mut Vec<usize>) -> bool {
        if level == self.arity {
            return self.at(args);
        }
        let mut each = members.iter().map(|&m| {
            args.push(m);
            let r = self.holds_from(members, level + 1, args);
            args.pop();
            r
        });
        match self.quants[level] {
            Quant::Forall => each.all(|r| r),
            Quant::Exists => each.any(|r| r),
        }
    }

    /// Agreed: empty, or the property holds on the set.
    pub fn agreed(&self, set: &[bool]) -> bool {
        let members: Vec<usize> = (0..self.n).filter(|&i| set[i]).collect();
        members.is_empty() || self.holds_from(&members, 0, &mut Vec::new())
    }

    pub fn selected(&self, set: &[bool]) -> bool {
        self.agreed(set) && (0..self.n).all(|v| set[v] || !self.agreed(&with(set, v)))
    }

    /// Adds single elements while the set stays agreed.
    fn grow(&self, mut set: Vec<bool>) -> Vec<bool> {
        loop {
            let Some(v) = (0..self.n).find(|&v| !set[v] && self.agreed(&with(&set, v))) else { return set };
            set[v] = true;
        }
    }

    /// All selected subsets of `within`, by enumeration.
    fn exhaustive(&self, within: &[usize]) -> Vec<Vec<bool>> {
        let mut out = Vec::new();
        for mask in 0u64..(1u64 << within.len()) {
            let mut set = vec![false; self.n];
            for (k, &i) in within.iter().enumerate() {
                set[i] = mask >> k & 1 == 1;
            }
            if self.selected(&set) {
                out.push(set);
            }
        }
        out
    }
}

fn with(set: &[bool], v: usize) -> Vec<bool> {
    let mut s = set.to_vec();
    s[v] = true;
    s
}

pub(crate) struct Shape {
    pub name: String,
    pub universe: Vec<Value>,
    pub table: Table,
}

pub(crate) fn shape(sys: &System, arity: usize) -> Result<Shape, SetdefError> {
    let not = |why: &str| Err(SetdefError::NotInClass(why.into()));
    let [form] = sys.forms.as_slice() else { return not("the system must have exactly one form") };
    let Body::Beta(f) = &form.body else { return not("the form must be a property form") };
    if form.name.param.is_some() || !form.selectors.is_empty() {
        return not("the defined name must be plain");
    }
    let (prefix, matrix) = f.prefix();
    if prefix.len() != arity {
        return not(&format!("the property must have {arity} quantifiers, found {}", prefix.len()));
    }
    if prefix.iter().any(|(_, _, d)| d.base != form.name.base || d.param.is_some()) {
        return not("every quantifier must range over the defined set");
    }
    let vars: Vec<&str> = prefix.iter().map(|(_, v, _)| *v).collect();
    if vars.iter().collect::<BTreeSet<_>>().len() != arity {
        return not("quantified variables must be distinct");
    }
    if !matrix.is_quantifier_free() {
        return not("the predicate below the prefix must be quantifier-free");
    }
    let mut universe: Vec<Value> = Vec::new();
    for v in &sys.universe {
        if !universe.contains(v) {
            universe.push(v.clone());
        }
    }
    let n = universe.len();
    let empty = Family::new();
    let ctx = Ctx::new(sys, &empty);
    let mut data = Vec::with_capacity(n.pow(arity as u32));
    for code in 0..n.pow(arity as u32) {
        let mut args = vec![0; arity];
        let mut c = code;
        for k in (0..arity).rev() {
            args[k] = c % n;
            c /= n;
        }
        let b: Bindings = vars.iter().zip(&args).map(|(v, &i)| (v.to_string(), universe[i].clone())).collect();
        match ctx.eval(matrix, &b) {
            Truth::True => data.push(true),
            Truth::False => data.push(false),
            Truth::Void => {
                let at: Vec<String> = args.iter().map(|&i| universe[i].to_string()).collect();
                return Err(SetdefError::VoidPredicate(format!("({})", at.join(", "))));
            }
        }
    }
    let quants = prefix.iter().map(|(q, _, _)| *q).collect();
    Ok(Shape { name: form.name.base.clone(), universe, table: Table { n, arity, quants, data } })
}

fn to_values(universe: &[Value], set: &[bool]) -> BTreeSet<Value> {
    (0..universe.len()).filter(|&i| set[i]).map(|i| universe[i].clone()).collect()
}

fn families(name: &str, variants: &[BTreeSet<Value>]) -> Vec<Family> {
    variants.iter().map(|s| family_from([(SetName::plain(name), s.iter().cloned().collect())])).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution120 {
    /// 1 for the ∀∀ prefix, 2 for ∀∃, 3 for ∃∀, 4 for ∃∃.
    pub kind: u8,
    pub name: String,
    pub variants: Vec<BTreeSet<Value>>,
}

impl Solution120 {
    pub fn families(&self) -> Vec<Family> {
        families(&self.name, &self.variants)
    }
}

fn kind_of(quants: &[Quant]) -> u8 {
    match quants {
        [Quant::Forall, Quant::Forall] => 1,
        [Quant::Forall, Quant::Exists] => 2,
        [Quant::Exists, Quant::Forall] => 3,
        _ => 4,
    }
}

/// Repeatedly drops elements with no supporter left.
fn removal(n: usize, alive: &mut [bool], p: impl Fn(usize, usize) -> bool) {
    loop {
        let dead: Vec<usize> = (0..n).filter(|&x| alive[x] && !(0..n).any(|y| alive[y] && p(x, y))).collect();
        if dead.is_empty() {
            return;
        }
        for x in dead {
            alive[x] = false;
        }
    }
}

fn run_120(t: &Table, kind: u8, within: &[bool]) -> Vec<Vec<bool>> {
    let n = t.n;
    let p = |x: usize, y: usize| within[x] && within[y] && t.at(&[x, y]);
    let mut out: BTreeSet<Vec<bool>> = BTreeSet::new();
    match kind {
        1 => {
            for a in (0..n).filter(|&a| p(a, a)) {
                let mut m = vec![false; n];
                m[a] = true;
                for v in 0..n {
                    if !m[v] && p(v, v) && (0..n).all(|x| !m[x] || (p(x, v) && p(v, x))) {
                        m[v] = true;
                    }
                }
                out.insert(m);
            }
        }
        2 => {
            let mut alive = within.to_vec();
            removal(n, &mut alive, p);
            out.insert(alive);
        }
        3 => {
            for a in (0..n).filter(|&a| p(a, a)) {
                let m: Vec<bool> = (0..n).map(|y| p(a, y)).collect();
                out.insert(grow_within(t, m, within));
            }
        }
        _ => {
            let any = (0..n).any(|x| (0..n).any(|y| p(x, y)));
            out.insert(within.iter().map(|&w| w && any).collect());
        }
    }
    if out.is_empty() {
        out.insert(vec![false; n]);
    }
    out.into_iter().collect()
}

fn grow_within(t: &Table, mut set: Vec<bool>, within: &[bool]) -> Vec<bool> {
    loop {
        let Some(v) = (0..t.n).find(|&v| within[v] && !set[v] && t.agreed(&with(&set, v))) else { return set };
        set[v] = true;
    }
}

pub fn solve_120(sys: &System) -> Result<Solution120, SetdefError> {
    let s = shape(sys, 2)?;
    let kind = kind_of(&s.table.quants);
    let all = vec![true; s.table.n];
    let variants = run_120(&s.table, kind, &all).iter().map(|m| to_values(&s.universe, m)).collect();
    Ok(Solution120 { kind, name: s.name, variants })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    UniqueWitness,
    Skolem,
    SeparableAnd,
    SeparableOr,
    Factorized,
    Approximation,
    Fallback,
    Inapplicable,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::UniqueWitness => "unique-witness",
            Verdict::Skolem => "skolem",
            Verdict::SeparableAnd => "separable-and",
            Verdict::SeparableOr => "separable-or",
            Verdict::Factorized => "factorized",
            Verdict::Approximation => "approximation",
            Verdict::Fallback => "fallback",
            Verdict::Inapplicable => "inapplicable",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution130 {
    pub verdict: Verdict,
    pub name: String,
    pub variants: Vec<BTreeSet<Value>>,
}

impl Solution130 {
    pub fn families(&self) -> Vec<Family> {
        families(&self.name, &self.variants)
    }
}

/// Accepts a step's output only if every set is agreed; each is then grown
/// to a selected set.
fn finish(t: &Table, sets: Vec<Vec<bool>>) -> Option<Vec<Vec<bool>>> {
    if sets.is_empty() || !sets.iter().all(|s| t.agreed(s)) {
        return None;
    }
    let out: BTreeSet<Vec<bool>> = sets.into_iter().map(|s| t.grow(s)).collect();
    out.iter().all(|s| t.selected(s)).then(|| out.into_iter().collect())
}

fn unique_witness(t: &Table) -> Option<Vec<Vec<bool>>> {
    use Quant::*;
    let n = t.n;
    if t.quants != [Forall, Forall, Exists] {
        return None;
    }
    let witness = |x: usize, y: usize| -> Vec<usize> { (0..n).filter(|&z| t.at(&[x, y, z])).collect() };
    if (0..n).any(|x| (0..n).any(|y| witness(x, y).len() > 1)) {
        return None;
    }
    let mut sets = Vec::new();
    'seed: for a in 0..n {
        let mut m = vec![false; n];
        m[a] = true;
        loop {
            let members: Vec<usize> = (0..n).filter(|&i| m[i]).collect();
            let mut added = false;
            for &x in &members {
                for &y in &members {
                    match witness(x, y).first() {
                        None => continue 'seed,
                        Some(&z) if !m[z] => {
                            m[z] = true;
                            added = true;
                        }
                        Some(_) => {}
                    }
                }
            }
            if !added {
                break;
            }
        }
        sets.push(m);
    }
    if sets.is_empty() {
        sets.push(vec![false; n]);
    }
    finish(t, sets)
}

fn skolem(t: &Table) -> Option<Vec<Vec<bool>>> {
    use Quant::*;
    if t.quants != [Forall, Exists, Forall] {
        return None;
    }
    let n = t.n;
    let mut alive = vec![true; n];
    removal(n, &mut alive, |x, y| (0..n).all(|z| t.at(&[x, y, z])));
    if !alive.iter().any(|&a| a) {
        return None;
    }
    finish(t, vec![alive])
}

fn separable(t: &Table) -> Option<(Verdict, Vec<Vec<bool>>)> {
    let n = t.n;
    let pairs = || (0..n).flat_map(|x| (0..n).map(move |y| (x, y)));
    let kind = kind_of(&t.quants[..2]);
    // p = r & s: r and s are the projections and p is their product.
    let s_and: Vec<bool> = (0..n).map(|z| pairs().any(|(x, y)| t.at(&[x, y, z]))).collect();
    let r_and: Vec<bool> = pairs().map(|(x, y)| (0..n).any(|z| t.at(&[x, y, z]))).collect();
    let is_and = pairs().all(|(x, y)| (0..n).all(|z| t.at(&[x, y, z]) == (r_and[x * n + y] && s_and[z])));
    let nontrivial = s_and.iter().any(|&b| b) && s_and.iter().any(|&b| !b);
    if is_and && nontrivial {
        let r = Table { n, arity: 2, quants: t.quants[..2].to_vec(), data: r_and };
        if let Some(v) = finish(t, run_120(&r, kind, &s_and)) {
            return Some((Verdict::SeparableAnd, v));
        }
    }
    // p = r | s: s holds where p holds for every pair, r where it holds for every z.
    let s_or: Vec<bool> = (0..n).map(|z| pairs().all(|(x, y)| t.at(&[x, y, z]))).collect();
    let r_or: Vec<bool> = pairs().map(|(x, y)| (0..n).all(|z| t.at(&[x, y, z]))).collect();
    let is_or = pairs().all(|(x, y)| (0..n).all(|z| t.at(&[x, y, z]) == (r_or[x * n + y] || s_or[z])));
    if is_or && s_or.iter().any(|&b| b) && r_or.iter().any(|&b| b) {
        let r = Table { n, arity: 2, quants: vec![Quant::Forall, Quant::Exists], data: r_or };
        let all = vec![true; n];
        let sets = run_120(&r, 2, &all).into_iter().map(|m| (0..n).map(|i| m[i] || s_or[i]).collect()).collect();
        if let Some(v) = finish(t, sets) {
            return Some((Verdict::SeparableOr, v));
        }
    }
    None
}

/// Elements interchangeable in every argument position.
fn classes(t: &Table) -> Vec<Vec<usize>> {
    let n = t.n;
    let same = |u: usize, v: usize| {
        (0..n.pow(t.arity as u32)).all(|code| {
            let mut args = vec![0; t.arity];
            let mut c = code;
            for k in (0..t.arity).rev() {
                args[k] = c % n;
                c /= n;
            }
            let swap: Vec<usize> = args
                .iter()
                .map(|&a| {
                    if a == u {
                        v
                    } else if a == v {
                        u
                    } else {
                        a
                    }
                })
                .collect();
            t.at(&args) == t.at(&swap)
        })
    };
    let mut out: Vec<Vec<usize>> = Vec::new();
    for v in 0..n {
        match out.iter_mut().find(|c| same(c[0], v)) {
            Some(c) => c.push(v),
            None => out.push(vec![v]),
        }
    }
    out
}

fn factorized(t: &Table, cap: usize) -> Option<Vec<Vec<bool>>> {
    let cls = classes(t);
    if cls.len() >= t.n || cls.len() > cap {
        return None;
    }
    let mut sets = Vec::new();
    for mask in 0u64..(1u64 << cls.len()) {
        let mut set = vec![false; t.n];
        for (k, c) in cls.iter().enumerate() {
            if mask >> k & 1 == 1 {
                c.iter().for_each(|&i| set[i] = true);
            }
        }
        if t.agreed(&set) {
            sets.push(set);
        }
    }
    let grown: BTreeSet<Vec<bool>> = sets.into_iter().map(|s| t.grow(s)).collect();
    finish(t, grown.into_iter().collect())
}

fn approximation(t: &Table, cap: usize) -> Option<Vec<Vec<bool>>> {
    use Quant::*;
    if t.quants != [Forall, Exists, Forall] {
        return None;
    }
    let n = t.n;
    let mut alive = vec![true; n];
    removal(n, &mut alive, |x, y| t.at(&[x, y, x]) && t.at(&[x, y, y]));
    let within: Vec<usize> = (0..n).filter(|&i| alive[i]).collect();
    if within.len() >= n || within.len() > cap {
        return None;
    }
    Some(t.exhaustive(&within))
}

/// Tries the special-case constructions in a fixed order and falls back to
/// enumeration when the universe has at most `cap` elements.
pub fn solve_130(sys: &System, cap: usize) -> Result<Solution130, SetdefError> {
    let s = shape(sys, 3)?;
    let t = &s.table;
    let found = unique_witness(t)
        .map(|v| (Verdict::UniqueWitness, v))
        .or_else(|| skolem(t).map(|v| (Verdict::Skolem, v)))
        .or_else(|| separable(t))
        .or_else(|| factorized(t, cap).map(|v| (Verdict::Factorized, v)))
        .or_else(|| approximation(t, cap).map(|v| (Verdict::Approximation, v)));
    let (verdict, sets) = match found {
        Some(x) => x,
        None if t.n <= cap => (Verdict::Fallback, t.exhaustive(&(0..t.n).collect::<Vec<_>>())),
        None => (Verdict::Inapplicable, Vec::new()),
    };
    let variants = sets.iter().map(|m| to_values(&s.universe, m)).collect();
    Ok(Solution130 { verdict, name: s.name, variants })
}

/// Number of quantifiers of a one-form property system, for dispatch.
pub fn prefix_len(sys: &System) -> Option<usize> {
    match sys.forms.as_slice() {
        [form] => match &form.body {
            Body::Beta(f) => Some(f.prefix().0.len()),
            _ => None,
        },
        _ => None,
    }
}

/// A one-form property system over `n` elements with a seeded closed-world
/// diagram, for oracle comparisons.
pub fn random_system(quants: &[Quant], n: usize, density: f64, seed: u64) -> System {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let vars = ["x", "y", "z", "w"];
    let elems: Vec<String> = (0..n).map(|i| format!("e{i}")).collect();
    let prefix: Vec<String> = quants
        .iter()
        .zip(vars)
        .map(|(q, v)| format!("{} {v} in S", if *q == Quant::Forall { "forall" } else { "exists" }))
        .collect();
    let args = vars[..quants.len()].join(", ");
    let mut src = format!("universe {}\nS = {{ {} p({args}) }}\n[mode]\nclosed\n[diagram]\n", elems.join(", "), prefix.join(" "));
    for code in 0..n.pow(quants.len() as u32) {
        if rng.gen_bool(density) {
            let mut c = code;
            let mut at = vec![""; quants.len()];
            for k in (0..quants.len()).rev() {
                at[k] = &elems[c % n];
                c /= n;
            }
            src.push_str(&format!("p({})\n", at.join(", ")));
        }
    }
    super::ast::parse_system(&src).expect("generated system parses")
}

#[cfg(test)]
mod tests {
    use super::super::ast::parse_system;
    use super::super::eval::{brute_force_variants, check_selected, DEFAULT_CAP};
    use super::*;

    fn set(xs: &[&str]) -> BTreeSet<Value> {
        xs.iter().map(|x| Value::atom(x)).collect()
    }

    #[test]
    fn kind4_all_false_is_empty() {
        let sys = parse_system("universe a, b\nS = { exists x in S exists y in S p(x, y) }\n[mode]\nclosed").unwrap();
        let s = solve_120(&sys).unwrap();
        assert_eq!(s.kind, 4);
        assert_eq!(s.variants, vec![BTreeSet::new()]);
    }

    #[test]
    fn kind2_removal() {
        let sys = parse_system(
            "universe a, b, c\nS = { forall x in S exists y in S p(x, y) }\n[mode]\nclosed\n[diagram]\np(a, b)\np(b, a)\np(c, a)\np(a, c)\np(b, c)",
        )
        .unwrap();
        assert_eq!(solve_120(&sys).unwrap().variants, vec![set(&["a", "b", "c"])]);
    }

    #[test]
    fn void_predicate_refused() {
        let sys = parse_system("universe a\nS = { forall x in S forall y in S p(x, y) }").unwrap();
        assert!(matches!(solve_120(&sys), Err(SetdefError::VoidPredicate(_))));
    }

    #[test]
    fn not_in_class() {
        let sys = parse_system("universe a\nS = { forall x in S p(x) }\n[mode]\nclosed").unwrap();
        assert!(matches!(solve_120(&sys), Err(SetdefError::NotInClass(_))));
        assert!(matches!(solve_130(&sys, 8), Err(SetdefError::NotInClass(_))));
    }

    #[test]
    fn unique_witness_chain() {
        let sys = parse_system(
            "universe a, b, c, d, e\nS = { forall x in S forall y in S exists z in S p(x, y, z) }\n[mode]\nclosed\n[diagram]\n\
             p(a, a, b)\np(b, a, c)\np(a, b, c)\np(b, b, a)\np(c, c, c)\np(a, c, a)\np(c, a, a)\np(b, c, b)\np(c, b, b)",
        )
        .unwrap();
        let s = solve_130(&sys, 8).unwrap();
        assert_eq!(s.verdict, Verdict::UniqueWitness);
        let oracle = brute_force_variants(&sys, &Family::new(), DEFAULT_CAP).unwrap();
        for f in s.families() {
            assert!(check_selected(&sys, &f).selected());
            assert!(oracle.selected.contains(&f));
        }
        assert!(s.variants.contains(&set(&["a", "b", "c"])));
    }

    #[test]
    fn fallback_matches_oracle() {
        // Two witnesses for (a, a) rule out the unique-witness route.
        let sys = parse_system(
            "universe a, b, c\nS = { forall x in S forall y in S exists z in S p(x, y, z) & q(z) }\n[mode]\nclosed\n[diagram]\n\
             p(a, a, a)\np(a, a, b)\np(b, b, c)\nq(a)\nq(b)\nq(c)\np(a, b, c)",
        )
        .unwrap();
        let s = solve_130(&sys, 8).unwrap();
        let oracle = brute_force_variants(&sys, &Family::new(), DEFAULT_CAP).unwrap();
        if s.verdict == Verdict::Fallback {
            assert_eq!(s.families(), oracle.selected);
        }
        for f in s.families() {
            assert!(check_selected(&sys, &f).selected());
        }
    }
}
