//! Forms of named-set definitions and their text format.
//!
//! ```text
//! universe a, b, c, d
//! input E                                   // supplied from outside
//! S0 = {a}                                  // enumeration
//! S = { forall x in S exists y in S p(x, y) }      // property
//! C = { S0, edge(x, y) }                    // induction: x joins when edge(x, y), y in C
//! T[z] = { f(z) ; z in S0 }                 // image
//! [diagram]
//! p(a, b)
//! [mode]
//! closed
//! ```
//!
//! Everything after the first `[section]` line is an interpretation in the
//! schema format. The kind of a form is inferred and can be forced with a
//! keyword before the brace: `S = beta { ... }`. In an induction step the
//! variable `x` is the candidate and `y` the member it attaches to. The
//! name `V` denotes the whole universe.

use std::collections::BTreeSet;
use std::fmt;

use crate::schema::interp::{parse_interpretation, parse_value};
use crate::schema::{AnyInterpretation, StandardInterpretation, Value};
use crate::text::{content_lines, Cursor, ParseError, Tok};

use super::SetdefError;

/// The universe as a set name.
pub const UNIVERSE: &str = "V";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TermExpr {
    /// A variable when bound, otherwise the constant atom of that name.
    Sym(String),
    Const(Value),
    App(String, Vec<TermExpr>),
}

impl TermExpr {
    pub fn symbols(&self, out: &mut BTreeSet<String>) {
        match self {
            TermExpr::Sym(s) => {
                out.insert(s.clone());
            }
            TermExpr::Const(_) => {}
            TermExpr::App(_, args) => args.iter().for_each(|a| a.symbols(out)),
        }
    }
}

impl fmt::Display for TermExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TermExpr::Sym(s) => write!(f, "{s}"),
            TermExpr::Const(v) => write!(f, "{v}"),
            TermExpr::App(g, args) => {
                let a: Vec<String> = args.iter().map(|t| t.to_string()).collect();
                write!(f, "{g}({})", a.join(", "))
            }
        }
    }
}

/// A set name schema `S` or `S[t]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NameRef {
    pub base: String,
    pub param: Option<TermExpr>,
}

impl fmt::Display for NameRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.param {
            None => write!(f, "{}", self.base),
            Some(t) => write!(f, "{}[{t}]", self.base),
        }
    }
}

/// A concrete set name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SetName {
    pub base: String,
    pub param: Option<Value>,
}

impl SetName {
    pub fn plain(base: &str) -> Self {
        SetName { base: base.into(), param: None }
    }

    pub fn with(base: &str, param: Value) -> Self {
        SetName { base: base.into(), param: Some(param) }
    }
}

impl fmt::Display for SetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.param {
            None => write!(f, "{}", self.base),
            Some(v) => write!(f, "{}[{v}]", self.base),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Quant {
    Forall,
    Exists,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Const(bool),
    Atom(String, Vec<TermExpr>),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Quant(Quant, String, NameRef, Box<Formula>),
}

impl Formula {
    /// Quantifier prefix and the matrix below it.
    pub fn prefix(&self) -> (Vec<(Quant, &str, &NameRef)>, &Formula) {
        let mut out = Vec::new();
        let mut f = self;
        while let Formula::Quant(q, v, d, body) = f {
            out.push((*q, v.as_str(), d));
            f = body;
        }
        (out, f)
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Formula::Const(_) | Formula::Atom(..) => true,
            Formula::Not(a) => a.is_quantifier_free(),
            Formula::And(xs) | Formula::Or(xs) => xs.iter().all(Formula::is_quantifier_free),
            Formula::Implies(a, b) => a.is_quantifier_free() && b.is_quantifier_free(),
            Formula::Quant(..) => false,
        }
    }

    /// Set names used as quantifier domains.
    pub fn domains(&self, out: &mut Vec<NameRef>) {
        match self {
            Formula::Const(_) | Formula::Atom(..) => {}
            Formula::Not(a) => a.domains(out),
            Formula::And(xs) | Formula::Or(xs) => xs.iter().for_each(|x| x.domains(out)),
            Formula::Implies(a, b) => {
                a.domains(out);
                b.domains(out);
            }
            Formula::Quant(_, _, d, b) => {
                out.push(d.clone());
                b.domains(out);
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |xs: &[Formula], sep: &str| xs.iter().map(|x| format!("({x})")).collect::<Vec<_>>().join(sep);
        match self {
            Formula::Const(b) => write!(f, "{b}"),
            Formula::Atom(p, args) => {
                let a: Vec<String> = args.iter().map(|t| t.to_string()).collect();
                write!(f, "{p}({})", a.join(", "))
            }
            Formula::Not(a) => write!(f, "!({a})"),
            Formula::And(xs) => write!(f, "{}", join(xs, " & ")),
            Formula::Or(xs) => write!(f, "{}", join(xs, " | ")),
            Formula::Implies(a, b) => write!(f, "({a}) => ({b})"),
            Formula::Quant(q, v, d, b) => {
                let q = if *q == Quant::Forall { "forall" } else { "exists" };
                write!(f, "{q} {v} in {d} {b}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selector {
    pub var: String,
    pub domain: NameRef,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Kind {
    Alpha,
    Beta,
    Gamma,
    Delta,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Alpha => "alpha",
            Kind::Beta => "beta",
            Kind::Gamma => "gamma",
            Kind::Delta => "delta",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Body {
    Alpha(Vec<Value>),
    Beta(Formula),
    /// Base set and induction step over the candidate `x` and member `y`.
    Gamma(NameRef, Formula),
    Delta(TermExpr),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Form {
    pub name: NameRef,
    pub body: Body,
    pub selectors: Vec<Selector>,
    pub line: usize,
}

impl Form {
    pub fn kind(&self) -> Kind {
        match self.body {
            Body::Alpha(_) => Kind::Alpha,
            Body::Beta(_) => Kind::Beta,
            Body::Gamma(..) => Kind::Gamma,
            Body::Delta(_) => Kind::Delta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct System {
    pub universe: Vec<Value>,
    pub inputs: BTreeSet<String>,
    pub forms: Vec<Form>,
    pub interp: AnyInterpretation,
}

impl System {
    pub fn forms_for<'a>(&'a self, base: &'a str) -> impl Iterator<Item = &'a Form> + 'a {
        self.forms.iter().filter(move |f| f.name.base == base)
    }

    pub fn defined(&self) -> BTreeSet<String> {
        self.forms.iter().map(|f| f.name.base.clone()).collect()
    }
}

fn parse_term(c: &mut Cursor) -> Result<TermExpr, ParseError> {
    match c.peek() {
        Some(Tok::Ident(_)) => {
            let name = c.ident()?;
            if c.eat_sym("(") {
                let mut args = Vec::new();
                if !c.eat_sym(")") {
                    loop {
                        args.push(parse_term(c)?);
                        if c.eat_sym(")") {
                            break;
                        }
                        c.expect_sym(",")?;
                    }
                }
                Ok(TermExpr::App(name, args))
            } else {
                Ok(TermExpr::Sym(name))
            }
        }
        Some(Tok::Int(_)) | Some(Tok::Sym("-")) | Some(Tok::Str(_)) | Some(Tok::Label(_)) => Ok(TermExpr::Const(parse_value(c)?)),
        _ => Err(c.err(format!("expected a term, found {}", c.describe()))),
    }
}

fn parse_name_ref(c: &mut Cursor) -> Result<NameRef, ParseError> {
    let base = c.ident()?;
    let param = if c.eat_sym("[") {
        let t = parse_term(c)?;
        c.expect_sym("]")?;
        Some(t)
    } else {
        None
    };
    Ok(NameRef { base, param })
}

const CMP: [(&str, &str); 6] = [("==", "eq"), ("!=", "ne"), ("<=", "le"), (">=", "ge"), ("<", "lt"), (">", "gt")];

pub(crate) fn parse_formula(c: &mut Cursor) -> Result<Formula, ParseError> {
    let lhs = parse_or(c)?;
    if c.eat_sym("=>") {
        let rhs = parse_formula(c)?;
        return Ok(Formula::Implies(Box::new(lhs), Box::new(rhs)));
    }
    Ok(lhs)
}

fn parse_or(c: &mut Cursor) -> Result<Formula, ParseError> {
    let mut xs = vec![parse_and(c)?];
    while c.eat_sym("|") {
        xs.push(parse_and(c)?);
    }
    Ok(if xs.len() == 1 { xs.pop().expect("one") } else { Formula::Or(xs) })
}

fn parse_and(c: &mut Cursor) -> Result<Formula, ParseError> {
    let mut xs = vec![parse_unary(c)?];
    while c.eat_sym("&") {
        xs.push(parse_unary(c)?);
    }
    Ok(if xs.len() == 1 { xs.pop().expect("one") } else { Formula::And(xs) })
}

fn parse_unary(c: &mut Cursor) -> Result<Formula, ParseError> {
    if c.eat_sym("!") {
        return Ok(Formula::Not(Box::new(parse_unary(c)?)));
    }
    if c.eat_sym("(") {
        let f = parse_formula(c)?;
        c.expect_sym(")")?;
        return Ok(f);
    }
    for (kw, q) in [("forall", Quant::Forall), ("exists", Quant::Exists)] {
        if c.eat_kw(kw) {
            let v = c.ident()?;
            c.expect_kw("in")?;
            let d = parse_name_ref(c)?;
            // The quantifier scope extends as far as possible.
            let body = parse_formula(c)?;
            return Ok(Formula::Quant(q, v, d, Box::new(body)));
        }
    }
    if c.eat_kw("true") {
        return Ok(Formula::Const(true));
    }
    if c.eat_kw("false") {
        return Ok(Formula::Const(false));
    }
    let t = parse_term(c)?;
    for (sym, p) in CMP {
        if c.eat_sym(sym) {
            let rhs = parse_term(c)?;
            return Ok(Formula::Atom(p.into(), vec![t, rhs]));
        }
    }
    match t {
        TermExpr::App(p, args) => Ok(Formula::Atom(p, args)),
        other => Err(c.err(format!("`{other}` is not a predicate atom"))),
    }
}

fn parse_selectors(c: &mut Cursor) -> Result<Vec<Selector>, ParseError> {
    let mut out = Vec::new();
    loop {
        let var = c.ident()?;
        c.expect_kw("in")?;
        out.push(Selector { var, domain: parse_name_ref(c)? });
        if !c.eat_sym(",") {
            return Ok(out);
        }
    }
}

fn starts_formula(c: &Cursor) -> bool {
    matches!(c.peek(), Some(Tok::Ident(k)) if k == "forall" || k == "exists" || k == "true" || k == "false")
        || c.is_sym("!")
        || c.is_sym("(")
}

fn parse_form(line: &str, line_no: usize, names: &BTreeSet<String>) -> Result<Form, ParseError> {
    let mut c = Cursor::new(line, line_no)?;
    let name = parse_name_ref(&mut c)?;
    c.expect_sym("=")?;
    let forced = ["alpha", "beta", "gamma", "delta"].into_iter().find(|k| c.is_kw(k));
    if forced.is_some() {
        c.next();
    }
    c.expect_sym("{")?;
    let body = match forced {
        Some("beta") => Body::Beta(parse_formula(&mut c)?),
        Some("gamma") => gamma_body(&mut c)?,
        Some("delta") => Body::Delta(parse_term(&mut c)?),
        Some("alpha") => Body::Alpha(alpha_items(&mut c)?),
        _ if starts_formula(&c) => Body::Beta(parse_formula(&mut c)?),
        _ if matches!(c.peek(), Some(Tok::Ident(n)) if names.contains(n))
            && (c.peek_at(1) == Some(&Tok::Sym(",")) || c.peek_at(1) == Some(&Tok::Sym("["))) =>
        {
            gamma_body(&mut c)?
        }
        _ => {
            let items = alpha_items(&mut c)?;
            if c.is_sym(";") && items.len() == 1 {
                // A single item followed by a selector is an image term; it
                // is re-read as a term below.
                Body::Delta(TermExpr::Const(items[0].clone()))
            } else {
                Body::Alpha(items)
            }
        }
    };
    let selectors = if c.eat_sym(";") { parse_selectors(&mut c)? } else { Vec::new() };
    c.expect_sym("}")?;
    c.expect_end()?;
    let body = match body {
        Body::Delta(TermExpr::Const(v)) => Body::Delta(value_to_term(&v)),
        b => b,
    };
    Ok(Form { name, body, selectors, line: line_no })
}

fn gamma_body(c: &mut Cursor) -> Result<Body, ParseError> {
    let base = parse_name_ref(c)?;
    c.expect_sym(",")?;
    Ok(Body::Gamma(base, parse_formula(c)?))
}

pub(crate) fn alpha_items(c: &mut Cursor) -> Result<Vec<Value>, ParseError> {
    let mut out = Vec::new();
    if c.is_sym("}") {
        return Ok(out);
    }
    loop {
        out.push(parse_value(c)?);
        if !c.eat_sym(",") {
            return Ok(out);
        }
    }
}

/// Reads a parsed value back as a term: atoms become symbols so that bound
/// variables are recognised.
fn value_to_term(v: &Value) -> TermExpr {
    use crate::schema::TermKind;
    match v {
        Value::Term(t) => match t.kind() {
            TermKind::Atom(a) => TermExpr::Sym(a.to_string()),
            TermKind::App(f, args) => TermExpr::App(f.to_string(), args.iter().map(value_to_term).collect()),
            _ => TermExpr::Const(v.clone()),
        },
        other => TermExpr::Const(other.clone()),
    }
}

pub fn parse_system(src: &str) -> Result<System, SetdefError> {
    let mut forms_part: Vec<(usize, &str)> = Vec::new();
    let mut interp_src = String::new();
    let mut in_interp = false;
    for (i, raw) in src.lines().enumerate() {
        let trimmed = raw.trim();
        if !in_interp && trimmed.starts_with('[') && trimmed.ends_with(']') {
            in_interp = true;
        }
        if in_interp {
            interp_src.push_str(raw);
        } else {
            forms_part.push((i + 1, raw));
        }
        interp_src.push('\n');
    }
    let interp = if in_interp {
        parse_interpretation(&interp_src)?
    } else {
        AnyInterpretation::Standard(StandardInterpretation::default())
    };
    let text: String = forms_part.iter().map(|(_, l)| format!("{l}\n")).collect();
    let lines: Vec<(usize, &str)> = content_lines(&text).collect();
    let mut names = BTreeSet::new();
    for (n, l) in &lines {
        let mut c = Cursor::new(l, *n)?;
        let first = c.ident()?;
        if first != "universe" && first != "input" {
            names.insert(first);
        }
    }
    let mut sys = System { universe: Vec::new(), inputs: BTreeSet::new(), forms: Vec::new(), interp };
    for (n, l) in lines {
        let mut c = Cursor::new(l, n)?;
        if c.eat_kw("universe") {
            if !c.at_end() {
                sys.universe = alpha_items(&mut c)?;
            }
            c.expect_end()?;
            continue;
        }
        if c.eat_kw("input") {
            loop {
                sys.inputs.insert(c.ident()?);
                if !c.eat_sym(",") {
                    break;
                }
            }
            c.expect_end()?;
            continue;
        }
        sys.forms.push(parse_form(l, n, &names)?);
    }
    check_system(&sys)?;
    Ok(sys)
}

fn check_system(sys: &System) -> Result<(), SetdefError> {
    let mut seen = BTreeSet::new();
    for f in &sys.forms {
        if f.name.base == UNIVERSE {
            return Err(SetdefError::Invalid(format!("line {}: `{UNIVERSE}` names the universe", f.line)));
        }
        if sys.forms.iter().any(|g| g.line < f.line && g.name == f.name) {
            return Err(SetdefError::Invalid(format!("line {}: two forms define `{}`", f.line, f.name)));
        }
        if sys.inputs.contains(&f.name.base) {
            return Err(SetdefError::Invalid(format!("line {}: `{}` is declared as input", f.line, f.name.base)));
        }
        seen.insert(f.name.base.clone());
        let bound: BTreeSet<String> = f.selectors.iter().map(|s| s.var.clone()).collect();
        if bound.len() != f.selectors.len() {
            return Err(SetdefError::Invalid(format!("line {}: a selector binds a variable twice", f.line)));
        }
        // Selector levels must not bind variables used in their own domains.
        for (k, s) in f.selectors.iter().enumerate() {
            let mut used = BTreeSet::new();
            if let Some(p) = &s.domain.param {
                p.symbols(&mut used);
            }
            if f.selectors[k..].iter().any(|later| used.contains(&later.var)) {
                return Err(SetdefError::Invalid(format!(
                    "line {}: selector `{} in {}` uses a variable bound at its own or a later level",
                    f.line, s.var, s.domain
                )));
            }
        }
    }
    let known: BTreeSet<String> = seen.iter().cloned().chain(sys.inputs.iter().cloned()).chain([UNIVERSE.to_string()]).collect();
    for f in &sys.forms {
        let mut refs: Vec<NameRef> = f.selectors.iter().map(|s| s.domain.clone()).collect();
        match &f.body {
            Body::Beta(g) => g.domains(&mut refs),
            Body::Gamma(b, g) => {
                refs.push(b.clone());
                g.domains(&mut refs);
            }
            _ => {}
        }
        if let Some(r) = refs.iter().find(|r| !known.contains(&r.base)) {
            return Err(SetdefError::Invalid(format!("line {}: no form defines `{}`", f.line, r.base)));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infers_kinds() {
        let src = "universe a, b\nS0 = {a}\nS = { forall x in S exists y in S p(x, y) }\n\
            C = { S0, e(x, y) }\nT[z] = { f(z) ; z in S0 }\nE = {}";
        let sys = parse_system(src).unwrap();
        let kinds: Vec<Kind> = sys.forms.iter().map(Form::kind).collect();
        assert_eq!(kinds, [Kind::Alpha, Kind::Beta, Kind::Gamma, Kind::Delta, Kind::Alpha]);
        assert_eq!(sys.forms[3].body, Body::Delta(TermExpr::App("f".into(), vec![TermExpr::Sym("z".into())])));
        assert_eq!(sys.universe.len(), 2);
    }

    #[test]
    fn comparison_and_implication() {
        let src = "S = { forall l in S forall x in E[l] forall y in E[l] (exp(x) > exp(y) => sal(x) > sal(y)) }\nE[l1] = {e1}";
        let sys = parse_system(src).unwrap();
        let Body::Beta(f) = &sys.forms[0].body else { panic!() };
        let (prefix, matrix) = f.prefix();
        assert_eq!(prefix.len(), 3);
        assert!(matches!(matrix, Formula::Implies(..)));
    }

    #[test]
    fn unknown_name_rejected() {
        assert!(matches!(parse_system("S = { forall x in T p(x) }"), Err(SetdefError::Invalid(_))));
        assert!(parse_system("input T\nS = { forall x in T p(x) }").is_ok());
    }

    #[test]
    fn interpretation_sections_follow() {
        let sys = parse_system("universe q1\nS = { forall x in S p(x, x) }\n[diagram]\np(q1, q1)\n[mode]\nclosed").unwrap();
        assert!(matches!(sys.interp, AnyInterpretation::Standard(_)));
    }
}
