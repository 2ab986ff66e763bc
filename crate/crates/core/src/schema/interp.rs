//! Interpretations: concrete tables with arithmetic builtins, and the
//! standard (term-model) interpretation driven by a diagram.
//!
//! File format, sections in any order:
//!
//! ```text
//! [start]
//! x = 0
//! a[1, 2] = 3/4
//! f[*] = 0            // every unset cell of f
//! [functions]
//! g(1, 2) = 5
//! [predicates]
//! p(1) = true
//! [diagram]
//! p(q1, f(q1))
//! !p(q2)
//! [mode]
//! strict              // or: closed, total SEED
//! ```
//!
//! A file with a `[diagram]` or `[mode]` section loads as a standard
//! interpretation.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ast::{InstrKind, Schema};
use super::value::{fnv, mix, Term, Value};
use crate::text::{content_lines, Cursor, ParseError, Tok};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Cell {
    Simple(String),
    Indexed(String, Vec<Value>),
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Simple(s) => write!(f, "{s}"),
            Cell::Indexed(a, idx) => {
                write!(f, "{a}[")?;
                for (i, v) in idx.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, "]")
            }
        }
    }
}

impl Cell {
    pub fn base(&self) -> &str {
        match self {
            Cell::Simple(s) | Cell::Indexed(s, _) => s,
        }
    }
}

pub type Memory = BTreeMap<Cell, Value>;

/// What an executor needs from an interpretation. `None` means the value
/// is undefined.
pub trait Semantics {
    fn start_value(&self, cell: &Cell) -> Option<Value>;
    fn apply(&self, f: &str, args: &[Value]) -> Option<Value>;
    fn test(&self, p: &str, args: &[Value]) -> Option<bool>;
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Interpretation {
    pub start: Memory,
    /// Fill value for unset cells of an array.
    pub array_defaults: BTreeMap<String, Value>,
    pub functions: BTreeMap<String, BTreeMap<Vec<Value>, Value>>,
    pub predicates: BTreeMap<String, BTreeMap<Vec<Value>, bool>>,
    /// Arithmetic builtins for symbols without a table.
    pub builtins: bool,
}

impl Interpretation {
    pub fn with_builtins() -> Self {
        Interpretation { builtins: true, ..Default::default() }
    }

    pub fn set(&mut self, name: &str, v: Value) -> &mut Self {
        self.start.insert(Cell::Simple(name.to_string()), v);
        self
    }

    pub fn set_function(&mut self, f: &str, args: Vec<Value>, v: Value) -> &mut Self {
        self.functions.entry(f.to_string()).or_default().insert(args, v);
        self
    }
}

impl Semantics for Interpretation {
    fn start_value(&self, cell: &Cell) -> Option<Value> {
        if let Some(v) = self.start.get(cell) {
            return Some(v.clone());
        }
        match cell {
            Cell::Indexed(a, _) => self.array_defaults.get(a).cloned(),
            Cell::Simple(_) => None,
        }
    }

    fn apply(&self, f: &str, args: &[Value]) -> Option<Value> {
        match self.functions.get(f) {
            Some(t) => t.get(args).cloned(),
            None if self.builtins => builtin_function(f, args),
            None => None,
        }
    }

    fn test(&self, p: &str, args: &[Value]) -> Option<bool> {
        match self.predicates.get(p) {
            Some(t) => t.get(args).copied(),
            None if self.builtins => builtin_predicate(p, args),
            None => None,
        }
    }
}

fn rats(args: &[Value]) -> Option<Vec<BigRational>> {
    args.iter().map(Value::as_rational).collect()
}

pub fn builtin_function(f: &str, args: &[Value]) -> Option<Value> {
    let r = rats(args)?;
    let one = BigRational::one();
    let out = match (f, r.as_slice()) {
        ("zero", []) => BigRational::zero(),
        ("one", []) => one,
        ("add", xs) if !xs.is_empty() => xs.iter().fold(BigRational::zero(), |a, b| a + b),
        ("mul", xs) if !xs.is_empty() => xs.iter().fold(one, |a, b| a * b),
        ("sub", [a, b]) => a - b,
        ("div", [a, b]) if !b.is_zero() => a / b,
        ("neg", [a]) => -a,
        ("succ" | "inc", [a]) => a + one,
        ("dec", [a]) => a - one,
        ("abs", [a]) => a.abs(),
        ("sq", [a]) => a * a,
        ("min", xs) if !xs.is_empty() => xs.iter().min().cloned()?,
        ("max", xs) if !xs.is_empty() => xs.iter().max().cloned()?,
        ("avg", xs) if !xs.is_empty() => {
            xs.iter().fold(BigRational::zero(), |a, b| a + b) / BigRational::from_integer(BigInt::from(xs.len()))
        }
        ("mod", [a, b]) if a.is_integer() && b.is_integer() && !b.is_zero() => {
            let (a, b) = (a.to_integer(), b.to_integer());
            BigRational::from_integer(((a % &b) + &b) % &b)
        }
        _ => return None,
    };
    Some(Value::ratio(out))
}

pub fn builtin_predicate(p: &str, args: &[Value]) -> Option<bool> {
    if let [a, b] = args {
        match p {
            "eq" => return Some(a == b),
            "ne" => return Some(a != b),
            _ => {}
        }
    }
    let r = rats(args)?;
    match (p, r.as_slice()) {
        ("lt", [a, b]) => Some(a < b),
        ("le", [a, b]) => Some(a <= b),
        ("gt", [a, b]) => Some(a > b),
        ("ge", [a, b]) => Some(a >= b),
        ("zero", [a]) => Some(a.is_zero()),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagramMode {
    /// Atoms outside the diagram are undefined.
    Strict,
    /// Atoms outside the diagram are false.
    ClosedWorld,
    /// Atoms outside the diagram are answered by a seeded coin.
    Total { seed: u64 },
}

/// Signed predicate atoms. One key holds one sign, so an atom and its
/// negation can never both be present.
pub type Diagram = BTreeMap<(String, Vec<Value>), bool>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StandardInterpretation {
    pub start: Memory,
    pub diagram: Diagram,
    pub mode: DiagramMode,
}

impl Default for StandardInterpretation {
    fn default() -> Self {
        StandardInterpretation { start: Memory::new(), diagram: Diagram::new(), mode: DiagramMode::Strict }
    }
}

impl StandardInterpretation {
    pub fn total(seed: u64) -> Self {
        StandardInterpretation { mode: DiagramMode::Total { seed }, ..Default::default() }
    }

    pub fn lookup(&self, p: &str, args: &[Value]) -> Option<bool> {
        self.diagram.get(&(p.to_string(), args.to_vec())).copied()
    }

    /// Adds a signed atom, refusing the opposite sign of one already present.
    pub fn assert_atom(&mut self, p: &str, args: Vec<Value>, sign: bool) -> Result<(), String> {
        let key = (p.to_string(), args);
        match self.diagram.get(&key) {
            Some(&s) if s != sign => Err(format!("diagram holds both {} and its negation", atom_text(&key.0, &key.1))),
            _ => {
                self.diagram.insert(key, sign);
                Ok(())
            }
        }
    }
}

pub fn atom_text(p: &str, args: &[Value]) -> String {
    let a: Vec<String> = args.iter().map(|v| v.to_string()).collect();
    format!("{p}({})", a.join(","))
}

/// Deterministic coin for an atom under a seed.
pub fn coin(seed: u64, p: &str, args: &[Value]) -> bool {
    let mut h = mix(seed ^ fnv(21, p.as_bytes()));
    for a in args {
        h = mix(h ^ a.stable_hash());
    }
    h & 1 == 1
}

impl Semantics for StandardInterpretation {
    fn start_value(&self, cell: &Cell) -> Option<Value> {
        if let Some(v) = self.start.get(cell) {
            return Some(v.clone());
        }
        Some(match cell {
            Cell::Simple(s) => Value::atom(s),
            Cell::Indexed(a, idx) => Value::Term(Term::cell(a, idx.clone())),
        })
    }

    fn apply(&self, f: &str, args: &[Value]) -> Option<Value> {
        Some(Value::Term(Term::app(f, args.to_vec())))
    }

    fn test(&self, p: &str, args: &[Value]) -> Option<bool> {
        if let Some(b) = self.lookup(p, args) {
            return Some(b);
        }
        match self.mode {
            DiagramMode::Strict => None,
            DiagramMode::ClosedWorld => Some(false),
            DiagramMode::Total { seed } => Some(coin(seed, p, args)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnyInterpretation {
    Concrete(Interpretation),
    Standard(StandardInterpretation),
}

impl Semantics for AnyInterpretation {
    fn start_value(&self, cell: &Cell) -> Option<Value> {
        match self {
            AnyInterpretation::Concrete(i) => i.start_value(cell),
            AnyInterpretation::Standard(i) => i.start_value(cell),
        }
    }

    fn apply(&self, f: &str, args: &[Value]) -> Option<Value> {
        match self {
            AnyInterpretation::Concrete(i) => i.apply(f, args),
            AnyInterpretation::Standard(i) => i.apply(f, args),
        }
    }

    fn test(&self, p: &str, args: &[Value]) -> Option<bool> {
        match self {
            AnyInterpretation::Concrete(i) => i.test(p, args),
            AnyInterpretation::Standard(i) => i.test(p, args),
        }
    }
}

/// Seeded standard interpretation for a schema. With `totality`, the
/// diagram starts empty and every query is answered by a coin; otherwise a
/// finite strict diagram is drawn over the schema's predicates applied to
/// its simple-variable atoms.
pub fn random_standard_interpretation(schema: &Schema, seed: u64, totality: bool) -> StandardInterpretation {
    if totality {
        return StandardInterpretation::total(seed);
    }
    let mut preds: BTreeMap<String, usize> = BTreeMap::new();
    let mut atoms: BTreeSet<String> = BTreeSet::new();
    for p in schema.levels() {
        for ins in &p.instrs {
            match &ins.kind {
                InstrKind::Cond { pred, args, .. } | InstrKind::Loop { pred, args, .. } => {
                    preds.insert(pred.clone(), args.len());
                }
                _ => {}
            }
            for v in ins.variables() {
                if !v.is_indexed() {
                    atoms.insert(v.base().to_string());
                }
                atoms.extend(v.index_vars().into_iter().map(String::from));
            }
        }
    }
    let atoms: Vec<Value> = atoms.iter().map(|a| Value::atom(a)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut interp = StandardInterpretation::default();
    for (p, n) in preds {
        if p == "eq" || atoms.is_empty() {
            continue;
        }
        for _ in 0..(2 * atoms.len()).max(1) {
            let args: Vec<Value> = (0..n).map(|_| atoms[rng.gen_range(0..atoms.len())].clone()).collect();
            let sign = rng.gen_bool(0.5);
            let _ = interp.assert_atom(&p, args, sign);
        }
    }
    interp
}

/// Parses a literal value: integer, `n/d` rational, string, label or term.
pub fn parse_value(c: &mut Cursor) -> Result<Value, ParseError> {
    match c.peek() {
        Some(Tok::Int(_)) | Some(Tok::Sym("-")) => {
            let n = BigInt::from(c.int()?);
            if c.eat_sym("/") {
                let d = BigInt::from(c.int()?);
                if d.is_zero() {
                    return Err(c.err("zero denominator"));
                }
                return Ok(Value::ratio(BigRational::new(n, d)));
            }
            Ok(Value::Int(n))
        }
        Some(Tok::Str(s)) => {
            let v = Value::Str(s.clone());
            c.next();
            Ok(v)
        }
        Some(Tok::Label(l)) => {
            let v = Value::Label(l.clone());
            c.next();
            Ok(v)
        }
        Some(Tok::Ident(_)) => {
            let name = c.ident()?;
            if c.eat_sym("(") {
                let args = value_list(c, ")")?;
                Ok(Value::Term(Term::app(&name, args)))
            } else if c.eat_sym("[") {
                let args = value_list(c, "]")?;
                Ok(Value::Term(Term::cell(&name, args)))
            } else {
                Ok(Value::atom(&name))
            }
        }
        _ => Err(c.err(format!("expected a value, found {}", c.describe()))),
    }
}

pub fn value_list(c: &mut Cursor, close: &str) -> Result<Vec<Value>, ParseError> {
    let mut out = Vec::new();
    if c.eat_sym(close) {
        return Ok(out);
    }
    loop {
        out.push(parse_value(c)?);
        if c.eat_sym(close) {
            return Ok(out);
        }
        c.expect_sym(",")?;
    }
}

/// Parses `p(args)` or `!p(args)` as a signed atom.
pub fn parse_signed_atom(c: &mut Cursor) -> Result<(String, Vec<Value>, bool), ParseError> {
    let sign = !c.eat_sym("!");
    let p = c.ident()?;
    c.expect_sym("(")?;
    let args = value_list(c, ")")?;
    Ok((p, args, sign))
}

pub fn parse_mode(c: &mut Cursor) -> Result<DiagramMode, ParseError> {
    let m = c.ident()?;
    match m.as_str() {
        "strict" => Ok(DiagramMode::Strict),
        "closed" => Ok(DiagramMode::ClosedWorld),
        "total" => {
            let seed = c.int()?;
            Ok(DiagramMode::Total { seed: seed as u64 })
        }
        _ => Err(c.err(format!("unknown mode `{m}`"))),
    }
}

pub fn parse_interpretation(src: &str) -> Result<AnyInterpretation, ParseError> {
    let mut concrete = Interpretation::with_builtins();
    let mut standard = StandardInterpretation::default();
    let mut is_standard = false;
    let mut section = String::new();
    for (line_no, line) in content_lines(src) {
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = name.trim().to_string();
            match section.as_str() {
                "start" | "functions" | "predicates" => {}
                "diagram" | "mode" => is_standard = true,
                _ => return Err(ParseError::new(line_no, 1, format!("unknown section [{section}]"))),
            }
            continue;
        }
        let mut c = Cursor::new(line, line_no)?;
        match section.as_str() {
            "start" => {
                let name = c.ident()?;
                let cell = if c.eat_sym("[") {
                    if c.eat_sym("*") {
                        c.expect_sym("]")?;
                        c.expect_sym("=")?;
                        let v = parse_value(&mut c)?;
                        concrete.array_defaults.insert(name, v);
                        c.expect_end()?;
                        continue;
                    }
                    Cell::Indexed(name, value_list(&mut c, "]")?)
                } else {
                    Cell::Simple(name)
                };
                c.expect_sym("=")?;
                let v = parse_value(&mut c)?;
                c.expect_end()?;
                concrete.start.insert(cell.clone(), v.clone());
                standard.start.insert(cell, v);
            }
            "functions" => {
                let f = c.ident()?;
                c.expect_sym("(")?;
                let args = value_list(&mut c, ")")?;
                c.expect_sym("=")?;
                let v = parse_value(&mut c)?;
                c.expect_end()?;
                concrete.functions.entry(f).or_default().insert(args, v);
            }
            "predicates" => {
                let p = c.ident()?;
                c.expect_sym("(")?;
                let args = value_list(&mut c, ")")?;
                c.expect_sym("=")?;
                let b = match c.ident()?.as_str() {
                    "true" => true,
                    "false" => false,
                    other => return Err(c.err(format!("expected true or false, found `{other}`"))),
                };
                c.expect_end()?;
                concrete.predicates.entry(p).or_default().insert(args, b);
            }
            "diagram" => {
                let (p, args, sign) = parse_signed_atom(&mut c)?;
                c.expect_end()?;
                standard.assert_atom(&p, args, sign).map_err(|m| ParseError::new(line_no, 1, m))?;
            }
            "mode" => {
                standard.mode = parse_mode(&mut c)?;
                c.expect_end()?;
            }
            _ => return Err(ParseError::new(line_no, 1, "content before any section header")),
        }
    }
    Ok(if is_standard { AnyInterpretation::Standard(standard) } else { AnyInterpretation::Concrete(concrete) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_are_exact() {
        let third = builtin_function("div", &[Value::int(1), Value::int(3)]).unwrap();
        let sum = builtin_function("add", &[third.clone(), third.clone(), third]).unwrap();
        assert_eq!(sum, Value::int(1));
        assert_eq!(builtin_function("div", &[Value::int(1), Value::int(0)]), None);
        assert_eq!(builtin_predicate("lt", &[Value::int(1), Value::int(2)]), Some(true));
        assert_eq!(builtin_function("mod", &[Value::int(-1), Value::int(3)]), Some(Value::int(2)));
    }

    #[test]
    fn loads_concrete_file() {
        let src = "[start]\nx = 3/6\nf[*] = 0\na[1, 2] = -4\n[functions]\ng(1) = 5\n[predicates]\np(1) = false\n";
        let AnyInterpretation::Concrete(i) = parse_interpretation(src).unwrap() else { panic!() };
        assert_eq!(i.start_value(&Cell::Simple("x".into())).unwrap().to_string(), "1/2");
        assert_eq!(i.start_value(&Cell::Indexed("f".into(), vec![Value::int(9)])), Some(Value::int(0)));
        assert_eq!(i.apply("g", &[Value::int(1)]), Some(Value::int(5)));
        assert_eq!(i.apply("g", &[Value::int(2)]), None);
        assert_eq!(i.test("p", &[Value::int(1)]), Some(false));
    }

    #[test]
    fn loads_diagram_and_rejects_contradiction() {
        let src = "[diagram]\np(q1, f(q1))\n!p(q2, a[q1])\n[mode]\nclosed\n";
        let AnyInterpretation::Standard(s) = parse_interpretation(src).unwrap() else { panic!() };
        let f = Value::Term(Term::app("f", vec![Value::atom("q1")]));
        assert_eq!(s.test("p", &[Value::atom("q1"), f]), Some(true));
        assert_eq!(s.test("p", &[Value::atom("zz"), Value::atom("zz")]), Some(false));
        let bad = "[diagram]\np(q1)\n!p(q1)\n";
        assert!(parse_interpretation(bad).is_err());
    }

    #[test]
    fn strict_total_modes() {
        let mut s = StandardInterpretation::default();
        assert_eq!(s.test("p", &[Value::atom("x")]), None);
        s.mode = DiagramMode::Total { seed: 5 };
        let a = s.test("p", &[Value::atom("x")]);
        assert!(a.is_some());
        assert_eq!(a, s.test("p", &[Value::atom("x")]));
        assert_eq!(s.start_value(&Cell::Simple("x".into())), Some(Value::atom("x")));
    }
}
