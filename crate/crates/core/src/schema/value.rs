//! Values stored in memory cells: integers, rationals, strings, label
//! literals, set names and terms of the standard interpretation.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Int(BigInt),
    Rat(BigRational),
    Str(String),
    Label(String),
    Name(String),
    Term(Term),
}

impl Value {
    pub fn int(n: i64) -> Value {
        Value::Int(BigInt::from(n))
    }

    /// Rational value, collapsed to `Int` when the denominator is one.
    pub fn ratio(r: BigRational) -> Value {
        if r.denom().is_one() {
            Value::Int(r.numer().clone())
        } else {
            Value::Rat(r)
        }
    }

    pub fn atom(name: &str) -> Value {
        Value::Term(Term::atom(name))
    }

    pub fn as_int(&self) -> Option<&BigInt> {
        match self {
            Value::Int(n) => Some(n),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        self.as_int().and_then(|n| n.to_i64())
    }

    pub fn as_rational(&self) -> Option<BigRational> {
        match self {
            Value::Int(n) => Some(BigRational::from_integer(n.clone())),
            Value::Rat(r) => Some(r.clone()),
            _ => None,
        }
    }

    pub fn as_term(&self) -> Option<&Term> {
        match self {
            Value::Term(t) => Some(t),
            _ => None,
        }
    }

    /// Hash that does not depend on the std hasher, so seeded coins are
    /// reproducible across builds.
    pub fn stable_hash(&self) -> u64 {
        match self {
            Value::Int(n) => mix(fnv(1, n.to_string().as_bytes())),
            Value::Rat(r) => mix(fnv(2, r.to_string().as_bytes())),
            Value::Str(s) => mix(fnv(3, s.as_bytes())),
            Value::Label(s) => mix(fnv(4, s.as_bytes())),
            Value::Name(s) => mix(fnv(5, s.as_bytes())),
            Value::Term(t) => t.0.hash,
        }
    }
}

impl From<i64> for Value {
    fn from(n: i64) -> Self {
        Value::int(n)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Rat(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Value::Str(s) => write!(f, "{s:?}"),
            Value::Label(s) => write!(f, "'{s}"),
            Value::Name(s) => write!(f, "{s}"),
            Value::Term(t) => write!(f, "{t}"),
        }
    }
}

pub(crate) fn fnv(seed: u64, bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ seed.wrapping_mul(0x100_0000_01b3);
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    h
}

/// splitmix64 finalizer.
pub(crate) fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A term of the standard interpretation. Sub-terms are shared, and each
/// node caches a structural hash so equality and seeded predicate coins stay
/// cheap even for deeply nested values.
#[derive(Clone)]
pub struct Term(Arc<Node>);

struct Node {
    kind: TermKind,
    hash: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum TermKind {
    Atom(Arc<str>),
    App(Arc<str>, Vec<Value>),
    /// Content of an array cell that was never written: `a[i,j]`.
    Cell(Arc<str>, Vec<Value>),
}

impl Term {
    pub fn atom(name: &str) -> Term {
        Term::from_kind(TermKind::Atom(name.into()))
    }

    pub fn app(f: &str, args: Vec<Value>) -> Term {
        Term::from_kind(TermKind::App(f.into(), args))
    }

    pub fn cell(array: &str, index: Vec<Value>) -> Term {
        Term::from_kind(TermKind::Cell(array.into(), index))
    }

    fn from_kind(kind: TermKind) -> Term {
        let hash = match &kind {
            TermKind::Atom(a) => mix(fnv(11, a.as_bytes())),
            TermKind::App(f, args) | TermKind::Cell(f, args) => {
                let tag = if matches!(kind, TermKind::App(..)) { 12 } else { 13 };
                let mut h = fnv(tag, f.as_bytes());
                for a in args {
                    h = mix(h ^ a.stable_hash());
                }
                h
            }
        };
        Term(Arc::new(Node { kind, hash }))
    }

    pub fn kind(&self) -> &TermKind {
        &self.0.kind
    }

    pub fn is_atom(&self) -> bool {
        matches!(self.0.kind, TermKind::Atom(_))
    }

    /// Nesting depth of `[...]` brackets.
    pub fn bracket_depth(&self) -> usize {
        match &self.0.kind {
            TermKind::Atom(_) => 0,
            TermKind::App(_, args) => args.iter().map(value_bracket_depth).max().unwrap_or(0),
            TermKind::Cell(_, idx) => 1 + idx.iter().map(value_bracket_depth).max().unwrap_or(0),
        }
    }

    /// Function and array symbols occurring in the term, plus its atoms.
    pub fn symbols(&self, funcs: &mut Vec<String>, atoms: &mut Vec<String>) {
        match &self.0.kind {
            TermKind::Atom(a) => atoms.push(a.to_string()),
            TermKind::App(f, args) | TermKind::Cell(f, args) => {
                funcs.push(f.to_string());
                for a in args {
                    if let Value::Term(t) = a {
                        t.symbols(funcs, atoms);
                    }
                }
            }
        }
    }
}

pub fn value_bracket_depth(v: &Value) -> usize {
    match v {
        Value::Term(t) => t.bracket_depth(),
        _ => 0,
    }
}

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || (self.0.hash == other.0.hash && self.0.kind == other.0.kind)
    }
}

impl Eq for Term {}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Term {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ordering::Equal;
        }
        self.0.kind.cmp(&other.0.kind)
    }
}

impl Hash for Term {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.hash.hash(state);
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Term({self})")
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0.kind {
            TermKind::Atom(a) => write!(f, "{a}"),
            TermKind::App(g, args) => {
                write!(f, "{g}(")?;
                write_list(f, args)?;
                write!(f, ")")
            }
            TermKind::Cell(a, idx) => {
                write!(f, "{a}[")?;
                write_list(f, idx)?;
                write!(f, "]")
            }
        }
    }
}

fn write_list(f: &mut fmt::Formatter<'_>, vals: &[Value]) -> fmt::Result {
    for (i, v) in vals.iter().enumerate() {
        if i > 0 {
            write!(f, ",")?;
        }
        write!(f, "{v}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_collapses_integers() {
        let r = BigRational::new(BigInt::from(6), BigInt::from(3));
        assert_eq!(Value::ratio(r), Value::int(2));
        let r = BigRational::new(BigInt::from(3), BigInt::from(4));
        assert_eq!(Value::ratio(r).to_string(), "3/4");
    }

    #[test]
    fn term_display_and_depth() {
        let p = Value::atom("p0");
        let inner = Term::cell("link", vec![Value::Term(Term::app("k", vec![p]))]);
        let t = Term::app("f", vec![Value::Term(inner)]);
        assert_eq!(t.to_string(), "f(link[k(p0)])");
        assert_eq!(t.bracket_depth(), 1);
        let outer = Term::cell("a", vec![Value::Term(t)]);
        assert_eq!(outer.bracket_depth(), 2);
    }

    #[test]
    fn structural_equality_ignores_sharing() {
        let a = Term::app("f", vec![Value::atom("x"), Value::int(1)]);
        let b = Term::app("f", vec![Value::atom("x"), Value::int(1)]);
        assert_eq!(a, b);
        assert_eq!(Value::Term(a.clone()).stable_hash(), Value::Term(b).stable_hash());
        assert_ne!(a, Term::app("f", vec![Value::atom("x"), Value::int(2)]));
    }
}
