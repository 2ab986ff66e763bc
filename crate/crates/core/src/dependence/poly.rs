//! Multivariate integer polynomials.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::text::{Cursor, ParseError, Tok};

/// Sorted `(variable, exponent)` pairs; the empty monomial is the constant.
pub type Monomial = Vec<(String, u32)>;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Poly {
    terms: BTreeMap<Monomial, i64>,
}

impl Poly {
    pub fn constant(c: i64) -> Self {
        let mut p = Poly::default();
        if c != 0 {
            p.terms.insert(Vec::new(), c);
        }
        p
    }

    pub fn var(name: &str) -> Self {
        Poly { terms: BTreeMap::from([(vec![(name.to_string(), 1)], 1)]) }
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, i64> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|m| m.iter().map(|(_, e)| e).sum()).max().unwrap_or(0)
    }

    pub fn constant_term(&self) -> i64 {
        self.terms.get(&Vec::new()).copied().unwrap_or(0)
    }

    /// Coefficient of `v` in the degree-one part.
    pub fn linear_coeff(&self, v: &str) -> i64 {
        self.terms.get(&vec![(v.to_string(), 1)]).copied().unwrap_or(0)
    }

    pub fn vars(&self) -> BTreeSet<String> {
        self.terms.keys().flat_map(|m| m.iter().map(|(v, _)| v.clone())).collect()
    }

    fn add_term(&mut self, m: Monomial, c: i64) {
        let e = self.terms.entry(m.clone()).or_insert(0);
        *e += c;
        if *e == 0 {
            self.terms.remove(&m);
        }
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.add_term(m.clone(), *c);
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        let mut out = Poly::default();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &o.terms {
                let mut exps: BTreeMap<String, u32> = m1.iter().cloned().collect();
                for (v, e) in m2 {
                    *exps.entry(v.clone()).or_insert(0) += e;
                }
                out.add_term(exps.into_iter().collect(), c1 * c2);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Poly {
        (0..e).fold(Poly::constant(1), |acc, _| acc.mul(self))
    }

    /// Replaces variables by polynomials; unmapped variables stay.
    pub fn substitute(&self, map: &BTreeMap<String, Poly>) -> Poly {
        let mut out = Poly::default();
        for (m, c) in &self.terms {
            let mut t = Poly::constant(*c);
            for (v, e) in m {
                let base = map.get(v).cloned().unwrap_or_else(|| Poly::var(v));
                t = t.mul(&base.pow(*e));
            }
            out = out.add(&t);
        }
        out
    }

    pub fn rename(&self, f: impl Fn(&str) -> String) -> Poly {
        let map = self.vars().into_iter().map(|v| (v.clone(), Poly::var(&f(&v)))).collect();
        self.substitute(&map)
    }

    /// Value at an integer point; `None` on a missing variable or overflow.
    pub fn eval(&self, env: &BTreeMap<String, i64>) -> Option<i128> {
        let mut total: i128 = 0;
        for (m, c) in &self.terms {
            let mut t = *c as i128;
            for (v, e) in m {
                let x = *env.get(v)? as i128;
                t = t.checked_mul(x.checked_pow(*e)?)?;
            }
            total = total.checked_add(t)?;
        }
        Some(total)
    }

    /// Value at a point given in the order of `vars`.
    pub fn eval_at(&self, vars: &[String], point: &[i64]) -> Option<i128> {
        let env = vars.iter().cloned().zip(point.iter().copied()).collect();
        self.eval(&env)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        // Highest degree first, constant last.
        let mut ts: Vec<_> = self.terms.iter().collect();
        ts.sort_by_key(|(m, _)| std::cmp::Reverse(m.iter().map(|(_, e)| *e).sum::<u32>()));
        for (k, (m, c)) in ts.into_iter().enumerate() {
            let c = *c;
            let mag = c.unsigned_abs();
            if k == 0 {
                if c < 0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if c < 0 { '-' } else { '+' })?;
            }
            let body: Vec<String> = m.iter().map(|(v, e)| if *e == 1 { v.clone() } else { format!("{v}^{e}") }).collect();
            match (body.is_empty(), mag) {
                (true, _) => write!(f, "{mag}")?,
                (false, 1) => write!(f, "{}", body.join("*"))?,
                (false, _) => write!(f, "{mag}*{}", body.join("*"))?,
            }
        }
        Ok(())
    }
}

/// Parses `expr` from the cursor: `+ - *`, `^` with integer exponents,
/// parentheses, integers and variables.
pub fn parse_poly(c: &mut Cursor) -> Result<Poly, ParseError> {
    let mut acc = parse_term(c)?;
    loop {
        if c.eat_sym("+") {
            acc = acc.add(&parse_term(c)?);
        } else if c.eat_sym("-") {
            acc = acc.sub(&parse_term(c)?);
        } else {
            return Ok(acc);
        }
    }
}

fn parse_term(c: &mut Cursor) -> Result<Poly, ParseError> {
    let mut acc = parse_factor(c)?;
    while c.eat_sym("*") {
        acc = acc.mul(&parse_factor(c)?);
    }
    Ok(acc)
}

fn parse_factor(c: &mut Cursor) -> Result<Poly, ParseError> {
    if c.eat_sym("-") {
        return Ok(parse_factor(c)?.neg());
    }
    let base = match c.peek() {
        Some(Tok::Int(_)) => Poly::constant(c.int()?),
        Some(Tok::Ident(_)) => Poly::var(&c.ident()?),
        Some(Tok::Sym("(")) => {
            c.next();
            let p = parse_poly(c)?;
            c.expect_sym(")")?;
            p
        }
        _ => return Err(c.err(format!("expected polynomial term, found {}", c.describe()))),
    };
    if c.eat_sym("^") {
        let e = c.int()?;
        if !(0..=16).contains(&e) {
            return Err(c.err("exponent must lie in 0..=16"));
        }
        return Ok(base.pow(e as u32));
    }
    Ok(base)
}

pub fn parse_poly_str(src: &str) -> Result<Poly, ParseError> {
    let mut c = Cursor::new(src, 1)?;
    let p = parse_poly(&mut c)?;
    c.expect_end()?;
    Ok(p)
}
