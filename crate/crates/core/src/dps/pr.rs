//! Partial recursive functions as specifications. Argument `k` arrives as
//! the one-element set `xk` and the value is left in `z`.
//!
//! ```text
//! primrec(proj(1, 1), compose(succ, proj(2, 3)))      // y + x
//! minimize(compose(builtin(abs, 1), compose(builtin(sub, 2), proj(2, 2), compose(builtin(sq, 1), proj(1, 2)))))
//! ```
//!
//! Primitive recursion reads its first argument as the recursion variable:
//! `f(0, x) = g(x)` and `f(y + 1, x) = h(y, f(y, x), x)`. Minimization
//! returns the least `y` with `g(y, x) = 0`.

use std::fmt;

use crate::schema::Value;
use crate::setdef::{Family, Formula, NameRef, Quant, SetName, TermExpr};
use crate::text::{Cursor, ParseError};

use super::{Dps, DpsError, DpsSystem, Func, Guard, SetExpr, Trigger};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PrSpec {
    /// Unary constant zero.
    Zero,
    Succ,
    /// `Proj(m, n)`: the m-th of n arguments.
    Proj(usize, usize),
    /// `Compose(g, [h1, ..., hm])` is `g(h1(x), ..., hm(x))`.
    Compose(Box<PrSpec>, Vec<PrSpec>),
    Primrec(Box<PrSpec>, Box<PrSpec>),
    Minimize(Box<PrSpec>),
    /// An arithmetic builtin with its arity.
    Builtin(String, usize),
}

impl PrSpec {
    pub fn add() -> PrSpec {
        PrSpec::Primrec(Box::new(PrSpec::Proj(1, 1)), Box::new(PrSpec::Compose(Box::new(PrSpec::Succ), vec![PrSpec::Proj(2, 3)])))
    }

    /// Least `y` with `|x - y*y| = 0`: the integer square root when `x` is a
    /// perfect square, undefined otherwise.
    pub fn exact_root() -> PrSpec {
        let b = |n: &str, k| PrSpec::Builtin(n.into(), k);
        let square_y = PrSpec::Compose(Box::new(b("sq", 1)), vec![PrSpec::Proj(1, 2)]);
        let diff = PrSpec::Compose(Box::new(b("sub", 2)), vec![PrSpec::Proj(2, 2), square_y]);
        PrSpec::Minimize(Box::new(PrSpec::Compose(Box::new(b("abs", 1)), vec![diff])))
    }

    pub fn arity(&self) -> Result<usize, DpsError> {
        let bad = |m: String| Err(DpsError::Invalid(m));
        match self {
            PrSpec::Zero | PrSpec::Succ => Ok(1),
            PrSpec::Proj(m, n) if *m >= 1 && m <= n => Ok(*n),
            PrSpec::Proj(m, n) => bad(format!("proj({m}, {n}) selects no argument")),
            PrSpec::Builtin(_, k) => Ok(*k),
            PrSpec::Compose(g, hs) => {
                let Some(first) = hs.first() else { return bad("compose needs at least one inner function".into()) };
                let n = first.arity()?;
                for h in hs {
                    if h.arity()? != n {
                        return bad(format!("inner functions of {self} differ in arity"));
                    }
                }
                if g.arity()? != hs.len() {
                    return bad(format!("{g} takes {} arguments, given {}", g.arity()?, hs.len()));
                }
                Ok(n)
            }
            PrSpec::Primrec(g, h) => {
                let n = g.arity()?;
                if h.arity()? != n + 2 {
                    return bad(format!("step {h} must take {} arguments", n + 2));
                }
                Ok(n + 1)
            }
            PrSpec::Minimize(g) => match g.arity()? {
                0 => bad("minimize needs a function of at least one argument".into()),
                k => Ok(k - 1),
            },
        }
    }
}

impl fmt::Display for PrSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrSpec::Zero => write!(f, "zero"),
            PrSpec::Succ => write!(f, "succ"),
            PrSpec::Proj(m, n) => write!(f, "proj({m}, {n})"),
            PrSpec::Builtin(b, k) => write!(f, "builtin({b}, {k})"),
            PrSpec::Compose(g, hs) => {
                write!(f, "compose({g}")?;
                for h in hs {
                    write!(f, ", {h}")?;
                }
                write!(f, ")")
            }
            PrSpec::Primrec(g, h) => write!(f, "primrec({g}, {h})"),
            PrSpec::Minimize(g) => write!(f, "minimize({g})"),
        }
    }
}

fn parse_spec(c: &mut Cursor) -> Result<PrSpec, ParseError> {
    let word = c.ident()?;
    let count = |c: &mut Cursor| -> Result<usize, ParseError> {
        let n = c.int()?;
        usize::try_from(n).map_err(|_| c.err("expected a nonnegative count"))
    };
    let spec = match word.as_str() {
        "zero" => PrSpec::Zero,
        "succ" => PrSpec::Succ,
        "add" => PrSpec::add(),
        "root" => PrSpec::exact_root(),
        "proj" => {
            c.expect_sym("(")?;
            let m = count(c)?;
            c.expect_sym(",")?;
            let n = count(c)?;
            c.expect_sym(")")?;
            PrSpec::Proj(m, n)
        }
        "builtin" => {
            c.expect_sym("(")?;
            let name = c.ident()?;
            c.expect_sym(",")?;
            let k = count(c)?;
            c.expect_sym(")")?;
            PrSpec::Builtin(name, k)
        }
        "compose" | "primrec" | "minimize" => {
            c.expect_sym("(")?;
            let mut parts = vec![parse_spec(c)?];
            while c.eat_sym(",") {
                parts.push(parse_spec(c)?);
            }
            c.expect_sym(")")?;
            match (word.as_str(), parts.len()) {
                ("compose", n) if n >= 2 => {
                    let g = parts.remove(0);
                    PrSpec::Compose(Box::new(g), parts)
                }
                ("primrec", 2) => {
                    let h = parts.pop().expect("two");
                    PrSpec::Primrec(Box::new(parts.pop().expect("two")), Box::new(h))
                }
                ("minimize", 1) => PrSpec::Minimize(Box::new(parts.pop().expect("one"))),
                (w, n) => return Err(c.err(format!("{w} does not take {n} functions"))),
            }
        }
        other => return Err(c.err(format!("unknown function `{other}`"))),
    };
    Ok(spec)
}

pub fn parse_pr(src: &str) -> Result<PrSpec, DpsError> {
    let mut c = Cursor::new(src.trim(), 1)?;
    let spec = parse_spec(&mut c)?;
    c.expect_end()?;
    spec.arity()?;
    Ok(spec)
}

fn arg(k: usize) -> String {
    format!("x{k}")
}

fn args(n: usize) -> Vec<String> {
    (1..=n).map(arg).collect()
}

fn system(name: &str, inputs: Vec<String>, guards: Vec<Guard>, rules: Vec<(&str, SetExpr)>) -> DpsSystem {
    DpsSystem {
        name: name.into(),
        inputs,
        trigger: Trigger::Updated,
        guards,
        rules: rules.into_iter().map(|(n, e)| (n.to_string(), e)).collect(),
    }
}

fn call(spec: &PrSpec, inputs: Vec<String>) -> Result<SetExpr, DpsError> {
    Ok(SetExpr::Call(Box::new(build_pr(spec)?), inputs))
}

fn forall(var: &str, set: &str, body: Formula) -> Formula {
    Formula::Quant(Quant::Forall, var.into(), NameRef { base: set.into(), param: None }, Box::new(body))
}

fn atom(p: &str, a: TermExpr, b: TermExpr) -> Formula {
    Formula::Atom(p.into(), vec![a, b])
}

pub fn build_pr(spec: &PrSpec) -> Result<Dps, DpsError> {
    let n = spec.arity()?;
    let xs = args(n);
    let start: Vec<&str> = xs.iter().map(String::as_str).collect();
    let basic = |f: Func| Dps::new(vec![system("B", xs.clone(), vec![], vec![("z", SetExpr::Apply(f, xs.clone()))])], &start);
    Ok(match spec {
        PrSpec::Zero => basic(Func::Zero),
        PrSpec::Succ => basic(Func::Succ),
        PrSpec::Proj(m, _) => basic(Func::Proj(*m)),
        PrSpec::Builtin(b, _) => basic(Func::Builtin(b.clone())),
        PrSpec::Compose(g, hs) => {
            let mut systems = Vec::new();
            let mut inner = Vec::new();
            for (k, h) in hs.iter().enumerate() {
                let t = format!("t{}", k + 1);
                systems.push(DpsSystem {
                    name: format!("H{}", k + 1),
                    inputs: xs.clone(),
                    trigger: Trigger::Updated,
                    guards: vec![],
                    rules: vec![(t.clone(), call(h, xs.clone())?)],
                });
                inner.push(t);
            }
            systems.push(system("G", inner.clone(), vec![], vec![("z", call(g, inner)?)]));
            Dps::new(systems, &start)
        }
        PrSpec::Primrec(g, h) => {
            let rest: Vec<String> = xs[1..].to_vec();
            let f1 =
                system("F1", xs.clone(), vec![], vec![("z", call(g, rest.clone())?), ("i", SetExpr::Lit(vec![Value::int(0)]))]);
            // Count while every counter value is below the recursion argument.
            let below = forall("v", "x1", forall("u", "i", atom("lt", TermExpr::Sym("u".into()), TermExpr::Sym("v".into()))));
            let h_args: Vec<String> = ["i".to_string(), "z".to_string()].into_iter().chain(rest).collect();
            let f2 = system(
                "F2",
                vec!["i".into(), "z".into()],
                vec![Guard::Holds(below)],
                vec![("i", SetExpr::Apply(Func::Succ, vec!["i".into()])), ("z", call(h, h_args)?)],
            );
            Dps::new(vec![f1, f2], &start)
        }
        PrSpec::Minimize(g) => {
            let f1 = system("F1", xs.clone(), vec![], vec![("i", SetExpr::Lit(vec![Value::int(0)]))]);
            let nonzero = forall("y", "u", atom("ne", TermExpr::Sym("y".into()), TermExpr::Const(Value::int(0))));
            let g_args: Vec<String> = ["i".to_string()].into_iter().chain(xs.iter().cloned()).collect();
            let mut inputs = vec!["i".to_string()];
            inputs.extend(xs.iter().cloned());
            let f2 = system(
                "F2",
                inputs,
                vec![Guard::Holds(nonzero)],
                vec![
                    ("i", SetExpr::Apply(Func::Succ, vec!["i".into()])),
                    ("u", call(g, g_args)?),
                    ("z", SetExpr::Apply(Func::Proj(1), vec!["i".into()])),
                ],
            );
            Dps::new(vec![f1, f2], &start)
        }
    })
}

/// Start family for the arguments.
pub fn pr_start(values: &[i64]) -> Family {
    values.iter().enumerate().map(|(k, v)| (SetName::plain(&arg(k + 1)), [Value::int(*v)].into())).collect()
}

#[cfg(test)]
mod tests {
    use super::super::engine::{run_dps, Status};
    use super::*;

    fn run(spec: &PrSpec, xs: &[i64], fuel: u64) -> (Status, Vec<Value>) {
        let r = run_dps(&build_pr(spec).unwrap(), &pr_start(xs), fuel).unwrap();
        (r.status, r.set("z").into_iter().collect())
    }

    #[test]
    fn projection() {
        assert_eq!(run(&PrSpec::Proj(2, 3), &[5, 7, 9], 10), (Status::Quiescent, vec![Value::int(7)]));
    }

    #[test]
    fn add_three_four() {
        assert_eq!(run(&PrSpec::add(), &[3, 4], 1000), (Status::Quiescent, vec![Value::int(7)]));
    }

    #[test]
    fn parse_round_trip() {
        for s in ["zero", "proj(2, 3)", "compose(succ, proj(2, 3))", "primrec(proj(1, 1), compose(succ, proj(2, 3)))"] {
            assert_eq!(parse_pr(s).unwrap().to_string(), s);
        }
        assert_eq!(parse_pr("add").unwrap(), PrSpec::add());
        assert!(parse_pr("primrec(zero, zero)").is_err());
        assert!(parse_pr("proj(3, 2)").is_err());
    }

    #[test]
    fn minimization() {
        assert_eq!(run(&PrSpec::exact_root(), &[9], 10_000), (Status::Quiescent, vec![Value::int(3)]));
        assert_eq!(run(&PrSpec::exact_root(), &[7], 2_000).0, Status::FuelExhausted);
    }
}
