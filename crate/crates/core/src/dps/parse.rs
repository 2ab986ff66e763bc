//! Text form of a specification. Header lines set the start data and the
//! strategy; each `system` line opens a system and the rule lines after it
//! belong to it.
//!
//! ```text
//! start S1 = 1..8
//! strategy snapshot
//! system F1(S1) need S1 2
//!   S1 = pairsum(S1)
//! system Tag(S1) always when forall v in S1 v > 0
//!   T = succ[S1]
//! ```
//!
//! Rules are `{v, ...}`, `f[A, B]` over a builtin, `succ`, `zero` or
//! `proj(m)`, `pairsum(S[, seed])` and `count(S, delta)`. A `when` guard
//! runs to the end of the line. `merge union` lets snapshot writes to one
//! name combine.

use std::collections::BTreeSet;

use crate::schema::Value;
use crate::setdef::ast::{alpha_items, parse_formula};
use crate::setdef::{Family, SetName};
use crate::text::{content_lines, Cursor, ParseError};

use super::{Dps, DpsError, DpsSystem, Func, Guard, SetExpr, Strategy, Trigger};

fn seed(c: &mut Cursor) -> Result<Option<u64>, ParseError> {
    if !c.eat_kw("seed") {
        return Ok(None);
    }
    let n = c.int()?;
    u64::try_from(n).map(Some).map_err(|_| c.err("seed must be nonnegative"))
}

fn start_values(c: &mut Cursor) -> Result<BTreeSet<Value>, ParseError> {
    if c.eat_sym("{") {
        let items = alpha_items(c)?;
        c.expect_sym("}")?;
        return Ok(items.into_iter().collect());
    }
    let lo = c.int()?;
    c.expect_sym("..")?;
    let hi = c.int()?;
    Ok((lo..=hi).map(Value::int).collect())
}

fn names(c: &mut Cursor) -> Result<Vec<String>, ParseError> {
    let mut out = Vec::new();
    loop {
        out.push(c.ident()?);
        if !c.eat_sym(",") {
            return Ok(out);
        }
    }
}

fn rule(c: &mut Cursor) -> Result<SetExpr, ParseError> {
    if c.eat_sym("{") {
        let items = alpha_items(c)?;
        c.expect_sym("}")?;
        return Ok(SetExpr::Lit(items));
    }
    let word = c.ident()?;
    match word.as_str() {
        "pairsum" => {
            c.expect_sym("(")?;
            let s = c.ident()?;
            let seed =
                if c.eat_sym(",") { Some(u64::try_from(c.int()?).map_err(|_| c.err("seed must be nonnegative"))?) } else { None };
            c.expect_sym(")")?;
            Ok(SetExpr::PairSum(s, seed))
        }
        "count" => {
            c.expect_sym("(")?;
            let s = c.ident()?;
            c.expect_sym(",")?;
            let d = c.int()?;
            c.expect_sym(")")?;
            Ok(SetExpr::Count(s, d))
        }
        _ => {
            let func = match word.as_str() {
                "zero" => Func::Zero,
                "succ" => Func::Succ,
                "proj" => {
                    c.expect_sym("(")?;
                    let m = usize::try_from(c.int()?)
                        .ok()
                        .filter(|&m| m > 0)
                        .ok_or_else(|| c.err("projection index must be positive"))?;
                    c.expect_sym(")")?;
                    Func::Proj(m)
                }
                other => Func::Builtin(other.to_string()),
            };
            c.expect_sym("[")?;
            let args = names(c)?;
            c.expect_sym("]")?;
            Ok(SetExpr::Apply(func, args))
        }
    }
}

/// Parses a specification and its start family.
pub fn parse_dps(src: &str) -> Result<(Dps, Family), DpsError> {
    let mut systems: Vec<DpsSystem> = Vec::new();
    let mut start = Family::new();
    let mut start_names = Vec::new();
    let mut strategy = Strategy::Snapshot;
    let mut merge_union = false;
    for (no, line) in content_lines(src) {
        let mut c = Cursor::new(line, no)?;
        if c.eat_kw("start") {
            let name = c.ident()?;
            c.expect_sym("=")?;
            let vals = start_values(&mut c)?;
            if start_names.contains(&name) {
                return Err(c.err(format!("start set `{name}` given twice")).into());
            }
            if !vals.is_empty() {
                start.insert(SetName::plain(&name), vals);
            }
            start_names.push(name);
        } else if c.eat_kw("strategy") {
            strategy = match c.ident()?.as_str() {
                "snapshot" => Strategy::Snapshot,
                "sequential" => Strategy::Sequential(seed(&mut c)?),
                "single" => Strategy::Single(seed(&mut c)?),
                other => return Err(c.err(format!("unknown strategy `{other}`")).into()),
            };
        } else if c.eat_kw("merge") {
            c.expect_kw("union")?;
            merge_union = true;
        } else if c.eat_kw("system") {
            let name = c.ident()?;
            c.expect_sym("(")?;
            let inputs = if c.eat_sym(")") {
                Vec::new()
            } else {
                let ns = names(&mut c)?;
                c.expect_sym(")")?;
                ns
            };
            let mut trigger = Trigger::Updated;
            let mut guards = Vec::new();
            loop {
                if c.eat_kw("always") {
                    trigger = Trigger::Always;
                } else if c.eat_kw("need") {
                    let s = c.ident()?;
                    let k = usize::try_from(c.int()?).map_err(|_| c.err("count must be nonnegative"))?;
                    guards.push(Guard::AtLeast(s, k));
                } else if c.eat_kw("when") {
                    guards.push(Guard::Holds(parse_formula(&mut c)?));
                } else {
                    break;
                }
            }
            systems.push(DpsSystem { name, inputs, trigger, guards, rules: Vec::new() });
        } else {
            let Some(sys) = systems.last_mut() else {
                return Err(c.err(format!("expected `start`, `strategy` or `system`, found {}", c.describe())).into());
            };
            let name = c.ident()?;
            c.expect_sym("=")?;
            sys.rules.push((name, rule(&mut c)?));
        }
        c.expect_end()?;
    }
    if let Some(s) = systems.iter().find(|s| s.rules.is_empty()) {
        return Err(DpsError::Invalid(format!("system {} has no rules", s.name)));
    }
    let dps = Dps { systems, start: start_names, strategy, merge_union };
    dps.validate()?;
    Ok((dps, start))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summation_text() {
        let (dps, start) = parse_dps("start S1 = 1..8\nsystem F1(S1) need S1 2\n  S1 = pairsum(S1)").unwrap();
        assert_eq!(dps.systems[0].rules, vec![("S1".to_string(), SetExpr::PairSum("S1".into(), None))]);
        assert_eq!(start[&SetName::plain("S1")].len(), 8);
    }

    #[test]
    fn headers_and_guards() {
        let src = "start A = {1, 2}\nstrategy single seed 4\nmerge union\nsystem G(A) always when forall v in A v > 0\n  B = add[A, A]\n  C = proj(1)[A]";
        let (dps, _) = parse_dps(src).unwrap();
        assert_eq!(dps.strategy, Strategy::Single(Some(4)));
        assert!(dps.merge_union);
        assert_eq!(dps.systems[0].trigger, Trigger::Always);
        assert!(matches!(dps.systems[0].guards[0], Guard::Holds(_)));
        assert_eq!(dps.systems[0].rules[1].1, SetExpr::Apply(Func::Proj(1), vec!["A".into()]));
    }

    #[test]
    fn errors_carry_lines() {
        let e = parse_dps("start A = {1}\n  B = {2}").unwrap_err().to_string();
        assert!(e.starts_with("line 2"), "{e}");
        assert!(parse_dps("system F(A)\n B = {1}\n B = {2}").is_err());
        assert!(parse_dps("system F(A)").is_err());
    }
}
