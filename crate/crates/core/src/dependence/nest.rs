//! Loop nests: a schema plus counter, parameter and index-function
//! declarations.
//!
//! ```text
//! param N = 4
//! counter BI i = 1..N
//! define dec(x) = x - 1
//! start m0
//! ...
//! ```
//!
//! Directive lines may appear anywhere; every other line is schema text.

use std::collections::BTreeMap;

use super::poly::{parse_poly, Poly};
use super::DepError;
use crate::schema::ast::{IndexExpr, InstrKind, Operand, Variable};
use crate::schema::{parse_schema, validate_l, Schema};
use crate::text::{strip_comment, Cursor, ParseError, Tok};
use crate::transform::is_forward_oriented;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counter {
    pub var: String,
    pub lo: Poly,
    pub hi: Poly,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexFunction {
    pub params: Vec<String>,
    pub body: Poly,
}

#[derive(Debug, Clone)]
pub struct LoopNest {
    pub schema: Schema,
    pub params: BTreeMap<String, i64>,
    /// Loop body procedure name to its counter.
    pub counters: BTreeMap<String, Counter>,
    pub defines: BTreeMap<String, IndexFunction>,
}

/// One array access inside the nest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessSite {
    pub label: String,
    pub array: String,
    pub write: bool,
    /// Index polynomials over the counters, or the reason none exists.
    pub index: Result<Vec<Poly>, String>,
    /// Enclosing counters, outermost first, with their bounds.
    pub counters: Vec<(String, i64, i64)>,
}

const DIRECTIVES: [&str; 3] = ["param", "counter", "define"];

pub fn parse_loop_nest(src: &str, overrides: &BTreeMap<String, i64>) -> Result<LoopNest, DepError> {
    let mut schema_text = String::new();
    let mut params = BTreeMap::new();
    let mut counters = BTreeMap::new();
    let mut defines = BTreeMap::new();
    for (i, raw) in src.lines().enumerate() {
        let line_no = i + 1;
        let line = strip_comment(raw).trim();
        let mut c = Cursor::new(line, line_no)?;
        let directive = matches!(c.peek(), Some(Tok::Ident(k)) if DIRECTIVES.contains(&k.as_str()))
            && !matches!(c.peek_at(1), Some(Tok::Sym(":")));
        if !directive {
            schema_text.push_str(raw);
            schema_text.push('\n');
            continue;
        }
        schema_text.push('\n');
        let kw = c.ident()?;
        match kw.as_str() {
            "param" => {
                let name = c.ident()?;
                c.expect_sym("=")?;
                let v = c.int()?;
                params.insert(name, v);
            }
            "counter" => {
                let body = c.ident()?;
                let var = c.ident()?;
                c.expect_sym("=")?;
                let lo = parse_poly(&mut c)?;
                c.expect_sym("..")?;
                let hi = parse_poly(&mut c)?;
                if counters.insert(body.clone(), Counter { var, lo, hi }).is_some() {
                    return Err(c.err(format!("second counter for `{body}`")).into());
                }
            }
            _ => {
                let name = c.ident()?;
                c.expect_sym("(")?;
                let mut ps = Vec::new();
                if !c.eat_sym(")") {
                    loop {
                        ps.push(c.ident()?);
                        if c.eat_sym(")") {
                            break;
                        }
                        c.expect_sym(",")?;
                    }
                }
                c.expect_sym("=")?;
                let body = parse_poly(&mut c)?;
                defines.insert(name, IndexFunction { params: ps, body });
            }
        }
        c.expect_end()?;
    }
    params.extend(overrides.iter().map(|(k, v)| (k.clone(), *v)));
    let schema = parse_schema(&schema_text)?;
    for body in counters.keys() {
        if !schema.procs.contains_key(body) {
            return Err(ParseError::new(1, 1, format!("counter declared for unknown procedure `{body}`")).into());
        }
    }
    Ok(LoopNest { schema, params, counters, defines })
}

impl LoopNest {
    fn eval_bound(&self, p: &Poly) -> Result<i64, DepError> {
        p.eval(&self.params)
            .and_then(|v| i64::try_from(v).ok())
            .ok_or_else(|| DepError::Bounds(format!("bound `{p}` is not a constant under the parameters")))
    }

    /// Every array access, in execution order of first appearance.
    pub fn access_sites(&self) -> Result<Vec<AccessSite>, DepError> {
        let report = validate_l(&self.schema);
        if !report.is_l_schema() {
            return Err(DepError::NotLSchema(report.to_string()));
        }
        if !is_forward_oriented(&self.schema) {
            return Err(DepError::NotForward);
        }
        let aliases = self.aliases();
        let mut out = Vec::new();
        self.walk(crate::schema::MAIN, &mut Vec::new(), &aliases, &mut out)?;
        Ok(out)
    }

    fn walk(
        &self,
        proc_name: &str,
        scope: &mut Vec<(String, i64, i64)>,
        aliases: &BTreeMap<String, String>,
        out: &mut Vec<AccessSite>,
    ) -> Result<(), DepError> {
        let p = self.schema.proc(proc_name).expect("validated procedure");
        for label in p.topo_order().unwrap_or_default() {
            let ins = p.get(&label).expect("label");
            match &ins.kind {
                InstrKind::Assign { target, args, .. } => {
                    for a in args {
                        self.site(&label, a, false, scope, aliases, out);
                    }
                    self.site(&label, &Operand::Var(target.clone()), true, scope, aliases, out);
                }
                InstrKind::Cond { args, .. } => {
                    for a in args {
                        self.site(&label, a, false, scope, aliases, out);
                    }
                }
                InstrKind::Loop { body, args, .. } => {
                    let pushed = match self.counters.get(body) {
                        Some(c) => {
                            scope.push((c.var.clone(), self.eval_bound(&c.lo)?, self.eval_bound(&c.hi)?));
                            true
                        }
                        None => false,
                    };
                    self.walk(body, scope, aliases, out)?;
                    for a in args {
                        self.site(&label, a, false, scope, aliases, out);
                    }
                    if pushed {
                        scope.pop();
                    }
                }
                InstrKind::Call { body, .. } => self.walk(body, scope, aliases, out)?,
            }
        }
        Ok(())
    }

    fn site(
        &self,
        label: &str,
        op: &Operand,
        write: bool,
        scope: &[(String, i64, i64)],
        aliases: &BTreeMap<String, String>,
        out: &mut Vec<AccessSite>,
    ) {
        let Operand::Var(Variable::Indexed { array, index }) = op else { return };
        let index = index.iter().map(|e| self.index_poly(e, scope, aliases)).collect();
        out.push(AccessSite { label: label.to_string(), array: array.clone(), write, index, counters: scope.to_vec() });
    }

    fn index_poly(
        &self,
        e: &IndexExpr,
        scope: &[(String, i64, i64)],
        aliases: &BTreeMap<String, String>,
    ) -> Result<Poly, String> {
        let mut args = Vec::new();
        for v in &e.vars {
            let v = aliases.get(v).unwrap_or(v);
            if scope.iter().any(|(c, _, _)| c == v) {
                args.push(Poly::var(v));
            } else if let Some(k) = self.params.get(v) {
                args.push(Poly::constant(*k));
            } else {
                return Err(format!("index variable `{v}` is not an enclosing counter"));
            }
        }
        match &e.func {
            None if args.len() == 1 => Ok(args.pop().expect("one argument")),
            None => Err("index tuple without a function".into()),
            Some(f) => {
                let def = self.defines.get(f).ok_or_else(|| format!("index function `{f}` has no polynomial definition"))?;
                if def.params.len() != args.len() {
                    return Err(format!("index function `{f}` expects {} arguments", def.params.len()));
                }
                Ok(def.body.substitute(&def.params.iter().cloned().zip(args).collect()))
            }
        }
    }

    /// Copies `v = id(w)` whose every assignment copies the same source,
    /// resolved transitively.
    fn aliases(&self) -> BTreeMap<String, String> {
        let mut src: BTreeMap<String, Option<String>> = BTreeMap::new();
        for p in self.schema.levels() {
            for ins in &p.instrs {
                if let InstrKind::Assign { target: Variable::Simple(t), func, args, .. } = &ins.kind {
                    let s = match (func.as_str(), args.as_slice()) {
                        ("id", [Operand::Var(Variable::Simple(w))]) => Some(w.clone()),
                        _ => None,
                    };
                    let e = src.entry(t.clone()).or_insert(s.clone());
                    if *e != s {
                        *e = None;
                    }
                }
            }
        }
        let direct: BTreeMap<String, String> = src.into_iter().filter_map(|(k, v)| Some((k, v?))).collect();
        direct
            .keys()
            .map(|k| {
                let mut cur = k.clone();
                for _ in 0..=direct.len() {
                    match direct.get(&cur) {
                        Some(n) => cur = n.clone(),
                        None => break,
                    }
                }
                (k.clone(), cur)
            })
            .collect()
    }
}
