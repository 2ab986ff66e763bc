//! Schema DSL.
//!
//! ```text
//! aux v1, v2
//! start m0
//! m0: x = g(x, a[k(z)]) then m1
//! m1: if p(x) then m2 else m3
//! m2: do Body while q(x) then m3
//! m3: halt
//! proc Body start b0
//! b0: do Other then b1
//! b1: halt
//! ```
//!
//! `x = y`, `x = 5` and `x = 'm1` abbreviate `x = id(...)`. A trailing `;`
//! on any line is ignored.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::{IndexExpr, InstrKind, Instruction, Operand, Procedure, Schema, Variable, MAIN};
use super::value::Value;
use crate::text::{content_lines, Cursor, ParseError, Tok};

pub fn parse_schema(src: &str) -> Result<Schema, ParseError> {
    let mut aux = BTreeSet::new();
    let mut main: Option<Procedure> = None;
    let mut procs: BTreeMap<String, Procedure> = BTreeMap::new();
    let mut current: Option<String> = None;
    let mut seen_labels: BTreeMap<String, usize> = BTreeMap::new();
    let mut dims: BTreeMap<String, usize> = BTreeMap::new();

    for (line_no, line) in content_lines(src) {
        let mut c = Cursor::new(line, line_no)?;
        if c.eat_kw("aux") {
            loop {
                aux.insert(c.ident()?);
                if !c.eat_sym(",") {
                    break;
                }
            }
            finish(&mut c)?;
            continue;
        }
        if c.is_kw("start") && !matches!(c.peek_at(1), Some(Tok::Sym(":"))) {
            c.next();
            if main.is_some() {
                return Err(c.err("second `start` line"));
            }
            let col = c.col();
            let start = c.ident()?;
            let mut p = Procedure { name: MAIN.into(), start: start.clone(), instrs: vec![], finals: vec![] };
            if c.eat_sym(":") {
                c.expect_kw("halt")?;
                claim(&mut seen_labels, &start, line_no, col)?;
                p.finals.push(start);
            }
            finish(&mut c)?;
            main = Some(p);
            current = Some(MAIN.into());
            continue;
        }
        if c.is_kw("proc") && !matches!(c.peek_at(1), Some(Tok::Sym(":"))) {
            c.next();
            let name = c.ident()?;
            if name == MAIN || procs.contains_key(&name) {
                return Err(c.err(format!("duplicate procedure `{name}`")));
            }
            c.expect_kw("start")?;
            let start = c.ident()?;
            finish(&mut c)?;
            procs.insert(name.clone(), Procedure { name: name.clone(), start, instrs: vec![], finals: vec![] });
            current = Some(name);
            continue;
        }

        let Some(cur) = current.clone() else {
            return Err(c.err("instruction before `start`"));
        };
        let col = c.col();
        let label = c.ident()?;
        c.expect_sym(":")?;
        claim(&mut seen_labels, &label, line_no, col)?;
        let proc_ref = if cur == MAIN { main.as_mut().expect("main") } else { procs.get_mut(&cur).expect("proc") };
        if c.eat_kw("halt") {
            finish(&mut c)?;
            proc_ref.finals.push(label);
            continue;
        }
        let kind = parse_kind(&mut c, &mut dims)?;
        finish(&mut c)?;
        proc_ref.instrs.push(Instruction { label, kind });
    }

    let main = main.ok_or_else(|| ParseError::new(1, 1, "missing `start` line"))?;
    Ok(Schema { main, procs, aux })
}

fn claim(seen: &mut BTreeMap<String, usize>, label: &str, line: usize, col: usize) -> Result<(), ParseError> {
    if let Some(prev) = seen.insert(label.to_string(), line) {
        return Err(ParseError::new(line, col, format!("duplicate input label `{label}` (first on line {prev})")));
    }
    Ok(())
}

fn finish(c: &mut Cursor) -> Result<(), ParseError> {
    c.eat_sym(";");
    c.expect_end()
}

fn parse_kind(c: &mut Cursor, dims: &mut BTreeMap<String, usize>) -> Result<InstrKind, ParseError> {
    if c.eat_kw("if") {
        let (pred, args) = parse_call(c, dims)?;
        c.expect_kw("then")?;
        let then_to = c.ident()?;
        c.expect_kw("else")?;
        let else_to = c.ident()?;
        return Ok(InstrKind::Cond { pred, args, then_to, else_to });
    }
    if c.eat_kw("do") {
        let body = c.ident()?;
        if c.eat_kw("while") {
            let (pred, args) = parse_call(c, dims)?;
            c.expect_kw("then")?;
            let next = c.ident()?;
            return Ok(InstrKind::Loop { body, pred, args, next });
        }
        c.expect_kw("then")?;
        let next = c.ident()?;
        return Ok(InstrKind::Call { body, next });
    }
    let target = parse_variable(c, dims)?;
    c.expect_sym("=")?;
    let (func, args) = match (c.peek(), c.peek_at(1)) {
        (Some(Tok::Ident(_)), Some(Tok::Sym("("))) => parse_call(c, dims)?,
        _ => ("id".to_string(), vec![parse_operand(c, dims)?]),
    };
    c.expect_kw("then")?;
    let next = c.ident()?;
    Ok(InstrKind::Assign { target, func, args, next })
}

fn parse_call(c: &mut Cursor, dims: &mut BTreeMap<String, usize>) -> Result<(String, Vec<Operand>), ParseError> {
    let name = c.ident()?;
    c.expect_sym("(")?;
    let mut args = Vec::new();
    if !c.eat_sym(")") {
        loop {
            args.push(parse_operand(c, dims)?);
            if c.eat_sym(")") {
                break;
            }
            c.expect_sym(",")?;
        }
    }
    Ok((name, args))
}

fn parse_operand(c: &mut Cursor, dims: &mut BTreeMap<String, usize>) -> Result<Operand, ParseError> {
    match c.peek() {
        Some(Tok::Label(l)) => {
            let v = Value::Label(l.clone());
            c.next();
            Ok(Operand::Lit(v))
        }
        Some(Tok::Str(s)) => {
            let v = Value::Str(s.clone());
            c.next();
            Ok(Operand::Lit(v))
        }
        Some(Tok::Int(_)) | Some(Tok::Sym("-")) => Ok(Operand::Lit(Value::int(c.int()?))),
        _ => Ok(Operand::Var(parse_variable(c, dims)?)),
    }
}

fn parse_variable(c: &mut Cursor, dims: &mut BTreeMap<String, usize>) -> Result<Variable, ParseError> {
    let col = c.col();
    let name = c.ident()?;
    if !c.eat_sym("[") {
        return Ok(Variable::Simple(name));
    }
    let mut index = Vec::new();
    loop {
        index.push(parse_index(c)?);
        if c.eat_sym("]") {
            break;
        }
        c.expect_sym(",")?;
    }
    match dims.get(&name) {
        Some(&d) if d != index.len() => {
            return Err(ParseError::new(
                c.line,
                col,
                format!("array `{name}` used with {} indexes, earlier with {d}", index.len()),
            ))
        }
        _ => {
            dims.insert(name.clone(), index.len());
        }
    }
    Ok(Variable::Indexed { array: name, index })
}

fn index_var(c: &mut Cursor) -> Result<String, ParseError> {
    let v = c.ident()?;
    if c.is_sym("[") {
        return Err(c.err("nested indexed variable"));
    }
    Ok(v)
}

fn parse_index(c: &mut Cursor) -> Result<IndexExpr, ParseError> {
    let first = index_var(c)?;
    if !c.eat_sym("(") {
        return Ok(IndexExpr { func: None, vars: vec![first] });
    }
    let mut vars = Vec::new();
    if !c.eat_sym(")") {
        loop {
            vars.push(index_var(c)?);
            if c.eat_sym(")") {
                break;
            }
            c.expect_sym(",")?;
        }
    }
    Ok(IndexExpr { func: Some(first), vars })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_body() {
        let s = parse_schema("start m0: halt").unwrap();
        assert_eq!(s.instruction_count(), 0);
        assert_eq!(s.main.finals, vec!["m0".to_string()]);
    }

    #[test]
    fn nested_index_rejected() {
        let e = parse_schema("start m0\nm0: x = a[b[x]] then m1\nm1: halt").unwrap_err();
        assert!(e.msg.contains("nested indexed variable"), "{e}");
        let e = parse_schema("start m0\nm0: x = a[k(b[x])] then m1\nm1: halt").unwrap_err();
        assert!(e.msg.contains("nested indexed variable"), "{e}");
    }

    #[test]
    fn duplicate_label_rejected() {
        let e = parse_schema("start m0\nm0: x = y then m1\nm0: halt").unwrap_err();
        assert!(e.msg.contains("duplicate input label"));
        assert_eq!(e.line, 3);
    }

    #[test]
    fn dimension_clash_rejected() {
        let e = parse_schema("start m0\nm0: a[i] = a[i, j] then m1\nm1: halt").unwrap_err();
        assert!(e.msg.contains("indexes"));
    }

    #[test]
    fn shorthands_and_round_trip() {
        let src = "aux t\nstart m0\nm0: x = y; \nm1: t = 'm5 then m2\n";
        assert!(parse_schema(src).is_err());
        let src =
            "aux t\nstart m0\nm0: x = y then m1;\nm1: t = 'm5 then m2\nm2: out[k(x, t)] = g(x, -3, \"s\") then m3\nm3: halt\n";
        let s = parse_schema(src).unwrap();
        match &s.main.instrs[0].kind {
            InstrKind::Assign { func, .. } => assert_eq!(func, "id"),
            _ => panic!(),
        }
        let printed = s.to_string();
        assert_eq!(parse_schema(&printed).unwrap(), s);
        assert_eq!(parse_schema(&printed).unwrap().to_string(), printed);
    }

    #[test]
    fn procedures_and_loops() {
        let src = "start m0\nm0: do B while p(i) then m1\nm1: halt\nproc B start b0\nb0: i = succ(i) then b1\nb1: if q(i) then b2 else b2\nb2: halt";
        let s = parse_schema(src).unwrap();
        assert_eq!(s.loop_depth(), 1);
        assert_eq!(s.procs["B"].instrs.len(), 2);
        assert_eq!(parse_schema(&s.to_string()).unwrap(), s);
    }
}
