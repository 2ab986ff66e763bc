//! Forward orientation: within a loop body no instruction may change an
//! index variable that an instruction not after it uses.
//!
//! A writer `w` of index variable `v` used at `u` is an offence when `w`
//! comes after `u` in the body's label order. A writer on an incomparable
//! branch is an offence too unless every path from the body start to `u`
//! writes `v` first, because otherwise its value reaches `u` in the next
//! iteration. Each offence is repaired by `newv = v` placed right before
//! `u`, with `u` indexing through `newv`.

use std::collections::{BTreeMap, BTreeSet};

use super::{ancestors, prune_unreachable, Fresh, TransformError};
use crate::schema::ast::{IndexExpr, InstrKind, Instruction, Operand, Variable};
use crate::schema::iosets::instr_io;
use crate::schema::{validate_l, Procedure, Schema};

/// (body procedure, instruction label, index variable) triples that break
/// forward orientation.
pub fn forward_violations(schema: &Schema) -> Vec<(String, String, String)> {
    let mut out = Vec::new();
    for body in loop_bodies(schema) {
        let p = &schema.procs[&body];
        for (label, v) in body_violations(schema, p) {
            out.push((body.clone(), label, v));
        }
    }
    out
}

pub fn is_forward_oriented(schema: &Schema) -> bool {
    forward_violations(schema).is_empty()
}

pub(crate) fn loop_bodies(schema: &Schema) -> Vec<String> {
    let mut out: Vec<String> = schema
        .levels()
        .flat_map(|p| p.instrs.iter())
        .filter_map(|i| match &i.kind {
            InstrKind::Loop { body, .. } if schema.procs.contains_key(body) => Some(body.clone()),
            _ => None,
        })
        .collect();
    out.sort();
    out.dedup();
    out
}

pub(crate) fn body_violations(schema: &Schema, p: &Procedure) -> Vec<(String, String)> {
    let anc = ancestors(p);
    let io: BTreeMap<&str, _> = p.instrs.iter().filter_map(|i| Some((i.label.as_str(), instr_io(schema, i).ok()?))).collect();
    let order = p.topo_order().unwrap_or_default();
    let mut preds: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for ins in &p.instrs {
        for succ in ins.successors() {
            preds.entry(succ).or_default().push(&ins.label);
        }
    }
    let writes = |l: &str, var: &Variable| io.get(l).is_some_and(|iw| iw.val.contains(var));
    let mut out = Vec::new();
    for u in &p.instrs {
        let Some(iu) = io.get(u.label.as_str()) else { continue };
        let none = BTreeSet::new();
        let anc_u = anc.get(&u.label).unwrap_or(&none);
        for v in &iu.ind {
            let var = Variable::Simple(v.clone());
            // must[n]: every path from the start to n passes a writer of v.
            let mut must: BTreeMap<&str, bool> = BTreeMap::new();
            for l in &order {
                let m = l != &p.start
                    && preds.get(l.as_str()).is_some_and(|ps| ps.iter().all(|q| writes(q, &var) || must.get(q) == Some(&true)));
                must.insert(l, m);
            }
            let bad = p.instrs.iter().any(|w| {
                if w.label == u.label || !writes(&w.label, &var) || anc_u.contains(&w.label) {
                    return false;
                }
                let later = anc.get(&w.label).is_some_and(|a| a.contains(&u.label));
                later || must.get(u.label.as_str()) != Some(&true)
            });
            if bad {
                out.push((u.label.clone(), v.clone()));
            }
        }
    }
    out
}

pub fn to_forward_oriented(schema: &Schema) -> Result<Schema, TransformError> {
    let report = validate_l(schema);
    if !report.is_l_schema() {
        return Err(TransformError::NotLSchema(report));
    }
    let mut s = schema.clone();
    let mut fresh = Fresh::for_schema(&s);
    // Every repair removes one offence without creating another, so the
    // number of passes is bounded by the number of offences plus clones.
    for _ in 0..=s.instruction_count() + 1 {
        let mut changed = false;
        for body in loop_bodies(&s) {
            let todo = body_violations(&s, &s.procs[&body]);
            for (label, v) in todo {
                repair(&mut s, &body, &label, &v, &mut fresh)?;
                changed = true;
            }
        }
        if !changed {
            prune_unreachable(&mut s);
            return Ok(s);
        }
    }
    Err(TransformError::Unsupported("forward orientation did not converge".into()))
}

fn repair(s: &mut Schema, body: &str, label: &str, v: &str, fresh: &mut Fresh) -> Result<(), TransformError> {
    let nv = fresh.name(&format!("new{v}"));
    let copy_label = fresh.name(&format!("{label}_cp"));
    s.aux.insert(nv.clone());

    let u = s.procs[body].get(label).expect("violating label").clone();
    let new_u = match &u.kind {
        InstrKind::Assign { .. } | InstrKind::Cond { .. } => rename_instr(&u, v, &nv),
        InstrKind::Loop { body: callee, pred, args, next } => {
            let c = clone_renamed(s, callee, v, &nv, fresh)?;
            let args = args.iter().map(|a| rename_operand(a, v, &nv)).collect();
            Instruction {
                label: u.label.clone(),
                kind: InstrKind::Loop { body: c, pred: pred.clone(), args, next: next.clone() },
            }
        }
        InstrKind::Call { body: callee, next } => {
            let c = clone_renamed(s, callee, v, &nv, fresh)?;
            Instruction { label: u.label.clone(), kind: InstrKind::Call { body: c, next: next.clone() } }
        }
    };

    let p = s.procs.get_mut(body).expect("body");
    for ins in p.instrs.iter_mut() {
        for succ in ins.successors_mut() {
            if succ == label {
                *succ = copy_label.clone();
            }
        }
    }
    if p.start == label {
        p.start = copy_label.clone();
    }
    let pos = p.instrs.iter().position(|i| i.label == label).expect("position");
    p.instrs[pos] = new_u;
    let copy = Instruction::assign(&copy_label, Variable::Simple(nv), "id", vec![Operand::Var(Variable::simple(v))], label);
    p.instrs.insert(pos, copy);
    Ok(())
}

/// Deep copy of a procedure and its callees with `v` replaced by `nv` in
/// index positions. Refused when the copy would write `v` itself.
fn clone_renamed(s: &mut Schema, name: &str, v: &str, nv: &str, fresh: &mut Fresh) -> Result<String, TransformError> {
    let io = crate::schema::iosets::proc_io(s, name, 0).map_err(|e| TransformError::Unsupported(e.to_string()))?;
    if io.val.contains(&Variable::simple(v)) {
        return Err(TransformError::Unsupported(format!(
            "procedure `{name}` writes index variable `{v}` that its caller uses before a later change"
        )));
    }
    let orig = s.procs[name].clone();
    let new_name = fresh.name(&format!("{name}_{nv}"));
    let relabel: BTreeMap<String, String> = orig.labels().map(|l| (l.to_string(), fresh.name(&format!("{l}_{nv}")))).collect();
    let mut instrs = Vec::new();
    for ins in &orig.instrs {
        let mut n = rename_instr(ins, v, nv);
        n.label = relabel[&ins.label].clone();
        for succ in n.successors_mut() {
            *succ = relabel[succ.as_str()].clone();
        }
        match &mut n.kind {
            InstrKind::Loop { body, .. } | InstrKind::Call { body, .. } => {
                *body = clone_renamed(s, body, v, nv, fresh)?;
            }
            _ => {}
        }
        instrs.push(n);
    }
    let p = Procedure {
        name: new_name.clone(),
        start: relabel[&orig.start].clone(),
        instrs,
        finals: orig.finals.iter().map(|f| relabel[f].clone()).collect(),
    };
    s.procs.insert(new_name.clone(), p);
    Ok(new_name)
}

fn rename_var(var: &Variable, v: &str, nv: &str) -> Variable {
    match var {
        Variable::Simple(_) => var.clone(),
        Variable::Indexed { array, index } => Variable::Indexed {
            array: array.clone(),
            index: index
                .iter()
                .map(|e| IndexExpr {
                    func: e.func.clone(),
                    vars: e.vars.iter().map(|x| if x == v { nv.to_string() } else { x.clone() }).collect(),
                })
                .collect(),
        },
    }
}

fn rename_operand(a: &Operand, v: &str, nv: &str) -> Operand {
    match a {
        Operand::Var(x) => Operand::Var(rename_var(x, v, nv)),
        Operand::Lit(_) => a.clone(),
    }
}

fn rename_instr(ins: &Instruction, v: &str, nv: &str) -> Instruction {
    let kind = match &ins.kind {
        InstrKind::Assign { target, func, args, next } => InstrKind::Assign {
            target: rename_var(target, v, nv),
            func: func.clone(),
            args: args.iter().map(|a| rename_operand(a, v, nv)).collect(),
            next: next.clone(),
        },
        InstrKind::Cond { pred, args, then_to, else_to } => InstrKind::Cond {
            pred: pred.clone(),
            args: args.iter().map(|a| rename_operand(a, v, nv)).collect(),
            then_to: then_to.clone(),
            else_to: else_to.clone(),
        },
        InstrKind::Loop { body, pred, args, next } => InstrKind::Loop {
            body: body.clone(),
            pred: pred.clone(),
            args: args.iter().map(|a| rename_operand(a, v, nv)).collect(),
            next: next.clone(),
        },
        k @ InstrKind::Call { .. } => k.clone(),
    };
    Instruction { label: ins.label.clone(), kind }
}
