//! Controller/kernel separation of a forward-oriented loop.
//!
//! Each round takes the instructions reachable from the body start whose
//! predecessors were all taken and whose indexes avoid the values written
//! by taken ancestors. They form the next controller. Edges leaving the
//! controller are routed through `vLebN = 'target` captures, and the rest
//! of the body starts with a dispatch chain on `vLebN`. Rounds stop once no
//! instruction of the rest writes an index used by a later one; the rest is
//! the kernel.

use std::collections::{BTreeMap, BTreeSet};

use super::forward::body_violations;
use super::{ancestors, Fresh, TransformError};
use crate::schema::ast::{InstrKind, Instruction, Operand, Variable};
use crate::schema::iosets::{instr_io, procedure_io, IoSets};
use crate::schema::value::Value;
use crate::schema::{validate_l, Procedure, Schema};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Separation {
    Not,
    Separated,
    Strict,
}

impl std::fmt::Display for Separation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Separation::Not => "not separated",
            Separation::Separated => "separated",
            Separation::Strict => "strictly separated",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeparatedLoop {
    pub loop_label: String,
    /// Controllers in level order, then the kernel.
    pub parts: Vec<Procedure>,
    pub dispatch_vars: Vec<String>,
    pub certificates: Vec<IoSets>,
    pub class: Separation,
    /// Name of the new loop body `do P1; ...; do Pk`.
    pub body: String,
    /// Why no controller was split off, when none was.
    pub note: Option<String>,
    schema: Schema,
}

impl SeparatedLoop {
    pub fn controller_count(&self) -> usize {
        self.parts.len() - 1
    }

    pub fn kernel(&self) -> &Procedure {
        self.parts.last().expect("kernel")
    }

    pub fn controllers(&self) -> &[Procedure] {
        &self.parts[..self.parts.len() - 1]
    }

    /// Whole schema with the loop body replaced by the separated body.
    pub fn to_schema(&self) -> Schema {
        self.schema.clone()
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn report(&self) -> String {
        let mut out = format!("loop {}: {} controller(s) + kernel, {}\n", self.loop_label, self.controller_count(), self.class);
        if let Some(n) = &self.note {
            out.push_str(&format!("note: {n}\n"));
        }
        for (i, (p, c)) in self.parts.iter().zip(&self.certificates).enumerate() {
            let role = if i + 1 == self.parts.len() { "kernel".to_string() } else { format!("controller {}", i + 1) };
            let labels: Vec<&str> = p.instrs.iter().map(|x| x.label.as_str()).collect();
            out.push_str(&format!("{role} {}: [{}]\n", p.name, labels.join(", ")));
            out.push_str(&format!("  Ind = {{{}}}\n", join(c.ind.iter().map(|s| s.to_string()))));
            out.push_str(&format!("  Arg = {{{}}}\n", join(c.arg.iter().map(|s| s.to_string()))));
            out.push_str(&format!("  Val = {{{}}}\n", join(c.val.iter().map(|s| s.to_string()))));
        }
        out
    }
}

fn join(it: impl Iterator<Item = String>) -> String {
    it.collect::<Vec<_>>().join(", ")
}

/// Classifies consecutive parts by the two set conditions.
pub fn check_separated(certs: &[IoSets]) -> Separation {
    let k = certs.len();
    for i in 0..k {
        let ind = certs[i].ind_vars();
        for later in &certs[i + 1..] {
            if !ind.is_disjoint(&later.val) {
                return Separation::Not;
            }
        }
        if i > 0 && ind.is_disjoint(&certs[i - 1].val) {
            return Separation::Not;
        }
    }
    if k == 0 {
        return Separation::Not;
    }
    let kernel = certs[k - 1].val_bases();
    let strict = certs[..k - 1].iter().all(|c| kernel.is_disjoint(&c.arg_bases()));
    if strict {
        Separation::Strict
    } else {
        Separation::Separated
    }
}

pub fn check_separated_parts(schema: &Schema, parts: &[&str]) -> Separation {
    let certs: Option<Vec<IoSets>> = parts.iter().map(|p| crate::schema::iosets::proc_io(schema, p, 0).ok()).collect();
    certs.map(|c| check_separated(&c)).unwrap_or(Separation::Not)
}

struct Node {
    ins: Instruction,
    io: IoSets,
}

pub fn separate_loop(schema: &Schema, loop_label: &str) -> Result<SeparatedLoop, TransformError> {
    let report = validate_l(schema);
    if !report.is_l_schema() {
        return Err(TransformError::NotLSchema(report));
    }
    let (owner, ins) = schema.locate(loop_label).ok_or_else(|| TransformError::NoSuchLoop(loop_label.into()))?;
    let owner = owner.name.clone();
    let InstrKind::Loop { body, .. } = &ins.kind else {
        return Err(TransformError::NoSuchLoop(loop_label.into()));
    };
    let body_proc = schema.procs[body].clone();
    if !body_violations(schema, &body_proc).is_empty() {
        return Err(TransformError::NotForward(loop_label.into()));
    }

    let mut s = schema.clone();
    let mut fresh = Fresh::for_schema(&s);
    let body_io = procedure_io(schema, &body_proc, 0).map_err(|e| TransformError::Unsupported(e.to_string()))?;

    let mut parts: Vec<Procedure> = Vec::new();
    let mut dispatch_vars = Vec::new();
    let mut note = None;

    let mut rest = body_proc.clone();
    if body_io.ind.is_empty() {
        note = Some("loop has no index variables; kernel only".to_string());
    } else if body_proc.instrs.len() <= 1 {
        note = Some("single-instruction body; kernel only".to_string());
    } else {
        let mut level = 0;
        while has_index_change(&s, &rest) {
            level += 1;
            let (ctl, remainder, var) = split_controller(&s, &rest, &body_proc.name, level, &mut fresh)?;
            dispatch_vars.push(var);
            parts.push(ctl);
            rest = remainder;
        }
        if level == 0 {
            note = Some("no instruction changes another's indexes; kernel only".to_string());
        }
    }
    let kname = fresh.name(&format!("{}_k", body_proc.name));
    rest.name = kname;
    parts.push(rest);

    // New body: do P1 then ...; do Pk then end.
    let sep_name = fresh.name(&format!("{}_sep", body_proc.name));
    let call_labels: Vec<String> = (1..=parts.len()).map(|i| fresh.name(&format!("{}_s{i}", body_proc.name))).collect();
    let end = fresh.name(&format!("{}_send", body_proc.name));
    let mut sep = Procedure { name: sep_name.clone(), start: call_labels[0].clone(), instrs: vec![], finals: vec![end.clone()] };
    for (i, p) in parts.iter().enumerate() {
        let next = call_labels.get(i + 1).unwrap_or(&end);
        sep.instrs.push(Instruction::call(&call_labels[i], &p.name, next));
    }
    for p in &parts {
        s.procs.insert(p.name.clone(), p.clone());
    }
    s.procs.insert(sep_name.clone(), sep);
    s.procs.remove(&body_proc.name);
    s.aux.extend(dispatch_vars.iter().cloned());
    let lp = s.proc_mut(&owner).and_then(|p| p.get_mut(loop_label)).expect("loop instruction");
    if let InstrKind::Loop { body, .. } = &mut lp.kind {
        *body = sep_name.clone();
    }
    // The original body may still be called elsewhere.
    if schema.levels().flat_map(|p| p.instrs.iter()).any(|i| i.label != loop_label && i.callee() == Some(body_proc.name.as_str()))
    {
        s.procs.insert(body_proc.name.clone(), body_proc.clone());
    }

    let certificates: Vec<IoSets> = parts
        .iter()
        .map(|p| procedure_io(&s, p, 0).map_err(|e| TransformError::Unsupported(e.to_string())))
        .collect::<Result<_, _>>()?;
    let class = check_separated(&certificates);
    Ok(SeparatedLoop {
        loop_label: loop_label.to_string(),
        parts,
        dispatch_vars,
        certificates,
        class,
        body: sep_name,
        note,
        schema: s,
    })
}

fn nodes(s: &Schema, p: &Procedure) -> Result<BTreeMap<String, Node>, TransformError> {
    p.instrs
        .iter()
        .map(|i| {
            let io = instr_io(s, i).map_err(|e| TransformError::Unsupported(e.to_string()))?;
            Ok((i.label.clone(), Node { ins: i.clone(), io }))
        })
        .collect()
}

/// Some instruction writes an index variable of a later one.
fn has_index_change(s: &Schema, p: &Procedure) -> bool {
    let Ok(ns) = nodes(s, p) else { return false };
    let anc = ancestors(p);
    ns.iter().any(|(j, nj)| {
        let ind = nj.io.ind_vars();
        anc.get(j).is_some_and(|a| a.iter().any(|k| !ns[k].io.val.is_disjoint(&ind)))
    })
}

fn split_controller(
    s: &Schema,
    rest: &Procedure,
    base: &str,
    level: usize,
    fresh: &mut Fresh,
) -> Result<(Procedure, Procedure, String), TransformError> {
    let ns = nodes(s, rest)?;
    let order = rest.topo_order().expect("validated order");
    let mut preds: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for ins in &rest.instrs {
        for succ in ins.successors() {
            preds.entry(succ).or_default().push(&ins.label);
        }
    }

    // Vs accumulated along controller ancestors of each node.
    let mut taken: BTreeSet<String> = BTreeSet::new();
    let mut vs: BTreeMap<String, BTreeSet<Variable>> = BTreeMap::new();
    for l in &order {
        let ps = preds.get(l.as_str()).cloned().unwrap_or_default();
        if l != &rest.start && (ps.is_empty() || !ps.iter().all(|p| taken.contains(*p))) {
            continue;
        }
        let mut acc = BTreeSet::new();
        for p in &ps {
            acc.extend(vs[*p].iter().cloned());
            acc.extend(ns[*p].io.val.iter().cloned());
        }
        if !ns[l].io.ind_vars().is_disjoint(&acc) {
            continue;
        }
        vs.insert(l.clone(), acc);
        taken.insert(l.clone());
    }

    // Exit targets in first-seen order of the controller's topological walk.
    let mut targets: Vec<String> = Vec::new();
    for l in order.iter().filter(|l| taken.contains(*l)) {
        for succ in ns[l].ins.successors() {
            if !taken.contains(succ) && !targets.iter().any(|t| t == succ) {
                targets.push(succ.to_string());
            }
        }
    }

    let var = fresh.name(&format!("vLeb{level}"));
    let ctl_name = fresh.name(&format!("{base}_c{level}"));
    let ctl_end = fresh.name(&format!("c{level}_end"));
    let captures: BTreeMap<String, String> = targets.iter().map(|t| (t.clone(), fresh.name(&format!("c{level}_{t}")))).collect();

    let mut ctl = Procedure { name: ctl_name, start: rest.start.clone(), instrs: vec![], finals: vec![ctl_end.clone()] };
    for ins in rest.instrs.iter().filter(|i| taken.contains(&i.label)) {
        let mut n = ins.clone();
        for succ in n.successors_mut() {
            if let Some(c) = captures.get(succ.as_str()) {
                *succ = c.clone();
            }
        }
        ctl.instrs.push(n);
    }
    for t in &targets {
        ctl.instrs.push(Instruction::assign(
            &captures[t],
            Variable::simple(&var),
            "id",
            vec![Operand::Lit(Value::Label(t.clone()))],
            &ctl_end,
        ));
    }

    let mut remainder =
        Procedure { name: rest.name.clone(), start: targets[0].clone(), instrs: vec![], finals: rest.finals.clone() };
    if targets.len() > 1 {
        let dl: Vec<String> = (1..targets.len()).map(|i| fresh.name(&format!("d{level}_{i}"))).collect();
        remainder.start = dl[0].clone();
        for i in 0..dl.len() {
            let else_to = if i + 1 < dl.len() { dl[i + 1].clone() } else { targets[i + 1].clone() };
            remainder.instrs.push(Instruction::cond(
                &dl[i],
                "eq",
                vec![Operand::Var(Variable::simple(&var)), Operand::Lit(Value::Label(targets[i].clone()))],
                &targets[i],
                &else_to,
            ));
        }
    }
    remainder.instrs.extend(rest.instrs.iter().filter(|i| !taken.contains(&i.label)).cloned());
    Ok((ctl, remainder, var))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::parse_schema;

    fn loop_src(body: &str) -> String {
        format!("start m0\nm0: do B while p(x) then m1\nm1: halt\nproc B start b0\n{body}")
    }

    #[test]
    fn counted_loop_one_controller() {
        let s = parse_schema(&loop_src("b0: i = succ(i) then b1\nb1: a[k(i)] = g(a[k(i)]) then b2\nb2: halt")).unwrap();
        let sep = separate_loop(&s, "m0").unwrap();
        assert_eq!(sep.controller_count(), 1);
        assert_eq!(sep.controllers()[0].instrs[0].label, "b0");
        assert_eq!(sep.class, Separation::Strict);
    }

    #[test]
    fn list_loop_two_controllers() {
        let s = parse_schema(&loop_src(
            "b0: pos = s(pos) then b1\nb1: node = f(link[k(pos)]) then b2\nb2: out[k(node)] = g(payload[k(node)]) then b3\nb3: halt",
        ))
        .unwrap();
        let sep = separate_loop(&s, "m0").unwrap();
        assert_eq!(sep.controller_count(), 2);
        assert!(sep.class >= Separation::Separated);
        assert!(validate_l(sep.schema()).is_l_schema());
    }

    #[test]
    fn kernel_only_cases() {
        let s = parse_schema(&loop_src("b0: x = f(x) then b1\nb1: y = g(x) then b2\nb2: halt")).unwrap();
        let sep = separate_loop(&s, "m0").unwrap();
        assert_eq!(sep.controller_count(), 0);
        assert!(sep.note.as_deref().unwrap().contains("no index"));
        let s = parse_schema(&loop_src("b0: a[i] = f(a[i]) then b1\nb1: halt")).unwrap();
        let sep = separate_loop(&s, "m0").unwrap();
        assert_eq!(sep.controller_count(), 0);
        assert!(sep.note.as_deref().unwrap().contains("single"));
    }

    #[test]
    fn branching_controller_gets_dispatch() {
        let s = parse_schema(&loop_src(
            "b0: if q(x) then b1 else b2\nb1: i = f(i) then b3\nb2: i = g(i) then b4\n\
             b3: a[i] = h(a[i]) then b5\nb4: c[i] = h(c[i]) then b5\nb5: halt",
        ))
        .unwrap();
        let sep = separate_loop(&s, "m0").unwrap();
        assert_eq!(sep.controller_count(), 1);
        let kernel = sep.kernel();
        assert!(kernel.instrs[0].to_string().starts_with("d1_1: if eq(vLeb1, 'b3) then b3 else b4"));
        assert_eq!(sep.dispatch_vars, vec!["vLeb1".to_string()]);
    }

    #[test]
    fn check_separated_distinguishes_strict() {
        // The kernel rewrites `w`, which the controller reads without indexing.
        let s = parse_schema(&loop_src("b0: i = f(i, w) then b1\nb1: w = g(a[i]) then b2\nb2: halt")).unwrap();
        let sep = separate_loop(&s, "m0").unwrap();
        assert_eq!(sep.controller_count(), 1);
        assert_eq!(sep.class, Separation::Separated);
        // A kernel writing the controller's index variable is not separated.
        let bad = vec![
            IoSets { ind: BTreeSet::new(), arg: BTreeSet::new(), val: BTreeSet::from([Variable::simple("j")]) },
            IoSets {
                ind: BTreeSet::from(["j".to_string(), "i".to_string()]),
                arg: BTreeSet::new(),
                val: BTreeSet::from([Variable::simple("i")]),
            },
        ];
        assert_ne!(check_separated(&bad), Separation::Not);
        let mut worse = bad.clone();
        worse[0].ind.insert("i".into());
        assert_eq!(check_separated(&worse), Separation::Not);
    }

    #[test]
    fn reseparation_keeps_count() {
        let s = parse_schema(&loop_src(
            "b0: pos = s(pos) then b1\nb1: node = f(link[k(pos)]) then b2\nb2: out[k(node)] = g(payload[k(node)]) then b3\nb3: halt",
        ))
        .unwrap();
        let once = separate_loop(&s, "m0").unwrap();
        let twice = separate_loop(once.schema(), "m0").unwrap();
        assert_eq!(twice.controller_count(), once.controller_count());
    }
}
