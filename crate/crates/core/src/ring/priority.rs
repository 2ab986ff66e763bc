//! Priority loops over ranked lists.
//!
//! ```text
//! list 1 Bought: DepB, Sup, Quant
//! list 2 Limits: DepL, Limit, LimitMark
//! list 3 Prices: Prod, price
//! when DepL == DepB & Prod == Sup
//! set Limit = Limit - Quant * price
//! if Limit < 0 set LimitMark = 1
//! start Limits set Limit = Limit
//! row Bought: 1, 10, 2
//! ```
//!
//! The vector-pointer advances in lexicographic order with priority 1
//! outermost. At each position the kernel sees one row of every list;
//! `when` filters the combination, `set` writes a column of the current
//! row. `start`/`final` hooks run at the first and last element of their
//! list.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dependence::poly::{parse_poly, Poly};
use crate::text::{content_lines, Cursor, ParseError, Tok};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Comparison {
    pub lhs: Poly,
    pub op: CmpOp,
    pub rhs: Poly,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub guard: Vec<Comparison>,
    pub column: String,
    pub value: Poly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HookAt {
    Start,
    Final,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hook {
    pub list: String,
    pub at: HookAt,
    pub body: Assignment,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ListSpec {
    pub name: String,
    pub priority: u32,
    pub columns: Vec<String>,
}

pub type Row = Vec<i64>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PriorityLoop {
    /// Sorted by priority.
    pub lists: Vec<ListSpec>,
    pub when: Vec<Comparison>,
    pub body: Vec<Assignment>,
    pub hooks: Vec<Hook>,
    pub data: BTreeMap<String, Vec<Row>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RingError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("parallel level {requested} exceeds the certified level {certified}")]
    NotCertified { requested: u32, certified: String },
    #[error("{0}")]
    Eval(String),
    #[error("ring needs an even number of modules, got {0}")]
    OddRing(usize),
    #[error("{0}")]
    Config(String),
}

fn cmp_op(c: &mut Cursor) -> Result<CmpOp, ParseError> {
    let op = match c.peek() {
        Some(Tok::Sym("==")) => CmpOp::Eq,
        Some(Tok::Sym("!=")) => CmpOp::Ne,
        Some(Tok::Sym("<")) => CmpOp::Lt,
        Some(Tok::Sym("<=")) => CmpOp::Le,
        Some(Tok::Sym(">")) => CmpOp::Gt,
        Some(Tok::Sym(">=")) => CmpOp::Ge,
        _ => return Err(c.err(format!("expected comparison, found {}", c.describe()))),
    };
    c.next();
    Ok(op)
}

fn conjunction(c: &mut Cursor) -> Result<Vec<Comparison>, ParseError> {
    let mut out = Vec::new();
    loop {
        let lhs = parse_poly(c)?;
        let op = cmp_op(c)?;
        let rhs = parse_poly(c)?;
        out.push(Comparison { lhs, op, rhs });
        if !c.eat_sym("&") {
            return Ok(out);
        }
    }
}

fn assignment(c: &mut Cursor, guard: Vec<Comparison>) -> Result<Assignment, ParseError> {
    c.expect_kw("set")?;
    let column = c.ident()?;
    c.expect_sym("=")?;
    Ok(Assignment { guard, column, value: parse_poly(c)? })
}

pub fn parse_priority_loop(src: &str) -> Result<PriorityLoop, RingError> {
    let mut lists: Vec<ListSpec> = Vec::new();
    let mut when = Vec::new();
    let mut body = Vec::new();
    let mut hooks = Vec::new();
    let mut data: BTreeMap<String, Vec<Row>> = BTreeMap::new();
    for (line_no, line) in content_lines(src) {
        let mut c = Cursor::new(line, line_no)?;
        let kw = c.ident()?;
        match kw.as_str() {
            "list" => {
                let pr = c.int()?;
                if pr < 1 {
                    return Err(c.err("priorities are positive").into());
                }
                let name = c.ident()?;
                c.expect_sym(":")?;
                let mut columns = vec![c.ident()?];
                while c.eat_sym(",") {
                    columns.push(c.ident()?);
                }
                lists.push(ListSpec { name, priority: pr as u32, columns });
            }
            "when" => when.extend(conjunction(&mut c)?),
            "set" => {
                let column = c.ident()?;
                c.expect_sym("=")?;
                body.push(Assignment { guard: vec![], column, value: parse_poly(&mut c)? });
            }
            "if" => {
                let g = conjunction(&mut c)?;
                body.push(assignment(&mut c, g)?);
            }
            "start" | "final" => {
                let list = c.ident()?;
                let at = if kw == "start" { HookAt::Start } else { HookAt::Final };
                let guard = if c.eat_kw("if") { conjunction(&mut c)? } else { vec![] };
                hooks.push(Hook { list, at, body: assignment(&mut c, guard)? });
            }
            "row" => {
                let name = c.ident()?;
                c.expect_sym(":")?;
                let mut row = vec![c.int()?];
                while c.eat_sym(",") {
                    row.push(c.int()?);
                }
                data.entry(name).or_default().push(row);
            }
            other => return Err(ParseError::new(line_no, 1, format!("unknown directive `{other}`")).into()),
        }
        c.expect_end()?;
    }
    lists.sort_by_key(|l| l.priority);
    let pl = PriorityLoop { lists, when, body, hooks, data };
    pl.check()?;
    Ok(pl)
}

impl PriorityLoop {
    fn check(&self) -> Result<(), RingError> {
        let mut seen_pr = BTreeSet::new();
        let mut cols = BTreeSet::new();
        for l in &self.lists {
            if !seen_pr.insert(l.priority) {
                return Err(RingError::Config(format!("two lists share priority {}", l.priority)));
            }
            for c in &l.columns {
                if !cols.insert(c.clone()) {
                    return Err(RingError::Config(format!("column `{c}` declared twice")));
                }
            }
        }
        for (name, rows) in &self.data {
            let l = self.list(name).ok_or_else(|| RingError::Config(format!("rows for unknown list `{name}`")))?;
            if rows.iter().any(|r| r.len() != l.columns.len()) {
                return Err(RingError::Config(format!("row width differs from the columns of `{name}`")));
            }
        }
        for a in self.body.iter().chain(self.hooks.iter().map(|h| &h.body)) {
            if self.owner(&a.column).is_none() {
                return Err(RingError::Config(format!("assignment to unknown column `{}`", a.column)));
            }
        }
        for c in self.read_columns() {
            if self.owner(&c).is_none() {
                return Err(RingError::Config(format!("unknown column `{c}`")));
            }
        }
        for h in &self.hooks {
            let lvl = self.level_of(&h.list).ok_or_else(|| RingError::Config(format!("hook on unknown list `{}`", h.list)))?;
            let mut used: BTreeSet<String> = h.body.value.vars();
            used.insert(h.body.column.clone());
            for g in &h.body.guard {
                used.extend(g.lhs.vars());
                used.extend(g.rhs.vars());
            }
            if used.iter().any(|c| self.owner(c).is_some_and(|o| self.level_of(o).unwrap_or(0) > lvl)) {
                return Err(RingError::Config(format!("hook on `{}` uses a list of lower priority", h.list)));
            }
        }
        Ok(())
    }

    pub fn list(&self, name: &str) -> Option<&ListSpec> {
        self.lists.iter().find(|l| l.name == name)
    }

    fn level_of(&self, name: &str) -> Option<usize> {
        self.lists.iter().position(|l| l.name == name)
    }

    /// List owning a column.
    pub fn owner(&self, column: &str) -> Option<&str> {
        self.lists.iter().find(|l| l.columns.iter().any(|c| c == column)).map(|l| l.name.as_str())
    }

    fn read_columns(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let add_cmp = |cs: &[Comparison], out: &mut BTreeSet<String>| {
            for c in cs {
                out.extend(c.lhs.vars());
                out.extend(c.rhs.vars());
            }
        };
        add_cmp(&self.when, &mut out);
        for a in &self.body {
            add_cmp(&a.guard, &mut out);
            out.extend(a.value.vars());
        }
        out
    }

    /// Lists read by the kernel.
    pub fn arg_lists(&self) -> BTreeSet<String> {
        self.read_columns().iter().filter_map(|c| self.owner(c)).map(String::from).collect()
    }

    /// Lists written by the kernel.
    pub fn val_lists(&self) -> BTreeSet<String> {
        self.body.iter().filter_map(|a| self.owner(&a.column)).map(String::from).collect()
    }

    pub fn shared_lists(&self) -> BTreeSet<String> {
        self.arg_lists().intersection(&self.val_lists()).cloned().collect()
    }

    fn rows(&self, name: &str) -> usize {
        self.data.get(name).map(Vec::len).unwrap_or(0)
    }
}

/// Greatest `r` with every list in Arg ∩ Val of priority above `r`; the
/// top priority when that set is empty.
pub fn independence_level(pl: &PriorityLoop) -> Option<u32> {
    let s = pl.shared_lists();
    let top = pl.lists.iter().map(|l| l.priority).max().unwrap_or(0);
    match s.iter().filter_map(|n| pl.list(n)).map(|l| l.priority).min() {
        None => Some(top),
        Some(1) => None,
        Some(p) => Some(p - 1),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Sequential,
    /// Iterations of the loop over the list with the given priority are
    /// split into blocks, one per worker, and interleaved by a seeded
    /// scheduler on shared lists.
    Parallel {
        level: u32,
        workers: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunResult {
    pub data: BTreeMap<String, Vec<Row>>,
    pub kernel_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Action {
    Kernel(Vec<usize>),
    Hook(usize, Vec<usize>),
}

struct Store<'a> {
    pl: &'a PriorityLoop,
    data: BTreeMap<String, Vec<Row>>,
    /// Column to (list, position).
    cols: BTreeMap<&'a str, (&'a str, usize)>,
}

impl<'a> Store<'a> {
    fn new(pl: &'a PriorityLoop) -> Self {
        let mut cols = BTreeMap::new();
        for l in &pl.lists {
            for (k, c) in l.columns.iter().enumerate() {
                cols.insert(c.as_str(), (l.name.as_str(), k));
            }
        }
        let mut data = pl.data.clone();
        for l in &pl.lists {
            data.entry(l.name.clone()).or_default();
        }
        Store { pl, data, cols }
    }

    fn env(&self, ptr: &[usize]) -> BTreeMap<String, i64> {
        let mut env = BTreeMap::new();
        for (lvl, &i) in ptr.iter().enumerate() {
            let l = &self.pl.lists[lvl];
            if let Some(row) = self.data[&l.name].get(i) {
                for (c, v) in l.columns.iter().zip(row) {
                    env.insert(c.clone(), *v);
                }
            }
        }
        env
    }

    fn eval(&self, p: &Poly, env: &BTreeMap<String, i64>) -> Result<i64, RingError> {
        p.eval(env)
            .and_then(|v| i64::try_from(v).ok())
            .ok_or_else(|| RingError::Eval(format!("cannot evaluate `{p}` at this position")))
    }

    fn holds(&self, cs: &[Comparison], env: &BTreeMap<String, i64>) -> Result<bool, RingError> {
        for c in cs {
            let (a, b) = (self.eval(&c.lhs, env)?, self.eval(&c.rhs, env)?);
            let ok = match c.op {
                CmpOp::Eq => a == b,
                CmpOp::Ne => a != b,
                CmpOp::Lt => a < b,
                CmpOp::Le => a <= b,
                CmpOp::Gt => a > b,
                CmpOp::Ge => a >= b,
            };
            if !ok {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn assign(&mut self, a: &Assignment, ptr: &[usize]) -> Result<(), RingError> {
        let env = self.env(ptr);
        if !self.holds(&a.guard, &env)? {
            return Ok(());
        }
        let v = self.eval(&a.value, &env)?;
        let (list, k) = self.cols[a.column.as_str()];
        let lvl = self.pl.level_of(list).expect("declared list");
        let row = ptr[lvl];
        self.data.get_mut(list).expect("list")[row][k] = v;
        Ok(())
    }

    fn perform(&mut self, act: &Action) -> Result<bool, RingError> {
        match act {
            Action::Kernel(ptr) => {
                if !self.holds(&self.pl.when, &self.env(ptr))? {
                    return Ok(true);
                }
                for a in &self.pl.body {
                    self.assign(a, ptr)?;
                }
                Ok(true)
            }
            Action::Hook(h, ptr) => {
                self.assign(&self.pl.hooks[*h].body, ptr)?;
                Ok(false)
            }
        }
    }
}

/// Actions of the nest below `prefix`, in lexicographic order.
fn actions(pl: &PriorityLoop, prefix: &mut Vec<usize>, out: &mut Vec<Action>) {
    let lvl = prefix.len();
    if lvl == pl.lists.len() {
        out.push(Action::Kernel(prefix.clone()));
        return;
    }
    let n = pl.rows(&pl.lists[lvl].name);
    if n == 0 {
        return;
    }
    hooks_at(pl, lvl, HookAt::Start, prefix, 0, out);
    for i in 0..n {
        prefix.push(i);
        actions(pl, prefix, out);
        prefix.pop();
    }
    hooks_at(pl, lvl, HookAt::Final, prefix, n - 1, out);
}

fn hooks_at(pl: &PriorityLoop, lvl: usize, at: HookAt, prefix: &[usize], i: usize, out: &mut Vec<Action>) {
    for (h, hook) in pl.hooks.iter().enumerate() {
        if hook.at == at && hook.list == pl.lists[lvl].name {
            let mut ptr = prefix.to_vec();
            ptr.push(i);
            out.push(Action::Hook(h, ptr));
        }
    }
}

pub fn run_priority_loop(pl: &PriorityLoop, mode: RunMode) -> Result<RunResult, RingError> {
    let mut store = Store::new(pl);
    let mut steps = 0;
    match mode {
        RunMode::Sequential => {
            let mut acts = Vec::new();
            actions(pl, &mut Vec::new(), &mut acts);
            for a in &acts {
                steps += usize::from(store.perform(a)?);
            }
        }
        RunMode::Parallel { level, workers, seed } => {
            let certified = independence_level(pl);
            if certified.is_none_or(|c| level > c) || level == 0 {
                return Err(RingError::NotCertified {
                    requested: level,
                    certified: certified.map_or("none".into(), |c| c.to_string()),
                });
            }
            let lvl = pl
                .lists
                .iter()
                .position(|l| l.priority == level)
                .ok_or_else(|| RingError::Config(format!("no list with priority {level}")))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            parallel(pl, &mut store, lvl, workers.max(1), &mut rng, &mut Vec::new(), &mut steps)?;
        }
    }
    Ok(RunResult { data: store.data, kernel_steps: steps })
}

fn parallel(
    pl: &PriorityLoop,
    store: &mut Store<'_>,
    target: usize,
    workers: usize,
    rng: &mut ChaCha8Rng,
    prefix: &mut Vec<usize>,
    steps: &mut usize,
) -> Result<(), RingError> {
    let lvl = prefix.len();
    let n = pl.rows(&pl.lists[lvl].name);
    if n == 0 {
        return Ok(());
    }
    let mut pre = Vec::new();
    hooks_at(pl, lvl, HookAt::Start, prefix, 0, &mut pre);
    for a in &pre {
        store.perform(a)?;
    }
    if lvl < target {
        for i in 0..n {
            prefix.push(i);
            parallel(pl, store, target, workers, rng, prefix, steps)?;
            prefix.pop();
        }
    } else {
        let block = n.div_ceil(workers);
        let mut queues: Vec<std::collections::VecDeque<Action>> = Vec::new();
        for w in 0..workers {
            let mut acts = Vec::new();
            for i in (w * block)..((w + 1) * block).min(n) {
                prefix.push(i);
                actions(pl, prefix, &mut acts);
                prefix.pop();
            }
            queues.push(acts.into());
        }
        loop {
            let live: Vec<usize> = (0..workers).filter(|&w| !queues[w].is_empty()).collect();
            if live.is_empty() {
                break;
            }
            let w = live[rng.gen_range(0..live.len())];
            let a = queues[w].pop_front().expect("non-empty queue");
            *steps += usize::from(store.perform(&a)?);
        }
    }
    let mut post = Vec::new();
    hooks_at(pl, lvl, HookAt::Final, prefix, n - 1, &mut post);
    for a in &post {
        store.perform(a)?;
    }
    Ok(())
}

impl fmt::Display for RunResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "kernel steps {}", self.kernel_steps)?;
        for (name, rows) in &self.data {
            for r in rows {
                let cells: Vec<String> = r.iter().map(i64::to_string).collect();
                writeln!(f, "row {name}: {}", cells.join(", "))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PRODUCTS: &str = "list 1 A: x\nlist 2 B: y\nlist 3 Acc: s\nset s = s + x * y\n\
        row A: 1\nrow A: 2\nrow A: 3\nrow B: 4\nrow B: 5\nrow Acc: 0";

    #[test]
    fn pairwise_products() {
        let pl = parse_priority_loop(PRODUCTS).unwrap();
        let r = run_priority_loop(&pl, RunMode::Sequential).unwrap();
        assert_eq!(r.data["Acc"], vec![vec![(1 + 2 + 3) * (4 + 5)]]);
        assert_eq!(r.kernel_steps, 6);
        assert_eq!(independence_level(&pl), Some(2));
    }

    #[test]
    fn empty_list_means_no_steps() {
        let pl = parse_priority_loop("list 1 A: x\nlist 2 Acc: s\nset s = s + x\nrow Acc: 0").unwrap();
        let r = run_priority_loop(&pl, RunMode::Sequential).unwrap();
        assert_eq!(r.kernel_steps, 0);
        assert_eq!(r.data["Acc"], vec![vec![0]]);
    }

    #[test]
    fn self_dependent_top_list_has_no_level() {
        let pl = parse_priority_loop("list 1 A: x\nlist 2 B: y\nset x = x + y\nrow A: 0\nrow B: 1").unwrap();
        assert_eq!(independence_level(&pl), None);
        let err = run_priority_loop(&pl, RunMode::Parallel { level: 1, workers: 2, seed: 0 }).unwrap_err();
        assert!(matches!(err, RingError::NotCertified { .. }));
    }

    #[test]
    fn no_shared_list_is_fully_independent() {
        let pl =
            parse_priority_loop("list 1 A: x\nlist 2 B: z\nlist 3 C: y\nset y = x * z\nrow A: 1\nrow B: 3\nrow C: 0").unwrap();
        assert_eq!(independence_level(&pl), Some(3));
    }

    #[test]
    fn parallel_above_level_rejected() {
        let pl = parse_priority_loop(PRODUCTS).unwrap();
        assert!(run_priority_loop(&pl, RunMode::Parallel { level: 3, workers: 2, seed: 0 }).is_err());
        let par = run_priority_loop(&pl, RunMode::Parallel { level: 2, workers: 2, seed: 5 }).unwrap();
        assert_eq!(par, run_priority_loop(&pl, RunMode::Sequential).unwrap());
    }

    #[test]
    fn hooks_run_at_list_ends() {
        let src = "list 1 A: x, first, last\nlist 2 B: y\nset x = x + y\n\
            start A set first = 1\nfinal A set last = 1\nrow A: 0, 0, 0\nrow A: 0, 0, 0\nrow B: 2";
        let r = run_priority_loop(&parse_priority_loop(src).unwrap(), RunMode::Sequential).unwrap();
        assert_eq!(r.data["A"], vec![vec![2, 1, 0], vec![2, 0, 1]]);
    }
}
