use paraschema::fixtures;
use paraschema::ring::{
    detect_fault, diagram_rotating, diagram_shared, equalize, independence_level, parse_priority_loop, ring_sort, run_handshake,
    run_priority_loop, spread, FaultBehavior, HandshakeConfig, RunMode,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::join;
use crate::report::Report;
use crate::{domain, CliError, Ctx, Res, RingCmd};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum DiagramKind {
    Shared,
    Rotating,
}

fn at(s: &str) -> Res<(usize, usize)> {
    let bad = || CliError::Usage(format!("expected MODULE@PHASE, got `{s}`"));
    let (m, p) = s.split_once('@').ok_or_else(bad)?;
    Ok((m.trim().parse().map_err(|_| bad())?, p.trim().parse().map_err(|_| bad())?))
}

pub fn run(ctx: &Ctx, c: &RingCmd, r: &mut Report) -> Res<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    match c {
        RingCmd::Equalize { start, random, max_phases } => {
            let start = match (random, start.is_empty(), ctx.selftest) {
                (Some(n), _, _) => (0..*n).map(|_| rng.gen_range(0..100)).collect(),
                (None, true, true) => fixtures::EQUALIZE_START.to_vec(),
                (None, true, false) => return Err(CliError::Usage("--start or --random is required".into())),
                (None, false, _) => start.clone(),
            };
            let t = equalize(&start, *max_phases).map_err(domain)?;
            let total: i64 = start.iter().sum();
            r.add("start", format!("start: {}", join(&start)), json!({ "counts": start, "sum": total }));
            let mut conserved = true;
            for (k, p) in t.phases.iter().enumerate() {
                let sum: i64 = p.after.iter().sum();
                conserved &= sum == total;
                r.add(
                    "phase",
                    format!("phase {}: {} (sum {sum})", k + 1, join(&p.after)),
                    json!({ "phase": k + 1, "counts": p.after, "sum": sum }),
                );
            }
            let bound = 2 * start.len() + 1;
            let within = t.converged && t.phases.len() <= bound;
            r.add(
                "result",
                format!(
                    "{}; sum {total} conserved: {conserved}; phases: {} (bound 2n+1 = {bound}, within: {within}); spread {}",
                    if t.converged { "converged" } else { "not converged" },
                    t.phases.len(),
                    spread(t.last())
                ),
                json!({ "converged": t.converged, "conserved": conserved, "phases": t.phases.len(), "bound": bound, "within_bound": within, "spread": spread(t.last()) }),
            );
            if !conserved {
                r.fail("sum not conserved");
            }
            if !t.converged {
                r.fail("did not converge");
            }
            if ctx.selftest {
                r.expect("worked start vector within 21 phases", within && total == 298);
            }
        }
        RingCmd::Sort { fragments, random, len } => {
            let frags: Vec<Vec<i64>> = match (fragments, random, ctx.selftest) {
                (Some(f), _, _) => f
                    .split(';')
                    .map(|part| {
                        part.split(',')
                            .filter(|x| !x.trim().is_empty())
                            .map(|x| x.trim().parse::<i64>().map_err(|e| CliError::Usage(format!("bad value `{x}`: {e}"))))
                            .collect()
                    })
                    .collect::<Res<_>>()?,
                (None, Some(m), _) => (0..*m).map(|_| (0..*len).map(|_| rng.gen_range(-50..50)).collect()).collect(),
                (None, None, true) => (0..8).map(|_| (0..*len).map(|_| rng.gen_range(-50..50)).collect()).collect(),
                (None, None, false) => return Err(CliError::Usage("--fragments or --random is required".into())),
            };
            let t = ring_sort(&frags).map_err(domain)?;
            let show = |p: &[Vec<i64>]| p.iter().map(join).collect::<Vec<_>>().join(" | ");
            r.add("start", format!("start: {}", show(&frags)), json!({ "fragments": frags }));
            for (k, p) in t.phases.iter().enumerate() {
                r.add(
                    "phase",
                    format!("phase {}: {}", k + 1, show(p)),
                    json!({ "phase": k + 1, "fragments": p, "exchanges": t.exchanges[k] }),
                );
            }
            let within = t.phases.len() <= frags.len();
            r.add(
                "result",
                format!("sorted: {}; phases: {} (modules {}, within: {within})", t.sorted, t.phases.len(), frags.len()),
                json!({ "sorted": t.sorted, "phases": t.phases.len(), "modules": frags.len() }),
            );
            if !t.sorted {
                r.fail("not sorted");
            }
            if ctx.selftest {
                r.expect("sorted within module-count phases", t.sorted && within);
            }
        }
        RingCmd::Handshake { costs, steps, no_flags } => {
            let costs = if ctx.selftest { vec![1, 1, 10, 1] } else { costs.clone() };
            let cfg = HandshakeConfig { costs: costs.clone(), steps: *steps, flags: !no_flags, injected_flags: vec![] };
            let rep = run_handshake(&cfg).map_err(domain)?;
            for (k, m) in rep.modules.iter().enumerate() {
                r.add(
                    "module",
                    format!(
                        "M{}: cost {} done {} waiting {} longest wait {} latency {} backlog {}",
                        k + 1,
                        costs[k],
                        m.done_at.len(),
                        m.waiting,
                        m.longest_wait,
                        m.max_latency,
                        m.max_backlog
                    ),
                    json!({ "module": k + 1, "cost": costs[k], "done": m.done_at.len(), "waiting": m.waiting, "longest_wait": m.longest_wait, "latency": m.max_latency, "backlog": m.max_backlog }),
                );
            }
            r.add(
                "result",
                format!("end time {}; deadlock: {}; max latency {}; max backlog {}", rep.end_time, rep.deadlock, rep.max_latency(), rep.max_backlog()),
                json!({ "end_time": rep.end_time, "deadlock": rep.deadlock, "max_latency": rep.max_latency(), "max_backlog": rep.max_backlog() }),
            );
            if rep.deadlock {
                r.fail("deadlock");
            }
            if ctx.selftest {
                r.expect("flags keep the backlog at one", rep.max_backlog() <= 1);
            }
        }
        RingCmd::Diagram { kind, workers, a_len, b_len } => {
            let (kind, w, a, b) = if ctx.selftest { (DiagramKind::Shared, 4, 2, 16) } else { (*kind, *workers, *a_len, *b_len) };
            if w == 0 || a == 0 || b == 0 {
                return Err(CliError::Usage("sizes must be positive".into()));
            }
            let d = match kind {
                DiagramKind::Shared => diagram_shared(w, a, b),
                DiagramKind::Rotating => diagram_rotating(w, a, b),
            };
            for (k, line) in d.render().lines().enumerate() {
                let cells: Vec<String> = if k == 0 { vec![] } else { d.cells[k - 1].iter().map(|c| c.to_string()).collect() };
                r.add("row", line, json!({ "line": line, "cells": cells }));
            }
            r.add(
                "steps",
                format!("processing steps: {}", d.processing_steps),
                json!({ "processing_steps": d.processing_steps, "steps": d.steps() }),
            );
            if ctx.selftest {
                let first: Vec<String> = (1..=5).map(|t| d.cell(1, t).to_string()).collect();
                r.expect("M1 row begins (1,1)..(1,4),(2,1)", first == ["1,1,C,D", "1,2,C,D", "1,3,C,D", "1,4,C,D", "2,1,C,D"]);
            }
        }
        RingCmd::Fault { modules, phases, silent, wrong } => {
            let behavior = match (silent, wrong, ctx.selftest) {
                (Some(s), _, _) => {
                    let (module, from_phase) = at(s)?;
                    FaultBehavior::Silent { module, from_phase }
                }
                (None, Some(s), _) => {
                    let (module, from_phase) = at(s)?;
                    FaultBehavior::WrongState { module, from_phase }
                }
                (None, None, true) => FaultBehavior::Silent { module: 3, from_phase: 2 },
                (None, None, false) => FaultBehavior::Healthy,
            };
            let found = detect_fault(*modules, *phases, behavior).map_err(domain)?;
            for d in &found {
                r.add(
                    "detection",
                    d.to_string(),
                    json!({ "phase": d.phase, "detector": d.detector, "suspect": d.suspect, "reason": d.reason }),
                );
            }
            r.add("result", format!("detections: {}", found.len()), json!({ "detections": found.len() }));
            if ctx.selftest {
                r.expect("silent module 3 caught", found.first().is_some_and(|d| d.suspect == 3 && d.phase < 4));
            }
        }
        RingCmd::Priority { input, workers, level, runs } => {
            let src = ctx.input(input, fixtures::EXPENSES_LOOP)?;
            let pl = parse_priority_loop(&src).map_err(domain)?;
            let certified = independence_level(&pl);
            r.add(
                "certified",
                format!("certified level: {}", certified.map_or("none".to_string(), |l| l.to_string())),
                json!({ "level": certified, "shared": pl.shared_lists() }),
            );
            let seq = run_priority_loop(&pl, RunMode::Sequential).map_err(domain)?;
            for line in seq.to_string().lines() {
                r.add("result", line, json!({ "line": line }));
            }
            let runs = if ctx.selftest { 50 } else { *runs };
            if let Some(level) = level.or(certified) {
                let mut agree = 0;
                for k in 0..runs {
                    let par =
                        run_priority_loop(&pl, RunMode::Parallel { level, workers: *workers, seed: ctx.seed.wrapping_add(k) })
                            .map_err(domain)?;
                    if par.data == seq.data {
                        agree += 1;
                    }
                }
                r.add(
                    "parallel",
                    format!("parallel at level {level} with {workers} workers: {agree}/{runs} runs equal to sequential"),
                    json!({ "level": level, "workers": workers, "agree": agree, "runs": runs }),
                );
                if agree != runs {
                    r.fail("parallel runs differ from the sequential run");
                }
            }
            if ctx.selftest {
                r.expect("priority-1 scan certified", certified == Some(1));
            }
        }
    }
    Ok(())
}
