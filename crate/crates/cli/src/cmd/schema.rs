use paraschema::fixtures;
use paraschema::schema::{
    execute, io_sets, parse_interpretation, parse_schema, random_standard_interpretation, runs_equal, AnyInterpretation, Cell,
    Interpretation, Outcome, Schema, StandardInterpretation, Value, Verdict,
};
use paraschema::transform::{controller_depth_witness, forward_violations, separate_loop, to_forward_oriented};
use serde_json::json;

use super::join;
use crate::report::Report;
use crate::{domain, CliError, Ctx, Input, LoopCmd, Res, SchemaCmd};

const TWICE_F: &str = "start m0\nm0: x = f(x) then m1\nm1: x = f(x) then m2\nm2: halt";
const IO_EXAMPLE: &str = "start m0\nm0: x0 = g(x1, a[k(z)]) then m1\nm1: halt";

fn schema_of(ctx: &Ctx, input: &Input, fixture: &str) -> Res<Schema> {
    parse_schema(&ctx.input(input, fixture)?).map_err(domain)
}

pub fn run(ctx: &Ctx, c: &SchemaCmd, r: &mut Report) -> Res<()> {
    match c {
        SchemaCmd::Validate(input) => {
            let s = schema_of(ctx, input, fixtures::RECURSIVE)?;
            let v = paraschema::schema::validate_l(&s);
            for line in v.to_string().lines() {
                r.add("validation", line, json!({ "text": line.trim() }));
            }
            if ctx.selftest {
                r.expect("recursive schema rejected", !v.is_l_schema() && v.has("recursive procedure"));
            } else if !v.is_l_schema() {
                let reasons: std::collections::BTreeSet<&str> = v.problems.iter().map(|p| p.reason).collect();
                r.fail(join(reasons));
            }
        }
        SchemaCmd::Run { input, interp, standard, total, trace } => {
            let s = schema_of(ctx, input, TWICE_F)?;
            let sem = if ctx.selftest {
                let mut si = StandardInterpretation::default();
                si.start.insert(Cell::Simple("x".into()), Value::atom("q1"));
                AnyInterpretation::Standard(si)
            } else if let Some(path) = interp {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Domain(format!("cannot read {}: {e}", path.display())))?;
                parse_interpretation(&text).map_err(domain)?
            } else if *total {
                AnyInterpretation::Standard(StandardInterpretation::total(ctx.seed))
            } else if *standard {
                AnyInterpretation::Standard(random_standard_interpretation(&s, ctx.seed, false))
            } else {
                AnyInterpretation::Concrete(Interpretation::with_builtins())
            };
            let res = execute(&s, &sem, ctx.fuel).map_err(domain)?;
            let outcome = match &res.outcome {
                Outcome::Halted => "halted".to_string(),
                Outcome::Undefined { label, reason } => format!("undefined-value at {label}: {reason}"),
                Outcome::FuelExhausted => "fuel-exhausted".to_string(),
            };
            r.add(
                "outcome",
                format!("outcome: {outcome}"),
                json!({ "outcome": outcome, "steps": res.trace.len(), "fuel_used": res.fuel_used }),
            );
            r.add("steps", format!("steps: {}", res.trace.len()), json!({ "count": res.trace.len() }));
            if *trace {
                for st in &res.trace {
                    let iters = join(&st.iters);
                    r.add("step", format!("  {} [{iters}]", st.label), json!({ "label": st.label, "iters": st.iters }));
                }
            }
            for (cell, v) in &res.memory {
                r.add("cell", format!("{cell} = {v}"), json!({ "cell": cell.to_string(), "value": v.to_string() }));
            }
            if ctx.selftest {
                let x = res.memory.get(&Cell::Simple("x".into())).map(|v| v.to_string());
                r.expect("x = f(f(q1))", res.outcome == Outcome::Halted && x.as_deref() == Some("f(f(q1))"));
            }
        }
        SchemaCmd::Iosets { input, label } => {
            let s = schema_of(ctx, input, IO_EXAMPLE)?;
            let label = match (label, ctx.selftest) {
                (Some(l), _) => l.clone(),
                (None, true) => "m0".to_string(),
                (None, false) => return Err(CliError::Usage("--label is required".into())),
            };
            let io = io_sets(&s, &label).map_err(domain)?;
            let ind = join(&io.ind);
            let arg = join(&io.arg);
            let val = join(&io.val);
            r.add("ind", format!("Ind = {{{ind}}}"), json!({ "label": label, "ind": io.ind }));
            r.add(
                "arg",
                format!("Arg = {{{arg}}}"),
                json!({ "label": label, "arg": io.arg.iter().map(|v| v.to_string()).collect::<Vec<_>>() }),
            );
            r.add(
                "val",
                format!("Val = {{{val}}}"),
                json!({ "label": label, "val": io.val.iter().map(|v| v.to_string()).collect::<Vec<_>>() }),
            );
            if ctx.selftest {
                r.expect("Ind = {z}", ind == "z");
                r.expect("Val = {x0}", val == "x0");
            }
        }
    }
    Ok(())
}

pub fn run_loop(ctx: &Ctx, c: &LoopCmd, r: &mut Report) -> Res<()> {
    match c {
        LoopCmd::Forward(input) => {
            let s = schema_of(ctx, input, fixtures::BACKWARD_LOOP)?;
            let bad = forward_violations(&s);
            for (body, label, var) in &bad {
                r.add(
                    "violation",
                    format!("backward use: {var} read at {label} in {body} before it is set"),
                    json!({ "body": body, "label": label, "var": var }),
                );
            }
            r.add(
                "forward",
                format!("forward oriented: {}", if bad.is_empty() { "yes" } else { "no" }),
                json!({ "forward": bad.is_empty() }),
            );
            let fixed = to_forward_oriented(&s).map_err(domain)?;
            for line in fixed.to_string().lines() {
                r.add("schema", line, json!({ "line": line }));
            }
            if ctx.selftest {
                r.expect("one backward use", bad.len() == 1);
                r.expect("rewrite is forward oriented", forward_violations(&fixed).is_empty());
            }
        }
        LoopCmd::Separate { input, label, check } => {
            let s = schema_of(ctx, input, fixtures::LIST_LOOP)?;
            let sep = separate_loop(&s, label).map_err(domain)?;
            for line in sep.report().lines() {
                r.add("separation", line, json!({ "line": line }));
            }
            r.add(
                "summary",
                format!("controllers: {}; class: {}", sep.controller_count(), sep.class),
                json!({ "controllers": sep.controller_count(), "class": sep.class.to_string() }),
            );
            for line in sep.to_schema().to_string().lines() {
                r.add("schema", line, json!({ "line": line }));
            }
            let checks = if ctx.selftest && *check == 0 { 100 } else { *check };
            if checks > 0 {
                let t = sep.to_schema();
                let mut mismatches = 0;
                let mut undecided = 0;
                for k in 0..checks {
                    let sem = random_standard_interpretation(&s, ctx.seed.wrapping_add(k), true);
                    match runs_equal(&s, &t, &sem, ctx.fuel).map_err(domain)? {
                        Verdict::Equal => {}
                        Verdict::Different(why) => {
                            mismatches += 1;
                            r.add(
                                "mismatch",
                                format!("seed {}: {why}", ctx.seed.wrapping_add(k)),
                                json!({ "seed": ctx.seed.wrapping_add(k), "why": why }),
                            );
                        }
                        Verdict::Indeterminate => undecided += 1,
                    }
                }
                r.add(
                    "equivalence",
                    format!("total interpretations: {checks}; mismatches: {mismatches}; out of fuel: {undecided}"),
                    json!({ "runs": checks, "mismatches": mismatches, "indeterminate": undecided }),
                );
                if mismatches > 0 {
                    r.fail(format!("{mismatches} runs differ"));
                }
            }
            if ctx.selftest {
                r.expect("two controllers", sep.controller_count() == 2);
            }
        }
        LoopCmd::Depth { input, label, iterations } => {
            let s = schema_of(ctx, input, fixtures::LIST_LOOP)?;
            let sep = separate_loop(&s, label).map_err(domain)?;
            let d = controller_depth_witness(&sep, *iterations, ctx.seed, ctx.fuel).map_err(domain)?;
            r.add(
                "depth",
                format!("controllers: {}; witness depth: {d}", sep.controller_count()),
                json!({ "controllers": sep.controller_count(), "witness": d }),
            );
            if ctx.selftest {
                r.expect("depth = controllers - 1", d + 1 == sep.controller_count());
            }
        }
    }
    Ok(())
}
