use std::collections::BTreeMap;

use paraschema::dependence::{
    build_connection_equations, execute_sequential, execute_wavefront, fmt_point, parse_loop_nest, parse_predecessor_program,
    ready_wavefronts, solve_connection, ConnectionEquation, PredecessorProgram, DEFAULT_BUDGET,
};
use paraschema::fixtures;
use paraschema::schema::Interpretation;
use serde_json::json;

use crate::report::Report;
use crate::{domain, CliError, Ctx, DepCmd, Input, Params, Res};

const SQUARE_EQ: (&str, &str) = ("x^2 = 2*y", "x=1..10, y=1..10");

fn overrides(p: &Params, selftest_n: Option<i64>) -> BTreeMap<String, i64> {
    let mut m: BTreeMap<String, i64> = p.params.iter().cloned().collect();
    if let Some(n) = selftest_n {
        m.entry("N".into()).or_insert(n);
    }
    m
}

fn program(ctx: &Ctx, input: &Input, params: &Params, n: i64) -> Res<PredecessorProgram> {
    let src = ctx.input(input, fixtures::AVERAGING_PRED)?;
    parse_predecessor_program(&src, &overrides(params, ctx.selftest.then_some(n))).map_err(domain)
}

pub fn run(ctx: &Ctx, c: &DepCmd, r: &mut Report) -> Res<()> {
    match c {
        DepCmd::Equations { input, params } => {
            let src = ctx.input(input, fixtures::AVERAGING_NEST)?;
            let nest = parse_loop_nest(&src, &overrides(params, None)).map_err(domain)?;
            let eqs = build_connection_equations(&nest).map_err(domain)?;
            for e in &eqs {
                r.add(
                    "equation",
                    format!("{} {} -> {}: {} [{}]", e.array, e.writer.label, e.reader.label, e, e.class()),
                    json!({ "array": e.array, "writer": e.writer.label, "reader": e.reader.label, "equation": e.to_string(), "class": e.class().to_string() }),
                );
            }
            if ctx.selftest {
                r.expect("four equations", eqs.len() == 4);
            }
        }
        DepCmd::Solve { equation, bounds } => {
            let (eq_text, bounds_text) = match (equation, bounds, ctx.selftest) {
                (Some(e), Some(b), _) => (e.clone(), b.clone()),
                (None, None, true) => (SQUARE_EQ.0.to_string(), SQUARE_EQ.1.to_string()),
                _ => return Err(CliError::Usage("--eq and --bounds are required".into())),
            };
            let eq = ConnectionEquation::from_text(&eq_text, &bounds_text).map_err(domain)?;
            let s = solve_connection(&eq, DEFAULT_BUDGET).map_err(domain)?;
            r.add("class", format!("class: {}", eq.class()), json!({ "class": eq.class().to_string(), "vars": eq.vars }));
            r.add(
                "verdict",
                format!("verdict: {}", s.verdict),
                json!({ "verdict": s.verdict.to_string(), "count": s.points.len() }),
            );
            for p in &s.points {
                r.add("point", fmt_point(p), json!({ "point": p }));
            }
            if ctx.selftest {
                r.expect("solutions (2,2) and (4,8)", s.points == vec![vec![2, 2], vec![4, 8]]);
            }
        }
        DepCmd::Wavefront { input, params, edges } => {
            let prog = program(ctx, input, params, 4)?;
            let plan = ready_wavefronts(&prog).map_err(domain)?;
            for line in plan.report().lines() {
                r.add("plan", line, json!({ "line": line }));
            }
            if *edges {
                for line in plan.edge_list().lines() {
                    r.add("edge", line, json!({ "edge": line }));
                }
            }
            let mut all: Vec<Vec<i64>> = (0..plan.layers.len()).flat_map(|t| plan.layer_points(t)).collect();
            all.sort();
            let partition = all == plan.points;
            let parallel = (0..plan.layers.len()).all(|t| plan.check_parallel_set(&plan.layer_points(t)).unwrap_or(false));
            r.add(
                "check",
                format!("layers partition the domain: {partition}; every layer independent: {parallel}"),
                json!({ "partition": partition, "independent": parallel }),
            );
            if !partition || !parallel {
                r.fail("layer check");
            }
            if ctx.selftest {
                r.expect("layer 0 = {(1,1,1)}", plan.layer_points(0) == vec![vec![1, 1, 1]]);
            }
        }
        DepCmd::Cone { input, params, point } => {
            let prog = program(ctx, input, params, 4)?;
            let point = if point.is_empty() && ctx.selftest { vec![2, 2, 2] } else { point.clone() };
            if point.is_empty() {
                return Err(CliError::Usage("--point is required".into()));
            }
            let plan = ready_wavefronts(&prog).map_err(domain)?;
            let cone = plan.cone(&point).map_err(domain)?;
            r.add(
                "cone",
                format!("cone of {}: {} points", fmt_point(&point), cone.len()),
                json!({ "point": point, "size": cone.len() }),
            );
            for p in &cone {
                r.add("member", fmt_point(p), json!({ "point": p }));
            }
            if ctx.selftest {
                r.expect("(1,1,1) in the cone", cone.contains(&vec![1, 1, 1]));
            }
        }
        DepCmd::Exec { input, params, shuffles } => {
            let prog = program(ctx, input, params, 4)?;
            let plan = ready_wavefronts(&prog).map_err(domain)?;
            let sem = Interpretation::with_builtins();
            let seq = execute_sequential(&prog, &sem).map_err(domain)?;
            let mut equal = 0;
            for k in 0..*shuffles {
                let wave = execute_wavefront(&prog, &plan, &sem, Some(ctx.seed.wrapping_add(k))).map_err(domain)?;
                if wave == seq {
                    equal += 1;
                }
            }
            r.add(
                "exec",
                format!(
                    "points: {}; layers: {}; wavefront runs equal to sequential: {equal}/{shuffles}",
                    plan.points.len(),
                    plan.layers.len()
                ),
                json!({ "points": plan.points.len(), "layers": plan.layers.len(), "equal": equal, "runs": shuffles }),
            );
            for (cell, v) in &seq {
                r.add("cell", format!("{cell} = {v}"), json!({ "cell": cell.to_string(), "value": v.to_string() }));
            }
            if equal != *shuffles {
                r.fail("wavefront and sequential results differ");
            }
        }
    }
    Ok(())
}
