use paraschema::dps::{
    build_pr, decode_marking, encode_marking, parse_dps, parse_petri, parse_pr, petri_to_dps, pr_start, run_dps, token_value,
    DpsRun, PrSpec, Status,
};
use paraschema::fixtures;
use paraschema::schema::Value;
use serde_json::json;

use super::join;
use crate::report::Report;
use crate::{domain, CliError, Ctx, DpsCmd, Res};

fn status(s: Status) -> &'static str {
    match s {
        Status::Quiescent => "quiescent",
        Status::FuelExhausted => "fuel-exhausted",
    }
}

fn steps(r: &mut Report, run: &DpsRun) {
    for st in &run.steps {
        r.add(
            "step",
            format!("step {}: applied {}; updated {}", st.step, join(&st.applied), join(&st.updated)),
            json!({ "step": st.step, "applied": st.applied, "updated": st.updated, "digest": format!("{:016x}", st.digest) }),
        );
    }
}

fn pr_spec(text: &str) -> Res<PrSpec> {
    match text {
        "add" => Ok(PrSpec::add()),
        "root" => Ok(PrSpec::exact_root()),
        _ => parse_pr(text).map_err(|e| CliError::Usage(format!("function: {e}"))),
    }
}

/// Runs `spec` on `args` and returns the result values with the run status.
fn run_pr(ctx: &Ctx, r: &mut Report, name: &str, spec: &PrSpec, args: &[i64]) -> Res<(Vec<Value>, Status)> {
    let dps = build_pr(spec).map_err(domain)?;
    let run = run_dps(&dps, &pr_start(args), ctx.fuel).map_err(domain)?;
    // A run cut short holds a partial search state, not a result.
    let z: Vec<Value> = if run.status == Status::Quiescent { run.set("z").into_iter().collect() } else { Vec::new() };
    let shown = if run.status == Status::Quiescent { format!("{{{}}}", join(&z)) } else { "undefined".to_string() };
    r.add(
        "result",
        format!(
            "{name}({}) = {shown}; {}; {} steps, {} applications",
            join(args),
            status(run.status),
            run.steps.len(),
            run.applications
        ),
        json!({
            "function": name,
            "args": args,
            "z": z.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
            "status": status(run.status),
            "steps": run.steps.len(),
            "applications": run.applications,
        }),
    );
    Ok((z, run.status))
}

pub fn run(ctx: &Ctx, c: &DpsCmd, r: &mut Report) -> Res<()> {
    match c {
        DpsCmd::Run(input) => {
            let (dps, start) = parse_dps(&ctx.input(input, fixtures::SUMMATION_DPS)?).map_err(domain)?;
            let run = run_dps(&dps, &start, ctx.fuel).map_err(domain)?;
            steps(r, &run);
            for (name, vals) in &run.family {
                let shown: Vec<String> = vals.iter().map(|v| token_value(v).to_string()).collect();
                r.add("set", format!("{name} = {{{}}}", shown.join(", ")), json!({ "set": name.to_string(), "values": shown }));
            }
            r.add(
                "status",
                format!("status: {}; steps: {}; applications: {}", status(run.status), run.steps.len(), run.applications),
                json!({ "status": status(run.status), "steps": run.steps.len(), "applications": run.applications }),
            );
            if ctx.selftest {
                let vals: Vec<Value> = run.set("S1").iter().map(token_value).collect();
                r.expect("1..8 sums to 36 in three steps", vals == [Value::int(36)] && run.steps.len() == 3);
            }
        }
        DpsCmd::Pr { spec, args } => {
            if ctx.selftest {
                let (z, _) = run_pr(ctx, r, "add", &PrSpec::add(), &[3, 4])?;
                r.expect("add(3, 4) = 7", z == [Value::int(7)]);
                let (z, _) = run_pr(ctx, r, "root", &PrSpec::exact_root(), &[9])?;
                r.expect("root(9) = 3", z == [Value::int(3)]);
            } else {
                let text = spec.as_deref().unwrap_or("add");
                let s = pr_spec(text)?;
                let arity = s.arity().map_err(|e| CliError::Usage(e.to_string()))?;
                if args.len() != arity {
                    return Err(CliError::Usage(format!("{text} takes {arity} arguments, got {}", args.len())));
                }
                run_pr(ctx, r, text, &s, args)?;
            }
        }
        DpsCmd::Petri { input, steps: n } => {
            let net = parse_petri(&ctx.input(input, fixtures::PRODUCER_CONSUMER)?).map_err(domain)?;
            let dps = petri_to_dps(&net, ctx.seed);
            let start = encode_marking(&net, &net.initial);
            let sim = net.simulate(&net.initial, ctx.seed, *n);
            let mut agree = true;
            let mut last = None;
            for k in 0..=*n {
                let run = run_dps(&dps, &start, k as u64).map_err(domain)?;
                let m = decode_marking(&net, &run.family);
                let expected = &sim[k.min(sim.len() - 1)];
                agree &= &m == expected;
                if k < sim.len() {
                    r.add("marking", format!("step {k}: {}", join(&m)), json!({ "step": k, "marking": m, "net": expected }));
                }
                last = Some((m, run.status));
            }
            let (m, st) = last.expect("at least one step");
            let places: Vec<String> = net.places.iter().zip(&m).map(|(p, c)| format!("{p}={c}")).collect();
            r.add(
                "result",
                format!("final: {}; {}; encoding matches the net: {agree}", places.join(", "), status(st)),
                json!({ "marking": m, "status": status(st), "matches": agree }),
            );
            if !agree {
                r.fail("encoded run differs from the net");
            }
            if ctx.selftest {
                r.expect("buffer moves to consumed", m == [0, 1] && st == Status::Quiescent);
            }
        }
    }
    Ok(())
}
