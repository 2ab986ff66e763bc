use std::collections::BTreeSet;

use paraschema::fixtures;
use paraschema::schema::interp::{parse_value, value_list};
use paraschema::setdef::{
    brute_force_variants, check_agreed, check_selected, family_from, horn_export, parse_system, prefix_len, show_family,
    solve_120, solve_130, to_boolean_constraints, Family, SetName, System,
};
use paraschema::text::{Cursor, ParseError};
use serde_json::json;

use crate::report::Report;
use crate::{domain, CliError, Ctx, Input, Res, SetdefCmd};

/// Parses `S = {a, b}; T[1] = {c}`.
fn parse_family(src: &str) -> Result<Family, ParseError> {
    let mut sets = Vec::new();
    for part in src.split(';').filter(|p| !p.trim().is_empty()) {
        let mut c = Cursor::new(part, 1)?;
        let base = c.ident()?;
        let name = if c.eat_sym("[") {
            let v = parse_value(&mut c)?;
            c.expect_sym("]")?;
            SetName::with(&base, v)
        } else {
            SetName::plain(&base)
        };
        c.expect_sym("=")?;
        c.expect_sym("{")?;
        let members = value_list(&mut c, "}")?;
        c.expect_end()?;
        sets.push((name, members));
    }
    Ok(family_from(sets))
}

fn system(ctx: &Ctx, input: &Input, fixture: &str) -> Res<System> {
    parse_system(&ctx.input(input, fixture)?).map_err(domain)
}

fn families(r: &mut Report, kind: &str, fams: &[Family]) {
    for f in fams {
        let shown = show_family(f);
        r.add(kind, format!("{kind}: {shown}"), json!({ "family": shown }));
    }
}

pub fn run(ctx: &Ctx, c: &SetdefCmd, r: &mut Report) -> Res<()> {
    match c {
        SetdefCmd::Check { input, family } => {
            let sys = system(ctx, input, fixtures::PAIRS_FORALL_EXISTS)?;
            let text = match (family, ctx.selftest) {
                (Some(f), false) => f.clone(),
                (_, true) => "S = {a, b}".to_string(),
                (None, false) => return Err(CliError::Usage("--family is required".into())),
            };
            let fam = parse_family(&text).map_err(|e| CliError::Usage(format!("family: {e}")))?;
            let sel = check_selected(&sys, &fam);
            for issue in &sel.agreed.issues {
                r.add("issue", format!("issue: {issue}"), json!({ "issue": issue }));
            }
            let witness = sel.witness.as_ref().map(|(n, v)| format!("{n} + {v}"));
            if let Some(w) = &witness {
                r.add("witness", format!("agreed extension: {w}"), json!({ "witness": w }));
            }
            let shown = show_family(&fam);
            r.add(
                "check",
                format!("family {shown}: agreed {}; selected {}", sel.agreed.ok(), sel.selected()),
                json!({ "family": shown, "agreed": sel.agreed.ok(), "selected": sel.selected() }),
            );
            if ctx.selftest {
                r.expect("{a, b} is selected", sel.selected());
                let abc = parse_family("S = {a, b, c}").map_err(domain)?;
                r.expect("{a, b, c} is not agreed", !check_agreed(&sys, &abc).ok());
            }
        }
        SetdefCmd::Solve { input, cap } => {
            let sys = system(ctx, input, fixtures::PAIRS_FORALL_EXISTS)?;
            let (name, fams) = match prefix_len(&sys) {
                Some(2) => {
                    let s = solve_120(&sys).map_err(domain)?;
                    (format!("two-quantifier kind {}", s.kind), s.families())
                }
                Some(3) => {
                    let s = solve_130(&sys, *cap).map_err(domain)?;
                    (format!("three-quantifier {}", s.verdict), s.families())
                }
                other => {
                    let n = other.map_or("no single property form".to_string(), |n| format!("prefix of length {n}"));
                    return Err(CliError::Domain(format!("no selection algorithm for {n}")));
                }
            };
            r.add("algorithm", format!("algorithm: {name}"), json!({ "algorithm": name }));
            families(r, "variant", &fams);
            let mut all_selected = true;
            for f in &fams {
                all_selected &= check_selected(&sys, f).selected();
            }
            r.add("check", format!("every variant selected: {all_selected}"), json!({ "selected": all_selected }));
            if ctx.selftest {
                let abcd = parse_family("S = {a, b, c, d}").map_err(domain)?;
                r.expect("removal gives {a, b, c, d}", fams == vec![abcd]);
            }
        }
        SetdefCmd::Variants { input, cap } => {
            let sys = system(ctx, input, fixtures::SELECTION_PRINTED)?;
            let v = brute_force_variants(&sys, &Family::new(), *cap).map_err(domain)?;
            families(r, "agreed", &v.agreed);
            families(r, "selected", &v.selected);
            let max = v.maximum().map(show_family);
            r.add(
                "summary",
                format!(
                    "agreed: {}; selected: {}; maximum: {}",
                    v.agreed.len(),
                    v.selected.len(),
                    max.as_deref().unwrap_or("none")
                ),
                json!({ "agreed": v.agreed.len(), "selected": v.selected.len(), "maximum": max }),
            );
            if ctx.selftest {
                let q1 = parse_family("S = {q1}").map_err(domain)?;
                r.expect("{q1} is selected", v.selected.contains(&q1));
            }
        }
        SetdefCmd::Encode { input, horn, cap } => {
            let sys = system(ctx, input, fixtures::PAIRS_FORALL_EXISTS)?;
            if *horn {
                let h = horn_export(&sys).map_err(domain)?;
                for line in h.render().lines() {
                    r.add("clause", line, json!({ "clause": line }));
                }
                let kept: Vec<String> = h.kept().iter().map(|v| v.to_string()).collect();
                r.add(
                    "horn",
                    format!("horn: {}; kept: {{{}}}", h.is_horn(), kept.join(", ")),
                    json!({ "horn": h.is_horn(), "kept": kept }),
                );
                if ctx.selftest {
                    r.expect("least model keeps a, b, c, d", h.is_horn() && kept == ["a", "b", "c", "d"]);
                }
            } else {
                let cs = to_boolean_constraints(&sys).map_err(domain)?;
                for (k, (name, v)) in cs.vars.iter().enumerate() {
                    r.add(
                        "var",
                        format!("x{k}: {v} in {name}"),
                        json!({ "var": k, "set": name.to_string(), "value": v.to_string() }),
                    );
                }
                for e in &cs.constraints {
                    r.add("constraint", e.to_string(), json!({ "constraint": e.to_string() }));
                }
                let sols = cs.solutions(*cap).map_err(domain)?;
                let sel = cs.selected_solutions(*cap).map_err(domain)?;
                families(r, "selected", &sel);
                r.add(
                    "summary",
                    format!("variables: {}; constraints: {}; solutions: {}; selected: {}", cs.vars.len(), cs.constraints.len(), sols.len(), sel.len()),
                    json!({ "variables": cs.vars.len(), "constraints": cs.constraints.len(), "solutions": sols.len(), "selected": sel.len() }),
                );
                if ctx.selftest {
                    let v = brute_force_variants(&sys, &Family::new(), *cap).map_err(domain)?;
                    let same =
                        |a: &[Family], b: &[Family]| a.iter().collect::<BTreeSet<_>>() == b.iter().collect::<BTreeSet<_>>();
                    r.expect("encoding agrees with enumeration", same(&sols, &v.agreed) && same(&sel, &v.selected));
                }
            }
        }
    }
    Ok(())
}
