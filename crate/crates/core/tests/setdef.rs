use std::collections::{BTreeMap, BTreeSet};

use paraschema::fixtures::*;
use paraschema::schema::Value;
use paraschema::setdef::*;
use proptest::prelude::*;

fn atoms(xs: &[&str]) -> BTreeSet<Value> {
    xs.iter().map(|x| Value::atom(x)).collect()
}

fn single(name: &str, xs: &[&str]) -> Family {
    family_from([(SetName::plain(name), atoms(xs).into_iter().collect())])
}

fn sets_of(fams: &[Family], name: &str) -> BTreeSet<BTreeSet<Value>> {
    fams.iter().map(|f| f.get(&SetName::plain(name)).cloned().unwrap_or_default()).collect()
}

fn oracle(sys: &System) -> Variants {
    brute_force_variants(sys, &Family::new(), DEFAULT_CAP).unwrap()
}

#[test]
fn printed_selection_example() {
    let sys = parse_system(SELECTION_PRINTED).unwrap();
    let Body::Beta(f) = &sys.forms[0].body else { panic!() };
    let t = eval_formula(&sys, &single("S", &["q1"]), f, &Default::default()).unwrap();
    assert_eq!(t, Truth::True);
    let v = oracle(&sys);
    let expect: BTreeSet<_> = [atoms(&["q1"]), atoms(&["q2"]), atoms(&["q3"])].into();
    assert_eq!(sets_of(&v.selected, "S"), expect);
    // Without p(q2, q3) the pair is not even agreed.
    assert!(!check_agreed(&sys, &single("S", &["q2", "q3"])).ok());
}

#[test]
fn corrected_selection_example() {
    let sys = parse_system(SELECTION_CORRECTED).unwrap();
    let v = oracle(&sys);
    let expect: BTreeSet<_> = [atoms(&["q1"]), atoms(&["q2", "q3"])].into();
    assert_eq!(sets_of(&v.selected, "S"), expect);
    let greedy = solve_120(&sys).unwrap();
    assert_eq!(greedy.kind, 1);
    for f in greedy.families() {
        assert!(check_selected(&sys, &f).selected(), "{}", show_family(&f));
    }
}

#[test]
fn selected_inside_selected() {
    let sys = parse_system(PAIRS_FORALL_EXISTS).unwrap();
    let v = oracle(&sys);
    let sel = sets_of(&v.selected, "S");
    let ab = atoms(&["a", "b"]);
    let abcd = atoms(&["a", "b", "c", "d"]);
    assert!(sel.contains(&ab) && sel.contains(&atoms(&["c", "d"])) && sel.contains(&abcd));
    assert!(ab.is_subset(&abcd) && ab != abcd);
    // Neither middle step is agreed, so {a, b} cannot grow one element at a time.
    for extra in ["c", "d"] {
        assert!(!check_agreed(&sys, &single("S", &["a", "b", extra])).ok());
    }
    assert!(check_selected(&sys, &single("S", &["a", "b"])).selected());
    let removal = solve_120(&sys).unwrap();
    assert_eq!(removal.kind, 2);
    assert_eq!(removal.variants, vec![abcd.clone()]);
    assert_eq!(v.maximum(), Some(&single("S", &["a", "b", "c", "d"])));
}

#[test]
fn printed_quantifiers_give_only_empty() {
    let sys = parse_system(PAIRS_FORALL_FORALL).unwrap();
    let v = oracle(&sys);
    assert_eq!(v.agreed, vec![Family::new()]);
    assert_eq!(v.selected, vec![Family::new()]);
}

#[test]
fn nice_laboratories() {
    let sys = parse_system(LABS).unwrap();
    // Hand oracle: a lab is nice when salary orders its staff as experience does.
    let staff: BTreeMap<&str, Vec<(i64, i64)>> = [("lab1", vec![(3, 50), (5, 70)]), ("lab2", vec![(2, 80), (7, 60)])].into();
    let nice: Vec<&str> =
        staff.iter().filter(|(_, es)| es.iter().all(|a| es.iter().all(|b| a.0 <= b.0 || a.1 > b.1))).map(|(l, _)| *l).collect();
    assert_eq!(nice, ["lab1"]);
    let base = complete(&sys, &Family::new()).unwrap();
    let mut with_nice = base.clone();
    with_nice.insert(SetName::plain("Nice"), atoms(&nice));
    assert!(check_agreed(&sys, &with_nice).ok());
    let mut both = base.clone();
    both.insert(SetName::plain("Nice"), atoms(&["lab1", "lab2"]));
    assert!(!check_agreed(&sys, &both).ok());
    let v = oracle(&sys);
    assert_eq!(v.selected, vec![with_nice]);
    assert!(!check_agreed(&sys, &Family::new()).ok());
}

#[test]
fn graph_component() {
    let sys = parse_system(GRAPH_COMPONENT).unwrap();
    let edges = [("a", "b"), ("c", "b"), ("d", "e"), ("e", "f")];
    let mut comp: BTreeSet<&str> = ["a"].into();
    loop {
        let next: Vec<&str> = edges
            .iter()
            .flat_map(|&(u, v)| [(u, v), (v, u)])
            .filter(|(u, v)| comp.contains(u) && !comp.contains(v))
            .map(|(_, v)| v)
            .collect();
        if next.is_empty() {
            break;
        }
        comp.extend(next);
    }
    let full = complete(&sys, &Family::new()).unwrap();
    let c = &full[&SetName::plain("C")];
    assert_eq!(c, &atoms(&comp.iter().copied().collect::<Vec<_>>()));
    assert!(check_agreed(&sys, &full).ok());
    // Removing any non-base element or adding any other breaks agreement.
    for v in c.iter().filter(|v| **v != Value::atom("a")) {
        let mut f = full.clone();
        f.get_mut(&SetName::plain("C")).unwrap().remove(v);
        assert!(!check_agreed(&sys, &f).ok());
    }
    for v in ["d", "e", "f"] {
        let mut f = full.clone();
        f.get_mut(&SetName::plain("C")).unwrap().insert(Value::atom(v));
        assert!(!check_agreed(&sys, &f).ok());
    }
    assert_eq!(oracle(&sys).selected, vec![full]);
}

#[test]
fn agreed_families_without_maximum() {
    let sys = parse_system(NO_MAXIMUM).unwrap();
    let two = |a: &[&str], b: &[&str]| {
        family_from([
            (SetName::plain("S1"), atoms(a).into_iter().collect()),
            (SetName::plain("S2"), atoms(b).into_iter().collect()),
        ])
    };
    assert!(check_agreed(&sys, &two(&["a"], &["c"])).ok());
    assert!(check_agreed(&sys, &two(&["b"], &["d"])).ok());
    assert!(!check_agreed(&sys, &two(&["a", "b"], &["c", "d"])).ok());
    let v = oracle(&sys);
    assert!(v.agreed.len() > 2);
    assert_eq!(v.maximum(), None);
    assert!(v.selected.len() > 1);
}

#[test]
fn encoding_matches_oracle_on_fixtures() {
    for (name, src) in SETDEF_FIXTURES {
        let sys = parse_system(src).unwrap();
        let Ok(c) = to_boolean_constraints(&sys) else {
            assert!(sys.forms.iter().any(|f| matches!(f.kind(), Kind::Gamma | Kind::Delta)), "{name}");
            continue;
        };
        let v = oracle(&sys);
        let sols: BTreeSet<Family> = c.solutions(DEFAULT_CAP).unwrap().into_iter().collect();
        assert_eq!(sols, v.agreed.iter().cloned().collect(), "{name}");
        let sel: BTreeSet<Family> = c.selected_solutions(DEFAULT_CAP).unwrap().into_iter().collect();
        assert_eq!(sel, v.selected.iter().cloned().collect(), "{name}");
    }
}

#[test]
fn horn_export_of_pairs() {
    let sys = parse_system(PAIRS_FORALL_EXISTS).unwrap();
    let h = horn_export(&sys).unwrap();
    assert!(h.is_horn());
    assert_eq!(h.kept(), atoms(&["a", "b", "c", "d"]));
}

#[test]
fn separable_conjunction() {
    let src = "universe a, b, c, d\nS = { forall x in S forall y in S exists z in S r(x, y) & t(z) }\n[mode]\nclosed\n\
               [diagram]\nr(a, a)\nr(a, b)\nr(b, a)\nr(b, b)\nt(a)\nt(b)";
    let sys = parse_system(src).unwrap();
    let s = solve_130(&sys, 8).unwrap();
    assert_eq!(s.verdict, Verdict::SeparableAnd);
    let restricted = parse_system(
        "universe a, b\nS = { forall x in S forall y in S r(x, y) }\n[mode]\nclosed\n[diagram]\nr(a, a)\nr(a, b)\nr(b, a)\nr(b, b)",
    )
    .unwrap();
    assert_eq!(s.variants, solve_120(&restricted).unwrap().variants);
    assert_eq!(s.families(), oracle(&sys).selected);
}

#[test]
fn skolem_reduction() {
    // y = succ(x) works for every z, so the whole cycle survives.
    let mut src = String::from(
        "universe a, b, c, d\nS = { forall x in S exists y in S forall z in S p(x, y, z) }\n[mode]\nclosed\n[diagram]\n",
    );
    for (x, y) in [("a", "b"), ("b", "c"), ("c", "a")] {
        for z in ["a", "b", "c", "d"] {
            src.push_str(&format!("p({x}, {y}, {z})\n"));
        }
    }
    let sys = parse_system(&src).unwrap();
    let s = solve_130(&sys, 8).unwrap();
    assert_eq!(s.verdict, Verdict::Skolem);
    assert_eq!(s.variants, vec![atoms(&["a", "b", "c"])]);
    // The empty set is selected too: no single element supports itself.
    assert_eq!(sets_of(&oracle(&sys).selected, "S"), [BTreeSet::new(), atoms(&["a", "b", "c"])].into());
}

#[test]
fn personal_list_names() {
    let d = Dictionary::new("D", &["IT", "HR"]);
    let b = Dictionary::new("B", &["USA", "UK", "FR"]);
    let names: Vec<String> = hierarchy("P", &[&d, &b]).unwrap().into_iter().map(|x| x.name).collect();
    assert_eq!(names, ["P(IT,USA)", "P(IT,UK)", "P(IT,FR)", "P(HR,USA)", "P(HR,UK)", "P(HR,FR)"]);
}

#[test]
fn flattened_departments() {
    let d = Dictionary::new("D", &["IT", "HR"]);
    let members = vec![Dictionary::new("M(IT)", &["ann", "bob"]), Dictionary::new("M(HR)", &["cy"])];
    let text: Vec<String> = flatten("M", &d, &members).unwrap().iter().map(|l| l.to_string()).collect();
    assert_eq!(text, ["IT:", "  ann", "  bob", "HR:", "  cy"]);
    assert_eq!(flatten("M", &Dictionary::new("D", &["OPS"]), &members), Err(DictError::Missing("M(OPS)".into())));
    let all = members[0].union(&members[1]);
    assert_eq!(all.entries[2].genesis, BTreeSet::from(["M(HR)".to_string()]));
}

fn prefix(k: u8) -> Vec<Quant> {
    (0..2).map(|i| if k >> i & 1 == 1 { Quant::Exists } else { Quant::Forall }).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn two_quantifier_solver_agrees_with_oracle(k in 0u8..4, n in 0usize..6, density in 0.1f64..0.9, seed: u64) {
        let sys = random_system(&prefix(k), n, density, seed);
        let s = solve_120(&sys).unwrap();
        let v = oracle(&sys);
        for f in s.families() {
            prop_assert!(check_selected(&sys, &f).selected(), "{}", show_family(&f));
        }
        if s.kind == 2 || s.kind == 4 {
            prop_assert_eq!(s.families().len(), 1);
            prop_assert_eq!(Some(&s.families()[0]), v.maximum());
            prop_assert!(v.selected.contains(&s.families()[0]));
        }
    }

    #[test]
    fn three_quantifier_solver_outputs_are_selected(q in 0u8..8, n in 0usize..5, density in 0.2f64..0.95, seed: u64) {
        let quants: Vec<Quant> = (0..3).map(|i| if q >> i & 1 == 1 { Quant::Exists } else { Quant::Forall }).collect();
        let sys = random_system(&quants, n, density, seed);
        let s = solve_130(&sys, 8).unwrap();
        let v = oracle(&sys);
        for f in s.families() {
            prop_assert!(v.selected.contains(&f), "{} via {}", show_family(&f), s.verdict);
            prop_assert!(check_selected(&sys, &f).selected());
        }
        if s.verdict == Verdict::Fallback {
            prop_assert_eq!(sets_of(&s.families(), "S"), sets_of(&v.selected, "S"));
        }
    }

    #[test]
    fn encoding_equals_agreed(k in 0u8..4, n in 0usize..5, density in 0.1f64..0.9, seed: u64, strict in any::<bool>()) {
        let mut sys = random_system(&prefix(k), n, density, seed);
        if strict {
            if let paraschema::schema::AnyInterpretation::Standard(i) = &mut sys.interp {
                i.mode = paraschema::schema::DiagramMode::Strict;
            }
        }
        let c = to_boolean_constraints(&sys).unwrap();
        let sols: BTreeSet<Family> = c.solutions(DEFAULT_CAP).unwrap().into_iter().collect();
        let v = oracle(&sys);
        prop_assert_eq!(sols, v.agreed.into_iter().collect::<BTreeSet<_>>());
    }

    #[test]
    fn horn_model_is_removal(n in 0usize..7, density in 0.05f64..0.6, seed: u64) {
        let sys = random_system(&[Quant::Forall, Quant::Exists], n, density, seed);
        let h = horn_export(&sys).unwrap();
        prop_assert!(h.is_horn());
        prop_assert_eq!(vec![h.kept()], solve_120(&sys).unwrap().variants);
    }

    #[test]
    fn delta_growth_is_monotone(small in proptest::collection::btree_set(0usize..6, 0..6), extra in proptest::collection::btree_set(0usize..6, 0..6)) {
        let list = |s: &BTreeSet<usize>| s.iter().map(|i| format!("e{i}")).collect::<Vec<_>>().join(", ");
        let big: BTreeSet<usize> = small.union(&extra).copied().collect();
        let sys_for = |s: &BTreeSet<usize>| parse_system(&format!("universe e0\nS0 = {{{}}}\nT = {{ f(z) ; z in S0 }}", list(s))).unwrap();
        let t = |s: &BTreeSet<usize>| complete(&sys_for(s), &Family::new()).unwrap().get(&SetName::plain("T")).cloned().unwrap_or_default();
        prop_assert!(t(&small).is_subset(&t(&big)));
        prop_assert_eq!(t(&big).len(), big.len());
    }
}
