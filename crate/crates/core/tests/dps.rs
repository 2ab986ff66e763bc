use std::collections::{BTreeMap, BTreeSet, VecDeque};

use paraschema::dps::*;
use paraschema::schema::Value;
use paraschema::setdef::{Family, SetName};
use proptest::prelude::*;

fn set_of(f: &Family, name: &str) -> BTreeSet<Value> {
    f.get(&SetName::plain(name)).cloned().unwrap_or_default()
}

fn ints(vals: impl IntoIterator<Item = i64>) -> BTreeSet<Value> {
    vals.into_iter().map(Value::int).collect()
}

fn tokens(vals: &[i64]) -> Family {
    let toks: BTreeSet<Value> = vals.iter().enumerate().map(|(i, &v)| token(i as i64, Value::int(v))).collect();
    [(SetName::plain("S1"), toks)].into_iter().collect()
}

fn total(f: &Family) -> i64 {
    set_of(f, "S1").iter().map(|v| token_value(v).as_i64().unwrap()).sum()
}

#[test]
fn summation_of_one_to_eight() {
    let (dps, start) = parse_dps("start S1 = 1..8\nsystem F1(S1) need S1 2\n  S1 = pairsum(S1)").unwrap();
    let run = run_dps(&dps, &start, 100).unwrap();
    assert_eq!(run.status, Status::Quiescent);
    let vals: Vec<Value> = run.set("S1").iter().map(token_value).collect();
    assert_eq!(vals, [Value::int(36)]);
    // Halving 8 elements takes three rounds.
    assert_eq!(run.steps.len(), 3);
}

#[test]
fn summation_of_one_to_hundred() {
    let start: Family = [(SetName::plain("S1"), ints(1..=100))].into_iter().collect();
    let run = run_dps(&summation_dps(None), &start, 1000).unwrap();
    assert_eq!(run.status, Status::Quiescent);
    assert_eq!(run.set("S1").iter().map(token_value).collect::<Vec<_>>(), [Value::int(5050)]);
    assert_eq!(run.steps.len(), 7);
}

#[test]
fn seeded_odd_summation_carries_one() {
    for seed in 0..20 {
        let vals: Vec<i64> = (0..13).map(|i| (i * 7 + seed as i64) % 10).collect();
        let f0 = tokens(&vals);
        let dps = summation_dps(Some(seed));
        let first = run_dps(&dps, &f0, 1).unwrap();
        // 13 elements pair into 6 sums plus one carried element.
        assert_eq!(first.set("S1").len(), 7);
        let run = run_dps(&dps, &f0, 100).unwrap();
        assert_eq!(run.status, Status::Quiescent);
        assert_eq!(run.set("S1").len(), 1);
        assert_eq!(total(&run.family), vals.iter().sum::<i64>());
    }
}

#[test]
fn empty_input_quiescent_at_start() {
    let run = run_dps(&summation_dps(None), &tokens(&[]), 10).unwrap();
    assert_eq!(run.status, Status::Quiescent);
    assert_eq!(run.steps.len(), 0);
}

proptest! {
    #[test]
    fn summation_preserves_the_sum(vals in prop::collection::vec(-50i64..50, 0..24), seed in prop::option::of(0u64..1000)) {
        let dps = summation_dps(seed);
        let f0 = tokens(&vals);
        let expect: i64 = vals.iter().sum();
        let full = run_dps(&dps, &f0, 100).unwrap();
        for k in 0..=full.steps.len() as u64 {
            let part = run_dps(&dps, &f0, k).unwrap();
            prop_assert_eq!(total(&part.family), expect);
        }
        prop_assert!(full.set("S1").len() <= 1);
    }
}

/// Direct evaluation, with a step budget for minimization.
fn oracle(spec: &PrSpec, xs: &[i64], budget: &mut u32) -> Option<i64> {
    Some(match spec {
        PrSpec::Zero => 0,
        PrSpec::Succ => xs[0] + 1,
        PrSpec::Proj(m, _) => xs[m - 1],
        PrSpec::Builtin(b, _) => match b.as_str() {
            "add" => xs[0] + xs[1],
            "sub" => xs[0] - xs[1],
            "mul" => xs[0] * xs[1],
            "abs" => xs[0].abs(),
            "sq" => xs[0] * xs[0],
            other => panic!("no oracle for {other}"),
        },
        PrSpec::Compose(g, hs) => {
            let inner = hs.iter().map(|h| oracle(h, xs, budget)).collect::<Option<Vec<_>>>()?;
            oracle(g, &inner, budget)?
        }
        PrSpec::Primrec(g, h) => {
            let mut acc = oracle(g, &xs[1..], budget)?;
            for y in 0..xs[0] {
                let mut args = vec![y, acc];
                args.extend_from_slice(&xs[1..]);
                acc = oracle(h, &args, budget)?;
            }
            acc
        }
        PrSpec::Minimize(g) => {
            let mut y = 0;
            loop {
                if *budget == 0 {
                    return None;
                }
                *budget -= 1;
                let mut args = vec![y];
                args.extend_from_slice(xs);
                if oracle(g, &args, budget)? == 0 {
                    break y;
                }
                y += 1;
            }
        }
    })
}

fn run_pr(spec: &PrSpec, xs: &[i64], fuel: u64) -> DpsRun {
    run_dps(&build_pr(spec).unwrap(), &pr_start(xs), fuel).unwrap()
}

#[test]
fn addition_agrees_with_arithmetic() {
    let add = PrSpec::add();
    for x in 0..=10 {
        for y in 0..=10 {
            assert_eq!(oracle(&add, &[x, y], &mut 100), Some(x + y));
            let run = run_pr(&add, &[x, y], 10_000);
            assert_eq!(run.status, Status::Quiescent, "{x} + {y}");
            assert_eq!(run.set("z"), ints([x + y]), "{x} + {y}");
        }
    }
}

#[test]
fn primrec_matches_direct_recursion() {
    let mult = parse_pr("primrec(zero, compose(builtin(add, 2), proj(2, 3), proj(3, 3)))").unwrap();
    let pred = parse_pr("primrec(zero, proj(1, 3))").unwrap();
    let pred = PrSpec::Compose(Box::new(pred), vec![PrSpec::Proj(1, 1), PrSpec::Proj(1, 1)]);
    for (spec, arity) in [(mult, 2), (pred, 1)] {
        for x in 0..=6 {
            for y in 0..=6 {
                let xs = &[x, y][..arity];
                let expect = oracle(&spec, xs, &mut 100).unwrap();
                let run = run_pr(&spec, xs, 100_000);
                assert_eq!(run.status, Status::Quiescent);
                assert_eq!(run.set("z"), ints([expect]), "{spec} at {xs:?}");
            }
        }
    }
}

#[test]
fn counter_runs_from_zero_to_y() {
    let dps = build_pr(&PrSpec::add()).unwrap();
    let y = 4;
    let mut family = pr_start(&[y, 10]);
    let mut updated: BTreeSet<String> = ["x1".to_string(), "x2".to_string()].into();
    let mut counters = Vec::new();
    let mut fired = Vec::new();
    for step in 1.. {
        let ready = applicable(&dps, &family, &updated, step == 1).unwrap();
        if ready.is_empty() {
            break;
        }
        let before = family.clone();
        for &i in &ready {
            fired.push(dps.systems[i].name.clone());
            for (n, s) in apply_system(&dps.systems[i], &before, step, 1000).unwrap().unwrap() {
                family.insert(SetName::plain(&n), s);
            }
        }
        updated = family.keys().filter(|k| before.get(*k) != family.get(*k)).map(|k| k.base.clone()).collect();
        counters.push(set_of(&family, "i"));
    }
    let expect: Vec<BTreeSet<Value>> = (0..=y).map(|k| ints([k])).collect();
    assert_eq!(counters, expect);
    assert_eq!(fired[0], "F1");
    assert!(fired[1..].iter().all(|n| n == "F2"));
    assert_eq!(fired.len(), y as usize + 1);
    assert_eq!(set_of(&family, "z"), ints([14]));
}

#[test]
fn minimization_answers_or_runs_out() {
    let root = PrSpec::exact_root();
    assert_eq!(oracle(&root, &[9], &mut 100), Some(3));
    assert_eq!(oracle(&root, &[7], &mut 100), None);
    let run = run_pr(&root, &[9], 10_000);
    assert_eq!((run.status, run.set("z")), (Status::Quiescent, ints([3])));
    for fuel in [10, 100, 1000, 5000] {
        let run = run_pr(&root, &[7], fuel);
        assert_eq!(run.status, Status::FuelExhausted);
        // Whatever z holds is the counter so far, never a root of 7.
        assert!(run.set("z").iter().all(|v| v.as_i64().unwrap().pow(2) != 7));
    }
}

const PRODUCER_CONSUMER: &str = "places ready, done\nmarking ready = 1\ntransition work: ready -> done";

#[test]
fn petri_transition_needing_two_tokens() {
    let net = parse_petri("places a, b\nmarking a = 1\ntransition t: a*2 -> b").unwrap();
    let dps = petri_to_dps(&net, 0);
    let run = run_dps(&dps, &encode_marking(&net, &net.initial), 10).unwrap();
    assert_eq!(run.status, Status::Quiescent);
    assert!(run.steps.is_empty());
}

#[test]
fn petri_producer_consumer() {
    let net = parse_petri(PRODUCER_CONSUMER).unwrap();
    let run = run_dps(&petri_to_dps(&net, 0), &encode_marking(&net, &net.initial), 10).unwrap();
    assert_eq!(run.steps.len(), 1);
    assert_eq!(decode_marking(&net, &run.family), vec![0, 1]);
    assert_eq!(fire(&net, &net.initial, 0), Some(vec![0, 1]));
}

fn reachable(net: &PetriNet, cap: usize) -> Vec<Marking> {
    let mut seen: BTreeSet<Marking> = [net.initial.clone()].into();
    let mut queue: VecDeque<Marking> = [net.initial.clone()].into();
    while let Some(m) = queue.pop_front() {
        for t in 0..net.transitions.len() {
            if let Some(n) = fire(net, &m, t) {
                if seen.len() < cap && seen.insert(n.clone()) {
                    queue.push_back(n);
                }
            }
        }
    }
    seen.into_iter().collect()
}

fn check_bisimulation(net: &PetriNet, seed: u64) {
    let dps = petri_to_dps(net, seed);
    for m in reachable(net, 300) {
        let f = encode_marking(net, &m);
        let allowed: Vec<usize> = (0..net.transitions.len()).filter(|&t| fire(net, &m, t).is_some()).collect();
        assert_eq!(applicable(&dps, &f, &BTreeSet::new(), false).unwrap(), allowed, "{m:?}");
        for &t in &allowed {
            let w = apply_system(&dps.systems[t], &f, 1, 10).unwrap().unwrap();
            let mut next = f.clone();
            for (n, s) in w {
                if s.is_empty() {
                    next.remove(&SetName::plain(&n));
                } else {
                    next.insert(SetName::plain(&n), s);
                }
            }
            assert_eq!(Some(decode_marking(net, &next)), fire(net, &m, t));
        }
    }
    let steps = 25;
    let sim = net.simulate(&net.initial, seed, steps);
    let start = encode_marking(net, &net.initial);
    for k in 0..=steps {
        let run = run_dps(&dps, &start, k as u64).unwrap();
        assert_eq!(decode_marking(net, &run.family), sim[k.min(sim.len() - 1)], "step {k}");
        assert_eq!(run.status == Status::Quiescent, k >= sim.len() - 1 && net.allowed(sim.last().unwrap()).is_empty());
    }
}

#[test]
fn petri_bisimulation_on_random_nets() {
    for seed in 0..50 {
        check_bisimulation(&random_net(4, 2 + seed as usize % 3, seed), seed);
    }
    for seed in 100..120 {
        check_bisimulation(&random_net(5, 5, seed), seed);
    }
}

#[test]
fn strategy_independent_on_disjoint_systems() {
    let src = "start A = {1, 2}\nstart C = {3}\n\
               system F(A)\n  B = succ[A]\n\
               system G(C)\n  D = add[C, C]\n\
               system H(B)\n  E = sq[B]\n\
               system K(D)\n  W = sub[D, D]";
    let (mut dps, start) = parse_dps(src).unwrap();
    let base = run_dps(&dps, &start, 100).unwrap().family;
    let expect: BTreeMap<&str, BTreeSet<Value>> =
        [("A", ints([1, 2])), ("B", ints([2, 3])), ("C", ints([3])), ("D", ints([6])), ("E", ints([4, 9])), ("W", ints([0]))]
            .into();
    assert_eq!(base, expect.iter().map(|(n, s)| (SetName::plain(n), s.clone())).collect());
    for seed in 0..30 {
        dps.strategy = paraschema::dps::Strategy::Sequential(Some(seed));
        assert_eq!(run_dps(&dps, &start, 100).unwrap().family, base, "seed {seed}");
    }
    dps.strategy = paraschema::dps::Strategy::Sequential(None);
    assert_eq!(run_dps(&dps, &start, 100).unwrap().family, base);
}

#[test]
fn runs_are_reproducible() {
    let dps = summation_dps(Some(11));
    let f0 = tokens(&(0..40).collect::<Vec<_>>());
    assert_eq!(run_dps(&dps, &f0, 100).unwrap(), run_dps(&dps, &f0, 100).unwrap());
}
