use std::collections::BTreeMap;

use paraschema::fixtures;
use paraschema::ring::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Direct evaluation of the expenses loop: for every purchase, every
/// matching department and product.
fn expenses_oracle() -> Vec<Vec<i64>> {
    let bought = [(1, 1, 10), (2, 3, 4), (1, 2, 5), (3, 4, 2), (2, 1, 7), (3, 2, 12), (1, 4, 1), (2, 2, 3)];
    let prices: BTreeMap<i64, i64> = [(1, 3), (2, 9), (3, 6), (4, 25)].into();
    let mut limits = vec![vec![1, 100, 0], vec![2, 60, 0], vec![3, 150, 0]];
    for (dep, sup, quant) in bought {
        for l in limits.iter_mut().filter(|l| l[0] == dep) {
            l[1] -= quant * prices[&sup];
            if l[1] < 0 {
                l[2] = 1;
            }
        }
    }
    limits
}

#[test]
fn expenses_scan_is_certified_and_matches_oracle() {
    let pl = parse_priority_loop(fixtures::EXPENSES_LOOP).unwrap();
    assert_eq!(pl.shared_lists().into_iter().collect::<Vec<_>>(), ["Limits"]);
    assert_eq!(independence_level(&pl), Some(1));
    let seq = run_priority_loop(&pl, RunMode::Sequential).unwrap();
    assert_eq!(seq.data["Limits"], expenses_oracle());
    assert_eq!(seq.kernel_steps, 8 * 3 * 4);
    for seed in 0..50 {
        let par = run_priority_loop(&pl, RunMode::Parallel { level: 1, workers: 4, seed }).unwrap();
        assert_eq!(par.data, seq.data, "seed {seed}");
    }
}

#[test]
fn four_lists_parallel_over_b() {
    let pl = parse_priority_loop(fixtures::FOUR_LISTS_LOOP).unwrap();
    assert_eq!(independence_level(&pl), Some(3));
    let seq = run_priority_loop(&pl, RunMode::Sequential).unwrap();
    // Σa·Σb·Σc + (number of kernel calls)·d
    assert_eq!(seq.data["D"], vec![vec![1, 3 * 136 * 10 + 2 * 16 * 4]]);
    let par = run_priority_loop(&pl, RunMode::Parallel { level: 2, workers: 4, seed: 11 }).unwrap();
    assert_eq!(par, seq);
}

#[test]
fn noncommuting_updates_can_diverge_at_certified_level() {
    // The criterion only looks at which lists are shared; an order-sensitive
    // update of a shared list still gets certified.
    let src = "list 1 A: a\nlist 2 B: s\nset s = 2 * s + a\nrow A: 1\nrow A: 2\nrow A: 3\nrow A: 4\nrow B: 0";
    let pl = parse_priority_loop(src).unwrap();
    assert_eq!(independence_level(&pl), Some(1));
    let seq = run_priority_loop(&pl, RunMode::Sequential).unwrap();
    let diverging =
        (0..20).any(|seed| run_priority_loop(&pl, RunMode::Parallel { level: 1, workers: 4, seed }).unwrap().data != seq.data);
    assert!(diverging);
}

proptest! {
    #[test]
    fn accumulating_kernels_agree(
        a in prop::collection::vec(-5i64..6, 0..5),
        b in prop::collection::vec((-5i64..6, -5i64..6), 0..6),
        k in (-3i64..4, -3i64..4, -3i64..4),
        workers in 1usize..5,
        seed in any::<u64>(),
    ) {
        let mut src = format!("list 1 A: x\nlist 2 B: y, z\nlist 3 Acc: s, t\nset s = s + {} * x * y + {} * z\nset t = t + {}\n", k.0, k.1, k.2);
        src = src.replace("+ -", "- ");
        for x in &a { src.push_str(&format!("row A: {x}\n")); }
        for (y, z) in &b { src.push_str(&format!("row B: {y}, {z}\n")); }
        src.push_str("row Acc: 0, 0\n");
        let pl = parse_priority_loop(&src).unwrap();
        prop_assert_eq!(independence_level(&pl), Some(2));
        let seq = run_priority_loop(&pl, RunMode::Sequential).unwrap();
        for level in 1..=2 {
            let par = run_priority_loop(&pl, RunMode::Parallel { level, workers, seed }).unwrap();
            prop_assert_eq!(&par, &seq);
        }
    }
}

#[test]
fn worked_start_vector_equalizes() {
    let t = equalize(&fixtures::EQUALIZE_START, 1000).unwrap();
    assert!(t.converged);
    assert!(t.phases.len() <= 21);
    assert!(t.phases.iter().all(|p| p.after.iter().sum::<i64>() == 298));
    let mut last = t.last().to_vec();
    last.sort();
    assert_eq!(last, [29, 29, 30, 30, 30, 30, 30, 30, 30, 30]);
}

proptest! {
    #[test]
    fn equalize_conserves_and_converges(
        half in 1usize..9,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let start: Vec<i64> = (0..2 * half).map(|_| rng.gen_range(0..100)).collect();
        let t = equalize(&start, 10_000).unwrap();
        let total: i64 = start.iter().sum();
        prop_assert!(t.phases.iter().all(|p| p.after.iter().sum::<i64>() == total));
        prop_assert!(t.converged);
        prop_assert!(spread(t.last()) <= 1);
    }

    #[test]
    fn ring_sort_bound(half in 1usize..9, len in 1usize..6, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let frags: Vec<Vec<i64>> = (0..2 * half).map(|_| (0..len).map(|_| rng.gen_range(-50..50)).collect()).collect();
        let t = ring_sort(&frags).unwrap();
        let mut all = frags.concat();
        all.sort();
        prop_assert!(t.sorted);
        prop_assert_eq!(t.result(), all);
        prop_assert!(t.phases.len() <= 2 * half);
        prop_assert!(t.phases.last().unwrap().iter().all(|f| f.len() == len));
    }
}

#[test]
fn shared_diagram_matches_printed_table() {
    let printed =
        ["1,1 1,2 1,3 1,4 2,1 2,2", "1,5 1,6 1,7 1,8 2,5 2,6", "1,9 1,10 1,11 1,12 2,9 2,10", "1,13 1,14 1,15 1,16 2,13 2,14"];
    let d = diagram_shared(4, 2, 16);
    for (w, row) in printed.iter().enumerate() {
        for (t, cell) in row.split(' ').enumerate() {
            assert_eq!(d.cell(w + 1, t + 1).to_string(), format!("{cell},C,D"));
        }
    }
}

#[test]
fn diagram_text_golden() {
    let golden = "\
time        1      2      3      4      5      6      7      8      9     10
M1     1,1,C1 1,1,C2 1,2,C1 1,2,C2 2,1,C1 2,1,C2 2,2,C1 2,2,C2   (C1)   (C2)
M2       (C2) 1,3,C1 1,3,C2 1,4,C1 1,4,C2 2,3,C1 2,3,C2 2,4,C1 2,4,C2   (C1)
";
    let d = diagram_rotating(2, 2, 4);
    assert_eq!(d.render(), golden);
}

#[test]
fn rotating_total_steps_per_a_element() {
    for w in 1..=8 {
        let d = diagram_rotating(w, 1, w);
        let busy_until =
            (1..=d.steps()).filter(|&t| (1..=w).any(|m| matches!(d.cell(m, t), DiagramCell::Busy { .. }))).max().unwrap();
        assert_eq!(busy_until, w + (w - 1));
    }
}

proptest! {
    #[test]
    fn rotating_diagram_consistent(w in 1usize..7, a_len in 1usize..4, b_len in 1usize..13) {
        let d = diagram_rotating(w, a_len, b_len);
        let mut seen: Vec<(usize, usize, usize)> = Vec::new();
        for t in 1..=d.steps() {
            let h = d.holders(t);
            prop_assert_eq!(h.len(), w);
            prop_assert!(h.values().all(|m| m.len() == 1));
            for m in 1..=w {
                if let DiagramCell::Busy { a, b, frag } = d.cell(m, t) {
                    seen.push((*a, *b, *frag));
                }
            }
        }
        // Every fragment is home at the end.
        for m in 1..=w {
            let last = d.cell(m, d.steps());
            let frag = match last { DiagramCell::Busy { frag, .. } | DiagramCell::Idle { frag } => *frag, _ => 0 };
            prop_assert_eq!(held_fragment(w, m, d.steps() + 1), m);
            prop_assert!(frag >= 1);
        }
        seen.sort();
        let mut expect: Vec<(usize, usize, usize)> = Vec::new();
        for a in 1..=a_len {
            for b in 1..=b_len {
                for f in 1..=w {
                    expect.push((a, b, f));
                }
            }
        }
        expect.sort();
        prop_assert_eq!(seen, expect);
    }
}

fn parse_state(s: &str) -> AState {
    match s {
        "p" => AState::P,
        "q" => AState::Q,
        "r" => AState::R,
        "f" => AState::F,
        _ => panic!("state {s}"),
    }
}

#[test]
fn automaton_table_matches_fixture() {
    use paraschema::ring::handshake::{Act, Input, MemSym};
    let rows: Vec<Command> = fixtures::AUTOMATON_TABLE
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with("//"))
        .map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            Command {
                from: parse_state(f[0]),
                input: match f[1] {
                    "K" => Input::K,
                    "F" => Input::Flag,
                    "done" => Input::Done,
                    _ => Input::Tau,
                },
                mem: match f[2] {
                    "any" => MemSym::Any,
                    "clear" => MemSym::Clear,
                    "outstanding" => MemSym::Outstanding,
                    "own" => MemSym::OwnId,
                    "foreign" => MemSym::ForeignId,
                    _ => MemSym::Unflagged,
                },
                act: match f[3] {
                    "accept" => Act::Accept,
                    "emit-flag" => Act::EmitFlag,
                    "start" => Act::StartCompute,
                    "send-K" => Act::SendK,
                    "note-ack" => Act::NoteAck,
                    "ignore" => Act::Ignore,
                    _ => Act::Wait,
                },
                to: parse_state(f[4]),
            }
        })
        .collect();
    assert_eq!(rows, COMMANDS.to_vec());
}

proptest! {
    #[test]
    fn handshake_never_deadlocks(costs in prop::collection::vec(1u64..12, 1..7), flags in any::<bool>()) {
        let mut costs = costs;
        if costs.len() % 2 == 1 {
            costs.push(1);
        }
        let r = run_handshake(&HandshakeConfig { costs: costs.clone(), steps: 12, flags, injected_flags: vec![] }).unwrap();
        prop_assert!(!r.deadlock);
        prop_assert!(r.modules.iter().all(|m| m.done_at.len() >= 12));
        if flags {
            prop_assert!(r.max_backlog() <= 1);
        }
    }
}

#[test]
fn uniform_handshake_has_no_accumulated_skew() {
    for m in [2, 4, 8, 16] {
        let r = run_handshake(&HandshakeConfig { costs: vec![1; m], steps: 40, flags: true, injected_flags: vec![] }).unwrap();
        assert!((0..40).all(|s| r.skew(s) == r.skew(0)));
        let waits: Vec<u64> = r.modules.iter().map(|s| s.waiting).collect();
        assert!(waits.iter().max().unwrap() - waits.iter().min().unwrap() <= 1, "{waits:?}");
    }
}

#[test]
fn silent_module_flagged_within_two_phases_everywhere() {
    for m in [2, 4, 6, 8] {
        for k in 1..=m {
            for start in 0..5 {
                let d = detect_fault(m, start + 10, FaultBehavior::Silent { module: k, from_phase: start }).unwrap();
                let first = d.first().expect("detected");
                assert!(first.suspect == k && first.phase < start + 2);
            }
        }
    }
}

#[test]
fn wrong_state_flagged_immediately() {
    for k in 1..=6 {
        let d = detect_fault(6, 20, FaultBehavior::WrongState { module: k, from_phase: 3 }).unwrap();
        assert!(d.iter().any(|x| x.phase == 3 && x.suspect == k && x.reason == "state mismatch"));
    }
}
