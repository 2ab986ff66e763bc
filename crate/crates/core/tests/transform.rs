use paraschema::fixtures::LOOP_NESTS;
use paraschema::schema::{execute, parse_schema, random_standard_interpretation, runs_equal, Outcome, Verdict};
use paraschema::transform::{controller_depth_witness, separate_loop};

#[test]
fn separated_loops_run_like_the_originals() {
    for (name, src) in LOOP_NESTS {
        let s = parse_schema(src).unwrap();
        let sep = separate_loop(&s, "m0").unwrap();
        let t = sep.to_schema();
        let mut halted = 0;
        for seed in 0..100 {
            let interp = random_standard_interpretation(&s, seed, true);
            assert_eq!(runs_equal(&s, &t, &interp, 100_000).unwrap(), Verdict::Equal, "{name} seed {seed}");
            if execute(&s, &interp, 100_000).unwrap().outcome == Outcome::Halted {
                halted += 1;
            }
        }
        // Equal failures would make the check vacuous.
        assert!(halted > 90, "{name}: {halted}");
    }
}

#[test]
fn witness_depth_is_one_less_than_controllers() {
    for (name, src) in LOOP_NESTS {
        let sep = separate_loop(&parse_schema(src).unwrap(), "m0").unwrap();
        let k = sep.controller_count();
        assert_eq!(controller_depth_witness(&sep, 5, 3, 100_000).unwrap(), k.saturating_sub(1), "{name}");
        let again = separate_loop(sep.schema(), "m0").unwrap();
        assert_eq!(again.controller_count(), k, "{name}");
    }
}
