use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_paraschema")).args(args).output().unwrap()
}

fn fixture(rel: &str) -> String {
    format!("{}/../core/fixtures/{rel}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn selftests_exit_zero() {
    let o = run(&["--selftest", "ring", "equalize"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("# paraschema ring equalize seed=0 fuel=100000\n"));
    assert!(text.ends_with("status: ok\n"));
}

#[test]
fn rejected_schema_exits_one() {
    let o = run(&["schema", "validate", &fixture("loops/recursive.txt")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8(o.stdout).unwrap().contains("status: failed"));
}

#[test]
fn domain_error_exits_one() {
    let o = run(&["ring", "equalize", "--start", "1,2,3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8(o.stderr).unwrap().contains("even"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["ring", "fault", "--silent", "three"]).status.code(), Some(2));
    assert_eq!(run(&["ring", "bogus"]).status.code(), Some(2));
    assert_eq!(run(&["schema", "validate"]).status.code(), Some(2));
}

#[test]
fn ndjson_header_and_status() {
    let o = run(&["--format", "ndjson", "--seed", "4", "dps", "pr", "add", "--args", "2,3"]);
    assert_eq!(o.status.code(), Some(0));
    let lines: Vec<serde_json::Value> =
        String::from_utf8(o.stdout).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines[0]["format"], "paraschema-report");
    assert_eq!(lines[0]["seed"], 4);
    assert_eq!(lines[1]["z"], serde_json::json!(["5"]));
    assert_eq!(lines.last().unwrap()["ok"], true);
}

#[test]
fn seed_changes_random_inputs() {
    let a = run(&["--seed", "1", "ring", "equalize", "--random", "8"]).stdout;
    let b = run(&["--seed", "2", "ring", "equalize", "--random", "8"]).stdout;
    assert_ne!(a, b);
}
