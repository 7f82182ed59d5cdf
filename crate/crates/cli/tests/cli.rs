use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const SCENARIOS: &str = "\
e1(z1); e1(z1); e1(z1)
e1(z1); e1(z1); e2(z1)
e1(z1); e2(z1)
e2(z1); e2(z2); e1(z1)
";

fn fsmmint(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fsmmint"))
        .args(args)
        .env_remove("FSMMINT_QBF_SOLVER")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn setup(ltl: &str) -> TempDir {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("s.txt"), SCENARIOS).unwrap();
    fs::write(dir.path().join("p.ltl"), ltl).unwrap();
    dir
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

#[test]
fn identify_min_states_writes_outputs() {
    let dir = setup("G(wasAction(z2) -> X(wasAction(z1)))\n");
    let out_dir = path(&dir, "out");
    let out = fsmmint(&[
        "identify",
        "--scenarios",
        &path(&dir, "s.txt"),
        "--ltl",
        &path(&dir, "p.ltl"),
        "--min-states",
        "--method",
        "iterative",
        "--out",
        &out_dir,
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("result: found"));
    assert!(text.lines().any(|l| l.starts_with("states: ")));
    let dot = fs::read_to_string(Path::new(&out_dir).join("fsm.dot")).unwrap();
    assert!(dot.starts_with("digraph"));
    let json = path(&dir, "out/fsm.json");
    assert!(Path::new(&json).exists());

    let verify = fsmmint(&[
        "verify",
        "--fsm",
        &json,
        "--scenarios",
        &path(&dir, "s.txt"),
        "--ltl",
        &path(&dir, "p.ltl"),
    ]);
    assert_eq!(verify.status.code(), Some(0), "{}", stdout(&verify));
    assert!(stdout(&verify).ends_with("ok\n"));
}

#[test]
fn unsatisfiable_exits_one() {
    let dir = setup("false\n");
    let out = fsmmint(&[
        "identify",
        "--scenarios",
        &path(&dir, "s.txt"),
        "--ltl",
        &path(&dir, "p.ltl"),
        "--states",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("result: unsatisfiable"));
}

#[test]
fn usage_errors_exit_two() {
    let dir = setup("");
    let out = fsmmint(&["identify", "--scenarios", &path(&dir, "s.txt")]);
    assert_eq!(out.status.code(), Some(2));
    let out = fsmmint(&["identify", "--scenarios", &path(&dir, "missing.txt"), "--states", "2"]);
    assert_eq!(out.status.code(), Some(2));
    let out = fsmmint(&[
        "identify",
        "--scenarios",
        &path(&dir, "s.txt"),
        "--states",
        "2",
        "--method",
        "qsat",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("QBF"));
}

#[test]
fn resource_limits_exit_three() {
    let dir = setup("G(wasAction(z1) -> X(X(X(X(X(wasAction(z2)))))))\n");
    let out = fsmmint(&[
        "identify",
        "--scenarios",
        &path(&dir, "s.txt"),
        "--ltl",
        &path(&dir, "p.ltl"),
        "--states",
        "4",
        "--method",
        "exponential",
        "--expansion-budget",
        "100",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", stdout(&out));
    assert!(stdout(&out).contains("budget-exceeded"));
}

#[test]
fn dumps_are_written() {
    let dir = setup("G(wasAction(z2) -> X(wasAction(z1)))\n");
    let cnf = path(&dir, "base.cnf");
    let qbf = path(&dir, "spec.qdimacs");
    let out = fsmmint(&[
        "identify",
        "--scenarios",
        &path(&dir, "s.txt"),
        "--ltl",
        &path(&dir, "p.ltl"),
        "--states",
        "2",
        "--dump-cnf",
        &cnf,
        "--dump-qbf",
        &qbf,
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(fs::read_to_string(cnf).unwrap().starts_with("p cnf "));
    let q = fs::read_to_string(qbf).unwrap();
    let prefix: Vec<char> = q
        .lines()
        .filter_map(|l| l.chars().next())
        .filter(|c| *c == 'e' || *c == 'a')
        .collect();
    assert_eq!(prefix, vec!['e', 'a', 'e']);
}

#[test]
fn generate_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let a = path(&dir, "a");
    let b = path(&dir, "b");
    for out in [&a, &b] {
        let res = fsmmint(&["generate", "--preset", "paper", "--states", "3", "--seed", "7", "--out", out]);
        assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    }
    for file in ["scenarios.txt", "properties.ltl", "reference.json", "spec.json"] {
        let x = fs::read(Path::new(&a).join(file)).unwrap();
        let y = fs::read(Path::new(&b).join(file)).unwrap();
        assert_eq!(x, y, "{file}");
    }
    // The generated instance is solvable at its reference size.
    let out = fsmmint(&[
        "identify",
        "--scenarios",
        &format!("{a}/scenarios.txt"),
        "--ltl",
        &format!("{a}/properties.ltl"),
        "--states",
        "3",
        "--json",
    ]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn bench_prints_csv() {
    let out = fsmmint(&[
        "bench",
        "--preset",
        "small",
        "--sizes",
        "2..3",
        "--runs",
        "2",
        "--methods",
        "iterative,backtracking",
        "--easy",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "size,method,solved,medianSeconds,meanIterations,meanFinalK");
    assert_eq!(lines.len(), 5);
    for line in &lines[1..] {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 6);
        assert_eq!(cols[2], "2");
    }
}

#[test]
fn verify_reports_violations() {
    let dir = setup("G(wasAction(z2) -> X(wasAction(z2)))\n");
    let fsm = r#"{"stateCount":1,"initial":1,"transitions":[
        {"src":1,"event":"e1","dst":1,"outputs":["z1"]},
        {"src":1,"event":"e2","dst":1,"outputs":["z2"]}]}"#;
    fs::write(dir.path().join("fsm.json"), fsm).unwrap();
    let out = fsmmint(&[
        "verify",
        "--fsm",
        &path(&dir, "fsm.json"),
        "--scenarios",
        &path(&dir, "s.txt"),
        "--ltl",
        &path(&dir, "p.ltl"),
    ]);
    let text = stdout(&out);
    assert_eq!(out.status.code(), Some(1), "{text}");
    assert!(text.contains("violated"));
    assert!(text.contains("rejected"));
}
