use std::path::Path;
use std::process::{Command, Output};

fn lagset(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lagset")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

const SWAP: &str = r#"{"n": ["0", "1", "0"], "d": ["1", "0", "-1"]}"#;
const THIRD: &str = r#"{"n": ["0", "1", "1/2", "1/4"], "d": ["1", "-1/2", "0", "1/8"]}"#;

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let plant = write(dir.path(), "p.json", THIRD);
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let o = lagset(&["simulate", "--plant", &plant, "--steps", "6", "--seed", "7", "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let trace: serde_json::Value = serde_json::from_slice(&ta).unwrap();
    assert_eq!(trace.as_array().map(Vec::len), Some(7));
}

#[test]
fn simulate_float_and_utp() {
    let dir = tempfile::tempdir().unwrap();
    let plant = write(dir.path(), "p.json", THIRD);
    let o = lagset(&["simulate", "--plant", &plant, "--steps", "4", "--mode", "utp", "--backend", "float"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    let plant = write(dir.path(), "p.json", THIRD);
    let o = lagset(&["verify", "--plant", &plant, "--steps", "5", "--seed", "2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).trim_end().ends_with("PASS"));
}

#[test]
fn examples_print_golden_cases() {
    let fig = lagset(&["example", "fig1"]);
    assert_eq!(code(&fig), 0);
    assert!(String::from_utf8_lossy(&fig.stdout).contains("M = {(1, 0)}"));
    let sq = String::from_utf8(lagset(&["example", "square"]).stdout).unwrap();
    assert!(sq.contains("(4 facets, 4 vertices)"));
    assert!(sq.contains("oracle agrees: true"));
    let di = String::from_utf8(lagset(&["example", "diamond"]).stdout).unwrap();
    assert!(di.contains("(6 facets, 6 vertices)"));
    assert!(di.contains("IR^T"));
}

#[test]
fn usage_errors_exit_3() {
    assert_eq!(code(&lagset(&["example", "pentagon"])), 3);
    assert_eq!(code(&lagset(&["simulate", "--steps", "3"])), 3);
    assert_eq!(code(&lagset(&["verify", "--plant", "/nonexistent/plant.json", "--steps", "2"])), 3);
    assert_eq!(code(&lagset(&["bench", "--order", "2", "--steps", "2", "--mode", "sideways"])), 3);
    assert_eq!(code(&lagset(&["--help"])), 0);
}

#[test]
fn bad_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let plant = write(dir.path(), "p.json", SWAP);
    // the true state starts at 0, so |z0| > 1 leaves nothing
    let zs = write(dir.path(), "z.json", r#"["0", "5", "0"]"#);
    let o = lagset(&["simulate", "--plant", &plant, "--steps", "2", "--measurements", &zs]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    let feedthrough = write(dir.path(), "f.json", r#"{"n": ["1", "1"], "d": ["1", "1/2"]}"#);
    assert_eq!(code(&lagset(&["simulate", "--plant", &feedthrough, "--steps", "2"])), 2);
    let common = write(dir.path(), "c.json", r#"{"n": ["0", "1", "-1"], "d": ["1", "-2", "1"]}"#);
    assert_eq!(code(&lagset(&["verify", "--plant", &common, "--steps", "2"])), 2);
}

#[test]
fn bench_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bench.csv");
    let o = lagset(&["bench", "--order", "2", "--steps", "3", "--repeats", "2", "--csv", csv.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("repeat,k,n_f,n_v,t_fv,t_fm,ratio,equal"));
    let rows: Vec<&str> = lines.collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.ends_with(",true")));
}
