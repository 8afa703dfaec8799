use std::path::Path;
use std::process::Command;

use lti_resilience::cli::{run, EXIT_INPUT, EXIT_NUMERICAL, EXIT_OK, EXIT_UNCONTROLLABLE};
use serde_json::Value;

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

fn invoke(args: &[&str]) -> Outcome {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("lti-resilience").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    Outcome {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn index_on_builtin_benchmark() {
    let o = invoke(&[
        "index",
        "--system",
        "pendula:all/all",
        "--attack-span",
        "15",
        "--defense-span",
        "15",
    ]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let rho: f64 = o
        .stdout
        .lines()
        .next()
        .unwrap()
        .strip_prefix("rho = ")
        .unwrap()
        .parse()
        .unwrap();
    assert!((rho - 7.32).abs() < 0.05);
}

#[test]
fn emitted_benchmark_round_trips_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let doc = dir.path().join("sys.json");
    let o = invoke(&[
        "pendula",
        "--attacker",
        "left",
        "--defender",
        "middle",
        "--output",
        path_str(&doc),
    ]);
    assert_eq!(o.code, EXIT_OK);
    let from_file = dir.path().join("a.json");
    let from_builtin = dir.path().join("b.json");
    assert_eq!(
        invoke(&["index", "--system", path_str(&doc), "--output", path_str(&from_file)]).code,
        EXIT_OK
    );
    assert_eq!(
        invoke(&[
            "index",
            "--system",
            "pendula:left/middle",
            "--output",
            path_str(&from_builtin)
        ])
        .code,
        EXIT_OK
    );
    let a = std::fs::read(&from_file).unwrap();
    assert_eq!(a, std::fs::read(&from_builtin).unwrap());
    let rho = read_json(&from_file)["rho"].as_f64().unwrap();
    assert!((rho - 0.04).abs() < 0.05);
}

#[test]
fn output_is_deterministic() {
    let first = invoke(&["table", "--precision", "10"]);
    let second = invoke(&["table", "--precision", "10"]);
    assert_eq!(first.code, EXIT_OK);
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(first.stdout.lines().count(), 5);
}

#[test]
fn ragged_document_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let doc = dir.path().join("bad.json");
    std::fs::write(&doc, r#"{"A": [[-1, 0], [0]], "Ba": [[1], [0]], "Bd": [[0], [1]]}"#).unwrap();
    let o = invoke(&["index", "--system", path_str(&doc)]);
    assert_eq!(o.code, EXIT_INPUT);
    assert!(o.stderr.starts_with("error:"));
    assert_eq!(invoke(&["index", "--system", "/no/such/file.json"]).code, EXIT_INPUT);
    assert_eq!(invoke(&["index", "--system", "pendula:left/nowhere"]).code, EXIT_INPUT);
    assert_eq!(
        invoke(&["index", "--system", "pendula", "--attack-span", "-1"]).code,
        EXIT_INPUT
    );
    assert_eq!(invoke(&["frobnicate"]).code, EXIT_INPUT);
}

#[test]
fn uncontrollable_defender_exit_code_names_the_subspace() {
    let dir = tempfile::tempdir().unwrap();
    let doc = dir.path().join("sym.json");
    let o = invoke(&[
        "pendula",
        "--attacker",
        "left",
        "--defender",
        "middle",
        "--damping",
        "0.1,0.1,0.1",
        "--output",
        path_str(&doc),
    ]);
    assert_eq!(o.code, EXIT_OK);
    let o = invoke(&["index", "--system", path_str(&doc)]);
    assert_eq!(o.code, EXIT_UNCONTROLLABLE);
    assert!(o.stderr.contains('2'), "{}", o.stderr);
}

#[test]
fn unstable_lyapunov_request_is_numerical_error() {
    let dir = tempfile::tempdir().unwrap();
    let doc = dir.path().join("unstable.json");
    std::fs::write(&doc, r#"{"A": [[0.5]], "Ba": [[1]], "Bd": [[1]]}"#).unwrap();
    let o = invoke(&["gramian", "--system", path_str(&doc), "--infinite"]);
    assert_eq!(o.code, EXIT_NUMERICAL);
    // the index itself is still computed, with a warning
    let o = invoke(&[
        "index",
        "--system",
        path_str(&doc),
        "--attack-span",
        "1",
        "--defense-span",
        "1",
    ]);
    assert_eq!(o.code, EXIT_OK);
    assert!(o.stdout.contains("warning"));
}

#[test]
fn single_option_table_is_one_by_one() {
    let dir = tempfile::tempdir().unwrap();
    let att = dir.path().join("att.json");
    let def = dir.path().join("def.json");
    std::fs::write(&att, r#"{"B": [[0,0,0],[0,0,0],[0,0,0],[1,0,0],[0,1,0],[0,0,1]]}"#).unwrap();
    std::fs::write(&def, "[[0,0,0],[0,0,0],[0,0,0],[1,0,0],[0,1,0],[0,0,1]]").unwrap();
    let o = invoke(&[
        "table",
        "--attacker",
        &format!("all={}", path_str(&att)),
        "--defender",
        &format!("all={}", path_str(&def)),
    ]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let lines: Vec<&str> = o.stdout.lines().collect();
    assert_eq!(lines, vec!["attacker\\defender,all", "all,7.28173"]);
}

#[test]
fn table_marks_failed_cells() {
    let dir = tempfile::tempdir().unwrap();
    let doc = dir.path().join("sym.json");
    invoke(&["pendula", "--damping", "0.1,0.1,0.1", "--output", path_str(&doc)]);
    let bd = dir.path().join("mid.json");
    std::fs::write(&bd, "[[0],[0],[0],[0],[1],[0]]").unwrap();
    let o = invoke(&[
        "table",
        "--system",
        path_str(&doc),
        "--defender",
        &format!("mid={}", path_str(&bd)),
    ]);
    assert_eq!(o.code, EXIT_OK);
    assert_eq!(o.stdout.lines().nth(1).unwrap(), "Ba,nan");
    assert!(o.stderr.contains("not controllable"));
}

#[test]
fn sweep_rows_follow_the_horizons() {
    let o = invoke(&["sweep", "--system", "pendula", "--log-range", "5,1.5,150"]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let lines: Vec<&str> = o.stdout.lines().collect();
    assert_eq!(lines[0], "dt,Left,Middle,Right,All");
    assert_eq!(lines.len(), 6);
    assert!(lines[1].starts_with("1.5,"));
    assert!(lines[5].starts_with("150,"));
    let one = invoke(&["sweep", "--system", "pendula", "--dt", "15"]);
    assert_eq!(one.stdout.lines().count(), 2);
    assert_eq!(invoke(&["sweep", "--system", "pendula"]).code, EXIT_INPUT);
}

#[test]
fn episode_writes_trajectory_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let traj = dir.path().join("traj.csv");
    let report = dir.path().join("report.json");
    let o = invoke(&[
        "episode",
        "--system",
        "pendula:all/all",
        "--span",
        "15",
        "--samples",
        "400",
        "--trajectory",
        path_str(&traj),
        "--output",
        path_str(&report),
    ]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let mut rdr = csv::Reader::from_path(&traj).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header.first().unwrap(), "t");
    assert_eq!(header.last().unwrap(), "phase");
    assert_eq!(header.len(), 1 + 6 + 3 + 3 + 1);
    assert_eq!(rdr.records().count(), 2 * 401);
    let doc = read_json(&report);
    let ratio = doc["measured_ratio"].as_f64().unwrap();
    assert!((ratio / doc["theoretical_rho"].as_f64().unwrap() - 1.0).abs() < 5e-3);
}

#[test]
fn zero_scale_episode_reports_no_ratio() {
    let o = invoke(&["episode", "--system", "pendula", "--scale", "0", "--samples", "100"]);
    assert_eq!(o.code, EXIT_OK);
    assert!(o.stdout.contains("attack_energy = 0\n"));
    assert!(o.stdout.contains("undefined"));
}

#[test]
fn lq_episode_ratio_is_well_below_index() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("lq.json");
    let o = invoke(&["lq-episode", "--samples", "600", "--output", path_str(&report)]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let doc = read_json(&report);
    let measured = doc["measured_ratio"].as_f64().unwrap();
    let rho = doc["theoretical_rho"].as_f64().unwrap();
    assert!(measured > 0.1 && measured < 10.0);
    assert!(rho > 10.0 && rho < 1000.0);
    let t = doc["controller"]["characteristic_time"].as_f64().unwrap();
    assert!((t / 4.73 - 1.0).abs() < 0.1);
}

#[test]
fn gramian_document_has_expected_shape() {
    let dir = tempfile::tempdir().unwrap();
    let doc = dir.path().join("scalar.json");
    std::fs::write(&doc, r#"{"A": [[-1]], "Ba": [[1]], "Bd": [[1]]}"#).unwrap();
    let o = invoke(&["gramian", "--system", path_str(&doc), "--horizon", "1"]);
    assert_eq!(o.code, EXIT_OK);
    let v: Value = serde_json::from_str(&o.stdout).unwrap();
    let w = v["W"][0][0].as_f64().unwrap();
    assert!((w - (1.0 - (-2.0f64).exp()) / 2.0).abs() < 1e-10);
    let o = invoke(&["gramian", "--system", path_str(&doc), "--infinite"]);
    let v: Value = serde_json::from_str(&o.stdout).unwrap();
    assert_eq!(v["horizon"], Value::from("inf"));
    assert!((v["W"][0][0].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn binary_reports_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_lti-resilience");
    let ok = Command::new(bin)
        .args(["index", "--system", "pendula"])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(EXIT_OK));
    assert!(String::from_utf8_lossy(&ok.stdout).starts_with("rho = 7.28"));
    let bad = Command::new(bin).args(["index"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(EXIT_INPUT));
    let help = Command::new(bin).arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(EXIT_OK));
}
