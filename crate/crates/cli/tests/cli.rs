use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/composite.json")
}

fn flatplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flatplan"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn inspect_matrix_has_one_row_per_node() {
    let dir = tempfile::tempdir().unwrap();
    let out = flatplan(&[
        "inspect",
        "--config",
        arg(&config()),
        "--n",
        "10",
        "--what",
        "matrix",
        "--out",
        arg(dir.path()),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(dir.path().join("matrix.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "row,x,sub,main,sup,B");
    assert_eq!(lines.len(), 11);
    let first: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(first[2].parse::<f64>().unwrap(), 0.0);
    // 17 significant digits.
    assert_eq!(
        first[3]
            .split('e')
            .next()
            .unwrap()
            .trim_start_matches('-')
            .len(),
        18
    );
}

#[test]
fn zero_input_replay_is_free_decay() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("zeros.csv");
    fs::write(&input, "t,value\n0,0\n0.5,0\n").unwrap();
    let out = flatplan(&[
        "simulate",
        "--config",
        arg(&config()),
        "--input",
        arg(&input),
        "--n-sim",
        "200",
        "--dt",
        "1e-3",
        "--out",
        arg(dir.path()),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    let norm = |key: &str| -> f64 {
        let line = stdout.lines().find(|l| l.starts_with(key)).unwrap();
        line.split(':').nth(1).unwrap().trim().parse().unwrap()
    };
    assert!(norm("terminal norm") < norm("initial norm"));
    let traj = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("t,x,value\n"));
    assert_eq!(traj.lines().count(), 1 + 21 * 200);
}

#[test]
fn usage_errors_name_the_flag() {
    let out = flatplan(&[
        "plan",
        "composite",
        "--config",
        arg(&config()),
        "--frobnicate",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--frobnicate"));
    let out = flatplan(&[
        "plan",
        "composite",
        "--config",
        arg(&config()),
        "--dt",
        "abc",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--dt"));
    let out = flatplan(&["inspect", "--what", "matrix", "--n", "10"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--config"));
}

#[test]
fn component_errors_are_module_qualified() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(
        &bad,
        fs::read_to_string(config()).unwrap().replace(
            "\"alpha0\": 1.0, \"beta0\": 0.0",
            "\"alpha0\": 0.0, \"beta0\": 0.0",
        ),
    )
    .unwrap();
    let out = flatplan(&[
        "plan",
        "composite",
        "--config",
        arg(&bad),
        "--out",
        arg(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("problem:"));
}

fn small_plan(dir: &Path, tolerance: &str) -> Output {
    flatplan(&[
        "plan",
        "composite",
        "--config",
        arg(&config()),
        "--n",
        "60",
        "--n-sim",
        "250",
        "--dt",
        "5e-4",
        "--truncation",
        "20",
        "--tolerance",
        tolerance,
        "--out",
        arg(dir),
    ])
}

#[test]
fn composite_plan_writes_outputs_and_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let out = small_plan(a.path(), "0.05");
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    assert_eq!(small_plan(b.path(), "0.05").status.code(), Some(0));
    for name in [
        "r_1.csv",
        "r_5.csv",
        "r_13.csv",
        "r_18.csv",
        "r_20.csv",
        "u_snapshots.csv",
        "report.txt",
    ] {
        let x = fs::read(a.path().join(name)).unwrap();
        assert_eq!(
            x,
            fs::read(b.path().join(name)).unwrap(),
            "{name} differs between runs"
        );
    }
    let r = fs::read_to_string(a.path().join("r_20.csv")).unwrap();
    assert!(r.starts_with("t,value\n"));
    let report = fs::read_to_string(a.path().join("report.txt")).unwrap();
    assert!(report.contains("verified: yes"));
}

#[test]
fn failed_verification_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = small_plan(dir.path(), "1e-12");
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stdout).contains("verified: no"));
}

#[test]
fn coefficient_study_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = flatplan(&[
        "study",
        "coefficients",
        "--config",
        arg(&config()),
        "--n-list",
        "32,64",
        "--k-max",
        "5",
        "--out",
        arg(dir.path()),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let a = fs::read_to_string(dir.path().join("coefficients.csv")).unwrap();
    assert_eq!(a.lines().count(), 1 + 2 * 6);
    let c = fs::read_to_string(dir.path().join("cauchy.csv")).unwrap();
    assert_eq!(c.lines().count(), 1 + 6);
}
