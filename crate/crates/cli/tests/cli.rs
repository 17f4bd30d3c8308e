use std::fs;
use std::process::Command;

fn rbffd() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rbffd"))
}

#[test]
fn pollution_single_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"command": "pollution", "k_over_2pi": [10], "grid": "square", "condition": false}"#).unwrap();
    let out = dir.path().join("out");
    let st = rbffd().arg("--config").arg(&cfg).arg("--out").arg(&out).arg("--quiet").status().unwrap();
    assert!(st.success());
    let csv = fs::read_to_string(out.join("pollution.csv")).unwrap();
    let mut rd = csv.lines();
    let header: Vec<&str> = rd.next().unwrap().split(',').collect();
    let rows: Vec<&str> = rd.collect();
    assert_eq!(rows.len(), 1);
    let col = header.iter().position(|h| *h == "error").unwrap();
    let err: f64 = rows[0].split(',').nth(col).unwrap().parse().unwrap();
    assert!(err <= 5e-4, "error {err}");
    let side: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("pollution.json")).unwrap()).unwrap();
    assert_eq!(side["experiment"], "pollution");
}

#[test]
fn set_overrides_and_positional_command() {
    let dir = tempfile::tempdir().unwrap();
    let st = rbffd()
        .args(["truncation", "--quiet", "--seed", "3", "--set", "sizes=[9]", "--set", "solver.kind=mdi"])
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(st.success());
    let side: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("truncation.json")).unwrap()).unwrap();
    assert_eq!(side["seed"], 3);
    assert_eq!(side["config"]["solver"]["kind"], "mdi");
}

#[test]
fn unknown_command_prints_usage() {
    let out = rbffd().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn config_errors_exit_2() {
    let out = rbffd().args(["solve", "--set", "omega=-1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("omega"));

    let out = rbffd().args(["green", "--set", "nonsense=1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nonsense"));
}

#[test]
fn unwritable_output_names_path() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let target = blocker.join("sub");
    let out = rbffd().args(["truncation", "--quiet", "--out"]).arg(&target).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains(&*target.to_string_lossy()));
}

#[test]
fn numerical_failure_exit_3() {
    // Without a shift every interior row of the Bessel scheme vanishes.
    let dir = tempfile::tempdir().unwrap();
    let out = rbffd()
        .args(["solve", "--quiet", "--set", "policy.mode=unregularized", "--set", r#"grid={"kind":"square","inv_h":20}"#, "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn dry_run_round_trips() {
    let out = rbffd().args(["heterogeneous", "--dry-run", "--set", "omega_over_2pi=5"]).output().unwrap();
    assert!(out.status.success());
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("resolved.json");
    fs::write(&cfg, &out.stdout).unwrap();
    let again = rbffd().arg("--dry-run").arg("--config").arg(&cfg).output().unwrap();
    assert!(again.status.success());
    assert_eq!(out.stdout, again.stdout);
}
