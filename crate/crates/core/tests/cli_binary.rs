//! End-to-end runs of the `torsion` binary.

use std::path::PathBuf;
use std::process::{Command, Output};

fn torsion(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_torsion"))
        .args(args)
        .env_remove("TORSION_ENUM_CAP")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("torsion-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

#[test]
fn candidates_worked_example() {
    let o = torsion(&["candidates", "--index", "6", "--base-degree", "1", "--degree", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("candidates (3): 1 2 4"));
}

#[test]
fn json_is_well_formed() {
    let o = torsion(&["--format", "json", "b-epsilon", "--epsilon", "1/4"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["witness"], 6);
    assert_eq!(v["exact"], "2 * 6^(-3/4)");
}

#[test]
fn digits_flag() {
    let o = torsion(&["b-epsilon", "--epsilon", "1/2", "--digits", "5"]);
    assert!(stdout(&o).contains("decimal = 0.70710 "));
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        vec!["b-epsilon", "--epsilon", "0.5"],
        vec!["b-epsilon", "--epsilon", "0"],
        vec!["candidates", "--index", "0", "--base-degree", "1", "--degree", "1"],
        vec!["b1-index", "--n", "1"],
        vec!["frobnicate"],
        vec![],
    ] {
        let o = torsion(&args);
        assert_eq!(o.status.code(), Some(1), "args {:?}", args);
    }
}

#[test]
fn malformed_records_exit_one() {
    let path = scratch("bad.csv", "label,base_degree,adelic_index\nX,1,2\nY,2,-3\n");
    let o = torsion(&["bounds", "--records", path.to_str().unwrap(), "--degree", "4"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn bounds_report() {
    let path = scratch(
        "curves.csv",
        "label,base_degree,adelic_index,isogeny_class\nA,1,2,C1\nB,1,2,C1\nC,2,6,\n",
    );
    let p = path.to_str().unwrap();
    let o = torsion(&["bounds", "--records", p, "--degree", "4", "--epsilon", "1/2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("12.6992084158"), "{}", text);
    assert!(text.contains("(stated for odd d only)"));

    let o = torsion(&["--format", "json", "bounds", "--records", p, "--degree", "1", "--epsilon", "3/2"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["epsilon_at_least_one"], true);
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
    assert_eq!(v["baselines"]["parent"], "376164");
}

#[test]
fn isogeny_mismatch_exits_two() {
    let path = scratch(
        "mismatch.csv",
        "label,base_degree,adelic_index,isogeny_class\nA,1,12,C1\nB,1,24,C1\n",
    );
    let o = torsion(&["bounds", "--records", path.to_str().unwrap(), "--degree", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("A:12, B:24"));
}

#[test]
fn lattice_failure_exits_two() {
    let path = scratch(
        "incompatible.txt",
        "scenario l3-cartan-11-d1l\nprime 3\nprecision 1..2\n\
         generator 1,3;0,1\ngenerator 1,0;3,1\ngenerator 2,0;0,1\ngenerator 1,0;0,2\n\
         lattice 1,0;0,1\nlattice' 1,0;0,3\nend\n",
    );
    let o = torsion(&["lattice-check", "--scenario-file", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("k=1: 12 / 4"));
}

#[test]
fn bundled_lattice_check_passes() {
    let o = torsion(&["lattice-check"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("summary: 27 of 27 scenarios passed"));
}

#[test]
fn verify_small_and_deterministic() {
    let a = torsion(&["verify", "--max-n", "10"]);
    let b = torsion(&["verify", "--max-n", "10"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).contains(" 0 failed"));

    let one = torsion(&["verify", "--max-n", "1"]);
    assert_eq!(one.status.code(), Some(0));
    assert!(stdout(&one).contains("SKIP  b1-index"));
}

#[test]
fn enumeration_cap_env() {
    let o = Command::new(env!("CARGO_BIN_EXE_torsion"))
        .args(["b1-index", "--n", "30", "--verify"])
        .env("TORSION_ENUM_CAP", "10")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("exceeds the cap of 10"));

    let o = Command::new(env!("CARGO_BIN_EXE_torsion"))
        .args(["b1-index", "--n", "30", "--verify"])
        .env("TORSION_ENUM_CAP", "lots")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn baselines_subcommand() {
    let o = torsion(&["baselines", "--degree", "1"]);
    let text = stdout(&o);
    assert!(text.contains("376164"));
    assert!(text.contains("n/a (d = 1)"));
}
