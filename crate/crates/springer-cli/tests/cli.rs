//! End-to-end tests of the `springer` binary: output shapes, exact fixture
//! round-trips, determinism, and the exit-code contract (0 success,
//! 1 failed check, 2 usage error).

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn springer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_springer"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

/// A temp file that removes itself, so fixture tests clean up.
struct TempFixture(PathBuf);

impl TempFixture {
    fn write(name: &str, contents: &str) -> TempFixture {
        let path = std::env::temp_dir().join(format!(
            "springer-cli-{}-{name}.json",
            std::process::id()
        ));
        std::fs::write(&path, contents).expect("temp file writes");
        TempFixture(path)
    }

    fn path(&self) -> &str {
        self.0.to_str().expect("utf-8 temp path")
    }
}

impl Drop for TempFixture {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.0);
    }
}

#[test]
fn enumerate_lists_the_six_marked_diagrams_of_the_equal_block_shape() {
    let out = springer(&["enumerate", "--type", "D", "--n", "6", "--k", "3"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["count"], json!(6));
    let diagrams: Vec<&str> = v["diagrams"]
        .as_array()
        .unwrap()
        .iter()
        .map(|d| d.as_str().unwrap())
        .collect();
    assert_eq!(diagrams.len(), 6);
    assert!(diagrams.contains(&"D m=3 cups=1: 1-2, 3"));
    assert!(diagrams.contains(&"D m=3 cups=1: 1*, 2-3*"));
}

#[test]
fn maffei_maps_the_equal_block_fixture_to_its_exact_flag() {
    let fixture = TempFixture::write(
        "equal-block",
        r#"{"field":"Q","n":4,"k":2,
            "a":[[["1"],["0"]],[["0","1"]]],
            "b":[[["0","1"]],[["1"],["0"]]],
            "gamma":{"2":[["1","0"],["0","1"]]}}"#,
    );
    let out = springer(&["maffei", "--fixture", fixture.path()]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["field"], json!("Q"));
    assert_eq!(v["shape"], json!([2, 2]));
    // <f_1>  in  <f_1, e_1 - f_2>  in  <f_1, e_1, f_2>, written in the
    // reduced basis over e_1, e_2, f_1, f_2.
    assert_eq!(
        v["spaces"],
        json!([
            [["0", "0", "1", "0"]],
            [["1", "0", "0", "-1"], ["0", "0", "1", "0"]],
            [["1", "0", "0", "0"], ["0", "0", "1", "0"], ["0", "0", "0", "1"]],
        ])
    );
}

#[test]
fn decompose_is_deterministic_and_reports_the_split() {
    let args = ["decompose", "--type", "D", "--n", "4", "--k", "2", "--q", "3"];
    let first = springer(&args);
    let second = springer(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout, "two runs differ");
    let v = stdout_json(&first);
    assert_eq!(v["total_flags"], json!(8));
    assert_eq!(v["covered"], json!(8));
    assert_eq!(v["per_component"]["D m=2 cups=1: 1-2"], json!(4));
    assert_eq!(v["per_component"]["D m=2 cups=1: 1-2*"], json!(4));
    assert_eq!(v["uncovered"], json!([]));
}

#[test]
fn failed_checks_exit_with_one_but_still_report() {
    // A marked diagram that does not unfold to the chosen symmetric one.
    let out = springer(&[
        "unfold",
        "--marked",
        "D m=3 cups=1: 1, 2-3",
        "--symmetric",
        "A n=6 k=3: 1-2, 3-4, 5-6",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let v = stdout_json(&out);
    assert_eq!(v["unfolds"], json!(false));

    // The positive case exits zero.
    let out = springer(&[
        "unfold",
        "--marked",
        "D m=3 cups=1: 1, 2-3",
        "--symmetric",
        "A n=6 k=3: 1-6, 2-3, 4-5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["unfolds"], json!(true));
}

#[test]
fn usage_errors_exit_with_two() {
    // A malformed diagram literal.
    let out = springer(&["fold", "--diagram", "garbage"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));

    // A missing required argument.
    let out = springer(&["enumerate", "--type", "D", "--n", "6"]);
    assert_eq!(out.status.code(), Some(2));
}
