//! Command-line behaviour: output formats, worked examples and exit codes.

use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_darboux-heat")).args(args).output().expect("spawn darboux-heat")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

/// Data rows of a CSV table.
fn rows(out: &Output) -> Vec<Vec<f64>> {
    stdout(out)
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect()
}

#[test]
fn potential_of_custom_chain() {
    let out = run(&["potential", "--chain", "cosh:1,sinh:2", "--x", "-0:0:1"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(rows(&out), vec![vec![0.0, 6.0]]);
    let text = stdout(&out);
    // negative zero is normalised and every number carries 17 significant digits
    assert!(text.lines().any(|l| l == "0.0000000000000000e0,6.0000000000000000e0"), "{text}");
    assert!(text.starts_with("# darboux-heat potential\n"));
    assert!(text.contains("# chain = \"cosh:1,sinh:2\""));
}

#[test]
fn trace_row_at_unit_time() {
    let out = run(&["trace", "--m", "1", "--t", "1:1:1"]);
    assert_eq!(out.status.code(), Some(0));
    let r = rows(&out);
    assert_eq!(r.len(), 1);
    assert!((r[0][1] - 0.149_792_928_487_309_88).abs() < 1e-12);
}

#[test]
fn numeric_trace_source_matches() {
    let closed = rows(&run(&["trace", "--t", "0.5:2:0.5"]));
    let numeric = rows(&run(&["trace", "--t", "0.5:2:0.5", "--source", "numeric-diagonal"]));
    assert_eq!(closed.len(), 4);
    for (a, b) in closed.iter().zip(&numeric) {
        assert_eq!(a[0], b[0]);
        assert!(((a[1] - b[1]) / a[1]).abs() < 1e-9);
    }
}

#[test]
fn correction_record() {
    let out = run(&["correction", "--m", "1", "--shift", "4", "--variant", "exp-corrected"]);
    assert_eq!(out.status.code(), Some(0));
    let r = rows(&out);
    let (zeta0, zeta_prime0, s_q) = (r[0][0], r[0][1], r[0][2]);
    assert_eq!(zeta0, 0.0);
    assert!((s_q + 2.501_745_117_890_824_8).abs() < 1e-8);
    assert_eq!(s_q, -zeta_prime0);
}

#[test]
fn kernel_constructions_agree() {
    let args = ["kernel", "--tau", "0.5:0.5:1", "--x", "-1:1:1", "--y", "0:0:1"];
    let closed = rows(&run(&args));
    let mut dressed_args = args.to_vec();
    dressed_args.extend(["--construction", "dressed"]);
    let dressed = rows(&run(&dressed_args));
    assert_eq!(closed.len(), 3);
    for (a, b) in closed.iter().zip(&dressed) {
        assert_eq!(a[..3], b[..3]);
        assert!(((a[3] - b[3]) / a[3]).abs() < 1e-10);
    }
    assert!((closed[1][3] - 1.613_768_481_293_277).abs() < 1e-12);
}

#[test]
fn json_output() {
    let out = run(&["zeta", "--s", "0.5:0.5:1", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["command"], "zeta");
    assert_eq!(doc["columns"][1], "zeta");
    let value = doc["rows"][0][1].as_f64().unwrap();
    assert!((value - 0.476_522_135_393_806_17).abs() < 1e-9);
}

#[test]
fn output_is_deterministic() {
    let args = ["kernel", "--chain", "cosh:0.5,sinh:1.5", "--tau", "0.2:1:0.4", "--x", "-2:2:0.5", "--y", "0.3:0.3:1"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(rows(&a).len(), 3 * 9);
}

#[test]
fn flag_errors_exit_two() {
    for args in [
        vec!["trace", "--t", "1:0:1"],
        vec!["trace", "--t", "0:1:0"],
        vec!["trace", "--t", "1:2"],
        vec!["potential", "--x", "0:1:1", "--m", "-1"],
        vec!["potential", "--x", "0:1:1", "--chain", "sinh:1"],
        vec!["potential", "--x", "0:1:1", "--chain", "cosh:2,sinh:1"],
        vec!["correction", "--variant", "bogus"],
        vec![
            "kernel",
            "--chain",
            "cosh:1",
            "--tau",
            "1:1:1",
            "--x",
            "0:0:1",
            "--y",
            "0:0:1",
            "--construction",
            "closed-form",
        ],
        vec!["trace", "--t", "0:0:1"],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn divergent_zeta_is_an_input_error() {
    // the shift must exceed b₂² = 2 for the exp-corrected trace to decay
    let out = run(&["correction", "--shift", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_subset_passes() {
    let out = run(&["validate", "--criterion", "1,7"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("2 of 2 criteria passed"));
}
