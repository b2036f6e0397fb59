//! End-to-end tests of the `quiverzeta` binary: output formats, exit codes,
//! and error reporting.

use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .display()
        .to_string()
}

fn quiverzeta(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quiverzeta"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

#[test]
fn coeffs_tsv_matches_closed_form() {
    let out = quiverzeta(&[
        "coeffs",
        "--in",
        &fixture("heisenberg.json"),
        "-p",
        "2",
        "-K",
        "3",
        "-m",
        "1",
        "--format",
        "tsv",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(stdout(&out), "# v0\tcoefficient\n0\t1\n1\t3\n2\t7\n3\t19\n");
}

#[test]
fn coeffs_direct_oracle_flag() {
    let base = [
        "coeffs",
        "--in",
        &fixture("two_vertex.json"),
        "-p",
        "2",
        "-K",
        "2",
        "--format",
        "tsv",
    ];
    let pairsum = quiverzeta(&base);
    let mut with_oracle = base.to_vec();
    with_oracle.extend(["--oracle", "direct"]);
    let direct = quiverzeta(&with_oracle);
    assert_eq!(pairsum.status.code(), Some(0));
    assert_eq!(direct.status.code(), Some(0));
    assert_eq!(stdout(&pairsum), stdout(&direct));
}

#[test]
fn per_vertex_caps_accepted() {
    let out = quiverzeta(&[
        "coeffs",
        "--in",
        &fixture("two_vertex.json"),
        "-p",
        "2",
        "-K",
        r#"{"a":2,"b":1}"#,
        "--format",
        "tsv",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("# a b\tcoefficient\n"), "{text}");
    // graded-lex over the (2,1) cap box: 6 rows
    assert_eq!(text.lines().count() - 1, 6);
}

#[test]
fn closed_forms() {
    let out = quiverzeta(&[
        "closed-form",
        "abelian",
        "-n",
        "2",
        "-p",
        "2",
        "-K",
        "2",
        "--format",
        "tsv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "# s\tcoefficient\n0\t1\n1\t3\n2\t7\n");

    let out = quiverzeta(&[
        "closed-form",
        "heisenberg",
        "-m",
        "2",
        "-p",
        "2",
        "-K",
        "5",
        "--format",
        "tsv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        stdout(&out),
        "# s\tcoefficient\n0\t1\n1\t15\n2\t155\n3\t1395\n4\t11811\n5\t97171\n"
    );
}

#[test]
fn verify_amalgam_passes_and_negative_control_fails() {
    let out = quiverzeta(&[
        "verify",
        "amalgam",
        "--in",
        &fixture("heisenberg.json"),
        "-p",
        "3",
        "-K",
        "4",
        "-m",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("PASS"));

    let out = quiverzeta(&[
        "verify",
        "amalgam",
        "--in",
        &fixture("non_lie.json"),
        "-p",
        "2",
        "-K",
        "4",
        "-m",
        "2",
        "--negative-control",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("FAIL"));
}

#[test]
fn verify_pairsum_and_sum_lattice_and_measure() {
    let out = quiverzeta(&[
        "verify",
        "pairsum",
        "--in",
        &fixture("abelian2.json"),
        "-p",
        "2",
        "-K",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));

    let out = quiverzeta(&[
        "verify",
        "sum-lattice",
        "-m",
        "2",
        "-n",
        "1",
        "-p",
        "2",
        "-K",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("PASS"));

    let out = quiverzeta(&["verify", "measure", "-r", "2", "--nu-max", "1", "-p", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
}

#[test]
fn json_report_schema() {
    let out = quiverzeta(&[
        "verify",
        "amalgam",
        "--in",
        &fixture("heisenberg.json"),
        "-p",
        "2",
        "-K",
        "3",
        "-m",
        "1",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["status"], "PASS");
    assert_eq!(v["p"], 2);
    assert_eq!(v["m"], 1);
    assert!(v["counts"]["visited"].as_u64().unwrap() > 0);
    assert!(v.get("elapsed_ms").is_some());

    let out = quiverzeta(&[
        "coeffs",
        "--in",
        &fixture("heisenberg.json"),
        "-p",
        "2",
        "-K",
        "2",
        "--format",
        "json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["status"], "ok");
    let coeffs = v["coefficients"].as_array().unwrap();
    assert_eq!(coeffs.len(), 3);
    assert_eq!(coeffs[2]["value"], "7");
}

#[test]
fn schema_and_usage_errors_exit_2() {
    let out = quiverzeta(&[
        "coeffs",
        "--in",
        &fixture("bad_shape.json"),
        "-p",
        "2",
        "-K",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("edge 0"), "{}", stderr(&out));

    let out = quiverzeta(&[
        "coeffs",
        "--in",
        &fixture("heisenberg.json"),
        "-p",
        "6",
        "-K",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("not prime"), "{}", stderr(&out));

    let out = quiverzeta(&["coeffs", "--in", "no-such-file.json", "-p", "2", "-K", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn resource_guard_prints_predicted_size() {
    let out = quiverzeta(&[
        "coeffs",
        "--in",
        &fixture("heisenberg.json"),
        "-p",
        "3",
        "-K",
        "5",
        "-m",
        "2",
        "--limit",
        "1000",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("predicted"), "{err}");
    assert!(err.contains("1000"), "{err}");
}

#[test]
fn limit_env_var_is_honored() {
    let out = Command::new(env!("CARGO_BIN_EXE_quiverzeta"))
        .args([
            "coeffs",
            "--in",
            &fixture("heisenberg.json"),
            "-p",
            "2",
            "-K",
            "3",
        ])
        .env("QUIVERZETA_LIMIT", "10")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("limit 10"), "{}", stderr(&out));
}

#[test]
fn text_output_is_byte_identical_across_runs() {
    let args = [
        "coeffs",
        "--in",
        &fixture("two_vertex.json"),
        "-p",
        "3",
        "-K",
        "2",
        "--format",
        "text",
    ];
    let a = stdout(&quiverzeta(&args));
    let b = stdout(&quiverzeta(&args));
    assert_eq!(a, b);
    let mut with_parallel = args.to_vec();
    with_parallel.push("--parallel");
    assert_eq!(a, stdout(&quiverzeta(&with_parallel)));
}
