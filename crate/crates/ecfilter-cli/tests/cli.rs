//! Behavior of the `ecfilter` binary: output formats, exit codes, and
//! flag/config handling.

use std::io::Write;
use std::path::Path;
use std::process::{Command, Stdio};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ecfilter"))
}

fn run(args: &[&str]) -> (i32, String, String) {
    let output = bin().args(args).output().expect("binary runs");
    (
        output.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&output.stdout).into_owned(),
        String::from_utf8_lossy(&output.stderr).into_owned(),
    )
}

fn write(dir: &Path, name: &str, content: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, content).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn stats_star_matches_expected_line() {
    let dir = tempfile::tempdir().unwrap();
    let star = write(dir.path(), "star.txt", "0 1\n0 2\n0 3\n");
    let (code, stdout, _) = run(&["stats", "--graph", &star]);
    assert_eq!(code, 0);
    assert!(stdout.contains("n=4, distinct=3, p=75.0%"), "{stdout}");
}

#[test]
fn stats_two_node_path_has_full_distinct_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "p2.txt", "0 1\n");
    let (code, stdout, _) = run(&["stats", "--graph", &path]);
    assert_eq!(code, 0);
    assert!(stdout.contains("distinct=2, p=100.0%"), "{stdout}");
}

#[test]
fn stats_reads_stdin() {
    let mut child = bin()
        .args(["stats", "--graph", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"0 1\n0 2\n0 3\n")
        .unwrap();
    let output = child.wait_with_output().unwrap();
    assert!(output.status.success());
    assert!(String::from_utf8_lossy(&output.stdout).contains("n=4, distinct=3"));
}

#[test]
fn stats_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let star = write(dir.path(), "star.txt", "0 1\n0 2\n0 3\n");
    let out_csv = dir.path().join("csv");
    let (code, _, _) = run(&[
        "stats",
        "--graph",
        &star,
        "--out",
        out_csv.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let csv = std::fs::read_to_string(out_csv.join("stats.csv")).unwrap();
    assert!(csv.starts_with("n_total,n_distinct,p_distinct,multiplicity_at_one\n"));
    assert!(csv.contains("4,3,0.75,2"));

    let out_json = dir.path().join("json");
    let (code, _, _) = run(&[
        "stats",
        "--graph",
        &star,
        "--out",
        out_json.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(code, 0);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_json.join("stats.json")).unwrap())
            .unwrap();
    assert_eq!(json["n_distinct"], 3);
    assert_eq!(json["multiplicity_at_one"], 2);
}

#[test]
fn hist_four_cycle_densities() {
    let (code, stdout, _) = run(&["hist", "--grid", "2x2", "--bins", "4"]);
    assert_eq!(code, 0);
    // spectrum {0, 1, 1, 2}, width 0.5: counts [1, 0, 2, 1]
    assert_eq!(
        stdout,
        "bin_left,bin_right,density\n0,0.5,0.5\n0.5,1,0\n1,1.5,1\n1.5,2,0.5\n"
    );
}

#[test]
fn hist_rejects_zero_bins() {
    let (code, _, stderr) = run(&["hist", "--grid", "2x2", "--bins", "0"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("bins"));
}

#[test]
fn graph_source_must_be_unique() {
    let (code, _, stderr) = run(&["stats", "--grid", "2x2", "--er", "10,3"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("exactly one"));
    let (code, _, _) = run(&["stats"]);
    assert_eq!(code, 2);
}

#[test]
fn malformed_edge_list_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.txt", "0 1\nzap 2\n");
    let (code, _, stderr) = run(&["stats", "--graph", &bad]);
    assert_eq!(code, 2);
    assert!(stderr.contains("line 2"), "{stderr}");

    let loop_file = write(dir.path(), "loop.txt", "0 0\n");
    let (code, _, stderr) = run(&["stats", "--graph", &loop_file]);
    assert_eq!(code, 2);
    assert!(stderr.contains("self-loop"), "{stderr}");
}

#[test]
fn random_spectrum_single_degree_and_complete_graph() {
    let (code, stdout, _) = run(&["random-spectrum", "--n", "40", "--degrees", "10"]);
    assert_eq!(code, 0);
    assert_eq!(stdout.lines().count(), 2); // header + one row

    // degree = n - 1 is the complete graph: all non-zero eigenvalues sit
    // at n/(n-1), inside the band around 1.
    let (code, stdout, _) = run(&["random-spectrum", "--n", "40", "--degrees", "39"]);
    assert_eq!(code, 0);
    let row = stdout.lines().nth(1).unwrap();
    let fraction: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert!((fraction - 39.0 / 40.0).abs() < 1e-12, "{row}");
}

#[test]
fn er_degree_beyond_n_minus_one_is_rejected() {
    let (code, _, stderr) = run(&["random-spectrum", "--n", "40", "--degrees", "45"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("avg_degree"));
}

#[test]
fn fit_filter_config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "fit.json",
        r#"{
            "grid": {"rows": 5, "cols": 5},
            "images": 2,
            "targets": ["band"],
            "bases": ["gpr"],
            "order": 8,
            "beta_grid": [0.0, 0.5],
            "max_iters": 200,
            "seed": 3
        }"#,
    );
    let out = dir.path().join("out");
    // flag overrides the file's order
    let (code, stdout, _) = run(&[
        "fit-filter",
        "--config",
        &config,
        "--order",
        "4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{stdout}");
    let csv = std::fs::read_to_string(out.join("fit_filter.csv")).unwrap();
    assert!(csv.starts_with("target,basis,beta,K,mse,seconds\n"));
    assert!(csv.contains("band,gpr,0.5,4,"), "{csv}");
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("fit_filter.json")).unwrap())
            .unwrap();
    assert_eq!(json["records"][0]["order"], 4);
    assert!(json["signal_stats"]["low_freq_mass"].as_f64().unwrap() > 0.5);
}

#[test]
fn fit_filter_oracle_column() {
    let (code, stdout, _) = run(&[
        "fit-filter",
        "--grid",
        "4x4",
        "--images",
        "2",
        "--targets",
        "low",
        "--basis",
        "gpr",
        "--order",
        "3",
        "--beta-grid",
        "0.5",
        "--method",
        "ls",
        "--oracle",
    ]);
    assert_eq!(code, 0);
    assert!(
        stdout.contains("target,basis,beta,K,mse,seconds,oracle_mse"),
        "{stdout}"
    );
}

#[test]
fn fit_filter_rejects_unknown_basis_and_bad_beta() {
    let (code, _, stderr) = run(&["fit-filter", "--basis", "chebyshev"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("unknown basis"));
    let (code, _, stderr) = run(&["fit-filter", "--beta-grid", "0,1.5"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("beta"));
}

#[test]
fn classify_emits_accuracy_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "classify.json",
        r#"{
            "sbm": {"n": 60, "p_in": 0.3, "p_out": 0.02},
            "order": 4,
            "max_iters": 200,
            "beta": 0.5,
            "seed": 5
        }"#,
    );
    let out = dir.path().join("out");
    let (code, stdout, _) = run(&[
        "classify",
        "--config",
        &config,
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("test_accuracy="));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("classify.json")).unwrap()).unwrap();
    assert!(json["test_accuracy"].as_f64().unwrap() >= 0.0);
    assert_eq!(json["wall_time_s"], 0.0); // deterministic default zeroes timing
}

#[test]
fn classify_beta_sweep_emits_table() {
    let (code, stdout, _) = run(&[
        "classify",
        "--beta-sweep",
        "--beta-grid",
        "0,0.5,1",
        "--order",
        "3",
        "--seed",
        "4",
    ]);
    assert_eq!(code, 0);
    assert!(stdout.contains("best_beta="));
    assert!(stdout.contains("beta,accuracy\n0,"), "{stdout}");
}

#[test]
fn classify_runs_from_dataset_files() {
    let dir = tempfile::tempdir().unwrap();
    // 6-cycle with alternating classes and clean indicator features
    let edges = write(dir.path(), "g.txt", "0 1\n1 2\n2 3\n3 4\n4 5\n5 0\n");
    let features = write(dir.path(), "x.csv", "1,0\n0,1\n1,0\n0,1\n1,0\n0,1\n");
    let labels = write(dir.path(), "y.csv", "0\n1\n0\n1\n0\n1\n");
    let train = write(dir.path(), "train.txt", "0\n1\n2\n3\n");
    let val = write(dir.path(), "val.txt", "4\n");
    let test = write(dir.path(), "test.txt", "5\n");
    let config = write(
        dir.path(),
        "cfg.json",
        &format!(
            r#"{{
                "edge_list": "{edges}",
                "dataset_files": {{
                    "features": "{features}", "labels": "{labels}",
                    "train": "{train}", "val": "{val}", "test": "{test}"
                }},
                "order": 2, "max_iters": 200, "beta": 0.5, "seed": 1
            }}"#
        ),
    );
    let (code, stdout, stderr) = run(&["classify", "--config", &config]);
    assert_eq!(code, 0, "stdout: {stdout}, stderr: {stderr}");
    assert!(stdout.contains("test_accuracy=1.0000"), "{stdout}");
}

#[test]
fn classify_rejects_beta_out_of_range() {
    let (code, _, stderr) = run(&["classify", "--beta", "1.5"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("beta"));
}

#[test]
fn divergence_maps_to_exit_code_three() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "diverge.json",
        r#"{
            "grid": {"rows": 4, "cols": 4},
            "images": 2,
            "targets": ["comb"],
            "bases": ["gpr"],
            "order": 6,
            "beta_grid": [0.5],
            "learning_rate": 1e9,
            "max_iters": 500,
            "seed": 3
        }"#,
    );
    let (code, _, stderr) = run(&["fit-filter", "--config", &config]);
    assert_eq!(code, 3, "{stderr}");
    assert!(stderr.contains("diverged"), "{stderr}");
}

#[test]
fn timestamp_header_appears_only_without_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let (code, _, _) = run(&[
        "hist",
        "--grid",
        "3x3",
        "--bins",
        "4",
        "--out",
        out.to_str().unwrap(),
        "--deterministic",
        "false",
    ]);
    assert_eq!(code, 0);
    let csv = std::fs::read_to_string(out.join("hist.csv")).unwrap();
    assert!(csv.starts_with("# generated_unix_seconds="), "{csv}");

    let (code, _, _) = run(&[
        "hist",
        "--grid",
        "3x3",
        "--bins",
        "4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let csv = std::fs::read_to_string(out.join("hist.csv")).unwrap();
    assert!(csv.starts_with("bin_left,"), "{csv}");
}
