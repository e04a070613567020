use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cfsim_core::ArchConfig;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_cfsim"));
    c.env_remove("SIM_LOG_LEVEL");
    c
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn cfg(rel: &str) -> String {
    configs().join(rel).to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn assert_single_error_line(out: &Output, code: &str) {
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    let lines: Vec<_> = err.lines().collect();
    assert_eq!(lines.len(), 1, "{err}");
    assert!(lines[0].starts_with(&format!("error[{code}]: ")), "{err}");
}

fn records(csv_text: &str) -> Vec<csv::StringRecord> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(csv_text.as_bytes())
        .records()
        .map(Result::unwrap)
        .collect()
}

fn header(csv_text: &str) -> csv::StringRecord {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(csv_text.as_bytes())
        .headers()
        .unwrap()
        .clone()
}

fn col(h: &csv::StringRecord, name: &str) -> usize {
    h.iter().position(|c| c == name).unwrap()
}

fn layer_toml(name: &str, dims: [usize; 7]) -> String {
    format!(
        "[[layers]]\nname = \"{name}\"\nbatch = {}\nin_channels = {}\nin_height = {}\nin_width = {}\nout_channels = {}\nfilter_height = {}\nfilter_width = {}\n",
        dims[0], dims[1], dims[2], dims[3], dims[4], dims[5], dims[6]
    )
}

#[test]
fn empty_workload_gives_header_only_csv() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w.toml");
    fs::write(&w, "model = \"empty\"\n").unwrap();
    let out = run(&["simulate", "--workload", w.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.starts_with("# cfsim report schema v1\nlayer,"));
}

#[test]
fn pointwise_layer_matches_plain_gemm_utilization() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w.toml");
    fs::write(&w, layer_toml("pw", [8, 128, 14, 14, 128, 1, 1])).unwrap();
    let out = run(&[
        "simulate",
        "--workload",
        w.to_str().unwrap(),
        "--arch",
        &cfg("arch/baseline.toml"),
        "--method",
        "channel-first,gemm",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let h = header(&text);
    let recs = records(&text);
    assert_eq!(recs.len(), 2);
    let u = col(&h, "utilization");
    assert_eq!(&recs[0][u], &recs[1][u]);
}

#[test]
fn random_verification_reports_all_matches() {
    let out = run(&["verify", "--random", "30", "--seed", "9", "--arch", &cfg("arch/small.toml")]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "30/30 match");
}

#[test]
fn simulate_verify_flag_checks_every_layer() {
    let out = run(&[
        "simulate",
        "--workload",
        &cfg("workloads/small.toml"),
        "--arch",
        &cfg("arch/small.toml"),
        "--verify",
    ]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stderr).unwrap().trim(), "4/4 match");
    assert_eq!(records(&String::from_utf8(out.stdout).unwrap()).len(), 16);
}

#[test]
fn outputs_are_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut seen = Vec::new();
    for jobs in ["1", "4", "4"] {
        let p = dir.path().join(format!("s{}.csv", seen.len()));
        let out = run(&[
            "sweep",
            "--jobs",
            jobs,
            "--workload",
            &cfg("workloads/resnet_like.toml"),
            "--sweep",
            &cfg("sweeps/strides.toml"),
            "--out",
            p.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        seen.push(fs::read(&p).unwrap());
    }
    assert!(seen.windows(2).all(|w| w[0] == w[1]));
    assert_eq!(records(&String::from_utf8(seen[0].clone()).unwrap()).len(), 4 * 3 * 3);
}

#[test]
fn baseline_file_round_trips_to_defaults() {
    let text = fs::read_to_string(configs().join("arch/baseline.toml")).unwrap();
    let a: ArchConfig = toml::from_str(&text).unwrap();
    assert_eq!(
        a,
        ArchConfig {
            num_vector_memories: Some(128),
            ..ArchConfig::baseline()
        }
    );
}

#[test]
fn failures_exit_non_zero_with_one_coded_line() {
    let dir = tempfile::tempdir().unwrap();
    let d = |name: &str, body: &str| {
        let p = dir.path().join(name);
        fs::write(&p, body).unwrap();
        p.to_string_lossy().into_owned()
    };
    let small = cfg("workloads/small.toml");

    assert_single_error_line(&run(&["simulate", "--workload", "/nonexistent/w.toml"]), "E_IO");
    assert_single_error_line(&run(&["simulate"]), "E_USAGE");
    assert_single_error_line(&run(&["frobnicate"]), "E_USAGE");
    assert_single_error_line(&run(&["simulate", "--workload", &small, "--method", "winograd"]), "E_USAGE");
    assert_single_error_line(&run(&["--jobs", "0", "overhead", "--workload", &small]), "E_USAGE");

    let bad_toml = d("bad.toml", "model = \"x\"\n[[layers]]\nname = \n");
    let out = run(&["overhead", "--workload", &bad_toml]);
    assert_single_error_line(&out, "E_PARSE");
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.toml:3:"));

    let unknown_key = d("arch.toml", "array_rows = 64\narray_colz = 64\n");
    let out = run(&["simulate", "--workload", &small, "--arch", &unknown_key]);
    assert_single_error_line(&out, "E_PARSE");
    assert!(String::from_utf8_lossy(&out.stderr).contains("arch.toml:2:"));

    let mismatch = d("vm.toml", "array_rows = 64\nnum_vector_memories = 32\n");
    assert_single_error_line(&run(&["simulate", "--workload", &small, "--arch", &mismatch]), "E_CONFIG");

    let dup = d("dup.toml", &format!("{}{}", layer_toml("a", [1, 1, 3, 3, 1, 1, 1]), layer_toml("a", [1, 1, 3, 3, 1, 1, 1])));
    assert_single_error_line(&run(&["overhead", "--workload", &dup]), "E_CONFIG");

    let too_big = d("big.toml", &layer_toml("a", [1, 1, 3, 3, 1, 5, 5]));
    assert_single_error_line(&run(&["overhead", "--workload", &too_big]), "E_CONFIG");

    let out_dir = dir.path().join("missing_dir/out.csv");
    assert_single_error_line(
        &run(&["overhead", "--workload", &small, "--out", out_dir.to_str().unwrap()]),
        "E_IO",
    );
}

#[test]
fn sweep_records_per_row_failures() {
    let dir = tempfile::tempdir().unwrap();
    let arch = dir.path().join("a.toml");
    fs::write(&arch, "sram_capacity_bytes = 64\n").unwrap();
    let grid = dir.path().join("g.toml");
    fs::write(&grid, "word_sizes = [8, 16]\nmethods = [\"gemm\"]\n").unwrap();
    let w = dir.path().join("w.toml");
    fs::write(&w, layer_toml("a", [8, 4, 6, 6, 4, 3, 3])).unwrap();
    let out = run(&[
        "sweep",
        "--workload",
        w.to_str().unwrap(),
        "--sweep",
        grid.to_str().unwrap(),
        "--arch",
        arch.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let h = header(&text);
    let recs = records(&text);
    assert_eq!(recs.len(), 2);
    assert_eq!(&recs[0][col(&h, "error")], "");
    assert!(recs[1][col(&h, "error")].contains("word"));
    assert_eq!(&recs[1][col(&h, "total_cycles")], "");
}

#[test]
fn overhead_pointwise_ratio_at_most_one() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w.toml");
    fs::write(&w, format!("elem_bytes = 4\n{}", layer_toml("pw", [2, 16, 8, 8, 16, 1, 1]))).unwrap();
    let out = run(&["overhead", "--workload", w.to_str().unwrap()]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# cfsim overhead schema v1\n"));
    let h = header(&text);
    let recs = records(&text);
    assert_eq!(recs.len(), 2);
    assert_eq!(&recs[0][col(&h, "ratio")], "1.000000");
    assert_eq!(&recs[1][col(&h, "scope")], "model");
    assert_eq!(&recs[0][col(&h, "original_bytes")], &(2 * 16 * 64 * 4).to_string());
}

#[test]
fn reuse_reports_both_policies_per_layer() {
    let out = run(&[
        "reuse",
        "--workload",
        &cfg("workloads/small.toml"),
        "--block-m",
        "16",
        "--block-n",
        "4",
        "--block-k",
        "2",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# cfsim reuse schema v1\n"));
    let h = header(&text);
    let recs = records(&text);
    assert_eq!(recs.len(), 8);
    let p = col(&h, "policy");
    assert_eq!(&recs[0][p], "filter-major");
    assert_eq!(&recs[1][p], "reuse-aware");
    let d = col(&h, "dram_bytes");
    for pair in recs.chunks(2) {
        assert!(pair[1][d].parse::<u64>().unwrap() <= pair[0][d].parse::<u64>().unwrap());
    }
}

#[test]
fn log_level_does_not_change_csv() {
    let args = ["simulate", "--workload", &cfg("workloads/small.toml"), "--arch", &cfg("arch/small.toml")];
    let quiet = run(&args);
    let loud = bin().args(args).env("SIM_LOG_LEVEL", "debug").output().unwrap();
    assert!(quiet.status.success() && loud.status.success());
    assert_eq!(quiet.stdout, loud.stdout);
}
