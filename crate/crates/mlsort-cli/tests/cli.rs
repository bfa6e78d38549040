//! Black-box tests of the `mlsort` binary: exit codes, file formats,
//! message quality, CSV schema.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mlsort(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mlsort"))
        .args(args)
        .env_remove("MLSORT_SEED")
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

#[test]
fn gen_raw_writes_eight_bytes_per_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("u.raw");
    let out = mlsort(&[
        "gen", "--dist", "uniform", "--lo", "-1000", "--hi", "1000", "--n", "1000000", "--seed",
        "7", "--format", "raw", "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    assert_eq!(fs::metadata(&path).unwrap().len(), 8_000_000);
}

#[test]
fn gen_invalid_bounds_names_the_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.txt");
    let out = mlsort(&[
        "gen", "--dist", "uniform", "--lo", "10", "--hi", "-10", "--n", "5", "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 1);
    let msg = stderr(&out);
    assert!(msg.contains("--lo") && msg.contains("--hi"), "{msg}");
}

#[test]
fn gen_unknown_preset_is_rejected() {
    let out = mlsort(&["gen", "--dist", "zipf", "--n", "5", "--out", "/tmp/nope.txt"]);
    assert_eq!(exit_code(&out), 1);
    assert!(stderr(&out).contains("zipf"));
}

#[test]
fn gen_truncnorm_passes_ks_check() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tn.raw");
    let out = mlsort(&[
        "gen", "--dist", "truncnorm", "--n", "200000", "--seed", "5", "--format", "raw", "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    let bytes = fs::read(&path).unwrap();
    let mut keys: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    keys.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let spec = mlsort::dist::Preset::TruncatedNormal.spec::<f64>(5);
    let n = keys.len() as f64;
    for i in 0..100 {
        let x = -1000.0 + 2000.0 * (i as f64 + 0.5) / 100.0;
        let ecdf = keys.partition_point(|k| *k <= x) as f64 / n;
        assert!(
            (ecdf - spec.exact_cdf(x)).abs() < 0.01,
            "KS deviation at {x}"
        );
    }
}

fn write_lines(path: &Path, lines: &[&str]) {
    fs::write(path, lines.join("\n") + "\n").unwrap();
}

#[test]
fn sort_empty_file_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("empty.txt");
    fs::write(&input, "").unwrap();
    let out = mlsort(&[
        "sort", "--in", input.to_str().unwrap(), "--out",
        dir.path().join("o.txt").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 1);
    assert!(stderr(&out).contains("empty"), "{}", stderr(&out));
}

#[test]
fn sort_nan_names_the_offending_index() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("nan.txt");
    write_lines(&input, &["1.5", "2.5", "NaN", "0.5"]);
    let out = mlsort(&[
        "sort", "--in", input.to_str().unwrap(), "--out",
        dir.path().join("o.txt").to_str().unwrap(), "--n0", "2",
    ]);
    assert_eq!(exit_code(&out), 1);
    assert!(stderr(&out).contains("index 2"), "{}", stderr(&out));
}

#[test]
fn sort_missing_input_is_an_io_error() {
    let out = mlsort(&[
        "sort", "--in", "/no/such/file.txt", "--out", "/tmp/o.txt",
    ]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr(&out).contains("/no/such/file.txt"));
}

#[test]
fn sort_round_trips_raw_and_reports_verified() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.raw");
    let output = dir.path().join("out.raw");
    let gen = mlsort(&[
        "gen", "--dist", "bimodal", "--n", "20000", "--seed", "3", "--format", "raw", "--out",
        input.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&gen), 0);
    let out = mlsort(&[
        "sort", "--in", input.to_str().unwrap(), "--out", output.to_str().unwrap(), "--format",
        "raw", "--n0", "1000", "--m", "20", "--iterations", "3000", "--seed", "9",
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    let stats: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(stats["verified"], serde_json::Value::Bool(true));
    assert_eq!(stats["n"], serde_json::json!(20000));

    let bytes = fs::read(&output).unwrap();
    let keys: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    assert_eq!(keys.len(), 20000);
    assert!(keys.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn sort_descending_order() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.txt");
    write_lines(&input, &["3.0", "1.0", "2.0", "5.0", "4.0"]);
    let output = dir.path().join("out.txt");
    let out = mlsort(&[
        "sort", "--in", input.to_str().unwrap(), "--out", output.to_str().unwrap(), "--n0", "5",
        "--order", "desc", "--m", "2", "--iterations", "100",
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    let text = fs::read_to_string(&output).unwrap();
    let keys: Vec<f64> = text.lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(keys, vec![5.0, 4.0, 3.0, 2.0, 1.0]);
}

#[test]
fn analyze_identical_files_have_zero_deviation() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("keys.txt");
    write_lines(&f, &["1.0", "2.0", "3.0", "4.0"]);
    let out = mlsort(&[
        "analyze", "--estimates", f.to_str().unwrap(), "--truth", f.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    let stats: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(stats["deviation"]["max_abs"], serde_json::json!(0));
    assert_eq!(stats["deviation"]["mean_abs"], serde_json::json!(0.0));
}

#[test]
fn analyze_shuffled_truth_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let est = dir.path().join("est.txt");
    let truth = dir.path().join("truth.txt");
    write_lines(&est, &["1.0", "2.0", "3.0"]);
    write_lines(&truth, &["2.0", "1.0", "3.0"]);
    let out = mlsort(&[
        "analyze", "--estimates", est.to_str().unwrap(), "--truth", truth.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 1);
    assert!(stderr(&out).contains("not sorted"), "{}", stderr(&out));
}

#[test]
fn analyze_estimates_flow_from_sort() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.txt");
    let output = dir.path().join("out.txt");
    let est = dir.path().join("est.txt");
    let gen = mlsort(&[
        "gen", "--dist", "uniform", "--n", "5000", "--seed", "2", "--out",
        input.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&gen), 0);
    let sorted = mlsort(&[
        "sort", "--in", input.to_str().unwrap(), "--out", output.to_str().unwrap(), "--n0",
        "500", "--m", "10", "--iterations", "3000", "--estimates-out", est.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&sorted), 0, "{}", stderr(&sorted));
    let analyzed = mlsort(&[
        "analyze", "--estimates", est.to_str().unwrap(), "--truth", output.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&analyzed), 0, "{}", stderr(&analyzed));
    let stats: serde_json::Value = serde_json::from_str(&stdout(&analyzed)).unwrap();
    assert_eq!(stats["n"], serde_json::json!(5000));
    assert!(stats["occupancy"]["fit_error"].as_f64().unwrap() < 0.2);
}

#[test]
fn bench_emits_the_documented_schema_and_row_count() {
    let out = mlsort(&[
        "bench", "--dists", "uniform,truncnorm", "--sizes", "500,1000", "--repeats", "2",
        "--n0", "200", "--iterations", "500", "--seed", "4",
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    // golden schema line: changing it is a breaking change for consumers
    assert_eq!(
        lines[0],
        "distribution,n,n0,m,model,seed,repeat,train_ns,infer_place_ns,fixup_ns,total_ns,\
         baseline_ns,occupancy_fit,max_deviation,mean_deviation,verified,drift_warning,error"
    );
    assert_eq!(lines.len(), 1 + 2 * 2 * 2);
    for row in &lines[1..] {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 18, "row: {row}");
        assert_eq!(fields[15], "true", "verified column in {row}");
    }
}

#[test]
fn bench_scientific_sizes_and_desk_ceiling() {
    let out = mlsort(&[
        "bench", "--dists", "uniform", "--sizes", "2e6", "--repeats", "1",
    ]);
    assert_eq!(exit_code(&out), 1);
    assert!(stderr(&out).contains("--full-scale"), "{}", stderr(&out));

    let out = mlsort(&[
        "bench", "--dists", "uniform", "--sizes", "1e3", "--repeats", "1", "--n0", "100",
        "--iterations", "300",
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    assert_eq!(stdout(&out).lines().count(), 2);
}

#[test]
fn env_overrides_mirror_flags() {
    let dir = tempfile::tempdir().unwrap();
    let by_flag = dir.path().join("flag.txt");
    let by_env = dir.path().join("env.txt");
    let a = mlsort(&[
        "gen", "--dist", "uniform", "--n", "100", "--seed", "31", "--out",
        by_flag.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&a), 0);
    let b = Command::new(env!("CARGO_BIN_EXE_mlsort"))
        .args(["gen", "--dist", "uniform", "--n", "100", "--out", by_env.to_str().unwrap()])
        .env("MLSORT_SEED", "31")
        .output()
        .unwrap();
    assert_eq!(b.status.code(), Some(0));
    assert_eq!(fs::read(&by_flag).unwrap(), fs::read(&by_env).unwrap());
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(exit_code(&mlsort(&["--help"])), 0);
    assert_eq!(exit_code(&mlsort(&["--version"])), 0);
    assert_eq!(exit_code(&mlsort(&["sort", "--help"])), 0);
}
