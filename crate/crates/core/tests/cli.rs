use std::path::Path;
use std::process::{Command, Output};

use activeft::feature_store::{save_pool, FeaturePool, PoolFormat};

fn activeft(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_activeft"))
        .current_dir(dir)
        .env_remove("ACTIVEFT_THREADS")
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn synth(dir: &Path, name: &str, per_cluster: &str) {
    let out = activeft(
        dir,
        &["synth", "--clusters", "3", "--per-cluster", per_cluster, "--dim", "16", "--spread", "0.05", "--seed", "7", "--out", name],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn read_indices(path: &Path) -> Vec<usize> {
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.ends_with('\n'));
    text.lines().map(|l| l.parse().unwrap()).collect()
}

#[test]
fn synth_writes_fpl1() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), "pool.fpl", "10");
    let bytes = std::fs::read(tmp.path().join("pool.fpl")).unwrap();
    assert_eq!(&bytes[..4], b"FPL1");
    assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 30);
    assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 16);
    assert_eq!(bytes.len(), 12 + 30 * 16 * 4);
}

#[test]
fn synth_without_out_is_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = activeft(tmp.path(), &["synth", "--clusters", "3"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn synth_into_missing_directory_is_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = activeft(tmp.path(), &["synth", "--out", "no/such/dir/pool.fpl"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn select_writes_indices_and_report() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir, "pool.fpl", "10");
    let out = activeft(
        dir,
        &["select", "--method", "activeft", "--pool", "pool.fpl", "--b", "6", "--seed", "1", "--out", "sel.txt", "--report", "rep.json"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let idx = read_indices(&dir.join("sel.txt"));
    assert_eq!(idx.len(), 6);
    assert!(idx.windows(2).all(|w| w[0] < w[1]));
    assert!(idx.iter().all(|&i| i < 30));

    let rep = read_json(&dir.join("rep.json"));
    assert_eq!(rep["schema_version"], 1);
    assert_eq!(rep["method"], "activeft");
    assert_eq!(rep["seed"], 1);
    assert!(rep["metrics"]["emd"].as_f64().unwrap() > 0.0);
    assert!(rep["loss"]["final"]["total"].as_f64().unwrap() < rep["loss"]["initial"]["total"].as_f64().unwrap());
    assert!(rep["wall_time_ms"].is_null());
    assert_eq!(rep["config"]["tau"], 0.07);
}

#[test]
fn select_timing_is_opt_in() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir, "pool.fpl", "10");
    let out = activeft(
        dir,
        &["select", "--method", "random", "--pool", "pool.fpl", "--b", "3", "--out", "s.txt", "--report", "r.json", "--timing"],
    );
    assert_eq!(code(&out), 0);
    assert!(read_json(&dir.join("r.json"))["wall_time_ms"].is_u64());
}

#[test]
fn select_budget_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir, "pool.fpl", "10");
    let too_big = activeft(dir, &["select", "--method", "random", "--pool", "pool.fpl", "--b", "31", "--out", "s.txt"]);
    assert_eq!(code(&too_big), 2);
    let degenerate = activeft(dir, &["select", "--method", "activeft", "--pool", "pool.fpl", "--b", "1", "--out", "s.txt"]);
    assert_eq!(code(&degenerate), 2);
    assert!(String::from_utf8_lossy(&degenerate.stderr).contains("none_s1"));
    let no_budget = activeft(dir, &["select", "--method", "random", "--pool", "pool.fpl", "--out", "s.txt"]);
    assert_eq!(code(&no_budget), 2);
    let both = activeft(dir, &["select", "--method", "random", "--pool", "pool.fpl", "--b", "2", "--ratio", "0.5", "--out", "s.txt"]);
    assert_eq!(code(&both), 2);
    let unknown = activeft(dir, &["select", "--method", "coreset", "--pool", "pool.fpl", "--b", "2", "--out", "s.txt"]);
    assert_eq!(code(&unknown), 2);
    let missing = activeft(dir, &["select", "--method", "random", "--pool", "absent.fpl", "--b", "2", "--out", "s.txt"]);
    assert_eq!(code(&missing), 1);
}

#[test]
fn one_percent_ratio_of_fifty_thousand() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let rows: Vec<[f32; 2]> = (0..50_000)
        .map(|i| {
            let a = i as f32 * 0.000_1;
            [a.cos(), a.sin()]
        })
        .collect();
    let pool = FeaturePool::from_rows(&rows, true).unwrap();
    save_pool(&pool, dir.join("big.fpl"), PoolFormat::Binary).unwrap();
    let out = activeft(dir, &["select", "--method", "random", "--pool", "big.fpl", "--ratio", "0.01", "--out", "s.txt"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read_indices(&dir.join("s.txt")).len(), 500);
}

#[test]
fn fds_with_pinned_first_pick() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("fixture.csv"), "1,0,0\n-1,0,0\n0,1,0\n").unwrap();
    let out = activeft(
        dir,
        &["select", "--method", "fds", "--pool", "fixture.csv", "--b", "2", "--first-center", "0", "--out", "s.txt"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read_indices(&dir.join("s.txt")), vec![0, 1]);
}

#[test]
fn eval_all_indices_and_oracle() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let out = activeft(
        dir,
        &["synth", "--clusters", "3", "--per-cluster", "4", "--dim", "5", "--spread", "0.2", "--out", "p.csv"],
    );
    assert_eq!(code(&out), 0);

    let all: String = (0..12).map(|i| format!("{i}\n")).collect();
    std::fs::write(dir.join("all.txt"), all).unwrap();
    let out = activeft(dir, &["eval", "--pool", "p.csv", "--indices", "all.txt", "--report", "all.json"]);
    assert_eq!(code(&out), 0);
    assert_eq!(read_json(&dir.join("all.json"))["metrics"]["emd"], 0.0);

    std::fs::write(dir.join("some.txt"), "1\n5\n9\n").unwrap();
    let out = activeft(dir, &["eval", "--pool", "p.csv", "--indices", "some.txt", "--oracle", "--report", "o.json"]);
    assert_eq!(code(&out), 0);
    let rep = read_json(&dir.join("o.json"));
    assert!(rep["oracle"]["abs_diff"].as_f64().unwrap() < 1e-9);
    assert_eq!(rep["oracle"]["emd_closed_form"], rep["metrics"]["emd"]);

    let out = activeft(dir, &["eval", "--pool", "p.csv", "--indices", "some.txt"]);
    assert_eq!(code(&out), 0);
    let printed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(printed["oracle"].is_null());
}

#[test]
fn eval_rejects_bad_indices() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir, "pool.fpl", "4");
    std::fs::write(dir.join("dup.txt"), "1\n1\n").unwrap();
    std::fs::write(dir.join("range.txt"), "12\n").unwrap();
    std::fs::write(dir.join("junk.txt"), "one\n").unwrap();
    for f in ["dup.txt", "range.txt", "junk.txt"] {
        let out = activeft(dir, &["eval", "--pool", "pool.fpl", "--indices", f]);
        assert_eq!(code(&out), 2, "{f}");
    }
}

#[test]
fn diag_entries_and_validation() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir, "pool.fpl", "10");
    let out = activeft(dir, &["diag", "--pool", "pool.fpl", "--b", "3", "--k", "1"]);
    assert_eq!(code(&out), 0);
    let rep: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rep["topk_mean_exp_sim"].as_array().unwrap().len(), 1);
    assert!(rep["top1_ratio"].is_null());

    let out = activeft(dir, &["diag", "--pool", "pool.fpl", "--b", "10", "--k", "20"]);
    assert_eq!(code(&out), 2);
    let out = activeft(dir, &["diag", "--pool", "pool.fpl", "--b", "6", "--k", "6", "--from-select", "--report", "d.json"]);
    assert_eq!(code(&out), 0);
    let rep = read_json(&dir.join("d.json"));
    assert_eq!(rep["params_source"], "optimized");
    let e: Vec<f64> = rep["topk_mean_exp_sim"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert!(e.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn experiment_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let out = activeft(
        dir,
        &["experiment", "compare", "--per-cluster", "10", "--b", "6", "--seeds", "3", "--report", "c.json"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let table = read_json(&dir.join("c.json"));
    let labels: Vec<&str> = table["rows"].as_array().unwrap().iter().map(|r| r["label"].as_str().unwrap()).collect();
    assert_eq!(labels, ["activeft", "random", "fds", "kmeans"]);
    assert_eq!(table["cells"].as_array().unwrap().len(), 12);

    let out = activeft(
        dir,
        &["experiment", "ablate", "--axis", "temperature", "--per-cluster", "10", "--b", "6", "--seeds", "2", "--report", "a.json"],
    );
    assert_eq!(code(&out), 0);
    let table = read_json(&dir.join("a.json"));
    let labels: Vec<&str> = table["rows"].as_array().unwrap().iter().map(|r| r["label"].as_str().unwrap()).collect();
    assert_eq!(labels, ["tau=0.04", "tau=0.07", "tau=0.2", "tau=0.5"]);

    let out = activeft(dir, &["experiment", "ablate", "--axis", "ci-update", "--values", "frozen_at_init", "--b", "3", "--seeds", "1", "--per-cluster", "5"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn experiment_rejects_unknown_names() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let out = activeft(dir, &["experiment", "ablate", "--axis", "momentum", "--b", "3"]);
    assert_eq!(code(&out), 2);
    let out = activeft(dir, &["experiment", "compare", "--methods", "activeft,badge", "--b", "3"]);
    assert_eq!(code(&out), 2);
    let out = activeft(dir, &["experiment", "ablate", "--axis", "regularizer", "--values", "l2", "--b", "3"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn thread_count_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir, "pool.fpl", "10");
    let run = |threads: &str, out: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_activeft"))
            .current_dir(dir)
            .env("ACTIVEFT_THREADS", threads)
            .args(["select", "--method", "kmeans", "--pool", "pool.fpl", "--b", "5", "--seed", "2", "--out", out])
            .output()
            .unwrap();
        assert_eq!(code(&o), 0);
        std::fs::read(dir.join(out)).unwrap()
    };
    assert_eq!(run("1", "one.txt"), run("3", "three.txt"));
}
