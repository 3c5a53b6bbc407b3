use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use stable_tree::cli::{manifest_path, RunManifest};
use stable_tree::rtree::DistanceMatrix;
use stable_tree::verify::{check_brownian_reduction, reports_from_jsonl, Verdict};
use stable_tree::WeightedRTree;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_stable-tree"));
    c.env_remove("STABLE_TREE_N_TRUNC").env_remove("STABLE_TREE_SIGNIFICANCE");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn tmp() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn sample_json_has_requested_leaves() {
    let d = tmp();
    let out = d.path().join("t.json");
    let o =
        run(&["sample", "--alpha", "1.5", "--leaves", "3", "--algorithm", "I", "--format", "json", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let t = WeightedRTree::from_json(&read(&out)).unwrap();
    assert_eq!(t.leaf_count(), 3);
    t.check_invariants().unwrap();
    assert!(manifest_path(&out).exists());
}

#[test]
fn newick_and_json_round_trip_distances() {
    let d = tmp();
    let nwk = d.path().join("a.nwk");
    let json = d.path().join("a.json");
    let common = ["sample", "--alpha", "2", "--leaves", "100", "--algorithm", "aldous", "--seed", "5"];
    assert_eq!(code(&run(&[&common[..], &["--format", "newick", "--out", s(&nwk)]].concat())), 0);
    assert_eq!(code(&run(&[&common[..], &["--format", "json", "--out", s(&json)]].concat())), 0);
    let a = WeightedRTree::from_newick(read(&nwk).trim()).unwrap();
    let b = WeightedRTree::from_json(&read(&json)).unwrap();
    assert_eq!(a.leaf_count(), 100);
    assert!(a.distance_matrix().max_abs_diff(&b.distance_matrix()) <= 1e-12);
}

#[test]
fn single_leaf_distmatrix_is_2x2() {
    let d = tmp();
    let out = d.path().join("m.csv");
    assert_eq!(
        code(&run(&["sample", "--alpha", "1.5", "--leaves", "1", "--format", "distmatrix", "--out", s(&out)])),
        0
    );
    let m = DistanceMatrix::from_csv(&read(&out)).unwrap();
    assert_eq!(m.dim(), 2);
    assert_eq!(m.get(0, 0), 0.0);
    assert!(m.get(0, 1) > 0.0);
}

#[test]
fn snapshots_are_restrictions() {
    let d = tmp();
    let out = d.path().join("t.json");
    let o = run(&[
        "sample",
        "--alpha",
        "1.3",
        "--leaves",
        "50",
        "--snapshots",
        "5,20",
        "--out",
        s(&out),
        "--trace",
        s(&d.path().join("trace.csv")),
    ]);
    assert_eq!(code(&o), 0);
    let full = WeightedRTree::from_json(&read(&out)).unwrap();
    for k in [5, 20] {
        let snap = WeightedRTree::from_json(&read(&d.path().join(format!("t.p{k}.json")))).unwrap();
        assert_eq!(snap.leaf_count(), k);
        let restricted = full.restrict_to_leaves(k).unwrap();
        assert!(snap.distance_matrix().max_abs_diff(&restricted.distance_matrix()) <= 1e-9);
    }
    assert_eq!(read(&d.path().join("trace.csv")).lines().count(), 50);
}

#[test]
fn exit_codes() {
    let d = tmp();
    let out = d.path().join("x.json");
    // Usage errors.
    assert_eq!(
        code(&run(&["sample", "--alpha", "1.5", "--leaves", "10", "--algorithm", "aldous", "--out", s(&out)])),
        2
    );
    assert_eq!(code(&run(&["sample", "--alpha", "2.5", "--leaves", "10", "--out", s(&out)])), 2);
    assert_eq!(code(&run(&["sample", "--alpha", "1.5", "--leaves", "10", "--snapshots", "11", "--out", s(&out)])), 2);
    assert_eq!(code(&run(&["sample", "--alpha", "1.5", "--leaves", "10", "--out", s(&out), "--bogus"])), 2);
    assert_eq!(code(&run(&["chain", "--alpha", "1.5", "--steps", "0", "--out", s(&out)])), 2);
    assert_eq!(code(&run(&["verify", "--suite", "nope"])), 2);
    // Runtime failure: unwritable output.
    let missing = d.path().join("no/such/dir/x.json");
    assert_eq!(code(&run(&["sample", "--alpha", "1.5", "--leaves", "10", "--out", s(&missing)])), 1);
    assert!(!out.exists());
}

#[test]
fn chain_csv_shape() {
    let d = tmp();
    let out = d.path().join("c.csv");
    assert_eq!(code(&run(&["chain", "--alpha", "1.5", "--steps", "1", "--out", s(&out)])), 0);
    assert_eq!(read(&out).lines().count(), 2);
    assert_eq!(code(&run(&["chain", "--alpha", "1.7", "--steps", "200", "--out", s(&out)])), 0);
    let m: Vec<f64> = read(&out).lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(m.len(), 200);
    assert!(m.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn chain_csv_feeds_brownian_check_offline() {
    let d = tmp();
    let csv = d.path().join("b.csv");
    let report = d.path().join("b.jsonl");
    let (steps, reps, seed) = (5, 3000, 17);
    let o = run(&["chain", "--alpha", "2", "--steps", "5", "--replicates", "3000", "--seed", "17", "--out", s(&csv)]);
    assert_eq!(code(&o), 0);
    let o = run(&["verify", "--chain-csv", s(&csv), "--seed", "17", "--report", s(&report)]);
    let offline = reports_from_jsonl(&read(&report)).unwrap();
    assert_eq!(offline.len(), 1);
    let online = check_brownian_reduction(steps, reps, seed).unwrap();
    assert_eq!(offline[0].verdict, online.verdict);
    assert_eq!(offline[0].stat, online.stat);
    assert_eq!(offline[0].pvalue, online.pvalue);
    assert_eq!(code(&o), if online.verdict == Verdict::Fail { 1 } else { 0 });
}

#[test]
fn verify_report_is_deterministic() {
    let d = tmp();
    let a = d.path().join("a.jsonl");
    let b = d.path().join("b.jsonl");
    for p in [&a, &b] {
        let o = run(&["verify", "--suite", "dirichlet", "--n", "2000", "--seed", "3", "--report", s(p)]);
        assert!(code(&o) <= 1);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(reports_from_jsonl(&read(&a)).unwrap().len(), 13);
}

#[test]
fn verify_all_at_defaults() {
    let d = tmp();
    let report = d.path().join("all.jsonl");
    let o = run(&["verify", "--suite", "all", "--report", s(&report)]);
    let reports = reports_from_jsonl(&read(&report)).unwrap();
    assert!(reports.len() >= 20);
    let failed: Vec<_> = reports.iter().filter(|r| r.verdict == Verdict::Fail).map(|r| r.summary()).collect();
    assert!(failed.is_empty(), "{failed:#?}");
    assert_eq!(code(&o), 0);
}

#[test]
fn verify_shapes_at_large_n() {
    let d = tmp();
    let report = d.path().join("shapes.jsonl");
    let o = run(&["verify", "--suite", "shapes", "--alpha-list", "1.5", "--n", "100000", "--report", s(&report)]);
    let reports = reports_from_jsonl(&read(&report)).unwrap();
    let failed: Vec<_> = reports.iter().filter(|r| !r.passed()).map(|r| r.summary()).collect();
    assert!(failed.is_empty(), "{failed:#?}");
    assert_eq!(code(&o), 0);
}

#[test]
fn significance_level_from_env() {
    let d = tmp();
    let report = d.path().join("r.jsonl");
    let o = bin()
        .args(["verify", "--suite", "dirichlet", "--n", "500", "--report", s(&report)])
        .env("STABLE_TREE_SIGNIFICANCE", "0.001")
        .output()
        .unwrap();
    assert!(code(&o) <= 1);
    let reports = reports_from_jsonl(&read(&report)).unwrap();
    assert!(reports.iter().filter(|r| r.pvalue.is_some()).all(|r| r.threshold == 0.001));
}

#[test]
fn manifest_reproduces_output() {
    let d = tmp();
    let out = d.path().join("t.nwk");
    let o = bin()
        .args([
            "sample",
            "--alpha",
            "1.4",
            "--leaves",
            "30",
            "--format",
            "newick",
            "--m1",
            "truncated",
            "--seed",
            "9",
            "--out",
            s(&out),
        ])
        .env("STABLE_TREE_N_TRUNC", "20000")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let m: RunManifest = serde_json::from_str(&read(&manifest_path(&out))).unwrap();
    assert_eq!(m.command, "sample");
    assert_eq!(m.seed, 9);
    assert_eq!(m.config["growth"]["m1"]["n_trunc"], 20000);
    assert_eq!(m.outputs, vec![out.clone()]);
    // Replaying the echoed arguments (without the env override) with an
    // explicit --n-trunc gives the same bytes.
    let first = std::fs::read(&out).unwrap();
    let mut args: Vec<String> = m.args[1..].to_vec();
    args.extend(["--n-trunc".to_string(), "20000".to_string()]);
    let o = bin().args(&args).output().unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read(&out).unwrap(), first);
}

#[test]
fn bench_small_tree() {
    let d = tmp();
    let out: PathBuf = d.path().join("bench.json");
    let o = run(&["bench", "--leaves", "10", "--queries", "100", "--out", s(&out)]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&read(&out)).unwrap();
    assert_eq!(v["invariants_ok"], true);
    assert!(v["rounds_per_second"].as_f64().unwrap() > 0.0);
}
