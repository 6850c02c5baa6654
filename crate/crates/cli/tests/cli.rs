use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dawa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dawa"))
        .args(args)
        .env("DAWA_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = dawa(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn generate_partition_and_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("x.txt");
    let wl = dir.path().join("w.csv");
    let tree = dir.path().join("tree.csv");

    ok(&["datagen", "--kind", "piecewise_constant", "--n", "64", "--segments", "3", "--seed", "4", "--out", p(&data)]);
    assert_eq!(fs::read_to_string(&data).unwrap().lines().count(), 64);

    ok(&["workload", "--kind", "uniform", "--n", "64", "--queries", "30", "--seed", "1", "--out", p(&wl)]);
    let rows = fs::read_to_string(&wl).unwrap();
    assert_eq!(rows.lines().count(), 31);
    assert_eq!(rows.lines().next(), Some("lo,hi"));

    let exact = ok(&["partition", "--data", p(&data), "--eps1", "1", "--eps2", "1", "--exact", "--mode", "all"]);
    assert!(exact.lines().count() >= 2);
    let private = ok(&["partition", "--data", p(&data), "--eps1", "0.5", "--eps2", "1", "--seed", "3"]);
    assert_eq!(private, ok(&["partition", "--data", p(&data), "--eps1", "0.5", "--eps2", "1", "--seed", "3"]));

    let est = ok(&[
        "estimate", "--data", p(&data), "--workload", p(&wl), "--epsilon", "1", "--seed", "2", "--dump-tree", p(&tree),
    ]);
    assert_eq!(est.lines().count(), 64);
    assert!(est.lines().all(|l| l.parse::<f64>().is_ok()));
    assert_eq!(fs::read_to_string(&tree).unwrap().lines().next(), Some("lo,hi,depth,c_q"));

    let id = ok(&["estimate", "--data", p(&data), "--workload", p(&wl), "--epsilon", "1", "--mechanism", "identity"]);
    assert_eq!(id.lines().count(), 64);
}

#[test]
fn run_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let out = dir.path().join("report.json");
    fs::write(
        &cfg,
        r#"{"mechanisms": ["dawa", "hier_geometric"], "epsilons": [1.0],
            "data": {"synthetic": {"kind": "constant", "n": 32}},
            "workload": {"kind": "identity"}, "trials": 1, "replicates": 1, "seed": 3,
            "record_timing": false}"#,
    )
    .unwrap();
    ok(&["run", "--config", p(&cfg), "--out", p(&out)]);
    let first = fs::read_to_string(&out).unwrap();
    assert!(first.contains("\"aggregates\""));
    assert_eq!(ok(&["run", "--config", p(&cfg)]), first);
}

#[test]
fn spatial_answers_rectangles() {
    let dir = tempfile::tempdir().unwrap();
    let points = dir.path().join("pts.csv");
    let rects = dir.path().join("rects.csv");
    let mut text = String::from("x,y\n");
    for i in 0..200 {
        text.push_str(&format!("{},{}\n", (i % 20) as f64 * 0.5, (i / 20) as f64));
    }
    fs::write(&points, text).unwrap();
    fs::write(&rects, "xlo,xhi,ylo,yhi\n0,9.5,0,9\n1,3,2,5\n").unwrap();
    let out = ok(&["spatial", "--points", p(&points), "--rects", p(&rects), "--epsilon", "1e9", "--g", "3"]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "xlo,xhi,ylo,yhi,estimate,exact");
    assert_eq!(lines.len(), 3);
    let whole: Vec<f64> = lines[1].split(',').map(|v| v.parse().unwrap()).collect();
    assert!((whole[5] - 200.0).abs() < 1e-9);
    assert!((whole[4] - 200.0).abs() < 1e-3);
}

#[test]
fn bad_input_fails_cleanly() {
    let out = dawa(&["estimate", "--data", "/nonexistent", "--workload", "/nonexistent", "--epsilon", "1"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("reading data"));
    assert!(!dawa(&["workload", "--kind", "zipf", "--n", "4"]).status.success());
    assert!(!dawa(&["datagen", "--kind", "constant", "--n", "0"]).status.success());
}
