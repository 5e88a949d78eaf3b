//! End-to-end runs of the binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dirfuse")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = bin(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn last_json(text: &str) -> serde_json::Value {
    serde_json::from_str(text.lines().last().unwrap()).unwrap()
}

#[test]
fn single_record_tie_breaks_low() {
    let dir = TempDir::new().unwrap();
    let input = path(&dir, "in.jsonl");
    fs::write(&input, "{\"t\":0,\"source\":\"strong\",\"probs\":[0.5,0.5]}\n").unwrap();
    let v = last_json(&ok(&["filter", s(&input)]));
    assert_eq!(v["class"], 1);
    for p in v["smoothed"].as_array().unwrap() {
        assert!((p.as_f64().unwrap() - 0.5).abs() < 1e-12);
    }
}

#[test]
fn repeated_strong_fixture() {
    let dir = TempDir::new().unwrap();
    let input = path(&dir, "in.jsonl");
    let lines: String = (0..50)
        .map(|i| format!("{{\"t\":{},\"source\":\"strong\",\"probs\":[0.9,0.05,0.05]}}\n", 60 * i))
        .collect();
    fs::write(&input, lines).unwrap();
    let args = ["filter", s(&input), "--beta-map", "strong=1.0,weak=0.5", "--gamma", "0.95"];
    let first = ok(&args);
    assert_eq!(last_json(&first)["class"], 1);
    assert_eq!(first, ok(&args));
}

#[test]
fn simulate_properties() {
    let dir = TempDir::new().unwrap();
    let (a, b, ta, tb) = (path(&dir, "a"), path(&dir, "b"), path(&dir, "ta"), path(&dir, "tb"));
    ok(&["simulate", "--seed", "7", "-o", s(&a), "--truth", s(&ta)]);
    ok(&["simulate", "--seed", "7", "-o", s(&b), "--truth", s(&tb)]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(fs::read(&ta).unwrap(), fs::read(&tb).unwrap());
    assert_eq!(fs::read_to_string(&a).unwrap().lines().count(), 14400 / 5);

    ok(&["simulate", "--stay-prob", "1", "--k", "3", "-o", s(&a), "--truth", s(&ta)]);
    let truth = fs::read_to_string(&ta).unwrap();
    let classes: std::collections::BTreeSet<&str> =
        truth.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(classes.len(), 1);
}

#[test]
fn evaluate_examples() {
    let dir = TempDir::new().unwrap();
    let (pred, truth) = (path(&dir, "pred.csv"), path(&dir, "truth.csv"));
    fs::write(&truth, "t,true_class\n0,1\n5,1\n10,2\n15,2\n").unwrap();
    fs::write(&pred, "t,class\n0,1\n5,1\n10,2\n15,2\n").unwrap();
    assert!(ok(&["evaluate", s(&pred), s(&truth)]).contains("100.00"));
    fs::write(&pred, "t,class\n0,1\n5,2\n10,2\n15,2\n").unwrap();
    let json = path(&dir, "report.json");
    assert!(ok(&["evaluate", s(&pred), s(&truth), "--json", s(&json)]).contains("75.00"));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v["accuracy"], 0.75);

    fs::write(&pred, "t,class\n0,1\n5,2\n").unwrap();
    let out = bin(&["evaluate", s(&pred), s(&truth)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

#[test]
fn bench_columns() {
    let out = ok(&["bench", "--seed", "1"]);
    let header = out.lines().nth(1).unwrap();
    assert_eq!(header.split_whitespace().collect::<Vec<_>>(), ["Raw", "Simple", "Single", "Multiple"]);
    assert_eq!(out, ok(&["bench", "--seed", "1"]));

    let out = ok(&["bench", "--seed", "1", "--duration", "3600", "--methods", "raw,multiple"]);
    let header = out.lines().nth(1).unwrap();
    assert_eq!(header.split_whitespace().collect::<Vec<_>>(), ["Raw", "Multiple"]);
    assert_eq!(out.lines().nth(2).unwrap().split_whitespace().count(), 2);
}

#[test]
fn csv_and_jsonl_agree() {
    let dir = TempDir::new().unwrap();
    let (j, c, tj, tc) = (path(&dir, "s.jsonl"), path(&dir, "s.csv"), path(&dir, "tj"), path(&dir, "tc"));
    ok(&["simulate", "--seed", "3", "--duration", "1800", "-o", s(&j), "--truth", s(&tj)]);
    ok(&["simulate", "--seed", "3", "--duration", "1800", "--format", "csv", "-o", s(&c), "--truth", s(&tc)]);
    let from_json = ok(&["filter", s(&j)]);
    let from_csv = ok(&["filter", s(&c)]);
    let csv_rows: Vec<Vec<f64>> = from_csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').filter_map(|f| f.parse::<f64>().ok()).collect())
        .collect();
    let json_rows: Vec<serde_json::Value> = from_json.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(csv_rows.len(), json_rows.len());
    for (row, v) in csv_rows.iter().zip(&json_rows) {
        let smoothed: Vec<f64> = v["smoothed"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        // t, p1..p6, smoothed1..6, class
        for (a, b) in row[7..13].iter().zip(&smoothed) {
            assert!((a - b).abs() <= 1e-11 * b.abs().max(1e-300), "{a} vs {b}");
        }
    }
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = TempDir::new().unwrap();
    let (input, cfg) = (path(&dir, "in.jsonl"), path(&dir, "run.conf"));
    let lines: String = (0..20)
        .map(|i| format!("{{\"t\":{},\"source\":\"weak\",\"probs\":[0.6,0.3,0.1]}}\n", 5 * i))
        .collect();
    fs::write(&input, lines).unwrap();
    fs::write(&cfg, "# tuning\ngamma = 0.5\niters = 50\n").unwrap();
    let from_file = ok(&["filter", s(&input), "--config", s(&cfg)]);
    let explicit = ok(&["filter", s(&input), "--gamma", "0.5", "--iters", "50"]);
    assert_eq!(from_file, explicit);
    let overridden = ok(&["filter", s(&input), "--config", s(&cfg), "--gamma", "0.9"]);
    assert_eq!(overridden, ok(&["filter", s(&input), "--gamma", "0.9", "--iters", "50"]));
    assert_ne!(overridden, from_file);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let input = path(&dir, "in.jsonl");
    assert_eq!(bin(&["simulate", "--k", "1", "--truth", s(&path(&dir, "t"))]).status.code(), Some(2));
    assert_eq!(bin(&["filter", "--gamma", "2", s(&input)]).status.code(), Some(2));
    assert_eq!(bin(&["nonsense"]).status.code(), Some(2));

    fs::write(&input, "{\"t\":5,\"source\":\"weak\",\"probs\":[0.6,0.4]}\n{\"t\":0,\"source\":\"weak\",\"probs\":[0.6,0.4]}\n").unwrap();
    assert_eq!(bin(&["filter", s(&input)]).status.code(), Some(1));

    fs::write(&input, "{\"t\":0,\"source\":\"weak\",\"probs\":[0.6,0.4]}\nnot json\n{\"t\":5,\"source\":\"weak\",\"probs\":[0.6,0.4]}\n").unwrap();
    assert_eq!(bin(&["filter", s(&input)]).status.code(), Some(1));
    let out = bin(&["filter", "--lenient", s(&input)]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 2);
    assert!(!out.stderr.is_empty());
}

#[test]
fn round_trip_accuracy_in_range() {
    let dir = TempDir::new().unwrap();
    let (st, truth, out, rep) = (path(&dir, "s"), path(&dir, "t"), path(&dir, "o"), path(&dir, "r.json"));
    ok(&["simulate", "--seed", "2", "--duration", "3600", "-o", s(&st), "--truth", s(&truth)]);
    ok(&["filter", s(&st), "-o", s(&out)]);
    ok(&["evaluate", s(&out), s(&truth), "--json", s(&rep)]);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&rep).unwrap()).unwrap();
    let acc = v["accuracy"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&acc));
}
