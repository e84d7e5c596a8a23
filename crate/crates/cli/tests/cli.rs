use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn walign(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_walign"))
        .args(args)
        .env("WALIGN_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_corpus(path: &Path) {
    // 100 synthetic texts over a small vocabulary, deterministic
    let mut state = 12345u64;
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 33) as usize
    };
    let mut lines = Vec::new();
    for id in 0..100 {
        let n = 20 + next() % 60;
        let words: Vec<String> = (0..n).map(|_| format!("w{}", next() % 30)).collect();
        lines.push(serde_json::json!({"id": id, "text": words.join(" ")}).to_string());
    }
    lines.push(String::new());
    lines.push(serde_json::json!({"id": 500, "text": "   "}).to_string());
    fs::write(path, lines.join("\n")).unwrap();
}

#[test]
fn verify_passes_and_catches_injected_fault() {
    let ok = walign(&["verify", "--texts", "60", "--queries", "20"]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    assert_eq!(stdout(&ok).matches("PASS").count(), 4);

    let bad = walign(&["verify", "--texts", "10", "--queries", "5", "--inject-fault"]);
    assert_eq!(bad.status.code(), Some(1));
    let out = stdout(&bad);
    assert!(out.contains("FAIL partition-vs-grid"), "{out}");
    assert!(out.contains("cell ("), "{out}");
}

#[test]
fn verify_respects_grid_cap() {
    let o = walign(&["verify", "--max-n", "100", "--cap", "50", "--texts", "20"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("exceeds"));
}

#[test]
fn running_example_index_has_thirteen_windows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("example.waln");
    let o = walign(&["index", "--running-example", "-k", "1", "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stats: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("example.waln.stats.json")).unwrap()).unwrap();
    assert_eq!(stats["windows_total"], 13);

    let s = walign(&["stats", "-i", out.to_str().unwrap()]);
    let summary: serde_json::Value = serde_json::from_str(&stdout(&s)).unwrap();
    assert_eq!(summary["windows_total"], 13);
    assert_eq!(summary["distinct_values"], 5);
}

#[test]
fn missing_corpus_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.waln");
    let o = walign(&["index", "--corpus", "/definitely/not/here.jsonl", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = walign(&["query", "-i", out.to_str().unwrap(), "-q", "a b"]);
    assert_eq!(o.status.code(), Some(2));
    let o = walign(&["index"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn index_is_deterministic_and_queryable() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.jsonl");
    write_corpus(&corpus);
    let (a, b) = (dir.path().join("a.waln"), dir.path().join("b.waln"));
    for out in [&a, &b] {
        let o = walign(&[
            "index", "--corpus", corpus.to_str().unwrap(), "-o", out.to_str().unwrap(),
            "-k", "64", "--hash", "icws", "--tf", "raw", "--idf", "smooth", "--seed", "3",
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stderr).contains("text 500 is empty"));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    // a verbatim prefix of text 0 must be found at threshold 1
    let first: serde_json::Value =
        serde_json::from_str(fs::read_to_string(&corpus).unwrap().lines().next().unwrap()).unwrap();
    let q: Vec<&str> = first["text"].as_str().unwrap().split(' ').take(12).collect();
    let q = q.join(" ");
    let o = walign(&["query", "-i", a.to_str().unwrap(), "--theta", "1.0", "-q", &q]);
    assert!(o.status.success());
    let rects: Vec<serde_json::Value> =
        stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(rects.iter().any(|r| r["text_id"] == 0
        && r["a"].as_u64().unwrap() <= 1
        && r["b"].as_u64().unwrap() >= 1
        && r["c"].as_u64().unwrap() <= 12
        && r["d"].as_u64().unwrap() >= 12));
    assert!(rects.iter().all(|r| r["support_min"].as_u64().unwrap() >= 64));

    let o = walign(&["query", "-i", a.to_str().unwrap(), "--theta", "1.0", "-q", &q, "--cells"]);
    assert!(stdout(&o).contains(r#"{"i":1,"j":12,"text_id":0}"#), "{}", stdout(&o));
    let o = walign(&["query", "-i", a.to_str().unwrap(), "--theta", "1.0", "-q", &q, "--longest"]);
    assert!(stdout(&o).lines().count() >= 1);

    let o = walign(&["query", "-i", a.to_str().unwrap(), "-q", "zzz-unknown"]);
    assert!(o.status.success());
    assert!(stdout(&o).is_empty());
}

#[test]
fn bench_writes_csv() {
    let o = walign(&["bench", "--axis", "k", "--grid", "1,2", "--n", "200", "--f", "10", "--runs", "10"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(
        lines.next(),
        Some("axis,value,mode,n,f,k,runs,windows,partition_seconds,dispersion_seconds")
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][0], "k");
    let w1: f64 = rows[0][7].parse().unwrap();
    let w2: f64 = rows[1][7].parse().unwrap();
    assert!(w2 > w1);

    let o = walign(&["bench", "--axis", "f", "--grid", "10", "--runs", "3"]);
    assert_eq!(o.status.code(), Some(2));
}
