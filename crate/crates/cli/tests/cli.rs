use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn mini_corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/mini_corpus.jsonl")
}

fn biaslens(dir: &Path, args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_biaslens"))
        .current_dir(dir)
        .args(args)
        .env_remove("BIASLENS_PRESET")
        .output()
        .unwrap();
    if !out.status.success() {
        eprintln!("{}", String::from_utf8_lossy(&out.stderr));
    }
    out
}

fn ok(dir: &Path, args: &[&str]) {
    assert!(biaslens(dir, args).status.success(), "biaslens {args:?} failed");
}

fn full_run(dir: &Path) -> PathBuf {
    let corpus = mini_corpus();
    ok(dir, &["--preset", "mini", "--corpus", corpus.to_str().unwrap(), "--out", "run", "run"]);
    dir.join("run")
}

#[test]
fn stepwise_commands_reproduce_the_full_run() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let run = full_run(dir);
    for name in ["manifest.json", "label_ranks.json", "partition_female.json", "bias_distribution.csv"] {
        assert!(run.join(name).is_file(), "{name}");
    }

    let m = ["--preset", "mini", "--model", "run/model.bin"];
    ok(dir, &[&m[..], &["--out", "r", "rank"]].concat());
    for name in ["ranking_female.csv", "ranking_male.csv", "bias_distribution.csv"] {
        assert_eq!(fs::read(dir.join("r").join(name)).unwrap(), fs::read(run.join(name)).unwrap(), "{name}");
    }
    ok(dir, &[&m[..], &["--out", "c1", "cluster", "--ranking", "r/ranking_female.csv"]].concat());
    ok(dir, &[&m[..], &["--out", "c2", "cluster", "--ranking", "r/ranking_male.csv", "--side", "2"]].concat());
    ok(dir, &["--preset", "mini", "--out", "l1", "label", "--partition", "c1/partition_female.json"]);
    ok(dir, &["--preset", "mini", "--out", "l2", "label", "--partition", "c2/partition_male.json"]);
    ok(dir, &["--out", "cmp", "compare", "--left", "l1/labeled_female.json", "--right", "l2/labeled_male.json"]);
    assert_eq!(fs::read(dir.join("cmp/label_ranks.csv")).unwrap(), fs::read(run.join("label_ranks.csv")).unwrap());
    let concepts = fs::read_to_string(dir.join("cmp/concepts.csv")).unwrap();
    assert!(concepts.starts_with("concept,clusters1,clusters2,words1,words2\n"));
}

#[test]
fn compare_refuses_different_models() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    full_run(dir);
    let text = fs::read_to_string(dir.join("run/partition_male.json")).unwrap();
    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    doc["model_hash"] = "0000".into();
    fs::write(dir.join("labeled_other.json"), doc.to_string()).unwrap();
    let out = biaslens(
        dir,
        &["--out", "cmp", "compare", "--left", "run/partition_female.json", "--right", "labeled_other.json"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("different models"));
    assert!(!dir.join("cmp").exists());
}

#[test]
fn stability_report_has_one_entry_per_run() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = mini_corpus();
    let c = corpus.to_str().unwrap();
    ok(tmp.path(), &["--preset", "mini", "--corpus", c, "--out", "s", "stability", "--runs", "5", "--fraction", "0.5"]);
    let doc: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("s/stability.json")).unwrap()).unwrap();
    assert_eq!(doc["runs"].as_array().unwrap().len(), 5);
    assert!(doc["config_hash"].as_str().unwrap().len() == 64);
}

#[test]
fn weat_on_a_text_model_with_custom_sets() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let mut model = String::from("16 3\n");
    for (prefix, base) in [("x", [1.0, 0.1, 0.0]), ("y", [0.1, 1.0, 0.0]), ("a", [1.0, 0.0, 0.2]), ("b", [0.0, 1.0, 0.2])] {
        for i in 0..4 {
            let j = i as f64 * 0.01;
            model += &format!("{prefix}{i} {} {} {}\n", base[0] + j, base[1] - j, base[2] + j);
        }
    }
    fs::write(dir.join("toy.txt"), model).unwrap();
    for p in ["x", "y", "a", "b"] {
        let words: Vec<String> = (0..4).map(|i| format!("\"{p}{i}\"")).collect();
        fs::write(dir.join(format!("{p}.json")), format!("{{\"name\":\"{p}\",\"words\":[{}]}}", words.join(","))).unwrap();
    }
    ok(dir, &["--model", "toy.txt", "--out", "w", "weat", "--x", "x.json", "--y", "y.json", "--a", "a.json", "--b", "b.json"]);
    let csv = fs::read_to_string(dir.join("w/weat.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    let p: f64 = row[3].parse().unwrap();
    assert!((p - 1.0 / 70.0).abs() < 1e-12, "{csv}");
    assert_eq!(row[5], "true");
}

#[test]
fn config_file_and_env_are_applied() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("c.toml"), "preset = \"atheism\"\nr = 0.25\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_biaslens"))
        .current_dir(tmp.path())
        .args(["--config", "c.toml", "--print-config", "run"])
        .env("BIASLENS_K", "77")
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("k = 77"), "{text}");
    assert!(text.contains("r = 0.25"));
    assert!(text.contains("target1 = \"islam\""));
}

#[test]
fn bad_input_exits_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    assert_eq!(biaslens(dir, &["--corpus", "missing.jsonl", "run"]).status.code(), Some(2));
    assert_eq!(biaslens(dir, &["--corpus", "missing.jsonl", "--r", "1.5", "run"]).status.code(), Some(2));
    assert_eq!(biaslens(dir, &["--preset", "nope", "run"]).status.code(), Some(2));
    assert_eq!(biaslens(dir, &["frobnicate"]).status.code(), Some(2));
    assert_eq!(biaslens(dir, &["--model", "missing.bin", "rank"]).status.code(), Some(1));
    assert!(fs::read_dir(dir).unwrap().next().is_none(), "nothing should be written");
}

#[test]
fn synth_writes_requested_size() {
    let tmp = tempfile::tempdir().unwrap();
    ok(tmp.path(), &["synth", "--output", "s.jsonl", "--bytes", "20000"]);
    let text = fs::read_to_string(tmp.path().join("s.jsonl")).unwrap();
    let bodies: usize = text
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["body"].as_str().unwrap().len())
        .sum();
    assert!(bodies >= 20000);
}
