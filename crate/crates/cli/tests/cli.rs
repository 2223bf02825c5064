use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn geoloc(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geoloc"))
        .args(args)
        .arg("--output-dir")
        .arg(out)
        .env_remove("GEOLOC_OUTPUT_DIR")
        .env_remove("GEOLOC_WORKERS")
        .output()
        .expect("binary runs")
}

fn ok(out: &Path, args: &[&str]) -> Vec<PathBuf> {
    let o = geoloc(out, args);
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap().lines().map(PathBuf::from).collect()
}

fn err(out: &Path, args: &[&str]) -> Value {
    let o = geoloc(out, args);
    assert!(!o.status.success(), "{args:?} unexpectedly succeeded");
    serde_json::from_slice(&o.stderr).expect("stderr holds one JSON error")
}

const SMALL: &[&str] = &["--set", "synth.users_per_state=10"];

fn with(base: &[&str], extra: &[&'static str]) -> Vec<String> {
    base.iter().chain(extra).map(|s| s.to_string()).collect()
}

fn run_pipeline(out: &Path) {
    for cmd in [&["synth"][..], &["train"], &["eval"]] {
        let args = with(cmd, SMALL);
        ok(out, &args.iter().map(String::as_str).collect::<Vec<_>>());
    }
}

#[test]
fn synth_train_eval_recovers_planted_states() {
    let dir = TempDir::new().unwrap();
    run_pipeline(dir.path());
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("eval-blog.json")).unwrap()).unwrap();
    assert!(report["accuracy"].as_f64().unwrap() >= 0.95, "{report}");
    assert!(report["near_miss_accuracy"].as_f64().unwrap() >= report["accuracy"].as_f64().unwrap());
    let model: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("model-blog.json")).unwrap()).unwrap();
    assert_eq!(model["provenance"]["source_media"], "blog");
    assert!(model["config_hash"].is_string());
}

#[test]
fn artifacts_are_byte_identical_across_runs() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    run_pipeline(a.path());
    run_pipeline(b.path());
    let mut names: Vec<_> = fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| !n.starts_with("manifest-"))
        .collect();
    names.sort();
    assert!(names.len() >= 5, "{names:?}");
    for n in names {
        assert_eq!(
            fs::read(a.path().join(&n)).unwrap(),
            fs::read(b.path().join(&n)).unwrap(),
            "{n} differs"
        );
    }
}

#[test]
fn manifest_records_hash_inputs_and_artifacts() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["synth", "--seed", "3"]);
    let artifacts = ok(dir.path(), &["stats", "--seed", "3"]);
    let m: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest-stats-blog.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "stats");
    assert_eq!(m["seed"], 3);
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
    assert!(m["created_unix"].as_u64().unwrap() > 0);
    assert_eq!(m["inputs"].as_array().unwrap().len(), 1);
    assert!(m["inputs"][0]["path"].as_str().unwrap().ends_with("synth-blog.jsonl"));
    assert_eq!(m["artifacts"].as_array().unwrap().len(), artifacts.len());

    let other = TempDir::new().unwrap();
    ok(other.path(), &["synth", "--seed", "4"]);
    let m2: Value =
        serde_json::from_str(&fs::read_to_string(other.path().join("manifest-synth-blog.json")).unwrap()).unwrap();
    let m1: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest-synth-blog.json")).unwrap()).unwrap();
    assert_ne!(m1["config_hash"], m2["config_hash"]);
}

#[test]
fn export_map_has_a_row_per_state() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["synth"]);
    let paths = ok(dir.path(), &["export-map", "--word", "locny0"]);
    assert_eq!(paths.len(), 1);
    let text = fs::read_to_string(&paths[0]).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 51);
    assert_eq!(lines[0], "state,value");
    let ny: Vec<&str> = lines.iter().filter(|l| l.starts_with("NY,")).copied().collect();
    assert_eq!(ny.len(), 1);
    assert_ne!(ny[0], "NY,0");
    assert!(lines.contains(&"TX,0"));
}

#[test]
fn stats_of_a_single_user_has_zero_spread() {
    let dir = TempDir::new().unwrap();
    let corpus = dir.path().join("one.jsonl");
    let doc = "word ".repeat(200);
    fs::write(
        &corpus,
        format!("{{\"user_id\":\"u1\",\"state\":\"NY\",\"media\":\"blog\",\"documents\":[\"{doc}\",\"{doc}\"]}}\n"),
    )
    .unwrap();
    let set = format!("corpus.blog={}", corpus.display());
    ok(dir.path(), &["stats", "--set", &set]);
    let text = fs::read_to_string(dir.path().join("stats-blog.csv")).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    for r in rows {
        assert_eq!(r[1], "1");
        assert_eq!(r[4], "0", "{r:?}");
    }
}

#[test]
fn invalid_configuration_lists_every_problem() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.conf");
    fs::write(&cfg, "[split]\ntrain = 0.5\n[features]\nfractions = 0, 2\n[model]\nclassifiers = tree\n").unwrap();
    let e = err(
        dir.path(),
        &["train", "--config", cfg.to_str().unwrap(), "--set", "lexicon.t=0", "--set", "nope.key=1"],
    );
    assert_eq!(e["error"], "invalid_config");
    let details: Vec<String> = e["details"]
        .as_array()
        .unwrap()
        .iter()
        .map(|d| d.as_str().unwrap().to_string())
        .collect();
    assert!(details.len() >= 5, "{details:?}");
    let all = details.join("\n");
    for needle in ["split", "fractions", "tree", "lexicon", "nope.key"] {
        assert!(all.contains(needle), "{needle} missing from {all}");
    }
    assert!(!dir.path().join("manifest-train-blog.json").exists());
}

#[test]
fn eval_refuses_a_model_from_another_medium() {
    let dir = TempDir::new().unwrap();
    for args in [&["synth"][..], &["synth", "--media", "tweet"], &["train"]] {
        ok(dir.path(), args);
    }
    let model = dir.path().join("model-blog.json");
    let e = err(dir.path(), &["eval", "--media", "tweet", "--model", model.to_str().unwrap()]);
    assert_eq!(e["error"], "media_mismatch");
    ok(
        dir.path(),
        &["eval", "--media", "tweet", "--model", model.to_str().unwrap(), "--cross-media"],
    );
    let report: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("eval-tweet.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["train_media"], "blog");
    assert_eq!(report["config"]["test_media"], "tweet");
}

#[test]
fn missing_corpus_is_a_structured_error() {
    let dir = TempDir::new().unwrap();
    let e = err(dir.path(), &["stats"]);
    assert_eq!(e["error"], "missing_input");
    assert!(e["message"].as_str().unwrap().contains("synth"));
}

#[test]
fn output_dir_comes_from_the_environment_unless_a_flag_is_given() {
    let env_dir = TempDir::new().unwrap();
    let flag_dir = TempDir::new().unwrap();
    let run = |extra: &[&Path]| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_geoloc"));
        c.arg("synth").env("GEOLOC_OUTPUT_DIR", env_dir.path());
        for p in extra {
            c.arg("--output-dir").arg(p);
        }
        let o = c.output().unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    };
    run(&[]);
    assert!(env_dir.path().join("synth-blog.jsonl").exists());
    run(&[flag_dir.path()]);
    assert!(flag_dir.path().join("synth-blog.jsonl").exists());
}

#[test]
fn flags_override_the_config_file() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "[run]\nseed = 1\n[synth]\nusers_per_state = 4\n").unwrap();
    let c = cfg.to_str().unwrap();
    ok(dir.path(), &["synth", "--config", c, "--users-per-state", "6", "--seed", "2"]);
    let lines = fs::read_to_string(dir.path().join("synth-blog.jsonl")).unwrap().lines().count();
    assert_eq!(lines, 300);
    let m: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest-synth-blog.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 2);
    assert!(m["inputs"][0]["path"].as_str().unwrap().ends_with("run.conf"));
}

#[test]
fn the_full_command_set_runs() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--users-per-state", "10"]);
    ok(d, &["synth", "--media", "tweet", "--users-per-state", "10", "--noise"]);
    let small = ["--set", "synth.users_per_state=10"];
    for cmd in [
        vec!["ingest"],
        vec!["split"],
        vec!["vocab"],
        vec!["weigh"],
        vec!["weigh", "--method", "wlh"],
        vec!["lexicon", "--set", "lexicon.p=2,3"],
        vec!["train"],
        vec!["train", "--media", "tweet"],
        vec!["slices", "--compare", "tweet"],
        vec!["slices", "--field", "gender"],
        vec!["export-map", "--accuracy"],
        vec!["bench", "--repetitions", "3", "--set", "features.methods=wlh,all"],
        vec!["cross", "--set", "features.methods=wlh", "--set", "features.fractions=0.1"],
    ] {
        let mut args = cmd.clone();
        args.extend(small);
        ok(d, &args);
    }
    for f in [
        "ingest-blog.csv",
        "ingest-blog-rejected.csv",
        "split-blog.csv",
        "counts-blog.tsv",
        "vocab-blog.tsv",
        "scores-blog-igr.tsv",
        "scores-blog-wlh.tsv",
        "lexicon-blog-p2-h10-t2.tsv",
        "lexicon-blog-jaccard.csv",
        "dev-blog.csv",
        "model-tweet.json",
        "slices-blog-state.csv",
        "slices-blog-vs-tweet.json",
        "map-accuracy-blog.csv",
        "bench-blog.csv",
        "cross.csv",
        "cross.json",
    ] {
        assert!(d.join(f).exists(), "{f} missing");
    }
    let split = fs::read_to_string(d.join("split-blog.csv")).unwrap();
    assert_eq!(split.lines().count(), 501);
    let cross: Value = serde_json::from_str(&fs::read_to_string(d.join("cross.json")).unwrap()).unwrap();
    assert_eq!(cross.as_array().unwrap().len(), 8 + 2);
    let e = err(d, &["weigh", "--method", "lexicon"]);
    assert_eq!(e["error"], "invalid_argument");
}
