//! End-to-end tests of the `harmonagg` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use harmonagg::transition::{load_model, save_model};
use harmonagg::{ChordId, TransitionModel};
use tempfile::TempDir;

const TOY: &str = "k=4 n=3\nCMaj7 Dm7 G7 CMaj7\nAm7 Dm7 E7 Am7\nCMaj7 FMaj7 G7 Am7\n";

fn harmonagg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_harmonagg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn s(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// A synthetic corpus of `songs` 32-bar songs.
fn corpus_file(dir: &TempDir, songs: usize) -> PathBuf {
    let path = dir.path().join("corpus.txt");
    let out = harmonagg(&["-q", "synth-corpus", "--songs", &songs.to_string(), "--seed", "3", "--out", s(&path)]);
    assert!(out.status.success(), "{}", stderr(&out));
    path
}

#[test]
fn distance_prints_six_decimals() {
    let out = harmonagg(&["distance", "CMaj7", "FMaj7"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "0.666667\n");
    assert_eq!(stdout(&harmonagg(&["distance", "CMaj7", "CMaj7"])), "0.000000\n");
    assert_eq!(stdout(&harmonagg(&["distance", "Cmaj7", "Am7"])), "0.400000\n");
}

#[test]
fn distance_rejects_unknown_chords() {
    let out = harmonagg(&["distance", "CMaj7", "H7"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("H7"));
}

#[test]
fn train_writes_stochastic_model() {
    let dir = TempDir::new().unwrap();
    let corpus = write(&dir, "tiny.txt", "a | CMaj7 Dm7 | G7 | CMaj7 |\nb | Am7 | Dm7 G7 | CMaj7 |\n");
    let model = dir.path().join("model.json");
    let out = harmonagg(&["train", s(&corpus), "--out", s(&model)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("2 parsed"));
    let m = load_model(&model).unwrap();
    for from in ChordId::all() {
        assert!((m.row(from).iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn train_without_smoothing_warns_about_zero_rows() {
    let dir = TempDir::new().unwrap();
    let corpus = write(&dir, "tiny.txt", "a | CMaj7 Dm7 | G7 | CMaj7 |\n");
    let model = dir.path().join("model.json");
    let out = harmonagg(&["train", s(&corpus), "--alpha", "0", "--out", s(&model)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stderr(&out).contains("zero"), "{}", stderr(&out));
    assert!(load_model(&model).unwrap().zero_rows().len() > 100);
}

#[test]
fn train_reports_missing_file_and_format_errors() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope.txt");
    let out = harmonagg(&["train", s(&missing), "--out", s(&dir.path().join("m.json"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("nope.txt"));

    let bad = write(&dir, "bad.txt", "ok | CMaj7 |\njust a title\n");
    let out = harmonagg(&["train", s(&bad), "--out", s(&dir.path().join("m.json"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));
}

#[test]
fn aggregate_toy_plurality() {
    let dir = TempDir::new().unwrap();
    let profile = write(&dir, "toy.txt", TOY);
    let out = harmonagg(&["aggregate", "--profile", s(&profile), "--rule", "plurality"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(text.lines().next(), Some("CMaj7 Dm7 G7 Am7"));
    assert!(text.contains("plurality: 8"));
    assert!(text.contains("kemeny: 1.866667"));
}

#[test]
fn aggregate_two_gram_rule_needs_model() {
    let dir = TempDir::new().unwrap();
    let profile = write(&dir, "toy.txt", TOY);
    let out = harmonagg(&["aggregate", "--profile", s(&profile), "--rule", "kemeny2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--model"));
}

#[test]
fn aggregate_profile_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let profile = write(&dir, "bad.txt", "k=4 n=2\nCMaj7 Dm7 G7 CMaj7\nAm7 Dm7\n");
    let out = harmonagg(&["aggregate", "--profile", s(&profile), "--rule", "kemeny"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));

    let out = harmonagg(&["aggregate", "--profile", s(&dir.path().join("none.txt")), "--rule", "kemeny"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn aggregate_is_deterministic_per_seed() {
    let dir = TempDir::new().unwrap();
    let profile = write(&dir, "toy.txt", TOY);
    let model = dir.path().join("uniform.json");
    save_model(&TransitionModel::uniform(), &model).unwrap();
    let trace = dir.path().join("trace.csv");
    let args = [
        "-q", "aggregate", "--profile", s(&profile), "--rule", "pav2", "--model", s(&model), "--seed", "9",
        "--trace", s(&trace),
    ];
    let a = harmonagg(&args);
    let b = harmonagg(&args);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let trace_text = fs::read_to_string(&trace).unwrap();
    assert!(trace_text.starts_with("iteration,current_score,best_score,temperature\n"));
    assert_eq!(trace_text.lines().count(), 1001);
}

#[test]
fn aggregate_clustered_reports_sections() {
    let dir = TempDir::new().unwrap();
    let profile = write(&dir, "toy.txt", TOY);
    let out = harmonagg(&["aggregate", "--profile", s(&profile), "--rule", "clustered", "--cluster-mode", "exact"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("clustered: 0.000000"), "{text}");
    assert!(text.contains("section starts:"));
}

#[test]
fn simulate_small_run_has_one_row_per_song() {
    let dir = TempDir::new().unwrap();
    let corpus = corpus_file(&dir, 8);
    let csv = dir.path().join("out.csv");
    let out = harmonagg(&[
        "-q", "simulate", "--corpus", s(&corpus), "--songs", "5", "--agents", "8", "--ranges", "0,1", "--rules",
        "plurality", "--out", s(&csv),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("song_id,rule,error_lo,error_hi,n_agents,song_similarity_sum,song_similarity_mean,cluster_coherence,musical_coherence,wall_ms,seed")
    );
    assert_eq!(lines.count(), 5);
}

#[test]
fn simulate_row_count_is_full_product() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("out.csv");
    let out = harmonagg(&[
        "-q", "simulate", "--synthetic", "2", "--agents", "8,16", "--ranges", "0,1", "--ranges", "2,3", "--rules",
        "plurality,kemeny2,pav", "--iterations", "100", "--out", s(&csv),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = fs::read_to_string(&csv).unwrap().lines().count() - 1;
    assert_eq!(rows, 2 * 3 * 2 * 2);
}

#[test]
fn simulate_without_full_length_songs_exits_one() {
    let dir = TempDir::new().unwrap();
    let corpus = write(&dir, "short.txt", "a | CMaj7 | Dm7 G7 |\nb | Am7 |\n");
    let out = harmonagg(&["simulate", "--corpus", s(&corpus), "--out", s(&dir.path().join("x.csv"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("2 filtered out"), "{}", stdout(&out));
}

#[test]
fn simulate_rejects_bad_thread_count() {
    let out = Command::new(env!("CARGO_BIN_EXE_harmonagg"))
        .args(["simulate", "--synthetic", "1"])
        .env("HARMONAGG_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn inspect_uniform_model_lists_equal_probabilities() {
    let dir = TempDir::new().unwrap();
    let model = dir.path().join("uniform.json");
    save_model(&TransitionModel::uniform(), &model).unwrap();
    let out = harmonagg(&["-q", "inspect-model", "--model", s(&model), "--top", "4", "--chord", "CMaj7,G7"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let probs: Vec<String> = stdout(&out)
        .lines()
        .filter(|l| l.contains("->"))
        .map(|l| l.rsplit(' ').next().unwrap().to_string())
        .collect();
    assert_eq!(probs.len(), 8);
    assert!(probs.iter().all(|p| p == &probs[0]), "{probs:?}");

    let out = harmonagg(&["inspect-model", "--model", s(&model), "--chord", "Q9"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_file_supplies_flags_and_rejects_unknown_keys() {
    let dir = TempDir::new().unwrap();
    let profile = write(&dir, "toy.txt", TOY);
    let config = write(
        &dir,
        "config.json",
        &format!("{{\"profile\": {:?}, \"rule\": \"kemeny\"}}", s(&profile)),
    );
    let out = harmonagg(&["--config", s(&config), "aggregate"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("rule: kemeny\n"));
    assert!(stderr(&out).contains("aggregate config:"), "resolved config is logged");

    let out = harmonagg(&["--config", s(&config), "aggregate", "--rule", "pav"]);
    assert!(stdout(&out).contains("rule: pav\n"), "flags override the file");

    let bad = write(&dir, "bad.json", "{\"rule\": \"kemeny\", \"colour\": 3}");
    let out = harmonagg(&["--config", s(&bad), "aggregate"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("colour"), "{}", stderr(&out));
}

#[test]
fn help_lists_every_flag() {
    let out = harmonagg(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let expected: &[(&str, &[&str])] = &[
        ("train", &["--alpha", "--out", "--simulation-set", "--strict", "--no-reductions", "--config"]),
        ("aggregate", &["--profile", "--rule", "--model", "--seed", "--iterations", "--x-kemeny", "--x-max", "--off-weight", "--trace"]),
        ("simulate", &["--corpus", "--synthetic", "--model", "--agents", "--ranges", "--rules", "--out", "--seed", "--songs", "--scale", "--timing"]),
        ("inspect-model", &["--model", "--top", "--chord"]),
        ("distance", &[]),
    ];
    for (command, flags) in expected {
        let out = harmonagg(&[command, "--help"]);
        assert_eq!(out.status.code(), Some(0), "{command}");
        let text = stdout(&out);
        for flag in *flags {
            assert!(text.contains(flag), "{command} help lacks {flag}");
        }
    }
    assert_eq!(harmonagg(&["aggregate", "--bogus"]).status.code(), Some(1));
}
