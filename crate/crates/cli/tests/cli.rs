//! Drives the `autota` binary end to end.

mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use autota::metrics::{alignment_report, HashedBowProvider};
use autota::model::AuditTrail;
use autota::report::{parse_theme_list, Report};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn autota(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_autota"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name).display().to_string()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn run_writes_the_output_layout() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = autota(&["run", &data("sample_transcript.txt"), "--seed", "3", "--out", p(&out), "--human", &data("human_themes.json")]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["themes.json", "audit.json", "report.json", "themes/iteration_000.json", "codes/psychologist.json"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let report: Report = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report.run_id, "run-3");
    assert!(report.alignment.is_some());
    let audit: AuditTrail = serde_json::from_str(&fs::read_to_string(out.join("audit.json")).unwrap()).unwrap();
    assert_eq!(audit.seed, 3);
    assert_eq!(audit.final_theme_set_id.as_deref(), Some(report.final_theme_set_id.as_str()));
    // the table rounds to four decimals
    let text = stdout(&o);
    let line = text.lines().find(|l| l.starts_with("credibility")).unwrap();
    assert!(line.trim_end().rsplit(' ').next().unwrap().split('.').nth(1).unwrap().len() == 4, "{line}");
}

#[test]
fn missing_transcript_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let o = autota(&["run", "no/such/file.txt", "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no/such/file.txt"), "{}", stderr(&o));
}

#[test]
fn backend_failure_flushes_partial_audit() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_autota"))
        .args(["run", &data("sample_transcript.txt"), "--backend", "remote", "--endpoint", "http://127.0.0.1:9/v1", "--out", p(dir.path())])
        .env("AUTO_TA_API_KEY", "unused")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("code stage failed"), "{}", stderr(&o));
    let audit: AuditTrail = serde_json::from_str(&fs::read_to_string(dir.path().join("audit.json")).unwrap()).unwrap();
    assert!(audit.error.is_some());
    assert!(audit.records.is_empty());
}

#[test]
fn remote_without_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_autota"))
        .args(["run", &data("sample_transcript.txt"), "--backend", "remote", "--endpoint", "http://127.0.0.1:9", "--out", p(dir.path())])
        .env_remove("AUTO_TA_API_KEY")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("AUTO_TA_API_KEY"), "{}", stderr(&o));
}

#[test]
fn compare_identical_lists_is_perfect() {
    let h = data("human_themes.json");
    let o = autota(&["compare", &h, &h]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("cosine_bi 1.0000  levenshtein_DL 1.0000  bleu_B 1.0000"), "{}", stdout(&o));
}

#[test]
fn compare_matches_the_library() {
    let (l, h) = (data("llm_themes.json"), data("human_themes.json"));
    let o = autota(&["compare", &l, &h]);
    assert!(o.status.success(), "{}", stderr(&o));
    let llm = parse_theme_list(&fs::read_to_string(&l).unwrap()).unwrap();
    let human = parse_theme_list(&fs::read_to_string(&h).unwrap()).unwrap();
    let r = alignment_report(&human, &llm, &HashedBowProvider::default()).unwrap();
    let head = format!("cosine_bi {:.4}  levenshtein_DL {:.4}  bleu_B {:.4}", r.cosine_bi, r.levenshtein_dl, r.bleu_b);
    assert!(stdout(&o).starts_with(&head), "{}", stdout(&o));
    // two best matches listed under each human theme
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("    ")).count(), 2 * human.len());
}

#[test]
fn compare_errors() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.json");
    fs::write(&empty, "[]").unwrap();
    let o = autota(&["compare", &data("llm_themes.json"), p(&empty)]);
    assert_eq!(o.status.code(), Some(1));

    let bad = dir.path().join("bad.json");
    fs::write(&bad, "[\n  {\"title\": \"ok\"},\n  {\"title\": }\n]").unwrap();
    let o = autota(&["compare", &data("llm_themes.json"), p(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn dependability_needs_two_runs() {
    let o = autota(&["dependability", &data("sample_transcript.txt"), "--runs", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = autota(&["dependability", &data("sample_transcript.txt"), "--runs", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("(n=3)"));
}

#[test]
fn transferability_needs_three_transcripts() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    common::write_corpus(&mut rng, dir.path(), 2, 5);
    let o = autota(&["transferability", p(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    common::write_corpus(&mut rng, dir.path(), 4, 5);
    let o = autota(&["transferability", p(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("(n=6)"), "{}", stdout(&o));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::copy(data("sample_transcript.txt"), dir.path().join("sample.txt")).unwrap();
    fs::write(
        &cfg,
        "transcripts = [\"sample.txt\"]\nseed = 11\nidentities = [\"Nurse\", \"Parent\"]\n[refine]\nmax_iterations = 1\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = autota(&["run", "--config", p(&cfg), "--seed", "12", "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let audit: AuditTrail = serde_json::from_str(&fs::read_to_string(out.join("audit.json")).unwrap()).unwrap();
    assert_eq!(audit.seed, 12);
    assert_eq!(audit.identities, ["Nurse", "Parent"]);
    assert!(audit.records.len() <= 2);

    fs::write(&cfg, "seeed = 1\n").unwrap();
    let o = autota(&["run", "--config", p(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("config stage failed"));
}

#[test]
fn rate_train_and_best_of() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = autota(&["run", &data("sample_transcript.txt"), "--out", p(&out), "--max-iters", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let audit_path = out.join("audit.json");
    let audit: AuditTrail = serde_json::from_str(&fs::read_to_string(&audit_path).unwrap()).unwrap();

    let ratings = dir.path().join("ratings.jsonl");
    for (i, r) in audit.records.iter().enumerate() {
        let rating = if i == 0 { "0" } else { "1" };
        let o = autota(&[
            "rate", p(&ratings), "--theme-set", &r.theme_set.id, "--rating", rating, "--rater", "r1", "--note", "coverage=fine",
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(fs::read_to_string(&ratings).unwrap().lines().count(), audit.records.len());
    let o = autota(&["rate", p(&ratings), "--theme-set", "x", "--rating", "2"]);
    assert_eq!(o.status.code(), Some(2));

    let model = dir.path().join("model.json");
    let o = autota(&["train", p(&ratings), "--audit", p(&audit_path), "--out", p(&model), "--epochs", "50"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains(&format!("trained on {} records", audit.records.len())));

    let best = dir.path().join("best");
    let o = autota(&[
        "run", &data("sample_transcript.txt"), "--out", p(&best), "--reward-model", p(&model), "--best-of", "3",
        "--max-iters", "1",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let cands: serde_json::Value = serde_json::from_str(&fs::read_to_string(best.join("candidates.json")).unwrap()).unwrap();
    let cands = cands.as_array().unwrap();
    assert_eq!(cands.len(), 3);
    assert_eq!(cands.iter().filter(|c| c["selected"] == true).count(), 1);

    let o = autota(&["run", &data("sample_transcript.txt"), "--out", p(&best), "--best-of", "2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn evaluate_a_saved_set() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for (out, seed) in [(&a, "1"), (&b, "2")] {
        let o = autota(&["run", &data("sample_transcript.txt"), "--out", p(out), "--seed", seed, "--max-iters", "1"]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let o = autota(&[
        "evaluate",
        p(&a.join("themes.json")),
        "--transcripts",
        &data("sample_transcript.txt"),
        "--against",
        p(&b.join("themes.json")),
        "--human",
        &data("human_themes.json"),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: Report = serde_json::from_str(&fs::read_to_string(a.join("report.json")).unwrap()).unwrap();
    assert!(stdout(&o).contains(&format!("credibility: {:.4}", report.credibility)), "{}", stdout(&o));
    assert!(stdout(&o).contains("dependability:"));
}

#[test]
fn config_fuzz_seeds() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus/run_config");
    let load = |name: &str| toml::from_str::<autota_cli::RunConfig>(&fs::read_to_string(dir.join(name)).unwrap()).unwrap();
    assert!(load("basic.toml").pipeline_config().is_ok());
    assert!(load("bad_eps.toml").pipeline_config().is_err());
}
