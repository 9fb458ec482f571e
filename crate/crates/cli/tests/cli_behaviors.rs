//! CLI behaviors beyond the acceptance suite: replay parity for benchmark
//! runs, cache-miss reporting, exit-code contracts, input formats.

mod common;

use std::fs;

use aria_core::transcript::TranscriptRecord;
use aria_core::Transcript;
use common::{debug_output, exit_code, run, stage, stdout_json};

/// Replaying a benchmark from its transcript reproduces every per-problem
/// outcome and aggregate figure without reaching any backend.
#[test]
fn eval_replay_matches_original_report() {
    let dir = stage("evalset");
    let d = dir.path();
    let out = run(d, &["eval", "--dataset", "dataset.jsonl", "--config", "config.toml", "--labels", "labels.jsonl", "--report", "report.json"]);
    assert_eq!(exit_code(&out), 0, "{}", debug_output(&out));

    let replay = run(d, &["replay", "--transcript", "out/eval-transcript.jsonl", "--dataset", "dataset.jsonl", "--out", "replay-out"]);
    assert_eq!(exit_code(&replay), 0, "{}", debug_output(&replay));
    let stdout = String::from_utf8_lossy(&replay.stdout).to_string();
    assert!(stdout.contains(" 0 misses"), "replay must be cache-only:\n{stdout}");

    let mut original: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("report.json")).unwrap()).unwrap();
    let mut replayed: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("replay-out/replay-report.json")).unwrap())
            .unwrap();
    for report in [&mut original, &mut replayed] {
        for p in report["problems"].as_array_mut().expect("problems") {
            p["wall_ms"] = 0.into();
        }
    }
    assert_eq!(original["problems"], replayed["problems"]);
    // The replay sees no label file, so it reports no confusion matrix; the
    // run-level aggregates must still agree.
    for key in [
        "compilation_rate_pct",
        "final_accuracy_pct",
        "mean_llm_calls",
        "mean_compile_calls",
    ] {
        assert_eq!(original[key], replayed[key], "field {key}");
    }
}

/// Replay refuses to fabricate a response: with a cache entry deleted it
/// fails and names the missing digest.
#[test]
fn replay_names_missing_cache_digest() {
    let dir = stage("koethe");
    let d = dir.path();
    let out = run(d, &["formalize", "--input", "statement.json", "--config", "config.toml"]);
    assert_eq!(exit_code(&out), 0, "{}", debug_output(&out));

    let llm_cache = d.join(".cache/llm");
    let victim = fs::read_dir(&llm_cache)
        .expect("llm cache dir")
        .next()
        .expect("at least one cached response")
        .expect("cache entry");
    let digest = victim.file_name().to_string_lossy().to_string();
    fs::remove_file(victim.path()).expect("delete cache entry");

    let replay = run(d, &["replay", "--transcript", "out/transcript.jsonl", "--input", "statement.json", "--out", "replay-out"]);
    assert_eq!(exit_code(&replay), 2, "{}", debug_output(&replay));
    let stderr = String::from_utf8_lossy(&replay.stderr).to_string();
    assert!(
        stderr.contains("cache miss") && stderr.contains(&digest),
        "stderr must name the missing digest {digest}:\n{stderr}"
    );
}

/// --no-reflect grants one attempt per node: with a compiler that always
/// fails, the run fails without ever making a second attempt.
#[test]
fn no_reflect_never_retries() {
    let dir = stage("koethe");
    let d = dir.path();
    let fail = r#"{"output": "input:1:0: error: does not typecheck"}"#;
    fs::write(
        d.join("compiler_script.jsonl"),
        format!("{fail}\n{fail}\n{fail}\n{fail}\n"),
    )
    .expect("rewrite compiler script");

    let out = run(d, &["formalize", "--input", "statement.json", "--config", "config.toml", "--no-reflect"]);
    assert_eq!(exit_code(&out), 1, "{}", debug_output(&out));

    let records = Transcript::load(&d.join("out/transcript.jsonl")).expect("transcript");
    let mut budget_failures = 0;
    for r in &records {
        if let TranscriptRecord::NodeEvent { event, detail, .. } = r {
            assert!(
                !detail.contains("attempt 2"),
                "second attempt despite --no-reflect: {event} {detail}"
            );
            if event == "failed" && detail == "max attempts (1)" {
                budget_failures += 1;
            }
        }
    }
    assert!(budget_failures >= 1, "some node must exhaust its single attempt");
}

/// --score gates the exit status on the scorer decision and prints it.
#[test]
fn formalize_with_score_gates_exit() {
    let dir = stage("koethe");
    let out = run(dir.path(), &["formalize", "--input", "statement.json", "--config", "config.toml", "--score"]);
    assert_eq!(exit_code(&out), 0, "{}", debug_output(&out));
    let stdout = String::from_utf8_lossy(&out.stdout).to_string();
    assert!(
        stdout.contains("score: 1.00") && stdout.contains("accepted"),
        "{stdout}"
    );
}

/// A plain-text statement file works everywhere a JSON one does; the id is
/// the file stem.
#[test]
fn plain_text_statement_input() {
    let dir = stage("scorer");
    let d = dir.path();
    fs::write(
        d.join("b1-ufd.txt"),
        "The ring C[x, y, z] / (x^2 + y^3 + z^7) is a unique factorization domain.",
    )
    .unwrap();
    let out = run(d, &["score", "--informal", "b1-ufd.txt", "--formal", "b1_formal.lean", "--config", "b1_config.toml"]);
    assert_eq!(exit_code(&out), 0, "{}", debug_output(&out));
    let v = stdout_json(&out);
    assert_eq!(v["score"].as_f64(), Some(1.0));
}

/// Operational errors (missing config, bad labels) exit 2 and explain
/// themselves on stderr, distinct from the "ran but rejected" exit 1.
#[test]
fn operational_errors_exit_2() {
    let dir = stage("koethe");
    let out = run(dir.path(), &["formalize", "--input", "statement.json", "--config", "nope.toml"]);
    assert_eq!(exit_code(&out), 2, "{}", debug_output(&out));
    assert!(
        String::from_utf8_lossy(&out.stderr).starts_with("error:"),
        "{}",
        debug_output(&out)
    );

    let dir = stage("evalset");
    let d = dir.path();
    fs::write(d.join("bad_labels.jsonl"), "{\"id\": \"zzz\", \"label\": true}\n").unwrap();
    let out = run(d, &["eval", "--dataset", "dataset.jsonl", "--config", "config.toml", "--labels", "bad_labels.jsonl"]);
    assert_eq!(exit_code(&out), 2, "{}", debug_output(&out));
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("zzz"),
        "{}",
        debug_output(&out)
    );
}
