//! Benchmark harness: confusion matrices, accuracy/precision/recall/F1,
//! pass@k, and the dataset runner that drives the full pipeline per problem
//! and accounts for every backend call.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::graph::InformalStatement;
use crate::pipeline::{formalize_statement, Backends};
use crate::transcript::{BackendKind, TranscriptRecord};

/// Counts of scorer decisions against ground-truth labels; positive means
/// "correct formalization".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, tn: u64, fp: u64, fn_: u64) -> Self {
        Self { tp, tn, fp, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }
}

/// Count decisions against labels, pairwise.
pub fn confusion(predicted: &[bool], truth: &[bool]) -> Result<ConfusionMatrix> {
    if predicted.len() != truth.len() {
        return Err(Error::InvalidRequest {
            detail: format!(
                "length mismatch: {} predictions vs {} labels",
                predicted.len(),
                truth.len()
            ),
        });
    }
    if predicted.is_empty() {
        return Err(Error::InvalidRequest {
            detail: "empty decision list".to_string(),
        });
    }
    let mut cm = ConfusionMatrix::new(0, 0, 0, 0);
    for (&p, &t) in predicted.iter().zip(truth) {
        match (p, t) {
            (true, true) => cm.tp += 1,
            (false, false) => cm.tn += 1,
            (true, false) => cm.fp += 1,
            (false, true) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

/// The four standard rates, as fractions in [0, 1]. Zero denominators give
/// 0 by convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Round a fraction to a one-decimal percentage (the table convention).
pub fn percent(fraction: f64) -> f64 {
    (fraction * 1000.0).round() / 10.0
}

impl Metrics {
    /// (accuracy, precision, recall, f1) as one-decimal percentages.
    pub fn percentages(&self) -> (f64, f64, f64, f64) {
        (
            percent(self.accuracy),
            percent(self.precision),
            percent(self.recall),
            percent(self.f1),
        )
    }
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<Metrics> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::InvalidRequest {
            detail: "empty confusion matrix".to_string(),
        });
    }
    let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let accuracy = (cm.tp + cm.tn) as f64 / total as f64;
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let recall = ratio(cm.tp, cm.tp + cm.fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(Metrics {
        accuracy,
        precision,
        recall,
        f1,
    })
}

/// Fraction of problems with at least one success among the first k
/// recorded attempts. Direct counting: the harness runs fixed budgets.
pub fn pass_at_k(outcomes: &[Vec<bool>], k: usize) -> Result<f64> {
    if k < 1 {
        return Err(Error::InvalidRequest {
            detail: "k must be at least 1".to_string(),
        });
    }
    if outcomes.is_empty() {
        return Err(Error::InvalidRequest {
            detail: "no problems recorded".to_string(),
        });
    }
    for (i, attempts) in outcomes.iter().enumerate() {
        if attempts.len() < k {
            return Err(Error::InvalidRequest {
                detail: format!(
                    "problem {i} has {} attempts, fewer than k={k}",
                    attempts.len()
                ),
            });
        }
    }
    let solved = outcomes
        .iter()
        .filter(|attempts| attempts[..k].iter().any(|&ok| ok))
        .count();
    Ok(solved as f64 / outcomes.len() as f64)
}

/// One dataset problem (line-delimited JSON records).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    pub informal_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth_label: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_formal: Option<String>,
}

pub fn parse_dataset(text: &str) -> Result<Vec<DatasetRecord>> {
    let mut out: Vec<DatasetRecord> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: DatasetRecord = serde_json::from_str(line)
            .map_err(|e| Error::parse("dataset", format!("line {}: {e}", i + 1)))?;
        if rec.id.trim().is_empty() || rec.informal_text.trim().is_empty() {
            return Err(Error::parse(
                "dataset",
                format!("line {}: id and informal_text must be non-empty", i + 1),
            ));
        }
        if out.iter().any(|r| r.id == rec.id) {
            return Err(Error::parse(
                "dataset",
                format!("line {}: duplicate id '{}'", i + 1, rec.id),
            ));
        }
        out.push(rec);
    }
    if out.is_empty() {
        return Err(Error::parse("dataset", "no records"));
    }
    Ok(out)
}

pub fn load_dataset(path: &Path) -> Result<Vec<DatasetRecord>> {
    parse_dataset(&std::fs::read_to_string(path)?)
}

/// Per-problem outcome row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemOutcome {
    pub id: String,
    /// The emitted file passed a whole-file compiler check.
    pub compiled: bool,
    /// Scorer decision at the configured α; None when nothing was scorable.
    pub accepted: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    pub llm_calls: u64,
    pub retrieval_calls: u64,
    pub compile_calls: u64,
    pub wall_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

/// Aggregate report over one dataset run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub problems: Vec<ProblemOutcome>,
    /// One-decimal percentages.
    pub compilation_rate_pct: f64,
    pub final_accuracy_pct: f64,
    pub mean_llm_calls: f64,
    pub mean_compile_calls: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confusion: Option<ConfusionMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<Metrics>,
}

impl BenchmarkReport {
    /// Human-readable summary table.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str("id              compiled accepted score  llm  retr comp\n");
        for p in &self.problems {
            out.push_str(&format!(
                "{:<15} {:<8} {:<8} {:<6} {:<4} {:<4} {:<4}\n",
                p.id,
                p.compiled,
                p.accepted.map_or("-".to_string(), |a| a.to_string()),
                p.score.map_or("-".to_string(), |s| format!("{s:.2}")),
                p.llm_calls,
                p.retrieval_calls,
                p.compile_calls,
            ));
        }
        out.push_str(&format!(
            "compilation rate: {:.1}%\nfinal accuracy:  {:.1}%\nmean llm calls/problem: {:.2}\n",
            self.compilation_rate_pct, self.final_accuracy_pct, self.mean_llm_calls
        ));
        if let (Some(cm), Some(m)) = (&self.confusion, &self.metrics) {
            let (a, p, r, f1) = m.percentages();
            out.push_str(&format!(
                "scorer vs labels: tp={} tn={} fp={} fn={}\naccuracy {a:.1}% precision {p:.1}% \
                 recall {r:.1}% f1 {f1:.1}%\n",
                cm.tp, cm.tn, cm.fp, cm.fn_
            ));
        }
        out
    }
}

fn call_counts_since(records: &[TranscriptRecord], from: usize) -> (u64, u64, u64) {
    let (mut llm, mut retrieval, mut compile) = (0, 0, 0);
    for rec in &records[from..] {
        if let TranscriptRecord::Call(c) = rec {
            match c.kind {
                BackendKind::Llm => llm += 1,
                BackendKind::Retrieval => retrieval += 1,
                BackendKind::Compiler => compile += 1,
                BackendKind::TermIndex => {}
            }
        }
    }
    (llm, retrieval, compile)
}

/// Run the full pipeline over a dataset and aggregate. Per-problem failures
/// are recorded, never abort the run. Every problem is scored when a
/// theorem came out; final accuracy counts problems that compiled AND were
/// accepted at the configured α.
pub fn run_benchmark(
    dataset: &[DatasetRecord],
    cfg: &RunConfig,
    backends: &Backends,
) -> Result<BenchmarkReport> {
    if dataset.is_empty() {
        return Err(Error::InvalidRequest {
            detail: "empty dataset".to_string(),
        });
    }
    let mut problems = Vec::new();
    for rec in dataset {
        let started = std::time::Instant::now();
        let before = backends.transcript.len();
        let outcome = InformalStatement::new(&rec.id, &rec.informal_text)
            .map_err(Error::from)
            .and_then(|stmt| formalize_statement(&stmt, cfg, backends, true));
        let records = backends.transcript.records();
        let (llm_calls, retrieval_calls, compile_calls) = call_counts_since(&records, before);
        let wall_ms = started.elapsed().as_millis() as u64;
        match outcome {
            Ok(o) => problems.push(ProblemOutcome {
                id: rec.id.clone(),
                compiled: o.result.file_compiles,
                accepted: o.score.as_ref().map(|s| s.accepted),
                score: o.score.as_ref().map(|s| s.score),
                llm_calls,
                retrieval_calls,
                compile_calls,
                wall_ms,
                failure: None,
            }),
            Err(e) => problems.push(ProblemOutcome {
                id: rec.id.clone(),
                compiled: false,
                accepted: None,
                score: None,
                llm_calls,
                retrieval_calls,
                compile_calls,
                wall_ms,
                failure: Some(e.to_string()),
            }),
        }
    }

    let n = problems.len() as f64;
    let compiled = problems.iter().filter(|p| p.compiled).count() as f64;
    let succeeded = problems
        .iter()
        .filter(|p| p.compiled && p.accepted == Some(true))
        .count() as f64;
    let mean_llm_calls = problems.iter().map(|p| p.llm_calls).sum::<u64>() as f64 / n;
    let mean_compile_calls = problems.iter().map(|p| p.compile_calls).sum::<u64>() as f64 / n;

    // Confusion vs ground truth over the labeled subset; a problem that
    // produced nothing scorable counts as a negative decision.
    let labeled: Vec<(&ProblemOutcome, bool)> = dataset
        .iter()
        .zip(&problems)
        .filter_map(|(rec, p)| rec.ground_truth_label.map(|t| (p, t)))
        .collect();
    let (confusion_m, metrics_m) = if labeled.is_empty() {
        (None, None)
    } else {
        let predicted: Vec<bool> = labeled
            .iter()
            .map(|(p, _)| p.accepted.unwrap_or(false))
            .collect();
        let truth: Vec<bool> = labeled.iter().map(|(_, t)| *t).collect();
        let cm = confusion(&predicted, &truth)?;
        let m = metrics(&cm)?;
        (Some(cm), Some(m))
    };

    Ok(BenchmarkReport {
        problems,
        compilation_rate_pct: percent(compiled / n),
        final_accuracy_pct: percent(succeeded / n),
        mean_llm_calls,
        mean_compile_calls,
        confusion: confusion_m,
        metrics: metrics_m,
    })
}
