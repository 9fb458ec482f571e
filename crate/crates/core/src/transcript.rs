//! Append-only run transcript: provenance and budget accounting for every
//! external call, plus node lifecycle events and problem markers.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write as _};
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Milliseconds since the Unix epoch.
pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// Which external backend a call record belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    Llm,
    Retrieval,
    Compiler,
    TermIndex,
}

impl BackendKind {
    pub fn name(self) -> &'static str {
        match self {
            BackendKind::Llm => "llm",
            BackendKind::Retrieval => "retrieval",
            BackendKind::Compiler => "compiler",
            BackendKind::TermIndex => "term-index",
        }
    }
}

/// One external call: what was asked (by digest), whether the cache served
/// it, and how long it took.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendCallRecord {
    pub timestamp: u64,
    pub kind: BackendKind,
    pub purpose: String,
    pub digest: String,
    pub cache_hit: bool,
    pub duration_ms: u64,
}

/// One transcript line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "kebab-case")]
pub enum TranscriptRecord {
    /// Run provenance, written once at the start.
    Header {
        timestamp: u64,
        config: serde_json::Value,
        config_digest: String,
        toolchain_version: String,
        index_digest: String,
    },
    Call(BackendCallRecord),
    /// Node lifecycle event (grounded, synthesized, failed, ...).
    NodeEvent {
        timestamp: u64,
        node: String,
        event: String,
        detail: String,
    },
    /// Marks the start of one problem; the denominator of per-problem means.
    Problem { timestamp: u64, id: String },
}

/// Aggregated call accounting over one transcript.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CallStats {
    pub total: u64,
    pub hits: u64,
    pub misses: u64,
    /// hits / total; 0 when the transcript holds no calls.
    pub hit_ratio: f64,
    pub per_purpose: BTreeMap<String, u64>,
    pub per_kind: BTreeMap<String, u64>,
    /// Number of LLM calls that actually reached the backend.
    pub llm_misses: u64,
    pub retrieval_calls: u64,
    pub compiler_calls: u64,
    pub problems: u64,
    /// llm_misses / problems; 0 when no problem markers exist.
    pub mean_llm_misses_per_problem: f64,
}

/// Thread-safe, append-only transcript with an optional file sink
/// (line-delimited records).
#[derive(Clone)]
pub struct Transcript {
    inner: Arc<Mutex<Inner>>,
}

struct Inner {
    records: Vec<TranscriptRecord>,
    sink: Option<File>,
}

impl Default for Transcript {
    fn default() -> Self {
        Self::new()
    }
}

impl Transcript {
    /// In-memory transcript.
    pub fn new() -> Self {
        Self {
            inner: Arc::new(Mutex::new(Inner {
                records: Vec::new(),
                sink: None,
            })),
        }
    }

    /// Transcript mirrored to a file, one record per line. The file is
    /// created fresh; appends within the run are serialized.
    pub fn with_file(path: &Path) -> Result<Self> {
        let file = File::create(path)?;
        Ok(Self {
            inner: Arc::new(Mutex::new(Inner {
                records: Vec::new(),
                sink: Some(file),
            })),
        })
    }

    pub fn append(&self, record: TranscriptRecord) {
        let mut inner = self.inner.lock().expect("transcript lock");
        if let Some(sink) = inner.sink.as_mut() {
            let line = serde_json::to_string(&record).expect("record serializes");
            let _ = writeln!(sink, "{line}");
        }
        inner.records.push(record);
    }

    pub fn record_header(
        &self,
        config: serde_json::Value,
        config_digest: &str,
        toolchain_version: &str,
        index_digest: &str,
    ) {
        self.append(TranscriptRecord::Header {
            timestamp: now_ms(),
            config,
            config_digest: config_digest.to_string(),
            toolchain_version: toolchain_version.to_string(),
            index_digest: index_digest.to_string(),
        });
    }

    pub fn record_call(
        &self,
        kind: BackendKind,
        purpose: &str,
        digest: &str,
        cache_hit: bool,
        duration_ms: u64,
    ) {
        self.append(TranscriptRecord::Call(BackendCallRecord {
            timestamp: now_ms(),
            kind,
            purpose: purpose.to_string(),
            digest: digest.to_string(),
            cache_hit,
            duration_ms,
        }));
    }

    pub fn record_node_event(&self, node: &str, event: &str, detail: &str) {
        self.append(TranscriptRecord::NodeEvent {
            timestamp: now_ms(),
            node: node.to_string(),
            event: event.to_string(),
            detail: detail.to_string(),
        });
    }

    pub fn record_problem(&self, id: &str) {
        self.append(TranscriptRecord::Problem {
            timestamp: now_ms(),
            id: id.to_string(),
        });
    }

    /// Snapshot of all records appended so far.
    pub fn records(&self) -> Vec<TranscriptRecord> {
        self.inner.lock().expect("transcript lock").records.clone()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("transcript lock").records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn call_stats(&self) -> CallStats {
        call_stats(&self.records())
    }

    /// Parse a transcript file back into records (replay input).
    pub fn load(path: &Path) -> Result<Vec<TranscriptRecord>> {
        let file = File::open(path)?;
        let mut records = Vec::new();
        for line in BufReader::new(file).lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            records.push(serde_json::from_str(&line)?);
        }
        Ok(records)
    }
}

/// Aggregate call accounting over a record list.
pub fn call_stats(records: &[TranscriptRecord]) -> CallStats {
    let mut stats = CallStats {
        total: 0,
        hits: 0,
        misses: 0,
        hit_ratio: 0.0,
        per_purpose: BTreeMap::new(),
        per_kind: BTreeMap::new(),
        llm_misses: 0,
        retrieval_calls: 0,
        compiler_calls: 0,
        problems: 0,
        mean_llm_misses_per_problem: 0.0,
    };
    for record in records {
        match record {
            TranscriptRecord::Call(call) => {
                stats.total += 1;
                if call.cache_hit {
                    stats.hits += 1;
                } else {
                    stats.misses += 1;
                }
                *stats.per_purpose.entry(call.purpose.clone()).or_insert(0) += 1;
                *stats
                    .per_kind
                    .entry(call.kind.name().to_string())
                    .or_insert(0) += 1;
                match call.kind {
                    BackendKind::Llm => {
                        if !call.cache_hit {
                            stats.llm_misses += 1;
                        }
                    }
                    BackendKind::Retrieval => stats.retrieval_calls += 1,
                    BackendKind::Compiler => stats.compiler_calls += 1,
                    BackendKind::TermIndex => {}
                }
            }
            TranscriptRecord::Problem { .. } => stats.problems += 1,
            _ => {}
        }
    }
    if stats.total > 0 {
        stats.hit_ratio = stats.hits as f64 / stats.total as f64;
    }
    if stats.problems > 0 {
        stats.mean_llm_misses_per_problem = stats.llm_misses as f64 / stats.problems as f64;
    }
    stats
}
