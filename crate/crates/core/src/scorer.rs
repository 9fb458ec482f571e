//! Term-grounded semantic scorer: decompose the informal statement into
//! subtasks, ground every formal term in an informalized library index,
//! evaluate each subtask to a three-way label, aggregate to a score in [0,1],
//! and compare against the acceptance threshold α.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::Path;
use std::process::{Command, Stdio};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::cache::ResponseCache;
use crate::digest::sha256_hex;
use crate::error::{Error, Result};
use crate::graph::InformalStatement;
use crate::llm::{Purpose, Reasoner};
use crate::prompts;
use crate::transcript::{BackendKind, Transcript};

/// Atomic assumptions and conclusions of one informal statement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubtaskList {
    pub conditions: Vec<String>,
    pub conclusions: Vec<String>,
}

impl SubtaskList {
    pub fn len(&self) -> usize {
        self.conditions.len() + self.conclusions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One record of the informalized library index.
///
/// The index file is line-delimited JSON with exactly these six fields; the
/// `known` marker is in-memory state distinguishing real records from
/// unknown-term placeholders.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermInfo {
    pub name: String,
    #[serde(default)]
    pub kind: String,
    #[serde(rename = "type", default)]
    pub type_sig: String,
    #[serde(default)]
    pub value: String,
    #[serde(default)]
    pub informal_name: String,
    #[serde(default)]
    pub informal_description: String,
    #[serde(default = "default_true", skip_serializing_if = "is_true")]
    pub known: bool,
}

fn default_true() -> bool {
    true
}

#[allow(clippy::trivially_copy_pass_by_ref)]
fn is_true(b: &bool) -> bool {
    *b
}

impl TermInfo {
    /// Placeholder for a name absent from the index; preserved so the
    /// evaluator can flag unknown terms instead of hallucinating about them.
    pub fn unknown(name: &str) -> Self {
        Self {
            name: name.to_string(),
            kind: String::new(),
            type_sig: String::new(),
            value: String::new(),
            informal_name: String::new(),
            informal_description: String::new(),
            known: false,
        }
    }
}

/// Three-way verdict for one subtask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchLabel {
    PerfectMatch,
    MinorInconsistency,
    MajorInconsistency,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubtaskReport {
    pub subtask: String,
    pub label: MatchLabel,
    pub justification: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub score: f64,
    pub reports: Vec<SubtaskReport>,
    pub alpha: f64,
    pub accepted: bool,
}

/// The peer subtask appended to every evaluation.
pub const MISSING_CHECK: &str = "Check for missing conditions / implicit conditions";

/// Exact-name lookup table over the informalized library index.
#[derive(Debug, Clone)]
pub struct TermIndex {
    map: BTreeMap<String, TermInfo>,
    digest: String,
}

impl TermIndex {
    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let info: TermInfo = serde_json::from_str(line)
                .map_err(|e| Error::parse("term index", format!("line {}: {e}", i + 1)))?;
            if info.name.is_empty() {
                return Err(Error::parse(
                    "term index",
                    format!("line {}: empty name", i + 1),
                ));
            }
            map.insert(info.name.clone(), info);
        }
        Ok(Self {
            map,
            digest: sha256_hex(text.as_bytes()),
        })
    }

    pub fn from_jsonl_file(path: &Path) -> Result<Self> {
        Self::from_jsonl(&std::fs::read_to_string(path)?)
    }

    pub fn empty() -> Self {
        Self {
            map: BTreeMap::new(),
            digest: sha256_hex(b""),
        }
    }

    pub fn get(&self, name: &str) -> Option<&TermInfo> {
        self.map.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.map.contains_key(name)
    }

    pub fn records(&self) -> impl Iterator<Item = &TermInfo> {
        self.map.values()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Digest of the index file content; recorded in transcript headers.
    pub fn digest(&self) -> &str {
        &self.digest
    }
}

/// External term analyzer: a command reading formal source on stdin and
/// writing one qualified identifier per line. Output is cached by digest so
/// replays never re-run the process.
pub struct AnalyzerGateway {
    command: String,
    cache: ResponseCache,
    transcript: Transcript,
    replay: bool,
}

impl AnalyzerGateway {
    pub fn new(command: impl Into<String>, cache: ResponseCache, transcript: Transcript) -> Self {
        Self {
            command: command.into(),
            cache,
            transcript,
            replay: false,
        }
    }

    pub fn replay(mut self, enabled: bool) -> Self {
        self.replay = enabled;
        self
    }

    pub fn extract(&self, source: &str) -> Result<Vec<String>> {
        let canonical = serde_json::json!({
            "backend": format!("analyzer:{}", self.command),
            "source": source,
        })
        .to_string();
        let digest = sha256_hex(canonical.as_bytes());
        let start = std::time::Instant::now();
        if let Some(raw) = self.cache.get(&digest)? {
            self.transcript.record_call(
                BackendKind::TermIndex,
                "extract-terms",
                &digest,
                true,
                start.elapsed().as_millis() as u64,
            );
            return Ok(decode_names(&raw));
        }
        if self.replay {
            return Err(Error::CacheMiss { digest });
        }
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&self.command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| Error::backend_unavailable("analyzer", e.to_string()))?;
        // A command that never reads stdin (closing it early) is fine; only
        // report real write failures.
        match child
            .stdin
            .take()
            .expect("stdin piped")
            .write_all(source.as_bytes())
        {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
            Err(e) => return Err(Error::backend_unavailable("analyzer", e.to_string())),
        }
        let output = child
            .wait_with_output()
            .map_err(|e| Error::backend_unavailable("analyzer", e.to_string()))?;
        if !output.status.success() {
            return Err(Error::backend_unavailable(
                "analyzer",
                format!("exit status {}", output.status),
            ));
        }
        let raw = String::from_utf8_lossy(&output.stdout).into_owned();
        self.cache.put(&digest, &raw)?;
        self.transcript.record_call(
            BackendKind::TermIndex,
            "extract-terms",
            &digest,
            false,
            start.elapsed().as_millis() as u64,
        );
        Ok(decode_names(&raw))
    }
}

fn decode_names(raw: &str) -> Vec<String> {
    let mut out = Vec::new();
    for line in raw.lines() {
        let name = line.trim();
        if !name.is_empty() && !out.iter().any(|n| n == name) {
            out.push(name.to_string());
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Subtask decomposition
// ---------------------------------------------------------------------------

/// Parse a sectioned "Conditions:" / "Conclusions:" response. Returns `None`
/// when no subtask at all can be read.
pub fn parse_subtasks(text: &str) -> Option<SubtaskList> {
    #[derive(PartialEq, Clone, Copy)]
    enum Section {
        None,
        Conditions,
        Conclusions,
    }
    let mut section = Section::None;
    let mut conditions = Vec::new();
    let mut conclusions = Vec::new();
    static ITEM: OnceLock<Regex> = OnceLock::new();
    let item = ITEM.get_or_init(|| Regex::new(r"^\s*(?:\d+[.)]|[-*•])\s*(.+)$").expect("regex"));
    for line in text.lines() {
        let bare = line
            .trim()
            .trim_start_matches(['#', '*'])
            .trim_end_matches('*')
            .trim();
        let lower = bare.to_lowercase();
        let header = if lower.starts_with("condition") && bare.contains(':') {
            Some(Section::Conditions)
        } else if lower.starts_with("conclusion") && bare.contains(':') {
            Some(Section::Conclusions)
        } else {
            None
        };
        if let Some(next) = header {
            section = next;
            // Single-item style: "Condition: Let R be ..." carries the item
            // on the header line itself.
            let tail = bare.split_once(':').map_or("", |(_, t)| t).trim();
            if !tail.is_empty() {
                match section {
                    Section::Conditions => conditions.push(tail.to_string()),
                    Section::Conclusions => conclusions.push(tail.to_string()),
                    Section::None => {}
                }
            }
            continue;
        }
        if section == Section::None {
            continue;
        }
        if let Some(cap) = item.captures(line) {
            let text = cap[1].trim().to_string();
            match section {
                Section::Conditions => conditions.push(text),
                Section::Conclusions => conclusions.push(text),
                Section::None => {}
            }
        }
    }
    if conditions.is_empty() && conclusions.is_empty() {
        None
    } else {
        Some(SubtaskList {
            conditions,
            conclusions,
        })
    }
}

/// Decompose a statement into atomic conditions and conclusions via the LLM;
/// one re-prompt on unparseable output, then an error.
pub fn decompose_subtasks(
    informal: &InformalStatement,
    reasoner: &Reasoner,
) -> Result<SubtaskList> {
    let messages = prompts::scorer_decompose(&informal.text);
    let first = reasoner.ask(Purpose::ScorerDecompose, messages.clone())?;
    if let Some(list) = parse_subtasks(&first.text) {
        return Ok(list);
    }
    let retry = prompts::with_reprompt(messages, &first.text, prompts::SUBTASK_FORMAT_REMINDER);
    let second = reasoner.ask(Purpose::ScorerDecompose, retry)?;
    parse_subtasks(&second.text).ok_or_else(|| Error::ScorerFailed {
        detail: format!(
            "no conditions or conclusions parsed after re-prompt for statement {}",
            informal.id
        ),
    })
}

// ---------------------------------------------------------------------------
// Term extraction and grounding
// ---------------------------------------------------------------------------

const KEYWORDS: &[&str] = &[
    "theorem", "lemma", "def", "abbrev", "instance", "structure", "class", "inductive",
    "where", "deriving", "import", "open", "namespace", "section", "end", "variable",
    "variables", "let", "fun", "match", "with", "if", "then", "else", "do", "by", "sorry",
    "have", "show", "from", "exact", "intro", "apply", "calc", "at", "in", "noncomputable",
    "local", "private", "protected", "universe", "axiom", "example", "mutual", "partial",
    "this", "attribute", "set_option", "Type", "Prop", "Sort", "Exists", "Nonempty",
];

/// Identifiers bound locally in the source: binder names `(x y : T)`,
/// `{x : T}`, `[inst : T]`, quantifier binders, and declaration names.
fn bound_locals(source: &str) -> Vec<String> {
    static BINDER: OnceLock<Regex> = OnceLock::new();
    static QUANT: OnceLock<Regex> = OnceLock::new();
    static DECL: OnceLock<Regex> = OnceLock::new();
    let binder = BINDER.get_or_init(|| {
        Regex::new(r"[(\[{]\s*([A-Za-z_][A-Za-z0-9_']*(?:\s+[A-Za-z_][A-Za-z0-9_']*)*)\s*:[^=]")
            .expect("regex")
    });
    let quant = QUANT.get_or_init(|| Regex::new(r"[∀∃λ]\s*([^,.:]+)[,.:]").expect("regex"));
    let decl = DECL.get_or_init(|| {
        Regex::new(
            r"\b(?:def|abbrev|theorem|lemma|instance|structure|class|let)\s+([A-Za-z_][A-Za-z0-9_']*)",
        )
        .expect("regex")
    });
    let mut locals = Vec::new();
    for cap in binder.captures_iter(source) {
        for name in cap[1].split_whitespace() {
            locals.push(name.to_string());
        }
    }
    for cap in quant.captures_iter(source) {
        for tok in cap[1].split_whitespace() {
            if tok.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_') {
                locals.push(tok.trim_matches(|c: char| !c.is_ascii_alphanumeric() && c != '_' && c != '\'').to_string());
            }
        }
    }
    for cap in decl.captures_iter(source) {
        locals.push(cap[1].to_string());
    }
    locals
}

/// Fallback lexical term extractor: dotted identifier chains plus capitalized
/// identifiers, minus keywords and statement-bound locals, deduplicated,
/// restricted to names the index knows.
pub fn lexical_terms(source: &str, index: &TermIndex) -> Vec<String> {
    static DOTTED: OnceLock<Regex> = OnceLock::new();
    static CAPITALIZED: OnceLock<Regex> = OnceLock::new();
    let dotted = DOTTED.get_or_init(|| {
        Regex::new(r"[A-Za-z_][A-Za-z0-9_']*(?:\.[A-Za-z_][A-Za-z0-9_']*)+").expect("regex")
    });
    let capitalized =
        CAPITALIZED.get_or_init(|| Regex::new(r"\b[A-Z][A-Za-z0-9_']*\b").expect("regex"));
    let locals = bound_locals(source);
    let is_local = |name: &str| {
        let head = name.split('.').next().unwrap_or(name);
        locals.iter().any(|l| l == head)
    };
    let mut names: Vec<String> = Vec::new();
    let mut push = |name: &str| {
        if KEYWORDS.contains(&name) || is_local(name) {
            return;
        }
        if !names.iter().any(|n| n == name) {
            names.push(name.to_string());
        }
    };
    // Scan dotted chains first, then blank them out so their components are
    // not re-collected as capitalized identifiers.
    let mut residue = source.to_string();
    for m in dotted.find_iter(source) {
        push(m.as_str());
        residue = residue.replace(m.as_str(), " ");
    }
    for m in capitalized.find_iter(&residue) {
        push(m.as_str());
    }
    names.retain(|n| index.contains(n));
    names
}

/// Term list for a formal source: the external analyzer verbatim when
/// configured, otherwise the fallback lexical extractor.
pub fn extract_terms(
    source: &str,
    analyzer: Option<&AnalyzerGateway>,
    index: &TermIndex,
) -> Result<Vec<String>> {
    match analyzer {
        Some(gateway) => gateway.extract(source),
        None => Ok(lexical_terms(source, index)),
    }
}

/// Exact-name lookup; unknown names yield marker records so the evaluator
/// sees them flagged rather than described.
pub fn ground_terms(names: &[String], index: &TermIndex) -> Vec<TermInfo> {
    names
        .iter()
        .map(|name| match index.get(name) {
            Some(info) => info.clone(),
            None => TermInfo::unknown(name),
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

fn classify_label(tail: &str) -> Option<MatchLabel> {
    let t = tail.to_lowercase();
    // Fail-closed ordering: a tail mentioning several grades reads as the
    // most severe one.
    if t.contains("major") {
        Some(MatchLabel::MajorInconsistency)
    } else if t.contains("minor") {
        Some(MatchLabel::MinorInconsistency)
    } else if t.contains("perfect") {
        Some(MatchLabel::PerfectMatch)
    } else {
        None
    }
}

/// All `Match: <label>.` lines of a response, in order, with the same-line
/// justification tail.
pub fn parse_match_lines(text: &str) -> Vec<(MatchLabel, String)> {
    let mut out = Vec::new();
    for line in text.lines() {
        let bare = line.trim_start_matches(|c: char| {
            c.is_whitespace() || c.is_ascii_digit() || "().*•-]".contains(c)
        });
        let lower = bare.to_lowercase();
        if !lower.starts_with("match") {
            continue;
        }
        let Some((_, tail)) = bare.split_once(':') else {
            continue;
        };
        if let Some(label) = classify_label(tail) {
            let justification = tail
                .split_once('.')
                .map(|(_, j)| j.trim().to_string())
                .unwrap_or_default();
            out.push((label, justification));
        }
    }
    out
}

/// Evaluate every subtask plus the missing-conditions check to a label.
/// Unparseable output triggers one re-prompt; still-missing labels default
/// to MajorInconsistency (fail closed).
pub fn evaluate(
    informal: &InformalStatement,
    formal_source: &str,
    subtasks: &SubtaskList,
    terms: Option<&[TermInfo]>,
    reasoner: &Reasoner,
) -> Result<Vec<SubtaskReport>> {
    let mut texts: Vec<String> = subtasks.conditions.clone();
    texts.extend(subtasks.conclusions.iter().cloned());
    texts.push(MISSING_CHECK.to_string());
    let expected = texts.len();

    let messages = prompts::scorer_evaluate(&informal.text, formal_source, subtasks, terms);
    let first = reasoner.ask(Purpose::ScorerEvaluate, messages.clone())?;
    let mut parsed = parse_match_lines(&first.text);
    if parsed.len() < expected {
        let retry = prompts::with_reprompt(messages, &first.text, prompts::MATCH_FORMAT_REMINDER);
        let second = reasoner.ask(Purpose::ScorerEvaluate, retry)?;
        let reparsed = parse_match_lines(&second.text);
        if reparsed.len() > parsed.len() {
            parsed = reparsed;
        }
    }
    parsed.truncate(expected);
    while parsed.len() < expected {
        parsed.push((
            MatchLabel::MajorInconsistency,
            "unparseable evaluation output".to_string(),
        ));
    }
    Ok(texts
        .into_iter()
        .zip(parsed)
        .map(|(subtask, (label, justification))| SubtaskReport {
            subtask,
            label,
            justification,
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Aggregation and decision
// ---------------------------------------------------------------------------

/// Any major inconsistency forces 0; otherwise the score decays as λ^m over
/// m minor inconsistencies, so all-perfect is exactly 1.
pub fn aggregate(labels: &[MatchLabel], lambda: f64) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::InvalidRequest {
            detail: "cannot aggregate an empty label list".to_string(),
        });
    }
    if labels.contains(&MatchLabel::MajorInconsistency) {
        return Ok(0.0);
    }
    let minors = labels
        .iter()
        .filter(|l| **l == MatchLabel::MinorInconsistency)
        .count();
    Ok(lambda.powi(minors as i32))
}

/// Strict threshold: accepted iff score > alpha, so α = 0 still rejects
/// major-error (zero-score) cases.
pub fn decide(score: f64, alpha: f64) -> bool {
    score > alpha
}

/// Scoring knobs; `term_grounding = false` is the ungrounded baseline
/// configuration.
#[derive(Debug, Clone)]
pub struct ScorerConfig {
    pub alpha: f64,
    pub lambda: f64,
    pub term_grounding: bool,
}

impl Default for ScorerConfig {
    fn default() -> Self {
        Self {
            alpha: 0.9,
            lambda: 0.8,
            term_grounding: true,
        }
    }
}

/// Full scoring pipeline: decompose → extract → ground → evaluate →
/// aggregate → decide.
pub fn score_statement(
    informal: &InformalStatement,
    formal_source: &str,
    reasoner: &Reasoner,
    index: Option<&TermIndex>,
    analyzer: Option<&AnalyzerGateway>,
    cfg: &ScorerConfig,
) -> Result<ScoreReport> {
    informal.validate()?;
    let subtasks = decompose_subtasks(informal, reasoner)?;
    let terms: Option<Vec<TermInfo>> = if cfg.term_grounding {
        let index = index.ok_or_else(|| {
            Error::config("term_index", "required unless term grounding is disabled")
        })?;
        let names = extract_terms(formal_source, analyzer, index)?;
        Some(ground_terms(&names, index))
    } else {
        None
    };
    let reports = evaluate(informal, formal_source, &subtasks, terms.as_deref(), reasoner)?;
    let labels: Vec<MatchLabel> = reports.iter().map(|r| r.label).collect();
    let score = aggregate(&labels, cfg.lambda)?;
    Ok(ScoreReport {
        score,
        reports,
        alpha: cfg.alpha,
        accepted: decide(score, cfg.alpha),
    })
}
