//! Ground a concept in the formal library: query the search backend for
//! ranked candidates, then have the LLM reasoner select the canonical
//! definition or declare the concept ungrounded.

use std::path::Path;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::cache::ResponseCache;
use crate::digest::sha256_hex;
use crate::error::{Error, Result};
use crate::graph::{DependencyGraph, NodeId, NodeStatus};
use crate::llm::{Purpose, Reasoner};
use crate::prompts;
use crate::scorer::{TermIndex, TermInfo};
use crate::transcript::{BackendKind, Transcript};

/// One ranked retrieval hit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundingCandidate {
    pub formal_name: String,
    pub formal_statement: String,
    pub informal_description: String,
    /// 1-based; contiguous within one result set.
    pub rank: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relevance: Option<f64>,
}

/// Outcome of canonical-definition selection.
#[derive(Debug, Clone, PartialEq)]
pub enum GroundingResult {
    Grounded(GroundingCandidate),
    Ungrounded(String),
}

/// Wire record for retrieval responses: request {query, k} returns an array
/// of these.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RetrievalHit {
    pub formal_name: String,
    #[serde(default)]
    pub formal_statement: String,
    #[serde(default)]
    pub informal_description: String,
    #[serde(default)]
    pub score: Option<f64>,
}

/// A candidate search service. `search_raw` returns the raw JSON payload
/// (an array of [`RetrievalHit`]), which is what gets cached.
pub trait RetrievalBackend: Send + Sync {
    fn id(&self) -> &str;
    fn search_raw(&self, query: &str, k: usize) -> Result<String>;
}

/// Offline lexical stand-in for the embedding search service, built over the
/// same informalized records as the term index.
///
/// Score = count of distinct shared tokens between the query and the record's
/// informal name + description; ties break by shorter formal name, then
/// lexicographic.
pub struct LocalIndex {
    records: Vec<TermInfo>,
    digest: String,
    id: String,
}

fn tokens(text: &str) -> Vec<String> {
    static TOKEN: OnceLock<Regex> = OnceLock::new();
    let token = TOKEN.get_or_init(|| Regex::new(r"[a-z0-9']+").expect("regex"));
    let lower = text.to_lowercase();
    let mut out: Vec<String> = Vec::new();
    for m in token.find_iter(&lower) {
        if !out.iter().any(|t| t == m.as_str()) {
            out.push(m.as_str().to_string());
        }
    }
    out
}

/// Distinct shared tokens between query and record document text.
pub fn overlap_score(query: &str, record: &TermInfo) -> usize {
    let doc = format!("{} {}", record.informal_name, record.informal_description);
    let doc_tokens = tokens(&doc);
    tokens(query)
        .iter()
        .filter(|t| doc_tokens.contains(t))
        .count()
}

impl LocalIndex {
    pub fn from_term_index(index: &TermIndex) -> Self {
        let records: Vec<TermInfo> = index.records().cloned().collect();
        let digest = index.digest().to_string();
        Self {
            id: format!("local-index:{}", &digest[..16]),
            records,
            digest,
        }
    }

    pub fn from_jsonl_file(path: &Path) -> Result<Self> {
        Ok(Self::from_term_index(&TermIndex::from_jsonl_file(path)?))
    }

    pub fn digest(&self) -> &str {
        &self.digest
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

impl RetrievalBackend for LocalIndex {
    fn id(&self) -> &str {
        &self.id
    }

    fn search_raw(&self, query: &str, k: usize) -> Result<String> {
        let mut scored: Vec<(usize, &TermInfo)> = self
            .records
            .iter()
            .map(|r| (overlap_score(query, r), r))
            .filter(|(s, _)| *s > 0)
            .collect();
        scored.sort_by(|(sa, a), (sb, b)| {
            sb.cmp(sa)
                .then(a.name.len().cmp(&b.name.len()))
                .then(a.name.cmp(&b.name))
        });
        let hits: Vec<RetrievalHit> = scored
            .into_iter()
            .take(k)
            .map(|(s, r)| RetrievalHit {
                formal_name: r.name.clone(),
                formal_statement: if r.type_sig.is_empty() {
                    r.value.clone()
                } else {
                    r.type_sig.clone()
                },
                informal_description: if r.informal_description.is_empty() {
                    r.informal_name.clone()
                } else {
                    r.informal_description.clone()
                },
                score: Some(s as f64),
            })
            .collect();
        Ok(serde_json::to_string(&hits)?)
    }
}

/// Remote retrieval endpoint: POST {query, k} returning a JSON hit array.
pub struct HttpRetrieval {
    id: String,
    url: String,
    client: reqwest::blocking::Client,
}

impl HttpRetrieval {
    pub fn new(url: &str, timeout: Duration) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| Error::backend_unavailable("retrieval", e.to_string()))?;
        Ok(Self {
            id: format!("http:{url}"),
            url: url.to_string(),
            client,
        })
    }
}

impl RetrievalBackend for HttpRetrieval {
    fn id(&self) -> &str {
        &self.id
    }

    fn search_raw(&self, query: &str, k: usize) -> Result<String> {
        let resp = self
            .client
            .post(&self.url)
            .json(&serde_json::json!({ "query": query, "k": k }))
            .send()
            .map_err(|e| Error::backend_unavailable("retrieval", e.to_string()))?;
        let status = resp.status();
        let text = resp
            .text()
            .map_err(|e| Error::backend_unavailable("retrieval", e.to_string()))?;
        if !status.is_success() {
            return Err(Error::backend_unavailable(
                "retrieval",
                format!("status {status}"),
            ));
        }
        Ok(text)
    }
}

/// Cache-backed, transcript-logging front door for retrieval calls.
pub struct RetrievalGateway {
    backend: Box<dyn RetrievalBackend>,
    cache: ResponseCache,
    transcript: Transcript,
    replay: bool,
}

impl RetrievalGateway {
    pub fn new(
        backend: Box<dyn RetrievalBackend>,
        cache: ResponseCache,
        transcript: Transcript,
    ) -> Self {
        Self {
            backend,
            cache,
            transcript,
            replay: false,
        }
    }

    pub fn replay(mut self, enabled: bool) -> Self {
        self.replay = enabled;
        self
    }

    /// Ranked candidates for a query: at most k, deduplicated by formal name,
    /// ranks contiguous from 1.
    pub fn search(&self, query: &str, k: usize) -> Result<Vec<GroundingCandidate>> {
        let canonical = serde_json::json!({
            "backend": self.backend.id(),
            "k": k,
            "query": query,
        })
        .to_string();
        let digest = sha256_hex(canonical.as_bytes());
        let start = Instant::now();
        let (raw, hit) = match self.cache.get(&digest)? {
            Some(raw) => (raw, true),
            None => {
                if self.replay {
                    return Err(Error::CacheMiss { digest });
                }
                let raw = self.backend.search_raw(query, k)?;
                self.cache.put(&digest, &raw)?;
                (raw, false)
            }
        };
        self.transcript.record_call(
            BackendKind::Retrieval,
            "search",
            &digest,
            hit,
            start.elapsed().as_millis() as u64,
        );
        let hits: Vec<RetrievalHit> =
            serde_json::from_str(&raw).map_err(|e| Error::malformed(e.to_string()))?;
        let mut out: Vec<GroundingCandidate> = Vec::new();
        for h in hits {
            if out.iter().any(|c| c.formal_name == h.formal_name) {
                continue;
            }
            if out.len() == k {
                break;
            }
            out.push(GroundingCandidate {
                formal_name: h.formal_name,
                formal_statement: h.formal_statement,
                informal_description: h.informal_description,
                rank: out.len() as u32 + 1,
                relevance: h.score,
            });
        }
        Ok(out)
    }
}

fn candidate_ranks_contiguous(candidates: &[GroundingCandidate]) -> bool {
    candidates
        .iter()
        .enumerate()
        .all(|(i, c)| c.rank == i as u32 + 1)
}

/// Ask the reasoner to pick the single canonical definition from a ranked
/// candidate list, or decline with NONE. One re-prompt on unparseable output,
/// then a conservative Ungrounded.
pub fn select_canonical(
    name: &str,
    gloss: &str,
    candidates: &[GroundingCandidate],
    reasoner: &Reasoner,
) -> Result<GroundingResult> {
    if candidates.is_empty() {
        return Ok(GroundingResult::Ungrounded("no candidates".to_string()));
    }
    if !candidate_ranks_contiguous(candidates) {
        return Err(Error::InvalidRequest {
            detail: "candidate ranks must be contiguous from 1".to_string(),
        });
    }
    let messages = prompts::ground_select(name, gloss, candidates);
    let first = reasoner.ask(Purpose::GroundSelect, messages.clone())?;
    if let Some(result) = parse_selection(&first.text, candidates) {
        return Ok(result);
    }
    let retry = prompts::with_reprompt(messages, &first.text, prompts::SELECT_FORMAT_REMINDER);
    let second = reasoner.ask(Purpose::GroundSelect, retry)?;
    Ok(parse_selection(&second.text, candidates)
        .unwrap_or_else(|| GroundingResult::Ungrounded("unparseable".to_string())))
}

fn parse_selection(text: &str, candidates: &[GroundingCandidate]) -> Option<GroundingResult> {
    let trimmed = text.trim();
    if trimmed.to_uppercase().contains("NONE") {
        return Some(GroundingResult::Ungrounded("reasoner declined".to_string()));
    }
    static INT: OnceLock<Regex> = OnceLock::new();
    let int = INT.get_or_init(|| Regex::new(r"\d+").expect("regex"));
    let n: usize = int.find(trimmed)?.as_str().parse().ok()?;
    if n >= 1 && n <= candidates.len() {
        Some(GroundingResult::Grounded(candidates[n - 1].clone()))
    } else {
        None
    }
}

/// Ground one Pending node. With retrieval configured: search then select.
/// Without it (no-RAG ablation): ask the LLM to recall a library name, which
/// is accepted verbatim without verification. The node ends Grounded,
/// NeedsSynthesis, or Failed (backend errors are absorbed into the status,
/// except a replay cache miss, which aborts: degrading would diverge from
/// the recorded run and mask the digest that is actually absent).
pub fn ground(
    graph: &mut DependencyGraph,
    id: &NodeId,
    reasoner: &Reasoner,
    retrieval: Option<&RetrievalGateway>,
    k: usize,
    transcript: &Transcript,
) -> Result<NodeStatus> {
    let node = graph.node(id)?;
    debug_assert_eq!(node.status, NodeStatus::Pending, "ground() wants Pending");
    let name = node.concept.name.clone();
    let gloss = node.concept.gloss.clone();

    let outcome = match retrieval {
        Some(gateway) => gateway
            .search(&name, k)
            .and_then(|candidates| select_canonical(&name, &gloss, &candidates, reasoner)),
        None => recall_name(&name, &gloss, reasoner),
    };

    match outcome {
        Ok(GroundingResult::Grounded(candidate)) => {
            transcript.record_node_event(id.as_str(), "grounded", &candidate.formal_name);
            graph.set_grounded(id, candidate)?;
            Ok(NodeStatus::Grounded)
        }
        Ok(GroundingResult::Ungrounded(reason)) => {
            transcript.record_node_event(id.as_str(), "needs-synthesis", &reason);
            graph.set_needs_synthesis(id)?;
            Ok(NodeStatus::NeedsSynthesis)
        }
        Err(e @ Error::CacheMiss { .. }) => Err(e),
        Err(e) => {
            let reason = e.to_string();
            transcript.record_node_event(id.as_str(), "failed", &reason);
            graph.set_failed(id, reason)?;
            Ok(NodeStatus::Failed)
        }
    }
}

/// No-RAG recall: the reasoner names a library definition from memory.
fn recall_name(name: &str, gloss: &str, reasoner: &Reasoner) -> Result<GroundingResult> {
    let resp = reasoner.ask(Purpose::GroundSelect, prompts::ground_recall(name, gloss))?;
    let answer = resp.text.trim();
    let first_line = answer.lines().next().unwrap_or("").trim();
    if first_line.is_empty() || first_line.eq_ignore_ascii_case("none") {
        return Ok(GroundingResult::Ungrounded("reasoner declined".to_string()));
    }
    Ok(GroundingResult::Grounded(GroundingCandidate {
        formal_name: first_line.to_string(),
        formal_statement: String::new(),
        informal_description: "recalled without verification".to_string(),
        rank: 1,
        relevance: None,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Concept;
    use crate::llm::{LlmGateway, LlmProfile, ScriptedLlm};
    use std::sync::Arc;

    fn record(name: &str, informal_name: &str, description: &str) -> String {
        serde_json::json!({
            "name": name,
            "kind": "definition",
            "type": format!("{name} : Prop"),
            "value": "",
            "informal_name": informal_name,
            "informal_description": description,
        })
        .to_string()
    }

    fn fixture_index() -> TermIndex {
        let lines = [
            record(
                "Ideal.IsPrimary",
                "Primary ideal",
                "An ideal is primary if xy in it forces x in it or some power of y in it.",
            ),
            record(
                "Ideal.IsPrime",
                "Prime ideal",
                "An ideal is prime if xy in it forces x or y in it.",
            ),
            record(
                "Ring",
                "Ring",
                "A set with addition and multiplication satisfying the ring axioms.",
            ),
            record(
                "Ideal",
                "Ideal of a ring",
                "An additive subgroup closed under multiplication by ring elements.",
            ),
        ];
        TermIndex::from_jsonl(&lines.join("\n")).unwrap()
    }

    fn gateway(index: &TermIndex, dir: &Path) -> RetrievalGateway {
        RetrievalGateway::new(
            Box::new(LocalIndex::from_term_index(index)),
            ResponseCache::new(dir).unwrap(),
            Transcript::new(),
        )
    }

    fn reasoner_with(entries: &[(&str, &str)], dir: &Path) -> Reasoner {
        Reasoner::new(
            LlmGateway::new(
                Arc::new(ScriptedLlm::from_pairs(entries)),
                ResponseCache::new(dir).unwrap(),
                Transcript::new(),
            ),
            LlmProfile::new("test-model", 0.0),
        )
    }

    fn candidates(n: u32) -> Vec<GroundingCandidate> {
        (1..=n)
            .map(|rank| GroundingCandidate {
                formal_name: format!("Lib.Def{rank}"),
                formal_statement: format!("Def{rank} : Prop"),
                informal_description: format!("definition {rank}"),
                rank,
                relevance: None,
            })
            .collect()
    }

    #[test]
    fn search_ranks_best_overlap_first() {
        let index = fixture_index();
        let dir = tempfile::tempdir().unwrap();
        let gw = gateway(&index, dir.path());
        let hits = gw.search("primary ideal", 5).unwrap();
        assert_eq!(hits[0].formal_name, "Ideal.IsPrimary");
        assert_eq!(hits[0].rank, 1);
        assert!(candidate_ranks_contiguous(&hits));

        // Brute-force oracle: recompute the argmax with an independent loop
        // over the same scoring definition.
        let mut best: Option<(usize, usize, &TermInfo)> = None; // (score, -, record)
        for r in index.records() {
            let s = overlap_score("primary ideal", r);
            let better = match best {
                None => true,
                Some((bs, blen, brec)) => {
                    s > bs
                        || (s == bs && r.name.len() < blen)
                        || (s == bs && r.name.len() == blen && r.name < brec.name)
                }
            };
            if better {
                best = Some((s, r.name.len(), r));
            }
        }
        assert_eq!(best.unwrap().2.name, hits[0].formal_name);
    }

    #[test]
    fn search_empty_index_returns_empty() {
        let dir = tempfile::tempdir().unwrap();
        let gw = gateway(&TermIndex::empty(), dir.path());
        assert!(gw.search("anything", 5).unwrap().is_empty());
    }

    #[test]
    fn search_truncates_to_k() {
        let index = fixture_index();
        let dir = tempfile::tempdir().unwrap();
        let gw = gateway(&index, dir.path());
        let hits = gw.search("ideal", 1).unwrap();
        assert!(hits.len() <= 1);
    }

    #[test]
    fn search_is_cached() {
        let index = fixture_index();
        let dir = tempfile::tempdir().unwrap();
        let gw = gateway(&index, dir.path());
        let a = gw.search("prime ideal", 3).unwrap();
        let b = gw.search("prime ideal", 3).unwrap();
        assert_eq!(a, b);
        let stats = gw.transcript.call_stats();
        assert_eq!(stats.retrieval_calls, 2);
        assert_eq!(stats.hits, 1);
        // Different k is a different request.
        gw.search("prime ideal", 2).unwrap();
        assert_eq!(gw.transcript.call_stats().hits, 1);
    }

    #[test]
    fn search_dedups_by_formal_name() {
        // A backend that returns duplicates; the gateway must dedup.
        struct Dup;
        impl RetrievalBackend for Dup {
            fn id(&self) -> &str {
                "dup"
            }
            fn search_raw(&self, _q: &str, _k: usize) -> Result<String> {
                Ok(r#"[{"formal_name":"A"},{"formal_name":"A"},{"formal_name":"B"}]"#.to_string())
            }
        }
        let dir = tempfile::tempdir().unwrap();
        let gw = RetrievalGateway::new(
            Box::new(Dup),
            ResponseCache::new(dir.path()).unwrap(),
            Transcript::new(),
        );
        let hits = gw.search("x", 5).unwrap();
        assert_eq!(hits.len(), 2);
        assert_eq!(hits[0].formal_name, "A");
        assert_eq!(hits[1].rank, 2);
    }

    #[test]
    fn select_by_number() {
        let dir = tempfile::tempdir().unwrap();
        let r = reasoner_with(&[("", "2")], dir.path());
        let result = select_canonical("concept", "gloss", &candidates(3), &r).unwrap();
        match result {
            GroundingResult::Grounded(c) => assert_eq!(c.rank, 2),
            other => panic!("expected grounded, got {other:?}"),
        }
    }

    #[test]
    fn select_none_declines() {
        let dir = tempfile::tempdir().unwrap();
        let r = reasoner_with(&[("", "NONE")], dir.path());
        let result = select_canonical("concept", "gloss", &candidates(3), &r).unwrap();
        assert_eq!(
            result,
            GroundingResult::Ungrounded("reasoner declined".to_string())
        );
    }

    #[test]
    fn select_garbage_twice_is_unparseable_with_two_calls() {
        let dir = tempfile::tempdir().unwrap();
        let r = reasoner_with(&[("", "the best is clearly that one"), ("", "hmm")], dir.path());
        let result = select_canonical("concept", "gloss", &candidates(3), &r).unwrap();
        assert_eq!(result, GroundingResult::Ungrounded("unparseable".to_string()));
        assert_eq!(r.gateway.transcript().call_stats().total, 2);
    }

    #[test]
    fn select_out_of_range_reprompts() {
        let dir = tempfile::tempdir().unwrap();
        let r = reasoner_with(&[("", "7"), ("", "1")], dir.path());
        let result = select_canonical("concept", "gloss", &candidates(3), &r).unwrap();
        match result {
            GroundingResult::Grounded(c) => assert_eq!(c.rank, 1),
            other => panic!("expected grounded, got {other:?}"),
        }
    }

    #[test]
    fn select_requires_contiguous_ranks() {
        let dir = tempfile::tempdir().unwrap();
        let r = reasoner_with(&[("", "1")], dir.path());
        let mut cs = candidates(2);
        cs[1].rank = 5;
        assert!(select_canonical("c", "g", &cs, &r).is_err());
    }

    #[test]
    fn ground_composes_search_and_selection() {
        let index = fixture_index();
        let dir = tempfile::tempdir().unwrap();
        let transcript = Transcript::new();
        let gw = RetrievalGateway::new(
            Box::new(LocalIndex::from_term_index(&index)),
            ResponseCache::new(dir.path().join("retrieval")).unwrap(),
            transcript.clone(),
        );
        let r = reasoner_with(&[("primary ideal", "1")], &dir.path().join("llm"));
        let mut graph = DependencyGraph::new(Concept::new("statement", "the statement").unwrap());
        let root = graph.root().clone();
        let id = graph
            .add_node(Concept::new("primary ideal", "an ideal that is primary").unwrap(), Some(&root))
            .unwrap();
        let status = ground(&mut graph, &id, &r, Some(&gw), 5, &transcript).unwrap();
        assert_eq!(status, NodeStatus::Grounded);
        let node = graph.node(&id).unwrap();
        assert_eq!(
            node.grounding.as_ref().unwrap().formal_name,
            "Ideal.IsPrimary"
        );
    }

    #[test]
    fn ground_empty_search_skips_selection() {
        let dir = tempfile::tempdir().unwrap();
        let transcript = Transcript::new();
        let gw = RetrievalGateway::new(
            Box::new(LocalIndex::from_term_index(&TermIndex::empty())),
            ResponseCache::new(dir.path().join("retrieval")).unwrap(),
            transcript.clone(),
        );
        // Script would panic the run if selection were attempted: no entries.
        let r = reasoner_with(&[], &dir.path().join("llm"));
        let mut graph = DependencyGraph::new(Concept::new("statement", "s").unwrap());
        let root = graph.root().clone();
        let id = graph
            .add_node(Concept::new("frobnication", "unknown thing").unwrap(), Some(&root))
            .unwrap();
        let status = ground(&mut graph, &id, &r, Some(&gw), 5, &transcript).unwrap();
        assert_eq!(status, NodeStatus::NeedsSynthesis);
        assert_eq!(r.gateway.transcript().call_stats().total, 0);
    }

    #[test]
    fn no_rag_recall_accepted_verbatim_with_zero_retrieval_records() {
        let dir = tempfile::tempdir().unwrap();
        let transcript = Transcript::new();
        let r = Reasoner::new(
            LlmGateway::new(
                Arc::new(ScriptedLlm::from_pairs(&[("", "Mathlib.RingTheory.Nilpotent")])),
                ResponseCache::new(dir.path()).unwrap(),
                transcript.clone(),
            ),
            LlmProfile::new("test-model", 0.0),
        );
        let mut graph = DependencyGraph::new(Concept::new("statement", "s").unwrap());
        let root = graph.root().clone();
        let id = graph
            .add_node(Concept::new("nil ideal", "ideal of nilpotents").unwrap(), Some(&root))
            .unwrap();
        let status = ground(&mut graph, &id, &r, None, 5, &transcript).unwrap();
        assert_eq!(status, NodeStatus::Grounded);
        let node = graph.node(&id).unwrap();
        assert_eq!(
            node.grounding.as_ref().unwrap().formal_name,
            "Mathlib.RingTheory.Nilpotent"
        );
        let stats = transcript.call_stats();
        assert_eq!(stats.retrieval_calls, 0);
        assert_eq!(stats.llm_misses, 1);
    }

    #[test]
    fn backend_error_marks_node_failed() {
        struct Broken;
        impl RetrievalBackend for Broken {
            fn id(&self) -> &str {
                "broken"
            }
            fn search_raw(&self, _q: &str, _k: usize) -> Result<String> {
                Err(Error::backend_unavailable("retrieval", "connection refused"))
            }
        }
        let dir = tempfile::tempdir().unwrap();
        let transcript = Transcript::new();
        let gw = RetrievalGateway::new(
            Box::new(Broken),
            ResponseCache::new(dir.path().join("retrieval")).unwrap(),
            transcript.clone(),
        );
        let r = reasoner_with(&[], &dir.path().join("llm"));
        let mut graph = DependencyGraph::new(Concept::new("statement", "s").unwrap());
        let root = graph.root().clone();
        let id = graph
            .add_node(Concept::new("ring", "a ring").unwrap(), Some(&root))
            .unwrap();
        let status = ground(&mut graph, &id, &r, Some(&gw), 5, &transcript).unwrap();
        assert_eq!(status, NodeStatus::Failed);
        assert!(graph
            .node(&id)
            .unwrap()
            .failure
            .as_ref()
            .unwrap()
            .contains("unavailable"));
    }

    #[test]
    fn replay_mode_misses_name_digest() {
        let index = fixture_index();
        let dir = tempfile::tempdir().unwrap();
        let gw = RetrievalGateway::new(
            Box::new(LocalIndex::from_term_index(&index)),
            ResponseCache::new(dir.path()).unwrap(),
            Transcript::new(),
        )
        .replay(true);
        match gw.search("prime ideal", 3).unwrap_err() {
            Error::CacheMiss { digest } => assert_eq!(digest.len(), 64),
            other => panic!("expected CacheMiss, got {other}"),
        }
    }
}
