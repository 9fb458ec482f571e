//! Provider-agnostic gateway to chat-completion style LLM backends with
//! content-addressed response caching, call accounting and transcript logging.
//!
//! Backends return the raw wire payload; the gateway caches that payload
//! keyed by a canonical request digest and decodes it on the way out, so a
//! warm cache replays byte-identically.

use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::cache::ResponseCache;
use crate::digest::sha256_hex;
use crate::error::{Error, Result};
use crate::transcript::{BackendKind, Transcript};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

/// What pipeline stage a request serves; recorded per call for accounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Purpose {
    Decompose,
    GroundSelect,
    Synthesize,
    Reflect,
    ScorerDecompose,
    ScorerEvaluate,
}

impl Purpose {
    pub fn name(self) -> &'static str {
        match self {
            Purpose::Decompose => "decompose",
            Purpose::GroundSelect => "ground-select",
            Purpose::Synthesize => "synthesize",
            Purpose::Reflect => "reflect",
            Purpose::ScorerDecompose => "scorer-decompose",
            Purpose::ScorerEvaluate => "scorer-evaluate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LlmRequest {
    pub messages: Vec<ChatMessage>,
    pub model: String,
    pub temperature: f64,
    pub purpose: Purpose,
}

impl LlmRequest {
    pub fn new(purpose: Purpose, model: &str, temperature: f64, messages: Vec<ChatMessage>) -> Self {
        Self {
            messages,
            model: model.to_string(),
            temperature,
            purpose,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.messages.is_empty() {
            return Err(Error::InvalidRequest {
                detail: "message list is empty".to_string(),
            });
        }
        if self.messages.last().map(|m| m.role) != Some(Role::User) {
            return Err(Error::InvalidRequest {
                detail: "last message must have user role".to_string(),
            });
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(Error::InvalidRequest {
                detail: format!("temperature must be ≥ 0, got {}", self.temperature),
            });
        }
        Ok(())
    }

    /// All message contents joined; what scripted matchers run against.
    pub fn prompt_text(&self) -> String {
        self.messages
            .iter()
            .map(|m| m.content.as_str())
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LlmResponse {
    pub text: String,
    pub from_cache: bool,
    pub usage: Option<TokenUsage>,
}

/// Payload decoded from the raw wire response.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub text: String,
    pub usage: Option<TokenUsage>,
}

/// Canonical JSON for a request: fixed field set, keys sorted by the JSON
/// serializer, no insignificant whitespace.
pub fn canonical_request(backend_id: &str, request: &LlmRequest) -> String {
    let messages: Vec<serde_json::Value> = request
        .messages
        .iter()
        .map(|m| {
            serde_json::json!({
                "content": m.content,
                "role": match m.role {
                    Role::System => "system",
                    Role::User => "user",
                    Role::Assistant => "assistant",
                },
            })
        })
        .collect();
    serde_json::json!({
        "backend": backend_id,
        "messages": messages,
        "model": request.model,
        "temperature": request.temperature,
    })
    .to_string()
}

/// Stable cache key for a request against a given backend.
pub fn request_digest(backend_id: &str, request: &LlmRequest) -> String {
    sha256_hex(canonical_request(backend_id, request).as_bytes())
}

/// A chat-completion backend. `invoke` returns the raw wire payload (which
/// is what gets cached); `decode` extracts the assistant text from it.
pub trait LlmBackend: Send + Sync {
    /// Stable identifier folded into the cache key.
    fn id(&self) -> &str;
    fn invoke(&self, request: &LlmRequest) -> Result<String>;
    fn decode(&self, raw: &str) -> Result<Decoded>;
}

/// One scripted exchange: consumed by the first request whose purpose and
/// prompt text match.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScriptEntry {
    /// Restrict to one purpose (kebab-case name); `None` matches any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub purpose: Option<String>,
    /// Substring that must occur in the prompt text; empty matches any.
    #[serde(rename = "match", default)]
    pub matcher: String,
    pub response: String,
}

/// Deterministic scripted backend: an ordered queue of (matcher, response)
/// pairs; the first matching entry is consumed.
pub struct ScriptedLlm {
    entries: Mutex<Vec<ScriptEntry>>,
}

impl ScriptedLlm {
    pub fn new(entries: Vec<ScriptEntry>) -> Self {
        Self {
            entries: Mutex::new(entries),
        }
    }

    /// Build from plain (matcher, response) pairs matching any purpose.
    pub fn from_pairs(pairs: &[(&str, &str)]) -> Self {
        Self::new(
            pairs
                .iter()
                .map(|(m, r)| ScriptEntry {
                    purpose: None,
                    matcher: m.to_string(),
                    response: r.to_string(),
                })
                .collect(),
        )
    }

    /// Parse a line-delimited script: one JSON `ScriptEntry` per line.
    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: ScriptEntry = serde_json::from_str(line).map_err(|e| {
                Error::parse("llm script", format!("line {}: {e}", i + 1))
            })?;
            entries.push(entry);
        }
        Ok(Self::new(entries))
    }

    pub fn from_jsonl_file(path: &std::path::Path) -> Result<Self> {
        Self::from_jsonl(&std::fs::read_to_string(path)?)
    }

    /// Entries not yet consumed; tests assert 0 at the end of a run.
    pub fn remaining(&self) -> usize {
        self.entries.lock().expect("script lock").len()
    }
}

impl LlmBackend for ScriptedLlm {
    fn id(&self) -> &str {
        "scripted"
    }

    fn invoke(&self, request: &LlmRequest) -> Result<String> {
        let prompt = request.prompt_text();
        let purpose = request.purpose.name();
        let mut entries = self.entries.lock().expect("script lock");
        let hit = entries.iter().position(|e| {
            e.purpose.as_deref().map(|p| p == purpose).unwrap_or(true)
                && prompt.contains(&e.matcher)
        });
        match hit {
            Some(i) => Ok(entries.remove(i).response),
            None => {
                let head: String = prompt.chars().take(160).collect();
                Err(Error::ScriptExhausted {
                    backend: "scripted-llm".to_string(),
                    detail: format!("purpose={purpose} prompt starts {head:?}"),
                })
            }
        }
    }

    fn decode(&self, raw: &str) -> Result<Decoded> {
        Ok(Decoded {
            text: raw.to_string(),
            usage: None,
        })
    }
}

/// Remote chat-completion backend (OpenAI-compatible wire shape).
pub struct HttpLlm {
    id: String,
    url: String,
    auth_header: Option<(String, String)>,
    client: reqwest::blocking::Client,
}

impl HttpLlm {
    pub fn new(
        base_url: &str,
        path: &str,
        auth_header: Option<(String, String)>,
        timeout: Duration,
    ) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| Error::backend_unavailable("llm", e.to_string()))?;
        let url = format!(
            "{}/{}",
            base_url.trim_end_matches('/'),
            path.trim_start_matches('/')
        );
        Ok(Self {
            id: format!("http:{url}"),
            url,
            auth_header,
            client,
        })
    }
}

impl LlmBackend for HttpLlm {
    fn id(&self) -> &str {
        &self.id
    }

    fn invoke(&self, request: &LlmRequest) -> Result<String> {
        let body = serde_json::json!({
            "model": request.model,
            "temperature": request.temperature,
            "messages": request.messages,
        });
        let mut req = self.client.post(&self.url).json(&body);
        if let Some((name, value)) = &self.auth_header {
            req = req.header(name.as_str(), value.as_str());
        }
        let resp = req
            .send()
            .map_err(|e| Error::backend_unavailable("llm", e.to_string()))?;
        let status = resp.status();
        let text = resp
            .text()
            .map_err(|e| Error::backend_unavailable("llm", e.to_string()))?;
        if !status.is_success() {
            let head: String = text.chars().take(200).collect();
            return Err(Error::backend_unavailable(
                "llm",
                format!("status {status}: {head}"),
            ));
        }
        Ok(text)
    }

    fn decode(&self, raw: &str) -> Result<Decoded> {
        let v: serde_json::Value =
            serde_json::from_str(raw).map_err(|e| Error::malformed(e.to_string()))?;
        let text = v["choices"][0]["message"]["content"]
            .as_str()
            .ok_or_else(|| Error::malformed("missing choices[0].message.content"))?
            .to_string();
        let usage = match (
            v["usage"]["prompt_tokens"].as_u64(),
            v["usage"]["completion_tokens"].as_u64(),
        ) {
            (Some(p), Some(c)) => Some(TokenUsage {
                prompt_tokens: p,
                completion_tokens: c,
            }),
            _ => None,
        };
        Ok(Decoded { text, usage })
    }
}

/// Model name and sampling temperature applied to every request.
#[derive(Debug, Clone)]
pub struct LlmProfile {
    pub model: String,
    pub temperature: f64,
}

impl Default for LlmProfile {
    fn default() -> Self {
        Self::new("default", 0.0)
    }
}

impl LlmProfile {
    pub fn new(model: &str, temperature: f64) -> Self {
        Self {
            model: model.to_string(),
            temperature,
        }
    }

    pub fn request(&self, purpose: Purpose, messages: Vec<ChatMessage>) -> LlmRequest {
        LlmRequest::new(purpose, &self.model, self.temperature, messages)
    }
}

/// Gateway plus profile: the handle pipeline stages use to ask questions.
pub struct Reasoner {
    pub gateway: LlmGateway,
    pub profile: LlmProfile,
}

impl Reasoner {
    pub fn new(gateway: LlmGateway, profile: LlmProfile) -> Self {
        Self { gateway, profile }
    }

    pub fn ask(&self, purpose: Purpose, messages: Vec<ChatMessage>) -> Result<LlmResponse> {
        self.gateway.complete(&self.profile.request(purpose, messages))
    }
}

/// Cache-backed, transcript-logging front door for all LLM calls.
pub struct LlmGateway {
    backend: Arc<dyn LlmBackend>,
    cache: ResponseCache,
    transcript: Transcript,
    replay: bool,
    retries: u32,
    backoff: Duration,
}

impl LlmGateway {
    pub fn new(backend: Arc<dyn LlmBackend>, cache: ResponseCache, transcript: Transcript) -> Self {
        Self {
            backend,
            cache,
            transcript,
            replay: false,
            retries: 2,
            backoff: Duration::from_millis(100),
        }
    }

    /// Replay mode: serve exclusively from cache; a miss is an error naming
    /// the absent digest.
    pub fn replay(mut self, enabled: bool) -> Self {
        self.replay = enabled;
        self
    }

    pub fn backend_id(&self) -> &str {
        self.backend.id()
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn complete(&self, request: &LlmRequest) -> Result<LlmResponse> {
        request.validate()?;
        let digest = request_digest(self.backend.id(), request);
        let start = Instant::now();

        if let Some(raw) = self.cache.get(&digest)? {
            let decoded = self.backend.decode(&raw)?;
            self.transcript.record_call(
                BackendKind::Llm,
                request.purpose.name(),
                &digest,
                true,
                start.elapsed().as_millis() as u64,
            );
            return Ok(LlmResponse {
                text: decoded.text,
                from_cache: true,
                usage: decoded.usage,
            });
        }

        if self.replay {
            return Err(Error::CacheMiss { digest });
        }

        let mut attempt = 0;
        let raw = loop {
            match self.backend.invoke(request) {
                Ok(raw) => break raw,
                // Transport failures only; a well-formed response is never retried.
                Err(Error::BackendUnavailable { backend, detail }) if attempt < self.retries => {
                    attempt += 1;
                    let _ = (backend, detail);
                    std::thread::sleep(self.backoff);
                }
                Err(e) => return Err(e),
            }
        };
        self.cache.put(&digest, &raw)?;
        let decoded = self.backend.decode(&raw)?;
        self.transcript.record_call(
            BackendKind::Llm,
            request.purpose.name(),
            &digest,
            false,
            start.elapsed().as_millis() as u64,
        );
        Ok(LlmResponse {
            text: decoded.text,
            from_cache: false,
            usage: decoded.usage,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transcript::TranscriptRecord;

    fn request(purpose: Purpose, text: &str) -> LlmRequest {
        LlmRequest::new(purpose, "test-model", 0.0, vec![ChatMessage::user(text)])
    }

    fn gateway(entries: Vec<ScriptEntry>, dir: &std::path::Path) -> (LlmGateway, Arc<ScriptedLlm>) {
        let backend = Arc::new(ScriptedLlm::new(entries));
        let cache = ResponseCache::new(dir).unwrap();
        let gw = LlmGateway::new(backend.clone(), cache, Transcript::new());
        (gw, backend)
    }

    #[test]
    fn validation() {
        let empty = LlmRequest::new(Purpose::Decompose, "m", 0.0, vec![]);
        assert!(empty.validate().is_err());
        let wrong_tail = LlmRequest::new(
            Purpose::Decompose,
            "m",
            0.0,
            vec![ChatMessage::user("a"), ChatMessage::assistant("b")],
        );
        assert!(wrong_tail.validate().is_err());
        let neg = LlmRequest::new(Purpose::Decompose, "m", -1.0, vec![ChatMessage::user("x")]);
        assert!(neg.validate().is_err());
        assert!(request(Purpose::Decompose, "x").validate().is_ok());
    }

    #[test]
    fn digest_ignores_wire_key_order() {
        // Two encodings of the same request differing only in key order
        // canonicalize to the same digest.
        let a: serde_json::Value =
            serde_json::from_str(r#"{"model":"m","temperature":0.0,"backend":"b","messages":[]}"#)
                .unwrap();
        let b: serde_json::Value =
            serde_json::from_str(r#"{"backend":"b","messages":[],"temperature":0.0,"model":"m"}"#)
                .unwrap();
        assert_eq!(
            sha256_hex(a.to_string().as_bytes()),
            sha256_hex(b.to_string().as_bytes())
        );
        // And the canonical form produced for real requests is key-sorted.
        let req = request(Purpose::Decompose, "x");
        let canon = canonical_request("scripted", &req);
        let backend_pos = canon.find("\"backend\"").unwrap();
        let model_pos = canon.find("\"model\"").unwrap();
        let temp_pos = canon.find("\"temperature\"").unwrap();
        assert!(backend_pos < model_pos && model_pos < temp_pos);
    }

    #[test]
    fn digest_changes_with_any_field() {
        let base = request(Purpose::Decompose, "x");
        let d0 = request_digest("b", &base);

        let mut other_model = base.clone();
        other_model.model = "m2".to_string();
        assert_ne!(d0, request_digest("b", &other_model));

        let mut other_temp = base.clone();
        other_temp.temperature = 0.5;
        assert_ne!(d0, request_digest("b", &other_temp));

        let other_msg = request(Purpose::Decompose, "y");
        assert_ne!(d0, request_digest("b", &other_msg));

        assert_ne!(d0, request_digest("b2", &base));

        // Purpose is accounting metadata, not part of the content key.
        let mut other_purpose = base.clone();
        other_purpose.purpose = Purpose::Reflect;
        assert_eq!(d0, request_digest("b", &other_purpose));
    }

    #[test]
    fn second_identical_request_hits_cache() {
        let dir = tempfile::tempdir().unwrap();
        let (gw, backend) = gateway(
            vec![ScriptEntry {
                purpose: None,
                matcher: String::new(),
                response: "answer".to_string(),
            }],
            dir.path(),
        );
        let req = request(Purpose::Synthesize, "the prompt");
        let first = gw.complete(&req).unwrap();
        assert_eq!(first.text, "answer");
        assert!(!first.from_cache);
        assert_eq!(backend.remaining(), 0);

        // Script is exhausted: only the cache can serve this.
        let second = gw.complete(&req).unwrap();
        assert_eq!(second.text, "answer");
        assert!(second.from_cache);

        let stats = gw.transcript.call_stats();
        assert_eq!(stats.total, 2);
        assert_eq!(stats.hits, 1);
        assert_eq!(stats.llm_misses, 1);
    }

    #[test]
    fn queue_consumed_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let (gw, _) = gateway(
            vec![
                ScriptEntry {
                    purpose: None,
                    matcher: String::new(),
                    response: "A".to_string(),
                },
                ScriptEntry {
                    purpose: None,
                    matcher: String::new(),
                    response: "B".to_string(),
                },
            ],
            dir.path(),
        );
        let r1 = gw.complete(&request(Purpose::Decompose, "first")).unwrap();
        let r2 = gw.complete(&request(Purpose::Decompose, "second")).unwrap();
        assert_eq!((r1.text.as_str(), r2.text.as_str()), ("A", "B"));
    }

    #[test]
    fn matcher_and_purpose_select_entries() {
        let dir = tempfile::tempdir().unwrap();
        let entries = vec![
            ScriptEntry {
                purpose: Some("reflect".to_string()),
                matcher: String::new(),
                response: "for reflect".to_string(),
            },
            ScriptEntry {
                purpose: None,
                matcher: "nil ideal".to_string(),
                response: "for nil ideal".to_string(),
            },
        ];
        let (gw, backend) = gateway(entries, dir.path());
        // First request matches the second entry (purpose mismatch on first).
        let r = gw
            .complete(&request(Purpose::Synthesize, "define a nil ideal"))
            .unwrap();
        assert_eq!(r.text, "for nil ideal");
        let r = gw
            .complete(&request(Purpose::Reflect, "fix this error"))
            .unwrap();
        assert_eq!(r.text, "for reflect");
        assert_eq!(backend.remaining(), 0);
    }

    #[test]
    fn exhausted_script_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let (gw, _) = gateway(vec![], dir.path());
        let err = gw.complete(&request(Purpose::Decompose, "x")).unwrap_err();
        assert!(matches!(err, Error::ScriptExhausted { .. }));
        // Failed calls are not recorded.
        assert_eq!(gw.transcript.call_stats().total, 0);
    }

    #[test]
    fn replay_serves_cache_and_names_missing_digest() {
        let dir = tempfile::tempdir().unwrap();
        let req = request(Purpose::Synthesize, "p");
        let warm_digest;
        {
            let (gw, _) = gateway(
                vec![ScriptEntry {
                    purpose: None,
                    matcher: String::new(),
                    response: "cached".to_string(),
                }],
                dir.path(),
            );
            gw.complete(&req).unwrap();
            warm_digest = request_digest("scripted", &req);
        }
        let backend = Arc::new(ScriptedLlm::new(vec![]));
        let cache = ResponseCache::new(dir.path()).unwrap();
        let gw = LlmGateway::new(backend, cache.clone(), Transcript::new()).replay(true);
        let r = gw.complete(&req).unwrap();
        assert!(r.from_cache);
        assert_eq!(r.text, "cached");

        cache.remove(&warm_digest).unwrap();
        match gw.complete(&req).unwrap_err() {
            Error::CacheMiss { digest } => assert_eq!(digest, warm_digest),
            other => panic!("expected CacheMiss, got {other}"),
        }
    }

    #[test]
    fn call_records_match_invocations() {
        let dir = tempfile::tempdir().unwrap();
        let (gw, _) = gateway(
            vec![
                ScriptEntry {
                    purpose: None,
                    matcher: String::new(),
                    response: "1".to_string(),
                },
                ScriptEntry {
                    purpose: None,
                    matcher: String::new(),
                    response: "2".to_string(),
                },
            ],
            dir.path(),
        );
        gw.complete(&request(Purpose::Decompose, "a")).unwrap();
        gw.complete(&request(Purpose::GroundSelect, "b")).unwrap();
        gw.complete(&request(Purpose::Decompose, "a")).unwrap(); // cache hit
        let records = gw.transcript.records();
        let calls: Vec<_> = records
            .iter()
            .filter_map(|r| match r {
                TranscriptRecord::Call(c) => Some(c),
                _ => None,
            })
            .collect();
        assert_eq!(calls.len(), 3);
        assert!(calls.iter().all(|c| c.kind == BackendKind::Llm));
        assert_eq!(calls[0].purpose, "decompose");
        assert_eq!(calls[1].purpose, "ground-select");
        assert!(calls[2].cache_hit);
        assert_eq!(calls[0].digest, calls[2].digest);
    }

    #[test]
    fn jsonl_script_parsing() {
        let script = r#"
{"purpose": "decompose", "match": "ring", "response": "nil ideal :: an ideal of nilpotents"}
{"match": "", "response": "fallback"}
"#;
        let s = ScriptedLlm::from_jsonl(script).unwrap();
        assert_eq!(s.remaining(), 2);
        let bad = ScriptedLlm::from_jsonl("{not json}");
        assert!(bad.is_err());
    }

    #[test]
    fn http_decode_shape() {
        let backend = HttpLlm::new(
            "http://localhost:9",
            "/v1/chat/completions",
            None,
            Duration::from_secs(1),
        )
        .unwrap();
        let raw = r#"{"choices":[{"message":{"content":"hello"}}],"usage":{"prompt_tokens":3,"completion_tokens":2}}"#;
        let d = backend.decode(raw).unwrap();
        assert_eq!(d.text, "hello");
        assert_eq!(
            d.usage,
            Some(TokenUsage {
                prompt_tokens: 3,
                completion_tokens: 2
            })
        );
        assert!(backend.decode("{}").is_err());
        assert!(backend.decode("not json").is_err());
    }
}
