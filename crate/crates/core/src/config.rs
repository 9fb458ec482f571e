//! Run configuration: one flat key-value (TOML) file with documented
//! defaults. Everything that shapes a run lives here — environment
//! variables are reserved for secrets (API keys).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::digest::sha256_hex;
use crate::error::{Error, Result};

fn default_model() -> String {
    "default".to_string()
}
fn default_llm_backend() -> String {
    "scripted".to_string()
}
fn default_retrieval_backend() -> String {
    "local".to_string()
}
fn default_compiler_backend() -> String {
    "scripted".to_string()
}
fn default_compiler_command() -> String {
    "lake env lean".to_string()
}
fn default_toolchain_version() -> String {
    "unconfigured".to_string()
}
fn default_k() -> usize {
    10
}
fn default_max_depth() -> u32 {
    6
}
fn default_max_nodes() -> usize {
    64
}
fn default_max_attempts() -> u32 {
    16
}
fn default_alpha() -> f64 {
    0.9
}
fn default_lambda() -> f64 {
    0.8
}
fn default_timeout() -> u64 {
    120
}
fn default_pool() -> usize {
    2
}
fn default_workers() -> usize {
    1
}
fn default_cache_dir() -> PathBuf {
    PathBuf::from(".aria-cache")
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Resolved run configuration. Paths in the file are taken as written
/// (relative paths resolve against the working directory).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    // --- language model ---
    /// "scripted" (deterministic fixture) or "http" (OpenAI-style endpoint).
    #[serde(default = "default_llm_backend")]
    pub llm_backend: String,
    #[serde(default = "default_model")]
    pub model: String,
    #[serde(default)]
    pub temperature: f64,
    /// Scripted backend: path to the exchange script (JSON lines).
    #[serde(default)]
    pub llm_script: Option<PathBuf>,
    /// HTTP backend: endpoint URL.
    #[serde(default)]
    pub llm_url: Option<String>,
    /// Name of the environment variable holding the API key, if any.
    #[serde(default)]
    pub llm_api_key_env: Option<String>,

    // --- retrieval / library index ---
    /// "local" (lexical search over the term index), "http", or "none".
    #[serde(default = "default_retrieval_backend")]
    pub retrieval_backend: String,
    #[serde(default)]
    pub retrieval_url: Option<String>,
    /// Term index file (JSON lines, one record per library declaration).
    #[serde(default)]
    pub term_index: Option<PathBuf>,
    /// Candidates requested per grounding search.
    #[serde(default = "default_k")]
    pub k: usize,

    // --- planning ---
    #[serde(default = "default_max_depth")]
    pub max_depth: u32,
    #[serde(default = "default_max_nodes")]
    pub max_nodes: usize,

    // --- synthesis ---
    #[serde(default = "default_max_attempts")]
    pub max_attempts: u32,

    // --- scoring ---
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// Shell command for the external term analyzer (reads source on stdin,
    /// prints one term name per line). Absent → lexical fallback extractor.
    #[serde(default)]
    pub analyzer_cmd: Option<String>,
    /// Score the emitted statement during `formalize` runs.
    #[serde(default)]
    pub score: bool,

    // --- compiler ---
    /// "scripted" (verdict queue fixture) or "toolchain" (external process).
    #[serde(default = "default_compiler_backend")]
    pub compiler_backend: String,
    #[serde(default)]
    pub compiler_script: Option<PathBuf>,
    /// Project directory the toolchain runs in.
    #[serde(default)]
    pub lean_project: Option<PathBuf>,
    #[serde(default = "default_compiler_command")]
    pub compiler_command: String,
    /// Recorded in transcripts; never guessed from the binary.
    #[serde(default = "default_toolchain_version")]
    pub toolchain_version: String,
    #[serde(default = "default_timeout")]
    pub timeout_seconds: u64,
    #[serde(default = "default_pool")]
    pub compiler_pool: usize,

    // --- ablations ---
    /// Flat keyword plan instead of recursive graph expansion.
    #[serde(default)]
    pub no_got: bool,
    /// Skip retrieval; grounding asks the model to recall names directly.
    #[serde(default)]
    pub no_rag: bool,
    /// Single generation attempt per node, no compiler feedback.
    #[serde(default)]
    pub no_reflect: bool,
    /// Judge subtasks without retrieved term records.
    #[serde(default)]
    pub no_term_grounding: bool,

    // --- plumbing ---
    #[serde(default = "default_cache_dir")]
    pub cache_dir: PathBuf,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default = "default_workers")]
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty config parses to defaults")
    }
}

impl RunConfig {
    /// Parse a config file, apply defaults, validate ranges.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("config", format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::config("config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::config("alpha", "must be in [0, 1]"));
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(Error::config("lambda", "must be in (0, 1]"));
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(Error::config("temperature", "must be non-negative"));
        }
        if self.k < 1 {
            return Err(Error::config("k", "must be at least 1"));
        }
        if self.max_depth < 1 {
            return Err(Error::config("max_depth", "must be at least 1"));
        }
        if self.max_nodes < 1 {
            return Err(Error::config("max_nodes", "must be at least 1"));
        }
        if self.max_attempts < 1 {
            return Err(Error::config("max_attempts", "must be at least 1"));
        }
        if self.timeout_seconds < 1 {
            return Err(Error::config("timeout_seconds", "must be at least 1"));
        }
        if self.compiler_pool < 1 {
            return Err(Error::config("compiler_pool", "must be at least 1"));
        }
        if self.workers < 1 {
            return Err(Error::config("workers", "must be at least 1"));
        }
        match self.llm_backend.as_str() {
            "scripted" => {
                if self.llm_script.is_none() {
                    return Err(Error::config(
                        "llm_script",
                        "required when llm_backend = \"scripted\"",
                    ));
                }
            }
            "http" => {
                if self.llm_url.is_none() {
                    return Err(Error::config(
                        "llm_url",
                        "required when llm_backend = \"http\"",
                    ));
                }
            }
            other => {
                return Err(Error::config(
                    "llm_backend",
                    format!("unknown backend '{other}' (expected scripted|http)"),
                ));
            }
        }
        match self.retrieval_backend.as_str() {
            "local" => {
                if self.term_index.is_none() {
                    return Err(Error::config(
                        "term_index",
                        "required when retrieval_backend = \"local\"",
                    ));
                }
            }
            "http" => {
                if self.retrieval_url.is_none() {
                    return Err(Error::config(
                        "retrieval_url",
                        "required when retrieval_backend = \"http\"",
                    ));
                }
            }
            "none" => {}
            other => {
                return Err(Error::config(
                    "retrieval_backend",
                    format!("unknown backend '{other}' (expected local|http|none)"),
                ));
            }
        }
        match self.compiler_backend.as_str() {
            "scripted" => {
                if self.compiler_script.is_none() {
                    return Err(Error::config(
                        "compiler_script",
                        "required when compiler_backend = \"scripted\"",
                    ));
                }
            }
            "toolchain" => {
                if self.lean_project.is_none() {
                    return Err(Error::config(
                        "lean_project",
                        "required when compiler_backend = \"toolchain\"",
                    ));
                }
            }
            other => {
                return Err(Error::config(
                    "compiler_backend",
                    format!("unknown backend '{other}' (expected scripted|toolchain)"),
                ));
            }
        }
        Ok(())
    }

    /// Stable digest of the resolved configuration, for transcript headers.
    pub fn digest(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        sha256_hex(value.to_string().as_bytes())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_yields_documented_defaults() {
        let cfg: RunConfig = toml::from_str("").unwrap();
        assert_eq!(cfg.k, 10);
        assert_eq!(cfg.max_depth, 6);
        assert_eq!(cfg.max_nodes, 64);
        assert_eq!(cfg.max_attempts, 16);
        assert_eq!(cfg.alpha, 0.9);
        assert_eq!(cfg.lambda, 0.8);
        assert_eq!(cfg.temperature, 0.0);
        assert_eq!(cfg.timeout_seconds, 120);
        assert_eq!(cfg.compiler_pool, 2);
        assert!(!cfg.no_got && !cfg.no_rag && !cfg.no_reflect && !cfg.no_term_grounding);
    }

    #[test]
    fn alpha_out_of_range_names_the_field() {
        let err = RunConfig::from_toml("alpha = 1.5\nllm_script = \"s.jsonl\"\n").unwrap_err();
        match err {
            Error::Config { field, .. } => assert_eq!(field, "alpha"),
            other => panic!("expected config error, got {other}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("alhpa = 0.5").is_err());
    }

    #[test]
    fn backend_choices_demand_their_settings() {
        // scripted LLM without a script file
        let err = RunConfig::from_toml(
            "term_index = \"idx.jsonl\"\ncompiler_script = \"c.jsonl\"\n",
        )
        .unwrap_err();
        match err {
            Error::Config { field, .. } => assert_eq!(field, "llm_script"),
            other => panic!("unexpected {other}"),
        }
        // http LLM without a URL
        let err = RunConfig::from_toml("llm_backend = \"http\"").unwrap_err();
        match err {
            Error::Config { field, .. } => assert_eq!(field, "llm_url"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn full_scripted_config_parses() {
        let cfg = RunConfig::from_toml(
            r#"
llm_script = "fixtures/llm.jsonl"
term_index = "fixtures/index.jsonl"
compiler_script = "fixtures/compiler.jsonl"
alpha = 0.0
no_reflect = true
"#,
        )
        .unwrap();
        assert!(cfg.no_reflect);
        assert_eq!(cfg.alpha, 0.0);
        assert_eq!(cfg.retrieval_backend, "local");
    }

    #[test]
    fn digest_tracks_content() {
        let a = RunConfig::from_toml(
            "llm_script = \"a\"\nterm_index = \"i\"\ncompiler_script = \"c\"\n",
        )
        .unwrap();
        let mut b = a.clone();
        assert_eq!(a.digest(), b.digest());
        b.alpha = 0.5;
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
    }
}
