//! Run assembly: build every backend gateway from one configuration, record
//! the provenance header, and drive plan → synthesize → score for a
//! statement.

use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::cache::ResponseCache;
use crate::compiler::{CompilerBackend, CompilerGateway, LeanToolchain, ScriptedCompiler};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::graph::{DependencyGraph, InformalStatement};
use crate::grounding::{HttpRetrieval, LocalIndex, RetrievalBackend, RetrievalGateway};
use crate::llm::{HttpLlm, LlmBackend, LlmGateway, LlmProfile, Reasoner, ScriptedLlm};
use crate::planner::{expand, flat_plan, ExpansionBudget};
use crate::scorer::{score_statement, AnalyzerGateway, ScoreReport, ScorerConfig, TermIndex};
use crate::synth::{synthesize_graph, FinalResult, ReflectionPolicy};
use crate::transcript::Transcript;

/// Every gateway a run needs, sharing one transcript and one cache tree.
pub struct Backends {
    pub reasoner: Reasoner,
    pub retrieval: Option<RetrievalGateway>,
    pub compiler: CompilerGateway,
    pub analyzer: Option<AnalyzerGateway>,
    pub term_index: Option<TermIndex>,
    pub transcript: Transcript,
}

impl Backends {
    /// Wire up backends per config and write the provenance header (resolved
    /// config, config digest, toolchain version, index digest) to the
    /// transcript. In replay mode every gateway serves from cache only.
    pub fn from_config(cfg: &RunConfig, transcript: Transcript, replay: bool) -> Result<Self> {
        cfg.validate()?;
        let term_index = match &cfg.term_index {
            Some(path) => Some(TermIndex::from_jsonl_file(path)?),
            None => None,
        };
        transcript.record_header(
            cfg.to_json(),
            &cfg.digest(),
            &cfg.toolchain_version,
            term_index.as_ref().map_or("none", |i| i.digest()),
        );

        let timeout = Duration::from_secs(cfg.timeout_seconds);
        let llm_backend: Arc<dyn LlmBackend> = match cfg.llm_backend.as_str() {
            "scripted" => Arc::new(ScriptedLlm::from_jsonl_file(
                cfg.llm_script.as_ref().expect("validated"),
            )?),
            "http" => {
                let auth = match &cfg.llm_api_key_env {
                    Some(var) => {
                        let key = std::env::var(var).map_err(|_| {
                            Error::config(
                                "llm_api_key_env",
                                format!("environment variable {var} is not set"),
                            )
                        })?;
                        Some(("Authorization".to_string(), format!("Bearer {key}")))
                    }
                    None => None,
                };
                Arc::new(HttpLlm::new(
                    cfg.llm_url.as_ref().expect("validated"),
                    "chat/completions",
                    auth,
                    timeout,
                )?)
            }
            other => return Err(Error::config("llm_backend", format!("unknown '{other}'"))),
        };
        let reasoner = Reasoner::new(
            LlmGateway::new(
                llm_backend,
                ResponseCache::new(cfg.cache_dir.join("llm"))?,
                transcript.clone(),
            )
            .replay(replay),
            LlmProfile::new(&cfg.model, cfg.temperature),
        );

        let retrieval = if cfg.no_rag {
            None
        } else {
            let backend: Option<Box<dyn RetrievalBackend>> = match cfg.retrieval_backend.as_str() {
                "local" => Some(Box::new(LocalIndex::from_term_index(
                    term_index.as_ref().expect("validated"),
                ))),
                "http" => Some(Box::new(HttpRetrieval::new(
                    cfg.retrieval_url.as_ref().expect("validated"),
                    timeout,
                )?)),
                _ => None,
            };
            match backend {
                Some(b) => Some(
                    RetrievalGateway::new(
                        b,
                        ResponseCache::new(cfg.cache_dir.join("retrieval"))?,
                        transcript.clone(),
                    )
                    .replay(replay),
                ),
                None => None,
            }
        };

        let compiler_backend: Box<dyn CompilerBackend> = match cfg.compiler_backend.as_str() {
            "scripted" => Box::new(ScriptedCompiler::from_jsonl_file(
                cfg.compiler_script.as_ref().expect("validated"),
            )?),
            _ => Box::new(LeanToolchain::new(
                cfg.lean_project.as_ref().expect("validated"),
                &cfg.compiler_command,
                timeout,
            )?),
        };
        let compiler = CompilerGateway::new(
            compiler_backend,
            ResponseCache::new(cfg.cache_dir.join("compiler"))?,
            transcript.clone(),
        )
        .replay(replay)
        .pool_size(cfg.compiler_pool);

        let analyzer = cfg.analyzer_cmd.as_ref().map(|cmd| {
            Ok::<_, Error>(
                AnalyzerGateway::new(
                    cmd,
                    ResponseCache::new(cfg.cache_dir.join("analyzer"))?,
                    transcript.clone(),
                )
                .replay(replay),
            )
        });
        let analyzer = match analyzer {
            Some(a) => Some(a?),
            None => None,
        };

        Ok(Self {
            reasoner,
            retrieval,
            compiler,
            analyzer,
            term_index,
            transcript,
        })
    }
}

/// Everything `formalize` produces for one statement.
#[derive(Debug)]
pub struct FormalizeOutcome {
    pub graph: DependencyGraph,
    pub result: FinalResult,
    pub score: Option<ScoreReport>,
}

/// Plan, synthesize, and (optionally) score one statement.
///
/// Scoring happens when `want_score` is set and the theorem was actually
/// synthesized; a missing theorem cannot be scored.
pub fn formalize_statement(
    statement: &InformalStatement,
    cfg: &RunConfig,
    backends: &Backends,
    want_score: bool,
) -> Result<FormalizeOutcome> {
    statement.validate().map_err(Error::from)?;
    backends.transcript.record_problem(&statement.id);
    let mut graph = if cfg.no_got {
        flat_plan(
            statement,
            &backends.reasoner,
            backends.retrieval.as_ref(),
            cfg.k,
            &backends.transcript,
        )?
    } else {
        let budget = ExpansionBudget {
            max_depth: cfg.max_depth,
            max_nodes: cfg.max_nodes,
        };
        expand(
            statement,
            &backends.reasoner,
            backends.retrieval.as_ref(),
            cfg.k,
            &budget,
            &backends.transcript,
        )?
    };
    let policy = ReflectionPolicy {
        max_attempts: cfg.max_attempts,
        enabled: !cfg.no_reflect,
    };
    let result = synthesize_graph(
        &mut graph,
        &backends.reasoner,
        &backends.compiler,
        &policy,
        &backends.transcript,
    )?;

    let root_source = graph
        .node(graph.root())?
        .artifact
        .as_ref()
        .map(|a| a.source.clone());
    let score = match (want_score, root_source) {
        (true, Some(source)) => {
            let scfg = ScorerConfig {
                alpha: cfg.alpha,
                lambda: cfg.lambda,
                term_grounding: !cfg.no_term_grounding,
            };
            Some(score_statement(
                statement,
                &source,
                &backends.reasoner,
                backends.term_index.as_ref(),
                backends.analyzer.as_ref(),
                &scfg,
            )?)
        }
        _ => None,
    };
    Ok(FormalizeOutcome {
        graph,
        result,
        score,
    })
}

/// Exit-status summary for one formalize run: success means the emitted
/// file compiled and, when scoring was requested, the score cleared α.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunVerdict {
    Success,
    Failure,
}

pub fn verdict(outcome: &FormalizeOutcome, want_score: bool) -> RunVerdict {
    let compiled = outcome.result.status == crate::synth::FinalStatus::Compiled;
    let accepted = match (&outcome.score, want_score) {
        (_, false) => true,
        (Some(s), true) => s.accepted,
        (None, true) => false,
    };
    if compiled && accepted {
        RunVerdict::Success
    } else {
        RunVerdict::Failure
    }
}
