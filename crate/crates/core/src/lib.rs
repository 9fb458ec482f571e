//! Engine for formalizing informal mathematical statements into
//! compiler-checked formal (Lean-style) statements.
//!
//! The pipeline has three phases plus a verdict:
//!
//! 1. **Planning** ([`planner`]): expand the statement top-down into an
//!    acyclic dependency graph of concepts ([`graph`]), grounding each
//!    concept against the formal library ([`grounding`]) and recursing into
//!    the prerequisites of whatever the library cannot supply.
//! 2. **Synthesis** ([`synth`]): generate formal code for the unresolved
//!    nodes bottom-up, compiling every attempt ([`compiler`]) and feeding
//!    diagnostics back to the model until the code checks or the attempt
//!    budget runs out, then emit one self-contained file ending in the
//!    theorem.
//! 3. **Scoring** ([`scorer`]): decompose the informal statement into
//!    atomic conditions and conclusions, ground every term of the formal
//!    statement in the library index, judge each subtask, and aggregate to
//!    a score in [0, 1] thresholded at α.
//!
//! All intelligence lives behind pluggable backends ([`llm`],
//! [`grounding`], [`compiler`]) with deterministic scripted
//! implementations, a content-addressed response cache ([`cache`]), and an
//! append-only run transcript ([`transcript`]) that makes any run
//! replayable bit-for-bit ([`pipeline`]). The benchmark harness ([`eval`])
//! runs datasets and reports compilation rate, final accuracy, and
//! call budgets.

pub mod cache;
pub mod compiler;
pub mod config;
pub mod digest;
pub mod error;
pub mod eval;
pub mod graph;
pub mod grounding;
pub mod llm;
pub mod pipeline;
pub mod planner;
pub mod prompts;
pub mod scorer;
pub mod synth;
pub mod transcript;

pub use cache::ResponseCache;
pub use compiler::{parse_diagnostics, CompileResult, CompilerGateway, LeanToolchain, ScriptedCompiler};
pub use config::RunConfig;
pub use error::{Error, Result};
pub use eval::{
    confusion, load_dataset, metrics, pass_at_k, run_benchmark, BenchmarkReport, ConfusionMatrix,
    DatasetRecord, Metrics,
};
pub use graph::{
    Concept, ConceptNode, DependencyGraph, Diagnostic, FormalArtifact, GraphError,
    InformalStatement, NodeId, NodeStatus, Severity,
};
pub use grounding::{GroundingCandidate, GroundingResult, LocalIndex, RetrievalGateway};
pub use llm::{
    ChatMessage, LlmGateway, LlmProfile, LlmRequest, LlmResponse, Purpose, Reasoner, ScriptedLlm,
};
pub use pipeline::{formalize_statement, verdict, Backends, FormalizeOutcome, RunVerdict};
pub use planner::{expand, flat_plan, ExpansionBudget};
pub use scorer::{
    aggregate, decide, score_statement, AnalyzerGateway, MatchLabel, ScoreReport, ScorerConfig,
    SubtaskList, SubtaskReport, TermIndex, TermInfo,
};
pub use synth::{synthesize_graph, synthesize_node, FinalResult, FinalStatus, ReflectionPolicy};
pub use transcript::{call_stats, BackendKind, CallStats, Transcript, TranscriptRecord};
