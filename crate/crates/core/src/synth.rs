//! Bottom-up synthesis: generate formal code for every node the library
//! could not supply, compiling each attempt and feeding diagnostics back to
//! the model until it compiles or the attempt budget runs out, then emit one
//! self-contained source file ending in the root theorem.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::compiler::CompilerGateway;
use crate::error::{Error, Result};
use crate::graph::{
    ArtifactKind, CompileStatus, DependencyGraph, Diagnostic, FormalArtifact, NodeId, NodeStatus,
    Severity,
};
use crate::llm::{Purpose, Reasoner};
use crate::prompts;
use crate::transcript::Transcript;

/// Import header prepended to every compile unit and to the emitted file.
pub const IMPORT_HEADER: &str = "import Mathlib";

/// How many compile-and-refine rounds a node is allowed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReflectionPolicy {
    pub max_attempts: u32,
    /// When false the node gets a single generation attempt, no feedback.
    pub enabled: bool,
}

impl Default for ReflectionPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 16,
            enabled: true,
        }
    }
}

impl ReflectionPolicy {
    pub fn attempts(&self) -> u32 {
        if self.enabled {
            self.max_attempts
        } else {
            1
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_attempts < 1 {
            return Err(Error::config("max_attempts", "must be at least 1"));
        }
        Ok(())
    }
}

/// Everything a node's synthesis prompt and compile unit are built from.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisContext {
    /// (formal_name, formal_statement) of grounded immediate dependencies;
    /// these live in the library and are never re-defined.
    pub grounded_refs: Vec<(String, String)>,
    /// Compiled source of synthesized immediate dependencies, topological
    /// order. This is what the prompt shows.
    pub synthesized_code: Vec<String>,
    /// Compiled source of every synthesized node in the dependency closure,
    /// topological order. The compile unit needs the closure: immediate
    /// dependencies only compile on top of their own dependencies.
    pub closure_code: Vec<String>,
    pub target_name: String,
    pub target_gloss: String,
    pub is_theorem: bool,
}

impl SynthesisContext {
    pub fn task(&self) -> String {
        if self.is_theorem {
            format!(
                "state the following as one formal theorem, ending the proof with `sorry`: {}",
                self.target_gloss
            )
        } else {
            format!(
                "write the formal definition capturing the concept '{}' ({}); introduce only \
                 declarations that concept needs",
                self.target_name, self.target_gloss
            )
        }
    }
}

/// Collect the synthesized nodes in `id`'s dependency closure (excluding
/// `id`), as a set.
fn dependency_closure(graph: &DependencyGraph, id: &NodeId) -> Result<BTreeSet<NodeId>> {
    let mut seen = BTreeSet::new();
    let mut stack = vec![id.clone()];
    while let Some(cur) = stack.pop() {
        for dep in graph.dependencies(&cur)? {
            if seen.insert(dep.clone()) {
                stack.push(dep);
            }
        }
    }
    Ok(seen)
}

fn collect_context(graph: &DependencyGraph, id: &NodeId, strict: bool) -> Result<SynthesisContext> {
    let node = graph.node(id)?;
    let immediate = graph.dependencies(id)?;
    let closure = dependency_closure(graph, id)?;
    let topo = graph.topological_order()?;
    let mut grounded_refs = Vec::new();
    let mut synthesized_code = Vec::new();
    let mut closure_code = Vec::new();
    for nid in &topo {
        let in_immediate = immediate.contains(nid);
        if !closure.contains(nid) && !in_immediate {
            continue;
        }
        let dep = graph.node(nid)?;
        match dep.status {
            NodeStatus::Grounded => {
                if in_immediate {
                    let g = dep.grounding.as_ref().expect("grounded node has a candidate");
                    grounded_refs.push((g.formal_name.clone(), g.formal_statement.clone()));
                }
            }
            NodeStatus::Synthesized => {
                let source = dep
                    .artifact
                    .as_ref()
                    .expect("synthesized node has an artifact")
                    .source
                    .clone();
                if in_immediate {
                    synthesized_code.push(source.clone());
                }
                closure_code.push(source);
            }
            status if strict && in_immediate => {
                return Err(Error::DependencyUnresolved {
                    node: nid.to_string(),
                    detail: format!(
                        "status {status} while assembling context for '{}'",
                        node.concept.name
                    ),
                });
            }
            _ => {} // lenient: unresolved dependencies are left out
        }
    }
    Ok(SynthesisContext {
        grounded_refs,
        synthesized_code,
        closure_code,
        target_name: node.concept.name.clone(),
        target_gloss: node.concept.gloss.clone(),
        is_theorem: id == graph.root(),
    })
}

/// Strict context assembly: every immediate dependency must be Grounded or
/// Synthesized.
pub fn assemble_context(graph: &DependencyGraph, id: &NodeId) -> Result<SynthesisContext> {
    collect_context(graph, id, true)
}

/// Lenient variant for degraded runs: unresolved dependencies are omitted
/// instead of failing, so the root theorem can still be attempted.
pub fn assemble_context_lenient(graph: &DependencyGraph, id: &NodeId) -> Result<SynthesisContext> {
    collect_context(graph, id, false)
}

/// Last fenced code block in an LLM reply, language tag stripped.
/// `None` when the reply holds no closed fence (a failed attempt).
pub fn extract_code_block(text: &str) -> Option<String> {
    let parts: Vec<&str> = text.split("```").collect();
    if parts.len() < 3 {
        return None;
    }
    let blocks = parts.len() / 2; // fenced segments sit at odd indices
    let block = parts[2 * blocks - 1];
    let body = match block.find('\n') {
        Some(i)
            if block[..i]
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') =>
        {
            &block[i + 1..]
        }
        _ => block,
    };
    let body = body.trim();
    if body.is_empty() {
        None
    } else {
        Some(body.to_string())
    }
}

fn render_diagnostics(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| {
            let sev = match d.severity {
                Severity::Error => "error",
                Severity::Warning => "warning",
                Severity::Info => "info",
            };
            format!("- line {}, col {}: {}: {}", d.line, d.column, sev, d.message)
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn strip_import_lines(source: &str) -> String {
    source
        .lines()
        .filter(|l| !l.trim_start().starts_with("import "))
        .collect::<Vec<_>>()
        .join("\n")
        .trim()
        .to_string()
}

/// Header + closure code + candidate: the self-contained unit one compile
/// check sees.
fn assemble_unit(closure_code: &[String], candidate: &str) -> String {
    let mut out = String::from(IMPORT_HEADER);
    out.push('\n');
    for block in closure_code {
        out.push('\n');
        out.push_str(&strip_import_lines(block));
        out.push('\n');
    }
    out.push('\n');
    out.push_str(&strip_import_lines(candidate));
    out.push('\n');
    out
}

/// Generate-and-check loop for one node. Returns the node's final status;
/// backend outages mark the node `Failed("backend")` rather than aborting
/// the whole run.
pub fn synthesize_node(
    graph: &mut DependencyGraph,
    id: &NodeId,
    ctx: &SynthesisContext,
    reasoner: &Reasoner,
    compiler: &CompilerGateway,
    policy: &ReflectionPolicy,
    transcript: &Transcript,
) -> Result<NodeStatus> {
    policy.validate()?;
    debug_assert_eq!(
        graph.node(id)?.status,
        NodeStatus::NeedsSynthesis,
        "synthesize_node wants NeedsSynthesis"
    );
    let context_str = prompts::context_block(&ctx.grounded_refs, &ctx.synthesized_code);
    let task = ctx.task();
    let kind = if ctx.is_theorem {
        ArtifactKind::Theorem
    } else {
        ArtifactKind::Definition
    };

    // (source, rendered diagnostics) of the previous failed attempt.
    let mut previous: Option<(String, String)> = None;
    let mut last_failure: Option<(String, Vec<Diagnostic>)> = None;
    for attempt in 1..=policy.attempts() {
        let (purpose, messages) = match &previous {
            None => (Purpose::Synthesize, prompts::synthesize(&task, &context_str)),
            Some((source, diags)) => (
                Purpose::Reflect,
                prompts::reflect(&task, &context_str, source, diags),
            ),
        };
        let reply = match reasoner.ask(purpose, messages) {
            Ok(r) => r,
            Err(Error::BackendUnavailable { detail, .. }) => {
                graph.set_failed(id, "backend")?;
                transcript.record_node_event(id.as_str(), "failed", &detail);
                return Ok(NodeStatus::Failed);
            }
            Err(e) => return Err(e),
        };
        let Some(candidate) = extract_code_block(&reply.text) else {
            let diag = Diagnostic::error(1, 0, "no code block in response");
            transcript.record_node_event(
                id.as_str(),
                "attempt-failed",
                &format!("attempt {attempt}: no code block"),
            );
            previous = Some((reply.text.clone(), render_diagnostics(std::slice::from_ref(&diag))));
            last_failure = Some((reply.text, vec![diag]));
            continue;
        };
        let unit = assemble_unit(&ctx.closure_code, &candidate);
        let outcome = match compiler.check(&unit) {
            Ok(o) => o,
            Err(Error::BackendUnavailable { detail, .. }) => {
                graph.set_failed(id, "backend")?;
                transcript.record_node_event(id.as_str(), "failed", &detail);
                return Ok(NodeStatus::Failed);
            }
            Err(e) => return Err(e),
        };
        if outcome.success {
            let artifact = FormalArtifact::new(kind, candidate)
                .with_compile(CompileStatus::Ok, outcome.diagnostics);
            graph.set_synthesized(id, artifact)?;
            transcript.record_node_event(
                id.as_str(),
                "synthesized",
                &format!("attempt {attempt}"),
            );
            return Ok(NodeStatus::Synthesized);
        }
        transcript.record_node_event(
            id.as_str(),
            "attempt-failed",
            &format!(
                "attempt {attempt}: {} diagnostics",
                outcome.diagnostics.len()
            ),
        );
        previous = Some((candidate.clone(), render_diagnostics(&outcome.diagnostics)));
        last_failure = Some((candidate, outcome.diagnostics));
    }
    graph.set_failed(id, "max attempts")?;
    if let Some((source, diagnostics)) = last_failure {
        let artifact =
            FormalArtifact::new(kind, source).with_compile(CompileStatus::Error, diagnostics);
        graph.attach_failure_artifact(id, artifact)?;
    }
    transcript.record_node_event(
        id.as_str(),
        "failed",
        &format!("max attempts ({})", policy.attempts()),
    );
    Ok(NodeStatus::Failed)
}

/// Overall verdict for one statement's synthesis run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FinalStatus {
    /// Every node resolved and the emitted file passed a final check.
    Compiled,
    /// Something failed; the file holds whatever did compile.
    PartialFailure,
}

/// Per-node outcome line for reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeOutcome {
    pub id: String,
    pub name: String,
    pub status: NodeStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalResult {
    pub status: FinalStatus,
    /// The emitted self-contained source file.
    pub file: String,
    /// Whether the emitted file passed a whole-file check (false when the
    /// root theorem was never synthesized).
    pub file_compiles: bool,
    pub outcomes: Vec<NodeOutcome>,
}

/// Synthesize every unresolved node bottom-up, then the root theorem, and
/// emit a single file: import header, synthesized definitions in
/// topological order, final theorem with a placeholder proof.
///
/// Failures degrade instead of aborting: a node with a failed dependency is
/// failed without spending attempts, and the root is still attempted with
/// the failed blocks omitted.
pub fn synthesize_graph(
    graph: &mut DependencyGraph,
    reasoner: &Reasoner,
    compiler: &CompilerGateway,
    policy: &ReflectionPolicy,
    transcript: &Transcript,
) -> Result<FinalResult> {
    policy.validate()?;
    let topo = graph.topological_order()?;
    let root = graph.root().clone();
    debug_assert_eq!(topo.last(), Some(&root), "root is the unique sink");

    for id in topo.iter().filter(|id| **id != root) {
        match graph.node(id)?.status {
            NodeStatus::NeedsSynthesis => {}
            NodeStatus::Pending => {
                graph.set_failed(id, "never planned")?;
                transcript.record_node_event(id.as_str(), "failed", "never planned");
                continue;
            }
            _ => continue,
        }
        match assemble_context(graph, id) {
            Ok(ctx) => {
                synthesize_node(graph, id, &ctx, reasoner, compiler, policy, transcript)?;
            }
            Err(Error::DependencyUnresolved { node, detail }) => {
                graph.set_failed(id, format!("unresolved dependency {node}"))?;
                transcript.record_node_event(id.as_str(), "failed", &detail);
            }
            Err(e) => return Err(e),
        }
    }

    let failed: Vec<String> = graph
        .nodes()
        .filter(|n| n.id != root && n.status == NodeStatus::Failed)
        .map(|n| n.concept.name.clone())
        .collect();
    if !failed.is_empty() {
        transcript.record_node_event(
            root.as_str(),
            "degraded-context",
            &format!("omitting failed nodes: {}", failed.join(", ")),
        );
    }
    let root_ctx = assemble_context_lenient(graph, &root)?;
    let root_status = if graph.node(&root)?.status == NodeStatus::NeedsSynthesis {
        synthesize_node(graph, &root, &root_ctx, reasoner, compiler, policy, transcript)?
    } else {
        graph.node(&root)?.status
    };

    // Emit: header, every synthesized definition in topological order, then
    // the theorem (or a comment recording its absence).
    let mut file = String::from(IMPORT_HEADER);
    file.push('\n');
    for id in topo.iter().filter(|id| **id != root) {
        let node = graph.node(id)?;
        if node.status == NodeStatus::Synthesized {
            let source = &node.artifact.as_ref().expect("artifact").source;
            file.push('\n');
            file.push_str(&strip_import_lines(source));
            file.push('\n');
        }
    }
    file.push('\n');
    if root_status == NodeStatus::Synthesized {
        let source = &graph.node(&root)?.artifact.as_ref().expect("artifact").source;
        file.push_str(&strip_import_lines(source));
        file.push('\n');
    } else {
        file.push_str("-- theorem synthesis failed\n");
    }

    let file_compiles = if root_status == NodeStatus::Synthesized {
        compiler.check(&file)?.success
    } else {
        false
    };
    let status = if file_compiles && failed.is_empty() && root_status == NodeStatus::Synthesized {
        FinalStatus::Compiled
    } else {
        FinalStatus::PartialFailure
    };
    transcript.record_node_event(
        root.as_str(),
        "final-file",
        match status {
            FinalStatus::Compiled => "compiled",
            FinalStatus::PartialFailure => "partial-failure",
        },
    );
    let outcomes = topo
        .iter()
        .map(|id| {
            let n = graph.node(id).expect("topo node");
            NodeOutcome {
                id: n.id.to_string(),
                name: n.concept.name.clone(),
                status: n.status,
                failure: n.failure.clone(),
            }
        })
        .collect();
    Ok(FinalResult {
        status,
        file,
        file_compiles,
        outcomes,
    })
}
