//! Top-down decomposition: expand an informal statement into a dependency
//! graph of concepts, grounding each frontier node and recursing into the
//! prerequisites of whatever the library cannot supply.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::graph::{Concept, DependencyGraph, GraphError, InformalStatement, NodeId, NodeStatus};
use crate::grounding::{ground, RetrievalGateway};
use crate::llm::{Purpose, Reasoner};
use crate::prompts;
use crate::transcript::Transcript;

/// Termination guard for graph expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExpansionBudget {
    /// Deepest concept level to expand; the statement root sits at depth 0.
    pub max_depth: u32,
    /// Total node allowance, root included.
    pub max_nodes: usize,
}

impl Default for ExpansionBudget {
    fn default() -> Self {
        Self {
            max_depth: 6,
            max_nodes: 64,
        }
    }
}

impl ExpansionBudget {
    pub fn validate(&self) -> Result<()> {
        if self.max_depth < 1 {
            return Err(Error::config("max_depth", "must be at least 1"));
        }
        if self.max_nodes < 1 {
            return Err(Error::config("max_nodes", "must be at least 1"));
        }
        Ok(())
    }
}

/// Parse "name :: gloss" concept lines, one concept per line.
///
/// Lines without the separator are skipped; list markers are tolerated;
/// duplicates (by canonical name) keep the first gloss.
pub fn parse_concept_lines(text: &str) -> Vec<Concept> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line
            .trim()
            .trim_start_matches(|c: char| c.is_ascii_digit() || "-*•.)".contains(c))
            .trim();
        let Some((name, gloss)) = line.split_once("::") else {
            continue;
        };
        let Ok(concept) = Concept::new(name.trim(), gloss.trim().to_string()) else {
            continue;
        };
        if seen.insert(concept.name.clone()) {
            out.push(concept);
        }
    }
    out
}

/// Ask which concepts the statement directly depends on.
///
/// Unparseable output earns one format re-prompt; a second failure is
/// `PlanningFailed`.
pub fn extract_root_concepts(
    statement: &InformalStatement,
    reasoner: &Reasoner,
) -> Result<Vec<Concept>> {
    let messages = prompts::decompose_statement(&statement.text);
    let reply = reasoner.ask(Purpose::Decompose, messages.clone())?;
    let concepts = parse_concept_lines(&reply.text);
    if !concepts.is_empty() {
        return Ok(concepts);
    }
    let retry = prompts::with_reprompt(messages, &reply.text, prompts::CONCEPT_FORMAT_REMINDER);
    let reply = reasoner.ask(Purpose::Decompose, retry)?;
    let concepts = parse_concept_lines(&reply.text);
    if concepts.is_empty() {
        return Err(Error::PlanningFailed {
            detail: format!(
                "no parseable concept lines for statement '{}' after re-prompt",
                statement.id
            ),
        });
    }
    Ok(concepts)
}

/// Ask for the immediate prerequisites of an ungrounded concept.
/// An empty list is legal: the concept must then be synthesized from
/// already-available context alone.
pub fn propose_dependencies(concept: &Concept, reasoner: &Reasoner) -> Result<Vec<Concept>> {
    let messages = prompts::propose_dependencies(&concept.name, &concept.gloss);
    let reply = reasoner.ask(Purpose::Decompose, messages)?;
    Ok(parse_concept_lines(&reply.text))
}

fn root_concept(statement: &InformalStatement) -> Result<Concept> {
    Concept::new(format!("statement {}", statement.id), statement.text.clone())
        .map_err(Error::from)
}

/// Insert `children` under `parent`, returning ids of newly created nodes.
///
/// A prerequisite that would close a cycle is dropped and logged; a
/// duplicate concept merges into its existing node.
fn attach_children(
    graph: &mut DependencyGraph,
    parent: &NodeId,
    children: Vec<Concept>,
    transcript: &Transcript,
) -> Result<Vec<NodeId>> {
    let mut fresh = Vec::new();
    for child in children {
        let name = child.name.clone();
        match graph.add_node(child, Some(parent)) {
            Ok(id) => {
                if graph.node(&id)?.status == NodeStatus::Pending && !fresh.contains(&id) {
                    fresh.push(id);
                }
            }
            Err(GraphError::Cycle { .. }) => {
                transcript.record_node_event(
                    parent.as_str(),
                    "cycle-rejected",
                    &format!("dropped prerequisite '{name}'"),
                );
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(fresh)
}

/// Breadth-first expansion until every branch ends in a grounded leaf, a
/// synthesis obligation with no further prerequisites, or a budget cut.
///
/// Budget exhaustion is not an error: nodes beyond the allowance are marked
/// `Failed("budget")` and left as leaves.
pub fn expand(
    statement: &InformalStatement,
    reasoner: &Reasoner,
    retrieval: Option<&RetrievalGateway>,
    k: usize,
    budget: &ExpansionBudget,
    transcript: &Transcript,
) -> Result<DependencyGraph> {
    budget.validate()?;
    let mut graph = DependencyGraph::new(root_concept(statement)?);
    let root = graph.root().clone();
    graph.set_needs_synthesis(&root)?;
    transcript.record_node_event(root.as_str(), "root", &statement.id);

    let concepts = extract_root_concepts(statement, reasoner)?;
    let mut frontier = attach_children(&mut graph, &root, concepts, transcript)?;
    let mut admitted = 1usize; // the root consumes one slot

    while !frontier.is_empty() {
        // Deterministic order: one depth level at a time, names ascending.
        frontier.sort_by(|a, b| {
            let na = &graph.node(a).expect("frontier node").concept.name;
            let nb = &graph.node(b).expect("frontier node").concept.name;
            na.cmp(nb).then_with(|| a.cmp(b))
        });
        let mut next = Vec::new();
        for id in frontier.drain(..) {
            let node = graph.node(&id)?;
            if node.status != NodeStatus::Pending {
                continue; // merged into an already-processed node
            }
            if node.depth > budget.max_depth || admitted >= budget.max_nodes {
                graph.set_failed(&id, "budget")?;
                transcript.record_node_event(id.as_str(), "failed", "budget");
                continue;
            }
            admitted += 1;
            let concept = node.concept.clone();
            let status = ground(&mut graph, &id, reasoner, retrieval, k, transcript)?;
            if status == NodeStatus::NeedsSynthesis {
                let deps = propose_dependencies(&concept, reasoner)?;
                next.extend(attach_children(&mut graph, &id, deps, transcript)?);
            }
        }
        frontier = next;
    }
    Ok(graph)
}

/// Single-level alternative: extract keywords, ground each once, never
/// recurse. Produces graphs of depth at most 1.
pub fn flat_plan(
    statement: &InformalStatement,
    reasoner: &Reasoner,
    retrieval: Option<&RetrievalGateway>,
    k: usize,
    transcript: &Transcript,
) -> Result<DependencyGraph> {
    let mut graph = DependencyGraph::new(root_concept(statement)?);
    let root = graph.root().clone();
    graph.set_needs_synthesis(&root)?;
    transcript.record_node_event(root.as_str(), "root", &statement.id);

    let keywords = match extract_root_concepts(statement, reasoner) {
        Ok(c) => c,
        Err(Error::PlanningFailed { .. }) => Vec::new(),
        Err(e) => return Err(e),
    };
    let mut ids = attach_children(&mut graph, &root, keywords, transcript)?;
    ids.sort_by(|a, b| {
        let na = &graph.node(a).expect("keyword node").concept.name;
        let nb = &graph.node(b).expect("keyword node").concept.name;
        na.cmp(nb).then_with(|| a.cmp(b))
    });
    for id in ids {
        ground(&mut graph, &id, reasoner, retrieval, k, transcript)?;
    }
    Ok(graph)
}
