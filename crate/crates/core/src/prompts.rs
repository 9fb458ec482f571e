//! Prompt builders for every LLM purpose. Templates are fixed: they are part
//! of the request content and therefore of the cache digest, so changing them
//! invalidates recorded runs.

use crate::grounding::GroundingCandidate;
use crate::llm::ChatMessage;
use crate::scorer::{SubtaskList, TermInfo};

pub const PLANNER_SYSTEM: &str = "You are a mathematical planning assistant. You identify the \
     concepts a statement or definition depends on. Answer with one concept per line in the \
     exact format `name :: short informal gloss`, and nothing else. Answer `none` when there \
     are no prerequisites.";

pub const GROUND_SYSTEM: &str = "You match informal mathematical concepts to canonical formal \
     library definitions.";

pub const SYNTH_SYSTEM: &str = "You write formal mathematical definitions and theorem \
     statements in Lean. Build only on the provided context. Every theorem ends with the \
     placeholder proof `sorry`. Reply with exactly one fenced code block.";

pub const SCORER_SYSTEM: &str = "You are a meticulous reviewer of formal mathematics. You \
     judge whether a formal statement faithfully captures an informal one.";

/// Format reminder appended after an unparseable reply; the re-prompt carries
/// the previous exchange so the digest differs from the first request.
pub fn with_reprompt(
    mut messages: Vec<ChatMessage>,
    previous_reply: &str,
    reminder: &str,
) -> Vec<ChatMessage> {
    messages.push(ChatMessage::assistant(previous_reply));
    messages.push(ChatMessage::user(reminder));
    messages
}

pub const CONCEPT_FORMAT_REMINDER: &str = "Your previous answer did not follow the required \
     format. Reply again with one concept per line, in the exact format `name :: gloss`.";

pub fn decompose_statement(statement_text: &str) -> Vec<ChatMessage> {
    vec![
        ChatMessage::system(PLANNER_SYSTEM),
        ChatMessage::user(format!(
            "Statement:\n{statement_text}\n\nList the mathematical concepts this statement \
             directly depends on."
        )),
    ]
}

pub fn propose_dependencies(name: &str, gloss: &str) -> Vec<ChatMessage> {
    vec![
        ChatMessage::system(PLANNER_SYSTEM),
        ChatMessage::user(format!(
            "Concept: {name}\nGloss: {gloss}\n\nList the immediate prerequisite concepts \
             needed to define it formally."
        )),
    ]
}

pub const SELECT_FORMAT_REMINDER: &str = "Your previous answer was not a candidate number. \
     Reply with only the number of the single best candidate, or the word NONE.";

pub fn ground_select(name: &str, gloss: &str, candidates: &[GroundingCandidate]) -> Vec<ChatMessage> {
    let mut listing = String::new();
    for c in candidates {
        listing.push_str(&format!(
            "{}. {} : {} — {}\n",
            c.rank, c.formal_name, c.formal_statement, c.informal_description
        ));
    }
    vec![
        ChatMessage::system(GROUND_SYSTEM),
        ChatMessage::user(format!(
            "Concept: {name} — {gloss}\n\nCandidates:\n{listing}\nAnswer with the number of \
             the single best canonical definition for the concept, or NONE if no candidate \
             matches."
        )),
    ]
}

pub fn ground_recall(name: &str, gloss: &str) -> Vec<ChatMessage> {
    vec![
        ChatMessage::system(GROUND_SYSTEM),
        ChatMessage::user(format!(
            "Concept: {name} — {gloss}\n\nState the fully qualified formal library name for \
             this concept, or NONE if you do not know one. Answer with the name only."
        )),
    ]
}

/// Rendered context block shared by synthesis and reflection prompts.
pub fn context_block(grounded: &[(String, String)], synthesized: &[String]) -> String {
    let mut out = String::new();
    if !grounded.is_empty() {
        out.push_str("Available library definitions (do not re-define):\n");
        for (name, signature) in grounded {
            out.push_str(&format!("- {name} : {signature}\n"));
        }
    }
    if !synthesized.is_empty() {
        out.push_str("Previously synthesized code (already compiled, in scope):\n```\n");
        for block in synthesized {
            out.push_str(block);
            if !block.ends_with('\n') {
                out.push('\n');
            }
        }
        out.push_str("```\n");
    }
    if out.is_empty() {
        out.push_str("No prior context; build from the core library alone.\n");
    }
    out
}

pub fn synthesize(task: &str, context: &str) -> Vec<ChatMessage> {
    vec![
        ChatMessage::system(SYNTH_SYSTEM),
        ChatMessage::user(format!("{context}\nTask: {task}\n")),
    ]
}

pub fn reflect(
    task: &str,
    context: &str,
    previous_source: &str,
    diagnostics: &str,
) -> Vec<ChatMessage> {
    vec![
        ChatMessage::system(SYNTH_SYSTEM),
        ChatMessage::user(format!(
            "{context}\nTask: {task}\n\nThe previous attempt failed to compile.\nPrevious \
             code:\n```\n{previous_source}\n```\nCompiler diagnostics:\n{diagnostics}\n\n\
             Produce a corrected version."
        )),
    ]
}

pub const SUBTASK_FORMAT_REMINDER: &str = "Your previous answer did not follow the required \
     format. Reply again with a `Conditions:` section and a `Conclusions:` section, each a \
     numbered list.";

pub fn scorer_decompose(informal_text: &str) -> Vec<ChatMessage> {
    vec![
        ChatMessage::system(SCORER_SYSTEM),
        ChatMessage::user(format!(
            "Statement:\n{informal_text}\n\nDecompose this statement into atomic conditions \
             and conclusions. Respond with exactly two sections:\nConditions:\n1. ...\n\
             Conclusions:\n1. ..."
        )),
    ]
}

pub const MATCH_FORMAT_REMINDER: &str = "Your previous answer was missing `Match:` lines. \
     Reply again: for every subtask, in order, one line `Match: Perfect match.` or `Match: \
     Minor inconsistency.` or `Match: Major inconsistency.`, then the same for the final \
     missing-conditions check.";

/// Render the retrieved term records the way the index stores them.
pub fn term_block(terms: &[TermInfo]) -> String {
    let mut out = String::new();
    for t in terms {
        if t.known {
            out.push_str(&format!(
                "- name: {}\n  kind: {}\n  type: {}\n  value: {}\n  informal name: {}\n  \
                 informal description: {}\n",
                t.name, t.kind, t.type_sig, t.value, t.informal_name, t.informal_description
            ));
        } else {
            out.push_str(&format!(
                "- name: {}\n  (unknown term: not found in the library index)\n",
                t.name
            ));
        }
    }
    out
}

pub fn scorer_evaluate(
    informal_text: &str,
    formal_source: &str,
    subtasks: &SubtaskList,
    terms: Option<&[TermInfo]>,
) -> Vec<ChatMessage> {
    let mut body = format!(
        "Informal statement:\n{informal_text}\n\nFormal statement:\n```\n{formal_source}\n```\n"
    );
    if let Some(terms) = terms {
        body.push_str("\nRetrieved terms:\n");
        body.push_str(&term_block(terms));
    }
    body.push_str("\nSubtasks:\n");
    let mut i = 1;
    for c in &subtasks.conditions {
        body.push_str(&format!("{i}. Condition: {c}\n"));
        i += 1;
    }
    for c in &subtasks.conclusions {
        body.push_str(&format!("{i}. Conclusion: {c}\n"));
        i += 1;
    }
    body.push_str(&format!(
        "{i}. Check for missing conditions / implicit conditions.\n"
    ));
    body.push_str(
        "\nFor each numbered item, in order, judge how faithfully the formal statement \
         renders it. Output for each one line `Match: Perfect match.` or `Match: Minor \
         inconsistency.` or `Match: Major inconsistency.`, followed by a brief justification \
         on the same line.",
    );
    vec![ChatMessage::system(SCORER_SYSTEM), ChatMessage::user(body)]
}
