//! Library-consumer roundtrip: configure from TOML, build the backend set,
//! formalize a statement, and inspect the outcome — using only root
//! re-exports, so the public surface stays sufficient for embedding.

use std::fs;

use aria_core::{
    call_stats, formalize_statement, verdict, Backends, FinalStatus, InformalStatement, NodeStatus,
    RunConfig, RunVerdict, Transcript,
};

#[test]
fn configure_formalize_and_inspect() {
    let tmp = tempfile::tempdir().unwrap();
    let p = |name: &str| tmp.path().join(name);

    fs::write(
        p("llm_script.jsonl"),
        concat!(
            r#"{"match": "List the mathematical", "response": "integral domain :: a commutative ring with no zero divisors"}"#,
            "\n",
            r#"{"match": "Concept: integral domain —", "response": "1"}"#,
            "\n",
            r#"{"match": "one formal theorem", "response": "```lean\ntheorem finite_integral_domain_is_field (R : Type) [CommRing R] [IsDomain R] [Finite R] : IsField R := by\n  sorry\n```"}"#,
            "\n",
        ),
    )
    .unwrap();
    fs::write(
        p("index.jsonl"),
        concat!(
            r#"{"name": "IsDomain", "kind": "class", "type": "(α : Type u) [Ring α] : Prop", "value": "", "informal_name": "integral domain", "informal_description": "a nontrivial ring with no zero divisors"}"#,
            "\n",
            r#"{"name": "IsField", "kind": "def", "type": "(R : Type u) [Semiring R] : Prop", "value": "", "informal_name": "field predicate", "informal_description": "commutative, nontrivial, every nonzero element invertible"}"#,
            "\n",
        ),
    )
    .unwrap();
    fs::write(p("compiler_script.jsonl"), "{\"output\": \"\"}\n{\"output\": \"\"}\n").unwrap();

    let toml = format!(
        "llm_script = {:?}\nterm_index = {:?}\ncompiler_script = {:?}\ncache_dir = {:?}\nout_dir = {:?}\n",
        p("llm_script.jsonl"),
        p("index.jsonl"),
        p("compiler_script.jsonl"),
        p("cache"),
        p("out"),
    );
    fs::write(p("run.toml"), toml).unwrap();

    let cfg = RunConfig::load(&p("run.toml")).unwrap();
    cfg.validate().unwrap();

    let transcript = Transcript::new();
    let backends = Backends::from_config(&cfg, transcript.clone(), false).unwrap();
    let statement =
        InformalStatement::new("wedderburn-lite", "every finite integral domain is a field")
            .unwrap();
    let outcome = formalize_statement(&statement, &cfg, &backends, false).unwrap();

    assert_eq!(verdict(&outcome, false), RunVerdict::Success);
    assert_eq!(outcome.result.status, FinalStatus::Compiled);
    assert!(outcome.result.file_compiles);
    assert!(outcome.result.file.starts_with("import Mathlib"));
    assert!(outcome.result.file.contains("finite_integral_domain_is_field"));

    // One grounded concept under the synthesized root.
    let root = outcome.graph.root();
    assert_eq!(outcome.graph.len(), 2);
    assert_eq!(outcome.graph.node(root).unwrap().status, NodeStatus::Synthesized);
    let concept = outcome
        .graph
        .nodes()
        .find(|n| &n.id != root)
        .expect("concept node");
    assert_eq!(concept.status, NodeStatus::Grounded);
    assert_eq!(
        concept.grounding.as_ref().unwrap().formal_name,
        "IsDomain"
    );

    // Call accounting end to end: 3 LLM misses, 1 retrieval, 2 compiles.
    let stats = call_stats(&transcript.records());
    assert_eq!(stats.llm_misses, 3);
    assert_eq!(stats.retrieval_calls, 1);
    assert_eq!(stats.compiler_calls, 2);
    assert_eq!(stats.problems, 1);
}
