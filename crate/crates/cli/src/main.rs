//! `aria`: formalize informal mathematical statements into compiler-checked
//! formal statements, score semantic fidelity, benchmark over datasets, and
//! replay recorded runs from cache.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use aria_core::{
    formalize_statement, load_dataset, run_benchmark, score_statement, verdict, Backends,
    DatasetRecord, FormalizeOutcome, InformalStatement, RunConfig, RunVerdict, ScorerConfig,
    Transcript, TranscriptRecord,
};

#[derive(Parser)]
#[command(
    name = "aria",
    version,
    about = "Concept-graph auto-formalization engine"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Formalize one informal statement into a single checked source file.
    Formalize(FormalizeArgs),
    /// Score a formal statement against its informal source.
    Score(ScoreArgs),
    /// Run the pipeline over a dataset and report aggregate metrics.
    Eval(EvalArgs),
    /// Re-execute a recorded run purely from cache (zero backend misses).
    Replay(ReplayArgs),
}

/// Flags that override values loaded from the config file.
#[derive(Args, Default)]
struct Overrides {
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Acceptance threshold in [0, 1]: accept iff score > alpha.
    #[arg(long)]
    alpha: Option<f64>,
    /// Informalized-library term index (JSONL).
    #[arg(long)]
    term_index: Option<PathBuf>,
    /// External term-analyzer command reading source on stdin.
    #[arg(long)]
    analyzer_cmd: Option<String>,
    /// Project directory for the real compiler toolchain.
    #[arg(long)]
    lean_project: Option<PathBuf>,
    /// Skip dependency-graph planning; ground top-level keywords only.
    #[arg(long)]
    no_got: bool,
    /// Disable retrieval-augmented grounding.
    #[arg(long)]
    no_rag: bool,
    /// Disable compiler-feedback reflection (one attempt per node).
    #[arg(long)]
    no_reflect: bool,
    /// Score without injecting retrieved term definitions.
    #[arg(long)]
    no_term_grounding: bool,
}

impl Overrides {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        if let Some(alpha) = self.alpha {
            cfg.alpha = alpha;
        }
        if let Some(idx) = &self.term_index {
            cfg.term_index = Some(idx.clone());
        }
        if let Some(cmd) = &self.analyzer_cmd {
            cfg.analyzer_cmd = Some(cmd.clone());
        }
        if let Some(proj) = &self.lean_project {
            cfg.lean_project = Some(proj.clone());
        }
        cfg.no_got |= self.no_got;
        cfg.no_rag |= self.no_rag;
        cfg.no_reflect |= self.no_reflect;
        cfg.no_term_grounding |= self.no_term_grounding;
    }
}

#[derive(Args)]
struct FormalizeArgs {
    /// Statement file: plain text, or a JSON object {"id", "text"}.
    #[arg(long)]
    input: PathBuf,
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Also score the emitted statement and gate the exit status on it.
    #[arg(long)]
    score: bool,
    /// Write the dependency graph as a plain-text record file.
    #[arg(long)]
    dump_graph: Option<PathBuf>,
    /// Transcript output path (default: <out>/transcript.jsonl).
    #[arg(long)]
    transcript: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct ScoreArgs {
    /// Informal statement file: plain text, or a JSON object {"id", "text"}.
    #[arg(long)]
    informal: PathBuf,
    /// Formal source file to judge.
    #[arg(long)]
    formal: PathBuf,
    /// Run configuration (TOML) naming the reasoner backend.
    #[arg(long)]
    config: PathBuf,
    /// Transcript output path (default: <out>/score-transcript.jsonl).
    #[arg(long)]
    transcript: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct EvalArgs {
    /// Dataset file (JSONL: {"id", "informal_text", ...}).
    #[arg(long)]
    dataset: PathBuf,
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Ground-truth labels (JSONL: {"id", "label"}) merged into the dataset.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Machine-readable report path (default: <out>/report.json).
    #[arg(long)]
    report: Option<PathBuf>,
    /// Transcript output path (default: <out>/eval-transcript.jsonl).
    #[arg(long)]
    transcript: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct ReplayArgs {
    /// Transcript of the original run; its header supplies the config.
    #[arg(long)]
    transcript: PathBuf,
    /// Statement file to re-formalize (as in `formalize --input`).
    #[arg(long, conflicts_with = "dataset")]
    input: Option<PathBuf>,
    /// Dataset file to re-evaluate (as in `eval --dataset`).
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Config file overriding the transcript header's embedded config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory override.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Formalize(args) => cmd_formalize(args),
        Command::Score(args) => cmd_score(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Replay(args) => cmd_replay(args),
    }
}

/// Read a statement file: a JSON object {"id", "text", "origin"?}, or plain
/// text whose id is the file stem.
fn read_statement(path: &Path) -> Result<InformalStatement> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading statement {}", path.display()))?;
    let trimmed = text.trim();
    if trimmed.starts_with('{') {
        let v: serde_json::Value = serde_json::from_str(trimmed)
            .with_context(|| format!("parsing statement {}", path.display()))?;
        let id = v
            .get("id")
            .and_then(|x| x.as_str())
            .context("statement JSON needs a string \"id\"")?;
        let body = v
            .get("text")
            .and_then(|x| x.as_str())
            .context("statement JSON needs a string \"text\"")?;
        let mut stmt = InformalStatement::new(id, body)?;
        if let Some(origin) = v.get("origin").and_then(|x| x.as_str()) {
            stmt.origin = Some(origin.to_string());
        }
        return Ok(stmt);
    }
    let id = path
        .file_stem()
        .and_then(|s| s.to_str())
        .context("statement path has no usable file stem")?;
    Ok(InformalStatement::new(id, trimmed)?)
}

fn exit_for(v: RunVerdict) -> ExitCode {
    match v {
        RunVerdict::Success => ExitCode::SUCCESS,
        RunVerdict::Failure => ExitCode::FAILURE,
    }
}

fn print_outcome(outcome: &FormalizeOutcome, out_file: &Path) {
    for node in &outcome.result.outcomes {
        match &node.failure {
            Some(reason) => println!("node {:<28} {:?} ({reason})", node.name, node.status),
            None => println!("node {:<28} {:?}", node.name, node.status),
        }
    }
    println!("wrote {}", out_file.display());
    println!(
        "status: {:?}; file compiles: {}",
        outcome.result.status, outcome.result.file_compiles
    );
    if let Some(score) = &outcome.score {
        println!(
            "score: {:.2} (alpha {:.2}) -> {}",
            score.score,
            score.alpha,
            if score.accepted { "accepted" } else { "rejected" }
        );
    }
}

fn cmd_formalize(args: FormalizeArgs) -> Result<ExitCode> {
    let mut cfg = RunConfig::load(&args.config)?;
    args.overrides.apply(&mut cfg);
    if args.score {
        cfg.score = true;
    }
    let statement = read_statement(&args.input)?;
    std::fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("creating {}", cfg.out_dir.display()))?;
    let tpath = args
        .transcript
        .unwrap_or_else(|| cfg.out_dir.join("transcript.jsonl"));
    let transcript = Transcript::with_file(&tpath)?;
    let backends = Backends::from_config(&cfg, transcript.clone(), false)?;
    let outcome = formalize_statement(&statement, &cfg, &backends, cfg.score)?;

    let out_file = cfg.out_dir.join(format!("{}.lean", statement.id));
    std::fs::write(&out_file, &outcome.result.file)?;
    if let Some(gpath) = &args.dump_graph {
        std::fs::write(gpath, outcome.graph.to_records())?;
    }
    print_outcome(&outcome, &out_file);
    Ok(exit_for(verdict(&outcome, cfg.score)))
}

fn cmd_score(args: ScoreArgs) -> Result<ExitCode> {
    let mut cfg = RunConfig::load(&args.config)?;
    args.overrides.apply(&mut cfg);
    let informal = read_statement(&args.informal)?;
    let formal = std::fs::read_to_string(&args.formal)
        .with_context(|| format!("reading formal source {}", args.formal.display()))?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    let tpath = args
        .transcript
        .unwrap_or_else(|| cfg.out_dir.join("score-transcript.jsonl"));
    let transcript = Transcript::with_file(&tpath)?;
    let backends = Backends::from_config(&cfg, transcript, false)?;
    let scfg = ScorerConfig {
        alpha: cfg.alpha,
        lambda: cfg.lambda,
        term_grounding: !cfg.no_term_grounding,
    };
    let report = score_statement(
        &informal,
        &formal,
        &backends.reasoner,
        backends.term_index.as_ref(),
        backends.analyzer.as_ref(),
        &scfg,
    )?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(if report.accepted {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

/// Merge a {"id", "label"} JSONL file into dataset ground-truth labels.
fn merge_labels(dataset: &mut [DatasetRecord], path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading labels {}", path.display()))?;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v: serde_json::Value = serde_json::from_str(line)
            .with_context(|| format!("labels line {}", i + 1))?;
        let id = v
            .get("id")
            .and_then(|x| x.as_str())
            .with_context(|| format!("labels line {}: needs string \"id\"", i + 1))?;
        let label = v
            .get("label")
            .and_then(|x| x.as_bool())
            .with_context(|| format!("labels line {}: needs boolean \"label\"", i + 1))?;
        match dataset.iter_mut().find(|r| r.id == id) {
            Some(rec) => rec.ground_truth_label = Some(label),
            None => bail!("labels line {}: unknown problem id '{id}'", i + 1),
        }
    }
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<ExitCode> {
    let mut cfg = RunConfig::load(&args.config)?;
    args.overrides.apply(&mut cfg);
    let mut dataset = load_dataset(&args.dataset)?;
    if let Some(labels) = &args.labels {
        merge_labels(&mut dataset, labels)?;
    }
    std::fs::create_dir_all(&cfg.out_dir)?;
    let tpath = args
        .transcript
        .unwrap_or_else(|| cfg.out_dir.join("eval-transcript.jsonl"));
    let transcript = Transcript::with_file(&tpath)?;
    let backends = Backends::from_config(&cfg, transcript, false)?;
    let report = run_benchmark(&dataset, &cfg, &backends)?;
    print!("{}", report.render());
    let rpath = args
        .report
        .unwrap_or_else(|| cfg.out_dir.join("report.json"));
    std::fs::write(&rpath, serde_json::to_string_pretty(&report)?)?;
    println!("wrote {}", rpath.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_replay(args: ReplayArgs) -> Result<ExitCode> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => {
            let records = Transcript::load(&args.transcript)?;
            let header = records
                .iter()
                .find_map(|r| match r {
                    TranscriptRecord::Header { config, .. } => Some(config.clone()),
                    _ => None,
                })
                .context("transcript has no header record")?;
            serde_json::from_value(header).context("transcript header config is invalid")?
        }
    };
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    std::fs::create_dir_all(&cfg.out_dir)?;
    let transcript = Transcript::with_file(&cfg.out_dir.join("replay-transcript.jsonl"))?;
    let backends = Backends::from_config(&cfg, transcript.clone(), true)?;

    let code = match (&args.input, &args.dataset) {
        (Some(input), None) => {
            let statement = read_statement(input)?;
            let outcome = formalize_statement(&statement, &cfg, &backends, cfg.score)?;
            let out_file = cfg.out_dir.join(format!("{}.lean", statement.id));
            std::fs::write(&out_file, &outcome.result.file)?;
            print_outcome(&outcome, &out_file);
            exit_for(verdict(&outcome, cfg.score))
        }
        (None, Some(dataset)) => {
            let dataset = load_dataset(dataset)?;
            let report = run_benchmark(&dataset, &cfg, &backends)?;
            print!("{}", report.render());
            let rpath = cfg.out_dir.join("replay-report.json");
            std::fs::write(&rpath, serde_json::to_string_pretty(&report)?)?;
            println!("wrote {}", rpath.display());
            ExitCode::SUCCESS
        }
        _ => bail!("replay needs exactly one of --input or --dataset"),
    };
    let stats = transcript.call_stats();
    println!(
        "replayed {} calls: {} hits, {} misses",
        stats.total, stats.hits, stats.misses
    );
    Ok(code)
}
