//! Gateway to the formal-language compiler: run a syntactic/type check on
//! candidate source and parse diagnostics. Backends are the real toolchain
//! (external process) or a scripted verdict queue for deterministic tests.

use std::io::Read as _;
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::sync::{Arc, Condvar, Mutex, OnceLock};
use std::time::{Duration, Instant};

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::cache::ResponseCache;
use crate::digest::sha256_hex;
use crate::error::{Error, Result};
use crate::graph::{Diagnostic, Severity};
use crate::transcript::{BackendKind, Transcript};

/// Outcome of one compiler check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompileResult {
    /// True iff no error-severity diagnostic was parsed.
    pub success: bool,
    pub diagnostics: Vec<Diagnostic>,
    pub raw_output: String,
    pub duration_s: f64,
}

/// Parse a compiler output stream into diagnostics.
///
/// One diagnostic per `file:line:col: severity: message` line; other
/// non-blank lines are folded into the preceding diagnostic's message, or
/// dropped when none precedes (lenient parser).
pub fn parse_diagnostics(raw: &str) -> Vec<Diagnostic> {
    static HEAD: OnceLock<Regex> = OnceLock::new();
    let head = HEAD.get_or_init(|| {
        Regex::new(r"^([^:\s][^:]*):(\d+):(\d+):\s*(error|warning|info):\s*(.*)$").expect("regex")
    });
    let mut out: Vec<Diagnostic> = Vec::new();
    for line in raw.lines() {
        if let Some(cap) = head.captures(line) {
            let severity = match &cap[4] {
                "error" => Severity::Error,
                "warning" => Severity::Warning,
                _ => Severity::Info,
            };
            out.push(Diagnostic {
                severity,
                line: cap[2].parse::<u32>().unwrap_or(1).max(1),
                column: cap[3].parse().unwrap_or(0),
                message: cap[5].to_string(),
            });
        } else if !line.trim().is_empty() {
            if let Some(last) = out.last_mut() {
                last.message.push('\n');
                last.message.push_str(line.trim_end());
            }
        }
    }
    out
}

/// A compiler invocation target. `run` returns the raw diagnostics stream;
/// timeouts surface as a synthetic parseable error line, transport problems
/// as `BackendUnavailable`.
pub trait CompilerBackend: Send + Sync {
    /// Stable identifier folded into the cache key.
    fn id(&self) -> &str;
    fn run(&self, source: &str) -> Result<String>;
    /// Whether identical sources may be served from cache in normal mode.
    /// Scripted queues say no: every check must consume one verdict.
    fn cache_read(&self) -> bool;
}

/// Deterministic verdict queue: each check consumes the next raw output
/// string, regardless of the submitted source.
pub struct ScriptedCompiler {
    verdicts: Mutex<Vec<String>>,
}

/// One line of a scripted compiler fixture file.
#[derive(Debug, Serialize, Deserialize)]
struct VerdictLine {
    output: String,
}

impl ScriptedCompiler {
    pub fn new(verdicts: Vec<String>) -> Self {
        Self {
            verdicts: Mutex::new(verdicts),
        }
    }

    /// Success verdicts are empty outputs; failures carry diagnostic lines.
    pub fn from_outputs(outputs: &[&str]) -> Self {
        Self::new(outputs.iter().map(|s| s.to_string()).collect())
    }

    /// Line-delimited fixture: one JSON object {"output": "..."} per check.
    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut verdicts = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let v: VerdictLine = serde_json::from_str(line)
                .map_err(|e| Error::parse("compiler script", format!("line {}: {e}", i + 1)))?;
            verdicts.push(v.output);
        }
        Ok(Self::new(verdicts))
    }

    pub fn from_jsonl_file(path: &std::path::Path) -> Result<Self> {
        Self::from_jsonl(&std::fs::read_to_string(path)?)
    }

    pub fn remaining(&self) -> usize {
        self.verdicts.lock().expect("verdict lock").len()
    }
}

impl CompilerBackend for ScriptedCompiler {
    fn id(&self) -> &str {
        "scripted-compiler"
    }

    fn run(&self, _source: &str) -> Result<String> {
        let mut verdicts = self.verdicts.lock().expect("verdict lock");
        if verdicts.is_empty() {
            return Err(Error::ScriptExhausted {
                backend: "scripted-compiler".to_string(),
                detail: "verdict queue is empty".to_string(),
            });
        }
        Ok(verdicts.remove(0))
    }

    fn cache_read(&self) -> bool {
        false
    }
}

/// Real toolchain invocation: writes the source to a temporary file inside
/// the configured project directory and runs the configured command on it.
pub struct LeanToolchain {
    id: String,
    project_dir: PathBuf,
    command: Vec<String>,
    timeout: Duration,
}

impl LeanToolchain {
    /// `command` is whitespace-split; the temp file path is appended as the
    /// final argument. Typical value: "lake env lean".
    pub fn new(project_dir: impl Into<PathBuf>, command: &str, timeout: Duration) -> Result<Self> {
        let parts: Vec<String> = command.split_whitespace().map(str::to_string).collect();
        if parts.is_empty() {
            return Err(Error::config("compiler_command", "must not be empty"));
        }
        let project_dir = project_dir.into();
        Ok(Self {
            id: format!("toolchain:{command}"),
            project_dir,
            command: parts,
            timeout,
        })
    }
}

impl CompilerBackend for LeanToolchain {
    fn id(&self) -> &str {
        &self.id
    }

    fn run(&self, source: &str) -> Result<String> {
        let file = tempfile::Builder::new()
            .prefix("check-")
            .suffix(".lean")
            .tempfile_in(&self.project_dir)
            .map_err(|e| {
                Error::backend_unavailable("compiler", format!("temp file: {e}"))
            })?;
        std::fs::write(file.path(), source)?;
        let mut child = Command::new(&self.command[0])
            .args(&self.command[1..])
            .arg(file.path())
            .current_dir(&self.project_dir)
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| {
                Error::backend_unavailable(
                    "compiler",
                    format!("failed to start `{}`: {e}", self.command.join(" ")),
                )
            })?;
        // Drain both pipes on side threads so a chatty compiler cannot fill
        // the pipe buffer and deadlock against the timeout poll.
        let mut stdout_pipe = child.stdout.take().expect("stdout piped");
        let mut stderr_pipe = child.stderr.take().expect("stderr piped");
        let stdout_reader = std::thread::spawn(move || {
            let mut buf = String::new();
            let _ = stdout_pipe.read_to_string(&mut buf);
            buf
        });
        let stderr_reader = std::thread::spawn(move || {
            let mut buf = String::new();
            let _ = stderr_pipe.read_to_string(&mut buf);
            buf
        });
        let deadline = Instant::now() + self.timeout;
        let timed_out = loop {
            match child.try_wait()? {
                Some(_) => break false,
                None if Instant::now() >= deadline => {
                    let _ = child.kill();
                    let _ = child.wait();
                    break true;
                }
                None => std::thread::sleep(Duration::from_millis(20)),
            }
        };
        let stdout = stdout_reader.join().unwrap_or_default();
        let stderr = stderr_reader.join().unwrap_or_default();
        if timed_out {
            // Deterministic synthetic diagnostic; parses like a compiler line.
            return Ok(format!(
                "input:1:0: error: timeout after {}s",
                self.timeout.as_secs()
            ));
        }
        let mut raw = stdout;
        if !stderr.is_empty() {
            if !raw.is_empty() && !raw.ends_with('\n') {
                raw.push('\n');
            }
            raw.push_str(&stderr);
        }
        Ok(raw)
    }

    fn cache_read(&self) -> bool {
        true
    }
}

/// Counting semaphore bounding concurrent real-compiler invocations.
#[derive(Clone)]
struct Pool {
    state: Arc<(Mutex<usize>, Condvar)>,
    capacity: usize,
}

impl Pool {
    fn new(capacity: usize) -> Self {
        Self {
            state: Arc::new((Mutex::new(0), Condvar::new())),
            capacity: capacity.max(1),
        }
    }

    fn acquire(&self) -> PoolGuard {
        let (lock, cv) = &*self.state;
        let mut in_use = lock.lock().expect("pool lock");
        while *in_use >= self.capacity {
            in_use = cv.wait(in_use).expect("pool wait");
        }
        *in_use += 1;
        PoolGuard { pool: self.clone() }
    }
}

struct PoolGuard {
    pool: Pool,
}

impl Drop for PoolGuard {
    fn drop(&mut self) {
        let (lock, cv) = &*self.pool.state;
        *lock.lock().expect("pool lock") -= 1;
        cv.notify_one();
    }
}

/// Cache-backed, transcript-logging front door for compiler checks.
pub struct CompilerGateway {
    backend: Box<dyn CompilerBackend>,
    cache: ResponseCache,
    transcript: Transcript,
    replay: bool,
    pool: Pool,
}

impl CompilerGateway {
    pub fn new(
        backend: Box<dyn CompilerBackend>,
        cache: ResponseCache,
        transcript: Transcript,
    ) -> Self {
        Self {
            backend,
            cache,
            transcript,
            replay: false,
            pool: Pool::new(2),
        }
    }

    pub fn replay(mut self, enabled: bool) -> Self {
        self.replay = enabled;
        self
    }

    pub fn pool_size(mut self, capacity: usize) -> Self {
        self.pool = Pool::new(capacity);
        self
    }

    /// Check one self-contained source unit.
    pub fn check(&self, source: &str) -> Result<CompileResult> {
        let _permit = self.pool.acquire();
        let canonical = serde_json::json!({
            "backend": self.backend.id(),
            "source": source,
        })
        .to_string();
        let digest = sha256_hex(canonical.as_bytes());
        let start = Instant::now();

        let (raw, hit) = if self.replay {
            match self.cache.get(&digest)? {
                Some(raw) => (raw, true),
                None => return Err(Error::CacheMiss { digest }),
            }
        } else if self.backend.cache_read() {
            match self.cache.get(&digest)? {
                Some(raw) => (raw, true),
                None => {
                    let raw = self.backend.run(source)?;
                    self.cache.put(&digest, &raw)?;
                    (raw, false)
                }
            }
        } else {
            // Scripted queue: always consume a verdict, but record the payload
            // so replays can be served from cache. If one source is checked
            // twice with different scripted verdicts, the later write wins.
            let raw = self.backend.run(source)?;
            self.cache.put(&digest, &raw)?;
            (raw, false)
        };

        let diagnostics = parse_diagnostics(&raw);
        let success = diagnostics.iter().all(|d| d.severity != Severity::Error);
        let duration_s = start.elapsed().as_secs_f64();
        self.transcript.record_call(
            BackendKind::Compiler,
            "compile",
            &digest,
            hit,
            start.elapsed().as_millis() as u64,
        );
        Ok(CompileResult {
            success,
            diagnostics,
            raw_output: raw,
            duration_s,
        })
    }
}
