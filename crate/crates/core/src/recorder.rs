//! The Recorder: per-stage token ledger, line-delimited session log, bug
//! mining over runtime logs, and log replay.
//!
//! Every event becomes one JSONL record `{ts, kind, payload}`. The log is
//! flushed per record; a failed write aborts the session, trading progress
//! for integrity.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use chrono::{DateTime, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::gateway::{LlmRequest, LlmResponse, Stage, Usage, STAGES};
use crate::memory::{DialogueEntry, MemorySnapshot, OperationRecord};
use crate::util::{text_digest, Fnv1a};

#[derive(Debug, Error)]
pub enum RecorderError {
    #[error("session log write failed: {0}")]
    LogWrite(#[from] std::io::Error),
    #[error("session log parse failed at line {line}: {message}")]
    Replay { line: usize, message: String },
}

/// Per-stage token totals. The grand total is always the sum of the six
/// stage totals, by construction.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenLedger {
    stage_totals: [u64; 6],
}

impl TokenLedger {
    pub fn new() -> Self {
        TokenLedger::default()
    }

    pub fn charge(&mut self, stage: Stage, usage: Usage) {
        self.stage_totals[stage.index()] += usage.total();
    }

    pub fn stage_total(&self, stage: Stage) -> u64 {
        self.stage_totals[stage.index()]
    }

    pub fn total(&self) -> u64 {
        self.stage_totals.iter().sum()
    }

    pub fn document(&self) -> Value {
        let mut stages = serde_json::Map::new();
        for st in STAGES {
            stages.insert(st.as_str().to_string(), json!(self.stage_total(st)));
        }
        json!({ "stages": stages, "total": self.total() })
    }
}

/// One session-log line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogRecord {
    pub ts: DateTime<Utc>,
    pub kind: String,
    pub payload: Value,
}

enum Sink {
    File(BufWriter<File>),
    Memory(Arc<Mutex<Vec<u8>>>),
}

/// Owns the session log sink and the token ledger for one session.
pub struct Recorder {
    sink: Sink,
    ledger: TokenLedger,
    path: Option<PathBuf>,
}

impl Recorder {
    /// Session log at `<dir>/<session_id>.log.jsonl`.
    pub fn create(dir: &Path, session_id: &str) -> Result<Self, RecorderError> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("{session_id}.log.jsonl"));
        Self::create_at(&path)
    }

    /// Session log at an explicit path (the CLI uses
    /// `<out>/<session_id>/log.jsonl`).
    pub fn create_at(path: &Path) -> Result<Self, RecorderError> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let file = File::create(path)?;
        Ok(Recorder {
            sink: Sink::File(BufWriter::new(file)),
            ledger: TokenLedger::new(),
            path: Some(path.to_path_buf()),
        })
    }

    /// In-memory recorder for tests; the buffer holds the JSONL bytes.
    pub fn in_memory() -> (Self, Arc<Mutex<Vec<u8>>>) {
        let buf = Arc::new(Mutex::new(Vec::new()));
        let rec = Recorder {
            sink: Sink::Memory(buf.clone()),
            ledger: TokenLedger::new(),
            path: None,
        };
        (rec, buf)
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn ledger(&self) -> &TokenLedger {
        &self.ledger
    }

    pub fn log(&mut self, kind: &str, payload: Value) -> Result<(), RecorderError> {
        let record = LogRecord {
            ts: Utc::now(),
            kind: kind.to_string(),
            payload,
        };
        let line = serde_json::to_string(&record).expect("log records are serializable");
        match &mut self.sink {
            Sink::File(w) => {
                writeln!(w, "{line}")?;
                w.flush()?;
            }
            Sink::Memory(buf) => {
                let mut buf = buf.lock().unwrap();
                buf.extend_from_slice(line.as_bytes());
                buf.push(b'\n');
            }
        }
        Ok(())
    }

    /// Charge the ledger and log one gateway exchange; also appends the digest
    /// pair to working memory's dialogue log.
    pub fn note_llm_call(
        &mut self,
        mem: &mut MemorySnapshot,
        req: &LlmRequest,
        resp: &LlmResponse,
    ) -> Result<(), RecorderError> {
        self.ledger.charge(req.stage, resp.usage);
        let prompt_digest = text_digest(&req.text);
        let response_digest = text_digest(&resp.text);
        mem.append_dialogue(DialogueEntry {
            stage: req.stage,
            prompt_digest: prompt_digest.clone(),
            response_digest: response_digest.clone(),
        });
        self.log(
            "llm_call",
            json!({
                "stage": req.stage,
                "prompt_digest": prompt_digest,
                "response_digest": response_digest,
                "prompt_tokens": resp.usage.prompt_tokens,
                "completion_tokens": resp.usage.completion_tokens,
                "images": req.images.len(),
            }),
        )
    }

    /// Append the finished operation to working memory and the log.
    pub fn record_step(
        &mut self,
        mem: &mut MemorySnapshot,
        record: OperationRecord,
    ) -> Result<(), RecorderError> {
        mem.append_op(record.clone());
        let index = mem.working.op_log().len() - 1;
        self.log(
            "op_recorded",
            json!({
                "index": index,
                "op": record.op,
                "intent": record.intent,
                "reversed": record.reversed,
                "transition_ok": record.transition_ok,
                "started": record.started,
                "finished": record.finished,
            }),
        )
    }
}

// --- bug mining ------------------------------------------------------------

pub const DEFAULT_CRASH_PATTERNS: [&str; 3] = ["FATAL EXCEPTION", "ANR in", "has died"];

/// Execution window of one recorded operation.
#[derive(Debug, Clone, Copy)]
pub struct OpWindow {
    pub op_index: usize,
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

/// Windows from the recorded op log: each op owns the span from its start to
/// the next op's start (the last one up to `session_end`).
pub fn op_windows(ops: &[OperationRecord], session_end: DateTime<Utc>) -> Vec<OpWindow> {
    ops.iter()
        .enumerate()
        .map(|(i, r)| OpWindow {
            op_index: i,
            start: r.started,
            end: ops.get(i + 1).map(|n| n.started).unwrap_or(session_end),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BugReport {
    pub app_id: String,
    pub first_log_line: String,
    pub pattern: String,
    pub op_index: usize,
    pub dedup_key: String,
}

/// Clock-skew tolerance between the device log and the engine clock.
const PRE_WINDOW_SLACK_MS: i64 = 1_000;

/// Deterministic window assignment: the latest op whose strict window
/// `[start, end]` contains the timestamp; the one-second pre-window slack
/// only rescues lines that fall in no strict window (device log clocks can
/// run slightly ahead of the engine clock).
pub fn assign_op_window(windows: &[OpWindow], ts: DateTime<Utc>) -> Option<usize> {
    let strict = windows
        .iter()
        .filter(|w| ts >= w.start && ts <= w.end)
        .map(|w| w.op_index)
        .max();
    strict.or_else(|| {
        let slack = chrono::Duration::milliseconds(PRE_WINDOW_SLACK_MS);
        windows
            .iter()
            .filter(|w| ts >= w.start - slack && ts <= w.end)
            .map(|w| w.op_index)
            .max()
    })
}

fn parse_log_timestamp(line: &str) -> Option<DateTime<Utc>> {
    let first = line.split_whitespace().next()?;
    if let Ok(ts) = DateTime::parse_from_rfc3339(first) {
        return Some(ts.with_timezone(&Utc));
    }
    // logcat `-v time` prefix: "MM-DD HH:MM:SS.mmm"; the year is not in the
    // line, assume the current one.
    let mut parts = line.split_whitespace();
    let date = parts.next()?;
    let time = parts.next()?;
    let (month, day) = date.split_once('-')?;
    let year = Utc::now().format("%Y").to_string();
    let stamp = format!("{year}-{month}-{day} {time}");
    let naive: NaiveDateTime =
        NaiveDateTime::parse_from_str(&stamp, "%Y-%m-%d %H:%M:%S%.3f").ok()?;
    Some(naive.and_utc())
}

fn exception_class(line: &str) -> String {
    line.split(|c: char| c.is_whitespace() || c == ':' || c == ',')
        .find(|tok| tok.ends_with("Exception") || tok.ends_with("Error"))
        .unwrap_or("")
        .to_string()
}

fn top_stack_frame(line: &str) -> String {
    match line.split(" at ").nth(1) {
        Some(rest) => rest.split_whitespace().next().unwrap_or("").to_string(),
        None => String::new(),
    }
}

/// A line becomes a report iff it matches a crash pattern, names the app
/// under test, and its timestamp falls inside some operation window extended
/// one second backwards. Overlapping windows resolve to the latest matching
/// op. Duplicate crashes collapse by `(app, exception class, top frame)`.
pub fn scan_logs(
    lines: &[String],
    windows: &[OpWindow],
    app_id: &str,
    patterns: &[String],
) -> (Vec<BugReport>, usize) {
    let mut seen: HashSet<String> = HashSet::new();
    let mut reports = Vec::new();
    let mut warnings = 0usize;

    for line in lines {
        let pattern = match patterns.iter().find(|p| line.contains(p.as_str())) {
            Some(p) => p,
            None => continue,
        };
        if !line.contains(app_id) {
            continue;
        }
        let ts = match parse_log_timestamp(line) {
            Some(ts) => ts,
            None => {
                warnings += 1;
                continue;
            }
        };
        let op_index = match assign_op_window(windows, ts) {
            Some(i) => i,
            None => continue,
        };

        let mut h = Fnv1a::new();
        h.write(app_id.as_bytes());
        h.write(exception_class(line).as_bytes());
        h.write(top_stack_frame(line).as_bytes());
        let dedup_key = format!("{:016x}", h.finish());
        if !seen.insert(dedup_key.clone()) {
            continue;
        }
        reports.push(BugReport {
            app_id: app_id.to_string(),
            first_log_line: line.clone(),
            pattern: pattern.clone(),
            op_index,
            dedup_key,
        });
    }
    (reports, warnings)
}

// --- replay ----------------------------------------------------------------

/// What a session log deterministically reconstructs.
#[derive(Debug, Default)]
pub struct ReplaySummary {
    pub session_id: Option<String>,
    pub op_log: Vec<OperationRecord>,
    pub ledger: TokenLedger,
    pub records: Vec<LogRecord>,
    pub case: Option<String>,
    pub termination: Option<String>,
}

pub fn replay_log_bytes(bytes: &[u8]) -> Result<ReplaySummary, RecorderError> {
    let text = String::from_utf8_lossy(bytes);
    let mut summary = ReplaySummary::default();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: LogRecord = serde_json::from_str(line).map_err(|e| RecorderError::Replay {
            line: i + 1,
            message: e.to_string(),
        })?;
        match record.kind.as_str() {
            "session_start" => {
                summary.session_id = record.payload["session_id"].as_str().map(str::to_string);
            }
            "llm_call" => {
                let stage = record.payload["stage"]
                    .as_str()
                    .and_then(Stage::parse)
                    .ok_or_else(|| RecorderError::Replay {
                        line: i + 1,
                        message: "llm_call without a valid stage".into(),
                    })?;
                let usage = Usage::new(
                    record.payload["prompt_tokens"].as_u64().unwrap_or(0),
                    record.payload["completion_tokens"].as_u64().unwrap_or(0),
                );
                summary.ledger.charge(stage, usage);
            }
            "op_recorded" => {
                let op = serde_json::from_value(record.payload["op"].clone()).map_err(|e| {
                    RecorderError::Replay {
                        line: i + 1,
                        message: format!("bad op: {e}"),
                    }
                })?;
                summary.op_log.push(OperationRecord {
                    op,
                    started: serde_json::from_value(record.payload["started"].clone())
                        .unwrap_or_else(|_| record.ts),
                    finished: serde_json::from_value(record.payload["finished"].clone())
                        .unwrap_or_else(|_| record.ts),
                    reversed: record.payload["reversed"].as_bool().unwrap_or(false),
                    transition_ok: record.payload["transition_ok"].as_bool().unwrap_or(false),
                    intent: record.payload["intent"].as_str().unwrap_or("").to_string(),
                });
            }
            "session_end" => {
                summary.case = record.payload["case"].as_str().map(str::to_string);
                summary.termination = record.payload["termination"].as_str().map(str::to_string);
            }
            _ => {}
        }
        summary.records.push(record);
    }
    Ok(summary)
}

pub fn replay_log(path: &Path) -> Result<ReplaySummary, RecorderError> {
    let bytes = std::fs::read(path)?;
    replay_log_bytes(&bytes)
}
