//! Three-tier context memory shared by all agents within one session.
//!
//! Long-term memory is fixed for the session (device, app, scenario catalog),
//! working memory accumulates the operation and dialogue history, and
//! short-term memory holds the current and previous GUI states as a two-slot
//! buffer.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

use crate::device::Operation;
use crate::gateway::Stage;
use crate::perception::PerceptionResult;
use crate::raster::RasterImage;

#[derive(Debug, Error)]
pub enum MemoryError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("snapshot serialization failed: {0}")]
    Serialize(String),
}

/// One target scenario: the unit of test generation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub description: String,
    /// Credentials and other inputs the scenario needs, e.g. user -> alice.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub required_inputs: Vec<(String, String)>,
}

impl ScenarioSpec {
    pub fn new(name: impl Into<String>, description: impl Into<String>) -> Self {
        ScenarioSpec {
            name: name.into(),
            description: description.into(),
            required_inputs: Vec::new(),
        }
    }

    pub fn with_input(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.required_inputs.push((key.into(), value.into()));
        self
    }

    pub fn validate(&self) -> Result<(), MemoryError> {
        if self.description.trim().is_empty() {
            return Err(MemoryError::InvalidScenario(
                "scenario description is empty".into(),
            ));
        }
        Ok(())
    }
}

/// Immutable for the lifetime of a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongTermMemory {
    pub device_info: String,
    pub app_id: String,
    pub app_info: String,
    pub scenario_catalog: Vec<ScenarioSpec>,
}

/// One GUI state: the raw screenshot plus the cached perception result.
#[derive(Debug, Clone, PartialEq)]
pub struct GuiState {
    pub screenshot: RasterImage,
    pub perception: Option<std::sync::Arc<PerceptionResult>>,
    /// Backend-specific page marker (the sim backend reports its screen id).
    pub screen_marker: Option<String>,
    pub captured_at: DateTime<Utc>,
    /// Set when loading verification gave up waiting for a stable page.
    pub loading_timed_out: bool,
}

impl GuiState {
    pub fn new(screenshot: RasterImage) -> Self {
        GuiState {
            screenshot,
            perception: None,
            screen_marker: None,
            captured_at: Utc::now(),
            loading_timed_out: false,
        }
    }
}

/// A finished operation as recorded in working memory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperationRecord {
    pub op: Operation,
    pub started: DateTime<Utc>,
    pub finished: DateTime<Utc>,
    /// The operation was undone by a reverse operation after a failed
    /// transition check.
    pub reversed: bool,
    pub transition_ok: bool,
    /// Intent text from the decision, used in op-log prompt summaries.
    pub intent: String,
}

/// Digest-level trace of one LLM exchange.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogueEntry {
    pub stage: Stage,
    pub prompt_digest: String,
    pub response_digest: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WorkingMemory {
    pub scenario: Option<ScenarioSpec>,
    op_log: Vec<OperationRecord>,
    dialogue_log: Vec<DialogueEntry>,
}

impl WorkingMemory {
    pub fn op_log(&self) -> &[OperationRecord] {
        &self.op_log
    }

    pub fn dialogue_log(&self) -> &[DialogueEntry] {
        &self.dialogue_log
    }

    /// Human-readable summary of executed operations for prompt slots.
    pub fn op_log_summary(&self) -> String {
        if self.op_log.is_empty() {
            return "(no operations executed yet)".to_string();
        }
        self.op_log
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut line = format!("{}. {} - {}", i + 1, r.op.describe(), r.intent);
                if r.reversed {
                    line.push_str(" [reversed]");
                }
                line
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[derive(Debug, Clone, Default)]
pub struct ShortTermMemory {
    pub current_state: Option<GuiState>,
    pub previous_state: Option<GuiState>,
}

/// The whole per-session memory. Single writer per session; clones are
/// freely transferable between threads.
#[derive(Debug, Clone)]
pub struct MemorySnapshot {
    pub session_id: String,
    pub long_term: LongTermMemory,
    pub working: WorkingMemory,
    pub short_term: ShortTermMemory,
}

static SESSION_COUNTER: AtomicU64 = AtomicU64::new(0);

fn fresh_session_id(scenario: &str) -> String {
    let n = SESSION_COUNTER.fetch_add(1, Ordering::Relaxed);
    format!("{}-{}-{:04}", scenario, Utc::now().timestamp_millis(), n)
}

impl MemorySnapshot {
    /// Start a session: empty op log, empty dialogue log, no short-term
    /// states. `session_id` may be pinned for reproducible runs; the default
    /// is unique per call.
    pub fn init_session(
        scenario: ScenarioSpec,
        device_info: impl Into<String>,
        app_id: impl Into<String>,
        app_info: impl Into<String>,
        session_id: Option<String>,
    ) -> Result<Self, MemoryError> {
        scenario.validate()?;
        let session_id = session_id.unwrap_or_else(|| fresh_session_id(&scenario.name));
        Ok(MemorySnapshot {
            session_id,
            long_term: LongTermMemory {
                device_info: device_info.into(),
                app_id: app_id.into(),
                app_info: app_info.into(),
                scenario_catalog: vec![scenario.clone()],
            },
            working: WorkingMemory {
                scenario: Some(scenario),
                ..WorkingMemory::default()
            },
            short_term: ShortTermMemory::default(),
        })
    }

    pub fn scenario(&self) -> &ScenarioSpec {
        self.working
            .scenario
            .as_ref()
            .expect("session always has a scenario")
    }

    /// Two-slot rotation: the old current state becomes the previous state.
    pub fn push_state(&mut self, state: GuiState) {
        self.short_term.previous_state = self.short_term.current_state.take();
        self.short_term.current_state = Some(state);
    }

    /// Replace the current state without rotating, e.g. after a reverse
    /// operation restored the page.
    pub fn replace_current_state(&mut self, state: GuiState) {
        self.short_term.current_state = Some(state);
    }

    pub fn current_state(&self) -> Option<&GuiState> {
        self.short_term.current_state.as_ref()
    }

    pub fn current_state_mut(&mut self) -> Option<&mut GuiState> {
        self.short_term.current_state.as_mut()
    }

    pub fn previous_state(&self) -> Option<&GuiState> {
        self.short_term.previous_state.as_ref()
    }

    /// Append-only operation log.
    pub fn append_op(&mut self, record: OperationRecord) {
        self.working.op_log.push(record);
    }

    pub fn append_dialogue(&mut self, entry: DialogueEntry) {
        self.working.dialogue_log.push(entry);
    }

    /// Fixed prompt preamble carrying long-term memory.
    pub fn long_term_preamble(&self) -> String {
        format!(
            "Device: {}\nApp: {} ({})",
            self.long_term.device_info, self.long_term.app_id, self.long_term.app_info
        )
    }

    /// Serialize the snapshot, screenshots as embedded PNG. The perception
    /// cache is derived data and is not exported; it is recomputed on the
    /// next observation.
    pub fn export_json(&self) -> Result<String, MemoryError> {
        let doc = SnapshotDoc {
            session_id: self.session_id.clone(),
            long_term: self.long_term.clone(),
            working: self.working.clone(),
            current_state: self
                .short_term
                .current_state
                .as_ref()
                .map(StateDoc::from_state),
            previous_state: self
                .short_term
                .previous_state
                .as_ref()
                .map(StateDoc::from_state),
        };
        serde_json::to_string(&doc).map_err(|e| MemoryError::Serialize(e.to_string()))
    }

    pub fn import_json(raw: &str) -> Result<Self, MemoryError> {
        let doc: SnapshotDoc =
            serde_json::from_str(raw).map_err(|e| MemoryError::Serialize(e.to_string()))?;
        Ok(MemorySnapshot {
            session_id: doc.session_id,
            long_term: doc.long_term,
            working: doc.working,
            short_term: ShortTermMemory {
                current_state: doc.current_state.map(StateDoc::into_state).transpose()?,
                previous_state: doc.previous_state.map(StateDoc::into_state).transpose()?,
            },
        })
    }
}

#[derive(Serialize, Deserialize)]
struct SnapshotDoc {
    session_id: String,
    long_term: LongTermMemory,
    working: WorkingMemory,
    current_state: Option<StateDoc>,
    previous_state: Option<StateDoc>,
}

#[derive(Serialize, Deserialize)]
struct StateDoc {
    png: String,
    screen_marker: Option<String>,
    captured_at: DateTime<Utc>,
    loading_timed_out: bool,
}

impl StateDoc {
    fn from_state(state: &GuiState) -> StateDoc {
        use base64::Engine as _;
        let png = state.screenshot.encode_png().expect("in-memory png encode");
        StateDoc {
            png: base64::engine::general_purpose::STANDARD.encode(png),
            screen_marker: state.screen_marker.clone(),
            captured_at: state.captured_at,
            loading_timed_out: state.loading_timed_out,
        }
    }

    fn into_state(self) -> Result<GuiState, MemoryError> {
        use base64::Engine as _;
        let bytes = base64::engine::general_purpose::STANDARD
            .decode(&self.png)
            .map_err(|e| MemoryError::Serialize(format!("bad embedded png: {e}")))?;
        let screenshot = RasterImage::decode_png_bytes(&bytes)
            .map_err(|e| MemoryError::Serialize(e.to_string()))?;
        Ok(GuiState {
            screenshot,
            perception: None,
            screen_marker: self.screen_marker,
            captured_at: self.captured_at,
            loading_timed_out: self.loading_timed_out,
        })
    }
}
