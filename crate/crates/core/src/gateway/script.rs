//! Deterministic scripted provider: replays pre-authored stage-tagged
//! responses in order and records every request it served, which makes
//! end-to-end runs bit-reproducible and lets tests assert on prompt shape.

use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{GatewayError, LlmProvider, LlmRequest, LlmResponse, Stage, Usage};
use crate::util::text_digest;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScriptEntry {
    pub stage: Stage,
    pub response: String,
    #[serde(default)]
    pub prompt_tokens: u64,
    #[serde(default)]
    pub completion_tokens: u64,
}

impl ScriptEntry {
    pub fn new(stage: Stage, response: impl Into<String>) -> Self {
        // Nonzero defaults so ledger totals stay meaningful in fixtures.
        ScriptEntry {
            stage,
            response: response.into(),
            prompt_tokens: 100,
            completion_tokens: 20,
        }
    }

    pub fn with_usage(mut self, prompt: u64, completion: u64) -> Self {
        self.prompt_tokens = prompt;
        self.completion_tokens = completion;
        self
    }
}

/// What the provider saw for one request: enough for assertions without
/// holding full pixel buffers.
#[derive(Debug, Clone)]
pub struct RecordedRequest {
    pub stage: Stage,
    pub prompt_digest: String,
    pub prompt: String,
    pub image_count: usize,
    pub image_digests: Vec<u64>,
}

struct ScriptState {
    cursor: usize,
    recorded: Vec<RecordedRequest>,
}

pub struct ScriptedProvider {
    entries: Vec<ScriptEntry>,
    state: Mutex<ScriptState>,
}

impl ScriptedProvider {
    pub fn new(entries: Vec<ScriptEntry>) -> Self {
        ScriptedProvider {
            entries,
            state: Mutex::new(ScriptState {
                cursor: 0,
                recorded: Vec::new(),
            }),
        }
    }

    /// Load a script file: a JSON array of `{stage, response, prompt_tokens,
    /// completion_tokens}` entries.
    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        let raw = std::fs::read_to_string(path)?;
        let entries: Vec<ScriptEntry> = serde_json::from_str(&raw)
            .map_err(|e| GatewayError::Parse(format!("script file {}: {e}", path.display())))?;
        Ok(ScriptedProvider::new(entries))
    }

    pub fn save(entries: &[ScriptEntry], path: &Path) -> Result<(), GatewayError> {
        let raw = serde_json::to_string_pretty(entries)
            .map_err(|e| GatewayError::Parse(e.to_string()))?;
        std::fs::write(path, raw)?;
        Ok(())
    }

    pub fn recorded_requests(&self) -> Vec<RecordedRequest> {
        self.state.lock().unwrap().recorded.clone()
    }

    /// Entries not yet consumed; a finished fixture run should leave zero.
    pub fn remaining(&self) -> usize {
        let st = self.state.lock().unwrap();
        self.entries.len() - st.cursor
    }
}

impl LlmProvider for ScriptedProvider {
    fn complete(&self, req: &LlmRequest) -> Result<LlmResponse, GatewayError> {
        let mut st = self.state.lock().unwrap();
        st.recorded.push(RecordedRequest {
            stage: req.stage,
            prompt_digest: text_digest(&req.text),
            prompt: req.text.clone(),
            image_count: req.images.len(),
            image_digests: req.images.iter().map(|i| i.digest()).collect(),
        });
        let entry = match self.entries.get(st.cursor) {
            Some(e) => e,
            None => return Err(GatewayError::ScriptExhausted(req.stage)),
        };
        if entry.stage != req.stage {
            return Err(GatewayError::ScriptMismatch {
                expected: entry.stage,
                got: req.stage,
            });
        }
        st.cursor += 1;
        Ok(LlmResponse {
            text: entry.response.clone(),
            usage: Usage::new(entry.prompt_tokens, entry.completion_tokens),
        })
    }

    fn name(&self) -> &str {
        "scripted"
    }
}
