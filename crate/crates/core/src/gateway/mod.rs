//! Uniform provider contract for multimodal completions, plus prompt
//! templating, structured-response parsing and token accounting tags.

pub mod http;
pub mod parse;
pub mod script;
pub mod template;

pub use http::HttpProvider;
pub use parse::{parse_decision, parse_verdict, parse_widget_choice, render_decision_block};
pub use script::{ScriptEntry, ScriptedProvider};
pub use template::{PromptTemplate, TemplateSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::RasterImage;

/// The six pipeline stages every request is tagged with; the tag drives the
/// per-stage token ledger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    LogicalDecision,
    WidgetLocalization,
    LoadingCheck,
    TransitionCheck,
    CompletionCheck,
    SelfCorrection,
}

pub const STAGES: [Stage; 6] = [
    Stage::LogicalDecision,
    Stage::WidgetLocalization,
    Stage::LoadingCheck,
    Stage::TransitionCheck,
    Stage::CompletionCheck,
    Stage::SelfCorrection,
];

impl Stage {
    pub fn index(self) -> usize {
        match self {
            Stage::LogicalDecision => 0,
            Stage::WidgetLocalization => 1,
            Stage::LoadingCheck => 2,
            Stage::TransitionCheck => 3,
            Stage::CompletionCheck => 4,
            Stage::SelfCorrection => 5,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::LogicalDecision => "logical_decision",
            Stage::WidgetLocalization => "widget_localization",
            Stage::LoadingCheck => "loading_check",
            Stage::TransitionCheck => "transition_check",
            Stage::CompletionCheck => "completion_check",
            Stage::SelfCorrection => "self_correction",
        }
    }

    pub fn parse(s: &str) -> Option<Stage> {
        STAGES.iter().copied().find(|st| st.as_str() == s)
    }
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Token usage reported by a provider for one completion.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl Usage {
    pub fn new(prompt_tokens: u64, completion_tokens: u64) -> Self {
        Usage {
            prompt_tokens,
            completion_tokens,
        }
    }

    pub fn total(&self) -> u64 {
        self.prompt_tokens + self.completion_tokens
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RequestParams {
    /// Fixed at zero: decisions must be as deterministic as the model allows.
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for RequestParams {
    fn default() -> Self {
        RequestParams {
            temperature: 0.0,
            max_tokens: 1024,
        }
    }
}

/// One multimodal completion request. Image order is fixed: the original
/// screenshot first, the annotated one second.
#[derive(Debug, Clone)]
pub struct LlmRequest {
    pub stage: Stage,
    pub text: String,
    pub images: Vec<RasterImage>,
    pub params: RequestParams,
}

impl LlmRequest {
    pub fn new(stage: Stage, text: impl Into<String>, images: Vec<RasterImage>) -> Self {
        LlmRequest {
            stage,
            text: text.into(),
            images,
            params: RequestParams::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LlmResponse {
    pub text: String,
    pub usage: Usage,
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("provider transport error: {0}")]
    Transport(String),
    #[error("provider timed out after {0} ms")]
    Timeout(u64),
    #[error("script exhausted: no entry left for stage {0}")]
    ScriptExhausted(Stage),
    #[error("script mismatch: next entry is for stage {expected}, request was {got}")]
    ScriptMismatch { expected: Stage, got: Stage },
    #[error("malformed response: {0}")]
    Parse(String),
    #[error("unknown action type {0:?}")]
    UnknownAction(String),
    #[error("widget id {got} out of range 1..={max}")]
    IdOutOfRange { got: u32, max: u32 },
    #[error("template error: {0}")]
    Template(String),
    #[error("session recording failed: {0}")]
    Recorder(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl GatewayError {
    /// Parse-class failures trigger the single automatic re-prompt; transport
    /// failures abort the step instead.
    pub fn is_parse_failure(&self) -> bool {
        matches!(
            self,
            GatewayError::Parse(_)
                | GatewayError::UnknownAction(_)
                | GatewayError::IdOutOfRange { .. }
        )
    }
}

/// A completion provider. Providers are shareable read-only; per-session
/// calls are sequential by contract.
pub trait LlmProvider: Send + Sync {
    fn complete(&self, req: &LlmRequest) -> Result<LlmResponse, GatewayError>;

    fn name(&self) -> &str;
}
