//! Executor backends: the device contract, grounded operations and their
//! two-step decomposition, a deterministic simulated app, and a real-device
//! bridge adapter.

pub mod adb;
pub mod sim;

pub use adb::{AdbBackend, CommandRunner, SubprocessRunner};
pub use sim::{SimAppSpec, SimBackend};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{BoundingBox, Direction, Point};
use crate::raster::RasterImage;

/// The operation-type set: every decision names one of these.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionType {
    Click,
    Input,
    Scroll,
    Back,
    Done,
}

pub const ACTION_TYPES: [ActionType; 5] = [
    ActionType::Click,
    ActionType::Input,
    ActionType::Scroll,
    ActionType::Back,
    ActionType::Done,
];

impl ActionType {
    pub fn as_str(self) -> &'static str {
        match self {
            ActionType::Click => "click",
            ActionType::Input => "input",
            ActionType::Scroll => "scroll",
            ActionType::Back => "back",
            ActionType::Done => "done",
        }
    }

    pub fn parse(s: &str) -> Option<ActionType> {
        ACTION_TYPES
            .iter()
            .copied()
            .find(|a| a.as_str() == s.trim().to_ascii_lowercase())
    }

    /// Listing for the logical-decision prompt slot.
    pub fn listing() -> String {
        ACTION_TYPES
            .iter()
            .map(|a| a.as_str())
            .collect::<Vec<_>>()
            .join(", ")
    }
}

impl std::fmt::Display for ActionType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A grounded, executable operation. Field invariants hold by construction:
/// input carries both tap point and text, back and done carry nothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Operation {
    Click {
        tap: Point,
    },
    Input {
        tap: Point,
        text: String,
    },
    Scroll {
        direction: Direction,
        region: Option<BoundingBox>,
    },
    Back,
    Done,
}

impl Operation {
    pub fn back() -> Operation {
        Operation::Back
    }

    pub fn kind(&self) -> ActionType {
        match self {
            Operation::Click { .. } => ActionType::Click,
            Operation::Input { .. } => ActionType::Input,
            Operation::Scroll { .. } => ActionType::Scroll,
            Operation::Back => ActionType::Back,
            Operation::Done => ActionType::Done,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Operation::Click { tap } => format!("click at ({}, {})", tap.x, tap.y),
            Operation::Input { tap, text } => {
                format!("input {text:?} at ({}, {})", tap.x, tap.y)
            }
            Operation::Scroll { direction, .. } => format!("scroll {direction}"),
            Operation::Back => "back".to_string(),
            Operation::Done => "done".to_string(),
        }
    }
}

/// One backend call issued while executing an operation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SubAction {
    Tap {
        point: Point,
    },
    Text {
        text: String,
    },
    Scroll {
        direction: Direction,
        region: Option<BoundingBox>,
    },
    Back,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubActionRecord {
    #[serde(flatten)]
    pub action: SubAction,
    pub result_code: i32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExecutionRecord {
    pub op: Operation,
    pub sub_actions: Vec<SubActionRecord>,
    pub started: DateTime<Utc>,
    pub finished: DateTime<Utc>,
}

#[derive(Debug, Error)]
pub enum DeviceError {
    #[error("device unreachable: {0}")]
    Unreachable(String),
    #[error("command {program} failed with status {status}: {stderr}")]
    CommandFailed {
        program: String,
        status: i32,
        stderr: String,
    },
    #[error("screenshot decode failed: {0}")]
    Screenshot(String),
    #[error("invalid sim app spec: {0}")]
    InvalidSpec(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
#[error("sub-action {index} ({action}) failed: {source}")]
pub struct ExecError {
    pub index: usize,
    pub action: String,
    #[source]
    pub source: DeviceError,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeviceInfo {
    pub device: String,
    pub app_id: String,
    pub app_info: String,
}

/// The backend contract shared by the sim app and the real-device adapter.
/// One backend instance per session.
pub trait DeviceBackend {
    fn screenshot(&mut self) -> Result<RasterImage, DeviceError>;
    fn tap(&mut self, point: Point) -> Result<(), DeviceError>;
    fn input_text(&mut self, text: &str) -> Result<(), DeviceError>;
    fn scroll(
        &mut self,
        direction: Direction,
        region: Option<BoundingBox>,
    ) -> Result<(), DeviceError>;
    fn back(&mut self) -> Result<(), DeviceError>;
    fn read_log_since(&mut self, since: DateTime<Utc>) -> Result<Vec<String>, DeviceError>;
    fn info(&self) -> DeviceInfo;

    /// Backend-specific page marker; the sim backend reports its screen id so
    /// logs and oracles can check navigation mechanically.
    fn screen_marker(&self) -> Option<String> {
        None
    }

    /// Whether a declared goal page has been reached, when the backend can
    /// tell. Used as the coverage stand-in for fixtures.
    fn goal_reached(&self) -> Option<bool> {
        None
    }
}

/// Execute a grounded operation through a backend. Input decomposes into a
/// focus tap followed by the text entry; done touches the backend not at all.
pub fn execute(
    op: &Operation,
    backend: &mut dyn DeviceBackend,
) -> Result<ExecutionRecord, ExecError> {
    let started = Utc::now();
    let sub_actions = match op {
        Operation::Click { tap } => vec![SubAction::Tap { point: *tap }],
        Operation::Input { tap, text } => vec![
            SubAction::Tap { point: *tap },
            SubAction::Text { text: text.clone() },
        ],
        Operation::Scroll { direction, region } => {
            vec![SubAction::Scroll {
                direction: *direction,
                region: *region,
            }]
        }
        Operation::Back => vec![SubAction::Back],
        Operation::Done => Vec::new(),
    };

    let mut records = Vec::with_capacity(sub_actions.len());
    for (index, action) in sub_actions.into_iter().enumerate() {
        let result = match &action {
            SubAction::Tap { point } => backend.tap(*point),
            SubAction::Text { text } => backend.input_text(text),
            SubAction::Scroll { direction, region } => backend.scroll(*direction, *region),
            SubAction::Back => backend.back(),
        };
        result.map_err(|source| ExecError {
            index,
            action: format!("{action:?}"),
            source,
        })?;
        records.push(SubActionRecord {
            action,
            result_code: 0,
        });
    }

    Ok(ExecutionRecord {
        op: op.clone(),
        sub_actions: records,
        started,
        finished: Utc::now(),
    })
}
