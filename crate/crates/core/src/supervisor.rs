//! The Supervisor: post-execution verification. Loading stabilization with a
//! dynamic wait, state-transition verdicts with an actual-change check and
//! reverse operations, and completion verdicts.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::device::{DeviceBackend, DeviceError, Operation};
use crate::gateway::parse;
use crate::gateway::{GatewayError, LlmRequest, Stage};
use crate::memory::{GuiState, MemorySnapshot};
use crate::orchestrator::SessionGateway;
use crate::recorder::RecorderError;

#[derive(Debug, Error)]
pub enum SupervisorError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error(transparent)]
    Recorder(#[from] RecorderError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    Loading,
    Transition,
    Change,
    Completion,
}

impl CheckKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CheckKind::Loading => "loading",
            CheckKind::Transition => "transition",
            CheckKind::Change => "change",
            CheckKind::Completion => "completion",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationResult {
    pub check: CheckKind,
    pub yes: bool,
    pub reason: String,
}

#[derive(Debug, Clone, Copy)]
pub struct WaitConfig {
    pub poll_ms: u64,
    pub max_wait_ms: u64,
}

impl Default for WaitConfig {
    fn default() -> Self {
        WaitConfig {
            poll_ms: 500,
            max_wait_ms: 10_000,
        }
    }
}

fn log_verdict(
    gw: &mut SessionGateway,
    check: CheckKind,
    yes: bool,
    reason: &str,
) -> Result<(), RecorderError> {
    gw.recorder.log(
        "verification",
        serde_json::json!({ "check": check.as_str(), "verdict": if yes { "yes" } else { "no" }, "reason": reason }),
    )
}

/// Poll screenshots until the model judges the page stable, or the wait
/// budget runs out (the state is then flagged timed-out and used as-is).
pub fn wait_until_stable(
    backend: &mut dyn DeviceBackend,
    mem: &mut MemorySnapshot,
    gw: &mut SessionGateway,
    cfg: &WaitConfig,
) -> Result<GuiState, SupervisorError> {
    let deadline = Instant::now() + Duration::from_millis(cfg.max_wait_ms);
    loop {
        let shot = backend.screenshot()?;
        let mut state = GuiState::new(shot);
        state.screen_marker = backend.screen_marker();

        let mut slots = BTreeMap::new();
        slots.insert("extra", String::new());
        let text = gw.render(Stage::LoadingCheck, mem, &slots)?;
        let req = LlmRequest::new(Stage::LoadingCheck, text, vec![state.screenshot.clone()]);
        let verdict = gw.complete_parsed(mem, req, &parse::parse_verdict)?;
        let loading = verdict.yes;
        log_verdict(gw, CheckKind::Loading, loading, &verdict.reason)?;

        if !loading {
            return Ok(state);
        }
        if Instant::now() >= deadline {
            state.loading_timed_out = true;
            gw.recorder.log(
                "loading_timeout",
                serde_json::json!({ "max_wait_ms": cfg.max_wait_ms }),
            )?;
            return Ok(state);
        }
        std::thread::sleep(Duration::from_millis(cfg.poll_ms));
    }
}

/// Did the page undergo the expected valid change:
/// `(S, op_latest, P_curr, P_prev) -> result`. The model has authority; byte
/// equality of the two screenshots is only a prefilter hint in the prompt.
pub fn verify_transition(
    op: &Operation,
    prev: &GuiState,
    curr: &GuiState,
    mem: &mut MemorySnapshot,
    gw: &mut SessionGateway,
) -> Result<VerificationResult, SupervisorError> {
    let mut extra = op.describe();
    if prev.screenshot == curr.screenshot {
        extra.push_str("\nNote: the two screenshots are byte-identical.");
    }
    let mut slots = BTreeMap::new();
    slots.insert("scenario", scenario_slot(mem));
    slots.insert("extra", extra);
    let text = gw.render(Stage::TransitionCheck, mem, &slots)?;
    let req = LlmRequest::new(
        Stage::TransitionCheck,
        text,
        vec![prev.screenshot.clone(), curr.screenshot.clone()],
    );
    let verdict = gw.complete_parsed(mem, req, &parse::parse_verdict)?;
    log_verdict(gw, CheckKind::Transition, verdict.yes, &verdict.reason)?;
    Ok(VerificationResult {
        check: CheckKind::Transition,
        yes: verdict.yes,
        reason: verdict.reason,
    })
}

/// After a failed transition: did the operation actually change the page at
/// all (excluding autonomous updates such as clocks, battery indicators,
/// carousels)? Byte-equal screenshots short-circuit without a model call.
pub fn detect_actual_change(
    prev: &GuiState,
    curr: &GuiState,
    mem: &mut MemorySnapshot,
    gw: &mut SessionGateway,
) -> Result<VerificationResult, SupervisorError> {
    if prev.screenshot == curr.screenshot {
        log_verdict(gw, CheckKind::Change, false, "screenshots byte-identical")?;
        return Ok(VerificationResult {
            check: CheckKind::Change,
            yes: false,
            reason: "screenshots byte-identical".into(),
        });
    }
    let mut slots = BTreeMap::new();
    slots.insert("scenario", scenario_slot(mem));
    slots.insert(
        "extra",
        "The transition check failed. Judge only whether the page actually changed \
         because of the operation, ignoring autonomous updates (clock, battery, \
         carousels, ads)."
            .to_string(),
    );
    let text = gw.render(Stage::TransitionCheck, mem, &slots)?;
    let req = LlmRequest::new(
        Stage::TransitionCheck,
        text,
        vec![prev.screenshot.clone(), curr.screenshot.clone()],
    );
    let verdict = gw.complete_parsed(mem, req, &parse::parse_verdict)?;
    log_verdict(gw, CheckKind::Change, verdict.yes, &verdict.reason)?;
    Ok(VerificationResult {
        check: CheckKind::Change,
        yes: verdict.yes,
        reason: verdict.reason,
    })
}

/// The inverse that undoes an operation's effect, when one exists. Input
/// reversal approximates to back since no universal clear-text primitive
/// exists; back itself is irreversible and returns None with a warning left
/// to the caller's log.
pub fn reverse_operation(op: &Operation) -> Option<Operation> {
    match op {
        Operation::Click { .. } => Some(Operation::Back),
        Operation::Input { .. } => Some(Operation::Back),
        Operation::Scroll { direction, region } => Some(Operation::Scroll {
            direction: direction.opposite(),
            region: *region,
        }),
        Operation::Back => None,
        Operation::Done => None,
    }
}

/// Has the scenario reached its endpoint: `(S, L_op, P_curr, P_prev) -> result`.
pub fn verify_completion(
    prev: &GuiState,
    curr: &GuiState,
    mem: &mut MemorySnapshot,
    gw: &mut SessionGateway,
) -> Result<VerificationResult, SupervisorError> {
    let mut slots = BTreeMap::new();
    slots.insert("scenario", scenario_slot(mem));
    slots.insert("op_log", mem.working.op_log_summary());
    let text = gw.render(Stage::CompletionCheck, mem, &slots)?;
    let req = LlmRequest::new(
        Stage::CompletionCheck,
        text,
        vec![prev.screenshot.clone(), curr.screenshot.clone()],
    );
    let verdict = gw.complete_parsed(mem, req, &parse::parse_verdict)?;
    log_verdict(gw, CheckKind::Completion, verdict.yes, &verdict.reason)?;
    Ok(VerificationResult {
        check: CheckKind::Completion,
        yes: verdict.yes,
        reason: verdict.reason,
    })
}

fn scenario_slot(mem: &MemorySnapshot) -> String {
    let sc = mem.scenario();
    format!("{}: {}", sc.name, sc.description)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Direction, Point};

    #[test]
    fn reverse_table() {
        assert_eq!(
            reverse_operation(&Operation::Click {
                tap: Point::new(1, 2)
            }),
            Some(Operation::Back)
        );
        assert_eq!(
            reverse_operation(&Operation::Input {
                tap: Point::new(1, 2),
                text: "x".into()
            }),
            Some(Operation::Back)
        );
        assert_eq!(
            reverse_operation(&Operation::Scroll {
                direction: Direction::Up,
                region: None
            }),
            Some(Operation::Scroll {
                direction: Direction::Down,
                region: None
            })
        );
        assert_eq!(reverse_operation(&Operation::Back), None);
        assert_eq!(reverse_operation(&Operation::Done), None);
    }
}
