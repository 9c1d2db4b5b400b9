//! The per-scenario loop: perceive, decide, execute, verify, record, until
//! completion, budget exhaustion or abort.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::Utc;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::decider::{
    self, AbstractDecision, CorrectionAdjustment, CorrectionCauseKind, DeciderError,
    FailureEvidence, LocateOutcome, LocatedDecision, Target,
};
use crate::device::{self, ActionType, DeviceBackend, DeviceError, ExecError, Operation};
use crate::gateway::{GatewayError, LlmProvider, LlmRequest, LlmResponse, Stage, TemplateSet};
use crate::memory::{GuiState, MemoryError, MemorySnapshot, OperationRecord, ScenarioSpec};
use crate::metrics::AccuracyInput;
use crate::perception::{OcrEngine, PerceptionConfig, PerceptionError, PerceptionResult};
use crate::recorder::{
    op_windows, scan_logs, BugReport, Recorder, RecorderError, TokenLedger, DEFAULT_CRASH_PATTERNS,
};
use crate::supervisor::{self, SupervisorError, WaitConfig};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error(transparent)]
    Recorder(#[from] RecorderError),
    #[error("invalid engine config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Device(#[from] DeviceError),
}

/// Budgets, thresholds and selections for one engine instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub max_steps: u32,
    pub max_corrections: u32,
    pub poll_ms: u64,
    pub max_wait_ms: u64,
    pub llm_timeout_ms: u64,
    pub perception: PerceptionConfig,
    pub crash_patterns: Vec<String>,
    /// Pin the session id for reproducible runs; unique by default.
    pub session_id: Option<String>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            max_steps: 25,
            max_corrections: 2,
            poll_ms: 500,
            max_wait_ms: 10_000,
            llm_timeout_ms: 60_000,
            perception: PerceptionConfig::default(),
            crash_patterns: DEFAULT_CRASH_PATTERNS
                .iter()
                .map(|s| s.to_string())
                .collect(),
            session_id: None,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        if self.max_steps == 0 || self.poll_ms == 0 || self.max_wait_ms == 0 {
            return Err(EngineError::InvalidConfig(
                "budgets must be positive".into(),
            ));
        }
        Ok(())
    }

    fn wait(&self) -> WaitConfig {
        WaitConfig {
            poll_ms: self.poll_ms,
            max_wait_ms: self.max_wait_ms,
        }
    }
}

/// Session-scoped gateway: every completion is charged to the ledger, logged
/// and digested into working memory at call time, which makes the ledger
/// conservation invariant structural.
pub struct SessionGateway<'a> {
    pub provider: &'a dyn LlmProvider,
    pub templates: &'a TemplateSet,
    pub recorder: &'a mut Recorder,
}

impl SessionGateway<'_> {
    pub fn render(
        &self,
        stage: Stage,
        mem: &MemorySnapshot,
        slots: &std::collections::BTreeMap<&str, String>,
    ) -> Result<String, GatewayError> {
        self.templates
            .render(stage, &mem.long_term_preamble(), slots)
    }

    pub fn complete(
        &mut self,
        mem: &mut MemorySnapshot,
        req: &LlmRequest,
    ) -> Result<LlmResponse, GatewayError> {
        let resp = self.provider.complete(req)?;
        self.recorder
            .note_llm_call(mem, req, &resp)
            .map_err(|e| GatewayError::Recorder(e.to_string()))?;
        Ok(resp)
    }

    /// Complete and parse, with one automatic re-prompt on parse failure.
    pub fn complete_parsed<T>(
        &mut self,
        mem: &mut MemorySnapshot,
        req: LlmRequest,
        parse: &dyn Fn(&str) -> Result<T, GatewayError>,
    ) -> Result<T, GatewayError> {
        let resp = self.complete(mem, &req)?;
        match parse(&resp.text) {
            Ok(v) => Ok(v),
            Err(e) if e.is_parse_failure() => {
                let mut retry = req;
                retry.text.push_str(&format!(
                    "\n\nYour previous reply could not be used ({e}). \
                     Answer again following the requested format exactly."
                ));
                let resp = self.complete(mem, &retry)?;
                parse(&resp.text)
            }
            Err(e) => Err(e),
        }
    }
}

/// Outcome case taxonomy over (termination, coverage).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Case {
    C1,
    C2,
    C3,
    C4,
}

impl Case {
    pub fn as_str(self) -> &'static str {
        match self {
            Case::C1 => "c1",
            Case::C2 => "c2",
            Case::C3 => "c3",
            Case::C4 => "c4",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Termination {
    /// Completion verdict yes, or a done decision.
    Normal,
    /// Correction budget exhausted or an unrecoverable failure.
    Aborted,
    /// Step budget exhausted.
    Budget,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Normal => "normal",
            Termination::Aborted => "aborted",
            Termination::Budget => "budget",
        }
    }

    pub fn is_normal(self) -> bool {
        matches!(self, Termination::Normal)
    }
}

/// `(normal, covered) -> c1`, `(abnormal, covered) -> c2`,
/// `(normal, not covered) -> c3`, `(abnormal, not covered) -> c4`.
pub fn classify_outcome(termination: Termination, covered: bool) -> Case {
    match (termination.is_normal(), covered) {
        (true, true) => Case::C1,
        (false, true) => Case::C2,
        (true, false) => Case::C3,
        (false, false) => Case::C4,
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub scenario: String,
    pub session_id: String,
    pub case: Case,
    pub termination: Termination,
    pub covered: bool,
    pub steps: u32,
    pub ops: Vec<OperationRecord>,
    pub ledger: TokenLedger,
    pub bugs: Vec<BugReport>,
    pub decision_stats: AccuracyInput,
    pub localization_stats: AccuracyInput,
    pub log_path: Option<PathBuf>,
}

impl RunOutcome {
    pub fn document(&self) -> serde_json::Value {
        json!({
            "scenario": self.scenario,
            "session_id": self.session_id,
            "case": self.case.as_str(),
            "termination": self.termination.as_str(),
            "covered": self.covered,
            "steps": self.steps,
            "ops": self.ops,
            "tokens": self.ledger.document(),
            "bugs": self.bugs,
            "decision_stats": self.decision_stats,
            "localization_stats": self.localization_stats,
        })
    }
}

/// Everything a session needs besides the backend: provider, OCR, templates
/// and configuration. Reusable across scenarios.
pub struct Engine<'a> {
    pub cfg: EngineConfig,
    pub provider: &'a dyn LlmProvider,
    pub ocr: &'a dyn OcrEngine,
    pub templates: TemplateSet,
}

enum StepError {
    Decider(DeciderError),
    Supervisor(SupervisorError),
    Exec(ExecError),
    Device(DeviceError),
    Perception(PerceptionError),
}

impl StepError {
    /// Recorder failures must surface as hard errors, everything else turns
    /// into an aborted run.
    fn recorder_failure(&self) -> Option<RecorderError> {
        match self {
            StepError::Decider(DeciderError::Gateway(GatewayError::Recorder(m)))
            | StepError::Supervisor(SupervisorError::Gateway(GatewayError::Recorder(m))) => {
                Some(RecorderError::LogWrite(std::io::Error::other(m.clone())))
            }
            StepError::Supervisor(SupervisorError::Recorder(e)) => Some(RecorderError::LogWrite(
                std::io::Error::other(e.to_string()),
            )),
            _ => None,
        }
    }

    fn describe(&self) -> String {
        match self {
            StepError::Decider(e) => format!("decider: {e}"),
            StepError::Supervisor(e) => format!("supervisor: {e}"),
            StepError::Exec(e) => format!("executor: {e}"),
            StepError::Device(e) => format!("device: {e}"),
            StepError::Perception(e) => format!("perception: {e}"),
        }
    }
}

enum LoopEnd {
    Normal { covered_by_verdict: Option<bool> },
    Budget,
    Aborted { reason: String },
}

struct StepStats {
    decision: AccuracyInput,
    localization: AccuracyInput,
}

impl<'a> Engine<'a> {
    pub fn new(
        cfg: EngineConfig,
        provider: &'a dyn LlmProvider,
        ocr: &'a dyn OcrEngine,
        templates: TemplateSet,
    ) -> Self {
        Engine {
            cfg,
            provider,
            ocr,
            templates,
        }
    }

    /// Run one scenario to an outcome. Unrecoverable backend or provider
    /// failures terminate the run as aborted; session-log failures are hard
    /// errors.
    pub fn run_scenario(
        &self,
        scenario: &ScenarioSpec,
        backend: &mut dyn DeviceBackend,
        mut recorder: Recorder,
        screenshot_dir: Option<&Path>,
    ) -> Result<RunOutcome, EngineError> {
        self.cfg.validate()?;
        let info = backend.info();
        let mut mem = MemorySnapshot::init_session(
            scenario.clone(),
            info.device.clone(),
            info.app_id.clone(),
            info.app_info.clone(),
            self.cfg.session_id.clone(),
        )?;
        let session_start = Utc::now();
        recorder.log(
            "session_start",
            json!({
                "session_id": mem.session_id,
                "scenario": scenario.name,
                "device": info.device,
                "app_id": info.app_id,
                "app_info": info.app_info,
            }),
        )?;

        let mut stats = StepStats {
            decision: AccuracyInput::default(),
            localization: AccuracyInput::default(),
        };
        let mut steps = 0u32;
        let mut shot_counter = 0u32;

        let end = {
            let mut gw = SessionGateway {
                provider: self.provider,
                templates: &self.templates,
                recorder: &mut recorder,
            };

            match self.observe_initial(
                backend,
                &mut mem,
                &mut gw,
                screenshot_dir,
                &mut shot_counter,
            ) {
                Ok(()) => self.drive(
                    backend,
                    &mut mem,
                    &mut gw,
                    &mut stats,
                    &mut steps,
                    screenshot_dir,
                    &mut shot_counter,
                ),
                Err(e) => Err(e),
            }
        };

        let end = match end {
            Ok(end) => end,
            Err(step_err) => {
                if let Some(rec_err) = step_err.recorder_failure() {
                    return Err(EngineError::Recorder(rec_err));
                }
                LoopEnd::Aborted {
                    reason: step_err.describe(),
                }
            }
        };

        let (termination, covered) = match end {
            LoopEnd::Normal { covered_by_verdict } => {
                let covered = covered_by_verdict
                    .or_else(|| backend.goal_reached())
                    .unwrap_or(true);
                (Termination::Normal, covered)
            }
            LoopEnd::Budget => (Termination::Budget, backend.goal_reached().unwrap_or(false)),
            LoopEnd::Aborted { reason } => {
                recorder.log("abort", json!({ "reason": reason }))?;
                (
                    Termination::Aborted,
                    backend.goal_reached().unwrap_or(false),
                )
            }
        };
        let case = classify_outcome(termination, covered);

        // Bug mining over the backend's runtime log for this session.
        let session_end = Utc::now();
        let bugs = match backend.read_log_since(session_start) {
            Ok(lines) => {
                let windows = op_windows(mem.working.op_log(), session_end);
                let (reports, warnings) = scan_logs(
                    &lines,
                    &windows,
                    &mem.long_term.app_id,
                    &self.cfg.crash_patterns,
                );
                if warnings > 0 {
                    recorder.log("log_scan_warnings", json!({ "skipped_lines": warnings }))?;
                }
                for bug in &reports {
                    recorder.log("bug", serde_json::to_value(bug).expect("bug serializes"))?;
                }
                reports
            }
            Err(e) => {
                recorder.log("log_scan_failed", json!({ "error": e.to_string() }))?;
                Vec::new()
            }
        };

        recorder.log(
            "session_end",
            json!({
                "case": case.as_str(),
                "termination": termination.as_str(),
                "covered": covered,
                "steps": steps,
                "total_tokens": recorder.ledger().total(),
            }),
        )?;

        Ok(RunOutcome {
            scenario: scenario.name.clone(),
            session_id: mem.session_id.clone(),
            case,
            termination,
            covered,
            steps,
            ops: mem.working.op_log().to_vec(),
            ledger: recorder.ledger().clone(),
            bugs,
            decision_stats: stats.decision,
            localization_stats: stats.localization,
            log_path: recorder.path().map(Path::to_path_buf),
        })
    }

    fn observe_initial(
        &self,
        backend: &mut dyn DeviceBackend,
        mem: &mut MemorySnapshot,
        gw: &mut SessionGateway,
        shot_dir: Option<&Path>,
        shot_counter: &mut u32,
    ) -> Result<(), StepError> {
        let shot = backend.screenshot().map_err(StepError::Device)?;
        let mut state = GuiState::new(shot);
        state.screen_marker = backend.screen_marker();
        self.attach_perception(&mut state, gw, shot_dir, shot_counter)?;
        mem.push_state(state);
        Ok(())
    }

    fn attach_perception(
        &self,
        state: &mut GuiState,
        gw: &mut SessionGateway,
        shot_dir: Option<&Path>,
        shot_counter: &mut u32,
    ) -> Result<(), StepError> {
        let perception =
            crate::perception::perceive(&state.screenshot, self.ocr, &self.cfg.perception)
                .map_err(StepError::Perception)?;
        gw.recorder
            .log(
                "state_captured",
                json!({
                    "screen_marker": state.screen_marker,
                    "image_digest": format!("{:016x}", state.screenshot.digest()),
                    "timed_out": state.loading_timed_out,
                    "widgets": perception.widgets.len(),
                }),
            )
            .map_err(|e| StepError::Supervisor(SupervisorError::Recorder(e)))?;
        if let Some(dir) = shot_dir {
            let path = dir.join(format!("{:03}.png", shot_counter));
            *shot_counter += 1;
            std::fs::create_dir_all(dir).ok();
            state.screenshot.save_png(&path).ok();
        }
        state.perception = Some(Arc::new(perception));
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn drive(
        &self,
        backend: &mut dyn DeviceBackend,
        mem: &mut MemorySnapshot,
        gw: &mut SessionGateway,
        stats: &mut StepStats,
        steps: &mut u32,
        shot_dir: Option<&Path>,
        shot_counter: &mut u32,
    ) -> Result<LoopEnd, StepError> {
        for step in 1..=self.cfg.max_steps {
            *steps = step;
            let decision = decider::decide_logical(mem, gw, None).map_err(StepError::Decider)?;
            gw.recorder
                .log(
                    "decision",
                    json!({
                        "step": step,
                        "action": decision.action.as_str(),
                        "intent": decision.intent,
                        "widget": decision.widget_description,
                    }),
                )
                .map_err(|e| StepError::Supervisor(SupervisorError::Recorder(e)))?;

            match self.run_step(backend, mem, gw, stats, decision, shot_dir, shot_counter)? {
                StepEnd::Continue => {}
                StepEnd::Finished(end) => return Ok(end),
            }
        }
        Ok(LoopEnd::Budget)
    }

    #[allow(clippy::too_many_arguments)]
    fn run_step(
        &self,
        backend: &mut dyn DeviceBackend,
        mem: &mut MemorySnapshot,
        gw: &mut SessionGateway,
        stats: &mut StepStats,
        first_decision: AbstractDecision,
        shot_dir: Option<&Path>,
        shot_counter: &mut u32,
    ) -> Result<StepEnd, StepError> {
        let mut pending = Pending::Decision(first_decision);
        let mut corrections = 0u32;
        let mut localized_any = false;
        let mut had_loc_error = false;
        let mut had_logic_error = false;

        stats.decision.total += 1;

        loop {
            // Ground the pending intent into an executable operation.
            let located = match pending {
                Pending::Decision(ref decision) => {
                    if decision.action == ActionType::Done {
                        return self.finish_done(
                            backend,
                            mem,
                            gw,
                            stats,
                            decision.clone(),
                            corrections == 0,
                        );
                    }
                    let perception = current_perception(mem);
                    let loc = self
                        .locate(decision, &perception, mem, gw)
                        .map_err(StepError::Decider)?;
                    if !matches!(loc.target, Target::None) {
                        localized_any = true;
                    }
                    loc
                }
                Pending::Located(ref loc) => loc.clone(),
            };
            gw.recorder
                .log(
                    "located",
                    json!({
                        "target": located.target,
                        "tap": located.tap_point,
                        "action": located.decision.action.as_str(),
                    }),
                )
                .map_err(|e| StepError::Supervisor(SupervisorError::Recorder(e)))?;

            let op = to_operation(&located);
            let pre_marker = backend.screen_marker();
            let exec = device::execute(&op, backend).map_err(StepError::Exec)?;
            gw.recorder
                .log(
                    "executed",
                    json!({
                        "op": exec.op,
                        "sub_actions": exec.sub_actions,
                        "pre_marker": pre_marker,
                        "started": exec.started,
                        "finished": exec.finished,
                    }),
                )
                .map_err(|e| StepError::Supervisor(SupervisorError::Recorder(e)))?;

            // Loading verification, then state rotation.
            let mut stable = supervisor::wait_until_stable(backend, mem, gw, &self.cfg.wait())
                .map_err(StepError::Supervisor)?;
            self.attach_perception(&mut stable, gw, shot_dir, shot_counter)?;
            mem.push_state(stable);

            let (prev, curr) = two_states(mem);
            let transition = supervisor::verify_transition(&op, &prev, &curr, mem, gw)
                .map_err(StepError::Supervisor)?;

            if transition.yes {
                gw.recorder
                    .record_step(
                        mem,
                        OperationRecord {
                            op: op.clone(),
                            started: exec.started,
                            finished: exec.finished,
                            reversed: false,
                            transition_ok: true,
                            intent: located.decision.intent.clone(),
                        },
                    )
                    .map_err(|e| StepError::Supervisor(SupervisorError::Recorder(e)))?;

                // Step passed: settle accuracy counters. A step corrected
                // only for localization still counts as an initially correct
                // logical decision.
                stats.decision.finally_correct += 1;
                if !had_logic_error {
                    stats.decision.initially_correct += 1;
                }
                if localized_any {
                    stats.localization.total += 1;
                    stats.localization.finally_correct += 1;
                    if !had_loc_error {
                        stats.localization.initially_correct += 1;
                    }
                }

                let completion = supervisor::verify_completion(&prev, &curr, mem, gw)
                    .map_err(StepError::Supervisor)?;
                if completion.yes {
                    return Ok(StepEnd::Finished(LoopEnd::Normal {
                        covered_by_verdict: Some(true),
                    }));
                }
                return Ok(StepEnd::Continue);
            }

            // Failed transition: change check, optional reversal, correction.
            let change = supervisor::detect_actual_change(&prev, &curr, mem, gw)
                .map_err(StepError::Supervisor)?;
            let mut reversed = false;
            if change.yes {
                if let Some(rev) = supervisor::reverse_operation(&op) {
                    let rev_exec = device::execute(&rev, backend).map_err(StepError::Exec)?;
                    let mut restored =
                        GuiState::new(backend.screenshot().map_err(StepError::Device)?);
                    restored.screen_marker = backend.screen_marker();
                    gw.recorder
                        .log(
                            "reversal",
                            json!({
                                "op": rev_exec.op,
                                "sub_actions": rev_exec.sub_actions,
                                "restored_marker": restored.screen_marker,
                            }),
                        )
                        .map_err(|e| StepError::Supervisor(SupervisorError::Recorder(e)))?;
                    self.attach_perception(&mut restored, gw, shot_dir, shot_counter)?;
                    mem.replace_current_state(restored);
                    reversed = true;
                } else {
                    gw.recorder
                        .log(
                            "reversal_skipped",
                            json!({ "op": op, "reason": "operation has no reverse" }),
                        )
                        .map_err(|e| StepError::Supervisor(SupervisorError::Recorder(e)))?;
                }
            }

            gw.recorder
                .record_step(
                    mem,
                    OperationRecord {
                        op: op.clone(),
                        started: exec.started,
                        finished: exec.finished,
                        reversed,
                        transition_ok: false,
                        intent: located.decision.intent.clone(),
                    },
                )
                .map_err(|e| StepError::Supervisor(SupervisorError::Recorder(e)))?;

            corrections += 1;
            if corrections > self.cfg.max_corrections {
                if localized_any {
                    stats.localization.total += 1;
                }
                return Ok(StepEnd::Finished(LoopEnd::Aborted {
                    reason: format!(
                        "correction budget exhausted after {} failed attempts",
                        corrections
                    ),
                }));
            }

            let failure = FailureEvidence {
                op_description: op.describe(),
                transition_reason: transition.reason.clone(),
                page_changed: change.yes,
                reversed,
            };
            let perception = current_perception(mem);
            let (cause, adjustment) =
                decider::self_correct(&located, &failure, &perception, mem, gw)
                    .map_err(StepError::Decider)?;
            gw.recorder
                .log(
                    "correction",
                    json!({
                        "round": corrections,
                        "cause": cause.kind.as_str(),
                        "evidence": cause.evidence,
                    }),
                )
                .map_err(|e| StepError::Supervisor(SupervisorError::Recorder(e)))?;

            match cause.kind {
                CorrectionCauseKind::LocalizationError => had_loc_error = true,
                _ => had_logic_error = true,
            }
            pending = match adjustment {
                CorrectionAdjustment::Relocated(loc) => Pending::Located(loc),
                CorrectionAdjustment::Redecided(dec) => Pending::Decision(dec),
            };
        }
    }

    fn finish_done(
        &self,
        backend: &mut dyn DeviceBackend,
        mem: &mut MemorySnapshot,
        gw: &mut SessionGateway,
        stats: &mut StepStats,
        decision: AbstractDecision,
        first_attempt: bool,
    ) -> Result<StepEnd, StepError> {
        let exec = device::execute(&Operation::Done, backend).map_err(StepError::Exec)?;
        gw.recorder
            .log(
                "executed",
                json!({
                    "op": exec.op,
                    "sub_actions": exec.sub_actions,
                    "pre_marker": backend.screen_marker(),
                    "started": exec.started,
                    "finished": exec.finished,
                }),
            )
            .map_err(|e| StepError::Supervisor(SupervisorError::Recorder(e)))?;
        gw.recorder
            .record_step(
                mem,
                OperationRecord {
                    op: Operation::Done,
                    started: exec.started,
                    finished: exec.finished,
                    reversed: false,
                    transition_ok: true,
                    intent: decision.intent,
                },
            )
            .map_err(|e| StepError::Supervisor(SupervisorError::Recorder(e)))?;
        stats.decision.finally_correct += 1;
        if first_attempt {
            stats.decision.initially_correct += 1;
        }
        // A done decision ends the session directly, bypassing completion
        // verification; coverage falls to the backend's goal predicate.
        Ok(StepEnd::Finished(LoopEnd::Normal {
            covered_by_verdict: None,
        }))
    }

    fn locate(
        &self,
        decision: &AbstractDecision,
        perception: &PerceptionResult,
        mem: &mut MemorySnapshot,
        gw: &mut SessionGateway,
    ) -> Result<LocatedDecision, DeciderError> {
        match decision.action {
            ActionType::Click | ActionType::Input => {
                let located = match decider::locate_widget(decision, perception, mem, gw, None)? {
                    LocateOutcome::Located(loc) => loc,
                    LocateOutcome::NotFound => {
                        decider::predict_virtual_widget(decision, perception, mem, gw)?
                    }
                };
                if decision.action == ActionType::Input {
                    decider::adjust_location(located, perception, mem, gw)
                } else {
                    Ok(located)
                }
            }
            ActionType::Scroll if !decision.widget_description.is_empty() => {
                match decider::locate_widget(decision, perception, mem, gw, None)? {
                    LocateOutcome::Located(loc) => Ok(loc),
                    LocateOutcome::NotFound => {
                        decider::predict_virtual_widget(decision, perception, mem, gw)
                    }
                }
            }
            _ => Ok(LocatedDecision {
                decision: decision.clone(),
                target: Target::None,
                tap_point: None,
            }),
        }
    }
}

enum Pending {
    Decision(AbstractDecision),
    Located(LocatedDecision),
}

enum StepEnd {
    Continue,
    Finished(LoopEnd),
}

fn current_perception(mem: &MemorySnapshot) -> Arc<PerceptionResult> {
    mem.current_state()
        .and_then(|s| s.perception.clone())
        .expect("current state always carries perception")
}

fn two_states(mem: &MemorySnapshot) -> (GuiState, GuiState) {
    let prev = mem
        .previous_state()
        .expect("a state was pushed before every executed op")
        .clone();
    let curr = mem.current_state().expect("current state exists").clone();
    (prev, curr)
}

fn to_operation(located: &LocatedDecision) -> Operation {
    let dec = &located.decision;
    match dec.action {
        ActionType::Click => Operation::Click {
            tap: located.tap_point.expect("click is always located"),
        },
        ActionType::Input => Operation::Input {
            tap: located.tap_point.expect("input is always located"),
            text: dec.input_text.clone().unwrap_or_default(),
        },
        ActionType::Scroll => Operation::Scroll {
            direction: dec.scroll_direction.expect("scroll carries a direction"),
            region: located.target.bbox(),
        },
        ActionType::Back => Operation::Back,
        ActionType::Done => Operation::Done,
    }
}
