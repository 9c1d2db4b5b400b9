//! The Decider: logical decision over the raw screenshot, then widget
//! localization against the perceived widget set, with virtual-widget
//! prediction, input-location adjustment and self-correction.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::device::ActionType;
use crate::gateway::parse;
use crate::gateway::{GatewayError, LlmRequest, Stage};
use crate::geometry::{BoundingBox, Direction, Point};
use crate::memory::MemorySnapshot;
use crate::orchestrator::SessionGateway;
use crate::perception::PerceptionResult;

#[derive(Debug, Error)]
pub enum DeciderError {
    #[error("no current state in short-term memory")]
    NoCurrentState,
    #[error("no cached perception for the current state")]
    NoPerception,
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("anchor widget id {0} is not in the current widget set")]
    InvalidAnchor(u32),
    #[error("virtual widget placed fully off screen")]
    VirtualOffScreen,
}

/// LLM-level intent before grounding. `input_text` is present exactly for
/// input actions, `scroll_direction` exactly for scroll actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbstractDecision {
    pub action: ActionType,
    pub intent: String,
    pub widget_description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scroll_direction: Option<Direction>,
}

impl AbstractDecision {
    pub fn describe(&self) -> String {
        let mut s = format!("{}: {}", self.action, self.intent);
        if !self.widget_description.is_empty() {
            s.push_str(&format!(" (target: {})", self.widget_description));
        }
        if let Some(t) = &self.input_text {
            s.push_str(&format!(" text {t:?}"));
        }
        if let Some(d) = self.scroll_direction {
            s.push_str(&format!(" direction {d}"));
        }
        s
    }
}

/// Widget-matching reply: a concrete id, or the sentinel that routes to
/// virtual-widget prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WidgetChoice {
    Id(u32),
    NotFound,
}

/// What a grounded decision points at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "target", rename_all = "lowercase")]
pub enum Target {
    /// A widget id from the current perception result.
    Widget {
        id: u32,
        #[serde(rename = "box")]
        bbox: BoundingBox,
    },
    /// A predicted box with no recognized widget under it.
    Virtual {
        #[serde(rename = "box")]
        bbox: BoundingBox,
    },
    /// Back and done have no target.
    None,
}

impl Target {
    pub fn bbox(&self) -> Option<BoundingBox> {
        match self {
            Target::Widget { bbox, .. } | Target::Virtual { bbox } => Some(*bbox),
            Target::None => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocatedDecision {
    pub decision: AbstractDecision,
    pub target: Target,
    pub tap_point: Option<Point>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Placement {
    Above,
    Below,
    Left,
    Right,
    Inside,
}

impl Placement {
    pub fn as_str(self) -> &'static str {
        match self {
            Placement::Above => "above",
            Placement::Below => "below",
            Placement::Left => "left",
            Placement::Right => "right",
            Placement::Inside => "inside",
        }
    }

    pub fn parse(s: &str) -> Option<Placement> {
        match s.trim().to_ascii_lowercase().as_str() {
            "above" => Some(Placement::Above),
            "below" => Some(Placement::Below),
            "left" => Some(Placement::Left),
            "right" => Some(Placement::Right),
            "inside" => Some(Placement::Inside),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectionCauseKind {
    LocalizationError,
    MissingPreaction,
    WrongLogic,
}

impl CorrectionCauseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CorrectionCauseKind::LocalizationError => "localization_error",
            CorrectionCauseKind::MissingPreaction => "missing_preaction",
            CorrectionCauseKind::WrongLogic => "wrong_logic",
        }
    }

    pub fn parse(s: &str) -> Option<CorrectionCauseKind> {
        match s.trim() {
            "localization_error" => Some(CorrectionCauseKind::LocalizationError),
            "missing_preaction" => Some(CorrectionCauseKind::MissingPreaction),
            "wrong_logic" => Some(CorrectionCauseKind::WrongLogic),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrectionCause {
    pub kind: CorrectionCauseKind,
    pub evidence: String,
}

/// What the Supervisor observed about the failed step, replayed into the
/// correction prompts.
#[derive(Debug, Clone)]
pub struct FailureEvidence {
    pub op_description: String,
    pub transition_reason: String,
    pub page_changed: bool,
    pub reversed: bool,
}

impl FailureEvidence {
    pub fn summary(&self) -> String {
        let effect = if self.page_changed {
            if self.reversed {
                "the page changed in an unexpected way and the operation was reversed"
            } else {
                "the page changed in an unexpected way"
            }
        } else {
            "the page did not actually change"
        };
        format!(
            "operation {} did not pass transition verification ({}); {}",
            self.op_description, self.transition_reason, effect
        )
    }
}

fn scenario_slot(mem: &MemorySnapshot) -> String {
    let sc = mem.scenario();
    let mut s = format!("{}: {}", sc.name, sc.description);
    if !sc.required_inputs.is_empty() {
        let inputs: Vec<String> = sc
            .required_inputs
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        s.push_str(&format!(" (required inputs: {})", inputs.join(", ")));
    }
    s
}

/// Logical decision over the raw screenshot: `(T, S, L_op, P_curr) -> op'`.
/// The annotated image is never attached at this stage.
pub fn decide_logical(
    mem: &mut MemorySnapshot,
    gw: &mut SessionGateway,
    failure_note: Option<&str>,
) -> Result<AbstractDecision, DeciderError> {
    let screenshot = mem
        .current_state()
        .ok_or(DeciderError::NoCurrentState)?
        .screenshot
        .clone();

    let mut slots = BTreeMap::new();
    slots.insert("scenario", scenario_slot(mem));
    slots.insert("op_log", mem.working.op_log_summary());
    slots.insert("action_types", ActionType::listing());
    slots.insert(
        "extra",
        failure_note
            .map(|n| format!("\nPrevious attempt feedback: {n}\n"))
            .unwrap_or_default(),
    );
    let text = gw.render(Stage::LogicalDecision, mem, &slots)?;
    let req = LlmRequest::new(Stage::LogicalDecision, text, vec![screenshot]);
    let decision = gw.complete_parsed(mem, req, &parse::parse_decision)?;
    Ok(decision)
}

#[derive(Debug)]
pub enum LocateOutcome {
    Located(LocatedDecision),
    /// The model answered NOT_FOUND: fall through to widget prediction.
    NotFound,
}

/// Widget matching against the perceived set: `(op', W_curr) -> op`. The
/// model sees the original and the annotated screenshot, in that order.
pub fn locate_widget(
    decision: &AbstractDecision,
    perception: &PerceptionResult,
    mem: &mut MemorySnapshot,
    gw: &mut SessionGateway,
    failure_note: Option<&str>,
) -> Result<LocateOutcome, DeciderError> {
    let mut extra = decision.describe();
    if let Some(n) = failure_note {
        extra.push_str(&format!("\nPrevious attempt feedback: {n}"));
    }
    let mut slots = BTreeMap::new();
    slots.insert("widget_list", perception.widgets.listing());
    slots.insert("extra", extra);
    let text = gw.render(Stage::WidgetLocalization, mem, &slots)?;
    let req = LlmRequest::new(
        Stage::WidgetLocalization,
        text,
        vec![perception.source.clone(), perception.annotated.clone()],
    );
    let max_id = perception.widgets.len() as u32;
    let choice = gw.complete_parsed(mem, req, &|t| parse::parse_widget_choice(t, max_id))?;

    match choice {
        WidgetChoice::NotFound => Ok(LocateOutcome::NotFound),
        WidgetChoice::Id(id) => {
            let widget = perception
                .widgets
                .get(id)
                .expect("parse_widget_choice bounds the id");
            Ok(LocateOutcome::Located(LocatedDecision {
                decision: decision.clone(),
                target: Target::Widget {
                    id,
                    bbox: widget.bbox,
                },
                tap_point: Some(widget.bbox.center()),
            }))
        }
    }
}

/// Construct the box a virtual widget occupies: the anchor's size, displaced
/// one anchor extent in the placement direction, clipped to the screen.
pub fn virtual_box(
    anchor: BoundingBox,
    placement: Placement,
    screen_w: u32,
    screen_h: u32,
) -> Result<BoundingBox, DeciderError> {
    let (x, y) = match placement {
        Placement::Right => (anchor.x as i64 + anchor.w as i64, anchor.y as i64),
        Placement::Left => (anchor.x as i64 - anchor.w as i64, anchor.y as i64),
        Placement::Below => (anchor.x as i64, anchor.y as i64 + anchor.h as i64),
        Placement::Above => (anchor.x as i64, anchor.y as i64 - anchor.h as i64),
        Placement::Inside => (anchor.x as i64, anchor.y as i64),
    };
    let x0 = x.max(0);
    let y0 = y.max(0);
    let x1 = (x + anchor.w as i64).min(screen_w as i64);
    let y1 = (y + anchor.h as i64).min(screen_h as i64);
    if x1 <= x0 || y1 <= y0 {
        return Err(DeciderError::VirtualOffScreen);
    }
    Ok(BoundingBox::new(
        x0 as u32,
        y0 as u32,
        (x1 - x0) as u32,
        (y1 - y0) as u32,
    ))
}

/// Widget prediction for targets recognition missed: the model names an
/// anchor widget and a relative placement; the engine constructs the box.
pub fn predict_virtual_widget(
    decision: &AbstractDecision,
    perception: &PerceptionResult,
    mem: &mut MemorySnapshot,
    gw: &mut SessionGateway,
) -> Result<LocatedDecision, DeciderError> {
    let extra = format!(
        "{}\nThe target was not in the recognized widget list. Name the closest \
         recognized widget as an anchor and where the target sits relative to it \
         (above, below, left, right or inside). Answer with a fenced block: \
         ```json\n{{\"anchor\": <id>, \"placement\": \"<direction>\"}}\n```",
        decision.describe()
    );
    let mut slots = BTreeMap::new();
    slots.insert("widget_list", perception.widgets.listing());
    slots.insert("extra", extra);
    let text = gw.render(Stage::WidgetLocalization, mem, &slots)?;
    let req = LlmRequest::new(
        Stage::WidgetLocalization,
        text,
        vec![perception.source.clone(), perception.annotated.clone()],
    );
    let (anchor_id, placement) = gw.complete_parsed(mem, req, &parse::parse_anchor)?;

    let anchor = perception
        .widgets
        .get(anchor_id)
        .ok_or(DeciderError::InvalidAnchor(anchor_id))?;
    let bbox = virtual_box(
        anchor.bbox,
        placement,
        perception.source.width(),
        perception.source.height(),
    )?;
    Ok(LocatedDecision {
        decision: decision.clone(),
        target: Target::Virtual { bbox },
        tap_point: Some(bbox.center()),
    })
}

/// Input-location adjustment: when the matched widget is a display-only
/// label, the effective click point moves to the writable region at its
/// right, bounded by the next widget or the screen edge.
pub fn adjust_location(
    located: LocatedDecision,
    perception: &PerceptionResult,
    mem: &mut MemorySnapshot,
    gw: &mut SessionGateway,
) -> Result<LocatedDecision, DeciderError> {
    debug_assert_eq!(located.decision.action, ActionType::Input);
    let (id, bbox) = match &located.target {
        Target::Widget { id, bbox } => (*id, *bbox),
        // Virtual targets are already positional predictions; leave them be.
        _ => return Ok(located),
    };

    let widget = perception.widgets.get(id).expect("target id from this set");
    let extra = format!(
        "The input action matched widget {id} ({} at ({}, {}, {}, {}) text: {}). \
         Is that widget a display-only label rather than the editable field itself?",
        widget.kind.as_str(),
        bbox.x,
        bbox.y,
        bbox.w,
        bbox.h,
        widget.text.as_deref().unwrap_or("-")
    );
    let mut slots = BTreeMap::new();
    slots.insert("widget_list", perception.widgets.listing());
    slots.insert("extra", extra);
    let text = gw.render(Stage::WidgetLocalization, mem, &slots)?;
    let req = LlmRequest::new(
        Stage::WidgetLocalization,
        text,
        vec![perception.source.clone(), perception.annotated.clone()],
    );
    let verdict = gw.complete_parsed(mem, req, &parse::parse_verdict)?;
    if !verdict.yes {
        return Ok(located);
    }

    // Writable strip: from the label's right edge to the nearest widget
    // start with vertical overlap, or the screen edge.
    let screen_w = perception.source.width();
    let boundary = perception
        .widgets
        .iter()
        .filter(|w| w.id != id && w.bbox.x >= bbox.right() && w.bbox.v_overlaps(&bbox))
        .map(|w| w.bbox.x)
        .min()
        .unwrap_or(screen_w);
    if boundary <= bbox.right() + 1 {
        // Degenerate: the label sits at the edge; keep its center.
        return Ok(located);
    }
    let strip = BoundingBox::new(bbox.right(), bbox.y, boundary - bbox.right(), bbox.h);
    Ok(LocatedDecision {
        tap_point: Some(strip.center()),
        target: Target::Virtual { bbox: strip },
        decision: located.decision,
    })
}

/// Outcome of a correction round: either a relocated target (localization
/// errors) or an entirely new logical decision (missing pre-actions, wrong
/// logic).
pub enum CorrectionAdjustment {
    Relocated(LocatedDecision),
    Redecided(AbstractDecision),
}

/// Self-correction: classify the failure cause, then replay the appropriate
/// decision stage with the failure appended.
pub fn self_correct(
    failed: &LocatedDecision,
    failure: &FailureEvidence,
    perception: &PerceptionResult,
    mem: &mut MemorySnapshot,
    gw: &mut SessionGateway,
) -> Result<(CorrectionCause, CorrectionAdjustment), DeciderError> {
    let mut slots = BTreeMap::new();
    slots.insert("scenario", scenario_slot(mem));
    slots.insert("op_log", mem.working.op_log_summary());
    slots.insert("extra", failure.summary());
    let text = gw.render(Stage::SelfCorrection, mem, &slots)?;
    let mut images = Vec::new();
    if let Some(prev) = mem.previous_state() {
        images.push(prev.screenshot.clone());
    }
    if let Some(curr) = mem.current_state() {
        images.push(curr.screenshot.clone());
    }
    let req = LlmRequest::new(Stage::SelfCorrection, text, images);
    let (kind, evidence) = gw.complete_parsed(mem, req, &parse::parse_cause)?;
    let cause = CorrectionCause { kind, evidence };

    let note = failure.summary();
    let adjustment =
        match kind {
            CorrectionCauseKind::LocalizationError => {
                match locate_widget(&failed.decision, perception, mem, gw, Some(&note))? {
                    LocateOutcome::Located(loc) => CorrectionAdjustment::Relocated(loc),
                    LocateOutcome::NotFound => CorrectionAdjustment::Relocated(
                        predict_virtual_widget(&failed.decision, perception, mem, gw)?,
                    ),
                }
            }
            CorrectionCauseKind::MissingPreaction | CorrectionCauseKind::WrongLogic => {
                CorrectionAdjustment::Redecided(decide_logical(mem, gw, Some(&note))?)
            }
        };
    Ok((cause, adjustment))
}
