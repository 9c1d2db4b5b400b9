//! Decider operations against synthetic perception results and scripted
//! replies: widget matching, location adjustment geometry, virtual-widget
//! prediction, and correction routing.

use uipilot_core::decider::{
    self, AbstractDecision, CorrectionAdjustment, CorrectionCauseKind, DeciderError,
    FailureEvidence, LocateOutcome, LocatedDecision, Target,
};
use uipilot_core::device::ActionType;
use uipilot_core::gateway::{parse, ScriptEntry, ScriptedProvider, Stage, TemplateSet};
use uipilot_core::geometry::{BoundingBox, Point};
use uipilot_core::memory::{GuiState, MemorySnapshot, ScenarioSpec};
use uipilot_core::orchestrator::SessionGateway;
use uipilot_core::perception::{annotate, PerceptionResult, Widget, WidgetKind, WidgetSet};
use uipilot_core::raster::RasterImage;
use uipilot_core::recorder::Recorder;

fn widget(bbox: BoundingBox, kind: WidgetKind, text: Option<&str>) -> Widget {
    Widget {
        id: 0,
        bbox,
        kind,
        text: text.map(str::to_string),
        confidence: 1.0,
    }
}

fn perception_with(widgets: Vec<Widget>) -> PerceptionResult {
    let source = RasterImage::new(720, 1280, [245, 245, 245]);
    let set = WidgetSet::from_widgets(widgets);
    let annotated = annotate(&source, &set);
    PerceptionResult {
        widgets: set,
        annotated,
        source,
    }
}

fn memory_with_state() -> MemorySnapshot {
    let mut mem = MemorySnapshot::init_session(
        ScenarioSpec::new("email", "create, edit and send an email"),
        "sim",
        "demo.mail",
        "mail client",
        Some("decider-ops".into()),
    )
    .unwrap();
    mem.push_state(GuiState::new(RasterImage::new(720, 1280, [245, 245, 245])));
    mem
}

fn input_decision() -> AbstractDecision {
    AbstractDecision {
        action: ActionType::Input,
        intent: "enter the recipient".into(),
        widget_description: "To: label".into(),
        input_text: Some("a@b.c".into()),
        scroll_direction: None,
    }
}

#[test]
fn adjust_moves_tap_to_writable_strip_midpoint() {
    // A display-only label at (20,300,60,30) and the next widget starting at
    // x=580: the adjusted tap is the strip midpoint (330, 315).
    let label_box = BoundingBox::new(20, 300, 60, 30);
    let perception = perception_with(vec![
        widget(label_box, WidgetKind::Textual, Some("To:")),
        widget(
            BoundingBox::new(580, 300, 100, 50),
            WidgetKind::Graphical,
            None,
        ),
    ]);
    let provider = ScriptedProvider::new(vec![ScriptEntry::new(
        Stage::WidgetLocalization,
        parse::render_verdict(true, "it only displays a caption"),
    )]);
    let templates = TemplateSet::default();
    let (mut recorder, _buf) = Recorder::in_memory();
    let mut gw = SessionGateway {
        provider: &provider,
        templates: &templates,
        recorder: &mut recorder,
    };
    let mut mem = memory_with_state();

    let located = LocatedDecision {
        decision: input_decision(),
        target: Target::Widget {
            id: 1,
            bbox: label_box,
        },
        tap_point: Some(label_box.center()),
    };
    let adjusted = decider::adjust_location(located, &perception, &mut mem, &mut gw).unwrap();
    assert_eq!(adjusted.tap_point, Some(Point::new(330, 315)));
    match adjusted.target {
        Target::Virtual { bbox } => {
            assert_eq!(bbox, BoundingBox::new(80, 300, 500, 30));
            assert!(bbox.contains(adjusted.tap_point.unwrap()));
        }
        other => panic!("expected a virtual strip target, got {other:?}"),
    }
}

#[test]
fn adjust_keeps_field_targets_unchanged() {
    let field_box = BoundingBox::new(90, 300, 400, 40);
    let perception = perception_with(vec![widget(field_box, WidgetKind::Graphical, None)]);
    let provider = ScriptedProvider::new(vec![ScriptEntry::new(
        Stage::WidgetLocalization,
        parse::render_verdict(false, "that is the editable field"),
    )]);
    let templates = TemplateSet::default();
    let (mut recorder, _buf) = Recorder::in_memory();
    let mut gw = SessionGateway {
        provider: &provider,
        templates: &templates,
        recorder: &mut recorder,
    };
    let mut mem = memory_with_state();

    let located = LocatedDecision {
        decision: input_decision(),
        target: Target::Widget {
            id: 1,
            bbox: field_box,
        },
        tap_point: Some(field_box.center()),
    };
    let adjusted =
        decider::adjust_location(located.clone(), &perception, &mut mem, &mut gw).unwrap();
    assert_eq!(adjusted, located);
}

#[test]
fn adjust_degenerates_to_label_center_at_screen_edge() {
    // Label flush against the right screen edge: no writable strip exists,
    // the tap stays at the label center.
    let label_box = BoundingBox::new(660, 300, 60, 30);
    let perception = perception_with(vec![widget(label_box, WidgetKind::Textual, Some("To:"))]);
    let provider = ScriptedProvider::new(vec![ScriptEntry::new(
        Stage::WidgetLocalization,
        parse::render_verdict(true, "display only"),
    )]);
    let templates = TemplateSet::default();
    let (mut recorder, _buf) = Recorder::in_memory();
    let mut gw = SessionGateway {
        provider: &provider,
        templates: &templates,
        recorder: &mut recorder,
    };
    let mut mem = memory_with_state();

    let located = LocatedDecision {
        decision: input_decision(),
        target: Target::Widget {
            id: 1,
            bbox: label_box,
        },
        tap_point: Some(label_box.center()),
    };
    let adjusted = decider::adjust_location(located, &perception, &mut mem, &mut gw).unwrap();
    assert_eq!(adjusted.tap_point, Some(label_box.center()));
}

#[test]
fn locate_widget_maps_id_to_box_center() {
    let boxes: Vec<Widget> = (0..9)
        .map(|i| {
            widget(
                BoundingBox::new(20, 80 + i * 90, 200, 60),
                WidgetKind::Graphical,
                None,
            )
        })
        .collect();
    let perception = perception_with(boxes);
    let provider =
        ScriptedProvider::new(vec![ScriptEntry::new(Stage::WidgetLocalization, "ID: 7")]);
    let templates = TemplateSet::default();
    let (mut recorder, _buf) = Recorder::in_memory();
    let mut gw = SessionGateway {
        provider: &provider,
        templates: &templates,
        recorder: &mut recorder,
    };
    let mut mem = memory_with_state();

    let decision = AbstractDecision {
        action: ActionType::Click,
        intent: "open".into(),
        widget_description: "seventh row".into(),
        input_text: None,
        scroll_direction: None,
    };
    match decider::locate_widget(&decision, &perception, &mut mem, &mut gw, None).unwrap() {
        LocateOutcome::Located(loc) => {
            let expected = perception.widgets.get(7).unwrap().bbox;
            assert_eq!(
                loc.target,
                Target::Widget {
                    id: 7,
                    bbox: expected
                }
            );
            assert_eq!(loc.tap_point, Some(expected.center()));
        }
        LocateOutcome::NotFound => panic!("expected a located widget"),
    }
}

#[test]
fn out_of_range_id_retries_once_then_fails() {
    let perception = perception_with(vec![widget(
        BoundingBox::new(20, 80, 200, 60),
        WidgetKind::Graphical,
        None,
    )]);
    // Both the answer and the re-prompted answer are out of range.
    let provider = ScriptedProvider::new(vec![
        ScriptEntry::new(Stage::WidgetLocalization, "ID: 42"),
        ScriptEntry::new(Stage::WidgetLocalization, "ID: 42"),
    ]);
    let templates = TemplateSet::default();
    let (mut recorder, _buf) = Recorder::in_memory();
    let mut gw = SessionGateway {
        provider: &provider,
        templates: &templates,
        recorder: &mut recorder,
    };
    let mut mem = memory_with_state();

    let decision = AbstractDecision {
        action: ActionType::Click,
        intent: "open".into(),
        widget_description: "row".into(),
        input_text: None,
        scroll_direction: None,
    };
    let err = decider::locate_widget(&decision, &perception, &mut mem, &mut gw, None).unwrap_err();
    assert!(matches!(err, DeciderError::Gateway(_)));
    assert_eq!(
        provider.remaining(),
        0,
        "the single re-prompt must be consumed"
    );
}

#[test]
fn invalid_anchor_is_a_step_error() {
    let perception = perception_with(vec![widget(
        BoundingBox::new(20, 80, 200, 60),
        WidgetKind::Graphical,
        None,
    )]);
    let provider = ScriptedProvider::new(vec![ScriptEntry::new(
        Stage::WidgetLocalization,
        parse::render_anchor_block(9, uipilot_core::decider::Placement::Right),
    )]);
    let templates = TemplateSet::default();
    let (mut recorder, _buf) = Recorder::in_memory();
    let mut gw = SessionGateway {
        provider: &provider,
        templates: &templates,
        recorder: &mut recorder,
    };
    let mut mem = memory_with_state();

    let decision = AbstractDecision {
        action: ActionType::Click,
        intent: "open".into(),
        widget_description: "hidden thing".into(),
        input_text: None,
        scroll_direction: None,
    };
    let err =
        decider::predict_virtual_widget(&decision, &perception, &mut mem, &mut gw).unwrap_err();
    assert!(matches!(err, DeciderError::InvalidAnchor(9)));
}

#[test]
fn correction_causes_route_to_the_right_stage() {
    // localization_error replays localization; wrong_logic replays the
    // logical decision. Observable from the scripted stage sequence.
    let perception = perception_with(vec![
        widget(
            BoundingBox::new(20, 80, 200, 60),
            WidgetKind::Graphical,
            None,
        ),
        widget(
            BoundingBox::new(20, 200, 200, 60),
            WidgetKind::Graphical,
            None,
        ),
    ]);
    let failed = LocatedDecision {
        decision: AbstractDecision {
            action: ActionType::Click,
            intent: "open".into(),
            widget_description: "row".into(),
            input_text: None,
            scroll_direction: None,
        },
        target: Target::Widget {
            id: 1,
            bbox: BoundingBox::new(20, 80, 200, 60),
        },
        tap_point: Some(Point::new(120, 110)),
    };
    let failure = FailureEvidence {
        op_description: "click at (120, 110)".into(),
        transition_reason: "wrong page".into(),
        page_changed: true,
        reversed: true,
    };

    // Case 1: localization error routes back to widget localization.
    let provider = ScriptedProvider::new(vec![
        ScriptEntry::new(
            Stage::SelfCorrection,
            parse::render_cause_block(CorrectionCauseKind::LocalizationError, "wrong box"),
        ),
        ScriptEntry::new(Stage::WidgetLocalization, "ID: 2"),
    ]);
    let templates = TemplateSet::default();
    let (mut recorder, _buf) = Recorder::in_memory();
    let mut gw = SessionGateway {
        provider: &provider,
        templates: &templates,
        recorder: &mut recorder,
    };
    let mut mem = memory_with_state();
    let (cause, adjustment) =
        decider::self_correct(&failed, &failure, &perception, &mut mem, &mut gw).unwrap();
    assert_eq!(cause.kind, CorrectionCauseKind::LocalizationError);
    match adjustment {
        CorrectionAdjustment::Relocated(loc) => {
            assert_eq!(
                loc.target,
                Target::Widget {
                    id: 2,
                    bbox: BoundingBox::new(20, 200, 200, 60)
                }
            );
        }
        CorrectionAdjustment::Redecided(_) => panic!("localization error must relocate"),
    }
    let stages: Vec<Stage> = provider
        .recorded_requests()
        .iter()
        .map(|r| r.stage)
        .collect();
    assert_eq!(
        stages,
        vec![Stage::SelfCorrection, Stage::WidgetLocalization]
    );

    // Case 2: wrong logic routes back to the logical decision.
    let provider = ScriptedProvider::new(vec![
        ScriptEntry::new(
            Stage::SelfCorrection,
            parse::render_cause_block(CorrectionCauseKind::WrongLogic, "open the menu first"),
        ),
        ScriptEntry::new(
            Stage::LogicalDecision,
            parse::render_decision_block(&AbstractDecision {
                action: ActionType::Click,
                intent: "open the menu first".into(),
                widget_description: "menu button".into(),
                input_text: None,
                scroll_direction: None,
            }),
        ),
    ]);
    let (mut recorder, _buf) = Recorder::in_memory();
    let mut gw = SessionGateway {
        provider: &provider,
        templates: &templates,
        recorder: &mut recorder,
    };
    let mut mem = memory_with_state();
    let (cause, adjustment) =
        decider::self_correct(&failed, &failure, &perception, &mut mem, &mut gw).unwrap();
    assert_eq!(cause.kind, CorrectionCauseKind::WrongLogic);
    match adjustment {
        CorrectionAdjustment::Redecided(dec) => assert_eq!(dec.intent, "open the menu first"),
        CorrectionAdjustment::Relocated(_) => panic!("wrong logic must re-decide"),
    }
    let stages: Vec<Stage> = provider
        .recorded_requests()
        .iter()
        .map(|r| r.stage)
        .collect();
    assert_eq!(stages, vec![Stage::SelfCorrection, Stage::LogicalDecision]);
}

#[test]
fn dialogue_log_keeps_digests_of_every_exchange() {
    let perception = perception_with(vec![widget(
        BoundingBox::new(20, 80, 200, 60),
        WidgetKind::Graphical,
        None,
    )]);
    let provider =
        ScriptedProvider::new(vec![ScriptEntry::new(Stage::WidgetLocalization, "ID: 1")]);
    let templates = TemplateSet::default();
    let (mut recorder, _buf) = Recorder::in_memory();
    let mut gw = SessionGateway {
        provider: &provider,
        templates: &templates,
        recorder: &mut recorder,
    };
    let mut mem = memory_with_state();
    let decision = AbstractDecision {
        action: ActionType::Click,
        intent: "open".into(),
        widget_description: "row".into(),
        input_text: None,
        scroll_direction: None,
    };
    decider::locate_widget(&decision, &perception, &mut mem, &mut gw, None).unwrap();
    let log = mem.working.dialogue_log();
    assert_eq!(log.len(), 1);
    assert_eq!(log[0].stage, Stage::WidgetLocalization);
    // Digest format: 16 hex chars, a colon, then the first 200 characters.
    assert_eq!(
        log[0].prompt_digest.chars().position(|c| c == ':'),
        Some(16)
    );
}
