//! Desk-scale fixture corpus: simulated apps paired with provider scripts
//! whose expected walks are known by construction.
//!
//! A fixture is compiled by walking the sim app exactly the way the engine
//! will: each planned step renders the current screen, perceives it, resolves
//! the perceived widget id the script must answer with, and applies the same
//! event to the sim. The expected operation sequence is the hand-walk of the
//! screen graph.

use std::collections::BTreeMap;

use crate::decider::{virtual_box, CorrectionCauseKind, Placement};
use crate::device::sim::{
    CrashPoint, EventMatcher, GuardCond, SimAppSpec, SimBackend, SimScreen, SimTransition,
    SimWidget, SimWidgetKind,
};
use crate::device::{ActionType, DeviceBackend};
use crate::gateway::parse::{
    render_anchor_block, render_cause_block, render_decision_block, render_not_found,
    render_verdict, render_widget_id,
};
use crate::gateway::{ScriptEntry, Stage};
use crate::geometry::{BoundingBox, Direction};
use crate::memory::ScenarioSpec;
use crate::orchestrator::Case;
use crate::perception::{perceive, FixtureOcr, PerceptionConfig, PerceptionResult, Widget};

/// One expected entry of the operation log.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedOp {
    pub kind: ActionType,
    pub transition_ok: bool,
    pub reversed: bool,
    pub input_text: Option<String>,
}

impl ExpectedOp {
    fn ok(kind: ActionType) -> Self {
        ExpectedOp {
            kind,
            transition_ok: true,
            reversed: false,
            input_text: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub app: SimAppSpec,
    pub scenario: ScenarioSpec,
    pub script: Vec<ScriptEntry>,
    pub expected_ops: Vec<ExpectedOp>,
    pub expected_final_screen: String,
    pub expected_case: Case,
    pub expected_corrections: u32,
}

/// The perceived widget best covering a declared target box, among those
/// whose center tap would land inside it.
pub fn resolve_widget<'a>(
    perception: &'a PerceptionResult,
    target: &BoundingBox,
) -> Option<&'a Widget> {
    perception
        .widgets
        .iter()
        .filter(|w| target.contains(w.bbox.center()))
        .max_by(|a, b| a.bbox.iou(target).total_cmp(&b.bbox.iou(target)))
}

enum Planned {
    Click {
        widget: &'static str,
        intent: &'static str,
        loading_polls: u32,
    },
    Input {
        widget: &'static str,
        text: &'static str,
        intent: &'static str,
    },
    /// Input grounded on a display-only label: the script matches the label,
    /// confirms it is display-only, and the engine taps the writable strip
    /// right of it.
    InputViaLabel {
        label: &'static str,
        text: &'static str,
        intent: &'static str,
    },
    Scroll {
        direction: Direction,
        intent: &'static str,
    },
    /// The model answers NOT_FOUND and predicts the target from an anchor.
    ClickVirtual {
        anchor: &'static str,
        placement: Placement,
        intent: &'static str,
        loading_polls: u32,
    },
    /// One wrong localization, reversed and corrected in the same step.
    WrongClickThenCorrect {
        wrong: &'static str,
        right: &'static str,
        intent: &'static str,
    },
    Done {
        intent: &'static str,
    },
}

struct Compiler {
    backend: SimBackend,
    ocr: FixtureOcr,
    cfg: PerceptionConfig,
    script: Vec<ScriptEntry>,
    expected: Vec<ExpectedOp>,
    corrections: u32,
}

impl Compiler {
    fn new(app: SimAppSpec) -> Self {
        Compiler {
            backend: SimBackend::new(app).expect("fixture app specs validate"),
            ocr: FixtureOcr::default(),
            cfg: PerceptionConfig::default(),
            script: Vec::new(),
            expected: Vec::new(),
            corrections: 0,
        }
    }

    fn perceive_current(&mut self) -> PerceptionResult {
        let shot = self
            .backend
            .screenshot()
            .expect("sim screenshots are infallible");
        perceive(&shot, &self.ocr, &self.cfg).expect("fixture ocr is infallible")
    }

    fn declared_box(&self, widget: &str) -> BoundingBox {
        self.backend.spec().screens[self.backend.current_screen()]
            .widgets
            .iter()
            .find(|w| w.id_hint == widget)
            .unwrap_or_else(|| panic!("fixture names unknown widget {widget:?}"))
            .bbox
    }

    fn resolve_id(&self, perception: &PerceptionResult, widget: &str) -> (u32, BoundingBox) {
        let declared = self.declared_box(widget);
        let w = resolve_widget(perception, &declared).unwrap_or_else(|| {
            panic!(
                "widget {widget:?} not perceived on {}",
                self.backend.current_screen()
            )
        });
        (w.id, w.bbox)
    }

    fn push(&mut self, stage: Stage, response: String) {
        self.script.push(ScriptEntry::new(stage, response));
    }

    fn decision_click(&mut self, intent: &str, desc: &str) {
        let block = render_decision_block(&crate::decider::AbstractDecision {
            action: ActionType::Click,
            intent: intent.to_string(),
            widget_description: desc.to_string(),
            input_text: None,
            scroll_direction: None,
        });
        self.push(Stage::LogicalDecision, block);
    }

    fn loading_then_stable(&mut self, polls: u32) {
        for _ in 0..polls {
            self.push(
                Stage::LoadingCheck,
                render_verdict(true, "spinner still visible"),
            );
        }
        self.push(Stage::LoadingCheck, render_verdict(false, "page is stable"));
    }

    fn verify(&mut self, completion: Option<bool>) {
        self.push(
            Stage::TransitionCheck,
            render_verdict(true, "page changed as planned"),
        );
        if let Some(done) = completion {
            if done {
                self.push(
                    Stage::CompletionCheck,
                    render_verdict(true, "scenario endpoint reached"),
                );
            } else {
                self.push(
                    Stage::CompletionCheck,
                    render_verdict(false, "scenario not complete yet"),
                );
            }
        }
    }

    fn apply(&mut self, step: &Planned, is_last: bool) {
        match step {
            Planned::Click {
                widget,
                intent,
                loading_polls,
            } => {
                let perception = self.perceive_current();
                let (id, bbox) = self.resolve_id(&perception, widget);
                self.decision_click(intent, widget);
                self.push(Stage::WidgetLocalization, render_widget_id(id));
                self.backend.tap(bbox.center()).unwrap();
                self.loading_then_stable(*loading_polls);
                self.verify(Some(is_last));
                self.expected.push(ExpectedOp::ok(ActionType::Click));
            }
            Planned::Input {
                widget,
                text,
                intent,
            } => {
                let perception = self.perceive_current();
                let (id, bbox) = self.resolve_id(&perception, widget);
                let block = render_decision_block(&crate::decider::AbstractDecision {
                    action: ActionType::Input,
                    intent: intent.to_string(),
                    widget_description: widget.to_string(),
                    input_text: Some(text.to_string()),
                    scroll_direction: None,
                });
                self.push(Stage::LogicalDecision, block);
                self.push(Stage::WidgetLocalization, render_widget_id(id));
                self.push(
                    Stage::WidgetLocalization,
                    render_verdict(false, "the matched widget is the editable field"),
                );
                self.backend.tap(bbox.center()).unwrap();
                self.backend.input_text(text).unwrap();
                self.loading_then_stable(0);
                self.verify(Some(is_last));
                self.expected.push(ExpectedOp {
                    kind: ActionType::Input,
                    transition_ok: true,
                    reversed: false,
                    input_text: Some(text.to_string()),
                });
            }
            Planned::InputViaLabel {
                label,
                text,
                intent,
            } => {
                let perception = self.perceive_current();
                let (id, bbox) = self.resolve_id(&perception, label);
                let block = render_decision_block(&crate::decider::AbstractDecision {
                    action: ActionType::Input,
                    intent: intent.to_string(),
                    widget_description: label.to_string(),
                    input_text: Some(text.to_string()),
                    scroll_direction: None,
                });
                self.push(Stage::LogicalDecision, block);
                self.push(Stage::WidgetLocalization, render_widget_id(id));
                self.push(
                    Stage::WidgetLocalization,
                    render_verdict(true, "that widget only displays a caption"),
                );
                // The same writable-strip arithmetic the engine applies.
                let boundary = perception
                    .widgets
                    .iter()
                    .filter(|w| w.id != id && w.bbox.x >= bbox.right() && w.bbox.v_overlaps(&bbox))
                    .map(|w| w.bbox.x)
                    .min()
                    .unwrap_or(perception.source.width());
                let strip = BoundingBox::new(bbox.right(), bbox.y, boundary - bbox.right(), bbox.h);
                self.backend.tap(strip.center()).unwrap();
                self.backend.input_text(text).unwrap();
                self.loading_then_stable(0);
                self.verify(Some(is_last));
                self.expected.push(ExpectedOp {
                    kind: ActionType::Input,
                    transition_ok: true,
                    reversed: false,
                    input_text: Some(text.to_string()),
                });
            }
            Planned::Scroll { direction, intent } => {
                let block = render_decision_block(&crate::decider::AbstractDecision {
                    action: ActionType::Scroll,
                    intent: intent.to_string(),
                    widget_description: String::new(),
                    input_text: None,
                    scroll_direction: Some(*direction),
                });
                self.push(Stage::LogicalDecision, block);
                self.backend.scroll(*direction, None).unwrap();
                self.loading_then_stable(0);
                self.verify(Some(is_last));
                self.expected.push(ExpectedOp::ok(ActionType::Scroll));
            }
            Planned::ClickVirtual {
                anchor,
                placement,
                intent,
                loading_polls,
            } => {
                let perception = self.perceive_current();
                let (anchor_id, anchor_box) = self.resolve_id(&perception, anchor);
                self.decision_click(intent, "target missing from the widget list");
                self.push(Stage::WidgetLocalization, render_not_found());
                self.push(
                    Stage::WidgetLocalization,
                    render_anchor_block(anchor_id, *placement),
                );
                let vbox = virtual_box(
                    anchor_box,
                    *placement,
                    perception.source.width(),
                    perception.source.height(),
                )
                .expect("fixture anchors stay on screen");
                self.backend.tap(vbox.center()).unwrap();
                self.loading_then_stable(*loading_polls);
                self.verify(Some(is_last));
                self.expected.push(ExpectedOp::ok(ActionType::Click));
            }
            Planned::WrongClickThenCorrect {
                wrong,
                right,
                intent,
            } => {
                let perception = self.perceive_current();
                let (wrong_id, wrong_box) = self.resolve_id(&perception, wrong);
                self.decision_click(intent, right);
                self.push(Stage::WidgetLocalization, render_widget_id(wrong_id));
                self.backend.tap(wrong_box.center()).unwrap();
                self.loading_then_stable(0);
                self.push(
                    Stage::TransitionCheck,
                    render_verdict(false, "this is not the expected page"),
                );
                self.push(
                    Stage::TransitionCheck,
                    render_verdict(true, "the page did change"),
                );
                // The engine reverses before re-deciding.
                self.backend.back().unwrap();
                self.push(
                    Stage::SelfCorrection,
                    render_cause_block(
                        CorrectionCauseKind::LocalizationError,
                        "the plan was right but the wrong widget was operated",
                    ),
                );
                let perception = self.perceive_current();
                let (right_id, right_box) = self.resolve_id(&perception, right);
                self.push(Stage::WidgetLocalization, render_widget_id(right_id));
                self.backend.tap(right_box.center()).unwrap();
                self.loading_then_stable(0);
                self.verify(Some(is_last));
                self.corrections += 1;
                self.expected.push(ExpectedOp {
                    kind: ActionType::Click,
                    transition_ok: false,
                    reversed: true,
                    input_text: None,
                });
                self.expected.push(ExpectedOp::ok(ActionType::Click));
            }
            Planned::Done { intent } => {
                let block = render_decision_block(&crate::decider::AbstractDecision {
                    action: ActionType::Done,
                    intent: intent.to_string(),
                    widget_description: String::new(),
                    input_text: None,
                    scroll_direction: None,
                });
                self.push(Stage::LogicalDecision, block);
                self.expected.push(ExpectedOp::ok(ActionType::Done));
            }
        }
    }

    /// A step that keeps failing without changing the page, re-decided as
    /// wrong logic until the correction budget is exhausted.
    fn apply_exhausting_click(&mut self, widget: &'static str, intent: &str, max_corrections: u32) {
        let perception = self.perceive_current();
        let (id, bbox) = self.resolve_id(&perception, widget);
        for round in 0..=max_corrections {
            if round == 0 {
                self.decision_click(intent, widget);
            }
            self.push(Stage::WidgetLocalization, render_widget_id(id));
            self.backend.tap(bbox.center()).unwrap();
            self.loading_then_stable(0);
            self.push(
                Stage::TransitionCheck,
                render_verdict(false, "nothing happened"),
            );
            // Change check short-circuits on byte-equal screenshots: no entry.
            self.expected.push(ExpectedOp {
                kind: ActionType::Click,
                transition_ok: false,
                reversed: false,
                input_text: None,
            });
            if round < max_corrections {
                self.push(
                    Stage::SelfCorrection,
                    render_cause_block(
                        CorrectionCauseKind::WrongLogic,
                        "the action does not fit this state",
                    ),
                );
                self.decision_click(intent, widget);
                self.corrections += 1;
            }
        }
    }

    fn finish(
        self,
        name: &'static str,
        app: SimAppSpec,
        scenario: ScenarioSpec,
        expected_case: Case,
    ) -> Fixture {
        Fixture {
            name,
            app,
            scenario,
            expected_final_screen: self.backend.current_screen().to_string(),
            script: self.script,
            expected_ops: self.expected,
            expected_case,
            expected_corrections: self.corrections,
        }
    }
}

fn compile(
    name: &'static str,
    app: SimAppSpec,
    scenario: ScenarioSpec,
    steps: Vec<Planned>,
) -> Fixture {
    let mut c = Compiler::new(app.clone());
    let n = steps.len();
    for (i, step) in steps.iter().enumerate() {
        c.apply(step, i + 1 == n);
    }
    c.finish(name, app, scenario, Case::C1)
}

// --- widget/screen helpers ---------------------------------------------------

fn label(id: &str, x: u32, y: u32, text: &str) -> SimWidget {
    SimWidget::new(
        id,
        BoundingBox::new(x, y, 1.max(crate::font::text_width(text, 2)), 14),
        SimWidgetKind::Label,
    )
    .with_label(text)
}

fn button(id: &str, bbox: BoundingBox, text: &str) -> SimWidget {
    SimWidget::new(id, bbox, SimWidgetKind::Button).with_label(text)
}

fn input(id: &str, bbox: BoundingBox, hint: &str) -> SimWidget {
    SimWidget::new(id, bbox, SimWidgetKind::Input).with_label(hint)
}

fn icon(id: &str, bbox: BoundingBox) -> SimWidget {
    SimWidget::new(id, bbox, SimWidgetKind::Icon)
}

fn tap_to(widget: &str, to: &str) -> SimTransition {
    SimTransition {
        on: EventMatcher::Tap {
            widget: widget.into(),
        },
        to: to.into(),
        guard: Vec::new(),
        log_emit: None,
    }
}

fn tap_to_guarded(widget: &str, to: &str, non_empty: &[&str]) -> SimTransition {
    SimTransition {
        on: EventMatcher::Tap {
            widget: widget.into(),
        },
        to: to.into(),
        guard: non_empty
            .iter()
            .map(|w| GuardCond {
                widget: w.to_string(),
                equals: None,
                non_empty: true,
            })
            .collect(),
        log_emit: None,
    }
}

fn screen(widgets: Vec<SimWidget>, transitions: Vec<SimTransition>) -> SimScreen {
    SimScreen {
        widgets,
        transitions,
    }
}

fn app(
    app_id: &str,
    info: &str,
    initial: &str,
    goal: Option<&str>,
    screens: Vec<(&str, SimScreen)>,
) -> SimAppSpec {
    SimAppSpec {
        app_id: app_id.into(),
        app_info: info.into(),
        screen_size: [720, 1280],
        initial_screen: initial.into(),
        goal_screen: goal.map(str::to_string),
        back_stack: true,
        screens: screens
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
        crash_points: Vec::new(),
    }
}

// --- the apps ----------------------------------------------------------------

pub fn login_app() -> SimAppSpec {
    app(
        "demo.login",
        "demo login app",
        "login",
        Some("home"),
        vec![
            (
                "login",
                screen(
                    vec![
                        label("title", 60, 100, "Sign in"),
                        input("user", BoundingBox::new(60, 200, 480, 64), "Username"),
                        input("pass", BoundingBox::new(60, 300, 480, 64), "Password"),
                        button("login", BoundingBox::new(60, 420, 480, 72), "Login"),
                        button("help", BoundingBox::new(60, 540, 220, 56), "Help"),
                    ],
                    vec![
                        tap_to_guarded("login", "home", &["user", "pass"]),
                        tap_to("help", "help"),
                    ],
                ),
            ),
            (
                "home",
                screen(vec![label("welcome", 60, 200, "Welcome back")], vec![]),
            ),
            (
                "help",
                screen(vec![label("help_text", 60, 200, "Help topics")], vec![]),
            ),
        ],
    )
}

pub fn note_app() -> SimAppSpec {
    let list_widgets = vec![
        label("title", 60, 100, "Notes"),
        icon("add", BoundingBox::new(596, 1146, 84, 84)),
    ];
    app(
        "demo.notes",
        "note taking app",
        "list",
        Some("saved"),
        vec![
            (
                "list",
                screen(list_widgets.clone(), vec![tap_to("add", "menu")]),
            ),
            (
                "menu",
                screen(
                    {
                        let mut w = list_widgets;
                        w.push(button(
                            "text_note",
                            BoundingBox::new(200, 500, 320, 64),
                            "Text note",
                        ));
                        w.push(button(
                            "checklist",
                            BoundingBox::new(200, 600, 320, 64),
                            "Checklist",
                        ));
                        w
                    },
                    vec![tap_to("text_note", "editor")],
                ),
            ),
            (
                "editor",
                screen(
                    vec![
                        label("hint", 60, 100, "New note"),
                        input("content", BoundingBox::new(60, 160, 600, 320), "Write here"),
                        button("save", BoundingBox::new(60, 540, 200, 64), "Save"),
                    ],
                    vec![tap_to_guarded("save", "saved", &["content"])],
                ),
            ),
            (
                "saved",
                screen(vec![label("done", 60, 200, "Note saved")], vec![]),
            ),
        ],
    )
}

pub fn calculator_app() -> SimAppSpec {
    let keypad = |display: &str| -> Vec<SimWidget> {
        let mut w = vec![SimWidget::new(
            "display",
            BoundingBox::new(60, 120, 600, 80),
            SimWidgetKind::Display,
        )
        .with_label(display)];
        let keys = [
            ["k7", "k8", "k9", "kplus"],
            ["k4", "k5", "k6", "kminus"],
            ["k1", "k2", "k3", "kmul"],
            ["kc", "k0", "keq", "kdiv"],
        ];
        let caps = [
            ["7", "8", "9", "+"],
            ["4", "5", "6", "-"],
            ["1", "2", "3", "*"],
            ["C", "0", "=", "/"],
        ];
        for (r, row) in keys.iter().enumerate() {
            for (cidx, id) in row.iter().enumerate() {
                let bbox = BoundingBox::new(60 + cidx as u32 * 156, 260 + r as u32 * 120, 130, 90);
                w.push(button(id, bbox, caps[r][cidx]));
            }
        }
        w
    };
    app(
        "demo.calc",
        "calculator",
        "c0",
        Some("c10"),
        vec![
            ("c0", screen(keypad("0"), vec![tap_to("k7", "c7")])),
            ("c7", screen(keypad("7"), vec![tap_to("kplus", "c7p")])),
            ("c7p", screen(keypad("7+"), vec![tap_to("k3", "c7p3")])),
            ("c7p3", screen(keypad("7+3"), vec![tap_to("keq", "c10")])),
            ("c10", screen(keypad("10"), vec![])),
        ],
    )
}

pub fn email_app() -> SimAppSpec {
    app(
        "demo.mail",
        "mail client",
        "inbox",
        Some("sent"),
        vec![
            (
                "inbox",
                screen(
                    vec![
                        label("title", 60, 100, "Inbox"),
                        icon("compose", BoundingBox::new(596, 1146, 84, 84)),
                    ],
                    vec![tap_to("compose", "composer")],
                ),
            ),
            (
                "composer",
                screen(
                    vec![
                        label("to_label", 40, 206, "To:"),
                        SimWidget::new(
                            "to_field",
                            BoundingBox::new(90, 192, 410, 42),
                            SimWidgetKind::Input,
                        )
                        .frameless(),
                        button("cc", BoundingBox::new(530, 186, 130, 54), "Cc"),
                        input("subject", BoundingBox::new(40, 270, 620, 56), "Subject"),
                        input("body", BoundingBox::new(40, 350, 620, 280), "Body"),
                        button("send", BoundingBox::new(40, 680, 180, 64), "Send"),
                    ],
                    vec![tap_to_guarded("send", "sent", &["to_field", "subject"])],
                ),
            ),
            (
                "sent",
                screen(vec![label("ok", 60, 200, "Message sent")], vec![]),
            ),
        ],
    )
}

pub fn music_app() -> SimAppSpec {
    app(
        "demo.music",
        "music player",
        "home",
        Some("playing"),
        vec![
            (
                "home",
                screen(
                    vec![
                        label("title", 60, 100, "Music"),
                        input("search", BoundingBox::new(60, 160, 460, 64), "Search"),
                        button("go", BoundingBox::new(548, 160, 110, 64), "Go"),
                    ],
                    vec![tap_to_guarded("go", "results", &["search"])],
                ),
            ),
            (
                "results",
                screen(
                    vec![
                        label("title", 60, 100, "Results"),
                        button("song_a", BoundingBox::new(60, 200, 600, 72), "Blue Train"),
                        button("song_b", BoundingBox::new(60, 300, 600, 72), "So What"),
                    ],
                    vec![tap_to("song_a", "player")],
                ),
            ),
            (
                "player",
                screen(
                    vec![
                        label("now", 60, 120, "Blue Train"),
                        button("play", BoundingBox::new(60, 400, 200, 72), "Play"),
                    ],
                    vec![tap_to("play", "playing")],
                ),
            ),
            (
                "playing",
                screen(vec![label("state", 60, 200, "Playing now")], vec![]),
            ),
        ],
    )
}

pub fn weather_app() -> SimAppSpec {
    app(
        "demo.weather",
        "weather lookup",
        "home",
        Some("result"),
        vec![
            (
                "home",
                screen(
                    vec![
                        label("title", 60, 100, "Weather"),
                        input("city", BoundingBox::new(60, 200, 400, 64), "City"),
                        // Search area with no visual boundary: the scripted
                        // model predicts it from the city field.
                        SimWidget::new(
                            "search",
                            BoundingBox::new(476, 200, 180, 64),
                            SimWidgetKind::Button,
                        )
                        .frameless(),
                    ],
                    vec![tap_to_guarded("search", "result", &["city"])],
                ),
            ),
            (
                "result",
                screen(
                    vec![
                        label("city_name", 60, 120, "Berlin"),
                        SimWidget::new(
                            "temp",
                            BoundingBox::new(60, 200, 240, 80),
                            SimWidgetKind::Display,
                        )
                        .with_label("21"),
                    ],
                    vec![],
                ),
            ),
        ],
    )
}

pub fn translate_app() -> SimAppSpec {
    app(
        "demo.translate",
        "translator",
        "home",
        Some("result"),
        vec![
            (
                "home",
                screen(
                    vec![
                        label("title", 60, 100, "Translate"),
                        input("source", BoundingBox::new(60, 160, 600, 140), "Enter text"),
                    ],
                    vec![SimTransition {
                        on: EventMatcher::Scroll {
                            direction: Direction::Down,
                        },
                        to: "home_more".into(),
                        guard: Vec::new(),
                        log_emit: None,
                    }],
                ),
            ),
            (
                "home_more",
                screen(
                    vec![
                        label("lang", 60, 100, "English to French"),
                        button("translate", BoundingBox::new(60, 200, 300, 72), "Translate"),
                    ],
                    vec![tap_to("translate", "result")],
                ),
            ),
            (
                "result",
                screen(vec![label("out", 60, 200, "Bonjour")], vec![]),
            ),
        ],
    )
}

pub fn shopping_app() -> SimAppSpec {
    app(
        "demo.shop",
        "shopping",
        "home",
        Some("added"),
        vec![
            (
                "home",
                screen(
                    vec![
                        label("title", 60, 100, "Shop"),
                        input("query", BoundingBox::new(60, 160, 440, 64), "Search items"),
                        button("find", BoundingBox::new(530, 160, 130, 64), "Find"),
                    ],
                    vec![tap_to_guarded("find", "results", &["query"])],
                ),
            ),
            (
                "results",
                screen(
                    vec![
                        label("title", 60, 100, "Results"),
                        button("item_a", BoundingBox::new(60, 200, 600, 72), "Desk lamp"),
                        button("item_b", BoundingBox::new(60, 300, 600, 72), "Desk chair"),
                    ],
                    vec![tap_to("item_a", "item")],
                ),
            ),
            (
                "item",
                screen(
                    vec![
                        label("name", 60, 120, "Desk lamp"),
                        button("add", BoundingBox::new(60, 500, 280, 72), "Add to cart"),
                    ],
                    vec![tap_to("add", "added")],
                ),
            ),
            (
                "added",
                screen(vec![label("ok", 60, 200, "Added to cart")], vec![]),
            ),
        ],
    )
}

pub fn photo_app() -> SimAppSpec {
    app(
        "demo.photo",
        "camera",
        "camera",
        Some("saved"),
        vec![
            (
                "camera",
                screen(
                    vec![
                        label("title", 60, 100, "Camera"),
                        icon("shutter", BoundingBox::new(310, 1100, 100, 100)),
                    ],
                    vec![tap_to("shutter", "preview")],
                ),
            ),
            (
                "preview",
                screen(
                    vec![
                        label("title", 60, 100, "Preview"),
                        button("ok", BoundingBox::new(60, 1100, 200, 72), "Keep"),
                        button("retake", BoundingBox::new(300, 1100, 200, 72), "Retake"),
                    ],
                    vec![tap_to("ok", "saved"), tap_to("retake", "camera")],
                ),
            ),
            (
                "saved",
                screen(vec![label("ok", 60, 200, "Photo saved")], vec![]),
            ),
        ],
    )
}

pub fn alarm_app() -> SimAppSpec {
    app(
        "demo.alarm",
        "alarm clock",
        "list",
        Some("saved"),
        vec![
            (
                "list",
                screen(
                    vec![
                        label("title", 60, 100, "Alarms"),
                        icon("add", BoundingBox::new(596, 1100, 90, 90)),
                    ],
                    vec![tap_to("add", "editor")],
                ),
            ),
            (
                "editor",
                screen(
                    vec![
                        SimWidget::new(
                            "time",
                            BoundingBox::new(60, 200, 240, 80),
                            SimWidgetKind::Display,
                        )
                        .with_label("07:00"),
                        button("save", BoundingBox::new(60, 400, 200, 72), "Save"),
                    ],
                    vec![tap_to("save", "saved")],
                ),
            ),
            (
                "saved",
                screen(vec![label("ok", 60, 200, "Alarm set")], vec![]),
            ),
        ],
    )
}

// --- the fixtures --------------------------------------------------------------

pub fn login_fixture() -> Fixture {
    compile(
        "login",
        login_app(),
        ScenarioSpec::new("login", "input the required token to login")
            .with_input("user", "alice")
            .with_input("pass", "secret123"),
        vec![
            Planned::Input {
                widget: "user",
                text: "alice",
                intent: "enter the username",
            },
            Planned::Input {
                widget: "pass",
                text: "secret123",
                intent: "enter the password",
            },
            Planned::Click {
                widget: "login",
                intent: "submit the credentials",
                loading_polls: 0,
            },
        ],
    )
}

pub fn note_fixture() -> Fixture {
    compile(
        "note",
        note_app(),
        ScenarioSpec::new("note", "create, edit and save a text note"),
        vec![
            Planned::Click {
                widget: "add",
                intent: "open the hidden creation menu",
                loading_polls: 0,
            },
            Planned::Click {
                widget: "text_note",
                intent: "choose the text note entry",
                loading_polls: 0,
            },
            Planned::Input {
                widget: "content",
                text: "meeting at 3pm",
                intent: "write the note body",
            },
            Planned::Click {
                widget: "save",
                intent: "save the note",
                loading_polls: 0,
            },
        ],
    )
}

pub fn calculator_fixture() -> Fixture {
    compile(
        "calculation",
        calculator_app(),
        ScenarioSpec::new("calculation", "compute 7+3 with the calculator"),
        vec![
            Planned::Click {
                widget: "k7",
                intent: "press seven",
                loading_polls: 0,
            },
            Planned::Click {
                widget: "kplus",
                intent: "press plus",
                loading_polls: 0,
            },
            Planned::Click {
                widget: "k3",
                intent: "press three",
                loading_polls: 0,
            },
            Planned::Click {
                widget: "keq",
                intent: "evaluate the expression",
                loading_polls: 0,
            },
        ],
    )
}

pub fn email_fixture() -> Fixture {
    compile(
        "email",
        email_app(),
        ScenarioSpec::new("email", "create, edit and send an email")
            .with_input("recipient", "a@b.c"),
        vec![
            Planned::Click {
                widget: "compose",
                intent: "open the composer",
                loading_polls: 0,
            },
            Planned::InputViaLabel {
                label: "to_label",
                text: "a@b.c",
                intent: "enter the recipient",
            },
            Planned::Input {
                widget: "subject",
                text: "hello",
                intent: "enter the subject",
            },
            Planned::Click {
                widget: "send",
                intent: "send the email",
                loading_polls: 1,
            },
        ],
    )
}

pub fn music_fixture() -> Fixture {
    compile(
        "music",
        music_app(),
        ScenarioSpec::new("music", "search, choose and play a song"),
        vec![
            Planned::Input {
                widget: "search",
                text: "blue train",
                intent: "enter the search query",
            },
            Planned::Click {
                widget: "go",
                intent: "run the search",
                loading_polls: 0,
            },
            Planned::Click {
                widget: "song_a",
                intent: "open the first result",
                loading_polls: 0,
            },
            Planned::Click {
                widget: "play",
                intent: "start playback",
                loading_polls: 0,
            },
        ],
    )
}

pub fn weather_fixture() -> Fixture {
    compile(
        "weather",
        weather_app(),
        ScenarioSpec::new("weather", "query the weather of a specific city"),
        vec![
            Planned::Input {
                widget: "city",
                text: "Berlin",
                intent: "enter the city",
            },
            Planned::ClickVirtual {
                anchor: "city",
                placement: Placement::Right,
                intent: "run the search",
                loading_polls: 2,
            },
        ],
    )
}

pub fn translate_fixture() -> Fixture {
    compile(
        "translation",
        translate_app(),
        ScenarioSpec::new(
            "translation",
            "choose a language, edit the text, and translate",
        ),
        vec![
            Planned::Input {
                widget: "source",
                text: "hello",
                intent: "enter the source text",
            },
            Planned::Scroll {
                direction: Direction::Down,
                intent: "reveal the translate controls",
            },
            Planned::Click {
                widget: "translate",
                intent: "run the translation",
                loading_polls: 0,
            },
        ],
    )
}

pub fn shopping_fixture() -> Fixture {
    compile(
        "shopping",
        shopping_app(),
        ScenarioSpec::new("shopping", "search for an item and save it to the cart"),
        vec![
            Planned::Input {
                widget: "query",
                text: "lamp",
                intent: "enter the item to find",
            },
            Planned::Click {
                widget: "find",
                intent: "run the search",
                loading_polls: 0,
            },
            Planned::Click {
                widget: "item_a",
                intent: "open the first item",
                loading_polls: 0,
            },
            Planned::Click {
                widget: "add",
                intent: "add the item to the cart",
                loading_polls: 0,
            },
        ],
    )
}

pub fn photo_fixture() -> Fixture {
    compile(
        "photo",
        photo_app(),
        ScenarioSpec::new("photo", "take a photo and keep it"),
        vec![
            Planned::Click {
                widget: "shutter",
                intent: "take the photo",
                loading_polls: 0,
            },
            Planned::Click {
                widget: "ok",
                intent: "keep the photo",
                loading_polls: 0,
            },
        ],
    )
}

pub fn alarm_fixture() -> Fixture {
    let mut fixture = compile(
        "alarm-clock",
        alarm_app(),
        ScenarioSpec::new("alarm-clock", "create and configure an alarm"),
        vec![
            Planned::Click {
                widget: "add",
                intent: "open the alarm editor",
                loading_polls: 0,
            },
            Planned::Click {
                widget: "save",
                intent: "save the alarm",
                loading_polls: 0,
            },
            Planned::Done {
                intent: "the alarm is configured",
            },
        ],
    );
    // The second click must not end the session: its completion verdict says
    // no and the third decision is the done operation.
    fixture
        .script
        .iter_mut()
        .filter(|e| e.stage == Stage::CompletionCheck)
        .for_each(|e| e.response = render_verdict(false, "still on the confirmation page"));
    fixture
}

/// One wrong localization, reversed and corrected: still case c1 with
/// exactly one correction on record.
pub fn wrong_widget_fixture() -> Fixture {
    compile(
        "login-wrong-widget",
        login_app(),
        ScenarioSpec::new("login", "input the required token to login"),
        vec![
            Planned::Input {
                widget: "user",
                text: "alice",
                intent: "enter the username",
            },
            Planned::Input {
                widget: "pass",
                text: "secret123",
                intent: "enter the password",
            },
            Planned::WrongClickThenCorrect {
                wrong: "help",
                right: "login",
                intent: "submit the credentials",
            },
        ],
    )
}

/// Clicking a guarded button with empty fields never changes the page; the
/// corrections re-decide the same click until the budget is gone: case c4.
pub fn exhaust_fixture(max_corrections: u32) -> Fixture {
    let spec = login_app();
    let mut c = Compiler::new(spec.clone());
    c.apply_exhausting_click("login", "submit the credentials", max_corrections);
    let mut fixture = c.finish(
        "login-exhaust",
        spec,
        ScenarioSpec::new("login", "input the required token to login"),
        Case::C4,
    );
    fixture.expected_final_screen = "login".into();
    fixture
}

/// A calculator whose equals key crashes the app. Every press emits the same
/// fatal line; mining dedups them into one report.
pub fn crash_fixture(max_corrections: u32, foreign_app: bool) -> Fixture {
    let mut spec = calculator_app();
    let process = if foreign_app {
        "other.calc"
    } else {
        "demo.calc"
    };
    spec.crash_points.push(CrashPoint {
        screen: "c7p3".into(),
        on: EventMatcher::Tap { widget: "keq".into() },
        log_line: format!(
            "FATAL EXCEPTION: main process={process} java.lang.ArithmeticException: divide by zero at Calculator.evaluate(Calculator.java:42)"
        ),
    });
    let mut c = Compiler::new(spec.clone());
    for (widget, intent) in [
        ("k7", "press seven"),
        ("kplus", "press plus"),
        ("k3", "press three"),
    ] {
        c.apply(
            &Planned::Click {
                widget,
                intent,
                loading_polls: 0,
            },
            false,
        );
    }
    c.apply_exhausting_click("keq", "evaluate the expression", max_corrections);
    let mut fixture = c.finish(
        "calculation-crash",
        spec,
        ScenarioSpec::new("calculation", "compute 7+3 with the calculator"),
        Case::C4,
    );
    fixture.expected_final_screen = "c7p3".into();
    fixture
}

/// The ten scenario-shaped happy-path fixtures, all expected to end as c1.
pub fn all_happy() -> Vec<Fixture> {
    vec![
        login_fixture(),
        note_fixture(),
        calculator_fixture(),
        email_fixture(),
        music_fixture(),
        weather_fixture(),
        translate_fixture(),
        shopping_fixture(),
        photo_fixture(),
        alarm_fixture(),
    ]
}

/// Every sim app in the corpus, for perception ground-truth sweeps.
pub fn all_apps() -> Vec<SimAppSpec> {
    vec![
        login_app(),
        note_app(),
        calculator_app(),
        email_app(),
        music_app(),
        weather_app(),
        translate_app(),
        shopping_app(),
        photo_app(),
        alarm_app(),
    ]
}

/// Render every screen of every corpus app with empty contents.
pub fn all_screens() -> Vec<(String, String, crate::raster::RasterImage)> {
    let mut out = Vec::new();
    for spec in all_apps() {
        for screen_id in spec.screens.keys() {
            let img = crate::device::sim::render_screen(&spec, screen_id, &BTreeMap::new());
            out.push((spec.app_id.clone(), screen_id.clone(), img));
        }
    }
    out
}
