//! Declarative simulated app: a screen/transition graph with a deterministic
//! renderer. Desk-scale stand-in for a real device.
//!
//! The renderer and the fixture OCR are co-designed: every label is drawn
//! with the embedded 5x7 font in the reserved text ink color, and nothing
//! else uses that color.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{DeviceBackend, DeviceError, DeviceInfo};
use crate::font;
use crate::geometry::{BoundingBox, Direction, Point};
use crate::perception::TEXT_INK;
use crate::raster::{RasterImage, Rgb};

const BG: Rgb = [245, 245, 245];
const STATUSBAR_BG: Rgb = [210, 210, 210];
const STATUSBAR_ICON: Rgb = [90, 90, 90];
const BORDER: Rgb = [0, 0, 0];
const FIELD_BORDER: Rgb = [70, 70, 70];
const BUTTON_FILL: Rgb = [225, 225, 225];
const DISPLAY_FILL: Rgb = [235, 235, 235];
const HINT: Rgb = [150, 150, 150];
const MOTIF: Rgb = [90, 90, 90];

pub const STATUSBAR_HEIGHT: u32 = 44;
pub const LABEL_SCALE: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimWidgetKind {
    Button,
    Input,
    Label,
    Icon,
    Checkbox,
    Display,
}

impl SimWidgetKind {
    pub fn interactive(self) -> bool {
        matches!(
            self,
            SimWidgetKind::Button
                | SimWidgetKind::Input
                | SimWidgetKind::Icon
                | SimWidgetKind::Checkbox
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimWidget {
    pub id_hint: String,
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    pub kind: SimWidgetKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default)]
    pub editable: bool,
    /// Drawn without chrome: hit-testable but invisible until it has
    /// content. Models widgets without clear visual boundaries.
    #[serde(default)]
    pub frameless: bool,
}

impl SimWidget {
    pub fn new(id_hint: &str, bbox: BoundingBox, kind: SimWidgetKind) -> Self {
        SimWidget {
            id_hint: id_hint.to_string(),
            bbox,
            kind,
            label: None,
            editable: kind == SimWidgetKind::Input,
            frameless: false,
        }
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.label = Some(label.to_string());
        self
    }

    pub fn frameless(mut self) -> Self {
        self.frameless = true;
        self
    }
}

/// What an event must look like for a transition or crash point to fire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "lowercase")]
pub enum EventMatcher {
    /// A tap landing on the named widget (topmost wins on overlap).
    Tap {
        widget: String,
    },
    Scroll {
        direction: Direction,
    },
    Back,
}

/// All conditions must hold for the transition to fire.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GuardCond {
    pub widget: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equals: Option<String>,
    #[serde(default)]
    pub non_empty: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimTransition {
    pub on: EventMatcher,
    pub to: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub guard: Vec<GuardCond>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_emit: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrashPoint {
    pub screen: String,
    pub on: EventMatcher,
    pub log_line: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SimScreen {
    pub widgets: Vec<SimWidget>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transitions: Vec<SimTransition>,
}

fn default_screen_size() -> [u32; 2] {
    [720, 1280]
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimAppSpec {
    pub app_id: String,
    #[serde(default)]
    pub app_info: String,
    #[serde(default = "default_screen_size")]
    pub screen_size: [u32; 2],
    pub initial_screen: String,
    /// Reaching this screen counts as scenario coverage for fixtures.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal_screen: Option<String>,
    /// When set, back pops the navigation stack unless an explicit back
    /// transition matches first.
    #[serde(default = "default_true")]
    pub back_stack: bool,
    pub screens: BTreeMap<String, SimScreen>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub crash_points: Vec<CrashPoint>,
}

impl SimAppSpec {
    pub fn load(path: &Path) -> Result<Self, DeviceError> {
        let raw = std::fs::read_to_string(path)?;
        let spec: SimAppSpec = serde_json::from_str(&raw)
            .map_err(|e| DeviceError::InvalidSpec(format!("{}: {e}", path.display())))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn save(&self, path: &Path) -> Result<(), DeviceError> {
        let raw = serde_json::to_string_pretty(self)
            .map_err(|e| DeviceError::InvalidSpec(e.to_string()))?;
        std::fs::write(path, raw)?;
        Ok(())
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        let [w, h] = self.screen_size;
        if w == 0 || h == 0 {
            return Err(DeviceError::InvalidSpec("zero screen size".into()));
        }
        if !self.screens.contains_key(&self.initial_screen) {
            return Err(DeviceError::InvalidSpec(format!(
                "initial screen {:?} does not exist",
                self.initial_screen
            )));
        }
        if let Some(goal) = &self.goal_screen {
            if !self.screens.contains_key(goal) {
                return Err(DeviceError::InvalidSpec(format!(
                    "goal screen {goal:?} does not exist"
                )));
            }
        }
        for (sid, screen) in &self.screens {
            for widget in &screen.widgets {
                if !widget.bbox.in_bounds(w, h) {
                    return Err(DeviceError::InvalidSpec(format!(
                        "widget {:?} on screen {sid:?} is out of bounds",
                        widget.id_hint
                    )));
                }
            }
            for t in &screen.transitions {
                if !self.screens.contains_key(&t.to) {
                    return Err(DeviceError::InvalidSpec(format!(
                        "transition on screen {sid:?} targets missing screen {:?}",
                        t.to
                    )));
                }
            }
        }
        for cp in &self.crash_points {
            if !self.screens.contains_key(&cp.screen) {
                return Err(DeviceError::InvalidSpec(format!(
                    "crash point references missing screen {:?}",
                    cp.screen
                )));
            }
        }
        Ok(())
    }

    /// Rendered footprint of each widget on a screen: the declared box plus
    /// any external caption the renderer draws. This is the ground truth the
    /// perception corpus is scored against.
    pub fn ground_truth(&self, screen_id: &str) -> Vec<GroundTruthWidget> {
        let screen = match self.screens.get(screen_id) {
            Some(s) => s,
            None => return Vec::new(),
        };
        screen
            .widgets
            .iter()
            .filter(|w| !w.frameless)
            .map(|w| {
                let mut footprint = match w.kind {
                    SimWidgetKind::Label => {
                        let text = w.label.as_deref().unwrap_or("");
                        let tw = font::text_width(text, LABEL_SCALE).max(1);
                        BoundingBox::new(w.bbox.x, w.bbox.y, tw, font::text_height(LABEL_SCALE))
                    }
                    _ => w.bbox,
                };
                if w.kind == SimWidgetKind::Icon {
                    if let Some(rect) = icon_caption_rect(w) {
                        footprint = footprint.union(&rect);
                    }
                }
                if w.kind == SimWidgetKind::Checkbox {
                    if let Some(rect) = checkbox_caption_rect(w) {
                        footprint = footprint.union(&rect);
                    }
                }
                GroundTruthWidget {
                    id_hint: w.id_hint.clone(),
                    bbox: footprint,
                    interactive: w.kind.interactive(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct GroundTruthWidget {
    pub id_hint: String,
    pub bbox: BoundingBox,
    pub interactive: bool,
}

fn icon_caption_rect(w: &SimWidget) -> Option<BoundingBox> {
    let text = w.label.as_deref()?;
    if text.is_empty() {
        return None;
    }
    let tw = font::text_width(text, LABEL_SCALE);
    let th = font::text_height(LABEL_SCALE);
    let cx = w.bbox.x + w.bbox.w / 2;
    let x = cx.saturating_sub(tw / 2);
    Some(BoundingBox::new(x, w.bbox.bottom() + 6, tw, th))
}

fn checkbox_caption_rect(w: &SimWidget) -> Option<BoundingBox> {
    let text = w.label.as_deref()?;
    if text.is_empty() {
        return None;
    }
    let tw = font::text_width(text, LABEL_SCALE);
    let th = font::text_height(LABEL_SCALE);
    let y = w.bbox.y + (w.bbox.h.saturating_sub(th)) / 2;
    Some(BoundingBox::new(w.bbox.right() + 10, y, tw, th))
}

fn centered_text_origin(bbox: &BoundingBox, text: &str) -> (u32, u32) {
    let tw = font::text_width(text, LABEL_SCALE);
    let th = font::text_height(LABEL_SCALE);
    let x = bbox.x + bbox.w.saturating_sub(tw) / 2;
    let y = bbox.y + bbox.h.saturating_sub(th) / 2;
    (x, y)
}

/// Render one screen of the app. Pure function of the spec, the screen id
/// and the accumulated editable contents, so identical event histories give
/// byte-identical screenshots.
pub fn render_screen(
    spec: &SimAppSpec,
    screen_id: &str,
    contents: &BTreeMap<(String, String), String>,
) -> RasterImage {
    let [w, h] = spec.screen_size;
    let mut img = RasterImage::new(w, h, BG);

    // Status bar chrome: strip, divider and three indicator rects. All of it
    // sits inside the configured status-bar band and must be filtered out by
    // perception.
    img.fill_rect(BoundingBox::new(0, 0, w, STATUSBAR_HEIGHT), STATUSBAR_BG);
    for i in 0..3u32 {
        let x = w.saturating_sub(30 + i * 28);
        img.fill_rect(BoundingBox::new(x, 14, 18, 14), STATUSBAR_ICON);
    }
    for x in 0..w {
        img.set(x, STATUSBAR_HEIGHT, [120, 120, 120]);
    }

    let screen = match spec.screens.get(screen_id) {
        Some(s) => s,
        None => return img,
    };

    for widget in &screen.widgets {
        let b = widget.bbox;
        match widget.kind {
            SimWidgetKind::Button => {
                if !widget.frameless {
                    img.fill_rect(b, BUTTON_FILL);
                    img.outline_rect(b, 2, BORDER);
                    if let Some(label) = &widget.label {
                        let (x, y) = centered_text_origin(&b, label);
                        img.draw_text(x, y, label, LABEL_SCALE, TEXT_INK);
                    }
                }
            }
            SimWidgetKind::Input => {
                if !widget.frameless {
                    img.fill_rect(b, [255, 255, 255]);
                    img.outline_rect(b, 2, FIELD_BORDER);
                }
                let key = (screen_id.to_string(), widget.id_hint.clone());
                let content = contents.get(&key).map(String::as_str).unwrap_or("");
                let ty = b.y + b.h.saturating_sub(font::text_height(LABEL_SCALE)) / 2;
                if !content.is_empty() {
                    img.draw_text(b.x + 8, ty, content, LABEL_SCALE, TEXT_INK);
                } else if let Some(hint) = &widget.label {
                    if !widget.frameless {
                        // Hints render in a non-ink gray: visible to a human,
                        // invisible to the fixture OCR, like real placeholders.
                        img.draw_text(b.x + 8, ty, hint, LABEL_SCALE, HINT);
                    }
                }
            }
            SimWidgetKind::Label => {
                if let Some(label) = &widget.label {
                    img.draw_text(b.x, b.y, label, LABEL_SCALE, TEXT_INK);
                }
            }
            SimWidgetKind::Icon => {
                img.outline_rect(b, 2, BORDER);
                // Plus-sign motif; skipped when the icon is too small to
                // hold one.
                let cx = b.x + b.w / 2;
                let cy = b.y + b.h / 2;
                let arm = (b.w.min(b.h) / 2).saturating_sub(6);
                if arm >= 1 {
                    img.fill_rect(
                        BoundingBox::new(cx.saturating_sub(arm), cy.saturating_sub(1), arm * 2, 3),
                        MOTIF,
                    );
                    img.fill_rect(
                        BoundingBox::new(cx.saturating_sub(1), cy.saturating_sub(arm), 3, arm * 2),
                        MOTIF,
                    );
                }
                if let Some(rect) = icon_caption_rect(widget) {
                    img.draw_text(
                        rect.x,
                        rect.y,
                        widget.label.as_deref().unwrap(),
                        LABEL_SCALE,
                        TEXT_INK,
                    );
                }
            }
            SimWidgetKind::Checkbox => {
                img.outline_rect(b, 2, BORDER);
                if let Some(rect) = checkbox_caption_rect(widget) {
                    img.draw_text(
                        rect.x,
                        rect.y,
                        widget.label.as_deref().unwrap(),
                        LABEL_SCALE,
                        TEXT_INK,
                    );
                }
            }
            SimWidgetKind::Display => {
                img.fill_rect(b, DISPLAY_FILL);
                img.outline_rect(b, 2, FIELD_BORDER);
                if let Some(label) = &widget.label {
                    let tw = font::text_width(label, LABEL_SCALE);
                    let x = b.right().saturating_sub(tw + 10);
                    let y = b.y + b.h.saturating_sub(font::text_height(LABEL_SCALE)) / 2;
                    img.draw_text(x, y, label, LABEL_SCALE, TEXT_INK);
                }
            }
        }
    }
    img
}

enum SimEvent {
    Tap(Point),
    Scroll(Direction),
    Back,
}

/// In-process backend over a [`SimAppSpec`].
pub struct SimBackend {
    spec: SimAppSpec,
    current: String,
    nav_stack: Vec<String>,
    contents: BTreeMap<(String, String), String>,
    focused: Option<String>,
    log: Vec<(DateTime<Utc>, String)>,
}

impl SimBackend {
    pub fn new(spec: SimAppSpec) -> Result<Self, DeviceError> {
        spec.validate()?;
        let current = spec.initial_screen.clone();
        Ok(SimBackend {
            spec,
            current,
            nav_stack: Vec::new(),
            contents: BTreeMap::new(),
            focused: None,
            log: Vec::new(),
        })
    }

    pub fn spec(&self) -> &SimAppSpec {
        &self.spec
    }

    pub fn current_screen(&self) -> &str {
        &self.current
    }

    pub fn widget_content(&self, screen: &str, widget: &str) -> Option<&str> {
        self.contents
            .get(&(screen.to_string(), widget.to_string()))
            .map(String::as_str)
    }

    fn emit_log(&mut self, line: &str) {
        self.log.push((Utc::now(), line.to_string()));
    }

    /// Topmost declared widget containing the point; last declared wins,
    /// mimicking z-order.
    fn hit_test(&self, point: Point) -> Option<&SimWidget> {
        self.spec.screens[&self.current]
            .widgets
            .iter()
            .rev()
            .find(|w| w.bbox.contains(point))
    }

    fn guard_holds(&self, guard: &[GuardCond]) -> bool {
        guard.iter().all(|g| {
            let key = (self.current.clone(), g.widget.clone());
            let content = self.contents.get(&key).map(String::as_str).unwrap_or("");
            if let Some(expected) = &g.equals {
                if content != expected {
                    return false;
                }
            }
            if g.non_empty && content.is_empty() {
                return false;
            }
            true
        })
    }

    fn matcher_fires(matcher: &EventMatcher, event: &SimEvent, hit: Option<&str>) -> bool {
        match (matcher, event) {
            (EventMatcher::Tap { widget }, SimEvent::Tap(_)) => hit == Some(widget.as_str()),
            (EventMatcher::Scroll { direction }, SimEvent::Scroll(d)) => direction == d,
            (EventMatcher::Back, SimEvent::Back) => true,
            _ => false,
        }
    }

    fn apply(&mut self, event: SimEvent) {
        let hit: Option<String> = match &event {
            SimEvent::Tap(p) => self.hit_test(*p).map(|w| w.id_hint.clone()),
            _ => None,
        };

        if let SimEvent::Tap(_) = event {
            if let Some(name) = &hit {
                let editable = self.spec.screens[&self.current]
                    .widgets
                    .iter()
                    .any(|w| w.id_hint == *name && w.editable);
                self.focused = if editable { Some(name.clone()) } else { None };
            } else {
                self.focused = None;
            }
        }

        // Crash points preempt navigation: the event hits a defect, the app
        // logs a fatal line and the page stays put.
        let crash = self
            .spec
            .crash_points
            .iter()
            .find(|cp| {
                cp.screen == self.current && Self::matcher_fires(&cp.on, &event, hit.as_deref())
            })
            .map(|cp| cp.log_line.clone());
        if let Some(line) = crash {
            self.emit_log(&line);
            return;
        }

        let transition = self.spec.screens[&self.current]
            .transitions
            .iter()
            .find(|t| {
                Self::matcher_fires(&t.on, &event, hit.as_deref()) && self.guard_holds(&t.guard)
            })
            .cloned();

        if let Some(t) = transition {
            if let Some(line) = &t.log_emit {
                let line = line.clone();
                self.emit_log(&line);
            }
            self.nav_stack.push(self.current.clone());
            self.current = t.to;
            self.focused = None;
            return;
        }

        if matches!(event, SimEvent::Back) {
            // No explicit back transition matched; fall back to the stack.
            if self.spec.back_stack {
                if let Some(prev) = self.nav_stack.pop() {
                    self.current = prev;
                    self.focused = None;
                }
            }
        }
    }
}

impl DeviceBackend for SimBackend {
    fn screenshot(&mut self) -> Result<RasterImage, DeviceError> {
        Ok(render_screen(&self.spec, &self.current, &self.contents))
    }

    fn tap(&mut self, point: Point) -> Result<(), DeviceError> {
        self.apply(SimEvent::Tap(point));
        Ok(())
    }

    fn input_text(&mut self, text: &str) -> Result<(), DeviceError> {
        if let Some(widget) = self.focused.clone() {
            let key = (self.current.clone(), widget);
            self.contents.entry(key).or_default().push_str(text);
        }
        Ok(())
    }

    fn scroll(
        &mut self,
        direction: Direction,
        _region: Option<BoundingBox>,
    ) -> Result<(), DeviceError> {
        self.apply(SimEvent::Scroll(direction));
        Ok(())
    }

    fn back(&mut self) -> Result<(), DeviceError> {
        self.apply(SimEvent::Back);
        Ok(())
    }

    fn read_log_since(&mut self, since: DateTime<Utc>) -> Result<Vec<String>, DeviceError> {
        Ok(self
            .log
            .iter()
            .filter(|(ts, _)| *ts >= since)
            .map(|(ts, line)| format!("{} {line}", ts.to_rfc3339()))
            .collect())
    }

    fn info(&self) -> DeviceInfo {
        DeviceInfo {
            device: format!(
                "sim {}x{}",
                self.spec.screen_size[0], self.spec.screen_size[1]
            ),
            app_id: self.spec.app_id.clone(),
            app_info: self.spec.app_info.clone(),
        }
    }

    fn screen_marker(&self) -> Option<String> {
        Some(self.current.clone())
    }

    fn goal_reached(&self) -> Option<bool> {
        self.spec.goal_screen.as_ref().map(|g| self.current == *g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two-field login app: the login button only navigates once both fields
    /// hold the expected text.
    pub fn login_spec() -> SimAppSpec {
        let mut screens = BTreeMap::new();
        screens.insert(
            "login".to_string(),
            SimScreen {
                widgets: vec![
                    SimWidget::new(
                        "title",
                        BoundingBox::new(60, 80, 200, 20),
                        SimWidgetKind::Label,
                    )
                    .with_label("Sign in"),
                    SimWidget::new(
                        "user",
                        BoundingBox::new(60, 200, 480, 64),
                        SimWidgetKind::Input,
                    )
                    .with_label("Username"),
                    SimWidget::new(
                        "pass",
                        BoundingBox::new(60, 300, 480, 64),
                        SimWidgetKind::Input,
                    )
                    .with_label("Password"),
                    SimWidget::new(
                        "login",
                        BoundingBox::new(60, 420, 480, 72),
                        SimWidgetKind::Button,
                    )
                    .with_label("Login"),
                ],
                transitions: vec![SimTransition {
                    on: EventMatcher::Tap {
                        widget: "login".into(),
                    },
                    to: "home".into(),
                    guard: vec![
                        GuardCond {
                            widget: "user".into(),
                            equals: None,
                            non_empty: true,
                        },
                        GuardCond {
                            widget: "pass".into(),
                            equals: None,
                            non_empty: true,
                        },
                    ],
                    log_emit: None,
                }],
            },
        );
        screens.insert(
            "home".to_string(),
            SimScreen {
                widgets: vec![SimWidget::new(
                    "welcome",
                    BoundingBox::new(60, 200, 200, 20),
                    SimWidgetKind::Label,
                )
                .with_label("Welcome")],
                transitions: Vec::new(),
            },
        );
        SimAppSpec {
            app_id: "demo.login".into(),
            app_info: "demo login app".into(),
            screen_size: [720, 1280],
            initial_screen: "login".into(),
            goal_screen: Some("home".into()),
            back_stack: true,
            screens,
            crash_points: Vec::new(),
        }
    }

    fn tap_center(be: &mut SimBackend, widget: &str) {
        let b = be.spec().screens[be.current_screen()]
            .widgets
            .iter()
            .find(|w| w.id_hint == widget)
            .unwrap()
            .bbox;
        be.tap(b.center()).unwrap();
    }

    #[test]
    fn guarded_login_walk() {
        let mut be = SimBackend::new(login_spec()).unwrap();
        // Tapping login with empty fields does nothing: guard not satisfied.
        tap_center(&mut be, "login");
        assert_eq!(be.current_screen(), "login");

        tap_center(&mut be, "user");
        be.input_text("alice").unwrap();
        tap_center(&mut be, "pass");
        be.input_text("secret").unwrap();
        tap_center(&mut be, "login");
        assert_eq!(be.current_screen(), "home");
        assert_eq!(be.goal_reached(), Some(true));
    }

    #[test]
    fn tap_on_background_is_a_noop() {
        let mut be = SimBackend::new(login_spec()).unwrap();
        be.tap(Point::new(10, 1000)).unwrap();
        assert_eq!(be.current_screen(), "login");
    }

    #[test]
    fn editable_widgets_accumulate_text() {
        let mut be = SimBackend::new(login_spec()).unwrap();
        tap_center(&mut be, "user");
        be.input_text("ali").unwrap();
        be.input_text("ce").unwrap();
        assert_eq!(be.widget_content("login", "user"), Some("alice"));
    }

    #[test]
    fn back_pops_the_navigation_stack() {
        let mut be = SimBackend::new(login_spec()).unwrap();
        tap_center(&mut be, "user");
        be.input_text("a").unwrap();
        tap_center(&mut be, "pass");
        be.input_text("b").unwrap();
        tap_center(&mut be, "login");
        assert_eq!(be.current_screen(), "home");
        be.back().unwrap();
        assert_eq!(be.current_screen(), "login");
        // Stack empty: back is now a no-op.
        be.back().unwrap();
        assert_eq!(be.current_screen(), "login");
    }

    #[test]
    fn crash_point_emits_log_and_keeps_screen() {
        let mut spec = login_spec();
        spec.crash_points.push(CrashPoint {
            screen: "login".into(),
            on: EventMatcher::Tap { widget: "login".into() },
            log_line: "FATAL EXCEPTION: main process=demo.login java.lang.NullPointerException at LoginActivity.onClick".into(),
        });
        let mut be = SimBackend::new(spec).unwrap();
        let t0 = Utc::now();
        tap_center(&mut be, "user");
        be.input_text("a").unwrap();
        tap_center(&mut be, "pass");
        be.input_text("b").unwrap();
        tap_center(&mut be, "login");
        assert_eq!(be.current_screen(), "login");
        let lines = be.read_log_since(t0).unwrap();
        assert_eq!(lines.len(), 1);
        assert!(lines[0].contains("FATAL EXCEPTION"));
    }

    #[test]
    fn rendering_is_deterministic() {
        let run = || {
            let mut be = SimBackend::new(login_spec()).unwrap();
            tap_center(&mut be, "user");
            be.input_text("alice").unwrap();
            be.screenshot().unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.pixels(), b.pixels());
    }

    #[test]
    fn invalid_spec_is_rejected() {
        let mut spec = login_spec();
        spec.initial_screen = "nope".into();
        assert!(matches!(
            SimBackend::new(spec),
            Err(DeviceError::InvalidSpec(_))
        ));
    }

    #[test]
    fn topmost_widget_wins_on_overlap() {
        let mut spec = login_spec();
        let screen = spec.screens.get_mut("login").unwrap();
        // Same box as the login button, declared later, navigating nowhere.
        screen.widgets.push(SimWidget::new(
            "overlay",
            BoundingBox::new(60, 420, 480, 72),
            SimWidgetKind::Button,
        ));
        let mut be = SimBackend::new(spec).unwrap();
        tap_center(&mut be, "user");
        be.input_text("a").unwrap();
        tap_center(&mut be, "pass");
        be.input_text("b").unwrap();
        // The tap hits the overlay, not the login button underneath.
        tap_center(&mut be, "login");
        assert_eq!(be.current_screen(), "login");
    }
}
