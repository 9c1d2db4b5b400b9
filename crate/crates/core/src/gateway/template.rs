//! Stage-keyed prompt templates with named slots.
//!
//! Six editable text files ship with the engine, one per stage; a deployment
//! can override any of them from a directory. Rendering fails when a
//! placeholder that appears in the template is left unfilled.

use std::collections::BTreeMap;
use std::path::Path;

use super::{GatewayError, Stage, STAGES};

pub const SLOT_NAMES: [&str; 5] = ["scenario", "op_log", "action_types", "widget_list", "extra"];

#[derive(Debug, Clone)]
pub struct PromptTemplate {
    pub stage: Stage,
    pub body: String,
}

impl PromptTemplate {
    pub fn new(stage: Stage, body: impl Into<String>) -> Self {
        PromptTemplate {
            stage,
            body: body.into(),
        }
    }

    /// Slots the template actually references.
    pub fn required_slots(&self) -> Vec<&'static str> {
        SLOT_NAMES
            .iter()
            .copied()
            .filter(|s| self.body.contains(&format!("{{{s}}}")))
            .collect()
    }

    pub fn render(&self, slots: &BTreeMap<&str, String>) -> Result<String, GatewayError> {
        let mut out = self.body.clone();
        for name in self.required_slots() {
            match slots.get(name) {
                Some(value) => out = out.replace(&format!("{{{name}}}"), value),
                None => {
                    return Err(GatewayError::Template(format!(
                        "template {} requires slot {{{name}}}",
                        self.stage
                    )))
                }
            }
        }
        Ok(out)
    }
}

/// All six templates, with the long-term-memory preamble prepended at render
/// time.
#[derive(Debug, Clone)]
pub struct TemplateSet {
    templates: [PromptTemplate; 6],
}

impl Default for TemplateSet {
    fn default() -> Self {
        TemplateSet {
            templates: [
                PromptTemplate::new(
                    Stage::LogicalDecision,
                    include_str!("../../templates/logical_decision.txt"),
                ),
                PromptTemplate::new(
                    Stage::WidgetLocalization,
                    include_str!("../../templates/widget_localization.txt"),
                ),
                PromptTemplate::new(
                    Stage::LoadingCheck,
                    include_str!("../../templates/loading_check.txt"),
                ),
                PromptTemplate::new(
                    Stage::TransitionCheck,
                    include_str!("../../templates/transition_check.txt"),
                ),
                PromptTemplate::new(
                    Stage::CompletionCheck,
                    include_str!("../../templates/completion_check.txt"),
                ),
                PromptTemplate::new(
                    Stage::SelfCorrection,
                    include_str!("../../templates/self_correction.txt"),
                ),
            ],
        }
    }
}

impl TemplateSet {
    /// Override defaults from `<dir>/<stage>.txt` files; missing files keep
    /// the built-in template.
    pub fn load_dir(dir: &Path) -> Result<Self, GatewayError> {
        let mut set = TemplateSet::default();
        for stage in STAGES {
            let path = dir.join(format!("{stage}.txt"));
            if path.exists() {
                let body = std::fs::read_to_string(&path)?;
                set.templates[stage.index()] = PromptTemplate::new(stage, body);
            }
        }
        Ok(set)
    }

    pub fn get(&self, stage: Stage) -> &PromptTemplate {
        &self.templates[stage.index()]
    }

    pub fn render(
        &self,
        stage: Stage,
        preamble: &str,
        slots: &BTreeMap<&str, String>,
    ) -> Result<String, GatewayError> {
        let body = self.get(stage).render(slots)?;
        Ok(format!("{preamble}\n\n{body}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_templates_cover_all_stages() {
        let set = TemplateSet::default();
        for stage in STAGES {
            assert_eq!(set.get(stage).stage, stage);
            assert!(!set.get(stage).body.trim().is_empty());
        }
    }

    #[test]
    fn unfilled_required_slot_fails() {
        let t = PromptTemplate::new(Stage::LogicalDecision, "goal: {scenario} did: {op_log}");
        let mut slots = BTreeMap::new();
        slots.insert("scenario", "login".to_string());
        let err = t.render(&slots).unwrap_err();
        assert!(matches!(err, GatewayError::Template(_)));
        slots.insert("op_log", "(none)".to_string());
        assert_eq!(t.render(&slots).unwrap(), "goal: login did: (none)");
    }

    #[test]
    fn extra_slots_are_ignored() {
        let t = PromptTemplate::new(Stage::LoadingCheck, "static text");
        let mut slots = BTreeMap::new();
        slots.insert("scenario", "x".to_string());
        assert_eq!(t.render(&slots).unwrap(), "static text");
    }

    #[test]
    fn dir_override_wins() {
        let dir = std::env::temp_dir().join(format!("tmpl-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(dir.join("loading_check.txt"), "custom {extra}").unwrap();
        let set = TemplateSet::load_dir(&dir).unwrap();
        assert_eq!(set.get(Stage::LoadingCheck).body, "custom {extra}");
        // Untouched stages keep the default.
        assert_ne!(set.get(Stage::LogicalDecision).body, "custom {extra}");
        std::fs::remove_dir_all(&dir).ok();
    }
}
