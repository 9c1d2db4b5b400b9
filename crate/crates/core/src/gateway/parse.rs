//! The response grammar: fenced JSON blocks for decisions and diagnoses,
//! `VERDICT:` lines for checks, `ID:` / `NOT_FOUND` lines for localization.
//! Render helpers live here too so scripts and tests speak the same grammar.

use serde_json::Value;

use super::GatewayError;
use crate::decider::{AbstractDecision, CorrectionCauseKind, Placement, WidgetChoice};
use crate::device::ActionType;
use crate::geometry::Direction;

/// First fenced code block in the text, fence language tag ignored.
fn fenced_block(text: &str) -> Option<String> {
    let start = text.find("```")?;
    let after_fence = &text[start + 3..];
    let body_start = after_fence.find('\n')? + 1;
    let body = &after_fence[body_start..];
    let end = body.find("```")?;
    Some(body[..end].trim().to_string())
}

fn block_json(text: &str) -> Result<Value, GatewayError> {
    let block = fenced_block(text)
        .ok_or_else(|| GatewayError::Parse("no fenced block in response".into()))?;
    serde_json::from_str(&block)
        .map_err(|e| GatewayError::Parse(format!("fenced block is not valid JSON: {e}")))
}

fn str_field(obj: &Value, key: &str) -> Option<String> {
    obj.get(key)
        .and_then(Value::as_str)
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
}

/// Parse a logical-decision reply into an abstract decision, enforcing the
/// field invariants of the operation-type set.
pub fn parse_decision(text: &str) -> Result<AbstractDecision, GatewayError> {
    let obj = block_json(text)?;
    let action_raw = str_field(&obj, "action")
        .ok_or_else(|| GatewayError::Parse("decision block has no \"action\"".into()))?;
    let action = ActionType::parse(&action_raw)
        .ok_or_else(|| GatewayError::UnknownAction(action_raw.clone()))?;

    let intent = str_field(&obj, "intent").unwrap_or_default();
    let widget_description = str_field(&obj, "widget").unwrap_or_default();

    let input_text = match action {
        ActionType::Input => Some(
            str_field(&obj, "text")
                .ok_or_else(|| GatewayError::Parse("input action without \"text\"".into()))?,
        ),
        _ => None,
    };
    let scroll_direction = match action {
        ActionType::Scroll => {
            let raw = str_field(&obj, "direction")
                .ok_or_else(|| GatewayError::Parse("scroll action without \"direction\"".into()))?;
            Some(
                Direction::parse(&raw).ok_or_else(|| {
                    GatewayError::Parse(format!("unknown scroll direction {raw:?}"))
                })?,
            )
        }
        _ => None,
    };
    if matches!(action, ActionType::Click | ActionType::Input) && widget_description.is_empty() {
        return Err(GatewayError::Parse(format!(
            "{action} action without a target widget description"
        )));
    }

    Ok(AbstractDecision {
        action,
        intent,
        widget_description,
        input_text,
        scroll_direction,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub yes: bool,
    pub reason: String,
}

/// Parse a `VERDICT: yes|no` line; everything after the token is the reason.
pub fn parse_verdict(text: &str) -> Result<Verdict, GatewayError> {
    for line in text.lines() {
        let line = line.trim();
        let rest = match line
            .strip_prefix("VERDICT:")
            .or_else(|| line.strip_prefix("verdict:"))
        {
            Some(r) => r.trim(),
            None => continue,
        };
        let token: String = rest
            .chars()
            .take_while(|c| c.is_ascii_alphabetic())
            .collect::<String>()
            .to_ascii_lowercase();
        let yes = match token.as_str() {
            "yes" => true,
            "no" => false,
            _ => {
                return Err(GatewayError::Parse(format!(
                    "bad verdict token in {line:?}"
                )))
            }
        };
        let reason = rest[token.len()..]
            .trim_start_matches([' ', '-', ':', ',', '.'])
            .trim_start_matches('\u{2014}')
            .trim()
            .to_string();
        return Ok(Verdict { yes, reason });
    }
    Err(GatewayError::Parse("missing VERDICT token".into()))
}

/// Parse the widget-matching reply: a widget id in `1..=max_id`, or the
/// NOT_FOUND sentinel that routes to widget prediction.
pub fn parse_widget_choice(text: &str, max_id: u32) -> Result<WidgetChoice, GatewayError> {
    for line in text.lines() {
        let line = line.trim();
        if line == "NOT_FOUND" {
            return Ok(WidgetChoice::NotFound);
        }
        if let Some(rest) = line.strip_prefix("ID:") {
            let digits: String = rest
                .trim()
                .chars()
                .take_while(|c| c.is_ascii_digit())
                .collect();
            let id: u32 = digits
                .parse()
                .map_err(|_| GatewayError::Parse(format!("bad widget id in {line:?}")))?;
            if id == 0 || id > max_id {
                return Err(GatewayError::IdOutOfRange {
                    got: id,
                    max: max_id,
                });
            }
            return Ok(WidgetChoice::Id(id));
        }
    }
    Err(GatewayError::Parse(
        "response names neither ID nor NOT_FOUND".into(),
    ))
}

/// Parse the widget-prediction reply: anchor widget id + relative placement.
pub fn parse_anchor(text: &str) -> Result<(u32, Placement), GatewayError> {
    let obj = block_json(text)?;
    let anchor = obj
        .get("anchor")
        .and_then(Value::as_u64)
        .ok_or_else(|| GatewayError::Parse("prediction block has no \"anchor\" id".into()))?;
    let placement_raw = str_field(&obj, "placement")
        .ok_or_else(|| GatewayError::Parse("prediction block has no \"placement\"".into()))?;
    let placement = Placement::parse(&placement_raw)
        .ok_or_else(|| GatewayError::Parse(format!("unknown placement {placement_raw:?}")))?;
    Ok((anchor as u32, placement))
}

/// Parse the self-correction cause analysis.
pub fn parse_cause(text: &str) -> Result<(CorrectionCauseKind, String), GatewayError> {
    let obj = block_json(text)?;
    let cause_raw = str_field(&obj, "cause")
        .ok_or_else(|| GatewayError::Parse("correction block has no \"cause\"".into()))?;
    let cause = CorrectionCauseKind::parse(&cause_raw)
        .ok_or_else(|| GatewayError::Parse(format!("unknown correction cause {cause_raw:?}")))?;
    let evidence = str_field(&obj, "evidence").unwrap_or_default();
    Ok((cause, evidence))
}

// --- render side of the grammar -------------------------------------------

pub fn render_decision_block(dec: &AbstractDecision) -> String {
    let mut obj = serde_json::Map::new();
    obj.insert("action".into(), Value::String(dec.action.as_str().into()));
    obj.insert("intent".into(), Value::String(dec.intent.clone()));
    obj.insert(
        "widget".into(),
        Value::String(dec.widget_description.clone()),
    );
    if let Some(t) = &dec.input_text {
        obj.insert("text".into(), Value::String(t.clone()));
    }
    if let Some(d) = dec.scroll_direction {
        obj.insert("direction".into(), Value::String(d.as_str().into()));
    }
    format!("```json\n{}\n```", Value::Object(obj))
}

pub fn render_verdict(yes: bool, reason: &str) -> String {
    format!("VERDICT: {} - {}", if yes { "yes" } else { "no" }, reason)
}

pub fn render_widget_id(id: u32) -> String {
    format!("ID: {id}")
}

pub fn render_not_found() -> String {
    "NOT_FOUND".to_string()
}

pub fn render_anchor_block(anchor: u32, placement: Placement) -> String {
    format!(
        "```json\n{{\"anchor\": {anchor}, \"placement\": \"{}\"}}\n```",
        placement.as_str()
    )
}

pub fn render_cause_block(cause: CorrectionCauseKind, evidence: &str) -> String {
    format!(
        "```json\n{{\"cause\": \"{}\", \"evidence\": {}}}\n```",
        cause.as_str(),
        serde_json::to_string(evidence).unwrap_or_else(|_| "\"\"".into())
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_click_decision() {
        let text = "Reasoning first.\n```json\n{\"action\": \"click\", \"intent\": \"open composer\", \"widget\": \"plus icon bottom-right\"}\n```";
        let dec = parse_decision(text).unwrap();
        assert_eq!(dec.action, ActionType::Click);
        assert_eq!(dec.intent, "open composer");
        assert_eq!(dec.widget_description, "plus icon bottom-right");
        assert!(dec.input_text.is_none());
    }

    #[test]
    fn parses_input_decision_with_text() {
        let text = "```json\n{\"action\": \"input\", \"widget\": \"recipient field\", \"text\": \"a@b.c\"}\n```";
        let dec = parse_decision(text).unwrap();
        assert_eq!(dec.action, ActionType::Input);
        assert_eq!(dec.input_text.as_deref(), Some("a@b.c"));
    }

    #[test]
    fn unknown_action_is_rejected() {
        let text = "```json\n{\"action\": \"fly\", \"widget\": \"sky\"}\n```";
        assert!(matches!(parse_decision(text), Err(GatewayError::UnknownAction(a)) if a == "fly"));
    }

    #[test]
    fn scroll_without_direction_is_rejected() {
        let text = "```json\n{\"action\": \"scroll\", \"widget\": \"list\"}\n```";
        assert!(matches!(parse_decision(text), Err(GatewayError::Parse(_))));
    }

    #[test]
    fn verdict_yes_and_no() {
        let v = parse_verdict("VERDICT: yes \u{2014} page now shows inbox").unwrap();
        assert!(v.yes);
        assert_eq!(v.reason, "page now shows inbox");
        let v = parse_verdict("thinking\nVERDICT: no - still loading").unwrap();
        assert!(!v.yes);
        assert_eq!(v.reason, "still loading");
    }

    #[test]
    fn missing_verdict_token_fails() {
        assert!(matches!(
            parse_verdict("the page looks fine"),
            Err(GatewayError::Parse(_))
        ));
    }

    #[test]
    fn widget_choice_in_range() {
        assert_eq!(
            parse_widget_choice("ID: 7", 9).unwrap(),
            WidgetChoice::Id(7)
        );
    }

    #[test]
    fn widget_choice_out_of_range() {
        assert!(matches!(
            parse_widget_choice("ID: 42", 9),
            Err(GatewayError::IdOutOfRange { got: 42, max: 9 })
        ));
    }

    #[test]
    fn widget_choice_not_found() {
        assert_eq!(
            parse_widget_choice("NOT_FOUND", 9).unwrap(),
            WidgetChoice::NotFound
        );
    }

    #[test]
    fn decision_render_parse_round_trip() {
        let dec = AbstractDecision {
            action: ActionType::Input,
            intent: "fill recipient".into(),
            widget_description: "To: field".into(),
            input_text: Some("a@b.c".into()),
            scroll_direction: None,
        };
        let back = parse_decision(&render_decision_block(&dec)).unwrap();
        assert_eq!(back, dec);
    }

    #[test]
    fn anchor_block_round_trip() {
        let (a, p) = parse_anchor(&render_anchor_block(3, Placement::Right)).unwrap();
        assert_eq!((a, p), (3, Placement::Right));
    }

    #[test]
    fn cause_block_round_trip() {
        let (c, e) = parse_cause(&render_cause_block(
            CorrectionCauseKind::MissingPreaction,
            "menu closed",
        ))
        .unwrap();
        assert_eq!(c, CorrectionCauseKind::MissingPreaction);
        assert_eq!(e, "menu closed");
    }
}
