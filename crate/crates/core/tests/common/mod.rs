//! Shared harness for engine-level tests: run a fixture end to end against
//! the sim backend and the scripted provider, and check session logs
//! mechanically.

use uipilot_core::device::{DeviceBackend, SimBackend};
use uipilot_core::fixtures::Fixture;
use uipilot_core::gateway::{ScriptedProvider, TemplateSet};
use uipilot_core::orchestrator::{Engine, EngineConfig, RunOutcome};
use uipilot_core::perception::FixtureOcr;
use uipilot_core::recorder::{replay_log_bytes, LogRecord, Recorder};

pub struct FixtureRun {
    pub outcome: RunOutcome,
    pub records: Vec<LogRecord>,
    pub log_bytes: Vec<u8>,
    pub script_remaining: usize,
    pub final_screen: String,
}

pub fn fast_config(max_corrections: u32, session_id: &str) -> EngineConfig {
    EngineConfig {
        max_corrections,
        poll_ms: 1,
        max_wait_ms: 500,
        session_id: Some(session_id.to_string()),
        ..EngineConfig::default()
    }
}

pub fn run_fixture(fixture: &Fixture, cfg: EngineConfig) -> FixtureRun {
    let provider = ScriptedProvider::new(fixture.script.clone());
    let ocr = FixtureOcr::default();
    let engine = Engine::new(cfg, &provider, &ocr, TemplateSet::default());
    let mut backend = SimBackend::new(fixture.app.clone()).expect("fixture app validates");
    let (recorder, buf) = Recorder::in_memory();
    let outcome = engine
        .run_scenario(&fixture.scenario, &mut backend, recorder, None)
        .expect("fixture runs do not hit hard errors");
    let log_bytes = buf.lock().unwrap().clone();
    let records = replay_log_bytes(&log_bytes)
        .expect("own logs replay")
        .records;
    FixtureRun {
        outcome,
        records,
        log_bytes,
        script_remaining: provider.remaining(),
        final_screen: backend.screen_marker().unwrap_or_default(),
    }
}

fn kind_of(r: &LogRecord) -> &str {
    r.kind.as_str()
}

/// Per executed non-done operation: the log must show one or more loading
/// checks, then exactly one transition check, then a change check iff the
/// transition failed, then a completion check iff it passed. Never
/// reordered, never interleaved with another op's checks.
pub fn check_stage_order(records: &[LogRecord]) {
    let mut i = 0;
    while i < records.len() {
        if kind_of(&records[i]) != "executed" {
            i += 1;
            continue;
        }
        let op_kind = records[i].payload["op"]["kind"].as_str().unwrap_or("");
        // The done operation ends the session directly and is not verified.
        if op_kind == "done" {
            i += 1;
            continue;
        }
        let mut j = i + 1;
        let mut checks: Vec<(String, bool)> = Vec::new();
        while j < records.len() && !matches!(kind_of(&records[j]), "executed" | "reversal") {
            if kind_of(&records[j]) == "verification" {
                checks.push((
                    records[j].payload["check"]
                        .as_str()
                        .unwrap_or("")
                        .to_string(),
                    records[j].payload["verdict"].as_str() == Some("yes"),
                ));
            }
            j += 1;
        }
        assert!(
            !checks.is_empty(),
            "executed op at record {i} has no verification records"
        );
        let mut k = 0;
        let mut loadings = 0;
        while k < checks.len() && checks[k].0 == "loading" {
            loadings += 1;
            k += 1;
        }
        assert!(
            loadings >= 1,
            "op at record {i}: no loading check before transition"
        );
        assert!(
            k < checks.len() && checks[k].0 == "transition",
            "op at record {i}: expected transition check after loading, got {checks:?}"
        );
        let transition_yes = checks[k].1;
        k += 1;
        if transition_yes {
            if k < checks.len() {
                assert_eq!(
                    checks[k].0, "completion",
                    "op at record {i}: only a completion check may follow a passed transition"
                );
                k += 1;
            }
        } else {
            assert!(
                k < checks.len() && checks[k].0 == "change",
                "op at record {i}: failed transition must be followed by a change check, got {checks:?}"
            );
            k += 1;
        }
        assert_eq!(
            k,
            checks.len(),
            "op at record {i}: unexpected extra verification records {checks:?}"
        );
        i = j;
    }
}

/// After every (transition=no, change=yes) pair the very next backend event
/// must be the reverse operation, and it must restore the pre-op screen.
pub fn check_reversals(records: &[LogRecord]) -> usize {
    let mut reversals_checked = 0;
    for i in 0..records.len() {
        if kind_of(&records[i]) != "verification"
            || records[i].payload["check"].as_str() != Some("change")
            || records[i].payload["verdict"].as_str() != Some("yes")
        {
            continue;
        }
        // Last executed op before this point.
        let exec = records[..i]
            .iter()
            .rev()
            .find(|r| kind_of(r) == "executed")
            .expect("a change verdict implies an executed op");
        // Next backend event after the verdict.
        let next = records[i..]
            .iter()
            .find(|r| matches!(kind_of(r), "executed" | "reversal"))
            .expect("a change=yes verdict must be followed by a backend event");
        assert_eq!(
            kind_of(next),
            "reversal",
            "the next backend event must be the reversal"
        );

        let failed_kind = exec.payload["op"]["kind"].as_str().unwrap();
        let reversal_kind = next.payload["op"]["kind"].as_str().unwrap();
        match failed_kind {
            "click" | "input" => assert_eq!(reversal_kind, "back"),
            "scroll" => assert_eq!(reversal_kind, "scroll"),
            other => panic!("unexpected reversed op kind {other}"),
        }
        assert_eq!(
            next.payload["restored_marker"], exec.payload["pre_marker"],
            "reversal must restore the pre-op screen"
        );
        reversals_checked += 1;
    }
    reversals_checked
}

/// Ledger conservation: the outcome's total equals the sum of usages over
/// all llm_call records, exactly.
pub fn check_ledger_conservation(run: &FixtureRun) {
    let logged: u64 = run
        .records
        .iter()
        .filter(|r| r.kind == "llm_call")
        .map(|r| {
            r.payload["prompt_tokens"].as_u64().unwrap_or(0)
                + r.payload["completion_tokens"].as_u64().unwrap_or(0)
        })
        .sum();
    assert_eq!(run.outcome.ledger.total(), logged);
}

/// Byte-compare two session logs after masking volatile timestamp fields.
pub fn mask_timestamps(log: &str) -> String {
    let ts_field = regex::Regex::new(r#""ts":"[^"]*""#).unwrap();
    let started = regex::Regex::new(r#""started":"[^"]*""#).unwrap();
    let finished = regex::Regex::new(r#""finished":"[^"]*""#).unwrap();
    let masked = ts_field.replace_all(log, r#""ts":"-""#);
    let masked = started.replace_all(&masked, r#""started":"-""#);
    finished
        .replace_all(&masked, r#""finished":"-""#)
        .into_owned()
}
