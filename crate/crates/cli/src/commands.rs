use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use anyhow::Context;

use uipilot_core::device::{AdbBackend, DeviceBackend, SimAppSpec, SimBackend, SubprocessRunner};
use uipilot_core::gateway::{HttpProvider, LlmProvider, ScriptedProvider, TemplateSet};
use uipilot_core::geometry::{Direction, Point};
use uipilot_core::memory::ScenarioSpec;
use uipilot_core::metrics::{self, AccuracyInput};
use uipilot_core::orchestrator::{Case, Engine, RunOutcome, Termination};
use uipilot_core::perception::{ExternalOcr, FixtureOcr, OcrEngine};
use uipilot_core::raster::RasterImage;
use uipilot_core::recorder::{replay_log, Recorder};

use crate::cli_config::CliConfig;

/// Errors caused by bad invocations or bad input files: exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

pub fn exit_code_for(case: Case) -> i32 {
    match case {
        Case::C1 => 0,
        Case::C2 => 10,
        Case::C3 => 20,
        Case::C4 => 30,
    }
}

enum ProviderSel {
    Scripted(PathBuf),
    Http,
}

fn parse_provider(sel: &str) -> anyhow::Result<ProviderSel> {
    if let Some(path) = sel.strip_prefix("scripted:") {
        return Ok(ProviderSel::Scripted(PathBuf::from(path)));
    }
    if sel == "http" {
        return Ok(ProviderSel::Http);
    }
    Err(usage(format!(
        "unknown provider {sel:?}; use scripted:<script.json> or http"
    )))
}

enum BackendSel {
    Sim(PathBuf),
    Adb(Option<String>),
}

fn parse_backend(sel: &str) -> anyhow::Result<BackendSel> {
    if let Some(path) = sel.strip_prefix("sim:") {
        return Ok(BackendSel::Sim(PathBuf::from(path)));
    }
    if sel == "adb" {
        return Ok(BackendSel::Adb(None));
    }
    if let Some(serial) = sel.strip_prefix("adb:") {
        return Ok(BackendSel::Adb(Some(serial.to_string())));
    }
    Err(usage(format!(
        "unknown backend {sel:?}; use sim:<app.json> or adb[:serial]"
    )))
}

fn build_ocr(config: &CliConfig) -> Box<dyn OcrEngine> {
    match &config.ocr {
        Some(ocr) if ocr.engine.as_deref() == Some("external") => Box::new(ExternalOcr {
            program: ocr.program.clone().unwrap_or_default(),
            args: ocr.args.clone().unwrap_or_default(),
        }),
        Some(ocr) => {
            let mut fx = FixtureOcr::default();
            if let Some(scale) = ocr.scale {
                fx.scale = scale;
            }
            Box::new(fx)
        }
        None => Box::new(FixtureOcr::default()),
    }
}

static RUN_COUNTER: AtomicU64 = AtomicU64::new(0);

fn fresh_session_id(scenario: &str) -> String {
    let n = RUN_COUNTER.fetch_add(1, Ordering::Relaxed);
    format!("{scenario}-{}-{n:03}", chrono_millis())
}

fn chrono_millis() -> i64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis() as i64)
        .unwrap_or(0)
}

pub struct RunArgs {
    pub scenarios: Vec<String>,
    pub config: Option<PathBuf>,
    pub provider: Option<String>,
    pub backend: Option<String>,
    pub out: Option<PathBuf>,
    pub parallel: Option<usize>,
    pub session_id: Option<String>,
    pub templates: Option<PathBuf>,
    pub max_steps: Option<u32>,
    pub max_corrections: Option<u32>,
}

struct SessionPlan {
    scenario: ScenarioSpec,
    session_id: String,
    dir: PathBuf,
}

pub fn run_cmd(args: RunArgs) -> anyhow::Result<i32> {
    let config = CliConfig::load(args.config.as_deref()).map_err(|e| usage(e.to_string()))?;

    let provider_sel = args
        .provider
        .or_else(|| config.run.provider.clone())
        .ok_or_else(|| usage("no provider selected (flag --provider or [run].provider)"))?;
    let backend_sel = args
        .backend
        .or_else(|| config.run.backend.clone())
        .ok_or_else(|| usage("no backend selected (flag --backend or [run].backend)"))?;
    let provider_sel = parse_provider(&provider_sel)?;
    let backend_sel = parse_backend(&backend_sel)?;
    let out_root = args
        .out
        .or_else(|| config.run.out.clone())
        .unwrap_or_else(|| PathBuf::from("runs"));
    let parallel = args.parallel.or(config.run.parallel).unwrap_or(1).max(1);
    let templates_dir = args.templates.or_else(|| config.run.templates.clone());

    let mut engine_cfg = config.engine_config();
    if let Some(v) = args.max_steps {
        engine_cfg.max_steps = v;
    }
    if let Some(v) = args.max_corrections {
        engine_cfg.max_corrections = v;
    }

    if args.session_id.is_some() && args.scenarios.len() > 1 {
        return Err(usage(
            "--session-id pins a single session; drop it for multi-scenario runs",
        ));
    }
    if matches!(backend_sel, BackendSel::Adb(_)) && (parallel > 1 || args.scenarios.len() > 1) {
        return Err(usage(
            "the adb backend drives one device; run one scenario at a time",
        ));
    }

    let mut plans = Vec::new();
    for name in &args.scenarios {
        let scenario = config
            .find_scenario(name)
            .or_else(|| builtin_scenario(name))
            .ok_or_else(|| usage(format!("scenario {name:?} not found in the config catalog")))?;
        let session_id = args
            .session_id
            .clone()
            .unwrap_or_else(|| fresh_session_id(name));
        let dir = out_root.join(&session_id);
        plans.push(SessionPlan {
            scenario,
            session_id,
            dir,
        });
    }

    let templates = match &templates_dir {
        Some(dir) => TemplateSet::load_dir(dir).map_err(|e| usage(e.to_string()))?,
        None => TemplateSet::default(),
    };

    let run_one = |plan: &SessionPlan| -> anyhow::Result<RunOutcome> {
        let provider: Box<dyn LlmProvider> = match &provider_sel {
            ProviderSel::Scripted(path) => {
                Box::new(ScriptedProvider::load(path).map_err(|e| usage(e.to_string()))?)
            }
            ProviderSel::Http => {
                let mut http = config.http_config();
                http.timeout_ms = engine_cfg.llm_timeout_ms;
                if http.endpoint.is_empty() || http.model.is_empty() {
                    return Err(usage(
                        "http provider needs [http].endpoint and [http].model",
                    ));
                }
                Box::new(HttpProvider::new(http))
            }
        };
        let mut backend: Box<dyn DeviceBackend> = match &backend_sel {
            BackendSel::Sim(path) => {
                let spec = SimAppSpec::load(path).map_err(|e| usage(e.to_string()))?;
                Box::new(SimBackend::new(spec).map_err(|e| usage(e.to_string()))?)
            }
            BackendSel::Adb(serial) => {
                let app_id = config
                    .run
                    .app_id
                    .clone()
                    .unwrap_or_else(|| "unknown.app".to_string());
                Box::new(AdbBackend::new(SubprocessRunner, serial.clone(), app_id))
            }
        };
        let ocr = build_ocr(&config);
        let mut cfg = engine_cfg.clone();
        cfg.session_id = Some(plan.session_id.clone());

        std::fs::create_dir_all(&plan.dir)
            .with_context(|| format!("create {}", plan.dir.display()))?;
        let recorder = Recorder::create_at(&plan.dir.join("log.jsonl"))?;
        let screenshots = plan.dir.join("screenshots");

        let engine = Engine::new(cfg, provider.as_ref(), ocr.as_ref(), templates.clone());
        let outcome = engine.run_scenario(
            &plan.scenario,
            backend.as_mut(),
            recorder,
            Some(&screenshots),
        )?;

        std::fs::write(
            plan.dir.join("outcome"),
            serde_json::to_string_pretty(&outcome.document())?,
        )?;
        std::fs::write(
            plan.dir.join("bugs"),
            serde_json::to_string_pretty(&outcome.bugs)?,
        )?;
        Ok(outcome)
    };

    let outcomes: Vec<anyhow::Result<RunOutcome>> = if parallel > 1 {
        std::thread::scope(|scope| {
            let handles: Vec<_> = plans.iter().map(|p| scope.spawn(|| run_one(p))).collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("worker panicked"))
                .collect()
        })
    } else {
        plans.iter().map(run_one).collect()
    };

    let mut exit = 0;
    for (plan, result) in plans.iter().zip(outcomes) {
        match result {
            Ok(outcome) => {
                println!(
                    "session {}: case {} ({}) steps {} ops {} tokens {} -> {}",
                    plan.session_id,
                    outcome.case.as_str(),
                    outcome.termination.as_str(),
                    outcome.steps,
                    outcome.ops.len(),
                    outcome.ledger.total(),
                    plan.dir.display()
                );
                for bug in &outcome.bugs {
                    println!("  bug at op {}: {}", bug.op_index, bug.first_log_line);
                }
                exit = exit.max(exit_code_for(outcome.case));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(exit)
}

/// Scenario descriptions for ad-hoc desk runs without a config catalog.
fn builtin_scenario(name: &str) -> Option<ScenarioSpec> {
    uipilot_core::fixtures::all_happy()
        .into_iter()
        .find(|f| f.scenario.name == name)
        .map(|f| f.scenario)
}

pub fn perceive_cmd(
    image: PathBuf,
    config: Option<PathBuf>,
    out: Option<PathBuf>,
) -> anyhow::Result<i32> {
    let config = CliConfig::load(config.as_deref()).map_err(|e| usage(e.to_string()))?;
    let img = RasterImage::load_png(&image)
        .map_err(|e| usage(format!("cannot read {}: {e}", image.display())))?;
    let ocr = build_ocr(&config);
    let cfg = config.perception.clone().unwrap_or_default();
    let result = uipilot_core::perception::perceive(&img, ocr.as_ref(), &cfg)?;

    let stem = image
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "screenshot".into());
    let dir = out
        .or_else(|| image.parent().map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)?;
    let doc_path = dir.join(format!("{stem}.widgets.json"));
    let png_path = dir.join(format!("{stem}.annotated.png"));
    std::fs::write(&doc_path, serde_json::to_string_pretty(&result.document())?)?;
    result.annotated.save_png(&png_path)?;
    println!(
        "{} widgets -> {} and {}",
        result.widgets.len(),
        doc_path.display(),
        png_path.display()
    );
    Ok(0)
}

pub fn simulate_cmd(
    spec_path: PathBuf,
    events: Option<PathBuf>,
    out: Option<PathBuf>,
) -> anyhow::Result<i32> {
    let spec = SimAppSpec::load(&spec_path).map_err(|e| usage(e.to_string()))?;
    let mut backend = SimBackend::new(spec).map_err(|e| usage(e.to_string()))?;
    println!(
        "app {} starts on {:?}",
        backend.info().app_id,
        backend.current_screen()
    );

    let mut shot_index = 0u32;
    let mut save_shot = |backend: &mut SimBackend, out: &Option<PathBuf>| -> anyhow::Result<()> {
        if let Some(dir) = out {
            std::fs::create_dir_all(dir)?;
            let img = backend.screenshot()?;
            img.save_png(&dir.join(format!("{shot_index:03}.png")))?;
            shot_index += 1;
        }
        Ok(())
    };
    save_shot(&mut backend, &out)?;

    if let Some(events_path) = events {
        let raw = std::fs::read_to_string(&events_path)
            .map_err(|e| usage(format!("cannot read {}: {e}", events_path.display())))?;
        for (lineno, line) in raw.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            apply_event(&mut backend, line)
                .ok_or_else(|| usage(format!("bad event at line {}: {line:?}", lineno + 1)))?;
            println!("{line} -> {}", backend.current_screen());
            save_shot(&mut backend, &out)?;
        }
    }
    println!("final screen: {}", backend.current_screen());
    Ok(0)
}

fn apply_event(backend: &mut SimBackend, line: &str) -> Option<()> {
    let mut parts = line.split_whitespace();
    match parts.next()? {
        "tap" => {
            let x: u32 = parts.next()?.parse().ok()?;
            let y: u32 = parts.next()?.parse().ok()?;
            backend.tap(Point::new(x, y)).ok()
        }
        "text" => {
            let rest = line.strip_prefix("text")?.trim();
            backend.input_text(rest).ok()
        }
        "scroll" => {
            let dir = Direction::parse(parts.next()?)?;
            backend.scroll(dir, None).ok()
        }
        "back" => backend.back().ok(),
        _ => None,
    }
}

pub fn report_cmd(sessions: Vec<PathBuf>, format: &str) -> anyhow::Result<i32> {
    let mut session_dirs = Vec::new();
    for path in &sessions {
        if path.join("log.jsonl").exists() {
            session_dirs.push(path.clone());
            continue;
        }
        if path.is_dir() {
            let mut found = false;
            for entry in std::fs::read_dir(path)? {
                let entry = entry?.path();
                if entry.join("log.jsonl").exists() {
                    session_dirs.push(entry);
                    found = true;
                }
            }
            if found {
                continue;
            }
        }
        return Err(usage(format!(
            "{} holds no sessions (log.jsonl)",
            path.display()
        )));
    }
    if session_dirs.is_empty() {
        return Err(usage("no sessions found"));
    }
    session_dirs.sort();

    let mut outcomes = Vec::new();
    for dir in &session_dirs {
        outcomes.push(load_session(dir)?);
    }
    let report = metrics::report(&outcomes);
    match format {
        "json" => println!("{}", serde_json::to_string_pretty(&report.to_json())?),
        "text" => print!("{}", report.to_text()),
        other => return Err(usage(format!("unknown format {other:?}; use text or json"))),
    }
    Ok(0)
}

fn load_session(dir: &Path) -> anyhow::Result<RunOutcome> {
    let summary =
        replay_log(&dir.join("log.jsonl")).map_err(|e| usage(format!("{}: {e}", dir.display())))?;

    // The outcome document carries what the log alone does not (stats,
    // scenario); fall back to log fields when it is absent.
    let outcome_doc: Option<serde_json::Value> = std::fs::read_to_string(dir.join("outcome"))
        .ok()
        .and_then(|raw| serde_json::from_str(&raw).ok());

    let scenario = outcome_doc
        .as_ref()
        .and_then(|d| d["scenario"].as_str().map(str::to_string))
        .or_else(|| {
            summary
                .records
                .iter()
                .find(|r| r.kind == "session_start")
                .and_then(|r| r.payload["scenario"].as_str().map(str::to_string))
        })
        .unwrap_or_else(|| "unknown".into());
    let case = match summary.case.as_deref() {
        Some("c1") => Case::C1,
        Some("c2") => Case::C2,
        Some("c3") => Case::C3,
        _ => Case::C4,
    };
    let termination = match summary.termination.as_deref() {
        Some("normal") => Termination::Normal,
        Some("budget") => Termination::Budget,
        _ => Termination::Aborted,
    };
    let stats = |key: &str| -> AccuracyInput {
        outcome_doc
            .as_ref()
            .and_then(|d| serde_json::from_value(d[key].clone()).ok())
            .unwrap_or_default()
    };

    Ok(RunOutcome {
        scenario,
        session_id: summary.session_id.unwrap_or_else(|| "unknown".into()),
        case,
        termination,
        covered: matches!(case, Case::C1 | Case::C2),
        steps: 0,
        ops: summary.op_log,
        ledger: summary.ledger,
        bugs: Vec::new(),
        decision_stats: stats("decision_stats"),
        localization_stats: stats("localization_stats"),
        log_path: Some(dir.join("log.jsonl")),
    })
}

pub fn replay_cmd(log: PathBuf) -> anyhow::Result<i32> {
    let summary = replay_log(&log).map_err(|e| usage(e.to_string()))?;
    println!(
        "session {}: {} records, {} ops, case {}, termination {}",
        summary.session_id.as_deref().unwrap_or("?"),
        summary.records.len(),
        summary.op_log.len(),
        summary.case.as_deref().unwrap_or("?"),
        summary.termination.as_deref().unwrap_or("?"),
    );
    for (i, op) in summary.op_log.iter().enumerate() {
        let mut flags = Vec::new();
        if op.reversed {
            flags.push("reversed");
        }
        if !op.transition_ok {
            flags.push("failed");
        }
        let flags = if flags.is_empty() {
            String::new()
        } else {
            format!(" [{}]", flags.join(", "))
        };
        println!("  {i:>3}. {}{flags}", op.op.describe());
    }
    println!("tokens: {}", summary.ledger.document());
    Ok(0)
}
