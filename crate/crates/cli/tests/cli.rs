//! CLI contract tests: exit codes, output layout, file formats.

use std::path::{Path, PathBuf};
use std::process::Command;

use uipilot_core::fixtures;
use uipilot_core::gateway::ScriptedProvider;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_uipilot"))
}

fn write_fixture(dir: &Path, fixture: &fixtures::Fixture) -> (PathBuf, PathBuf) {
    let app = dir.join(format!("{}_app.json", fixture.name));
    let script = dir.join(format!("{}_script.json", fixture.name));
    fixture.app.save(&app).unwrap();
    ScriptedProvider::save(&fixture.script, &script).unwrap();
    (app, script)
}

fn write_config(dir: &Path) -> PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(
        &path,
        r#"
[engine]
poll_ms = 1
max_wait_ms = 200

[[scenario]]
name = "login"
description = "input the required token to login"

[[scenario]]
name = "note"
description = "create, edit and save the note"
"#,
    )
    .unwrap();
    path
}

#[test]
fn run_login_fixture_exits_zero_with_c1_outcome() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = fixtures::login_fixture();
    let (app, script) = write_fixture(dir.path(), &fixture);
    let config = write_config(dir.path());
    let out = dir.path().join("runs");

    let status = bin()
        .args(["run", "--scenario", "login", "--session-id", "cli-login"])
        .arg("--config")
        .arg(&config)
        .arg("--provider")
        .arg(format!("scripted:{}", script.display()))
        .arg("--backend")
        .arg(format!("sim:{}", app.display()))
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));

    let session = out.join("cli-login");
    assert!(session.join("log.jsonl").exists());
    assert!(session.join("bugs").exists());
    assert!(session.join("screenshots").join("000.png").exists());
    let outcome: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(session.join("outcome")).unwrap()).unwrap();
    assert_eq!(outcome["case"], "c1");
    assert_eq!(outcome["covered"], true);
}

#[test]
fn correction_exhaustion_exits_thirty() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = fixtures::exhaust_fixture(2);
    let (app, script) = write_fixture(dir.path(), &fixture);
    let config = write_config(dir.path());

    let status = bin()
        .args(["run", "--scenario", "login"])
        .arg("--config")
        .arg(&config)
        .arg("--provider")
        .arg(format!("scripted:{}", script.display()))
        .arg("--backend")
        .arg(format!("sim:{}", app.display()))
        .arg("--out")
        .arg(dir.path().join("runs"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(30));
}

#[test]
fn missing_scenario_flag_exits_two() {
    let status = bin().arg("run").status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn unknown_scenario_name_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = fixtures::login_fixture();
    let (app, script) = write_fixture(dir.path(), &fixture);
    let config = write_config(dir.path());
    let status = bin()
        .args(["run", "--scenario", "definitely-not-there"])
        .arg("--config")
        .arg(&config)
        .arg("--provider")
        .arg(format!("scripted:{}", script.display()))
        .arg("--backend")
        .arg(format!("sim:{}", app.display()))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn bad_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.toml");
    std::fs::write(&config, "this is = not [valid").unwrap();
    let status = bin()
        .args(["run", "--scenario", "login"])
        .arg("--config")
        .arg(&config)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn perceive_blank_image_reports_zero_widgets() {
    let dir = tempfile::tempdir().unwrap();
    let img = uipilot_core::RasterImage::new(200, 200, [245, 245, 245]);
    let path = dir.path().join("blank.png");
    img.save_png(&path).unwrap();

    let output = bin().arg("perceive").arg(&path).output().unwrap();
    assert_eq!(output.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.starts_with("0 widgets"), "got {stdout:?}");
    let doc: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("blank.widgets.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(doc["widgets"].as_array().unwrap().len(), 0);
    assert!(dir.path().join("blank.annotated.png").exists());
}

#[test]
fn perceive_login_screen_finds_widgets() {
    let dir = tempfile::tempdir().unwrap();
    let spec = fixtures::login_app();
    let img = uipilot_core::device::sim::render_screen(&spec, "login", &Default::default());
    let path = dir.path().join("login.png");
    img.save_png(&path).unwrap();

    let output = bin().arg("perceive").arg(&path).output().unwrap();
    assert_eq!(output.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("login.widgets.json")).unwrap(),
    )
    .unwrap();
    // The two fields, the two buttons and the title are all in the document.
    assert!(doc["widgets"].as_array().unwrap().len() >= 5);
}

#[test]
fn perceive_corrupt_file_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corrupt.png");
    std::fs::write(&path, b"not a png at all").unwrap();
    let status = bin().arg("perceive").arg(&path).status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn simulate_walks_events_to_the_goal() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = fixtures::login_fixture();
    let (app, _) = write_fixture(dir.path(), &fixture);
    let events = dir.path().join("events.txt");
    std::fs::write(
        &events,
        "tap 300 232\ntext alice\ntap 300 332\ntext pw\ntap 300 456\n",
    )
    .unwrap();
    let output = bin()
        .arg("simulate")
        .arg(&app)
        .arg("--events")
        .arg(&events)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("final screen: home"), "got {stdout}");
}

#[test]
fn simulate_rejects_invalid_spec() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = fixtures::login_app();
    spec.initial_screen = "missing".into();
    let path = dir.path().join("bad_app.json");
    std::fs::write(&path, serde_json::to_string(&spec).unwrap()).unwrap();
    let status = bin().arg("simulate").arg(&path).status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn report_aggregates_sessions_and_rejects_empty_dirs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let out = dir.path().join("runs");

    for (fixture, sid) in [
        (fixtures::login_fixture(), "r1"),
        (fixtures::note_fixture(), "r2"),
    ] {
        let (app, script) = write_fixture(dir.path(), &fixture);
        let status = bin()
            .args([
                "run",
                "--scenario",
                &fixture.scenario.name,
                "--session-id",
                sid,
            ])
            .arg("--config")
            .arg(&config)
            .arg("--provider")
            .arg(format!("scripted:{}", script.display()))
            .arg("--backend")
            .arg(format!("sim:{}", app.display()))
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
    }

    let output = bin().arg("report").arg(&out).output().unwrap();
    assert_eq!(output.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("login"), "got {stdout}");
    assert!(stdout.contains("note"));
    assert!(stdout.contains("100.00"));

    let json_out = bin()
        .arg("report")
        .arg(&out)
        .args(["--format", "json"])
        .output()
        .unwrap();
    assert_eq!(json_out.status.code(), Some(0));
    let parsed: serde_json::Value =
        serde_json::from_slice(&json_out.stdout).expect("report --format json is valid JSON");
    assert_eq!(parsed["rows"].as_array().unwrap().len(), 2);

    let empty = dir.path().join("nothing");
    std::fs::create_dir_all(&empty).unwrap();
    let status = bin().arg("report").arg(&empty).status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn replay_prints_ops_and_ledger() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = fixtures::login_fixture();
    let (app, script) = write_fixture(dir.path(), &fixture);
    let config = write_config(dir.path());
    let out = dir.path().join("runs");
    bin()
        .args(["run", "--scenario", "login", "--session-id", "rp"])
        .arg("--config")
        .arg(&config)
        .arg("--provider")
        .arg(format!("scripted:{}", script.display()))
        .arg("--backend")
        .arg(format!("sim:{}", app.display()))
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();

    let output = bin()
        .arg("replay")
        .arg(out.join("rp/log.jsonl"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("case c1"));
    assert!(stdout.contains("3 ops"));
}

#[test]
fn parallel_runs_keep_sessions_isolated() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = fixtures::login_fixture();
    let (app, script) = write_fixture(dir.path(), &fixture);
    let config = write_config(dir.path());
    let out = dir.path().join("runs");

    // Two scenario entries of the same shape; each session opens its own
    // provider cursor and backend.
    let status = bin()
        .args([
            "run",
            "--scenario",
            "login",
            "--scenario",
            "login",
            "--parallel",
            "2",
        ])
        .arg("--config")
        .arg(&config)
        .arg("--provider")
        .arg(format!("scripted:{}", script.display()))
        .arg("--backend")
        .arg(format!("sim:{}", app.display()))
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let sessions: Vec<_> = std::fs::read_dir(&out).unwrap().collect();
    assert_eq!(sessions.len(), 2);
}
