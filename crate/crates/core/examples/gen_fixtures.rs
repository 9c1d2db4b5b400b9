//! Write the fixture corpus to disk so the CLI can drive it:
//!
//!     cargo run -p uipilot-core --example gen_fixtures -- out/fixtures
//!
//! Each fixture becomes `<name>_app.json` (sim app spec) and
//! `<name>_script.json` (scripted provider replies), ready for
//! `uipilot run --provider scripted:... --backend sim:...`.

use std::path::PathBuf;

use uipilot_core::fixtures;
use uipilot_core::gateway::ScriptedProvider;

fn main() {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("fixtures"));
    std::fs::create_dir_all(&dir).expect("create output directory");

    let mut all = fixtures::all_happy();
    all.push(fixtures::wrong_widget_fixture());
    all.push(fixtures::exhaust_fixture(2));
    all.push(fixtures::crash_fixture(2, false));

    for fixture in &all {
        let app = dir.join(format!("{}_app.json", fixture.name));
        let script = dir.join(format!("{}_script.json", fixture.name));
        fixture.app.save(&app).expect("write app spec");
        ScriptedProvider::save(&fixture.script, &script).expect("write script");
        println!(
            "{:<22} scenario={:<12} ops={:<2} -> {} / {}",
            fixture.name,
            fixture.scenario.name,
            fixture.expected_ops.len(),
            app.display(),
            script.display()
        );
    }
    println!("\n{} fixture pairs written to {}", all.len(), dir.display());
}
