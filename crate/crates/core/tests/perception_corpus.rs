//! Perception over the rendered fixture corpus, scored against the declared
//! ground truth of every screen.

use uipilot_core::fixtures::all_apps;
use uipilot_core::perception::{perceive, FixtureOcr, PerceptionConfig};

#[test]
fn corpus_recall_and_statusbar_exclusion() {
    let ocr = FixtureOcr::default();
    let cfg = PerceptionConfig::default();

    let mut total_interactive = 0u32;
    let mut matched = 0u32;
    let mut screens = 0u32;

    for spec in all_apps() {
        for screen_id in spec.screens.keys() {
            screens += 1;
            let img = uipilot_core::device::sim::render_screen(
                &spec,
                screen_id,
                &std::collections::BTreeMap::new(),
            );
            let result = perceive(&img, &ocr, &cfg).unwrap();

            let band_h = (cfg.statusbar_frac * img.height() as f64) as u32;
            for w in result.widgets.iter() {
                assert!(
                    w.bbox.bottom() > band_h,
                    "{}/{screen_id}: widget {} inside status bar band",
                    spec.app_id,
                    w.id
                );
                assert!(w.bbox.in_bounds(img.width(), img.height()));
            }

            for gt in spec.ground_truth(screen_id) {
                if !gt.interactive {
                    continue;
                }
                total_interactive += 1;
                let hit = result.widgets.iter().any(|w| w.bbox.iou(&gt.bbox) >= 0.5);
                if hit {
                    matched += 1;
                } else {
                    eprintln!(
                        "miss: {}/{screen_id} widget {:?} ({:?})",
                        spec.app_id, gt.id_hint, gt.bbox
                    );
                }
            }
        }
    }

    assert!(
        screens >= 20,
        "corpus must span at least 20 screens, has {screens}"
    );
    let recall = matched as f64 / total_interactive as f64;
    println!("corpus: {screens} screens, {matched}/{total_interactive} interactive widgets (recall {recall:.3})");
    assert!(
        recall >= 0.95,
        "interactive widget recall {recall:.3} below 0.95 ({matched}/{total_interactive})"
    );
}

#[test]
fn perception_is_deterministic_on_corpus_screens() {
    let ocr = FixtureOcr::default();
    let cfg = PerceptionConfig::default();
    let spec = uipilot_core::fixtures::login_app();
    let img = uipilot_core::device::sim::render_screen(
        &spec,
        "login",
        &std::collections::BTreeMap::new(),
    );
    let a = perceive(&img, &ocr, &cfg).unwrap();
    let b = perceive(&img, &ocr, &cfg).unwrap();
    assert_eq!(a.widgets, b.widgets);
    assert_eq!(a.annotated, b.annotated);
}

#[test]
fn login_screen_widget_ids_follow_reading_order() {
    let ocr = FixtureOcr::default();
    let cfg = PerceptionConfig::default();
    let spec = uipilot_core::fixtures::login_app();
    let img = uipilot_core::device::sim::render_screen(
        &spec,
        "login",
        &std::collections::BTreeMap::new(),
    );
    let result = perceive(&img, &ocr, &cfg).unwrap();
    let ids: Vec<u32> = result.widgets.iter().map(|w| w.id).collect();
    assert_eq!(ids, (1..=result.widgets.len() as u32).collect::<Vec<_>>());
    let mut last = (0u32, 0u32);
    for w in result.widgets.iter() {
        assert!(
            (w.bbox.y, w.bbox.x) >= last,
            "ids must follow reading order"
        );
        last = (w.bbox.y, w.bbox.x);
    }
}
