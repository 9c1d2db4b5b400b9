//! The Observer: turns a raw screenshot into a filtered, fused, ID-annotated
//! widget set plus a visualization image.
//!
//! Pipeline: edge-based graphical extraction and OCR run independently, text
//! fragments merge into sentences, graphical candidates are filtered against
//! the text and size rules, the two sets fuse into widgets, and the result is
//! annotated for the multimodal prompts.

pub mod edges;
pub mod ocr;

pub use edges::extract_graphical_widgets;
pub use ocr::{ExternalOcr, FixtureOcr, OcrEngine, OcrError, TextFragment, TEXT_INK};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::BoundingBox;
use crate::raster::{RasterImage, Rgb};

#[derive(Debug, Error)]
pub enum PerceptionError {
    #[error(transparent)]
    Ocr(#[from] OcrError),
}

/// Thresholds for the filtering and fusion stages. All values are exposed in
/// the engine configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PerceptionConfig {
    /// Max horizontal gap between text fragments, in median fragment heights.
    pub text_gap_factor: f64,
    /// Max vertical center offset between fragments, in median heights.
    pub text_align_factor: f64,
    /// Graphical boxes overlapping a text widget above this IoU are dropped
    /// as text duplicates.
    pub text_iou: f64,
    /// Top band of the screen treated as the status bar, as a height
    /// fraction.
    pub statusbar_frac: f64,
    /// Graphical boxes larger than this fraction of the image are dropped.
    pub max_area_frac: f64,
    /// Graphical boxes smaller than this many pixels are dropped as noise.
    pub min_area_px: u64,
    /// Max icon/label center distance for fusion, in units of the larger box
    /// height.
    pub fuse_dist_factor: f64,
}

impl Default for PerceptionConfig {
    fn default() -> Self {
        PerceptionConfig {
            text_gap_factor: 0.5,
            text_align_factor: 0.5,
            text_iou: 0.5,
            statusbar_frac: 0.05,
            max_area_frac: 0.5,
            min_area_px: 100,
            fuse_dist_factor: 1.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WidgetKind {
    Graphical,
    Textual,
    Fused,
    Virtual,
}

impl WidgetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            WidgetKind::Graphical => "graphical",
            WidgetKind::Textual => "textual",
            WidgetKind::Fused => "fused",
            WidgetKind::Virtual => "virtual",
        }
    }
}

/// A recognized GUI element. Ids are dense 1..=n in reading order within one
/// widget set; id 0 marks a widget not yet placed in a set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Widget {
    pub id: u32,
    pub bbox: BoundingBox,
    pub kind: WidgetKind,
    pub text: Option<String>,
    pub confidence: f32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WidgetSet {
    widgets: Vec<Widget>,
}

impl WidgetSet {
    /// Assign dense reading-order ids: top-to-bottom by box origin, ties
    /// broken by x, then input order.
    pub fn from_widgets(mut widgets: Vec<Widget>) -> Self {
        let mut order: Vec<usize> = (0..widgets.len()).collect();
        order.sort_by_key(|&i| (widgets[i].bbox.y, widgets[i].bbox.x, i));
        let mut sorted = Vec::with_capacity(widgets.len());
        for (rank, &i) in order.iter().enumerate() {
            let mut w = widgets[i].clone();
            w.id = rank as u32 + 1;
            sorted.push(w);
        }
        widgets.clear();
        WidgetSet { widgets: sorted }
    }

    pub fn get(&self, id: u32) -> Option<&Widget> {
        if id == 0 {
            return None;
        }
        self.widgets.get(id as usize - 1)
    }

    pub fn len(&self) -> usize {
        self.widgets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.widgets.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Widget> {
        self.widgets.iter()
    }

    /// One line per widget for the localization prompt.
    pub fn listing(&self) -> String {
        if self.widgets.is_empty() {
            return "(no widgets recognized)".to_string();
        }
        self.widgets
            .iter()
            .map(|w| {
                let text = w.text.as_deref().unwrap_or("-");
                format!(
                    "{}: {} at ({}, {}, {}, {}) text: {}",
                    w.id,
                    w.kind.as_str(),
                    w.bbox.x,
                    w.bbox.y,
                    w.bbox.w,
                    w.bbox.h,
                    text
                )
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Perception output for one app page.
#[derive(Debug, Clone, PartialEq)]
pub struct PerceptionResult {
    pub widgets: WidgetSet,
    pub annotated: RasterImage,
    pub source: RasterImage,
}

/// Serializable form of a perception result, the `perceive` CLI output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerceptionDocument {
    pub image_size: [u32; 2],
    pub widgets: Vec<WidgetDocEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WidgetDocEntry {
    pub id: u32,
    #[serde(rename = "box")]
    pub bbox: [u32; 4],
    pub kind: WidgetKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    pub confidence: f32,
}

impl PerceptionResult {
    pub fn document(&self) -> PerceptionDocument {
        PerceptionDocument {
            image_size: [self.source.width(), self.source.height()],
            widgets: self
                .widgets
                .iter()
                .map(|w| WidgetDocEntry {
                    id: w.id,
                    bbox: [w.bbox.x, w.bbox.y, w.bbox.w, w.bbox.h],
                    kind: w.kind,
                    text: w.text.clone(),
                    confidence: w.confidence,
                })
                .collect(),
        }
    }
}

/// OCR with fragment validation: empty texts are discarded, out-of-bounds
/// boxes never leave this function.
pub fn extract_text_fragments(
    img: &RasterImage,
    ocr: &dyn OcrEngine,
) -> Result<Vec<TextFragment>, PerceptionError> {
    let frags = ocr.recognize(img)?;
    Ok(frags
        .into_iter()
        .filter(|f| !f.text.trim().is_empty() && f.bbox.in_bounds(img.width(), img.height()))
        .collect())
}

fn horizontal_gap(a: &BoundingBox, b: &BoundingBox) -> u32 {
    if a.right() <= b.x {
        b.x - a.right()
    } else if b.right() <= a.x {
        a.x - b.right()
    } else {
        0
    }
}

fn median_height(frags: &[TextFragment]) -> f64 {
    let mut hs: Vec<u32> = frags.iter().map(|f| f.bbox.h).collect();
    hs.sort_unstable();
    if hs.is_empty() {
        return 0.0;
    }
    let n = hs.len();
    if n % 2 == 1 {
        hs[n / 2] as f64
    } else {
        (hs[n / 2 - 1] as f64 + hs[n / 2] as f64) / 2.0
    }
}

fn vertical_center_offset(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let ca = a.y as f64 + a.h as f64 / 2.0;
    let cb = b.y as f64 + b.h as f64 / 2.0;
    (ca - cb).abs()
}

/// Merge word fragments into sentences: the fixed point of merging any pair
/// whose horizontal gap and vertical center offset are within the configured
/// factors of the median input fragment height. Thresholds are computed once
/// from the input so the closure is order-independent.
pub fn merge_text_fragments(frags: Vec<TextFragment>, cfg: &PerceptionConfig) -> Vec<Widget> {
    let median = median_height(&frags);
    let max_gap = cfg.text_gap_factor * median;
    let max_offset = cfg.text_align_factor * median;

    let mut items: Vec<TextFragment> = frags;
    items.sort_by_key(|f| (f.bbox.y, f.bbox.x));

    loop {
        let mut merged_any = false;
        'scan: for i in 0..items.len() {
            for j in i + 1..items.len() {
                let (a, b) = (&items[i], &items[j]);
                if horizontal_gap(&a.bbox, &b.bbox) as f64 <= max_gap
                    && vertical_center_offset(&a.bbox, &b.bbox) <= max_offset
                {
                    let (left, right) = if a.bbox.x <= b.bbox.x { (a, b) } else { (b, a) };
                    let merged = TextFragment {
                        text: format!("{} {}", left.text, right.text),
                        bbox: a.bbox.union(&b.bbox),
                        confidence: a.confidence.min(b.confidence),
                    };
                    items[i] = merged;
                    items.remove(j);
                    merged_any = true;
                    break 'scan;
                }
            }
        }
        if !merged_any {
            break;
        }
    }

    items
        .into_iter()
        .map(|f| Widget {
            id: 0,
            bbox: f.bbox,
            kind: WidgetKind::Textual,
            text: Some(f.text),
            confidence: f.confidence,
        })
        .collect()
}

/// Drop graphical candidates that duplicate text, sit inside the status bar
/// band, or fall outside the plausible size range.
pub fn filter_graphical(
    candidates: Vec<BoundingBox>,
    text_widgets: &[Widget],
    img_w: u32,
    img_h: u32,
    cfg: &PerceptionConfig,
) -> Vec<BoundingBox> {
    let band_h = (cfg.statusbar_frac * img_h as f64) as u32;
    let max_area = (cfg.max_area_frac * (img_w as f64 * img_h as f64)) as u64;
    candidates
        .into_iter()
        .filter(|b| {
            if text_widgets.iter().any(|t| b.iou(&t.bbox) > cfg.text_iou) {
                return false;
            }
            if b.bottom() <= band_h {
                return false;
            }
            let area = b.area();
            area <= max_area && area >= cfg.min_area_px
        })
        .collect()
}

fn fusion_adjacent(g: &BoundingBox, t: &BoundingBox) -> bool {
    let tc = t.center();
    // Label inside the box (buttons), directly below it (captioned icons), or
    // beside it with vertical overlap.
    if g.contains(tc) {
        return true;
    }
    if t.y >= g.bottom() && tc.x >= g.x && tc.x < g.right() {
        return true;
    }
    (t.x >= g.right() || t.right() <= g.x) && g.v_overlaps(t)
}

/// Fuse related graphical and textual widgets into single entities and assign
/// dense reading-order ids to the final set.
pub fn fuse_widgets(
    graphical: Vec<BoundingBox>,
    textual: Vec<Widget>,
    cfg: &PerceptionConfig,
) -> WidgetSet {
    let mut pairs: Vec<(usize, usize, f64)> = Vec::new();
    for (gi, g) in graphical.iter().enumerate() {
        for (ti, t) in textual.iter().enumerate() {
            let limit = cfg.fuse_dist_factor * g.h.max(t.bbox.h) as f64;
            if fusion_adjacent(g, &t.bbox) && g.center_distance(&t.bbox) <= limit {
                pairs.push((gi, ti, g.center_distance(&t.bbox)));
            }
        }
    }
    pairs.sort_by(|a, b| {
        a.2.partial_cmp(&b.2)
            .unwrap()
            .then(a.0.cmp(&b.0))
            .then(a.1.cmp(&b.1))
    });

    let mut g_used = vec![false; graphical.len()];
    let mut t_used = vec![false; textual.len()];
    let mut out: Vec<Widget> = Vec::new();
    for (gi, ti, _) in pairs {
        if g_used[gi] || t_used[ti] {
            continue;
        }
        g_used[gi] = true;
        t_used[ti] = true;
        out.push(Widget {
            id: 0,
            bbox: graphical[gi].union(&textual[ti].bbox),
            kind: WidgetKind::Fused,
            text: textual[ti].text.clone(),
            confidence: textual[ti].confidence,
        });
    }
    for (gi, g) in graphical.iter().enumerate() {
        if !g_used[gi] {
            out.push(Widget {
                id: 0,
                bbox: *g,
                kind: WidgetKind::Graphical,
                text: None,
                confidence: 1.0,
            });
        }
    }
    for (ti, t) in textual.into_iter().enumerate() {
        if !t_used[ti] {
            out.push(t);
        }
    }
    WidgetSet::from_widgets(out)
}

pub const ANNOTATE_COLOR: Rgb = [220, 30, 30];
const ID_SCALE: u32 = 2;

/// Where a widget's id label is drawn: above the top-left corner when it
/// fits, inside the box otherwise.
pub fn id_label_rect(bbox: &BoundingBox, id: u32, img_w: u32, img_h: u32) -> BoundingBox {
    let text = id.to_string();
    let w = crate::font::text_width(&text, ID_SCALE).max(1);
    let h = crate::font::text_height(ID_SCALE);
    let mut x = bbox.x;
    let mut y = if bbox.y >= h + 2 {
        bbox.y - h - 2
    } else {
        bbox.y + 3
    };
    if x + w > img_w {
        x = img_w.saturating_sub(w);
    }
    if y + h > img_h {
        y = img_h.saturating_sub(h);
    }
    BoundingBox::new(x, y, w, h)
}

/// Visualize a widget set: outlined boxes plus id labels, dimensions
/// preserved. An empty set returns a pixel-identical copy.
pub fn annotate(img: &RasterImage, widgets: &WidgetSet) -> RasterImage {
    let mut out = img.clone();
    for w in widgets.iter() {
        out.outline_rect(w.bbox, 2, ANNOTATE_COLOR);
        let label = id_label_rect(&w.bbox, w.id, img.width(), img.height());
        out.draw_text(
            label.x,
            label.y,
            &w.id.to_string(),
            ID_SCALE,
            ANNOTATE_COLOR,
        );
    }
    out
}

/// Full Observer pipeline over one screenshot.
pub fn perceive(
    img: &RasterImage,
    ocr: &dyn OcrEngine,
    cfg: &PerceptionConfig,
) -> Result<PerceptionResult, PerceptionError> {
    let graphical = extract_graphical_widgets(img);
    let frags = extract_text_fragments(img, ocr)?;
    let textual = merge_text_fragments(frags, cfg);
    let kept = filter_graphical(graphical, &textual, img.width(), img.height(), cfg);
    let widgets = fuse_widgets(kept, textual, cfg);
    let annotated = annotate(img, &widgets);
    Ok(PerceptionResult {
        widgets,
        annotated,
        source: img.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::WHITE;

    fn frag(text: &str, x: u32, y: u32, w: u32, h: u32) -> TextFragment {
        TextFragment {
            text: text.into(),
            bbox: BoundingBox::new(x, y, w, h),
            confidence: 1.0,
        }
    }

    #[test]
    fn merge_empty_is_empty() {
        let cfg = PerceptionConfig::default();
        assert!(merge_text_fragments(Vec::new(), &cfg).is_empty());
    }

    #[test]
    fn merge_joins_close_fragments_left_to_right() {
        let cfg = PerceptionConfig::default();
        let out = merge_text_fragments(
            vec![frag("Hello", 10, 10, 50, 20), frag("World", 64, 10, 50, 20)],
            &cfg,
        );
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].text.as_deref(), Some("Hello World"));
        assert_eq!(out[0].bbox, BoundingBox::new(10, 10, 104, 20));
        assert_eq!(out[0].kind, WidgetKind::Textual);
    }

    #[test]
    fn merge_keeps_distant_fragments_apart() {
        let cfg = PerceptionConfig::default();
        let out = merge_text_fragments(
            vec![
                frag("Hello", 10, 10, 50, 20),
                frag("World", 360, 10, 50, 20),
            ],
            &cfg,
        );
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn filter_drops_full_screen_box() {
        let cfg = PerceptionConfig::default();
        let out = filter_graphical(
            vec![BoundingBox::new(0, 0, 720, 1280)],
            &[],
            720,
            1280,
            &cfg,
        );
        assert!(out.is_empty());
    }

    #[test]
    fn filter_drops_speck() {
        let cfg = PerceptionConfig::default();
        let out = filter_graphical(vec![BoundingBox::new(50, 50, 4, 4)], &[], 720, 1280, &cfg);
        assert!(out.is_empty());
    }

    #[test]
    fn filter_statusbar_band_rule() {
        let cfg = PerceptionConfig::default();
        // band = 5% of 1000 = 100 px; a box of height 30 at y=0 is inside.
        let inside = BoundingBox::new(10, 0, 200, 30);
        let below = BoundingBox::new(10, 200, 200, 30);
        let out = filter_graphical(vec![inside, below], &[], 720, 1000, &cfg);
        assert_eq!(out, vec![below]);
    }

    #[test]
    fn filter_drops_text_duplicates() {
        let cfg = PerceptionConfig::default();
        let text = Widget {
            id: 0,
            bbox: BoundingBox::new(100, 100, 80, 20),
            kind: WidgetKind::Textual,
            text: Some("Hello".into()),
            confidence: 1.0,
        };
        //

        let dup = BoundingBox::new(98, 99, 82, 22);
        let other = BoundingBox::new(300, 300, 60, 40);
        let out = filter_graphical(vec![dup, other], &[text], 720, 1280, &cfg);
        assert_eq!(out, vec![other]);
    }

    #[test]
    fn fuse_icon_with_label_below() {
        let cfg = PerceptionConfig::default();
        let icon = BoundingBox::new(100, 100, 48, 48);
        let label = Widget {
            id: 0,
            bbox: BoundingBox::new(110, 168, 28, 14),
            kind: WidgetKind::Textual,
            text: Some("Save".into()),
            confidence: 1.0,
        };
        let set = fuse_widgets(vec![icon], vec![label], &cfg);
        assert_eq!(set.len(), 1);
        let w = set.get(1).unwrap();
        assert_eq!(w.kind, WidgetKind::Fused);
        assert_eq!(w.text.as_deref(), Some("Save"));
        assert_eq!(w.bbox, icon.union(&BoundingBox::new(110, 168, 28, 14)));
    }

    #[test]
    fn fuse_keeps_distant_label_separate() {
        let cfg = PerceptionConfig::default();
        let icon = BoundingBox::new(100, 100, 48, 48);
        let label = Widget {
            id: 0,
            bbox: BoundingBox::new(500, 100, 28, 14),
            kind: WidgetKind::Textual,
            text: Some("Far".into()),
            confidence: 1.0,
        };
        let set = fuse_widgets(vec![icon], vec![label], &cfg);
        assert_eq!(set.len(), 2);
    }

    #[test]
    fn fuse_without_graphical_passes_text_through_with_ids() {
        let cfg = PerceptionConfig::default();
        let labels = vec![
            Widget {
                id: 0,
                bbox: BoundingBox::new(10, 50, 30, 10),
                kind: WidgetKind::Textual,
                text: Some("b".into()),
                confidence: 1.0,
            },
            Widget {
                id: 0,
                bbox: BoundingBox::new(10, 10, 30, 10),
                kind: WidgetKind::Textual,
                text: Some("a".into()),
                confidence: 1.0,
            },
        ];
        let set = fuse_widgets(Vec::new(), labels, &cfg);
        assert_eq!(set.len(), 2);
        // Reading order: the y=10 label gets id 1.
        assert_eq!(set.get(1).unwrap().text.as_deref(), Some("a"));
        assert_eq!(set.get(2).unwrap().text.as_deref(), Some("b"));
    }

    #[test]
    fn annotate_empty_set_is_identity() {
        let img = RasterImage::new(64, 64, WHITE);
        let out = annotate(&img, &WidgetSet::default());
        assert_eq!(img, out);
    }

    #[test]
    fn annotate_diff_is_confined_to_border_and_label() {
        let img = RasterImage::new(200, 200, WHITE);
        let bbox = BoundingBox::new(40, 60, 80, 40);
        let set = WidgetSet::from_widgets(vec![Widget {
            id: 0,
            bbox,
            kind: WidgetKind::Graphical,
            text: None,
            confidence: 1.0,
        }]);
        let out = annotate(&img, &set);
        let label = id_label_rect(&bbox, 1, 200, 200);
        let mut diff = 0u32;
        for y in 0..200 {
            for x in 0..200 {
                if img.get(x, y) != out.get(x, y) {
                    diff += 1;
                    let p = crate::geometry::Point::new(x, y);
                    let on_border = bbox.contains(p)
                        && !(x >= bbox.x + 2
                            && x < bbox.right() - 2
                            && y >= bbox.y + 2
                            && y < bbox.bottom() - 2);
                    assert!(
                        on_border || label.contains(p),
                        "unexpected diff at ({x},{y})"
                    );
                }
            }
        }
        assert!(diff > 0, "annotation must change pixels");
    }

    #[test]
    fn annotate_two_widgets_have_distinct_label_regions() {
        let img = RasterImage::new(300, 300, WHITE);
        let a = BoundingBox::new(30, 40, 60, 30);
        let b = BoundingBox::new(150, 200, 60, 30);
        let set = WidgetSet::from_widgets(vec![
            Widget {
                id: 0,
                bbox: a,
                kind: WidgetKind::Graphical,
                text: None,
                confidence: 1.0,
            },
            Widget {
                id: 0,
                bbox: b,
                kind: WidgetKind::Graphical,
                text: None,
                confidence: 1.0,
            },
        ]);
        let out = annotate(&img, &set);
        let la = id_label_rect(&a, 1, 300, 300);
        let lb = id_label_rect(&b, 2, 300, 300);
        assert!(la.intersect(&lb).is_none());
        let ink = |r: BoundingBox| {
            let mut n = 0;
            for y in r.y..r.bottom() {
                for x in r.x..r.right() {
                    if out.get(x, y) == ANNOTATE_COLOR {
                        n += 1;
                    }
                }
            }
            n
        };
        assert!(ink(la) > 0 && ink(lb) > 0);
    }
}
