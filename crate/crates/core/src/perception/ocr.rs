//! Text recognition contracts.
//!
//! Two engines implement [`OcrEngine`]: the fixture engine, which decodes the
//! sim renderer's embedded 5x7 font bit-exactly, and an external-process
//! adapter that shells out to a user-configured OCR command.

use std::process::Command;

use thiserror::Error;

use crate::font;
use crate::geometry::BoundingBox;
use crate::raster::{RasterImage, Rgb};

#[derive(Debug, Error)]
pub enum OcrError {
    #[error("ocr command failed: {0}")]
    External(String),
    #[error("ocr io error: {0}")]
    Io(#[from] std::io::Error),
}

/// One recognized word-granularity fragment.
#[derive(Debug, Clone, PartialEq)]
pub struct TextFragment {
    pub text: String,
    pub bbox: BoundingBox,
    pub confidence: f32,
}

pub trait OcrEngine {
    fn recognize(&self, img: &RasterImage) -> Result<Vec<TextFragment>, OcrError>;
}

/// Ink color the sim renderer uses for all label text. Nothing else in the
/// renderer may use this exact color; that is the fixture contract.
pub const TEXT_INK: Rgb = [20, 20, 20];

/// Exact decoder for the embedded 5x7 font.
///
/// Ink pixels are grouped into line bands, bands into word runs, and each run
/// is decoded by sampling the glyph grid under a small phase search. A decode
/// is only accepted when re-rendering the decoded string reproduces the
/// observed ink pixels exactly, so the engine never emits a wrong reading.
#[derive(Debug, Clone)]
pub struct FixtureOcr {
    pub scale: u32,
    pub ink: Rgb,
}

impl Default for FixtureOcr {
    fn default() -> Self {
        FixtureOcr {
            scale: 2,
            ink: TEXT_INK,
        }
    }
}

impl FixtureOcr {
    pub fn new(scale: u32) -> Self {
        FixtureOcr {
            scale,
            ink: TEXT_INK,
        }
    }

    fn decode_run(&self, img: &RasterImage, run: &InkRun) -> Option<TextFragment> {
        let s = self.scale;
        let adv = font::ADVANCE * s;
        // Phase search: glyphs may leave their cell's top rows or left
        // columns blank, so the run's ink minimum is not always the cell
        // origin.
        for dy in 0..=(font::GLYPH_H - 1) {
            let off_y = dy * s;
            if off_y > run.min_y {
                break;
            }
            let oy = run.min_y - off_y;
            for dx in 0..=(font::GLYPH_W - 1) {
                let off_x = dx * s;
                if off_x > run.min_x {
                    break;
                }
                let ox = run.min_x - off_x;
                if let Some(frag) = self.try_phase(img, run, ox, oy, adv) {
                    return Some(frag);
                }
            }
        }
        None
    }

    fn try_phase(
        &self,
        img: &RasterImage,
        run: &InkRun,
        ox: u32,
        oy: u32,
        adv: u32,
    ) -> Option<TextFragment> {
        let s = self.scale;
        if oy + font::GLYPH_H * s > img.height() {
            return None;
        }
        let cells = (run.max_x - ox) / adv + 1;
        let mut text = String::new();
        for k in 0..cells {
            let cell_x = ox + k * adv;
            let mut rows = [0u8; 7];
            for (r, row) in rows.iter_mut().enumerate() {
                for c in 0..font::GLYPH_W {
                    let px = cell_x + c * s;
                    let py = oy + r as u32 * s;
                    if px < img.width() && img.get(px, py) == self.ink {
                        *row |= 1 << (font::GLYPH_W - 1 - c);
                    }
                }
            }
            text.push(font::decode_glyph(&rows)?);
        }
        let text = text.trim_end().to_string();
        if text.is_empty() || text.contains(' ') {
            // Word runs never span a space; a decoded space means the phase
            // grid drifted off the real cells.
            return None;
        }
        // Exact verification: the decode must reproduce the observed ink.
        let w = font::text_width(&text, s);
        let h = font::text_height(s);
        let mut probe = RasterImage::new(w.max(1), h, [255, 255, 255]);
        probe.draw_text(0, 0, &text, s, self.ink);
        let mut rendered = Vec::new();
        for y in 0..probe.height() {
            for x in 0..probe.width() {
                if probe.get(x, y) == self.ink {
                    rendered.push((x + ox, y + oy));
                }
            }
        }
        rendered.sort_unstable();
        if rendered != run.ink {
            return None;
        }
        Some(TextFragment {
            text,
            bbox: BoundingBox::new(ox, oy, w, h),
            confidence: 1.0,
        })
    }
}

/// Ink pixels of one word-candidate run, sorted by (x, y).
struct InkRun {
    ink: Vec<(u32, u32)>,
    min_x: u32,
    max_x: u32,
    min_y: u32,
}

impl OcrEngine for FixtureOcr {
    fn recognize(&self, img: &RasterImage) -> Result<Vec<TextFragment>, OcrError> {
        let s = self.scale;
        let mut by_row: Vec<Vec<(u32, u32)>> = Vec::new();
        let mut rows_with_ink: Vec<u32> = Vec::new();
        let mut current_row_pixels: Vec<(u32, u32)> = Vec::new();
        for y in 0..img.height() {
            current_row_pixels.clear();
            for x in 0..img.width() {
                if img.get(x, y) == self.ink {
                    current_row_pixels.push((x, y));
                }
            }
            if !current_row_pixels.is_empty() {
                rows_with_ink.push(y);
                by_row.push(current_row_pixels.clone());
            }
        }
        if rows_with_ink.is_empty() {
            return Ok(Vec::new());
        }

        // Line bands: consecutive ink rows with a vertical gap tolerance that
        // bridges glyph-internal blank rows (':' etc.) but not separate lines.
        let band_gap = 3 * s;
        let mut bands: Vec<Vec<(u32, u32)>> = Vec::new();
        let mut band: Vec<(u32, u32)> = by_row[0].clone();
        for i in 1..rows_with_ink.len() {
            if rows_with_ink[i] - rows_with_ink[i - 1] > band_gap {
                bands.push(std::mem::take(&mut band));
            }
            band.extend_from_slice(&by_row[i]);
        }
        bands.push(band);

        // Word runs: split each band at horizontal gaps wider than any
        // in-word spacing.
        let word_gap = 4 * s;
        let mut fragments = Vec::new();
        for band in bands {
            let mut xs: Vec<u32> = band.iter().map(|&(x, _)| x).collect();
            xs.sort_unstable();
            xs.dedup();
            let mut run_ranges: Vec<(u32, u32)> = Vec::new();
            let mut start = xs[0];
            let mut prev = xs[0];
            for &x in &xs[1..] {
                if x - prev > word_gap {
                    run_ranges.push((start, prev));
                    start = x;
                }
                prev = x;
            }
            run_ranges.push((start, prev));

            for (x0, x1) in run_ranges {
                let mut ink: Vec<(u32, u32)> = band
                    .iter()
                    .copied()
                    .filter(|&(x, _)| x >= x0 && x <= x1)
                    .collect();
                ink.sort_unstable();
                let min_y = ink.iter().map(|&(_, y)| y).min().unwrap();
                let run = InkRun {
                    min_x: x0,
                    max_x: x1,
                    min_y,
                    ink,
                };
                if let Some(frag) = self.decode_run(img, &run) {
                    fragments.push(frag);
                }
            }
        }
        fragments.sort_by_key(|f| (f.bbox.y, f.bbox.x));
        Ok(fragments)
    }
}

/// Shells out to a configured OCR command. `{image}` in any argument is
/// replaced with the path of a temporary PNG. The command must print one
/// fragment per line as tab-separated `x y w h text [confidence]`.
#[derive(Debug, Clone)]
pub struct ExternalOcr {
    pub program: String,
    pub args: Vec<String>,
}

impl OcrEngine for ExternalOcr {
    fn recognize(&self, img: &RasterImage) -> Result<Vec<TextFragment>, OcrError> {
        let dir = std::env::temp_dir();
        let path = dir.join(format!(
            "ocr-input-{}-{:x}.png",
            std::process::id(),
            img.digest()
        ));
        img.save_png(&path)
            .map_err(|e| OcrError::External(format!("write temp image: {e}")))?;
        let args: Vec<String> = self
            .args
            .iter()
            .map(|a| a.replace("{image}", &path.to_string_lossy()))
            .collect();
        let output = Command::new(&self.program).args(&args).output();
        std::fs::remove_file(&path).ok();
        let output =
            output.map_err(|e| OcrError::External(format!("spawn {}: {e}", self.program)))?;
        if !output.status.success() {
            return Err(OcrError::External(format!(
                "{} exited with {}: {}",
                self.program,
                output.status,
                String::from_utf8_lossy(&output.stderr)
            )));
        }
        let stdout = String::from_utf8_lossy(&output.stdout);
        let mut out = Vec::new();
        for line in stdout.lines() {
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.splitn(6, '\t').collect();
            if parts.len() < 5 {
                return Err(OcrError::External(format!("bad ocr line: {line:?}")));
            }
            let parse = |s: &str| -> Result<u32, OcrError> {
                s.trim()
                    .parse()
                    .map_err(|_| OcrError::External(format!("bad number in ocr line: {line:?}")))
            };
            let (x, y, w, h) = (
                parse(parts[0])?,
                parse(parts[1])?,
                parse(parts[2])?,
                parse(parts[3])?,
            );
            let text = parts[4].to_string();
            if text.is_empty() || w == 0 || h == 0 {
                continue;
            }
            let bbox = BoundingBox::new(x, y, w, h);
            if !bbox.in_bounds(img.width(), img.height()) {
                continue;
            }
            let confidence = parts
                .get(5)
                .and_then(|s| s.trim().parse().ok())
                .unwrap_or(1.0);
            out.push(TextFragment {
                text,
                bbox,
                confidence,
            });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::RasterImage;

    fn canvas() -> RasterImage {
        RasterImage::new(400, 120, [245, 245, 245])
    }

    #[test]
    fn blank_image_has_no_fragments() {
        let ocr = FixtureOcr::default();
        assert!(ocr.recognize(&canvas()).unwrap().is_empty());
    }

    #[test]
    fn single_word_decodes_at_exact_render_position() {
        let mut img = canvas();
        img.draw_text(37, 23, "Send", 2, TEXT_INK);
        let frags = FixtureOcr::default().recognize(&img).unwrap();
        assert_eq!(frags.len(), 1);
        assert_eq!(frags[0].text, "Send");
        let b = frags[0].bbox;
        assert!((b.x as i64 - 37).abs() <= 1 && (b.y as i64 - 23).abs() <= 1);
        assert_eq!(b.w, font::text_width("Send", 2));
        assert_eq!(b.h, font::text_height(2));
    }

    #[test]
    fn words_far_apart_stay_separate() {
        let mut img = canvas();
        img.draw_text(10, 40, "Save", 2, TEXT_INK);
        img.draw_text(
            10 + font::text_width("Save", 2) + 60,
            40,
            "Cancel",
            2,
            TEXT_INK,
        );
        let frags = FixtureOcr::default().recognize(&img).unwrap();
        let texts: Vec<_> = frags.iter().map(|f| f.text.as_str()).collect();
        assert_eq!(texts, vec!["Save", "Cancel"]);
    }

    #[test]
    fn sentence_splits_into_words() {
        let mut img = canvas();
        img.draw_text(8, 10, "new note here", 2, TEXT_INK);
        let frags = FixtureOcr::default().recognize(&img).unwrap();
        let texts: Vec<_> = frags.iter().map(|f| f.text.as_str()).collect();
        assert_eq!(texts, vec!["new", "note", "here"]);
    }

    #[test]
    fn lowercase_only_word_recovers_cell_origin() {
        // "eam" has no ink in glyph rows 0..2; the phase search must still
        // report the true cell origin.
        let mut img = canvas();
        img.draw_text(50, 61, "eam", 2, TEXT_INK);
        let frags = FixtureOcr::default().recognize(&img).unwrap();
        assert_eq!(frags.len(), 1);
        assert_eq!(frags[0].text, "eam");
        assert_eq!(frags[0].bbox.y, 61);
    }

    #[test]
    fn punctuation_and_digits_round_trip() {
        let mut img = canvas();
        img.draw_text(12, 30, "a@b.c", 2, TEXT_INK);
        img.draw_text(12, 70, "7+3=10", 2, TEXT_INK);
        let frags = FixtureOcr::default().recognize(&img).unwrap();
        let texts: Vec<_> = frags.iter().map(|f| f.text.as_str()).collect();
        assert_eq!(texts, vec!["a@b.c", "7+3=10"]);
    }

    #[test]
    fn two_stacked_lines_do_not_merge() {
        let mut img = canvas();
        img.draw_text(10, 20, "Inbox", 2, TEXT_INK);
        img.draw_text(10, 50, "Sent", 2, TEXT_INK);
        let frags = FixtureOcr::default().recognize(&img).unwrap();
        let texts: Vec<_> = frags.iter().map(|f| f.text.as_str()).collect();
        assert_eq!(texts, vec!["Inbox", "Sent"]);
    }

    #[test]
    fn external_ocr_parses_tsv_contract() {
        let ocr = ExternalOcr {
            program: "sh".into(),
            args: vec![
                "-c".into(),
                "printf '5\\t6\\t20\\t10\\thello\\t0.9\\n8\\t40\\t30\\t10\\tworld\\n'".into(),
            ],
        };
        let img = canvas();
        let frags = ocr.recognize(&img).unwrap();
        assert_eq!(frags.len(), 2);
        assert_eq!(frags[0].text, "hello");
        assert_eq!(frags[0].bbox, BoundingBox::new(5, 6, 20, 10));
        assert!((frags[0].confidence - 0.9).abs() < 1e-6);
        assert_eq!(frags[1].text, "world");
    }

    #[test]
    fn external_ocr_failure_is_distinct_error() {
        let ocr = ExternalOcr {
            program: "sh".into(),
            args: vec!["-c".into(), "exit 3".into()],
        };
        let err = ocr.recognize(&canvas()).unwrap_err();
        assert!(matches!(err, OcrError::External(_)));
    }
}
