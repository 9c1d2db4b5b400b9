//! Graphical widget extraction: Sobel gradients, Otsu thresholding on the
//! gradient histogram, one 3x3 closing pass, then 8-connected components.

use crate::geometry::BoundingBox;
use crate::raster::RasterImage;

/// Connected-component bounds of the closed edge map. An empty result is
/// valid (uniform images have no gradients).
pub fn extract_graphical_widgets(img: &RasterImage) -> Vec<BoundingBox> {
    let w = img.width() as usize;
    let h = img.height() as usize;
    if w < 3 || h < 3 {
        return Vec::new();
    }

    let gray = img.grayscale();
    let mag = sobel_magnitude(&gray, w, h);

    let threshold = match otsu_threshold(&mag) {
        Some(t) => t,
        None => return Vec::new(),
    };

    let edges: Vec<bool> = mag.iter().map(|&m| m > threshold).collect();
    let closed = dilate3x3(&edges, w, h);
    component_bounds(&closed, w, h)
}

/// |Gx| + |Gy| scaled into u8. Border pixels are left at zero.
fn sobel_magnitude(gray: &[u8], w: usize, h: usize) -> Vec<u8> {
    let mut mag = vec![0u8; w * h];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let p = |dx: i32, dy: i32| -> i32 {
                gray[(y as i32 + dy) as usize * w + (x as i32 + dx) as usize] as i32
            };
            let gx = -p(-1, -1) - 2 * p(-1, 0) - p(-1, 1) + p(1, -1) + 2 * p(1, 0) + p(1, 1);
            let gy = -p(-1, -1) - 2 * p(0, -1) - p(1, -1) + p(-1, 1) + 2 * p(0, 1) + p(1, 1);
            mag[y * w + x] = ((gx.abs() + gy.abs()) / 8).min(255) as u8;
        }
    }
    mag
}

/// Otsu's between-class variance maximization over a 256-bin histogram.
/// Returns `None` when the histogram is degenerate (single occupied bin), in
/// which case there is nothing to segment.
fn otsu_threshold(values: &[u8]) -> Option<u8> {
    let mut hist = [0u64; 256];
    for &v in values {
        hist[v as usize] += 1;
    }
    if hist.iter().filter(|&&c| c > 0).count() < 2 {
        return None;
    }

    let total = values.len() as f64;
    let sum_all: f64 = hist
        .iter()
        .enumerate()
        .map(|(v, &c)| v as f64 * c as f64)
        .sum();

    let mut sum_b = 0.0;
    let mut weight_b = 0.0;
    let mut best = (0u8, -1.0f64);
    for t in 0..256usize {
        weight_b += hist[t] as f64;
        if weight_b == 0.0 {
            continue;
        }
        let weight_f = total - weight_b;
        if weight_f == 0.0 {
            break;
        }
        sum_b += t as f64 * hist[t] as f64;
        let mean_b = sum_b / weight_b;
        let mean_f = (sum_all - sum_b) / weight_f;
        let between = weight_b * weight_f * (mean_b - mean_f) * (mean_b - mean_f);
        if between > best.1 {
            best = (t as u8, between);
        }
    }
    Some(best.0)
}

fn dilate3x3(mask: &[bool], w: usize, h: usize) -> Vec<bool> {
    let mut out = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            if !mask[y * w + x] {
                continue;
            }
            let y0 = y.saturating_sub(1);
            let x0 = x.saturating_sub(1);
            for yy in y0..=(y + 1).min(h - 1) {
                for xx in x0..=(x + 1).min(w - 1) {
                    out[yy * w + xx] = true;
                }
            }
        }
    }
    out
}

/// 8-connected component labeling by flood fill; returns each component's
/// bounding box.
fn component_bounds(mask: &[bool], w: usize, h: usize) -> Vec<BoundingBox> {
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    let mut stack = Vec::new();

    for start in 0..w * h {
        if !mask[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let (mut min_x, mut min_y) = (start % w, start / w);
        let (mut max_x, mut max_y) = (min_x, min_y);

        while let Some(idx) = stack.pop() {
            let (x, y) = (idx % w, idx / w);
            min_x = min_x.min(x);
            max_x = max_x.max(x);
            min_y = min_y.min(y);
            max_y = max_y.max(y);
            let y0 = y.saturating_sub(1);
            let x0 = x.saturating_sub(1);
            for yy in y0..=(y + 1).min(h - 1) {
                for xx in x0..=(x + 1).min(w - 1) {
                    let n = yy * w + xx;
                    if mask[n] && !seen[n] {
                        seen[n] = true;
                        stack.push(n);
                    }
                }
            }
        }

        out.push(BoundingBox::new(
            min_x as u32,
            min_y as u32,
            (max_x - min_x + 1) as u32,
            (max_y - min_y + 1) as u32,
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::{RasterImage, BLACK};

    #[test]
    fn blank_uniform_image_yields_nothing() {
        let img = RasterImage::new(120, 80, [245, 245, 245]);
        assert!(extract_graphical_widgets(&img).is_empty());
    }

    #[test]
    fn single_bordered_rectangle_is_found_within_two_px() {
        let mut img = RasterImage::new(120, 120, [245, 245, 245]);
        let truth = BoundingBox::new(10, 10, 40, 40);
        img.outline_rect(truth, 2, BLACK);
        let boxes = extract_graphical_widgets(&img);
        assert_eq!(boxes.len(), 1, "expected one component, got {boxes:?}");
        let b = boxes[0];
        // Detected box must contain the drawn one and stay within 2 px slack.
        assert!(b.x <= truth.x && b.y <= truth.y);
        assert!(b.right() >= truth.right() && b.bottom() >= truth.bottom());
        assert!(truth.x - b.x <= 2 && truth.y - b.y <= 2);
        assert!(b.right() - truth.right() <= 2 && b.bottom() - truth.bottom() <= 2);
    }

    #[test]
    fn two_disjoint_rectangles_yield_two_disjoint_boxes() {
        let mut img = RasterImage::new(200, 120, [245, 245, 245]);
        img.outline_rect(BoundingBox::new(10, 10, 40, 40), 2, BLACK);
        img.outline_rect(BoundingBox::new(120, 40, 50, 30), 2, BLACK);
        let boxes = extract_graphical_widgets(&img);
        assert_eq!(boxes.len(), 2, "expected two components, got {boxes:?}");
        assert!(boxes[0].intersect(&boxes[1]).is_none());
    }

    #[test]
    fn boxes_stay_in_bounds() {
        // Border-touching rectangle must not push components out of bounds.
        let mut img = RasterImage::new(60, 60, [245, 245, 245]);
        img.outline_rect(BoundingBox::new(0, 0, 60, 60), 2, BLACK);
        for b in extract_graphical_widgets(&img) {
            assert!(b.in_bounds(60, 60));
        }
    }

    #[test]
    fn otsu_handles_degenerate_histograms() {
        assert_eq!(otsu_threshold(&[0; 64]), None);
        assert!(otsu_threshold(&[0, 0, 0, 200, 200, 0, 0, 0]).is_some());
    }
}
