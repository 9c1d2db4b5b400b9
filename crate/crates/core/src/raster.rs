//! In-memory RGB rasters, PNG I/O and the drawing primitives used by the
//! simulated app renderer and the perception visualizer.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use thiserror::Error;

use crate::font;
use crate::geometry::BoundingBox;

pub type Rgb = [u8; 3];

pub const BLACK: Rgb = [0, 0, 0];
pub const WHITE: Rgb = [255, 255, 255];

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("zero-sized image ({0}x{1})")]
    ZeroSized(u32, u32),
    #[error("png error: {0}")]
    Png(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("unsupported png color type {0:?}")]
    UnsupportedColor(png::ColorType),
}

/// An owned 8-bit RGB image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl RasterImage {
    pub fn new(width: u32, height: u32, fill: Rgb) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut data = Vec::with_capacity(width as usize * height as usize * 3);
        for _ in 0..(width as usize * height as usize) {
            data.extend_from_slice(&fill);
        }
        RasterImage {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn bounds(&self) -> BoundingBox {
        BoundingBox::new(0, 0, self.width, self.height)
    }

    pub fn pixels(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    fn idx(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * 3
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> Rgb {
        let i = self.idx(x, y);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Out-of-bounds writes are silently clipped.
    #[inline]
    pub fn set(&mut self, x: u32, y: u32, color: Rgb) {
        if x >= self.width || y >= self.height {
            return;
        }
        let i = self.idx(x, y);
        self.data[i..i + 3].copy_from_slice(&color);
    }

    pub fn fill_rect(&mut self, rect: BoundingBox, color: Rgb) {
        for y in rect.y..rect.bottom().min(self.height) {
            for x in rect.x..rect.right().min(self.width) {
                self.set(x, y, color);
            }
        }
    }

    pub fn outline_rect(&mut self, rect: BoundingBox, thickness: u32, color: Rgb) {
        let t = thickness.max(1);
        for i in 0..t {
            if rect.w <= 2 * i || rect.h <= 2 * i {
                break;
            }
            let x0 = rect.x + i;
            let y0 = rect.y + i;
            let x1 = rect.right() - 1 - i;
            let y1 = rect.bottom() - 1 - i;
            for x in x0..=x1 {
                self.set(x, y0, color);
                self.set(x, y1, color);
            }
            for y in y0..=y1 {
                self.set(x0, y, color);
                self.set(x1, y, color);
            }
        }
    }

    pub fn draw_line(&mut self, x0: i64, y0: i64, x1: i64, y1: i64, color: Rgb) {
        // Bresenham, good enough for sim-app chrome.
        let dx = (x1 - x0).abs();
        let dy = -(y1 - y0).abs();
        let sx = if x0 < x1 { 1 } else { -1 };
        let sy = if y0 < y1 { 1 } else { -1 };
        let (mut x, mut y) = (x0, y0);
        let mut err = dx + dy;
        loop {
            if x >= 0 && y >= 0 {
                self.set(x as u32, y as u32, color);
            }
            if x == x1 && y == y1 {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x += sx;
            }
            if e2 <= dx {
                err += dx;
                y += sy;
            }
        }
    }

    /// Draw `text` with the embedded 5x7 font, top-left at (x, y).
    pub fn draw_text(&mut self, x: u32, y: u32, text: &str, scale: u32, color: Rgb) {
        font::draw_text(self, x, y, text, scale, color);
    }

    /// FNV-1a over dimensions and pixel bytes; used for log digests and
    /// byte-equality short-circuits.
    pub fn digest(&self) -> u64 {
        let mut h = crate::util::Fnv1a::new();
        h.write(&self.width.to_le_bytes());
        h.write(&self.height.to_le_bytes());
        h.write(&self.data);
        h.finish()
    }

    pub fn encode_png(&self) -> Result<Vec<u8>, RasterError> {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, self.width, self.height);
            enc.set_color(png::ColorType::Rgb);
            enc.set_depth(png::BitDepth::Eight);
            let mut writer = enc
                .write_header()
                .map_err(|e| RasterError::Png(e.to_string()))?;
            writer
                .write_image_data(&self.data)
                .map_err(|e| RasterError::Png(e.to_string()))?;
        }
        Ok(out)
    }

    pub fn save_png(&self, path: &Path) -> Result<(), RasterError> {
        let file = BufWriter::new(File::create(path)?);
        let mut enc = png::Encoder::new(file, self.width, self.height);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc
            .write_header()
            .map_err(|e| RasterError::Png(e.to_string()))?;
        writer
            .write_image_data(&self.data)
            .map_err(|e| RasterError::Png(e.to_string()))?;
        Ok(())
    }

    pub fn load_png(path: &Path) -> Result<Self, RasterError> {
        let file = BufReader::new(File::open(path)?);
        Self::decode_png(file)
    }

    pub fn decode_png_bytes(bytes: &[u8]) -> Result<Self, RasterError> {
        Self::decode_png(std::io::Cursor::new(bytes))
    }

    fn decode_png(source: impl std::io::BufRead + std::io::Seek) -> Result<Self, RasterError> {
        let decoder = png::Decoder::new(source);
        let mut reader = decoder
            .read_info()
            .map_err(|e| RasterError::Png(e.to_string()))?;
        let mut buf = vec![0u8; reader.output_buffer_size().unwrap_or(0)];
        let info = reader
            .next_frame(&mut buf)
            .map_err(|e| RasterError::Png(e.to_string()))?;
        let (width, height) = (info.width, info.height);
        if width == 0 || height == 0 {
            return Err(RasterError::ZeroSized(width, height));
        }
        let n = width as usize * height as usize;
        let data = match info.color_type {
            png::ColorType::Rgb => buf[..n * 3].to_vec(),
            png::ColorType::Rgba => {
                let mut d = Vec::with_capacity(n * 3);
                for px in buf[..n * 4].chunks_exact(4) {
                    d.extend_from_slice(&px[..3]);
                }
                d
            }
            png::ColorType::Grayscale => {
                let mut d = Vec::with_capacity(n * 3);
                for &g in &buf[..n] {
                    d.extend_from_slice(&[g, g, g]);
                }
                d
            }
            png::ColorType::GrayscaleAlpha => {
                let mut d = Vec::with_capacity(n * 3);
                for px in buf[..n * 2].chunks_exact(2) {
                    d.extend_from_slice(&[px[0], px[0], px[0]]);
                }
                d
            }
            other => return Err(RasterError::UnsupportedColor(other)),
        };
        Ok(RasterImage {
            width,
            height,
            data,
        })
    }

    /// Luma plane via the usual integer BT.601 weights.
    pub fn grayscale(&self) -> Vec<u8> {
        self.data
            .chunks_exact(3)
            .map(|p| ((p[0] as u32 * 299 + p[1] as u32 * 587 + p[2] as u32 * 114) / 1000) as u8)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_round_trip() {
        let mut img = RasterImage::new(20, 10, [200, 210, 220]);
        img.fill_rect(BoundingBox::new(2, 2, 5, 5), [10, 20, 30]);
        img.outline_rect(BoundingBox::new(1, 1, 18, 8), 1, BLACK);
        let bytes = img.encode_png().unwrap();
        let dir = std::env::temp_dir().join(format!("raster-rt-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("rt.png");
        std::fs::write(&path, &bytes).unwrap();
        let back = RasterImage::load_png(&path).unwrap();
        assert_eq!(img, back);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn digest_changes_with_content() {
        let a = RasterImage::new(8, 8, WHITE);
        let mut b = a.clone();
        assert_eq!(a.digest(), b.digest());
        b.set(3, 3, BLACK);
        assert_ne!(a.digest(), b.digest());
    }

    #[test]
    fn outline_marks_only_border() {
        let mut img = RasterImage::new(10, 10, WHITE);
        let rect = BoundingBox::new(2, 2, 6, 6);
        img.outline_rect(rect, 1, BLACK);
        assert_eq!(img.get(2, 2), BLACK);
        assert_eq!(img.get(7, 7), BLACK);
        assert_eq!(img.get(4, 4), WHITE);
        assert_eq!(img.get(1, 1), WHITE);
    }
}
