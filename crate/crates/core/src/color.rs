//! HSV working images and RGB resampling.

use image::RgbImage;
use thiserror::Error;

/// Bins per HSV channel.
pub const BINS_PER_CHANNEL: usize = 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ColorError {
    #[error("image dimensions must be positive, got {width}x{height}")]
    EmptyImage { width: u32, height: u32 },
    #[error("expected {expected} pixels, got {got}")]
    PixelCount { expected: usize, got: usize },
    #[error("pixel {index} has a channel outside [0, 1]")]
    OutOfRange { index: usize },
}

/// Quantizes a `[0, 1]` channel value; 1.0 lands in the last bin.
#[inline]
pub fn quantize(value: f64) -> usize {
    ((value * BINS_PER_CHANNEL as f64) as usize).min(BINS_PER_CHANNEL - 1)
}

/// RGB (0..=255) to HSV with every channel in `[0, 1]`.
pub fn rgb_to_hsv(rgb: [u8; 3]) -> [f64; 3] {
    let r = rgb[0] as f64 / 255.0;
    let g = rgb[1] as f64 / 255.0;
    let b = rgb[2] as f64 / 255.0;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let sector = if delta == 0.0 {
        0.0
    } else if max == r {
        ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        (b - r) / delta + 2.0
    } else {
        (r - g) / delta + 4.0
    };
    let hue = sector / 6.0;
    let saturation = if max == 0.0 { 0.0 } else { delta / max };
    [hue.clamp(0.0, 1.0), saturation, max]
}

/// Immutable image in HSV space with per-pixel bin indices cached.
#[derive(Debug, Clone, PartialEq)]
pub struct HsvImage {
    width: u32,
    height: u32,
    pixels: Vec<[f64; 3]>,
    bins: Vec<[u8; 3]>,
}

impl HsvImage {
    pub fn from_hsv(width: u32, height: u32, pixels: Vec<[f64; 3]>) -> Result<Self, ColorError> {
        if width == 0 || height == 0 {
            return Err(ColorError::EmptyImage { width, height });
        }
        let expected = width as usize * height as usize;
        if pixels.len() != expected {
            return Err(ColorError::PixelCount { expected, got: pixels.len() });
        }
        if let Some(index) = pixels.iter().position(|p| p.iter().any(|c| !(0.0..=1.0).contains(c)))
        {
            return Err(ColorError::OutOfRange { index });
        }
        let bins = pixels
            .iter()
            .map(|p| [quantize(p[0]) as u8, quantize(p[1]) as u8, quantize(p[2]) as u8])
            .collect();
        Ok(Self { width, height, pixels, bins })
    }

    pub fn from_rgb(image: &RgbImage) -> Self {
        let pixels = image.pixels().map(|p| rgb_to_hsv(p.0)).collect();
        Self::from_hsv(image.width().max(1), image.height().max(1), pixels)
            .expect("RGB conversion yields valid HSV")
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixel(&self, x: u32, y: u32) -> [f64; 3] {
        self.pixels[(y * self.width + x) as usize]
    }

    pub(crate) fn bins_row(&self, y: u32) -> &[[u8; 3]] {
        let start = (y * self.width) as usize;
        &self.bins[start..start + self.width as usize]
    }
}

/// Source-pixel coverage for each output pixel along one axis.
fn area_weights(src: u32, dst: u32) -> Vec<Vec<(usize, f64)>> {
    let ratio = src as f64 / dst as f64;
    (0..dst)
        .map(|i| {
            let start = i as f64 * ratio;
            let end = (i + 1) as f64 * ratio;
            let first = start.floor() as usize;
            let last = (end.ceil() as usize).min(src as usize);
            (first..last)
                .filter_map(|s| {
                    let overlap = (end.min(s as f64 + 1.0) - start.max(s as f64)).max(0.0);
                    (overlap > 0.0).then_some((s, overlap / ratio))
                })
                .collect()
        })
        .collect()
}

/// Output size for a scale factor: `round(scale * n)`, at least 1.
pub fn scaled_dimension(n: u32, scale: f64) -> u32 {
    ((n as f64 * scale).round() as u32).max(1)
}

/// Area-averaging (box filter) resize by `scale`.
pub fn downscale(image: &RgbImage, scale: f64) -> RgbImage {
    let (w, h) = image.dimensions();
    let (dw, dh) = (scaled_dimension(w, scale), scaled_dimension(h, scale));
    if (dw, dh) == (w, h) {
        return image.clone();
    }
    let wx = area_weights(w, dw);
    let wy = area_weights(h, dh);
    // horizontal pass
    let mut rows = vec![[0.0f64; 3]; dw as usize * h as usize];
    for y in 0..h {
        for (ox, taps) in wx.iter().enumerate() {
            let mut acc = [0.0; 3];
            for &(sx, weight) in taps {
                let p = image.get_pixel(sx as u32, y).0;
                for c in 0..3 {
                    acc[c] += p[c] as f64 * weight;
                }
            }
            rows[y as usize * dw as usize + ox] = acc;
        }
    }
    let mut out = RgbImage::new(dw, dh);
    for (oy, taps) in wy.iter().enumerate() {
        for ox in 0..dw as usize {
            let mut acc = [0.0; 3];
            for &(sy, weight) in taps {
                let p = rows[sy * dw as usize + ox];
                for c in 0..3 {
                    acc[c] += p[c] * weight;
                }
            }
            let px = acc.map(|v| v.round().clamp(0.0, 255.0) as u8);
            out.put_pixel(ox as u32, oy as u32, image::Rgb(px));
        }
    }
    out
}
