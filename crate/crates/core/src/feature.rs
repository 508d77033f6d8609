//! Object appearance model: size rule, kernel color-weighted histograms in
//! HSV and the Bhattacharyya distance used as the tracking fitness.
//!
//! Histograms hold one 16-bin block per HSV channel (H | S | V, 48 values).
//! Every pixel whose center falls inside the clipped box adds its
//! Epanechnikov weight `max(0, 1 - |x*|^2)` to one bin of each block, where
//! `x*` is the pixel-center offset from the box center divided by the box
//! half-extents. Each block is normalized to 1/3 so the vector sums to 1.

use image::RgbImage;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::color::{self, HsvImage, BINS_PER_CHANNEL};

/// Total histogram length (three channel blocks).
pub const HISTOGRAM_LEN: usize = 3 * BINS_PER_CHANNEL;

/// Object size at or above which the low-resolution path kicks in.
pub const DEFAULT_RESIZE_THRESHOLD: f64 = 50.0;

/// Scale applied by the low-resolution path.
pub const DEFAULT_RESIZE_SCALE: f64 = 1.0 / 3.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FeatureError {
    #[error("box dimensions must be positive and finite, got {width}x{height}")]
    InvalidBox { width: f64, height: f64 },
    #[error("box does not overlap the {width}x{height} image")]
    NoOverlap { width: u32, height: u32 },
    #[error("every pixel inside the box has zero kernel weight")]
    EmptyKernelSupport,
    #[error("histogram lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

/// Axis-aligned box: top-left corner plus size, in pixels (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

impl BoundingBox {
    pub fn new(x: f64, y: f64, width: f64, height: f64) -> Result<Self, FeatureError> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(width) || !ok(height) || !x.is_finite() || !y.is_finite() {
            return Err(FeatureError::InvalidBox { width, height });
        }
        Ok(Self { x, y, width, height })
    }

    pub fn from_center(center: (f64, f64), width: f64, height: f64) -> Self {
        Self { x: center.0 - width / 2.0, y: center.1 - height / 2.0, width, height }
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.width / 2.0, self.y + self.height / 2.0)
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    /// All coordinates multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            x: self.x * factor,
            y: self.y * factor,
            width: self.width * factor,
            height: self.height * factor,
        }
    }

    /// Whether any pixel center of a `width x height` image lies inside the box.
    pub fn overlaps_image(&self, width: u32, height: u32) -> bool {
        pixel_span(self.x, self.width, width).is_some()
            && pixel_span(self.y, self.height, height).is_some()
    }
}

/// Pixel indices `p` in `0..limit` with `start <= p + 0.5 < start + len`.
fn pixel_span(start: f64, len: f64, limit: u32) -> Option<(u32, u32)> {
    let first = (start - 0.5).ceil().max(0.0);
    let end = (start + len - 0.5).ceil().min(limit as f64);
    (first < end).then_some((first as u32, end as u32))
}

/// Epanechnikov profile `k(z) = 1 - z` on `z <= 1`, zero outside.
#[inline]
pub fn epanechnikov(z: f64) -> f64 {
    if z <= 1.0 {
        1.0 - z
    } else {
        0.0
    }
}

/// Normalized kernel color-weighted histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelHistogram {
    bins: Vec<f64>,
}

impl KernelHistogram {
    /// Wraps raw bins; callers are responsible for normalization.
    pub fn from_bins(bins: Vec<f64>) -> Self {
        Self { bins }
    }

    pub fn bins(&self) -> &[f64] {
        &self.bins
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.bins.iter().sum()
    }
}

/// `sqrt(width * height)`.
pub fn object_size(width: f64, height: f64) -> f64 {
    (width * height).sqrt()
}

/// Scale chosen for an object: `scale` when `size >= threshold`, else 1.
pub fn resize_scale_for(size: f64, threshold: f64, scale: f64) -> f64 {
    if size >= threshold {
        scale
    } else {
        1.0
    }
}

/// Downscales `image` when the object size reaches the threshold.
/// Returns the (possibly unchanged) frame and the applied scale.
pub fn maybe_downscale(image: &RgbImage, size: f64, threshold: f64, scale: f64) -> (RgbImage, f64) {
    let applied = resize_scale_for(size, threshold, scale);
    if applied == 1.0 {
        (image.clone(), 1.0)
    } else {
        (color::downscale(image, applied), applied)
    }
}

/// Kernel color-weighted histogram of the pixels inside `bbox`.
pub fn compute_histogram(
    image: &HsvImage,
    bbox: &BoundingBox,
) -> Result<KernelHistogram, FeatureError> {
    let (w, h) = (image.width(), image.height());
    let (Some((x0, x1)), Some((y0, y1))) =
        (pixel_span(bbox.x, bbox.width, w), pixel_span(bbox.y, bbox.height, h))
    else {
        return Err(FeatureError::NoOverlap { width: w, height: h });
    };
    let (cx, cy) = bbox.center();
    let (half_w, half_h) = (bbox.width / 2.0, bbox.height / 2.0);

    let mut bins = vec![0.0; HISTOGRAM_LEN];
    let mut total = 0.0;
    for py in y0..y1 {
        let dy = (py as f64 + 0.5 - cy) / half_h;
        let dy2 = dy * dy;
        if dy2 > 1.0 {
            continue;
        }
        let row = image.bins_row(py);
        for px in x0..x1 {
            let dx = (px as f64 + 0.5 - cx) / half_w;
            let weight = epanechnikov(dx * dx + dy2);
            if weight <= 0.0 {
                continue;
            }
            let [bh, bs, bv] = row[px as usize];
            bins[bh as usize] += weight;
            bins[BINS_PER_CHANNEL + bs as usize] += weight;
            bins[2 * BINS_PER_CHANNEL + bv as usize] += weight;
            total += weight;
        }
    }
    if total <= 0.0 {
        return Err(FeatureError::EmptyKernelSupport);
    }
    let norm = 3.0 * total;
    bins.iter_mut().for_each(|b| *b /= norm);
    Ok(KernelHistogram { bins })
}

/// `1 - sum_u sqrt(h1[u] * h2[u])`, clamped to `[0, 1]`.
pub fn bhattacharyya_distance(
    h1: &KernelHistogram,
    h2: &KernelHistogram,
) -> Result<f64, FeatureError> {
    if h1.len() != h2.len() {
        return Err(FeatureError::LengthMismatch(h1.len(), h2.len()));
    }
    let coefficient: f64 = h1.bins.iter().zip(&h2.bins).map(|(a, b)| (a * b).sqrt()).sum();
    Ok((1.0 - coefficient).clamp(0.0, 1.0))
}

/// A tracked target's appearance and state, in working-resolution pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectModel {
    pub id: u32,
    pub template: KernelHistogram,
    pub box_width: f64,
    pub box_height: f64,
    /// Frame-1 box size at original resolution.
    pub original_width: f64,
    pub original_height: f64,
    /// 1.0, or the resize scale when the low-resolution path applies.
    pub scale: f64,
    pub current_center: (f64, f64),
}

impl ObjectModel {
    /// Builds the template from `initial` (original coordinates) on a frame
    /// already resampled by `scale`.
    pub fn new(
        id: u32,
        working_frame: &HsvImage,
        initial: &BoundingBox,
        scale: f64,
    ) -> Result<Self, FeatureError> {
        let working = initial.scaled(scale);
        let center = working.center();
        let sample = BoundingBox::from_center(center, working.width, working.height);
        let template = compute_histogram(working_frame, &sample)?;
        Ok(Self {
            id,
            template,
            box_width: working.width,
            box_height: working.height,
            original_width: initial.width,
            original_height: initial.height,
            scale,
            current_center: center,
        })
    }

    /// Candidate box of the model's size centered at `center` (working coordinates).
    pub fn candidate_box(&self, center: (f64, f64)) -> BoundingBox {
        BoundingBox::from_center(center, self.box_width, self.box_height)
    }

    /// Working-resolution center mapped back to an original-resolution box.
    pub fn original_box(&self, center: (f64, f64)) -> BoundingBox {
        BoundingBox::from_center(
            (center.0 / self.scale, center.1 / self.scale),
            self.original_width,
            self.original_height,
        )
    }
}

/// Bhattacharyya distance between the template and the candidate centered at
/// `center`; 1.0 for candidates with no usable pixels.
pub fn fitness_at(model: &ObjectModel, frame: &HsvImage, center: (f64, f64)) -> f64 {
    match compute_histogram(frame, &model.candidate_box(center)) {
        Ok(hist) => bhattacharyya_distance(&model.template, &hist).unwrap_or(1.0),
        Err(_) => 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solid(w: u32, h: u32, rgb: [u8; 3]) -> HsvImage {
        HsvImage::from_rgb(&RgbImage::from_pixel(w, h, image::Rgb(rgb)))
    }

    #[test]
    fn object_size_examples() {
        assert!((object_size(31.0, 45.0) - 37.349_698_793_966_3).abs() < 1e-9);
        assert!((object_size(25.0, 101.0) - 50.249_378_105_604_45).abs() < 1e-9);
        assert_eq!(object_size(50.0, 50.0), 50.0);
        assert_eq!(resize_scale_for(object_size(31.0, 45.0), 50.0, 1.0 / 3.0), 1.0);
        assert_eq!(resize_scale_for(object_size(25.0, 101.0), 50.0, 1.0 / 3.0), 1.0 / 3.0);
        assert_eq!(resize_scale_for(50.0, 50.0, 1.0 / 3.0), 1.0 / 3.0);
    }

    #[test]
    fn maybe_downscale_examples() {
        let frame = RgbImage::from_pixel(300, 300, image::Rgb([1, 2, 3]));
        let (small, s) = maybe_downscale(&frame, 60.0, 50.0, 1.0 / 3.0);
        assert_eq!(small.dimensions(), (100, 100));
        assert_eq!(s, 1.0 / 3.0);
        let (same, s) = maybe_downscale(&frame, 37.0, 50.0, 1.0 / 3.0);
        assert_eq!(same.dimensions(), (300, 300));
        assert_eq!(s, 1.0);

        let b = BoundingBox::new(90.0, 30.0, 64.0, 236.0).unwrap().scaled(1.0 / 3.0);
        assert!((b.x - 30.0).abs() < 1e-12);
        assert!((b.y - 10.0).abs() < 1e-12);
        assert!((b.width - 21.333_333_333_333_332).abs() < 1e-9);
        assert!((b.height - 78.666_666_666_666_67).abs() < 1e-9);
    }

    #[test]
    fn uniform_image_has_one_bin_per_block() {
        let img = solid(20, 20, [200, 40, 90]);
        let hist =
            compute_histogram(&img, &BoundingBox::new(3.0, 4.0, 10.0, 8.0).unwrap()).unwrap();
        for block in hist.bins().chunks(BINS_PER_CHANNEL) {
            let nonzero: Vec<f64> = block.iter().copied().filter(|&b| b > 0.0).collect();
            assert_eq!(nonzero.len(), 1);
            assert!((nonzero[0] - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn two_pixel_fixture_by_hand() {
        // pixel 0: red (h=0, s=1, v=1); pixel 1: dark gray (h=0, s=0, v=0.2)
        let img = HsvImage::from_hsv(2, 1, vec![[0.0, 1.0, 1.0], [0.0, 0.0, 0.2]]).unwrap();
        // box center (1.25, 0.5), half extents (1.25, 0.5)
        let b = BoundingBox::new(0.0, 0.0, 2.5, 1.0).unwrap();
        let hist = compute_histogram(&img, &b).unwrap();
        // pixel 0 at x=0.5: dx = -0.6, weight 0.64; pixel 1 at x=1.5: dx = 0.2, weight 0.96
        let (w0, w1) = (0.64, 0.96);
        let norm = 3.0 * (w0 + w1);
        let mut expected = vec![0.0; HISTOGRAM_LEN];
        expected[0] += (w0 + w1) / norm;
        expected[16 + 15] += w0 / norm;
        expected[16] += w1 / norm;
        expected[32 + 15] += w0 / norm;
        expected[32 + 3] += w1 / norm;
        for (a, e) in hist.bins().iter().zip(&expected) {
            assert!((a - e).abs() < 1e-12, "{a} vs {e}");
        }
    }

    #[test]
    fn boundary_pixels_have_zero_weight() {
        assert_eq!(epanechnikov(1.0), 0.0);
        assert_eq!(epanechnikov(1.5), 0.0);
        let img = HsvImage::from_hsv(1, 1, vec![[0.5, 0.5, 0.5]]).unwrap();
        // pixel center (0.5, 0.5) exactly on the ellipse of a box centered at (1, 0.5), half-width 0.5
        let b = BoundingBox::new(0.5, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(compute_histogram(&img, &b), Err(FeatureError::EmptyKernelSupport));
    }

    #[test]
    fn outside_box_is_rejected() {
        let img = solid(10, 10, [0, 0, 0]);
        let b = BoundingBox::new(50.0, 50.0, 5.0, 5.0).unwrap();
        assert!(matches!(compute_histogram(&img, &b), Err(FeatureError::NoOverlap { .. })));
    }

    #[test]
    fn bhattacharyya_examples() {
        let mut a = vec![0.0; HISTOGRAM_LEN];
        a[0] = 0.5;
        a[1] = 0.5;
        let mut b = vec![0.0; HISTOGRAM_LEN];
        b[0] = 1.0;
        let (ha, hb) = (KernelHistogram::from_bins(a), KernelHistogram::from_bins(b));
        let d = bhattacharyya_distance(&ha, &hb).unwrap();
        assert!((d - (1.0 - 0.5f64.sqrt())).abs() < 1e-12);
        assert_eq!(bhattacharyya_distance(&ha, &ha).unwrap(), 0.0);
        let mut c = vec![0.0; HISTOGRAM_LEN];
        c[5] = 1.0;
        assert_eq!(bhattacharyya_distance(&hb, &KernelHistogram::from_bins(c)).unwrap(), 1.0);
        let short = KernelHistogram::from_bins(vec![1.0]);
        assert_eq!(bhattacharyya_distance(&ha, &short), Err(FeatureError::LengthMismatch(48, 1)));
    }

    #[test]
    fn fitness_self_and_outside() {
        let frame = RgbImage::from_fn(60, 60, |x, y| {
            image::Rgb([(x * 4) as u8, (y * 4) as u8, ((x + y) * 2) as u8])
        });
        let hsv = HsvImage::from_rgb(&frame);
        let init = BoundingBox::new(10.3, 12.7, 21.0, 17.0).unwrap();
        let model = ObjectModel::new(1, &hsv, &init, 1.0).unwrap();
        assert!(fitness_at(&model, &hsv, model.current_center) < 1e-9);
        assert_eq!(fitness_at(&model, &hsv, (500.0, 500.0)), 1.0);
        assert_eq!(fitness_at(&model, &hsv, (-100.0, 30.0)), 1.0);
    }

    #[test]
    fn original_box_round_trip() {
        let hsv = solid(90, 90, [10, 20, 30]);
        let init = BoundingBox::new(30.0, 15.0, 60.0, 66.0).unwrap();
        let model = ObjectModel::new(4, &hsv, &init, 1.0 / 3.0).unwrap();
        let back = model.original_box(model.current_center);
        assert!((back.x - 30.0).abs() < 1e-9 && (back.y - 15.0).abs() < 1e-9);
        assert_eq!((back.width, back.height), (60.0, 66.0));
    }

    #[test]
    fn invalid_boxes() {
        assert!(BoundingBox::new(0.0, 0.0, 0.0, 5.0).is_err());
        assert!(BoundingBox::new(0.0, 0.0, 5.0, -1.0).is_err());
        assert!(BoundingBox::new(f64::NAN, 0.0, 5.0, 5.0).is_err());
    }
}
