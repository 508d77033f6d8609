//! Overlap, center error, OPE curves, false-negative rate and FPS.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::feature::BoundingBox;
use crate::tracker::Trajectory;

/// Success-curve thresholds: 0.0, 0.05, ..., 1.0.
pub const SUCCESS_POINTS: usize = 21;
/// Precision-curve thresholds: 0, 1, ..., 50 pixels.
pub const PRECISION_POINTS: usize = 51;
/// Center-error threshold reported in precision legends.
pub const PRECISION_LEGEND_PX: usize = 20;
/// IoU a prediction must exceed to count as a true positive.
pub const TP_IOU_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("no scores to aggregate")]
    Empty,
    #[error("total duration is zero")]
    ZeroDuration,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameScore {
    pub object_id: u32,
    pub iou: f64,
    pub center_error: f64,
}

impl FrameScore {
    pub fn new(object_id: u32, predicted: &BoundingBox, truth: &BoundingBox) -> Self {
        Self { object_id, iou: iou(predicted, truth), center_error: center_error(predicted, truth) }
    }
}

/// Intersection over union of two boxes (analytic areas).
pub fn iou(predicted: &BoundingBox, truth: &BoundingBox) -> f64 {
    let ix = (predicted.x + predicted.width).min(truth.x + truth.width) - predicted.x.max(truth.x);
    let iy =
        (predicted.y + predicted.height).min(truth.y + truth.height) - predicted.y.max(truth.y);
    if ix <= 0.0 || iy <= 0.0 {
        return 0.0;
    }
    let inter = ix * iy;
    let union = predicted.area() + truth.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

/// Euclidean distance between box centers.
pub fn center_error(predicted: &BoundingBox, truth: &BoundingBox) -> f64 {
    let (px, py) = predicted.center();
    let (tx, ty) = truth.center();
    (px - tx).hypot(py - ty)
}

/// Percentage of frames whose IoU does not exceed `iou_threshold`.
pub fn fn_rate(scores: &[FrameScore], iou_threshold: f64) -> Result<f64, MetricsError> {
    if scores.is_empty() {
        return Err(MetricsError::Empty);
    }
    let total = scores.len();
    let tp = scores.iter().filter(|s| s.iou > iou_threshold).count();
    Ok(100.0 * (total - tp) as f64 / total as f64)
}

/// Success and precision curves with their scalar legends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curves {
    /// Fraction of frames with IoU > threshold, thresholds `i / 20`.
    pub success: Vec<f64>,
    /// Fraction of frames with center error <= threshold, thresholds `0..=50` px.
    pub precision: Vec<f64>,
    /// Mean of the success curve.
    pub success_auc: f64,
    pub precision_at_20: f64,
}

pub fn success_threshold(i: usize) -> f64 {
    i as f64 / (SUCCESS_POINTS - 1) as f64
}

pub fn curves(scores: &[FrameScore]) -> Result<Curves, MetricsError> {
    if scores.is_empty() {
        return Err(MetricsError::Empty);
    }
    let n = scores.len() as f64;
    let success: Vec<f64> = (0..SUCCESS_POINTS)
        .map(|i| {
            let theta = success_threshold(i);
            scores.iter().filter(|s| s.iou > theta).count() as f64 / n
        })
        .collect();
    let precision: Vec<f64> = (0..PRECISION_POINTS)
        .map(|tau| scores.iter().filter(|s| s.center_error <= tau as f64).count() as f64 / n)
        .collect();
    let success_auc = success.iter().sum::<f64>() / SUCCESS_POINTS as f64;
    let precision_at_20 = precision[PRECISION_LEGEND_PX];
    Ok(Curves { success, precision, success_auc, precision_at_20 })
}

/// Frames per second over the given per-frame durations.
pub fn fps(frame_timings: &[Duration]) -> Result<f64, MetricsError> {
    if frame_timings.is_empty() {
        return Err(MetricsError::Empty);
    }
    let total: f64 = frame_timings.iter().map(Duration::as_secs_f64).sum();
    if total <= 0.0 {
        return Err(MetricsError::ZeroDuration);
    }
    Ok(frame_timings.len() as f64 / total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSummary {
    pub object_id: u32,
    pub frames: usize,
    pub mean_iou: f64,
    pub mean_center_error: f64,
    pub fn_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub objects: Vec<ObjectSummary>,
    pub mean_iou: f64,
    pub mean_center_error: f64,
    pub fn_rate: f64,
    pub fps: f64,
    pub curves: Curves,
}

/// Scores every annotated frame of every trajectory. Ground truth may be
/// shorter than the trajectory; frames past its end are not scored.
pub fn score_trajectories(
    trajectories: &[Trajectory],
    ground_truth: &[Vec<BoundingBox>],
) -> Vec<Vec<FrameScore>> {
    trajectories
        .iter()
        .zip(ground_truth)
        .map(|(traj, gt)| {
            traj.boxes.iter().zip(gt).map(|(p, t)| FrameScore::new(traj.object_id, p, t)).collect()
        })
        .collect()
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Per-object and pooled metrics for one run.
pub fn summarize(
    per_object: &[Vec<FrameScore>],
    frame_timings: &[Duration],
) -> Result<RunSummary, MetricsError> {
    let all: Vec<FrameScore> = per_object.iter().flatten().copied().collect();
    let curves = curves(&all)?;
    let objects = per_object
        .iter()
        .filter(|s| !s.is_empty())
        .map(|s| {
            Ok(ObjectSummary {
                object_id: s[0].object_id,
                frames: s.len(),
                mean_iou: mean(s.iter().map(|f| f.iou)),
                mean_center_error: mean(s.iter().map(|f| f.center_error)),
                fn_rate: fn_rate(s, TP_IOU_THRESHOLD)?,
            })
        })
        .collect::<Result<Vec<_>, MetricsError>>()?;
    Ok(RunSummary {
        objects,
        mean_iou: mean(all.iter().map(|f| f.iou)),
        mean_center_error: mean(all.iter().map(|f| f.center_error)),
        fn_rate: fn_rate(&all, TP_IOU_THRESHOLD)?,
        fps: fps(frame_timings)?,
        curves,
    })
}

/// Mean and max-min spread of a statistic across repeated runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Spread {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(Self { mean: mean(values.iter().copied()), min, max })
    }

    pub fn range(&self) -> f64 {
        self.max - self.min
    }
}

/// Median of a non-empty sample (mean of the middle pair for even sizes).
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    Some(if sorted.len().is_multiple_of(2) {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    } else {
        sorted[mid]
    })
}
