//! Sequence ingestion and persistence.
//!
//! * Sequence files: a small TOML document naming the frame directory, the
//!   printf-style frame pattern and one ground-truth file per object.
//! * Ground truth: OTB text format, one `x,y,w,h` row per frame (comma, tab
//!   or space separated), 1-based top-left origin. Boxes are 0-based in
//!   memory.
//! * Synthetic sequences: solid targets moving over a flat background with
//!   optional occluders and Gaussian noise, with exact ground truth.
//! * Run outputs: per-frame CSV, JSON summary, curve CSVs and optional
//!   annotated PNG frames.

use std::fs;
use std::path::{Path, PathBuf};

use image::{Rgb, RgbImage};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::feature::BoundingBox;
use crate::metrics::{self, RunSummary};
use crate::tracker::Trajectory;

pub const SEQUENCE_FILE: &str = "sequence.toml";
pub const FRAMES_CSV: &str = "frames.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const SUCCESS_CSV: &str = "success_curve.csv";
pub const PRECISION_CSV: &str = "precision_curve.csv";
pub const ANNOTATION_DIR: &str = "annotated";

#[derive(Debug, Error)]
pub enum SequenceError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Image { path: PathBuf, source: image::ImageError },
    #[error("{path}: {source}")]
    Toml { path: PathBuf, source: toml::de::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("missing frame {index}: {path}")]
    MissingFrame { index: usize, path: PathBuf },
    #[error("failed to decode frame {index} ({path}): {source}")]
    Decode { index: usize, path: PathBuf, source: image::ImageError },
    #[error("{path}:{line}: {reason}")]
    Malformed { path: PathBuf, line: usize, reason: String },
    #[error("invalid frame pattern {0:?}: expected something like \"%04d.jpg\"")]
    Pattern(String),
    #[error("no frames found in {0}")]
    NoFrames(PathBuf),
    #[error("sequence declares no ground-truth files")]
    NoGroundTruth,
    #[error("ground truth for object {object} has {rows} rows but only {frames} frames exist")]
    GroundTruthTooLong { object: u32, rows: usize, frames: usize },
    #[error("invalid synthetic spec: {0}")]
    InvalidSynthetic(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SequenceError + '_ {
    move |source| SequenceError::Io { path: path.to_path_buf(), source }
}

/// Printf-style frame file pattern: `prefix%0Nd suffix`.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePattern {
    prefix: String,
    width: usize,
    suffix: String,
}

impl FramePattern {
    pub fn parse(pattern: &str) -> Result<Self, SequenceError> {
        let err = || SequenceError::Pattern(pattern.to_string());
        let start = pattern.find('%').ok_or_else(err)?;
        let rest = &pattern[start + 1..];
        let end = rest.find('d').ok_or_else(err)?;
        let spec = &rest[..end];
        let width = if spec.is_empty() {
            0
        } else {
            spec.trim_start_matches('0').parse::<usize>().map_err(|_| err())?
        };
        Ok(Self {
            prefix: pattern[..start].to_string(),
            width,
            suffix: rest[end + 1..].to_string(),
        })
    }

    pub fn format(&self, index: usize) -> String {
        format!("{}{:0width$}{}", self.prefix, index, self.suffix, width = self.width)
    }

    /// Frame index encoded in `name`, if it matches.
    pub fn index_of(&self, name: &str) -> Option<usize> {
        let digits = name.strip_prefix(&self.prefix)?.strip_suffix(&self.suffix)?;
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        digits.parse().ok()
    }
}

/// On-disk sequence description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceFile {
    pub name: String,
    /// Relative paths resolve against the sequence file's directory.
    pub frames_dir: PathBuf,
    pub frame_pattern: String,
    #[serde(default = "default_start_index")]
    pub start_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_count: Option<usize>,
    /// One file per object; object ids are assigned 1, 2, ... in this order.
    pub ground_truth: Vec<PathBuf>,
}

fn default_start_index() -> usize {
    1
}

/// A resolved sequence: where frames live and the per-object ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceSpec {
    pub name: String,
    pub frames_dir: PathBuf,
    pub frame_pattern: String,
    pub start_index: usize,
    pub frame_count: usize,
    /// Per object, per frame (may be shorter than the sequence).
    pub ground_truth: Vec<Vec<BoundingBox>>,
    /// `(id, first-frame box)` per object.
    pub objects: Vec<(u32, BoundingBox)>,
}

/// Parses OTB ground truth into 0-based boxes. Blank lines are skipped.
pub fn parse_ground_truth(text: &str, path: &Path) -> Result<Vec<BoundingBox>, SequenceError> {
    let mut boxes = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let malformed = |reason: String| SequenceError::Malformed {
            path: path.to_path_buf(),
            line: i + 1,
            reason,
        };
        let fields: Vec<&str> = line.split([',', '\t', ' ']).filter(|f| !f.is_empty()).collect();
        if fields.len() != 4 {
            return Err(malformed(format!("expected 4 values, found {}", fields.len())));
        }
        let mut v = [0.0; 4];
        for (slot, field) in v.iter_mut().zip(&fields) {
            *slot = field.parse().map_err(|_| malformed(format!("not a number: {field:?}")))?;
        }
        let bbox = BoundingBox::new(v[0] - 1.0, v[1] - 1.0, v[2], v[3])
            .map_err(|e| malformed(e.to_string()))?;
        boxes.push(bbox);
    }
    Ok(boxes)
}

/// Formats 0-based boxes as OTB (1-based, comma separated) rows.
pub fn format_ground_truth(boxes: &[BoundingBox]) -> String {
    boxes
        .iter()
        .map(|b| format!("{},{},{},{}\n", b.x + 1.0, b.y + 1.0, b.width, b.height))
        .collect()
}

pub fn read_ground_truth(path: &Path) -> Result<Vec<BoundingBox>, SequenceError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_ground_truth(&text, path)
}

/// A loaded sequence whose frames are decoded lazily, in order.
#[derive(Debug, Clone)]
pub struct Sequence {
    pub spec: SequenceSpec,
    pub frame_paths: Vec<PathBuf>,
}

impl Sequence {
    pub fn frames(&self) -> impl Iterator<Item = Result<RgbImage, SequenceError>> + '_ {
        self.frame_paths.iter().enumerate().map(|(i, path)| {
            image::open(path).map(|img| img.to_rgb8()).map_err(|source| SequenceError::Decode {
                index: i + 1,
                path: path.clone(),
                source,
            })
        })
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn discover_last_index(dir: &Path, pattern: &FramePattern) -> Result<usize, SequenceError> {
    let mut last = None;
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let entry = entry.map_err(io_err(dir))?;
        if let Some(index) = entry.file_name().to_str().and_then(|n| pattern.index_of(n)) {
            last = last.max(Some(index));
        }
    }
    last.ok_or_else(|| SequenceError::NoFrames(dir.to_path_buf()))
}

/// Reads a sequence file, checks the numbered frame range and parses the
/// ground truth of every object.
pub fn load_sequence(path: &Path) -> Result<Sequence, SequenceError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let file: SequenceFile = toml::from_str(&text)
        .map_err(|source| SequenceError::Toml { path: path.to_path_buf(), source })?;
    let base = path.parent().unwrap_or(Path::new("."));
    let frames_dir = resolve(base, &file.frames_dir);
    let pattern = FramePattern::parse(&file.frame_pattern)?;
    let frame_count = match file.frame_count {
        Some(n) => n,
        None => {
            let last = discover_last_index(&frames_dir, &pattern)?;
            (last + 1).saturating_sub(file.start_index)
        }
    };
    if frame_count == 0 {
        return Err(SequenceError::NoFrames(frames_dir));
    }
    let mut frame_paths = Vec::with_capacity(frame_count);
    for k in 0..frame_count {
        let p = frames_dir.join(pattern.format(file.start_index + k));
        if !p.is_file() {
            return Err(SequenceError::MissingFrame { index: file.start_index + k, path: p });
        }
        frame_paths.push(p);
    }
    if file.ground_truth.is_empty() {
        return Err(SequenceError::NoGroundTruth);
    }
    let mut ground_truth = Vec::new();
    let mut objects = Vec::new();
    for (k, gt_path) in file.ground_truth.iter().enumerate() {
        let id = k as u32 + 1;
        let gt_path = resolve(base, gt_path);
        let boxes = read_ground_truth(&gt_path)?;
        let first = *boxes.first().ok_or_else(|| SequenceError::Malformed {
            path: gt_path.clone(),
            line: 1,
            reason: "empty ground truth".into(),
        })?;
        if boxes.len() > frame_count {
            return Err(SequenceError::GroundTruthTooLong {
                object: id,
                rows: boxes.len(),
                frames: frame_count,
            });
        }
        objects.push((id, first));
        ground_truth.push(boxes);
    }
    Ok(Sequence {
        spec: SequenceSpec {
            name: file.name,
            frames_dir,
            frame_pattern: file.frame_pattern,
            start_index: file.start_index,
            frame_count,
            ground_truth,
            objects,
        },
        frame_paths,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Motion {
    /// `start + velocity * k`
    Linear { velocity: [f64; 2] },
    /// `start + velocity * k + amplitude * sin(2 pi k / period)`
    Sinusoidal { velocity: [f64; 2], amplitude: [f64; 2], period: f64 },
}

/// Rectangle drawn over everything during frames `enter..=exit` (0-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Occluder {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
    pub color: [u8; 3],
    pub enter: usize,
    pub exit: usize,
}

impl Occluder {
    fn active(&self, frame: usize) -> bool {
        (self.enter..=self.exit).contains(&frame)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTarget {
    pub width: u32,
    pub height: u32,
    pub color: [u8; 3],
    /// Top-left corner on frame 0.
    pub start: [f64; 2],
    pub motion: Motion,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub occluder: Option<Occluder>,
}

impl SyntheticTarget {
    /// Integer top-left corner on frame `k`.
    pub fn position(&self, k: usize) -> (i64, i64) {
        let t = k as f64;
        let (x, y) = match &self.motion {
            Motion::Linear { velocity } => {
                (self.start[0] + velocity[0] * t, self.start[1] + velocity[1] * t)
            }
            Motion::Sinusoidal { velocity, amplitude, period } => {
                let phase = (2.0 * std::f64::consts::PI * t / period).sin();
                (
                    self.start[0] + velocity[0] * t + amplitude[0] * phase,
                    self.start[1] + velocity[1] * t + amplitude[1] * phase,
                )
            }
        };
        (x.round() as i64, y.round() as i64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub name: String,
    pub width: u32,
    pub height: u32,
    pub frames: usize,
    pub background: [u8; 3],
    /// Standard deviation of additive RGB noise, in 0..=255 units.
    pub noise_sigma: f64,
    pub seed: u64,
    pub targets: Vec<SyntheticTarget>,
}

impl Default for SyntheticSpec {
    /// 200x200, 60 frames, one 40x40 red target moving 3 px/frame diagonally.
    fn default() -> Self {
        let step = 3.0 / std::f64::consts::SQRT_2;
        Self {
            name: "synthetic".into(),
            width: 200,
            height: 200,
            frames: 60,
            background: [40, 110, 60],
            noise_sigma: 6.0,
            seed: 1,
            targets: vec![SyntheticTarget {
                width: 40,
                height: 40,
                color: [210, 40, 40],
                start: [10.0, 10.0],
                motion: Motion::Linear { velocity: [step, step] },
                occluder: None,
            }],
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), SequenceError> {
        let bad = |m: String| Err(SequenceError::InvalidSynthetic(m));
        if self.width == 0 || self.height == 0 || self.frames == 0 {
            return bad("frame size and count must be positive".into());
        }
        if self.targets.is_empty() {
            return bad("at least one target is required".into());
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return bad(format!("noise_sigma must be >= 0, got {}", self.noise_sigma));
        }
        let (fw, fh) = (self.width as i64, self.height as i64);
        for (i, t) in self.targets.iter().enumerate() {
            if t.width == 0 || t.height == 0 {
                return bad(format!("target {} has an empty size", i + 1));
            }
            if t.width as i64 + 2 > fw || t.height as i64 + 2 > fh {
                return bad(format!("target {} is larger than the frame", i + 1));
            }
            if let Motion::Sinusoidal { period, .. } = t.motion {
                if !(period.is_finite() && period != 0.0) {
                    return bad(format!("target {} has a zero sinusoid period", i + 1));
                }
            }
            for k in 0..self.frames {
                if t.occluder.as_ref().is_some_and(|o| o.active(k)) {
                    continue;
                }
                let (x, y) = t.position(k);
                if x < 1 || y < 1 || x + t.width as i64 > fw - 1 || y + t.height as i64 > fh - 1 {
                    return bad(format!("target {} leaves the frame at frame {}", i + 1, k + 1));
                }
            }
        }
        Ok(())
    }
}

/// Frames held in memory plus their exact ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSequence {
    pub frames: Vec<RgbImage>,
    pub spec: SequenceSpec,
}

fn fill_rect(img: &mut RgbImage, x: i64, y: i64, w: u32, h: u32, color: [u8; 3]) {
    let (iw, ih) = (img.width() as i64, img.height() as i64);
    for py in y.max(0)..(y + h as i64).min(ih) {
        for px in x.max(0)..(x + w as i64).min(iw) {
            img.put_pixel(px as u32, py as u32, Rgb(color));
        }
    }
}

/// Renders the sequence. Deterministic for a fixed seed.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticSequence, SequenceError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = (spec.noise_sigma > 0.0).then(|| {
        Normal::new(0.0, spec.noise_sigma).expect("sigma validated as finite and positive")
    });
    let mut frames = Vec::with_capacity(spec.frames);
    let mut ground_truth = vec![Vec::with_capacity(spec.frames); spec.targets.len()];
    for k in 0..spec.frames {
        let mut img = RgbImage::from_pixel(spec.width, spec.height, Rgb(spec.background));
        for (t, gt) in spec.targets.iter().zip(ground_truth.iter_mut()) {
            let (x, y) = t.position(k);
            fill_rect(&mut img, x, y, t.width, t.height, t.color);
            gt.push(BoundingBox {
                x: x as f64,
                y: y as f64,
                width: t.width as f64,
                height: t.height as f64,
            });
        }
        for o in spec.targets.iter().filter_map(|t| t.occluder.as_ref()) {
            if o.active(k) {
                fill_rect(&mut img, o.x as i64, o.y as i64, o.width, o.height, o.color);
            }
        }
        if let Some(dist) = &noise {
            for px in img.pixels_mut() {
                for c in px.0.iter_mut() {
                    let v = *c as f64 + dist.sample(&mut rng);
                    *c = v.round().clamp(0.0, 255.0) as u8;
                }
            }
        }
        frames.push(img);
    }
    let objects = ground_truth.iter().enumerate().map(|(i, gt)| (i as u32 + 1, gt[0])).collect();
    Ok(SyntheticSequence {
        frames,
        spec: SequenceSpec {
            name: spec.name.clone(),
            frames_dir: PathBuf::from("img"),
            frame_pattern: "%04d.png".into(),
            start_index: 1,
            frame_count: spec.frames,
            ground_truth,
            objects,
        },
    })
}

pub fn ground_truth_file_name(object_id: u32) -> String {
    format!("groundtruth_rect.{object_id}.txt")
}

/// Writes frames as PNG, one ground-truth file per object and a sequence
/// file that [`load_sequence`] reads back. Returns the sequence file path.
pub fn write_sequence_dir(dir: &Path, seq: &SyntheticSequence) -> Result<PathBuf, SequenceError> {
    let frames_dir = dir.join(&seq.spec.frames_dir);
    fs::create_dir_all(&frames_dir).map_err(io_err(&frames_dir))?;
    let pattern = FramePattern::parse(&seq.spec.frame_pattern)?;
    for (k, frame) in seq.frames.iter().enumerate() {
        let path = frames_dir.join(pattern.format(seq.spec.start_index + k));
        frame.save(&path).map_err(|source| SequenceError::Image { path, source })?;
    }
    let mut gt_files = Vec::new();
    for ((id, _), boxes) in seq.spec.objects.iter().zip(&seq.spec.ground_truth) {
        let name = ground_truth_file_name(*id);
        let path = dir.join(&name);
        fs::write(&path, format_ground_truth(boxes)).map_err(io_err(&path))?;
        gt_files.push(PathBuf::from(name));
    }
    let file = SequenceFile {
        name: seq.spec.name.clone(),
        frames_dir: seq.spec.frames_dir.clone(),
        frame_pattern: seq.spec.frame_pattern.clone(),
        start_index: seq.spec.start_index,
        frame_count: Some(seq.frames.len()),
        ground_truth: gt_files,
    };
    let path = dir.join(SEQUENCE_FILE);
    let text = toml::to_string(&file).expect("sequence file serializes");
    fs::write(&path, text).map_err(io_err(&path))?;
    Ok(path)
}

/// One CSV row: one object on one frame. Boxes are 0-based pixels; ground
/// truth columns are empty past the end of the annotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame: usize,
    pub id: u32,
    pub pred_x: f64,
    pub pred_y: f64,
    pub pred_w: f64,
    pub pred_h: f64,
    pub gt_x: Option<f64>,
    pub gt_y: Option<f64>,
    pub gt_w: Option<f64>,
    pub gt_h: Option<f64>,
    pub iou: Option<f64>,
    pub center_error: Option<f64>,
    pub fitness: f64,
    pub ms: f64,
}

/// Rows ordered by frame, then object. `frame_times` covers frames 2..N.
pub fn build_records(
    trajectories: &[Trajectory],
    ground_truth: &[Vec<BoundingBox>],
    frame_times: &[std::time::Duration],
) -> Vec<FrameRecord> {
    let frames = trajectories.iter().map(|t| t.boxes.len()).max().unwrap_or(0);
    let mut rows = Vec::with_capacity(frames * trajectories.len());
    for k in 0..frames {
        let ms = if k == 0 {
            0.0
        } else {
            frame_times.get(k - 1).map_or(0.0, |d| d.as_secs_f64() * 1e3)
        };
        for (obj, traj) in trajectories.iter().enumerate() {
            let Some(pred) = traj.boxes.get(k) else { continue };
            let gt = ground_truth.get(obj).and_then(|g| g.get(k));
            rows.push(FrameRecord {
                frame: k + 1,
                id: traj.object_id,
                pred_x: pred.x,
                pred_y: pred.y,
                pred_w: pred.width,
                pred_h: pred.height,
                gt_x: gt.map(|g| g.x),
                gt_y: gt.map(|g| g.y),
                gt_w: gt.map(|g| g.width),
                gt_h: gt.map(|g| g.height),
                iou: gt.map(|g| metrics::iou(pred, g)),
                center_error: gt.map(|g| metrics::center_error(pred, g)),
                fitness: traj.fitness[k],
                ms,
            });
        }
    }
    rows
}

/// JSON summary of a run; `config` echoes every setting needed to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub sequence: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub frames: usize,
    pub evaluations_per_object_frame: usize,
    pub summary: RunSummary,
}

const PALETTE: [[u8; 3]; 6] =
    [[255, 0, 0], [0, 255, 0], [0, 0, 255], [255, 255, 0], [255, 0, 255], [0, 255, 255]];

/// Box outline color for the `index`-th object: red, green, blue, ...
pub fn object_color(index: usize) -> [u8; 3] {
    PALETTE[index % PALETTE.len()]
}

/// Draws a 2 px outline of `bbox`, clipped to the image.
pub fn draw_box(img: &mut RgbImage, bbox: &BoundingBox, color: [u8; 3]) {
    let x0 = bbox.x.round() as i64;
    let y0 = bbox.y.round() as i64;
    let x1 = (bbox.x + bbox.width).round() as i64 - 1;
    let y1 = (bbox.y + bbox.height).round() as i64 - 1;
    let (w, h) = (img.width() as i64, img.height() as i64);
    let mut put = |x: i64, y: i64| {
        if (0..w).contains(&x) && (0..h).contains(&y) {
            img.put_pixel(x as u32, y as u32, Rgb(color));
        }
    };
    for t in 0..2 {
        for x in x0..=x1 {
            put(x, y0 + t);
            put(x, y1 - t);
        }
        for y in y0..=y1 {
            put(x0 + t, y);
            put(x1 - t, y);
        }
    }
}

/// Frames to annotate alongside the trajectories drawn on them.
pub struct Annotations<'a> {
    pub frames: Box<dyn Iterator<Item = Result<RgbImage, SequenceError>> + 'a>,
    pub trajectories: &'a [Trajectory],
}

/// Paths written by [`write_outputs`].
#[derive(Debug, Clone, PartialEq)]
pub struct WrittenFiles {
    pub frames_csv: PathBuf,
    pub summary_json: PathBuf,
    pub success_csv: PathBuf,
    pub precision_csv: PathBuf,
    pub annotated: Vec<PathBuf>,
}

fn write_csv<T: Serialize>(
    path: &Path,
    rows: impl IntoIterator<Item = T>,
) -> Result<(), SequenceError> {
    let csv_err = |source| SequenceError::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub threshold: f64,
    pub fraction: f64,
}

pub fn write_outputs(
    out_dir: &Path,
    report: &RunReport,
    records: &[FrameRecord],
    annotations: Option<Annotations<'_>>,
) -> Result<WrittenFiles, SequenceError> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let frames_csv = out_dir.join(FRAMES_CSV);
    write_csv(&frames_csv, records)?;

    let summary_json = out_dir.join(SUMMARY_JSON);
    let json = serde_json::to_string_pretty(report)
        .map_err(|source| SequenceError::Json { path: summary_json.clone(), source })?;
    fs::write(&summary_json, json).map_err(io_err(&summary_json))?;

    let curves = &report.summary.curves;
    let success_csv = out_dir.join(SUCCESS_CSV);
    write_csv(
        &success_csv,
        curves.success.iter().enumerate().map(|(i, &fraction)| CurvePoint {
            threshold: metrics::success_threshold(i),
            fraction,
        }),
    )?;
    let precision_csv = out_dir.join(PRECISION_CSV);
    write_csv(
        &precision_csv,
        curves
            .precision
            .iter()
            .enumerate()
            .map(|(i, &fraction)| CurvePoint { threshold: i as f64, fraction }),
    )?;

    let mut annotated = Vec::new();
    if let Some(ann) = annotations {
        let dir = out_dir.join(ANNOTATION_DIR);
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        for (k, frame) in ann.frames.enumerate() {
            let mut img = frame?;
            for (i, traj) in ann.trajectories.iter().enumerate() {
                if let Some(b) = traj.boxes.get(k) {
                    draw_box(&mut img, b, object_color(i));
                }
            }
            let path = dir.join(format!("{:04}.png", k + 1));
            img.save(&path)
                .map_err(|source| SequenceError::Image { path: path.clone(), source })?;
            annotated.push(path);
        }
    }
    Ok(WrittenFiles { frames_csv, summary_json, success_csv, precision_csv, annotated })
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, SequenceError> {
    let csv_err = |source| SequenceError::Csv { path: path.to_path_buf(), source };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().collect::<Result<Vec<T>, _>>().map_err(csv_err)
}

pub fn read_frame_records(path: &Path) -> Result<Vec<FrameRecord>, SequenceError> {
    read_csv(path)
}

pub fn read_curve(path: &Path) -> Result<Vec<CurvePoint>, SequenceError> {
    read_csv(path)
}

pub fn read_report(path: &Path) -> Result<RunReport, SequenceError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text)
        .map_err(|source| SequenceError::Json { path: path.to_path_buf(), source })
}
