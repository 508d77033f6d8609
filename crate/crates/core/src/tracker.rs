//! Detection-free single/multi-object tracking.
//!
//! Every object owns an independent EO sub-population searching the 2-D
//! position of its box center. The search window is the previous best
//! center `± min(width, height)` clipped to the frame, and the previous best
//! center is injected as the first agent. Objects never share information, so
//! they can be searched concurrently with results identical to a sequential
//! pass.
//!
//! Positions are kept as box centers in working-resolution coordinates
//! (original coordinates times the object's scale). Boxes handed back to
//! callers are top-left/size in original coordinates.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use image::RgbImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::color::{self, HsvImage};
use crate::eo::{self, Bounds, EoError, EoParams};
use crate::feature::{
    self, fitness_at, BoundingBox, FeatureError, ObjectModel, DEFAULT_RESIZE_SCALE,
    DEFAULT_RESIZE_THRESHOLD,
};

#[derive(Debug, Error)]
pub enum TrackError {
    #[error("no objects to track")]
    NoObjects,
    #[error("duplicate object id {0}")]
    DuplicateId(u32),
    #[error("initial box of object {id} does not overlap the frame")]
    BoxOutsideFrame { id: u32 },
    #[error("object {id}: {source}")]
    Model { id: u32, source: FeatureError },
    #[error("frame {index} is {got:?}, expected {expected:?}")]
    FrameSize { index: usize, expected: (u32, u32), got: (u32, u32) },
    #[error("failed to read frame {index}: {source}")]
    Frame { index: usize, source: Box<dyn std::error::Error + Send + Sync> },
    #[error("sequence needs at least 2 frames, got {0}")]
    TooFewFrames(usize),
    #[error("invalid resize scale {0}: must lie in (0, 1]")]
    InvalidResizeScale(f64),
    #[error("invalid resize threshold {0}")]
    InvalidResizeThreshold(f64),
    #[error(transparent)]
    Optimizer(#[from] EoError),
}

/// Tracker settings. `Default` is the multi-object preset (n = 14, 3 iterations).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerConfig {
    pub population_size: usize,
    pub iterations: usize,
    pub a1: f64,
    pub a2: f64,
    pub gp: f64,
    pub v: f64,
    pub resize_threshold: f64,
    pub resize_scale: f64,
    /// Low-resolution mode (EO_LR): downscale objects at or above the size threshold.
    pub lower_resolution: bool,
    pub rng_seed: Option<u64>,
    /// Search objects concurrently when built with the `parallel` feature.
    pub parallel: bool,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self::mot()
    }
}

impl TrackerConfig {
    /// Multi-object preset: n = 14, 3 iterations.
    pub fn mot() -> Self {
        Self {
            population_size: 14,
            iterations: 3,
            a1: 2.0,
            a2: 1.0,
            gp: 0.5,
            v: 1.0,
            resize_threshold: DEFAULT_RESIZE_THRESHOLD,
            resize_scale: DEFAULT_RESIZE_SCALE,
            lower_resolution: false,
            rng_seed: None,
            parallel: true,
        }
    }

    /// Single-object preset: n = 16, 4 iterations.
    pub fn sot() -> Self {
        Self { population_size: 16, iterations: 4, ..Self::mot() }
    }

    /// Preset chosen by object count.
    pub fn preset_for(objects: usize) -> Self {
        if objects <= 1 {
            Self::sot()
        } else {
            Self::mot()
        }
    }

    pub fn eo_params(&self, seed: u64) -> EoParams {
        EoParams {
            population_size: self.population_size,
            max_iterations: self.iterations,
            a1: self.a1,
            a2: self.a2,
            generation_probability: self.gp,
            volume: self.v,
            rng_seed: Some(seed),
        }
    }

    pub fn validate(&self) -> Result<(), TrackError> {
        self.eo_params(0).validate()?;
        if !(self.resize_scale > 0.0 && self.resize_scale <= 1.0) {
            return Err(TrackError::InvalidResizeScale(self.resize_scale));
        }
        if !(self.resize_threshold.is_finite() && self.resize_threshold > 0.0) {
            return Err(TrackError::InvalidResizeThreshold(self.resize_threshold));
        }
        Ok(())
    }

    /// Fitness evaluations spent per object per tracked frame.
    pub fn evaluations_per_object(&self) -> usize {
        self.population_size * self.iterations
    }
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of an object's random stream, derived from the run seed and the id only.
pub fn object_seed(base_seed: u64, object_id: u32) -> u64 {
    mix64(base_seed ^ mix64(object_id as u64))
}

/// Mutable tracking state carried between frames.
#[derive(Debug, Clone)]
pub struct TrackState {
    pub models: Vec<ObjectModel>,
    pub frame_index: usize,
    pub frame_size: (u32, u32),
    pub seed: u64,
    rngs: Vec<ChaCha8Rng>,
}

impl TrackState {
    pub fn working_scales(&self) -> Vec<f64> {
        self.models.iter().map(|m| m.scale).collect()
    }
}

/// One object's result for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectEstimate {
    pub object_id: u32,
    /// Original-resolution box.
    pub bbox: BoundingBox,
    pub fitness: f64,
    pub evaluations: usize,
    /// Working-resolution center.
    pub center: (f64, f64),
    pub bounds: Bounds,
}

/// Per-object output of a tracking run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub object_id: u32,
    pub scale: f64,
    pub boxes: Vec<BoundingBox>,
    pub fitness: Vec<f64>,
    pub eval_counts: Vec<usize>,
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct TrackRun {
    pub trajectories: Vec<Trajectory>,
    /// Tracking time of frames 2..N (frame 1 is initialization).
    pub frame_times: Vec<Duration>,
    pub seed: u64,
}

/// HSV working frames keyed by scale, built once per distinct scale.
struct WorkingFrames {
    frames: HashMap<u64, HsvImage>,
}

impl WorkingFrames {
    fn build(frame: &RgbImage, scales: impl IntoIterator<Item = f64>) -> Self {
        let mut frames = HashMap::new();
        for scale in scales {
            frames.entry(scale.to_bits()).or_insert_with(|| {
                if scale == 1.0 {
                    HsvImage::from_rgb(frame)
                } else {
                    HsvImage::from_rgb(&color::downscale(frame, scale))
                }
            });
        }
        Self { frames }
    }

    fn get(&self, scale: f64) -> &HsvImage {
        &self.frames[&scale.to_bits()]
    }
}

/// Initializes one model per box on the first frame.
pub fn init_objects(
    first_frame: &RgbImage,
    initial_boxes: &[(u32, BoundingBox)],
    config: &TrackerConfig,
) -> Result<TrackState, TrackError> {
    config.validate()?;
    if initial_boxes.is_empty() {
        return Err(TrackError::NoObjects);
    }
    let (fw, fh) = first_frame.dimensions();
    let mut seen = std::collections::HashSet::new();
    let mut scales = Vec::with_capacity(initial_boxes.len());
    for (id, bbox) in initial_boxes {
        if !seen.insert(*id) {
            return Err(TrackError::DuplicateId(*id));
        }
        if !bbox.overlaps_image(fw, fh) {
            return Err(TrackError::BoxOutsideFrame { id: *id });
        }
        let scale = if config.lower_resolution {
            feature::resize_scale_for(
                feature::object_size(bbox.width, bbox.height),
                config.resize_threshold,
                config.resize_scale,
            )
        } else {
            1.0
        };
        scales.push(scale);
    }
    let working = WorkingFrames::build(first_frame, scales.iter().copied());
    let seed = config.rng_seed.unwrap_or_else(rand::random);
    let mut models = Vec::with_capacity(initial_boxes.len());
    let mut rngs = Vec::with_capacity(initial_boxes.len());
    for ((id, bbox), scale) in initial_boxes.iter().zip(scales) {
        let frame = working.get(scale);
        let mut model = ObjectModel::new(*id, frame, bbox, scale)
            .map_err(|source| TrackError::Model { id: *id, source })?;
        let (w, h) = (frame.width() as f64, frame.height() as f64);
        model.current_center =
            (model.current_center.0.clamp(0.0, w), model.current_center.1.clamp(0.0, h));
        models.push(model);
        rngs.push(ChaCha8Rng::seed_from_u64(object_seed(seed, *id)));
    }
    Ok(TrackState { models, frame_index: 0, frame_size: (fw, fh), seed, rngs })
}

/// Search window: current center `± min(box_width, box_height)` on both
/// axes, clipped to `[0, frame_width] x [0, frame_height]`.
pub fn search_bounds(model: &ObjectModel, frame_width: f64, frame_height: f64) -> Bounds {
    let radius = model.box_width.min(model.box_height);
    let (cx, cy) = model.current_center;
    let cx = cx.clamp(0.0, frame_width);
    let cy = cy.clamp(0.0, frame_height);
    Bounds::new(
        vec![(cx - radius).max(0.0), (cy - radius).max(0.0)],
        vec![(cx + radius).min(frame_width), (cy + radius).min(frame_height)],
    )
    .expect("clipped window around an in-frame center is well formed")
}

fn search_object(
    model: &mut ObjectModel,
    rng: &mut ChaCha8Rng,
    frame: &HsvImage,
    config: &TrackerConfig,
) -> Result<ObjectEstimate, EoError> {
    let bounds = search_bounds(model, frame.width() as f64, frame.height() as f64);
    let params = config.eo_params(rng.random());
    let warm = vec![model.current_center.0, model.current_center.1];
    let model_ref = &*model;
    let result =
        eo::optimize(|p| fitness_at(model_ref, frame, (p[0], p[1])), &params, &bounds, &[warm])?;
    let center = (result.best_position[0], result.best_position[1]);
    model.current_center = center;
    Ok(ObjectEstimate {
        object_id: model.id,
        bbox: model.original_box(center),
        fitness: result.best_fitness,
        evaluations: result.evaluations,
        center,
        bounds,
    })
}

/// Locates every object in `frame`, each with its own sub-population.
pub fn track_frame(
    state: &mut TrackState,
    frame: &RgbImage,
    config: &TrackerConfig,
) -> Result<Vec<ObjectEstimate>, TrackError> {
    let index = state.frame_index + 1;
    if frame.dimensions() != state.frame_size {
        return Err(TrackError::FrameSize {
            index,
            expected: state.frame_size,
            got: frame.dimensions(),
        });
    }
    let working = WorkingFrames::build(frame, state.working_scales());
    let jobs = state.models.iter_mut().zip(state.rngs.iter_mut());
    let results: Vec<Result<ObjectEstimate, EoError>> = if config.parallel {
        run_jobs_parallel(jobs.collect(), &working, config)
    } else {
        jobs.map(|(m, r)| search_object(m, r, working.get(m.scale), config)).collect()
    };
    state.frame_index = index;
    results.into_iter().map(|r| r.map_err(TrackError::from)).collect()
}

#[cfg(feature = "parallel")]
fn run_jobs_parallel(
    jobs: Vec<(&mut ObjectModel, &mut ChaCha8Rng)>,
    working: &WorkingFrames,
    config: &TrackerConfig,
) -> Vec<Result<ObjectEstimate, EoError>> {
    use rayon::prelude::*;
    jobs.into_par_iter().map(|(m, r)| search_object(m, r, working.get(m.scale), config)).collect()
}

#[cfg(not(feature = "parallel"))]
fn run_jobs_parallel(
    jobs: Vec<(&mut ObjectModel, &mut ChaCha8Rng)>,
    working: &WorkingFrames,
    config: &TrackerConfig,
) -> Vec<Result<ObjectEstimate, EoError>> {
    jobs.into_iter().map(|(m, r)| search_object(m, r, working.get(m.scale), config)).collect()
}

/// One-pass run: initialize on frame 1 (its prediction is the initial box
/// verbatim) and track every following frame. Only the tracking step is
/// timed; decoding is excluded.
pub fn track_sequence<I, E>(
    frames: I,
    initial_boxes: &[(u32, BoundingBox)],
    config: &TrackerConfig,
) -> Result<TrackRun, TrackError>
where
    I: IntoIterator<Item = Result<RgbImage, E>>,
    E: std::error::Error + Send + Sync + 'static,
{
    let mut frames = frames
        .into_iter()
        .enumerate()
        .map(|(i, f)| f.map_err(|e| TrackError::Frame { index: i + 1, source: Box::new(e) }));
    let first = frames.next().ok_or(TrackError::TooFewFrames(0))??;
    let mut state = init_objects(&first, initial_boxes, config)?;
    drop(first);
    let mut trajectories: Vec<Trajectory> = initial_boxes
        .iter()
        .zip(&state.models)
        .map(|((id, bbox), model)| Trajectory {
            object_id: *id,
            scale: model.scale,
            boxes: vec![*bbox],
            fitness: vec![0.0],
            eval_counts: vec![0],
        })
        .collect();
    let mut frame_times = Vec::new();
    for frame in frames {
        let frame = frame?;
        let start = Instant::now();
        let estimates = track_frame(&mut state, &frame, config)?;
        frame_times.push(start.elapsed());
        for (traj, est) in trajectories.iter_mut().zip(estimates) {
            traj.boxes.push(est.bbox);
            traj.fitness.push(est.fitness);
            traj.eval_counts.push(est.evaluations);
        }
    }
    if frame_times.is_empty() {
        return Err(TrackError::TooFewFrames(1));
    }
    Ok(TrackRun { trajectories, frame_times, seed: state.seed })
}
