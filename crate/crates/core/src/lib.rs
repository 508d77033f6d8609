//! Detection-free visual tracking of one or more objects with the
//! Equilibrium Optimizer.
//!
//! Each target is modeled by a kernel color-weighted HSV histogram taken on
//! the first frame. On every following frame an independent EO population
//! per object searches the box center that minimizes the Bhattacharyya
//! distance to that template. Large objects can be tracked on frames
//! downscaled by 1/3 (the low-resolution mode) for speed.
//!
//! Modules:
//! * [`eo`]: the generic optimizer.
//! * [`color`], [`feature`]: HSV images, histograms, fitness.
//! * [`tracker`]: per-frame search and sequence runs.
//! * [`metrics`]: IoU, center error, OPE curves, FN rate, FPS.
//! * [`sequence`]: OTB-style loading, synthetic sequences, run outputs.

pub mod color;
pub mod eo;
pub mod feature;
pub mod metrics;
pub mod sequence;
pub mod tracker;

pub use eo::{optimize, Bounds, EoParams, EoResult};
pub use feature::{BoundingBox, KernelHistogram, ObjectModel};
pub use image;
pub use tracker::{track_sequence, TrackRun, TrackerConfig, Trajectory};
