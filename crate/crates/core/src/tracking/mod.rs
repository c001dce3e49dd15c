//! Landmark trackers and similarity-triggered re-initialization.
//!
//! Trackers are stepped one frame at a time so that the reset wrapper can
//! decide, per frame, whether to step them or snap them back to the initial
//! annotation.

mod meanshift;
mod ncc;
mod reset;

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::image::{GrayImage, Landmark};
use crate::metrics::MetricError;
use crate::scalar::compensated_sum;
use crate::sequence::Sequence;

pub use meanshift::{MeanShiftConfig, MeanShiftTracker};
pub use ncc::{NccConfig, NccTracker};
pub use reset::{calibrate_tau, similarity_trace, track_with_reset, Drift, Drifted, ResetConfig};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrackError {
    #[error("template for landmark {landmark} has zero variance")]
    ZeroVarianceTemplate { landmark: usize },
    #[error("histogram for landmark {landmark} at frame {frame} is empty")]
    EmptyHistogram { landmark: usize, frame: usize },
    #[error("landmark {landmark} at ({x:.2},{y:.2}) leaves no room for its ROI in a {width}x{height} frame")]
    LandmarkOutside {
        landmark: usize,
        x: f64,
        y: f64,
        width: usize,
        height: usize,
    },
    #[error("invalid tracker config: {0}")]
    BadConfig(String),
    #[error("expected {expected} {what}, found {found}")]
    CountMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("no landmarks to track")]
    NoLandmarks,
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// A frame-by-frame landmark tracker with a fixed frame-0 model.
pub trait Tracker {
    /// Builds the target model from `reference` at `init` and resets state.
    fn start(&mut self, reference: &GrayImage<f64>, init: &[Landmark]) -> Result<(), TrackError>;

    /// Advances to `frame` (index `t`) from the current estimates.
    fn step(&mut self, t: usize, frame: &GrayImage<f64>) -> Result<(), TrackError>;

    /// Returns every landmark, and any scale state, to the initial annotation.
    fn reset(&mut self);

    fn estimates(&self) -> &[Landmark];

    /// Whether the last step had to shrink its search region at the border.
    fn clamped(&self) -> bool {
        false
    }
}

impl<Tr: Tracker + ?Sized> Tracker for Box<Tr> {
    fn start(&mut self, reference: &GrayImage<f64>, init: &[Landmark]) -> Result<(), TrackError> {
        (**self).start(reference, init)
    }

    fn step(&mut self, t: usize, frame: &GrayImage<f64>) -> Result<(), TrackError> {
        (**self).step(t, frame)
    }

    fn reset(&mut self) {
        (**self).reset()
    }

    fn estimates(&self) -> &[Landmark] {
        (**self).estimates()
    }

    fn clamped(&self) -> bool {
        (**self).clamped()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackerKind {
    Ncc,
    #[serde(rename = "meanshift")]
    MeanShift,
}

impl TrackerKind {
    pub fn name(self) -> &'static str {
        match self {
            TrackerKind::Ncc => "ncc",
            TrackerKind::MeanShift => "meanshift",
        }
    }
}

impl std::str::FromStr for TrackerKind {
    type Err = TrackError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "ncc" => Ok(TrackerKind::Ncc),
            "meanshift" => Ok(TrackerKind::MeanShift),
            _ => Err(TrackError::BadConfig(format!("unknown tracker {s:?}"))),
        }
    }
}

impl std::fmt::Display for TrackerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackResult {
    /// `estimates[t][k]` is landmark `k` at frame `t`.
    pub estimates: Vec<Vec<Landmark>>,
    pub reset_events: Vec<usize>,
    /// Per-frame similarity to the reference (reset-wrapped runs only).
    pub similarity_trace: Option<Vec<f64>>,
    /// Frames where a search region was shrunk at the image border.
    pub clamped_frames: Vec<usize>,
    /// Threshold in force (reset-wrapped runs only).
    pub tau: Option<f64>,
}

impl TrackResult {
    /// CSV with one row per (frame, landmark).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("frame,landmark_id,x_px,y_px,reset_fired,similarity_value\n");
        for (t, row) in self.estimates.iter().enumerate() {
            let fired = u8::from(self.reset_events.binary_search(&t).is_ok());
            let sim = match &self.similarity_trace {
                Some(trace) => crate::harness::fmt_value(trace[t]),
                None => String::new(),
            };
            for (k, l) in row.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{t},{k},{},{},{fired},{sim}",
                    crate::harness::fmt_value(l.x),
                    crate::harness::fmt_value(l.y)
                );
            }
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> io::Result<()> {
        std::fs::write(path, self.to_csv())
    }
}

/// Runs a tracker over every frame: frame 0 is the initial annotation and
/// each later frame is one step.
pub fn track<Tr: Tracker + ?Sized>(
    tracker: &mut Tr,
    seq: &Sequence<f64>,
    init: &[Landmark],
) -> Result<TrackResult, TrackError> {
    tracker.start(&seq.frames()[0], init)?;
    let mut estimates = vec![init.to_vec()];
    let mut clamped_frames = Vec::new();
    for (t, frame) in seq.frames().iter().enumerate().skip(1) {
        tracker.step(t, frame)?;
        if tracker.clamped() {
            clamped_frames.push(t);
        }
        estimates.push(tracker.estimates().to_vec());
    }
    Ok(TrackResult {
        estimates,
        reset_events: Vec::new(),
        similarity_trace: None,
        clamped_frames,
        tau: None,
    })
}

/// Normalized cross-correlation tracking with a fixed frame-0 template.
pub fn ncc_track(seq: &Sequence<f64>, init: &[Landmark], cfg: &NccConfig) -> Result<TrackResult, TrackError> {
    track(&mut NccTracker::new(*cfg)?, seq, init)
}

/// Mean-shift tracking with a fixed frame-0 histogram model.
pub fn mean_shift_track(
    seq: &Sequence<f64>,
    init: &[Landmark],
    cfg: &MeanShiftConfig,
) -> Result<TrackResult, TrackError> {
    track(&mut MeanShiftTracker::new(cfg.clone())?, seq, init)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingError {
    /// Millimetres.
    pub mean: f64,
    /// Population standard deviation, millimetres.
    pub std: f64,
    /// Mean over landmarks of each frame's error, millimetres.
    pub per_frame: Vec<f64>,
}

/// Euclidean distance between estimates and truth, scaled to millimetres.
pub fn tracking_error(
    result: &TrackResult,
    truth: &[Vec<Landmark>],
    pixel_spacing_mm: f64,
) -> Result<TrackingError, TrackError> {
    if result.estimates.len() != truth.len() {
        return Err(TrackError::CountMismatch {
            what: "frames",
            expected: truth.len(),
            found: result.estimates.len(),
        });
    }
    let mut all = Vec::new();
    let mut per_frame = Vec::with_capacity(truth.len());
    for (est, gt) in result.estimates.iter().zip(truth) {
        if est.len() != gt.len() {
            return Err(TrackError::CountMismatch {
                what: "landmarks",
                expected: gt.len(),
                found: est.len(),
            });
        }
        let errs: Vec<f64> = est.iter().zip(gt).map(|(a, b)| a.distance(*b) * pixel_spacing_mm).collect();
        per_frame.push(compensated_sum(&errs) / errs.len().max(1) as f64);
        all.extend(errs);
    }
    if all.is_empty() {
        return Err(TrackError::NoLandmarks);
    }
    let n = all.len() as f64;
    let mean = compensated_sum(&all) / n;
    let sq: Vec<f64> = all.iter().map(|e| (e - mean).powi(2)).collect();
    Ok(TrackingError {
        mean,
        std: (compensated_sum(&sq) / n).sqrt(),
        per_frame,
    })
}

fn check_init(init: &[Landmark], width: usize, height: usize, margin: usize) -> Result<(), TrackError> {
    if init.is_empty() {
        return Err(TrackError::NoLandmarks);
    }
    for (landmark, l) in init.iter().enumerate() {
        let (x, y) = l.rounded();
        let m = margin as isize;
        if x - m < 0 || y - m < 0 || x + m >= width as isize || y + m >= height as isize {
            return Err(TrackError::LandmarkOutside {
                landmark,
                x: l.x,
                y: l.y,
                width,
                height,
            });
        }
    }
    Ok(())
}
