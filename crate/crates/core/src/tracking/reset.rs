use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{TrackError, TrackResult, Tracker};
use crate::image::{crop, GrayImage, Landmark, Roi};
use crate::metrics::{Metric, MetricConfig};
use crate::scalar::compensated_sum;
use crate::sequence::Sequence;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResetConfig {
    pub metric: Metric,
    /// Reset when the similarity exceeds this. Overrides calibration.
    pub tau: Option<f64>,
    /// Region compared against the reference frame.
    pub similarity_roi: Roi,
    #[serde(default)]
    pub reference_frame: usize,
    /// When `tau` is absent, derive it from the first this-many frames.
    #[serde(default)]
    pub calibration_frames: usize,
    /// Metric parameters; multi-scale depths are fitted to the ROI.
    #[serde(default)]
    pub metrics: MetricConfig,
}

impl ResetConfig {
    pub fn with_tau(similarity_roi: Roi, tau: f64) -> Self {
        Self {
            metric: Metric::CwSsim,
            tau: Some(tau),
            similarity_roi,
            reference_frame: 0,
            calibration_frames: 0,
            metrics: MetricConfig::default(),
        }
    }

    pub fn calibrated(similarity_roi: Roi, calibration_frames: usize) -> Self {
        Self {
            tau: None,
            calibration_frames,
            ..Self::with_tau(similarity_roi, 1.0)
        }
    }

    fn validate(&self, frames: usize) -> Result<(), TrackError> {
        if !self.metric.higher_is_more_similar() {
            return Err(TrackError::BadConfig(format!("{} cannot drive a reset threshold", self.metric)));
        }
        if self.reference_frame >= frames {
            return Err(TrackError::BadConfig(format!(
                "reference frame {} outside {frames} frames",
                self.reference_frame
            )));
        }
        match self.tau {
            // Values above 1 are accepted so a threshold can be made unreachable.
            Some(tau) if !(tau > 0.0 && tau.is_finite()) => {
                Err(TrackError::BadConfig(format!("tau {tau} must be positive")))
            }
            None if self.calibration_frames < 2 => Err(TrackError::BadConfig(
                "either tau or at least 2 calibration frames is required".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// Similarity of every frame's ROI to the reference frame's ROI.
pub fn similarity_trace(seq: &Sequence<f64>, cfg: &ResetConfig) -> Result<Vec<f64>, TrackError> {
    cfg.validate(seq.len())?;
    let roi = &cfg.similarity_roi;
    let (w, h) = seq.dims();
    if !roi.fits(w, h) {
        return Err(TrackError::BadConfig(format!("similarity ROI does not fit the {w}x{h} frame")));
    }
    let metrics = cfg.metrics.fitted(roi.width(), roi.height());
    let reference = crop(&seq.frames()[cfg.reference_frame], roi);
    let trace = seq
        .frames()
        .par_iter()
        .map(|f| metrics.evaluate(cfg.metric, &reference, &crop(f, roi)).map(|s| s.value))
        .collect::<Result<Vec<f64>, _>>()?;
    Ok(trace)
}

/// `max − σ` of the trace over the first `frames` frames, leaving out the
/// reference frame itself (its self-similarity is the identity value and
/// says nothing about the other frames).
pub fn calibrate_tau(trace: &[f64], frames: usize, reference_frame: usize) -> Result<f64, TrackError> {
    let sample: Vec<f64> = trace
        .iter()
        .take(frames)
        .enumerate()
        .filter(|&(t, _)| t != reference_frame)
        .map(|(_, &v)| v)
        .collect();
    if sample.len() < 2 {
        return Err(TrackError::BadConfig(format!(
            "calibration needs 2 non-reference frames, sequence offers {}",
            sample.len()
        )));
    }
    let n = sample.len() as f64;
    let mean = compensated_sum(&sample) / n;
    let var = compensated_sum(&sample.iter().map(|v| (v - mean).powi(2)).collect::<Vec<_>>()) / n;
    let max = sample.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(max - var.sqrt())
}

/// Runs `tracker` under the similarity-triggered reset rule. Before each
/// frame's step the similarity to the reference is computed; above `tau`
/// every landmark is set back to `init` and the tracker is reset instead of
/// stepped.
pub fn track_with_reset<Tr: Tracker + ?Sized>(
    tracker: &mut Tr,
    seq: &Sequence<f64>,
    init: &[Landmark],
    cfg: &ResetConfig,
) -> Result<TrackResult, TrackError> {
    let trace = similarity_trace(seq, cfg)?;
    let tau = match cfg.tau {
        Some(tau) => tau,
        None => calibrate_tau(&trace, cfg.calibration_frames, cfg.reference_frame)?,
    };
    tracker.start(&seq.frames()[0], init)?;
    let mut estimates = Vec::with_capacity(seq.len());
    let mut reset_events = Vec::new();
    let mut clamped_frames = Vec::new();
    for (t, frame) in seq.frames().iter().enumerate() {
        if trace[t] > tau {
            tracker.reset();
            reset_events.push(t);
            estimates.push(init.to_vec());
            continue;
        }
        if t > 0 {
            tracker.step(t, frame)?;
            if tracker.clamped() {
                clamped_frames.push(t);
            }
        }
        estimates.push(tracker.estimates().to_vec());
    }
    Ok(TrackResult {
        estimates,
        reset_events,
        similarity_trace: Some(trace),
        clamped_frames,
        tau: Some(tau),
    })
}

/// A persistent localization bias switched on at one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Drift {
    pub frame: usize,
    pub dx: f64,
    pub dy: f64,
}

/// Wraps a tracker so that, from `drift.frame` on, every reported estimate
/// carries the drift offset. The wrapped tracker cannot see the offset, so
/// only a reset removes it.
#[derive(Debug, Clone)]
pub struct Drifted<Tr> {
    inner: Tr,
    drift: Drift,
    active: bool,
    out: Vec<Landmark>,
}

impl<Tr: Tracker> Drifted<Tr> {
    pub fn new(inner: Tr, drift: Drift) -> Self {
        Self {
            inner,
            drift,
            active: false,
            out: Vec::new(),
        }
    }

    pub fn inner(&self) -> &Tr {
        &self.inner
    }

    fn refresh(&mut self) {
        let (dx, dy) = if self.active { (self.drift.dx, self.drift.dy) } else { (0.0, 0.0) };
        self.out = self.inner.estimates().iter().map(|l| l.offset(dx, dy)).collect();
    }
}

impl<Tr: Tracker> Tracker for Drifted<Tr> {
    fn start(&mut self, reference: &GrayImage<f64>, init: &[Landmark]) -> Result<(), TrackError> {
        self.inner.start(reference, init)?;
        self.active = false;
        self.refresh();
        Ok(())
    }

    fn step(&mut self, t: usize, frame: &GrayImage<f64>) -> Result<(), TrackError> {
        self.inner.step(t, frame)?;
        if t == self.drift.frame {
            self.active = true;
        }
        self.refresh();
        Ok(())
    }

    fn reset(&mut self) {
        self.inner.reset();
        self.active = false;
        self.refresh();
    }

    fn estimates(&self) -> &[Landmark] {
        &self.out
    }

    fn clamped(&self) -> bool {
        self.inner.clamped()
    }
}
