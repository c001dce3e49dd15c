use std::fmt::Write as _;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::{fmt_value, HarnessError};
use crate::scalar::compensated_sum;
use crate::sequence::Sequence;
use crate::tracking::{
    track, track_with_reset, tracking_error, Drift, Drifted, MeanShiftConfig, MeanShiftTracker, NccConfig, NccTracker,
    ResetConfig, TrackResult, Tracker, TrackerKind,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tracker", rename_all = "lowercase")]
pub enum TrackerSetup {
    Ncc(NccConfig),
    #[serde(rename = "meanshift")]
    MeanShift(MeanShiftConfig),
}

impl TrackerSetup {
    pub fn default_for(kind: TrackerKind) -> Self {
        match kind {
            TrackerKind::Ncc => TrackerSetup::Ncc(NccConfig::default()),
            TrackerKind::MeanShift => TrackerSetup::MeanShift(MeanShiftConfig::default()),
        }
    }

    pub fn kind(&self) -> TrackerKind {
        match self {
            TrackerSetup::Ncc(_) => TrackerKind::Ncc,
            TrackerSetup::MeanShift(_) => TrackerKind::MeanShift,
        }
    }

    pub fn build(&self) -> Result<Box<dyn Tracker + Send>, HarnessError> {
        Ok(match self {
            TrackerSetup::Ncc(c) => Box::new(NccTracker::new(*c)?),
            TrackerSetup::MeanShift(c) => Box::new(MeanShiftTracker::new(c.clone())?),
        })
    }

    /// Bare or reset-wrapped run, with the optional drift injected.
    pub fn run(
        &self,
        seq: &Sequence<f64>,
        reset: Option<&ResetConfig>,
        drift: Option<Drift>,
    ) -> Result<TrackResult, HarnessError> {
        let init = seq.landmarks().ok_or(HarnessError::MissingTruth)?[0].clone();
        let mut tracker: Box<dyn Tracker + Send> = match drift {
            Some(d) => Box::new(Drifted::new(self.build()?, d)),
            None => self.build()?,
        };
        Ok(match reset {
            Some(cfg) => track_with_reset(tracker.as_mut(), seq, &init, cfg)?,
            None => track(tracker.as_mut(), seq, &init)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub tracker: TrackerKind,
    pub reset: bool,
    pub mean_mm: f64,
    pub std_mm: f64,
    pub reset_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingReport {
    /// Two rows per tracker: without reset, then with.
    pub summaries: Vec<ArmSummary>,
    /// Per tracker: per-frame error without and with reset, millimetres.
    pub series: Vec<(TrackerKind, Vec<f64>, Vec<f64>)>,
    /// Threshold used by the reset arm of each tracker.
    pub taus: Vec<f64>,
}

impl TrackingReport {
    pub fn summary(&self, tracker: TrackerKind, reset: bool) -> Option<&ArmSummary> {
        self.summaries.iter().find(|s| s.tracker == tracker && s.reset == reset)
    }

    /// Mean of one arm's per-frame error over `frames`.
    pub fn window_mean(&self, tracker: TrackerKind, reset: bool, frames: Range<usize>) -> Option<f64> {
        let (_, bare, with) = self.series.iter().find(|s| s.0 == tracker)?;
        let s = if reset { with } else { bare };
        let w = s.get(frames)?;
        (!w.is_empty()).then(|| compensated_sum(w) / w.len() as f64)
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("tracker,arm,mean_error_mm,std_error_mm,reset_events\n");
        for s in &self.summaries {
            let arm = if s.reset { "with_reset" } else { "without_reset" };
            let _ = writeln!(
                out,
                "{},{arm},{},{},{}",
                s.tracker,
                fmt_value(s.mean_mm),
                fmt_value(s.std_mm),
                s.reset_count
            );
        }
        out
    }

    pub fn series_csv(&self) -> String {
        let mut out = String::from("frame,tracker,error_without_reset_mm,error_with_reset_mm\n");
        for (kind, bare, with) in &self.series {
            for (t, (a, b)) in bare.iter().zip(with).enumerate() {
                let _ = writeln!(out, "{t},{kind},{},{}", fmt_value(*a), fmt_value(*b));
            }
        }
        out
    }
}

/// Runs every tracker twice on the same sequence, bare and reset-wrapped,
/// and scores both against the sequence's ground truth.
pub fn run_tracking_experiment(
    seq: &Sequence<f64>,
    trackers: &[TrackerSetup],
    reset: &ResetConfig,
    drift: Option<Drift>,
) -> Result<TrackingReport, HarnessError> {
    let truth = seq.landmarks().ok_or(HarnessError::MissingTruth)?;
    let spacing = seq.pixel_spacing_mm();
    let mut summaries = Vec::new();
    let mut series = Vec::new();
    let mut taus = Vec::new();
    for setup in trackers {
        let bare = setup.run(seq, None, drift)?;
        let with = setup.run(seq, Some(reset), drift)?;
        let eb = tracking_error(&bare, truth, spacing)?;
        let ew = tracking_error(&with, truth, spacing)?;
        summaries.push(ArmSummary {
            tracker: setup.kind(),
            reset: false,
            mean_mm: eb.mean,
            std_mm: eb.std,
            reset_count: 0,
        });
        summaries.push(ArmSummary {
            tracker: setup.kind(),
            reset: true,
            mean_mm: ew.mean,
            std_mm: ew.std,
            reset_count: with.reset_events.len(),
        });
        series.push((setup.kind(), eb.per_frame, ew.per_frame));
        taus.push(with.tau.unwrap_or(f64::NAN));
    }
    Ok(TrackingReport { summaries, series, taus })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::{GrayImage, Landmark, Roi};

    #[test]
    fn static_sequence_has_zero_error_in_both_arms() {
        let f = GrayImage::from_fn(96, 96, |x, y| if (x as f64 - 48.0).hypot(y as f64 - 48.0) < 5.0 { 200.0 } else { 80.0 });
        let init = Landmark::new(48.0, 48.0);
        let seq = Sequence::new(vec![f; 6], 0.5, 0, Some(vec![vec![init]; 6])).unwrap();
        let setups = [TrackerSetup::default_for(TrackerKind::Ncc), TrackerSetup::default_for(TrackerKind::MeanShift)];
        let reset = ResetConfig::with_tau(Roi::square(init, 32), 0.5);
        let r = run_tracking_experiment(&seq, &setups, &reset, None).unwrap();
        assert_eq!(r.summaries.len(), 4);
        assert!(r.summaries.iter().all(|s| s.mean_mm == 0.0 && s.std_mm == 0.0));
        let csv = r.summary_csv();
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.contains("ncc,without_reset,") && csv.contains("meanshift,with_reset,"));
        assert_eq!(r.series_csv().lines().count(), 13);
    }

    #[test]
    fn missing_truth_is_reported() {
        let seq = Sequence::from_frames(vec![GrayImage::filled(64, 64, 1.0)]).unwrap();
        let reset = ResetConfig::with_tau(Roi::square(Landmark::new(32.0, 32.0), 10), 0.5);
        let err = run_tracking_experiment(&seq, &[TrackerSetup::default_for(TrackerKind::Ncc)], &reset, None).unwrap_err();
        assert_eq!(err.kind(), "missing_ground_truth");
    }
}
