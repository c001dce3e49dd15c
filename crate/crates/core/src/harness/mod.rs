//! Experiment protocols and report emission: similarity traces, correlation
//! with landmark motion, speckle sweeps and paired tracking runs.
//!
//! Every report is a pure function of its inputs; parallel work is collected
//! in input order so outputs are byte-reproducible.

mod experiment;
mod stats;
mod study;
mod trace;

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::image::{Landmark, Roi};
use crate::metrics::MetricError;
use crate::pgm::PgmError;
use crate::sequence::{Sequence, SequenceError};
use crate::synth::{periodic_sequence, Disc, MotionSpec, PhantomSpec, SpeckleSpec, SynthError};
use crate::tracking::TrackError;

pub use experiment::{run_tracking_experiment, ArmSummary, TrackerSetup, TrackingReport};
pub use stats::{pearson, spearman};
pub use study::{run_correlation_study, run_noise_sweep, CorrelationEntry, CorrelationReport, SweepReport, SweepRow};
pub use trace::{run_trace, TraceReport};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Track(#[from] TrackError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
    #[error(transparent)]
    Pgm(#[from] PgmError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("series is constant")]
    ConstantSeries,
    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("series needs at least {needed} values, found {found}")]
    TooShort { needed: usize, found: usize },
    #[error("sequence has no ground-truth landmarks")]
    MissingTruth,
    #[error("{0}")]
    BadArgs(String),
}

impl HarnessError {
    /// Stable machine-readable identifier of the failure class.
    pub fn kind(&self) -> &'static str {
        match self {
            HarnessError::Metric(MetricError::DegenerateReference) => "degenerate_reference",
            HarnessError::Metric(MetricError::ConstantSeries) | HarnessError::ConstantSeries => "constant_series",
            HarnessError::Metric(MetricError::TooSmall { .. }) => "image_too_small",
            HarnessError::Metric(MetricError::Image(_)) => "image_error",
            HarnessError::Metric(MetricError::Pyramid(_)) => "pyramid_error",
            HarnessError::Metric(MetricError::UnknownMetric(_)) => "unknown_metric",
            HarnessError::Metric(_) => "metric_error",
            HarnessError::Track(TrackError::ZeroVarianceTemplate { .. }) => "zero_variance_template",
            HarnessError::Track(TrackError::EmptyHistogram { .. }) => "empty_histogram",
            HarnessError::Track(_) => "tracking_error",
            HarnessError::Synth(SynthError::DiscOutside { .. }) => "disc_outside_frame",
            HarnessError::Synth(_) => "synth_error",
            HarnessError::Sequence(SequenceError::Frame { .. }) | HarnessError::Pgm(_) => "pgm_error",
            HarnessError::Sequence(_) => "manifest_error",
            HarnessError::Io(_) => "io_error",
            HarnessError::LengthMismatch(..) => "length_mismatch",
            HarnessError::TooShort { .. } => "series_too_short",
            HarnessError::MissingTruth => "missing_ground_truth",
            HarnessError::BadArgs(_) => "bad_arguments",
        }
    }
}

/// Fixed-point text with 9 significant digits; `inf`, `-inf`, `nan` for
/// non-finite values.
pub fn fmt_value(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0.00000000".into();
    }
    // Take the exponent after rounding to 9 digits, so 0.9999999999 counts
    // as magnitude 0.
    let sci = format!("{v:.8e}");
    let magnitude: i32 = sci[sci.find('e').expect("exponent") + 1..].parse().expect("integer exponent");
    let decimals = (8 - magnitude).max(0) as usize;
    format!("{v:.decimals$}")
}

/// The periodic-motion benchmark: a point-like bright landmark oscillating
/// laterally over static texture, optionally speckled per frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Benchmark {
    pub phantom: PhantomSpec,
    pub motion: MotionSpec,
    /// `None` for a speckle-free sequence.
    pub speckle_alpha: Option<f64>,
    /// Use the speckle-free render as frame 0.
    pub clean_reference: bool,
    /// Half-size of the square similarity ROI around the landmark's rest
    /// position.
    pub similarity_half: usize,
}

impl Benchmark {
    /// 256×256, radius-3 landmark, amplitude 8 px, period 30, 90 frames,
    /// speckle 0.3, starting at the motion peak.
    pub fn standard() -> Self {
        let phantom = PhantomSpec::new(256, 256).with_disc(Disc::new(Landmark::new(128.0, 128.0), 3.0));
        Self {
            phantom,
            motion: MotionSpec::new(8.0, 30.0, 90).with_phase(FRAC_PI_2),
            speckle_alpha: Some(0.3),
            clean_reference: true,
            similarity_half: 32,
        }
    }

    pub fn without_speckle(mut self) -> Self {
        self.speckle_alpha = None;
        self
    }

    pub fn similarity_roi(&self) -> Roi {
        let rest = self.phantom.landmarks.first().map_or(
            Landmark::new(self.phantom.width as f64 / 2.0, self.phantom.height as f64 / 2.0),
            |d| d.center,
        );
        Roi::square(rest, self.similarity_half)
    }

    /// Speckle seed for `seed`; frame `t` uses this plus `t`.
    pub fn speckle_seed(seed: u64) -> u64 {
        seed.wrapping_mul(1_000_003).wrapping_add(17)
    }

    pub fn sequence(&self, seed: u64) -> Result<Sequence<f64>, HarnessError> {
        let speckle = self.speckle_alpha.map(|a| SpeckleSpec::new(a, Self::speckle_seed(seed)));
        let seq = periodic_sequence(&self.phantom, &self.motion, speckle.as_ref(), seed)?;
        if !(self.clean_reference && speckle.is_some()) {
            return Ok(seq);
        }
        let first = MotionSpec {
            n_frames: 1,
            ..self.motion
        };
        let clean = periodic_sequence(&self.phantom, &first, None, seed)?;
        let mut frames = seq.frames().to_vec();
        frames[0] = clean.frames()[0].clone();
        Ok(Sequence::new(
            frames,
            seq.pixel_spacing_mm(),
            0,
            seq.landmarks().map(|l| l.to_vec()),
        )?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt_value(1.0), "1.00000000");
        assert_eq!(fmt_value(0.5), "0.500000000");
        assert_eq!(fmt_value(-123.456), "-123.456000");
        assert_eq!(fmt_value(0.0012345678912), "0.00123456789");
        assert_eq!(fmt_value(44.15140352195873), "44.1514035");
        assert_eq!(fmt_value(f64::INFINITY), "inf");
        assert_eq!(fmt_value(0.0), "0.00000000");
        assert_eq!(fmt_value(0.99999999999), "1.00000000");
        assert_eq!(fmt_value(-9.9999999999e-3), "-0.0100000000");
        assert_eq!(fmt_value(123456789.6), "123456790");
    }

    #[test]
    fn standard_benchmark_shape() {
        let b = Benchmark::standard();
        let seq = b.sequence(1).unwrap();
        assert_eq!(seq.len(), 90);
        assert_eq!(seq.dims(), (256, 256));
        let truth = seq.landmarks().unwrap();
        assert!((truth[0][0].x - 136.0).abs() < 1e-12);
        assert!((truth[30][0].x - 136.0).abs() < 1e-12);
        // Frame 0 is the clean render; later frames carry speckle.
        let clean = b.clone().without_speckle().sequence(1).unwrap();
        assert_eq!(seq.frames()[0], clean.frames()[0]);
        assert_ne!(seq.frames()[30], clean.frames()[30]);
        assert!(b.similarity_roi().fits(256, 256));
    }

    #[test]
    fn error_kinds_are_stable() {
        assert_eq!(HarnessError::ConstantSeries.kind(), "constant_series");
        assert_eq!(HarnessError::Metric(MetricError::DegenerateReference).kind(), "degenerate_reference");
        assert_eq!(HarnessError::MissingTruth.kind(), "missing_ground_truth");
    }
}
