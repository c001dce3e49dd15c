use std::fmt::Write as _;

use rayon::prelude::*;

use super::{fmt_value, HarnessError};
use crate::image::{crop, Roi};
use crate::metrics::{normalize_series, Metric, MetricConfig};
use crate::sequence::Sequence;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceReport {
    pub metrics: Vec<Metric>,
    pub reference_frame: usize,
    /// `raw[m][t]`: metric `m` at frame `t`.
    pub raw: Vec<Vec<f64>>,
    /// Min-max normalized columns; `None` where normalization was undefined.
    pub normalized: Vec<Option<Vec<f64>>>,
    /// Human-readable notes, one per column that could not be normalized.
    pub notes: Vec<String>,
}

impl TraceReport {
    pub fn frames(&self) -> usize {
        self.raw.first().map_or(0, Vec::len)
    }

    pub fn column(&self, metric: Metric) -> Option<&[f64]> {
        self.metrics.iter().position(|&m| m == metric).map(|i| &self.raw[i][..])
    }

    /// `frame` then a raw and a normalized column per metric. Normalized
    /// cells are empty when the column could not be normalized.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("frame");
        for m in &self.metrics {
            let _ = write!(out, ",{m},{m}_normalized");
        }
        out.push('\n');
        for t in 0..self.frames() {
            let _ = write!(out, "{t}");
            for (raw, norm) in self.raw.iter().zip(&self.normalized) {
                let n = norm.as_ref().map(|n| fmt_value(n[t])).unwrap_or_default();
                let _ = write!(out, ",{},{n}", fmt_value(raw[t]));
            }
            out.push('\n');
        }
        out
    }
}

/// Evaluates each metric between the reference frame and every frame,
/// inside `roi` or over the full frame. Multi-scale depths are fitted to the
/// compared region.
pub fn run_trace(
    seq: &Sequence<f64>,
    metrics: &[Metric],
    roi: Option<&Roi>,
    config: &MetricConfig,
) -> Result<TraceReport, HarnessError> {
    if metrics.is_empty() {
        return Err(HarnessError::BadArgs("no metrics requested".into()));
    }
    let (w, h) = seq.dims();
    if let Some(r) = roi {
        if !r.fits(w, h) {
            return Err(HarnessError::BadArgs(format!("ROI does not fit the {w}x{h} frame")));
        }
    }
    let cut = |f: &crate::image::GrayImage<f64>| match roi {
        Some(r) => crop(f, r),
        None => f.clone(),
    };
    let reference = cut(seq.reference());
    let fitted = config.fitted(reference.width(), reference.height());
    let per_frame = seq
        .frames()
        .par_iter()
        .map(|f| {
            let test = cut(f);
            metrics
                .iter()
                .map(|&m| fitted.evaluate(m, &reference, &test).map(|s| s.value))
                .collect::<Result<Vec<f64>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let raw: Vec<Vec<f64>> = (0..metrics.len())
        .map(|m| per_frame.iter().map(|row| row[m]).collect())
        .collect();
    let mut notes = Vec::new();
    let normalized = metrics
        .iter()
        .zip(&raw)
        .map(|(m, col)| match normalize_series(col) {
            Ok(n) => Some(n),
            Err(e) => {
                notes.push(format!("{m}: not normalized ({e})"));
                None
            }
        })
        .collect();
    Ok(TraceReport {
        metrics: metrics.to_vec(),
        reference_frame: seq.reference_frame(),
        raw,
        normalized,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::GrayImage;

    fn noise(n: usize, seed: u64) -> GrayImage<f64> {
        let mut s = seed.wrapping_add(11);
        GrayImage::from_fn(n, n, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64 * 255.0
        })
    }

    #[test]
    fn single_frame_notes_constant_series() {
        let seq = Sequence::from_frames(vec![noise(64, 1)]).unwrap();
        let r = run_trace(&seq, &[Metric::Ssim], None, &MetricConfig::default()).unwrap();
        assert_eq!(r.frames(), 1);
        assert!(r.normalized[0].is_none());
        assert_eq!(r.notes.len(), 1);
        assert_eq!(r.to_csv(), "frame,ssim,ssim_normalized\n0,1.00000000,\n");
    }

    #[test]
    fn static_sequence_is_identity() {
        let seq = Sequence::from_frames(vec![noise(64, 2); 10]).unwrap();
        let r = run_trace(&seq, &[Metric::Ssim, Metric::CwSsim], None, &MetricConfig::default()).unwrap();
        for col in &r.raw {
            assert!(col.iter().all(|v| (v - 1.0).abs() < 1e-9));
        }
    }

    #[test]
    fn normalized_columns_span_unit_interval() {
        let frames = (0..5).map(|t| noise(64, 3).map(|v| v * (1.0 - 0.1 * t as f64))).collect();
        let seq = Sequence::from_frames(frames).unwrap();
        let r = run_trace(&seq, &[Metric::Mse, Metric::Psnr], None, &MetricConfig::default()).unwrap();
        for n in r.normalized.iter().map(|n| n.as_ref().unwrap()) {
            assert_eq!(n.iter().copied().fold(f64::INFINITY, f64::min), 0.0);
            assert_eq!(n.iter().copied().fold(f64::NEG_INFINITY, f64::max), 1.0);
        }
        assert!(r.to_csv().lines().nth(1).unwrap().contains(",inf,"));
    }
}
