use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fmt_value, pearson, run_trace, HarnessError};
use crate::image::Roi;
use crate::metrics::{normalize_series, Metric, MetricConfig};
use crate::scalar::compensated_sum;
use crate::sequence::Sequence;
use crate::synth::{apply_speckle, make_phantom, PhantomSpec, SpeckleSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEntry {
    pub metric: Metric,
    pub abs_pearson: f64,
    /// Sign of the underlying coefficient (+1 or −1).
    pub sign: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    /// Ranked by `abs_pearson`, descending.
    pub ranking: Vec<CorrelationEntry>,
    /// Metrics for which no coefficient could be computed, with the reason.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub failures: Vec<(Metric, String)>,
}

impl CorrelationReport {
    pub fn abs_pearson(&self, metric: Metric) -> Option<f64> {
        self.ranking.iter().find(|e| e.metric == metric).map(|e| e.abs_pearson)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.ranking).expect("plain data serializes")
    }
}

/// Correlates each metric's normalized trace with the lateral coordinate
/// of the first ground-truth landmark. The reference frame is left out of
/// both series: its self-similarity is the identity value whatever the
/// noise in the other frames.
pub fn run_correlation_study(
    seq: &Sequence<f64>,
    metrics: &[Metric],
    roi: Option<&Roi>,
    config: &MetricConfig,
) -> Result<CorrelationReport, HarnessError> {
    let truth = seq.landmarks().ok_or(HarnessError::MissingTruth)?;
    if truth[0].is_empty() {
        return Err(HarnessError::MissingTruth);
    }
    let keep = |t: &usize| *t != seq.reference_frame();
    let lateral: Vec<f64> = (0..truth.len()).filter(keep).map(|t| truth[t][0].x).collect();
    let trace = run_trace(seq, metrics, roi, config)?;
    let mut ranking = Vec::new();
    let mut failures = Vec::new();
    for (i, &m) in metrics.iter().enumerate() {
        let r = match &trace.normalized[i] {
            Some(n) => pearson(&lateral, &(0..n.len()).filter(keep).map(|t| n[t]).collect::<Vec<_>>()),
            None => Err(HarnessError::ConstantSeries),
        };
        match r {
            Ok(r) => ranking.push(CorrelationEntry {
                metric: m,
                abs_pearson: r.abs(),
                sign: if r < 0.0 { -1 } else { 1 },
            }),
            Err(e) => failures.push((m, e.kind().to_string())),
        }
    }
    ranking.sort_by(|a, b| b.abs_pearson.total_cmp(&a.abs_pearson).then(a.metric.cmp(&b.metric)));
    Ok(CorrelationReport { ranking, failures })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub metric: Metric,
    pub mean_value: f64,
    /// `None` when the metric's column could not be normalized.
    pub normalized_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    /// Alpha-major, metrics in request order.
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    /// Mean values of one metric across the alpha axis.
    pub fn column(&self, metric: Metric) -> Vec<f64> {
        self.rows.iter().filter(|r| r.metric == metric).map(|r| r.mean_value).collect()
    }

    pub fn normalized_column(&self, metric: Metric) -> Option<Vec<f64>> {
        self.rows.iter().filter(|r| r.metric == metric).map(|r| r.normalized_value).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,metric,mean_value,normalized_value\n");
        for r in &self.rows {
            let n = r.normalized_value.map(fmt_value).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{n}", fmt_value(r.alpha), r.metric, fmt_value(r.mean_value));
        }
        out
    }
}

/// Speckles the phantom at each alpha and averages each metric over
/// `seeds` phantom/speckle draws. Draw `s` uses phantom seed `base_seed + s`
/// and the same speckle seed at every alpha, so severity is the only thing
/// that changes along the alpha axis.
pub fn run_noise_sweep(
    spec: &PhantomSpec,
    alphas: &[f64],
    metrics: &[Metric],
    seeds: usize,
    base_seed: u64,
    config: &MetricConfig,
) -> Result<SweepReport, HarnessError> {
    if alphas.is_empty() || metrics.is_empty() || seeds == 0 {
        return Err(HarnessError::BadArgs("sweep needs alphas, metrics and at least one seed".into()));
    }
    let fitted = config.fitted(spec.width, spec.height);
    // values[s][a][m]
    let values = (0..seeds as u64)
        .into_par_iter()
        .map(|s| {
            let seed = base_seed.wrapping_add(s);
            let clean = make_phantom(spec, seed)?;
            alphas
                .iter()
                .map(|&alpha| {
                    let noisy = apply_speckle(&clean, &SpeckleSpec::new(alpha, seed.wrapping_mul(7919).wrapping_add(1)))?;
                    metrics
                        .iter()
                        .map(|&m| Ok(fitted.evaluate(m, &clean, &noisy)?.value))
                        .collect::<Result<Vec<f64>, HarnessError>>()
                })
                .collect::<Result<Vec<_>, HarnessError>>()
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    let mean = |a: usize, m: usize| {
        let col: Vec<f64> = values.iter().map(|v| v[a][m]).collect();
        if col.iter().any(|v| v.is_infinite()) {
            // Identity PSNR: keep the sentinel rather than averaging it.
            col.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        } else {
            compensated_sum(&col) / col.len() as f64
        }
    };
    let means: Vec<Vec<f64>> = (0..metrics.len())
        .map(|m| (0..alphas.len()).map(|a| mean(a, m)).collect())
        .collect();
    let normalized: Vec<Option<Vec<f64>>> = means.iter().map(|col| normalize_series(col).ok()).collect();
    let mut rows = Vec::with_capacity(alphas.len() * metrics.len());
    for (a, &alpha) in alphas.iter().enumerate() {
        for (m, &metric) in metrics.iter().enumerate() {
            rows.push(SweepRow {
                alpha,
                metric,
                mean_value: means[m][a],
                normalized_value: normalized[m].as_ref().map(|n| n[a]),
            });
        }
    }
    Ok(SweepReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::Benchmark;
    use crate::synth::MotionSpec;

    #[test]
    fn zero_amplitude_reports_constant_series_per_metric() {
        let mut b = Benchmark::standard().without_speckle();
        b.motion = MotionSpec::new(0.0, 30.0, 5);
        let seq = b.sequence(0).unwrap();
        let r = run_correlation_study(&seq, &[Metric::Ssim, Metric::Mse], Some(&b.similarity_roi()), &MetricConfig::default())
            .unwrap();
        assert!(r.ranking.is_empty());
        assert_eq!(r.failures.len(), 2);
        assert!(r.failures.iter().all(|(_, k)| k == "constant_series"));
    }

    #[test]
    fn sweep_shape_and_identity() {
        let spec = PhantomSpec::new(64, 64);
        let metrics = [Metric::Mse, Metric::Ssim, Metric::CwSsim];
        let r = run_noise_sweep(&spec, &[0.0], &metrics, 2, 5, &MetricConfig::default()).unwrap();
        assert_eq!(r.rows.len(), 3);
        assert_eq!(r.column(Metric::Mse), vec![0.0]);
        assert!((r.column(Metric::Ssim)[0] - 1.0).abs() < 1e-12);
        assert!(r.rows.iter().all(|row| row.normalized_value.is_none()));
        let r = run_noise_sweep(&spec, &[0.1, 0.5, 0.9], &metrics, 2, 5, &MetricConfig::default()).unwrap();
        assert_eq!(r.rows.len(), 9);
        let mse = r.column(Metric::Mse);
        assert!(mse.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(r.to_csv().lines().count(), 10);
    }

    #[test]
    fn json_ranking_layout() {
        let report = CorrelationReport {
            ranking: vec![
                CorrelationEntry {
                    metric: Metric::CwSsim,
                    abs_pearson: 0.9,
                    sign: -1,
                },
                CorrelationEntry {
                    metric: Metric::Ssim,
                    abs_pearson: 0.5,
                    sign: 1,
                },
            ],
            failures: vec![],
        };
        let v: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(v[0]["metric"], "cwssim");
        assert_eq!(v[0]["abs_pearson"], 0.9);
        assert_eq!(v[1]["sign"], 1);
    }
}
