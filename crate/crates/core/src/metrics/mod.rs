//! Full-reference similarity metrics.
//!
//! Every metric maps a `(reference, test)` pair of equally sized images to a
//! scalar. MSE is a distance (0 for identical images); the others are
//! similarities that peak at identity (PSNR peaks at `+inf`).

mod cwssim;
mod error;
mod normalize;
mod ssim;
mod vif;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::image::GrayImage;
use crate::scalar::{compensated_sum, Real};

pub use cwssim::{cw_ssim, CwSsimParams};
pub use error::MetricError;
pub use normalize::normalize_series;
pub use ssim::{local_moments, ms_ssim, ssim, LocalMoments, MsSsimParams, SsimParams, DEFAULT_MS_SSIM_WEIGHTS};
pub use vif::{vif, VifParams};

/// Metric identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Mse,
    Psnr,
    Ssim,
    #[serde(rename = "msssim")]
    MsSsim,
    #[serde(rename = "cwssim")]
    CwSsim,
    Vif,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::Mse,
        Metric::Psnr,
        Metric::Ssim,
        Metric::MsSsim,
        Metric::CwSsim,
        Metric::Vif,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Mse => "mse",
            Metric::Psnr => "psnr",
            Metric::Ssim => "ssim",
            Metric::MsSsim => "msssim",
            Metric::CwSsim => "cwssim",
            Metric::Vif => "vif",
        }
    }

    /// `false` only for MSE, where larger means less similar.
    pub fn higher_is_more_similar(self) -> bool {
        !matches!(self, Metric::Mse)
    }

    /// Value of `metric(X, X)`.
    pub fn identity_value(self) -> f64 {
        match self {
            Metric::Mse => 0.0,
            Metric::Psnr => f64::INFINITY,
            _ => 1.0,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "mse" => Ok(Metric::Mse),
            "psnr" | "npsnr" => Ok(Metric::Psnr),
            "ssim" => Ok(Metric::Ssim),
            "msssim" => Ok(Metric::MsSsim),
            "cwssim" => Ok(Metric::CwSsim),
            "vif" | "vifp" => Ok(Metric::Vif),
            _ => Err(MetricError::UnknownMetric(s.to_string())),
        }
    }
}

/// Parses a comma-separated metric list such as `"ssim,cwssim"`.
pub fn parse_metric_list(s: &str) -> Result<Vec<Metric>, MetricError> {
    s.split(',').filter(|t| !t.trim().is_empty()).map(|t| t.trim().parse()).collect()
}

/// Per-location score grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMap<T> {
    pub width: usize,
    pub height: usize,
    pub data: Vec<T>,
}

impl<T: Real> ScoreMap<T> {
    pub fn mean(&self) -> T {
        compensated_sum(&self.data) / T::from_usize_lossy(self.data.len())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityScore<T> {
    pub metric: Metric,
    pub value: T,
    /// Local score map (SSIM and CW-SSIM only).
    pub map: Option<ScoreMap<T>>,
}

impl<T> SimilarityScore<T> {
    fn scalar(metric: Metric, value: T) -> Self {
        Self {
            metric,
            value,
            map: None,
        }
    }
}

/// `(1/N) Σ (x_i − y_i)²`.
pub fn mse<T: Real>(reference: &GrayImage<T>, test: &GrayImage<T>) -> Result<SimilarityScore<T>, MetricError> {
    reference.check_same_dims(test)?;
    let sq: Vec<T> = reference
        .data()
        .iter()
        .zip(test.data())
        .map(|(&a, &b)| (a - b) * (a - b))
        .collect();
    Ok(SimilarityScore::scalar(
        Metric::Mse,
        compensated_sum(&sq) / T::from_usize_lossy(sq.len()),
    ))
}

/// Default PSNR peak value for 8-bit data.
pub const DEFAULT_PEAK: f64 = 255.0;

/// `10·log10(peak² / MSE)`; `+inf` when the images are identical.
pub fn psnr<T: Real>(reference: &GrayImage<T>, test: &GrayImage<T>, peak: T) -> Result<SimilarityScore<T>, MetricError> {
    if !(peak > T::zero() && peak.is_finite()) {
        return Err(MetricError::BadParams("psnr peak must be positive".into()));
    }
    let m = mse(reference, test)?.value;
    let value = if m == T::zero() {
        T::infinity()
    } else {
        T::lit(10.0) * (peak * peak / m).log10()
    };
    Ok(SimilarityScore::scalar(Metric::Psnr, value))
}

/// Parameters for every metric, with dispatch by [`Metric`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricConfig {
    pub psnr_peak: f64,
    pub ssim: SsimParams,
    pub ms_ssim: MsSsimParams,
    pub cw_ssim: CwSsimParams,
    pub vif: VifParams,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            psnr_peak: DEFAULT_PEAK,
            ssim: SsimParams::default(),
            ms_ssim: MsSsimParams::default(),
            cw_ssim: CwSsimParams::default(),
            vif: VifParams::default(),
        }
    }
}

impl MetricConfig {
    /// Copy with the multi-scale depths (MS-SSIM scales, pyramid levels,
    /// VIF channels) reduced as far as needed for a `width × height` input.
    /// Depths are never increased.
    pub fn fitted(&self, width: usize, height: usize) -> Self {
        let mut out = self.clone();
        let side = width.min(height);
        while out.ms_ssim.scales() > 1 && side < out.ms_ssim.min_side() {
            out.ms_ssim = out.ms_ssim.truncated(out.ms_ssim.scales() - 1);
        }
        if let Some(p) = out.cw_ssim.pyramid.fit_levels(width, height) {
            out.cw_ssim.pyramid = p;
        }
        while out.vif.scales > 1 && side < out.vif.min_side() {
            out.vif.scales -= 1;
        }
        out
    }

    pub fn evaluate<T: Real>(
        &self,
        metric: Metric,
        reference: &GrayImage<T>,
        test: &GrayImage<T>,
    ) -> Result<SimilarityScore<T>, MetricError> {
        match metric {
            Metric::Mse => mse(reference, test),
            Metric::Psnr => psnr(reference, test, T::lit(self.psnr_peak)),
            Metric::Ssim => ssim(reference, test, &self.ssim),
            Metric::MsSsim => ms_ssim(reference, test, &self.ms_ssim),
            Metric::CwSsim => cw_ssim(reference, test, &self.cw_ssim),
            Metric::Vif => vif(reference, test, &self.vif),
        }
    }
}
