use serde::{Deserialize, Serialize};

use super::{Metric, MetricError, ScoreMap, SimilarityScore};
use crate::image::{downsample2, filter_valid, gaussian_kernel_1d, GrayImage};
use crate::scalar::{compensated_sum, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsimParams {
    pub k1: f64,
    pub k2: f64,
    /// Dynamic range `L` of the intensities.
    pub dynamic_range: f64,
    pub window_size: usize,
    pub window_sigma: f64,
    /// Luminance exponent.
    pub alpha: f64,
    /// Contrast exponent.
    pub beta: f64,
    /// Structure exponent.
    pub gamma: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 255.0,
            window_size: 11,
            window_sigma: 1.5,
            alpha: 1.0,
            beta: 1.0,
            gamma: 1.0,
        }
    }
}

impl SsimParams {
    pub fn validate(&self) -> Result<(), MetricError> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !(positive(self.k1) && positive(self.k2) && positive(self.dynamic_range)) {
            return Err(MetricError::BadParams("k1, k2 and dynamic range must be positive".into()));
        }
        if self.window_size == 0 || self.window_size.is_multiple_of(2) {
            return Err(MetricError::BadParams(format!("window size {} must be odd", self.window_size)));
        }
        if !(positive(self.window_sigma) && positive(self.alpha) && positive(self.beta) && positive(self.gamma)) {
            return Err(MetricError::BadParams("window sigma and exponents must be positive".into()));
        }
        Ok(())
    }

    fn constants(&self) -> (f64, f64, f64) {
        let c1 = (self.k1 * self.dynamic_range).powi(2);
        let c2 = (self.k2 * self.dynamic_range).powi(2);
        (c1, c2, c2 / 2.0)
    }
}

/// Gaussian-weighted local statistics on the valid window grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalMoments<T> {
    pub width: usize,
    pub height: usize,
    pub mu_x: Vec<T>,
    pub mu_y: Vec<T>,
    pub var_x: Vec<T>,
    pub var_y: Vec<T>,
    pub cov: Vec<T>,
}

/// Local means, variances and covariance for every window position that
/// fits inside the image.
pub fn local_moments<T: Real>(
    x: &GrayImage<T>,
    y: &GrayImage<T>,
    window_size: usize,
    window_sigma: f64,
) -> Result<LocalMoments<T>, MetricError> {
    x.check_same_dims(y)?;
    let kernel = gaussian_kernel_1d::<T>(window_size, window_sigma)?;
    let (w, h) = x.dims();
    if w < window_size || h < window_size {
        return Err(MetricError::TooSmall {
            metric: "local window",
            width: w,
            height: h,
            min: window_size,
        });
    }
    // Centering on the global means keeps E[x²] − μ² well conditioned.
    let n = T::from_usize_lossy(w * h);
    let ox = compensated_sum(x.data()) / n;
    let oy = compensated_sum(y.data()) / n;
    let cx: Vec<T> = x.data().iter().map(|&v| v - ox).collect();
    let cy: Vec<T> = y.data().iter().map(|&v| v - oy).collect();
    let xx: Vec<T> = cx.iter().map(|&v| v * v).collect();
    let yy: Vec<T> = cy.iter().map(|&v| v * v).collect();
    let xy: Vec<T> = cx.iter().zip(&cy).map(|(&a, &b)| a * b).collect();

    let (mx, ow, oh) = filter_valid(&cx, w, h, &kernel);
    let (my, _, _) = filter_valid(&cy, w, h, &kernel);
    let (exx, _, _) = filter_valid(&xx, w, h, &kernel);
    let (eyy, _, _) = filter_valid(&yy, w, h, &kernel);
    let (exy, _, _) = filter_valid(&xy, w, h, &kernel);

    let var_x = exx.iter().zip(&mx).map(|(&e, &m)| e - m * m).collect();
    let var_y = eyy.iter().zip(&my).map(|(&e, &m)| e - m * m).collect();
    let cov = exy.iter().zip(mx.iter().zip(&my)).map(|(&e, (&a, &b))| e - a * b).collect();
    Ok(LocalMoments {
        width: ow,
        height: oh,
        mu_x: mx.into_iter().map(|m| m + ox).collect(),
        mu_y: my.into_iter().map(|m| m + oy).collect(),
        var_x,
        var_y,
        cov,
    })
}

/// Power that keeps the sign of a negative base.
#[inline]
fn signed_pow<T: Real>(base: T, exp: T) -> T {
    if exp == T::one() {
        base
    } else if base >= T::zero() {
        base.powf(exp)
    } else {
        -(-base).powf(exp)
    }
}

/// Per-location luminance and contrast·structure terms.
struct SsimTerms<T> {
    width: usize,
    height: usize,
    luminance: Vec<T>,
    contrast_structure: Vec<T>,
}

fn ssim_terms<T: Real>(x: &GrayImage<T>, y: &GrayImage<T>, p: &SsimParams) -> Result<SsimTerms<T>, MetricError> {
    let m = local_moments(x, y, p.window_size, p.window_sigma)?;
    let (c1, c2, c3) = p.constants();
    let (c1, c2, c3) = (T::lit(c1), T::lit(c2), T::lit(c3));
    let (alpha, beta, gamma) = (T::lit(p.alpha), T::lit(p.beta), T::lit(p.gamma));
    let two = T::lit(2.0);
    let n = m.width * m.height;
    let mut luminance = Vec::with_capacity(n);
    let mut contrast_structure = Vec::with_capacity(n);
    for i in 0..n {
        let (mx, my) = (m.mu_x[i], m.mu_y[i]);
        let vx = m.var_x[i].max(T::zero());
        let vy = m.var_y[i].max(T::zero());
        let (sx, sy) = (vx.sqrt(), vy.sqrt());
        let l = (two * mx * my + c1) / (mx * mx + my * my + c1);
        let c = (two * sx * sy + c2) / (vx + vy + c2);
        let s = (m.cov[i] + c3) / (sx * sy + c3);
        luminance.push(signed_pow(l, alpha));
        contrast_structure.push(signed_pow(c, beta) * signed_pow(s, gamma));
    }
    Ok(SsimTerms {
        width: m.width,
        height: m.height,
        luminance,
        contrast_structure,
    })
}

fn check_size(metric: &'static str, x: &GrayImage<impl Real>, min: usize) -> Result<(), MetricError> {
    let (w, h) = x.dims();
    if w.min(h) < min {
        return Err(MetricError::TooSmall {
            metric,
            width: w,
            height: h,
            min,
        });
    }
    Ok(())
}

/// Mean structural similarity with Gaussian-weighted local statistics.
/// Only window positions fully inside the image contribute.
pub fn ssim<T: Real>(x: &GrayImage<T>, y: &GrayImage<T>, p: &SsimParams) -> Result<SimilarityScore<T>, MetricError> {
    p.validate()?;
    x.check_same_dims(y)?;
    check_size("ssim", x, p.window_size)?;
    let t = ssim_terms(x, y, p)?;
    let data: Vec<T> = t
        .luminance
        .iter()
        .zip(&t.contrast_structure)
        .map(|(&l, &cs)| l * cs)
        .collect();
    let map = ScoreMap {
        width: t.width,
        height: t.height,
        data,
    };
    Ok(SimilarityScore {
        metric: Metric::Ssim,
        value: map.mean(),
        map: Some(map),
    })
}

/// Five-scale exponents, normalized to sum to one.
pub const DEFAULT_MS_SSIM_WEIGHTS: [f64; 5] = [
    0.0448 / 1.0001,
    0.2856 / 1.0001,
    0.3001 / 1.0001,
    0.2363 / 1.0001,
    0.1333 / 1.0001,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MsSsimParams {
    /// Per-scale exponents, finest first; the last one also weights the
    /// coarsest-scale luminance.
    weights: Vec<f64>,
    pub base: SsimParams,
}

impl Default for MsSsimParams {
    fn default() -> Self {
        Self {
            weights: DEFAULT_MS_SSIM_WEIGHTS.to_vec(),
            base: SsimParams::default(),
        }
    }
}

impl MsSsimParams {
    pub fn new(weights: Vec<f64>, base: SsimParams) -> Result<Self, MetricError> {
        if weights.is_empty() || weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(MetricError::BadParams("scale weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(MetricError::BadParams(format!("scale weights sum to {total}, expected 1")));
        }
        base.validate()?;
        Ok(Self { weights, base })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn scales(&self) -> usize {
        self.weights.len()
    }

    /// `window_size · 2^(scales−1)`.
    pub fn min_side(&self) -> usize {
        self.base.window_size << (self.scales() - 1)
    }

    /// The first `scales` weights, renormalized to unit sum.
    pub fn truncated(&self, scales: usize) -> Self {
        let scales = scales.clamp(1, self.scales());
        let head = &self.weights[..scales];
        let total: f64 = head.iter().sum();
        Self {
            weights: head.iter().map(|w| w / total).collect(),
            base: self.base,
        }
    }
}

/// Multi-scale SSIM: contrast·structure at every scale, luminance at the
/// coarsest only, each raised to its scale weight.
pub fn ms_ssim<T: Real>(x: &GrayImage<T>, y: &GrayImage<T>, p: &MsSsimParams) -> Result<SimilarityScore<T>, MetricError> {
    p.base.validate()?;
    x.check_same_dims(y)?;
    check_size("msssim", x, p.min_side())?;
    let mut a = x.clone();
    let mut b = y.clone();
    let mut value = T::one();
    let last = p.scales() - 1;
    for (m, &weight) in p.weights.iter().enumerate() {
        let t = ssim_terms(&a, &b, &p.base)?;
        let n = T::from_usize_lossy(t.luminance.len());
        let term = if m == last {
            let full: Vec<T> = t
                .luminance
                .iter()
                .zip(&t.contrast_structure)
                .map(|(&l, &cs)| l * cs)
                .collect();
            compensated_sum(&full) / n
        } else {
            compensated_sum(&t.contrast_structure) / n
        };
        value *= term.max(T::zero()).powf(T::lit(weight));
        if m < last {
            a = downsample2(&a)?;
            b = downsample2(&b)?;
        }
    }
    Ok(SimilarityScore {
        metric: Metric::MsSsim,
        value,
        map: None,
    })
}
