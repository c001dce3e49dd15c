use serde::{Deserialize, Serialize};

use super::{local_moments, Metric, MetricError, SimilarityScore};
use crate::image::{downsample2, GrayImage};
use crate::scalar::{KahanSum, Real};

const EPS_R: f64 = 1e-10;
const EPS_V: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VifParams {
    /// Visual noise variance `σ_n²` in intensity units squared.
    pub sigma_n2: f64,
    pub scales: usize,
    /// Side of the Gaussian block used for local statistics (σ = side / 5).
    pub block_size: usize,
}

impl Default for VifParams {
    fn default() -> Self {
        Self {
            sigma_n2: 2.0,
            scales: 4,
            block_size: 9,
        }
    }
}

impl VifParams {
    pub fn validate(&self) -> Result<(), MetricError> {
        if !(self.sigma_n2 > 0.0 && self.sigma_n2.is_finite()) {
            return Err(MetricError::BadParams("sigma_n2 must be positive".into()));
        }
        if self.scales == 0 {
            return Err(MetricError::BadParams("vif needs at least one scale".into()));
        }
        if self.block_size == 0 || self.block_size.is_multiple_of(2) {
            return Err(MetricError::BadParams(format!("block size {} must be odd", self.block_size)));
        }
        Ok(())
    }

    /// `block_size · 2^(scales−1)`.
    pub fn min_side(&self) -> usize {
        self.block_size << (self.scales.max(1) - 1)
    }
}

/// Visual information fidelity, pixel-domain scalar Gaussian scale mixture.
///
/// Each channel is one level of a binomial pyramid. Per block the reference
/// variance plays the role of `s²λ`, the test is modelled as `g·ref + v`, and
/// the information the test retains is compared with what the reference
/// carries through a channel with noise `σ_n²`. Not symmetric.
pub fn vif<T: Real>(reference: &GrayImage<T>, test: &GrayImage<T>, p: &VifParams) -> Result<SimilarityScore<T>, MetricError> {
    p.validate()?;
    reference.check_same_dims(test)?;
    let (w, h) = reference.dims();
    if w.min(h) < p.min_side() {
        return Err(MetricError::TooSmall {
            metric: "vif",
            width: w,
            height: h,
            min: p.min_side(),
        });
    }
    let sigma = p.block_size as f64 / 5.0;
    let (sn2, eps_r, eps_v) = (T::lit(p.sigma_n2), T::lit(EPS_R), T::lit(EPS_V));
    let mut num = KahanSum::new();
    let mut den = KahanSum::new();
    let mut r = reference.clone();
    let mut t = test.clone();
    for j in 0..p.scales {
        if j > 0 {
            r = downsample2(&r)?;
            t = downsample2(&t)?;
        }
        let m = local_moments(&r, &t, p.block_size, sigma)?;
        for i in 0..m.cov.len() {
            let var_r = m.var_x[i].max(T::zero());
            let var_t = m.var_y[i].max(T::zero());
            let cov = m.cov[i];
            let g = (cov / (var_r + eps_r)).max(T::zero());
            let sv2 = (var_t - g * cov).max(eps_v);
            num.add((T::one() + g * g * var_r / (sv2 + sn2)).log2());
            den.add((T::one() + var_r / sn2).log2());
        }
    }
    let den = den.total();
    if den <= T::zero() {
        return Err(MetricError::DegenerateReference);
    }
    Ok(SimilarityScore {
        metric: Metric::Vif,
        value: num.total() / den,
        map: None,
    })
}
