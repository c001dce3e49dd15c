use serde::{Deserialize, Serialize};

use super::{Metric, MetricError, ScoreMap, SimilarityScore};
use crate::image::{filter_valid, GrayImage};
use crate::pyramid::{decompose, ComplexSubband, PyramidParams};
use crate::scalar::{compensated_sum, KahanSum, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CwSsimParams {
    pub pyramid: PyramidParams,
    /// Side of the square coefficient neighborhood.
    pub window_size: usize,
    /// Stabilizing constant `K`.
    pub k_stab: f64,
}

impl Default for CwSsimParams {
    fn default() -> Self {
        Self {
            pyramid: PyramidParams::default(),
            window_size: 7,
            k_stab: 0.03,
        }
    }
}

impl CwSsimParams {
    pub fn validate(&self) -> Result<(), MetricError> {
        if !(self.k_stab > 0.0 && self.k_stab.is_finite()) {
            return Err(MetricError::BadParams("k_stab must be positive".into()));
        }
        if self.window_size == 0 || self.window_size.is_multiple_of(2) {
            return Err(MetricError::BadParams(format!("window size {} must be odd", self.window_size)));
        }
        Ok(())
    }
}

/// Index map for one band pair: `(2|Σ w_x w_y*| + K) / (Σ|w_x|² + Σ|w_y|² + K)`
/// over every fully contained window.
fn band_index<T: Real>(a: &ComplexSubband<T>, b: &ComplexSubband<T>, size: usize, k: T) -> (Vec<T>, usize, usize) {
    let (w, h) = (a.width, a.height);
    let ones = vec![T::one(); size];
    let cross_re: Vec<T> = a.coeffs.iter().zip(&b.coeffs).map(|(p, q)| (p * q.conj()).re).collect();
    let cross_im: Vec<T> = a.coeffs.iter().zip(&b.coeffs).map(|(p, q)| (p * q.conj()).im).collect();
    let ea: Vec<T> = a.coeffs.iter().map(|c| c.norm_sqr()).collect();
    let eb: Vec<T> = b.coeffs.iter().map(|c| c.norm_sqr()).collect();
    let (sr, ow, oh) = filter_valid(&cross_re, w, h, &ones);
    let (si, _, _) = filter_valid(&cross_im, w, h, &ones);
    let (sa, _, _) = filter_valid(&ea, w, h, &ones);
    let (sb, _, _) = filter_valid(&eb, w, h, &ones);
    let two = T::lit(2.0);
    let map = (0..ow * oh)
        .map(|i| {
            let num = two * sr[i].hypot(si[i]) + k;
            let den = sa[i] + sb[i] + k;
            // Rounding in the box sums can push the ratio a hair past one.
            (num / den).min(T::one())
        })
        .collect();
    (map, ow, oh)
}

/// Complex-wavelet SSIM: the mean of the windowed index over every oriented
/// subband. The returned map is the finest level averaged over orientations.
pub fn cw_ssim<T: Real>(x: &GrayImage<T>, y: &GrayImage<T>, p: &CwSsimParams) -> Result<SimilarityScore<T>, MetricError> {
    p.validate()?;
    x.check_same_dims(y)?;
    let (w, h) = x.dims();
    p.pyramid.check(w, h)?;
    let px = decompose(x, &p.pyramid)?;
    let py = decompose(y, &p.pyramid)?;
    let coarsest = px.subbands.iter().map(|s| s.width.min(s.height)).min().unwrap_or(0);
    if coarsest < p.window_size {
        return Err(MetricError::TooSmall {
            metric: "cwssim",
            width: w,
            height: h,
            min: p.pyramid.min_side().max(p.window_size << (p.pyramid.levels - 1)),
        });
    }
    let k = T::lit(p.k_stab);
    let mut total = KahanSum::new();
    let mut count = 0usize;
    let mut finest: Option<ScoreMap<T>> = None;
    for (a, b) in px.subbands.iter().zip(&py.subbands) {
        let (band, ow, oh) = band_index(a, b, p.window_size, k);
        total.add(compensated_sum(&band));
        count += band.len();
        if a.level == 0 {
            let m = finest.get_or_insert_with(|| ScoreMap {
                width: ow,
                height: oh,
                data: vec![T::zero(); ow * oh],
            });
            for (acc, v) in m.data.iter_mut().zip(&band) {
                *acc += *v;
            }
        }
    }
    let mut map = finest.expect("at least one level");
    let k_o = T::from_usize_lossy(p.pyramid.orientations);
    for v in &mut map.data {
        *v /= k_o;
    }
    Ok(SimilarityScore {
        metric: Metric::CwSsim,
        value: total.total() / T::from_usize_lossy(count),
        map: Some(map),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{ssim, SsimParams};

    fn noise(w: usize, h: usize, seed: u64) -> GrayImage<f64> {
        let mut s = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(17);
        GrayImage::from_fn(w, h, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64 * 255.0
        })
    }

    fn smooth_phantom(n: usize) -> GrayImage<f64> {
        let c = n as f64 / 2.0;
        GrayImage::from_fn(n, n, |x, y| {
            let (dx, dy) = (x as f64 - c, y as f64 - c * 0.8);
            let blob = 120.0 * (-(dx * dx + dy * dy) / (2.0 * 12.0f64.powi(2))).exp();
            let wave = 30.0 * (x as f64 * 0.15).sin() * (y as f64 * 0.1).cos();
            60.0 + blob + wave
        })
    }

    /// Oracle: direct double loop over one band's windows.
    fn oracle_band(a: &ComplexSubband<f64>, b: &ComplexSubband<f64>, size: usize, k: f64) -> Vec<f64> {
        let mut out = Vec::new();
        for y0 in 0..=a.height - size {
            for x0 in 0..=a.width - size {
                let (mut cross, mut ea, mut eb) = (num_complex::Complex::new(0.0, 0.0), 0.0, 0.0);
                for j in 0..size {
                    for i in 0..size {
                        let (p, q) = (a.at(x0 + i, y0 + j), b.at(x0 + i, y0 + j));
                        cross += p * q.conj();
                        ea += p.norm_sqr();
                        eb += q.norm_sqr();
                    }
                }
                out.push((2.0 * cross.norm() + k) / (ea + eb + k));
            }
        }
        out
    }

    #[test]
    fn identity_is_one() {
        let x = noise(64, 64, 1);
        let s = cw_ssim(&x, &x, &CwSsimParams::default()).unwrap();
        assert!((s.value - 1.0).abs() < 1e-9);
        let map = s.map.unwrap();
        assert_eq!((map.width, map.height), (58, 58));
    }

    #[test]
    fn band_index_matches_direct_sum() {
        let x = noise(64, 48, 2);
        let y = noise(64, 48, 3);
        let params = PyramidParams { levels: 2, orientations: 4 };
        let (px, py) = (decompose(&x, &params).unwrap(), decompose(&y, &params).unwrap());
        for (a, b) in px.subbands.iter().zip(&py.subbands) {
            let (fast, _, _) = band_index(a, b, 7, 0.03);
            let slow = oracle_band(a, b, 7, 0.03);
            for (f, s) in fast.iter().zip(&slow) {
                assert!((f - s.min(1.0)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn one_pixel_shift_beats_ssim() {
        let x = smooth_phantom(128);
        let y = x.translated(1, 0);
        let cw = cw_ssim(&x, &y, &CwSsimParams::default()).unwrap().value;
        let s = ssim(&x, &y, &SsimParams::default()).unwrap().value;
        assert!(cw >= 0.90, "cwssim {cw}");
        assert!(cw > s, "cwssim {cw} vs ssim {s}");
    }

    #[test]
    fn independent_noise_scores_low() {
        let mean: f64 = (0..10)
            .map(|seed| {
                let x = noise(64, 64, seed);
                let y = noise(64, 64, seed + 1000);
                cw_ssim(&x, &y, &CwSsimParams::default()).unwrap().value
            })
            .sum::<f64>()
            / 10.0;
        assert!(mean < 0.5, "mean {mean}");
    }

    #[test]
    fn symmetric_and_bounded() {
        let x = noise(64, 64, 4);
        let y = x.map(|v| 0.6 * v + 40.0);
        let p = CwSsimParams::default();
        let a = cw_ssim(&x, &y, &p).unwrap().value;
        let b = cw_ssim(&y, &x, &p).unwrap().value;
        assert!((a - b).abs() < 1e-9);
        assert!(a > 0.0 && a <= 1.0);
    }

    #[test]
    fn size_and_param_errors() {
        let x = noise(48, 48, 5);
        assert!(matches!(cw_ssim(&x, &x, &CwSsimParams::default()), Err(MetricError::Pyramid(_))));
        let bad = CwSsimParams {
            k_stab: 0.0,
            ..Default::default()
        };
        assert!(matches!(cw_ssim(&x, &x, &bad), Err(MetricError::BadParams(_))));
    }
}
