//! Complex steerable pyramid built in the Fourier domain.
//!
//! The image spectrum is split into a highpass residual, `levels` scales of
//! `orientations` analytic (single half-plane) oriented bands, and a lowpass
//! residual. Radial masks are square-rooted raised cosines one octave wide;
//! angular masks are `cos^(K-1)` lobes scaled so that the two-sided real
//! filters of one scale sum (in squared magnitude) to the radial annulus.
//! Consequently the decomposition is a tight frame once each analytic band is
//! counted twice (see [`Pyramid::energy`]).
//!
//! Band coefficients are amplitude preserving: a coarse-level coefficient is
//! the value of the band-limited signal at the subsampled position, so the
//! energy of level `l` carries a weight of `N_0 / N_l`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::image::GrayImage;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PyramidError {
    #[error("image {width}x{height} too small for {levels} levels: need min side {min}")]
    TooSmall {
        width: usize,
        height: usize,
        levels: usize,
        min: usize,
    },
    #[error("levels and orientations must be positive")]
    BadParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct PyramidParams {
    pub levels: usize,
    pub orientations: usize,
}

impl Default for PyramidParams {
    fn default() -> Self {
        Self {
            levels: 4,
            orientations: 6,
        }
    }
}

impl PyramidParams {
    /// Smallest admissible image side: the coarsest oriented band keeps at
    /// least 8 coefficients per side.
    pub fn min_side(&self) -> usize {
        8usize << self.levels.saturating_sub(1)
    }

    pub fn check(&self, width: usize, height: usize) -> Result<(), PyramidError> {
        if self.levels == 0 || self.orientations == 0 {
            return Err(PyramidError::BadParams);
        }
        let min = self.min_side();
        if width.min(height) < min {
            return Err(PyramidError::TooSmall {
                width,
                height,
                levels: self.levels,
                min,
            });
        }
        Ok(())
    }

    /// Largest level count (capped at `self.levels`) admissible for the
    /// given dimensions, or `None` if even one level does not fit.
    pub fn fit_levels(&self, width: usize, height: usize) -> Option<Self> {
        (1..=self.levels)
            .rev()
            .map(|levels| Self { levels, ..*self })
            .find(|p| p.check(width, height).is_ok())
    }
}

/// Real 2-D grid (residual bands).
#[derive(Debug, Clone, PartialEq)]
pub struct RealGrid<T> {
    pub width: usize,
    pub height: usize,
    pub data: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSubband<T> {
    /// Scale index, 0 = finest.
    pub level: usize,
    pub orientation: usize,
    pub width: usize,
    pub height: usize,
    pub coeffs: Vec<Complex<T>>,
}

impl<T: Real> ComplexSubband<T> {
    #[inline]
    pub fn at(&self, x: usize, y: usize) -> Complex<T> {
        self.coeffs[y * self.width + x]
    }

    pub fn energy(&self) -> T {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pyramid<T> {
    pub params: PyramidParams,
    /// Ordered level-major: `subbands[level * orientations + orientation]`.
    pub subbands: Vec<ComplexSubband<T>>,
    pub highpass_residual: RealGrid<T>,
    pub lowpass_residual: RealGrid<T>,
    pub source_dims: (usize, usize),
}

/// Energy split of a decomposition, with level weights applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    pub highpass: f64,
    /// Sum over oriented bands, each counted twice (two-sided weight).
    pub oriented: f64,
    pub lowpass: f64,
}

impl EnergyBreakdown {
    pub fn total(&self) -> f64 {
        self.highpass + self.oriented + self.lowpass
    }
}

impl<T: Real> Pyramid<T> {
    pub fn subband(&self, level: usize, orientation: usize) -> &ComplexSubband<T> {
        &self.subbands[level * self.params.orientations + orientation]
    }

    /// Weighted coefficient energy. For a real input image the total equals
    /// the image's sum of squares.
    pub fn energy(&self) -> EnergyBreakdown {
        let n0 = (self.source_dims.0 * self.source_dims.1) as f64;
        let sq = |d: &[T]| d.iter().map(|v| v.to_f64_lossy().powi(2)).sum::<f64>();
        let oriented = self
            .subbands
            .iter()
            .map(|b| 2.0 * b.energy().to_f64_lossy() * n0 / (b.width * b.height) as f64)
            .sum();
        let lp = &self.lowpass_residual;
        EnergyBreakdown {
            highpass: sq(&self.highpass_residual.data),
            oriented,
            lowpass: sq(&lp.data) * n0 / (lp.width * lp.height) as f64,
        }
    }
}

/// Largest non-negative frequency index kept on an `n`-point centered grid.
fn max_freq(n: usize) -> isize {
    if n.is_multiple_of(2) {
        n as isize / 2 - 1
    } else {
        (n as isize - 1) / 2
    }
}

/// Signed frequency for unshifted DFT index `k`.
fn signed_freq(k: usize, n: usize) -> isize {
    if (k as isize) <= max_freq(n) {
        k as isize
    } else {
        k as isize - n as isize
    }
}

fn wrap_index(f: isize, n: usize) -> usize {
    f.rem_euclid(n as isize) as usize
}

/// Square-rooted raised-cosine transition: 0 below `start`, 1 above
/// `start + 1` (log2-radius units).
fn highpass_response(log_r: f64, start: f64) -> f64 {
    let u = (log_r - start).clamp(0.0, 1.0);
    (FRAC_PI_2 * u).sin()
}

fn lowpass_response(log_r: f64, start: f64) -> f64 {
    let u = (log_r - start).clamp(0.0, 1.0);
    (FRAC_PI_2 * u).cos()
}

/// Transition start of the highpass residual split.
const HI0_START: f64 = -1.5;

fn level_start(level: usize) -> f64 {
    HI0_START - 1.0 - level as f64
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|v| v as f64).product()
}

/// Angular lobe gain `sqrt(c)` such that `sum_b c cos^(2(K-1))(θ - πb/K) = 1`.
pub(crate) fn angular_gain(orientations: usize) -> f64 {
    let order = orientations - 1;
    let c = 2f64.powi(2 * order as i32) * factorial(order).powi(2) / (orientations as f64 * factorial(2 * order));
    c.sqrt()
}

/// Analytic angular mask for band `b` at angle `theta`.
fn angular_response(theta: f64, band: usize, orientations: usize, gain: f64) -> f64 {
    let center = PI * band as f64 / orientations as f64;
    let alpha = (theta - center + PI).rem_euclid(2.0 * PI) - PI;
    if alpha.abs() < FRAC_PI_2 {
        gain * alpha.cos().powi(orientations as i32 - 1)
    } else {
        0.0
    }
}

/// Per-grid frequency geometry in units of the source grid's Nyquist.
struct Geometry {
    width: usize,
    height: usize,
    log_r: Vec<f64>,
    theta: Vec<f64>,
}

impl Geometry {
    fn new(width: usize, height: usize, source: (usize, usize)) -> Self {
        let sx = source.0 as f64 / 2.0;
        let sy = source.1 as f64 / 2.0;
        let mut log_r = Vec::with_capacity(width * height);
        let mut theta = Vec::with_capacity(width * height);
        for ky in 0..height {
            let fy = signed_freq(ky, height) as f64 / sy;
            for kx in 0..width {
                let fx = signed_freq(kx, width) as f64 / sx;
                let r = fx.hypot(fy);
                log_r.push(if r > 0.0 { r.log2() } else { f64::NEG_INFINITY });
                theta.push(fy.atan2(fx));
            }
        }
        Self {
            width,
            height,
            log_r,
            theta,
        }
    }
}

struct Fft2<T: Real> {
    width: usize,
    height: usize,
    row_fwd: Arc<dyn Fft<T>>,
    row_inv: Arc<dyn Fft<T>>,
    col_fwd: Arc<dyn Fft<T>>,
    col_inv: Arc<dyn Fft<T>>,
}

impl<T: Real> Fft2<T> {
    fn new(planner: &mut FftPlanner<T>, width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            row_fwd: planner.plan_fft_forward(width),
            row_inv: planner.plan_fft_inverse(width),
            col_fwd: planner.plan_fft_forward(height),
            col_inv: planner.plan_fft_inverse(height),
        }
    }

    /// Unnormalized 2-D transform in place (row-major buffer).
    fn process(&self, buf: &mut [Complex<T>], inverse: bool) {
        let (w, h) = (self.width, self.height);
        let (row, col) = if inverse {
            (&self.row_inv, &self.col_inv)
        } else {
            (&self.row_fwd, &self.col_fwd)
        };
        row.process(buf);
        let mut t = vec![Complex::new(T::zero(), T::zero()); w * h];
        for y in 0..h {
            for x in 0..w {
                t[x * h + y] = buf[y * w + x];
            }
        }
        col.process(&mut t);
        for x in 0..w {
            for y in 0..h {
                buf[y * w + x] = t[x * h + y];
            }
        }
    }
}

/// `(-i)^n`
fn neg_i_pow<T: Real>(n: usize) -> Complex<T> {
    let (z, o) = (T::zero(), T::one());
    match n % 4 {
        0 => Complex::new(o, z),
        1 => Complex::new(z, -o),
        2 => Complex::new(-o, z),
        _ => Complex::new(z, o),
    }
}

fn spectrum<T: Real>(image: &GrayImage<T>, planner: &mut FftPlanner<T>) -> Vec<Complex<T>> {
    let mut buf: Vec<Complex<T>> = image.data().iter().map(|&v| Complex::new(v, T::zero())).collect();
    Fft2::new(planner, image.width(), image.height()).process(&mut buf, false);
    buf
}

/// Decomposes `image` into a complex steerable pyramid.
pub fn decompose<T: Real>(image: &GrayImage<T>, params: &PyramidParams) -> Result<Pyramid<T>, PyramidError> {
    params.check(image.width(), image.height())?;
    let mut planner = FftPlanner::new();
    let spec = spectrum(image, &mut planner);
    Ok(decompose_spectrum(spec, image.dims(), params, &mut planner))
}

fn decompose_spectrum<T: Real>(
    spec: Vec<Complex<T>>,
    source: (usize, usize),
    params: &PyramidParams,
    planner: &mut FftPlanner<T>,
) -> Pyramid<T> {
    let (w0, h0) = source;
    let inv_n0 = T::one() / T::from_usize_lossy(w0 * h0);
    let k = params.orientations;
    let gain = angular_gain(k);
    let phase = neg_i_pow::<T>(k - 1);

    let geo0 = Geometry::new(w0, h0, source);
    let fft0 = Fft2::new(planner, w0, h0);

    let mut hi: Vec<Complex<T>> = spec
        .iter()
        .zip(&geo0.log_r)
        .map(|(&s, &lr)| s * T::lit(highpass_response(lr, HI0_START)))
        .collect();
    fft0.process(&mut hi, true);
    let highpass_residual = RealGrid {
        width: w0,
        height: h0,
        data: hi.iter().map(|c| c.re * inv_n0).collect(),
    };

    let mut lo: Vec<Complex<T>> = spec
        .iter()
        .zip(&geo0.log_r)
        .map(|(&s, &lr)| s * T::lit(lowpass_response(lr, HI0_START)))
        .collect();

    let mut geo = geo0;
    let mut fft = fft0;
    let mut subbands = Vec::with_capacity(params.levels * k);
    for level in 0..params.levels {
        let start = level_start(level);
        let radial: Vec<f64> = geo.log_r.iter().map(|&lr| highpass_response(lr, start)).collect();
        let bands: Vec<ComplexSubband<T>> = (0..k)
            .into_par_iter()
            .map(|b| {
                let mut buf: Vec<Complex<T>> = lo
                    .iter()
                    .zip(&radial)
                    .zip(&geo.theta)
                    .map(|((&s, &rad), &th)| {
                        let m = rad * angular_response(th, b, k, gain);
                        if m == 0.0 {
                            Complex::new(T::zero(), T::zero())
                        } else {
                            s * T::lit(m)
                        }
                    })
                    .collect();
                fft.process(&mut buf, true);
                for c in &mut buf {
                    *c = *c * phase * inv_n0;
                }
                ComplexSubband {
                    level,
                    orientation: b,
                    width: geo.width,
                    height: geo.height,
                    coeffs: buf,
                }
            })
            .collect();
        subbands.extend(bands);

        // Keep the central half-band and apply this level's lowpass.
        let (w, h) = (geo.width, geo.height);
        let (nw, nh) = (w.div_ceil(2), h.div_ceil(2));
        let next = Geometry::new(nw, nh, source);
        let mut cropped = Vec::with_capacity(nw * nh);
        for ky in 0..nh {
            let oy = wrap_index(signed_freq(ky, nh), h);
            for kx in 0..nw {
                let ox = wrap_index(signed_freq(kx, nw), w);
                let m = lowpass_response(next.log_r[ky * nw + kx], start);
                cropped.push(lo[oy * w + ox] * T::lit(m));
            }
        }
        lo = cropped;
        geo = next;
        fft = Fft2::new(planner, nw, nh);
    }

    fft.process(&mut lo, true);
    let lowpass_residual = RealGrid {
        width: geo.width,
        height: geo.height,
        data: lo.iter().map(|c| c.re * inv_n0).collect(),
    };

    Pyramid {
        params: *params,
        subbands,
        highpass_residual,
        lowpass_residual,
        source_dims: source,
    }
}

/// Circular sub-pixel translation by Fourier phase ramp:
/// `out(x, y) = image(x - dx, y - dy)`.
pub fn fourier_shift<T: Real>(image: &GrayImage<T>, dx: f64, dy: f64) -> GrayImage<T> {
    let (w, h) = image.dims();
    let mut planner = FftPlanner::new();
    let mut spec = spectrum(image, &mut planner);
    for ky in 0..h {
        let fy = signed_freq(ky, h) as f64 / h as f64;
        for kx in 0..w {
            let fx = signed_freq(kx, w) as f64 / w as f64;
            let ang = -2.0 * PI * (fx * dx + fy * dy);
            spec[ky * w + kx] *= Complex::new(T::lit(ang.cos()), T::lit(ang.sin()));
        }
    }
    Fft2::new(&mut planner, w, h).process(&mut spec, true);
    let inv = T::one() / T::from_usize_lossy(w * h);
    GrayImage::from_fn(w, h, |x, y| spec[y * w + x].re * inv)
}

/// Magnitude perturbation per subband caused by translating the image by
/// `(dx, dy)` pixels.
///
/// For each band, returns the maximum over interior coefficients of
/// `| |w_shifted| - |w| | / (|w| + eps)` where `eps` is 5% of the band's peak
/// magnitude. Interior excludes a border of one eighth of the band's side.
pub fn shift_magnitude_stability<T: Real>(
    image: &GrayImage<T>,
    params: &PyramidParams,
    dx: f64,
    dy: f64,
) -> Result<Vec<f64>, PyramidError> {
    let base = decompose(image, params)?;
    if dx == 0.0 && dy == 0.0 {
        return Ok(vec![0.0; base.subbands.len()]);
    }
    let moved = decompose(&fourier_shift(image, dx, dy), params)?;
    Ok(base
        .subbands
        .iter()
        .zip(&moved.subbands)
        .map(|(a, b)| {
            let peak = a.coeffs.iter().map(|c| c.norm().to_f64_lossy()).fold(0.0, f64::max);
            let eps = 0.05 * peak + f64::MIN_POSITIVE;
            let mx = (a.width / 8).max(1);
            let my = (a.height / 8).max(1);
            let mut worst = 0.0f64;
            for y in my..a.height - my {
                for x in mx..a.width - mx {
                    let m0 = a.at(x, y).norm().to_f64_lossy();
                    let m1 = b.at(x, y).norm().to_f64_lossy();
                    worst = worst.max((m1 - m0).abs() / (m0 + eps));
                }
            }
            worst
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noise(w: usize, h: usize, seed: u64) -> GrayImage<f64> {
        let mut s = seed.wrapping_mul(0x9E3779B97F4A7C15) | 1;
        GrayImage::from_fn(w, h, |_, _| {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64 * 255.0
        })
    }

    fn image_energy(img: &GrayImage<f64>) -> f64 {
        img.data().iter().map(|v| v * v).sum()
    }

    #[test]
    fn angular_masks_partition_unity() {
        for k in 1..=8 {
            let g = angular_gain(k);
            for i in 0..97 {
                let theta = -PI + 2.0 * PI * i as f64 / 97.0;
                // two-sided real filters: |lobe(θ)|² + |lobe(θ+π)|²
                let s: f64 = (0..k)
                    .map(|b| {
                        angular_response(theta, b, k, g).powi(2) + angular_response(theta + PI, b, k, g).powi(2)
                    })
                    .sum();
                assert!((s - 1.0).abs() < 1e-12, "k={k} theta={theta} sum={s}");
            }
        }
    }

    #[test]
    fn radial_masks_are_power_complementary() {
        for i in 0..50 {
            let lr = -6.0 + 0.13 * i as f64;
            for start in [HI0_START, level_start(0), level_start(3)] {
                let s = highpass_response(lr, start).powi(2) + lowpass_response(lr, start).powi(2);
                assert!((s - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn frequency_indexing() {
        assert_eq!((0..4).map(|k| signed_freq(k, 4)).collect::<Vec<_>>(), vec![0, 1, -2, -1]);
        assert_eq!((0..5).map(|k| signed_freq(k, 5)).collect::<Vec<_>>(), vec![0, 1, 2, -2, -1]);
    }

    #[test]
    fn shape_and_count() {
        let img = noise(64, 48, 1);
        let p = decompose(&img, &PyramidParams { levels: 3, orientations: 4 }).unwrap();
        assert_eq!(p.subbands.len(), 12);
        assert_eq!((p.subband(0, 0).width, p.subband(0, 0).height), (64, 48));
        assert_eq!((p.subband(1, 3).width, p.subband(1, 3).height), (32, 24));
        assert_eq!((p.subband(2, 1).width, p.subband(2, 1).height), (16, 12));
        assert_eq!((p.lowpass_residual.width, p.lowpass_residual.height), (8, 6));
    }

    #[test]
    fn odd_dimensions_halve_with_ceiling() {
        let img = noise(67, 71, 2);
        let p = decompose(&img, &PyramidParams { levels: 3, orientations: 2 }).unwrap();
        assert_eq!((p.subband(1, 0).width, p.subband(1, 0).height), (34, 36));
        assert_eq!((p.subband(2, 0).width, p.subband(2, 0).height), (17, 18));
        let e = p.energy().total();
        assert!((e - image_energy(&img)).abs() / image_energy(&img) < 1e-9);
    }

    #[test]
    fn too_small_is_rejected() {
        let img = noise(60, 64, 3);
        assert!(matches!(
            decompose(&img, &PyramidParams::default()),
            Err(PyramidError::TooSmall { min: 64, .. })
        ));
        assert!(decompose(&noise(64, 64, 3), &PyramidParams::default()).is_ok());
        assert_eq!(
            PyramidParams::default().fit_levels(40, 100),
            Some(PyramidParams { levels: 3, orientations: 6 })
        );
        assert_eq!(PyramidParams::default().fit_levels(7, 100), None);
    }

    #[test]
    fn constant_image_has_no_oriented_energy() {
        let img = GrayImage::filled(64, 64, 117.0f64);
        let p = decompose(&img, &PyramidParams::default()).unwrap();
        for b in &p.subbands {
            assert!(b.coeffs.iter().all(|c| c.norm() < 1e-9));
        }
        assert!(p.highpass_residual.data.iter().all(|v: &f64| v.abs() < 1e-9));
        assert!(p.lowpass_residual.data.iter().all(|v| (v - 117.0).abs() < 1e-9));
    }

    #[test]
    fn grating_lands_in_normal_band() {
        // Intensity varies along x, so the spectrum sits on the horizontal
        // frequency axis and orientation 0 is the grating normal. Oracle: the
        // angular masks evaluated at theta = 0 predict each band's share.
        let n = 128;
        let img = GrayImage::from_fn(n, n, |x, _| 128.0 + 60.0 * (2.0 * PI * 16.0 * x as f64 / n as f64).cos());
        let params = PyramidParams::default();
        let p = decompose(&img, &params).unwrap();
        let gain = angular_gain(6);
        let predicted: Vec<f64> = (0..6)
            .map(|o| angular_response(0.0, o, 6, gain).powi(2) + angular_response(PI, o, 6, gain).powi(2))
            .collect();
        let energy: Vec<f64> = (0..6)
            .map(|o| (0..params.levels).map(|l| p.subband(l, o).energy()).sum())
            .collect();
        let best = energy[0];
        for o in 1..6 {
            assert!(energy[o] < best);
            let ratio = energy[o] / best;
            assert!((ratio - predicted[o] / predicted[0]).abs() < 1e-6, "orientation {o}");
            // Lobes at least 60 degrees away are suppressed tenfold; the
            // adjacent lobes (30 degrees) pass cos^10(30°) ≈ 0.237.
            if o != 1 && o != 5 {
                assert!(best >= 10.0 * energy[o], "orientation {o}");
            }
        }
        assert!((energy[1] / best - (PI / 6.0).cos().powi(10)).abs() < 1e-6);
    }

    #[test]
    fn impulse_energy_is_conserved() {
        let img = GrayImage::from_fn(64, 64, |x, y| if x == 20 && y == 37 { 255.0 } else { 0.0 });
        let p = decompose(&img, &PyramidParams::default()).unwrap();
        let e = p.energy();
        let rel = (e.total() - image_energy(&img)).abs() / image_energy(&img);
        assert!(rel < 0.01, "relative error {rel}");
    }

    #[test]
    fn linearity() {
        let a = noise(64, 64, 10);
        let b = noise(64, 64, 11);
        let (ca, cb) = (0.7, -1.3);
        let mix = GrayImage::from_fn(64, 64, |x, y| ca * a.get(x, y) + cb * b.get(x, y));
        let params = PyramidParams::default();
        let (pa, pb, pm) = (
            decompose(&a, &params).unwrap(),
            decompose(&b, &params).unwrap(),
            decompose(&mix, &params).unwrap(),
        );
        for ((ba, bb), bm) in pa.subbands.iter().zip(&pb.subbands).zip(&pm.subbands) {
            let scale = bm.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
            for ((x, y), z) in ba.coeffs.iter().zip(&bb.coeffs).zip(&bm.coeffs) {
                let want = x * ca + y * cb;
                assert!((want - z).norm() <= 1e-9 * scale);
            }
        }
    }

    #[test]
    fn deterministic_bits() {
        let img = noise(64, 64, 5);
        let a = decompose(&img, &PyramidParams::default()).unwrap();
        let b = decompose(&img, &PyramidParams::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fourier_shift_integer_is_circular_roll() {
        let img = noise(16, 12, 4);
        let s = fourier_shift(&img, 3.0, -2.0);
        for y in 0..12 {
            for x in 0..16 {
                let src = img.get((x + 16 - 3) % 16, (y + 2) % 12);
                assert!((s.get(x, y) - src).abs() < 1e-9);
            }
        }
    }

    fn blob(n: usize) -> GrayImage<f64> {
        let c = n as f64 / 2.0;
        GrayImage::from_fn(n, n, |x, y| {
            let r2 = (x as f64 - c).powi(2) + (y as f64 - c).powi(2);
            40.0 + 150.0 * (-r2 / (2.0 * 6.0f64.powi(2))).exp()
        })
    }

    #[test]
    fn zero_shift_is_exactly_stable() {
        let d = shift_magnitude_stability(&blob(64), &PyramidParams::default(), 0.0, 0.0).unwrap();
        assert!(d.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn blob_magnitudes_survive_one_pixel_shift() {
        let params = PyramidParams::default();
        let img = blob(128);
        let smooth = shift_magnitude_stability(&img, &params, 1.0, 0.0).unwrap();
        // At the coarsest scale a one-pixel shift is an eighth of a coefficient.
        for (i, d) in smooth.iter().enumerate().skip(18) {
            assert!(*d < 0.15, "band {i}: {d}");
        }
        let rough = shift_magnitude_stability(&noise(128, 128, 9), &params, 1.0, 0.0).unwrap();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(mean(&rough) > mean(&smooth));

        // Phase moves much more than magnitude wherever the band carries energy.
        let a = decompose(&img, &params).unwrap();
        let b = decompose(&fourier_shift(&img, 1.0, 0.0), &params).unwrap();
        for (ba, bb) in a.subbands.iter().zip(&b.subbands).filter(|(s, _)| s.orientation == 0) {
            let peak = ba.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
            let (mut dmag, mut dphase, mut count) = (0.0, 0.0, 0);
            for (x, y) in ba.coeffs.iter().zip(&bb.coeffs) {
                if x.norm() > 0.25 * peak {
                    dmag += (y.norm() - x.norm()).abs() / x.norm();
                    dphase += (y * x.conj()).arg().abs();
                    count += 1;
                }
            }
            assert!(dphase / count as f64 > 2.0 * dmag / count as f64, "level {}", ba.level);
        }
    }

    #[test]
    fn single_precision_decomposes() {
        let img = noise(64, 64, 8).cast::<f32>();
        let p = decompose(&img, &PyramidParams::default()).unwrap();
        let e: f64 = img.data().iter().map(|&v| (v as f64).powi(2)).sum();
        assert!((p.energy().total() - e).abs() / e < 1e-4);
    }
}
