//! Grayscale raster model, ROI cropping, dyadic downsampling and window
//! generation.
//!
//! Pixels are stored row-major as real scalars with a nominal range of
//! `[0, 255]`. Quantization only happens in [`crate::pgm`]. All spatial
//! filtering replicates edge pixels.

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ImageError {
    #[error("image dimensions must be positive, got {width}x{height}")]
    EmptyDimensions { width: usize, height: usize },
    #[error("data length {len} does not match {width}x{height}")]
    LengthMismatch { width: usize, height: usize, len: usize },
    #[error("non-finite pixel value at index {index}")]
    NonFinite { index: usize },
    #[error("image {width}x{height} is too small: need at least {min}x{min}")]
    TooSmall { width: usize, height: usize, min: usize },
    #[error("window size must be odd and positive, got {0}")]
    EvenWindow(usize),
    #[error("window sigma must be positive and finite")]
    BadSigma,
    #[error("image dimensions differ: {0:?} vs {1:?}")]
    DimensionMismatch((usize, usize), (usize, usize)),
}

/// Two-dimensional grayscale image.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Real> GrayImage<T> {
    pub fn new(width: usize, height: usize, data: Vec<T>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::EmptyDimensions { width, height });
        }
        if data.len() != width * height {
            return Err(ImageError::LengthMismatch {
                width,
                height,
                len: data.len(),
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(ImageError::NonFinite { index });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Image with every pixel set to `value`.
    ///
    /// Panics if either dimension is zero or `value` is not finite.
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Self::new(width, height, vec![value; width * height]).expect("valid constant image")
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    ///
    /// Panics if either dimension is zero or `f` produces a non-finite value.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data).expect("valid generated image")
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    /// Pixel lookup with edge replication for out-of-range coordinates.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> T {
        let cx = x.clamp(0, self.width as isize - 1) as usize;
        let cy = y.clamp(0, self.height as isize - 1) as usize;
        self.data[cy * self.width + cx]
    }

    pub fn row(&self, y: usize) -> &[T] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    /// Applies `f` to every pixel. Panics if `f` yields a non-finite value.
    pub fn map(&self, mut f: impl FnMut(T) -> T) -> Self {
        Self::new(self.width, self.height, self.data.iter().map(|&v| f(v)).collect())
            .expect("map produced non-finite pixel")
    }

    pub fn cast<U: Real>(&self) -> GrayImage<U> {
        GrayImage {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .map(|v| U::from_f64(v.to_f64_lossy()).expect("finite"))
                .collect(),
        }
    }

    /// Integer translation: `out(x, y) = self(x - dx, y - dy)`, edges replicated.
    pub fn translated(&self, dx: isize, dy: isize) -> Self {
        Self::from_fn(self.width, self.height, |x, y| {
            self.get_clamped(x as isize - dx, y as isize - dy)
        })
    }

    pub fn check_same_dims(&self, other: &Self) -> Result<(), ImageError> {
        if self.dims() != other.dims() {
            return Err(ImageError::DimensionMismatch(self.dims(), other.dims()));
        }
        Ok(())
    }
}

/// Landmark position in pixel coordinates (`x` = column, `y` = row).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Landmark {
    pub x: f64,
    pub y: f64,
}

impl Landmark {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn offset(self, dx: f64, dy: f64) -> Self {
        Self::new(self.x + dx, self.y + dy)
    }

    pub fn distance(self, other: Landmark) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Nearest integer grid position, rounding half away from zero.
    pub fn rounded(self) -> (isize, isize) {
        (self.x.round() as isize, self.y.round() as isize)
    }

    pub fn is_inside(self, width: usize, height: usize) -> bool {
        self.x >= 0.0 && self.y >= 0.0 && self.x < width as f64 && self.y < height as f64
    }
}

/// Rectangular region of interest of size `(2·half_width+1) × (2·half_height+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Roi {
    pub center: Landmark,
    pub half_width: usize,
    pub half_height: usize,
}

impl Roi {
    pub const fn new(center: Landmark, half_width: usize, half_height: usize) -> Self {
        Self {
            center,
            half_width,
            half_height,
        }
    }

    pub const fn square(center: Landmark, half: usize) -> Self {
        Self::new(center, half, half)
    }

    pub fn width(&self) -> usize {
        2 * self.half_width + 1
    }

    pub fn height(&self) -> usize {
        2 * self.half_height + 1
    }

    /// Whether the rounded ROI lies fully inside a `width × height` frame.
    pub fn fits(&self, width: usize, height: usize) -> bool {
        let (cx, cy) = self.center.rounded();
        cx - self.half_width as isize >= 0
            && cy - self.half_height as isize >= 0
            && cx + (self.half_width as isize) < width as isize
            && cy + (self.half_height as isize) < height as isize
    }
}

/// Cuts the ROI window centered at the rounded ROI center, replicating edge
/// pixels where the window extends past the border.
pub fn crop<T: Real>(image: &GrayImage<T>, roi: &Roi) -> GrayImage<T> {
    let (cx, cy) = roi.center.rounded();
    let x0 = cx - roi.half_width as isize;
    let y0 = cy - roi.half_height as isize;
    GrayImage::from_fn(roi.width(), roi.height(), |x, y| {
        image.get_clamped(x0 + x as isize, y0 + y as isize)
    })
}

/// Five-tap binomial low-pass `[1, 4, 6, 4, 1] / 16`.
const BINOMIAL5: [f64; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];

/// Binomial low-pass followed by 2:1 decimation keeping even rows and columns.
/// Output dimensions are `ceil(dim / 2)`.
pub fn downsample2<T: Real>(image: &GrayImage<T>) -> Result<GrayImage<T>, ImageError> {
    let (w, h) = image.dims();
    if w < 2 || h < 2 {
        return Err(ImageError::TooSmall {
            width: w,
            height: h,
            min: 2,
        });
    }
    let kernel: Vec<T> = BINOMIAL5.iter().map(|&k| T::lit(k)).collect();
    let ow = w.div_ceil(2);
    let oh = h.div_ceil(2);

    // Horizontal pass evaluated only at kept columns.
    let mut tmp = vec![T::zero(); ow * h];
    for y in 0..h {
        for ox in 0..ow {
            let x = (2 * ox) as isize;
            let mut acc = T::zero();
            for (k, &kv) in kernel.iter().enumerate() {
                acc += kv * image.get_clamped(x + k as isize - 2, y as isize);
            }
            tmp[y * ow + ox] = acc;
        }
    }
    let mut out = Vec::with_capacity(ow * oh);
    for oy in 0..oh {
        let y = (2 * oy) as isize;
        for ox in 0..ow {
            let mut acc = T::zero();
            for (k, &kv) in kernel.iter().enumerate() {
                let yy = (y + k as isize - 2).clamp(0, h as isize - 1) as usize;
                acc += kv * tmp[yy * ow + ox];
            }
            out.push(acc);
        }
    }
    GrayImage::new(ow, oh, out)
}

/// Square weight grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Window<T> {
    size: usize,
    weights: Vec<T>,
}

impl<T: Real> Window<T> {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    #[inline]
    pub fn at(&self, dx: usize, dy: usize) -> T {
        self.weights[dy * self.size + dx]
    }
}

/// Normalized one-dimensional Gaussian taps at integer offsets `-r..=r`.
pub fn gaussian_kernel_1d<T: Real>(size: usize, sigma: f64) -> Result<Vec<T>, ImageError> {
    if size == 0 || size.is_multiple_of(2) {
        return Err(ImageError::EvenWindow(size));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(ImageError::BadSigma);
    }
    let r = (size / 2) as isize;
    let raw: Vec<f64> = (-r..=r)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|v| T::lit(v / total)).collect())
}

/// Isotropic Gaussian window sampled at integer offsets and normalized to
/// unit sum.
pub fn gaussian_window<T: Real>(size: usize, sigma: f64) -> Result<Window<T>, ImageError> {
    let k = gaussian_kernel_1d::<f64>(size, sigma)?;
    let mut weights = Vec::with_capacity(size * size);
    for &ky in &k {
        for &kx in &k {
            weights.push(kx * ky);
        }
    }
    let total: f64 = weights.iter().sum();
    Ok(Window {
        size,
        weights: weights.into_iter().map(|w| T::lit(w / total)).collect(),
    })
}

/// Separable correlation keeping only positions where the kernel fits
/// entirely inside the image ("valid" region).
pub(crate) fn filter_valid<T: Real>(data: &[T], width: usize, height: usize, kernel: &[T]) -> (Vec<T>, usize, usize) {
    let n = kernel.len();
    debug_assert!(width >= n && height >= n);
    let ow = width - n + 1;
    let oh = height - n + 1;
    let mut tmp = vec![T::zero(); ow * height];
    for y in 0..height {
        let row = &data[y * width..(y + 1) * width];
        for x in 0..ow {
            let mut acc = T::zero();
            for (k, &kv) in kernel.iter().enumerate() {
                acc += kv * row[x + k];
            }
            tmp[y * ow + x] = acc;
        }
    }
    let mut out = vec![T::zero(); ow * oh];
    for y in 0..oh {
        for (k, &kv) in kernel.iter().enumerate() {
            let src = &tmp[(y + k) * ow..(y + k + 1) * ow];
            let dst = &mut out[y * ow..(y + 1) * ow];
            for (d, &s) in dst.iter_mut().zip(src) {
                *d += kv * s;
            }
        }
    }
    (out, ow, oh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ramp(w: usize, h: usize) -> GrayImage<f64> {
        GrayImage::from_fn(w, h, |x, y| (y * w + x) as f64)
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(matches!(
            GrayImage::<f64>::new(2, 2, vec![0.0; 3]),
            Err(ImageError::LengthMismatch { .. })
        ));
        assert!(matches!(
            GrayImage::<f64>::new(0, 2, vec![]),
            Err(ImageError::EmptyDimensions { .. })
        ));
        assert!(matches!(
            GrayImage::new(1, 2, vec![0.0, f64::NAN]),
            Err(ImageError::NonFinite { index: 1 })
        ));
    }

    #[test]
    fn crop_central_block() {
        let img = ramp(5, 5);
        let c = crop(&img, &Roi::square(Landmark::new(2.0, 2.0), 1));
        assert_eq!(c.data(), &[6.0, 7.0, 8.0, 11.0, 12.0, 13.0, 16.0, 17.0, 18.0]);
    }

    #[test]
    fn crop_replicates_top_left_edge() {
        let img = ramp(5, 5);
        let c = crop(&img, &Roi::square(Landmark::new(0.0, 0.0), 1));
        assert_eq!(c.data(), &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 5.0, 5.0, 6.0]);
    }

    #[test]
    fn crop_rounds_center() {
        let img = ramp(5, 5);
        let a = crop(&img, &Roi::square(Landmark::new(2.4, 2.6), 1));
        let b = crop(&img, &Roi::square(Landmark::new(2.0, 3.0), 1));
        assert_eq!(a, b);
        // half away from zero
        assert_eq!(Landmark::new(2.5, -0.5).rounded(), (3, -1));
    }

    #[test]
    fn crop_is_translation_consistent() {
        let img = GrayImage::from_fn(20, 20, |x, y| ((x * 7 + y * 13) % 17) as f64);
        let shifted = img.translated(3, -2);
        let roi = Roi::square(Landmark::new(10.0, 9.0), 3);
        let moved = Roi::square(Landmark::new(7.0, 11.0), 3);
        assert_eq!(crop(&shifted, &roi), crop(&img, &moved));
    }

    #[test]
    fn downsample_shapes_and_dc() {
        let c = GrayImage::filled(4, 4, 42.0f64);
        let d = downsample2(&c).unwrap();
        assert_eq!(d.dims(), (2, 2));
        assert!(d.data().iter().all(|&v| (v - 42.0).abs() < 1e-12));
        assert_eq!(downsample2(&GrayImage::filled(7, 5, 1.0)).unwrap().dims(), (4, 3));
        assert!(matches!(
            downsample2(&GrayImage::filled(1, 5, 1.0)),
            Err(ImageError::TooSmall { .. })
        ));
    }

    #[test]
    fn downsample_impulse_matches_direct_convolution() {
        let img = GrayImage::from_fn(9, 9, |x, y| if x == 4 && y == 4 { 1.0 } else { 0.0 });
        let d = downsample2(&img).unwrap();
        assert_eq!(d.dims(), (5, 5));
        // Oracle: full-resolution 2-D convolution with the outer product, then
        // sample at even coordinates.
        let k = [1.0, 4.0, 6.0, 4.0, 1.0].map(|v| v / 16.0);
        for oy in 0..5 {
            for ox in 0..5 {
                let (x, y) = (2 * ox as isize, 2 * oy as isize);
                let mut expect = 0.0;
                for j in 0..5isize {
                    for i in 0..5isize {
                        if x + i - 2 == 4 && y + j - 2 == 4 {
                            expect += k[i as usize] * k[j as usize];
                        }
                    }
                }
                assert_abs_diff_eq!(d.get(ox, oy), expect, epsilon = 1e-15);
            }
        }
        assert_abs_diff_eq!(d.get(2, 2), 36.0 / 256.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.get(1, 2), 6.0 / 256.0, epsilon = 1e-15);
    }

    #[test]
    fn gaussian_window_cases() {
        let w1 = gaussian_window::<f64>(1, 3.0).unwrap();
        assert_eq!(w1.weights(), &[1.0]);
        assert!(matches!(gaussian_window::<f64>(4, 1.0), Err(ImageError::EvenWindow(4))));
        assert!(matches!(gaussian_window::<f64>(3, 0.0), Err(ImageError::BadSigma)));

        let w3 = gaussian_window::<f64>(3, 0.8).unwrap();
        for y in 0..3 {
            for x in 0..3 {
                // 90-degree rotation
                assert_eq!(w3.at(x, y), w3.at(2 - y, x));
            }
        }

        let w11 = gaussian_window::<f64>(11, 1.5).unwrap();
        let total: f64 = w11.weights().iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        // Oracle: normalized continuous-form Gaussian evaluated on the grid.
        let mut norm = 0.0;
        for y in -5i32..=5 {
            for x in -5i32..=5 {
                norm += (-((x * x + y * y) as f64) / 4.5).exp();
            }
        }
        assert_abs_diff_eq!(w11.at(5, 5), 1.0 / norm, epsilon = 1e-15);
        assert_abs_diff_eq!(w11.at(5, 5), 0.0708, epsilon = 5e-5);
    }

    #[test]
    fn valid_filter_matches_double_loop() {
        let img = GrayImage::from_fn(9, 7, |x, y| ((x * 3 + y * 5) % 11) as f64);
        let k = gaussian_kernel_1d::<f64>(3, 1.0).unwrap();
        let (out, ow, oh) = filter_valid(img.data(), 9, 7, &k);
        assert_eq!((ow, oh), (7, 5));
        for y in 0..oh {
            for x in 0..ow {
                let mut e = 0.0;
                for j in 0..3 {
                    for i in 0..3 {
                        e += k[i] * k[j] * img.get(x + i, y + j);
                    }
                }
                assert_abs_diff_eq!(out[y * ow + x], e, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn works_in_single_precision() {
        let img = GrayImage::<f32>::filled(6, 6, 10.0);
        let d = downsample2(&img).unwrap();
        assert!(d.data().iter().all(|&v| (v - 10.0).abs() < 1e-5));
    }
}
