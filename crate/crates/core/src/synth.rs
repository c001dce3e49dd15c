//! Synthetic B-mode-like test data: textured phantoms with bright disc
//! landmarks, multiplicative Rayleigh speckle, and periodic lateral motion
//! with exact ground-truth tracks.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::image::{GrayImage, Landmark};
use crate::sequence::{Sequence, SequenceError};

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("disc {index} (center {x:.3},{y:.3}, radius {radius}) leaves the {width}x{height} frame")]
    DiscOutside {
        index: usize,
        x: f64,
        y: f64,
        radius: f64,
        width: usize,
        height: usize,
    },
    #[error("invalid spec: {0}")]
    BadSpec(String),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
}

/// A bright disc landmark.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disc {
    pub center: Landmark,
    pub radius: f64,
    #[serde(default = "default_disc_intensity")]
    pub intensity: f64,
}

fn default_disc_intensity() -> f64 {
    200.0
}

impl Disc {
    pub fn new(center: Landmark, radius: f64) -> Self {
        Self {
            center,
            radius,
            intensity: default_disc_intensity(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub width: usize,
    pub height: usize,
    pub background_mean: f64,
    pub background_texture_sigma: f64,
    pub landmarks: Vec<Disc>,
}

impl PhantomSpec {
    /// Blank `width × height` phantom with the default background.
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            background_mean: 80.0,
            background_texture_sigma: 10.0,
            landmarks: Vec::new(),
        }
    }

    /// 256×256 frame with one radius-10 disc at the centre.
    pub fn standard() -> Self {
        let mut spec = Self::new(256, 256);
        spec.landmarks.push(Disc::new(Landmark::new(128.0, 128.0), 10.0));
        spec
    }

    pub fn with_disc(mut self, disc: Disc) -> Self {
        self.landmarks.push(disc);
        self
    }

    fn validate(&self) -> Result<(), SynthError> {
        if self.width == 0 || self.height == 0 {
            return Err(SynthError::BadSpec("phantom dimensions must be positive".into()));
        }
        if !(self.background_texture_sigma >= 0.0 && self.background_texture_sigma.is_finite()) {
            return Err(SynthError::BadSpec("texture sigma must be non-negative".into()));
        }
        for d in &self.landmarks {
            if !(d.radius > 0.0 && d.radius.is_finite()) {
                return Err(SynthError::BadSpec(format!("disc radius {} must be positive", d.radius)));
            }
        }
        Ok(())
    }

    fn check_discs(&self, centers: &[Landmark]) -> Result<(), SynthError> {
        for (index, (d, c)) in self.landmarks.iter().zip(centers).enumerate() {
            let inside = c.x - d.radius >= 0.0
                && c.y - d.radius >= 0.0
                && c.x + d.radius <= (self.width - 1) as f64
                && c.y + d.radius <= (self.height - 1) as f64;
            if !inside {
                return Err(SynthError::DiscOutside {
                    index,
                    x: c.x,
                    y: c.y,
                    radius: d.radius,
                    width: self.width,
                    height: self.height,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeckleSpec {
    /// Blend between the clean image (0) and full multiplicative speckle (1).
    pub alpha: f64,
    pub rayleigh_sigma: f64,
    pub seed: u64,
}

impl SpeckleSpec {
    pub fn new(alpha: f64, seed: u64) -> Self {
        Self {
            alpha,
            rayleigh_sigma: 1.0,
            seed,
        }
    }

    fn validate(&self) -> Result<(), SynthError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(SynthError::BadSpec(format!("speckle alpha {} outside [0, 1]", self.alpha)));
        }
        if !(self.rayleigh_sigma > 0.0 && self.rayleigh_sigma.is_finite()) {
            return Err(SynthError::BadSpec("rayleigh sigma must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    #[default]
    Lateral,
    Axial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionSpec {
    /// Peak displacement in pixels.
    pub amplitude: f64,
    /// Frames per cycle.
    pub period: f64,
    pub n_frames: usize,
    /// Radians.
    #[serde(default)]
    pub phase: f64,
    #[serde(default)]
    pub axis: Axis,
}

impl MotionSpec {
    pub fn new(amplitude: f64, period: f64, n_frames: usize) -> Self {
        Self {
            amplitude,
            period,
            n_frames,
            phase: 0.0,
            axis: Axis::Lateral,
        }
    }

    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = phase;
        self
    }

    /// Signed displacement at frame `t`.
    pub fn displacement(&self, t: usize) -> f64 {
        self.amplitude * (2.0 * PI * t as f64 / self.period + self.phase).sin()
    }

    fn validate(&self) -> Result<(), SynthError> {
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(SynthError::BadSpec("amplitude must be non-negative".into()));
        }
        if !(self.period >= 2.0 && self.period.is_finite()) {
            return Err(SynthError::BadSpec(format!("period {} must be at least 2", self.period)));
        }
        if self.n_frames == 0 {
            return Err(SynthError::BadSpec("sequence needs at least one frame".into()));
        }
        Ok(())
    }
}

/// Samples per pixel edge used to integrate disc coverage.
const COVERAGE_SAMPLES: usize = 64;

/// Fraction of the unit pixel centred on `(px, py)` covered by the disc.
/// Integrates the exact vertical chord length over sub-columns.
fn disc_coverage(px: f64, py: f64, cx: f64, cy: f64, r: f64) -> f64 {
    let d = ((px - cx).powi(2) + (py - cy).powi(2)).sqrt();
    if d <= r - std::f64::consts::FRAC_1_SQRT_2 {
        return 1.0;
    }
    if d >= r + std::f64::consts::FRAC_1_SQRT_2 {
        return 0.0;
    }
    let step = 1.0 / COVERAGE_SAMPLES as f64;
    let mut covered = 0.0;
    for k in 0..COVERAGE_SAMPLES {
        let x = px - 0.5 + (k as f64 + 0.5) * step;
        let dx = x - cx;
        let half = r * r - dx * dx;
        if half <= 0.0 {
            continue;
        }
        let half = half.sqrt();
        let lo = (cy - half).max(py - 0.5);
        let hi = (cy + half).min(py + 0.5);
        if hi > lo {
            covered += hi - lo;
        }
    }
    covered * step
}

fn texture(spec: &PhantomSpec, seed: u64) -> GrayImage<f64> {
    if spec.background_texture_sigma == 0.0 {
        return GrayImage::filled(spec.width, spec.height, spec.background_mean.clamp(0.0, 255.0));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(spec.background_mean, spec.background_texture_sigma).expect("validated sigma");
    GrayImage::from_fn(spec.width, spec.height, |_, _| normal.sample(&mut rng).clamp(0.0, 255.0))
}

fn render(background: &GrayImage<f64>, discs: &[Disc], centers: &[Landmark]) -> GrayImage<f64> {
    let mut data = background.data().to_vec();
    let w = background.width();
    for (d, c) in discs.iter().zip(centers) {
        let x0 = (c.x - d.radius - 1.0).floor().max(0.0) as usize;
        let y0 = (c.y - d.radius - 1.0).floor().max(0.0) as usize;
        let x1 = ((c.x + d.radius + 1.0).ceil() as usize).min(w - 1);
        let y1 = ((c.y + d.radius + 1.0).ceil() as usize).min(background.height() - 1);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let cov = disc_coverage(x as f64, y as f64, c.x, c.y, d.radius);
                if cov > 0.0 {
                    let v = &mut data[y * w + x];
                    *v = *v * (1.0 - cov) + d.intensity * cov;
                }
            }
        }
    }
    GrayImage::new(w, background.height(), data).expect("same raster shape")
}

/// Textured background with anti-aliased discs. Deterministic in `seed`.
pub fn make_phantom(spec: &PhantomSpec, seed: u64) -> Result<GrayImage<f64>, SynthError> {
    spec.validate()?;
    let centers: Vec<Landmark> = spec.landmarks.iter().map(|d| d.center).collect();
    spec.check_discs(&centers)?;
    Ok(render(&texture(spec, seed), &spec.landmarks, &centers))
}

/// Noise-free smooth phantom: a broad Gaussian blob over a sinusoidal
/// texture of 0.3–0.6 rad/px, with position, frequency and phase drawn from
/// `seed`. The texture keeps every pyramid level populated.
pub fn smooth_phantom(width: usize, height: usize, seed: u64) -> GrayImage<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (width as f64, height as f64);
    let cx = rng.random_range(0.35..0.65) * w;
    let cy = rng.random_range(0.35..0.65) * h;
    let sigma = rng.random_range(0.08..0.12) * w.min(h);
    let fx = rng.random_range(0.3..0.6);
    let fy = rng.random_range(0.2..0.4);
    let phase = rng.random_range(0.0..2.0 * PI);
    GrayImage::from_fn(width, height, |x, y| {
        let (dx, dy) = (x as f64 - cx, y as f64 - cy);
        let blob = 120.0 * (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp();
        let wave = 30.0 * (x as f64 * fx + phase).sin() * (y as f64 * fy).cos();
        60.0 + blob + wave
    })
}

/// Unit-mean multiplicative Rayleigh speckle blended in with weight `alpha`:
/// `clamp(x · ((1 − α) + α·r), 0, 255)`.
pub fn apply_speckle(image: &GrayImage<f64>, spec: &SpeckleSpec) -> Result<GrayImage<f64>, SynthError> {
    spec.validate()?;
    if spec.alpha == 0.0 {
        return Ok(image.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mean = spec.rayleigh_sigma * (PI / 2.0).sqrt();
    let (a, keep) = (spec.alpha, 1.0 - spec.alpha);
    Ok(image.map(|v| {
        let u: f64 = rng.random();
        let r = spec.rayleigh_sigma * (-2.0 * (1.0 - u).ln()).sqrt() / mean;
        (v * (keep + a * r)).clamp(0.0, 255.0)
    }))
}

/// Disc centers displaced by `motion` at frame `t`.
pub fn displaced_centers(spec: &PhantomSpec, motion: &MotionSpec, t: usize) -> Vec<Landmark> {
    let d = motion.displacement(t);
    spec.landmarks
        .iter()
        .map(|disc| match motion.axis {
            Axis::Lateral => disc.center.offset(d, 0.0),
            Axis::Axial => disc.center.offset(0.0, d),
        })
        .collect()
}

/// Sequence whose discs oscillate sinusoidally over a static textured
/// background. Frame 0 is the reference and the sequence's landmarks hold
/// the exact displaced centers. Speckle, when given, is re-seeded per frame
/// with `speckle.seed + t`.
pub fn periodic_sequence(
    phantom: &PhantomSpec,
    motion: &MotionSpec,
    speckle: Option<&SpeckleSpec>,
    seed: u64,
) -> Result<Sequence<f64>, SynthError> {
    phantom.validate()?;
    motion.validate()?;
    if let Some(s) = speckle {
        s.validate()?;
    }
    let truth: Vec<Vec<Landmark>> = (0..motion.n_frames)
        .map(|t| displaced_centers(phantom, motion, t))
        .collect();
    for centers in &truth {
        phantom.check_discs(centers)?;
    }
    let background = texture(phantom, seed);
    let frames = truth
        .par_iter()
        .enumerate()
        .map(|(t, centers)| {
            let clean = render(&background, &phantom.landmarks, centers);
            match speckle {
                Some(s) => apply_speckle(
                    &clean,
                    &SpeckleSpec {
                        seed: s.seed.wrapping_add(t as u64),
                        ..*s
                    },
                ),
                None => Ok(clean),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Sequence::new(frames, 1.0, 0, Some(truth))?)
}
