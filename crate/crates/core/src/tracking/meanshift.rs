use serde::{Deserialize, Serialize};

use super::{check_init, TrackError, Tracker};
use crate::image::{GrayImage, Landmark};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanShiftConfig {
    pub roi_half: usize,
    /// Histogram bins over `[0, 255]`.
    pub bins: usize,
    pub max_iters: usize,
    /// Convergence threshold on the shift length, pixels.
    pub epsilon: f64,
    /// Multiplicative ROI scale candidates tried after convergence.
    pub scale_steps: Vec<f64>,
    /// Down-weight model bins that are common in the surrounding background
    /// when computing the shift weights.
    #[serde(default = "yes")]
    pub background_weighting: bool,
}

fn yes() -> bool {
    true
}

impl Default for MeanShiftConfig {
    fn default() -> Self {
        Self {
            roi_half: 12,
            bins: 32,
            max_iters: 20,
            epsilon: 0.1,
            scale_steps: vec![0.9, 1.0, 1.1],
            background_weighting: true,
        }
    }
}

impl MeanShiftConfig {
    pub fn validate(&self) -> Result<(), TrackError> {
        if self.bins < 2 {
            return Err(TrackError::BadConfig("mean shift needs at least 2 bins".into()));
        }
        if self.max_iters == 0 {
            return Err(TrackError::BadConfig("max_iters must be at least 1".into()));
        }
        if self.roi_half == 0 {
            return Err(TrackError::BadConfig("roi_half must be positive".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(TrackError::BadConfig("epsilon must be positive".into()));
        }
        if self.scale_steps.is_empty() || self.scale_steps.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(TrackError::BadConfig("scale steps must be positive".into()));
        }
        Ok(())
    }
}

/// Pixels inside the Epanechnikov support of a `half`-sized window at
/// `center`, with their kernel weights.
fn support(frame: &GrayImage<f64>, center: Landmark, half: f64) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
    let x0 = (center.x - half).ceil().max(0.0) as usize;
    let y0 = (center.y - half).ceil().max(0.0) as usize;
    let x1 = (center.x + half).floor().min(frame.width() as f64 - 1.0);
    let y1 = (center.y + half).floor().min(frame.height() as f64 - 1.0);
    let (x1, y1) = (x1.max(-1.0) as isize, y1.max(-1.0) as isize);
    (y0 as isize..=y1).flat_map(move |y| {
        (x0 as isize..=x1).filter_map(move |x| {
            let dx = (x as f64 - center.x) / half;
            let dy = (y as f64 - center.y) / half;
            let r2 = dx * dx + dy * dy;
            (r2 < 1.0).then_some((x as usize, y as usize, 1.0 - r2))
        })
    })
}

fn bin_of(v: f64, bins: usize) -> usize {
    ((v / 256.0 * bins as f64).floor().max(0.0) as usize).min(bins - 1)
}

/// Kernel-weighted, unit-sum intensity histogram; `None` when no pixel has
/// positive weight.
fn histogram(frame: &GrayImage<f64>, center: Landmark, half: f64, bins: usize) -> Option<Vec<f64>> {
    let mut h = vec![0.0; bins];
    for (x, y, k) in support(frame, center, half) {
        h[bin_of(frame.get(x, y), bins)] += k;
    }
    let total: f64 = h.iter().sum();
    if total <= 0.0 {
        return None;
    }
    h.iter_mut().for_each(|v| *v /= total);
    Some(h)
}

/// Per-bin factors `min(o*/o_u, 1)` from the histogram `o` of the square
/// ring between the kernel support and twice its half-size, `o*` being the
/// smallest non-zero bin. Bins absent from the ring keep factor 1.
fn background_factors(frame: &GrayImage<f64>, center: Landmark, half: f64, bins: usize) -> Vec<f64> {
    let mut o = vec![0.0; bins];
    let outer = 2.0 * half;
    let x0 = (center.x - outer).ceil().max(0.0) as usize;
    let y0 = (center.y - outer).ceil().max(0.0) as usize;
    let x1 = (center.x + outer).floor().min(frame.width() as f64 - 1.0) as usize;
    let y1 = (center.y + outer).floor().min(frame.height() as f64 - 1.0) as usize;
    for y in y0..=y1 {
        for x in x0..=x1 {
            let dx = (x as f64 - center.x) / half;
            let dy = (y as f64 - center.y) / half;
            if dx * dx + dy * dy >= 1.0 {
                o[bin_of(frame.get(x, y), bins)] += 1.0;
            }
        }
    }
    let smallest = o.iter().copied().filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min);
    o.iter()
        .map(|&v| if v > 0.0 { (smallest / v).min(1.0) } else { 1.0 })
        .collect()
}

/// Bhattacharyya coefficient `Σ √(p·q)`.
pub(crate) fn bhattacharyya(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a * b).sqrt()).sum()
}

/// Kernel mean-shift tracker on intensity histograms with a fixed frame-0
/// model and per-landmark ROI rescaling. Orientation is not adapted.
///
/// With background weighting the shift weights use the model re-weighted
/// by how rare each bin is in the frame-0 surroundings; the rescaling step
/// always compares against the plain model.
#[derive(Debug, Clone)]
pub struct MeanShiftTracker {
    cfg: MeanShiftConfig,
    init: Vec<Landmark>,
    models: Vec<Vec<f64>>,
    /// Model bins after background weighting, used for the shift weights.
    shift_models: Vec<Vec<f64>>,
    current: Vec<Landmark>,
    scales: Vec<f64>,
    last_rho: Vec<f64>,
}

impl MeanShiftTracker {
    pub fn new(cfg: MeanShiftConfig) -> Result<Self, TrackError> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            init: Vec::new(),
            models: Vec::new(),
            shift_models: Vec::new(),
            current: Vec::new(),
            scales: Vec::new(),
            last_rho: Vec::new(),
        })
    }

    /// Current ROI scale per landmark, relative to `roi_half`.
    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    /// Bhattacharyya coefficient per landmark after the last step.
    pub fn last_rho(&self) -> &[f64] {
        &self.last_rho
    }
}

impl Tracker for MeanShiftTracker {
    fn start(&mut self, reference: &GrayImage<f64>, init: &[Landmark]) -> Result<(), TrackError> {
        check_init(init, reference.width(), reference.height(), self.cfg.roi_half)?;
        let half = self.cfg.roi_half as f64;
        self.models = init
            .iter()
            .enumerate()
            .map(|(landmark, &l)| {
                histogram(reference, l, half, self.cfg.bins).ok_or(TrackError::EmptyHistogram { landmark, frame: 0 })
            })
            .collect::<Result<_, _>>()?;
        self.shift_models = self
            .models
            .iter()
            .zip(init)
            .map(|(q, &l)| {
                if !self.cfg.background_weighting {
                    return q.clone();
                }
                let v = background_factors(reference, l, half, self.cfg.bins);
                q.iter().zip(v).map(|(a, b)| a * b).collect()
            })
            .collect();
        self.init = init.to_vec();
        self.reset();
        Ok(())
    }

    fn step(&mut self, t: usize, frame: &GrayImage<f64>) -> Result<(), TrackError> {
        let bins = self.cfg.bins;
        self.last_rho.clear();
        for k in 0..self.current.len() {
            let q = &self.models[k];
            let qs = &self.shift_models[k];
            let half = self.cfg.roi_half as f64 * self.scales[k];
            let mut y = self.current[k];
            for _ in 0..self.cfg.max_iters {
                let p = histogram(frame, y, half, bins).ok_or(TrackError::EmptyHistogram { landmark: k, frame: t })?;
                let weights: Vec<f64> = p
                    .iter()
                    .zip(qs)
                    .map(|(&pb, &qb)| if pb > 0.0 { (qb / pb).sqrt() } else { 0.0 })
                    .collect();
                let (mut sx, mut sy, mut sw) = (0.0, 0.0, 0.0);
                for (x, yy, _) in support(frame, y, half) {
                    let w = weights[bin_of(frame.get(x, yy), bins)];
                    sx += w * x as f64;
                    sy += w * yy as f64;
                    sw += w;
                }
                if sw <= 0.0 {
                    // Nothing in the window resembles the model; stay put.
                    break;
                }
                let next = Landmark::new(sx / sw, sy / sw);
                let moved = next.distance(y);
                y = next;
                if moved < self.cfg.epsilon {
                    break;
                }
            }
            // Rescaling: the current scale wins ties.
            let current_rho = histogram(frame, y, half, bins)
                .map(|p| bhattacharyya(&p, q))
                .ok_or(TrackError::EmptyHistogram { landmark: k, frame: t })?;
            let (mut best_scale, mut best_rho) = (self.scales[k], current_rho);
            for &s in &self.cfg.scale_steps {
                if s == 1.0 {
                    continue;
                }
                let candidate = self.scales[k] * s;
                if let Some(p) = histogram(frame, y, self.cfg.roi_half as f64 * candidate, bins) {
                    let rho = bhattacharyya(&p, q);
                    if rho > best_rho {
                        best_rho = rho;
                        best_scale = candidate;
                    }
                }
            }
            self.scales[k] = best_scale;
            self.current[k] = y;
            self.last_rho.push(best_rho);
        }
        Ok(())
    }

    fn reset(&mut self) {
        self.current = self.init.clone();
        self.scales = vec![1.0; self.init.len()];
    }

    fn estimates(&self) -> &[Landmark] {
        &self.current
    }
}
