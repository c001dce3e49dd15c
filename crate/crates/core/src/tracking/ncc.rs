use serde::{Deserialize, Serialize};

use super::{check_init, TrackError, Tracker};
use crate::image::{GrayImage, Landmark};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NccConfig {
    /// Template half-size; the template is `(2·roi_half+1)²`.
    pub roi_half: usize,
    /// Search-region half-size around the previous estimate.
    pub search_half: usize,
    /// Parabolic sub-pixel peak refinement.
    pub subpixel: bool,
}

impl Default for NccConfig {
    fn default() -> Self {
        Self {
            roi_half: 12,
            search_half: 24,
            subpixel: true,
        }
    }
}

impl NccConfig {
    pub fn validate(&self) -> Result<(), TrackError> {
        if self.search_half <= self.roi_half {
            return Err(TrackError::BadConfig(format!(
                "search_half {} must exceed roi_half {}",
                self.search_half, self.roi_half
            )));
        }
        Ok(())
    }
}

/// Zero-mean, unit-norm template.
#[derive(Debug, Clone)]
struct Template {
    side: usize,
    values: Vec<f64>,
}

impl Template {
    fn cut(frame: &GrayImage<f64>, cx: isize, cy: isize, half: usize) -> Option<Self> {
        let side = 2 * half + 1;
        let mut values = Vec::with_capacity(side * side);
        for y in 0..side {
            for x in 0..side {
                values.push(frame.get((cx - half as isize + x as isize) as usize, (cy - half as isize + y as isize) as usize));
            }
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        values.iter_mut().for_each(|v| *v -= mean);
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= f64::EPSILON * mean.abs().max(1.0) * values.len() as f64 {
            return None;
        }
        values.iter_mut().for_each(|v| *v /= norm);
        Some(Self { side, values })
    }

    /// Correlation with the window centred at `(cx, cy)`; 0 for a flat window.
    fn score(&self, frame: &GrayImage<f64>, cx: isize, cy: isize) -> f64 {
        let half = (self.side / 2) as isize;
        let (x0, y0) = ((cx - half) as usize, (cy - half) as usize);
        let n = (self.side * self.side) as f64;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut dot = 0.0;
        for y in 0..self.side {
            let row = &frame.row(y0 + y)[x0..x0 + self.side];
            let t = &self.values[y * self.side..(y + 1) * self.side];
            for (&v, &tv) in row.iter().zip(t) {
                sum += v;
                sum_sq += v * v;
                dot += v * tv;
            }
        }
        // The template is zero-mean, so the window mean drops out of `dot`.
        let var = sum_sq - sum * sum / n;
        if var <= 0.0 {
            0.0
        } else {
            dot / var.sqrt()
        }
    }
}

/// Fixed-template NCC tracker. The template is cut at the rounded initial
/// position and the fractional part of the annotation is carried along.
#[derive(Debug, Clone)]
pub struct NccTracker {
    cfg: NccConfig,
    init: Vec<Landmark>,
    templates: Vec<Template>,
    current: Vec<Landmark>,
    clamped: bool,
    last_peaks: Vec<f64>,
}

impl NccTracker {
    pub fn new(cfg: NccConfig) -> Result<Self, TrackError> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            init: Vec::new(),
            templates: Vec::new(),
            current: Vec::new(),
            clamped: false,
            last_peaks: Vec::new(),
        })
    }

    /// Peak correlation per landmark from the last step.
    pub fn last_peaks(&self) -> &[f64] {
        &self.last_peaks
    }
}

/// Vertex offset of the parabola through `(−1, a)`, `(0, b)`, `(1, c)`.
fn parabola_offset(a: f64, b: f64, c: f64) -> f64 {
    let den = a - 2.0 * b + c;
    if den >= 0.0 {
        return 0.0;
    }
    (0.5 * (a - c) / den).clamp(-0.5, 0.5)
}

impl Tracker for NccTracker {
    fn start(&mut self, reference: &GrayImage<f64>, init: &[Landmark]) -> Result<(), TrackError> {
        check_init(init, reference.width(), reference.height(), self.cfg.roi_half)?;
        self.templates = init
            .iter()
            .enumerate()
            .map(|(landmark, l)| {
                let (x, y) = l.rounded();
                Template::cut(reference, x, y, self.cfg.roi_half).ok_or(TrackError::ZeroVarianceTemplate { landmark })
            })
            .collect::<Result<_, _>>()?;
        self.init = init.to_vec();
        self.reset();
        Ok(())
    }

    fn step(&mut self, _t: usize, frame: &GrayImage<f64>) -> Result<(), TrackError> {
        let (w, h) = (frame.width() as isize, frame.height() as isize);
        let half = self.cfg.roi_half as isize;
        let reach = (self.cfg.search_half - self.cfg.roi_half) as isize;
        self.clamped = false;
        self.last_peaks.clear();
        for (k, tpl) in self.templates.iter().enumerate() {
            let prev = self.current[k];
            let (px, py) = prev.rounded();
            // Keep every candidate window inside the frame.
            let lo_x = (px - reach).max(half);
            let hi_x = (px + reach).min(w - 1 - half);
            let lo_y = (py - reach).max(half);
            let hi_y = (py + reach).min(h - 1 - half);
            if lo_x != px - reach || hi_x != px + reach || lo_y != py - reach || hi_y != py + reach {
                self.clamped = true;
            }
            if lo_x > hi_x || lo_y > hi_y {
                return Err(TrackError::LandmarkOutside {
                    landmark: k,
                    x: prev.x,
                    y: prev.y,
                    width: w as usize,
                    height: h as usize,
                });
            }
            let gw = (hi_x - lo_x + 1) as usize;
            let mut scores = Vec::with_capacity(gw * (hi_y - lo_y + 1) as usize);
            for cy in lo_y..=hi_y {
                for cx in lo_x..=hi_x {
                    scores.push(tpl.score(frame, cx, cy));
                }
            }
            // Row-major scan; replace only on a strictly better score or an
            // equal score closer to the previous estimate.
            let mut best = 0usize;
            let dist2 = |i: usize| {
                let dx = lo_x + (i % gw) as isize - px;
                let dy = lo_y + (i / gw) as isize - py;
                dx * dx + dy * dy
            };
            for i in 1..scores.len() {
                if scores[i] > scores[best] || (scores[i] == scores[best] && dist2(i) < dist2(best)) {
                    best = i;
                }
            }
            let (bx, by) = (best % gw, best / gw);
            let peak = scores[best];
            let (mut sx, mut sy) = (0.0, 0.0);
            if self.cfg.subpixel && peak < 1.0 - 1e-12 {
                let gh = scores.len() / gw;
                if bx > 0 && bx + 1 < gw {
                    sx = parabola_offset(scores[best - 1], peak, scores[best + 1]);
                }
                if by > 0 && by + 1 < gh {
                    sy = parabola_offset(scores[best - gw], peak, scores[best + gw]);
                }
            }
            let (ix, iy) = self.init[k].rounded();
            let (fx, fy) = (self.init[k].x - ix as f64, self.init[k].y - iy as f64);
            self.current[k] = Landmark::new(
                (lo_x + bx as isize) as f64 + fx + sx,
                (lo_y + by as isize) as f64 + fy + sy,
            );
            self.last_peaks.push(peak);
        }
        Ok(())
    }

    fn reset(&mut self) {
        self.current = self.init.clone();
        self.clamped = false;
    }

    fn estimates(&self) -> &[Landmark] {
        &self.current
    }

    fn clamped(&self) -> bool {
        self.clamped
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::Sequence;
    use crate::tracking::ncc_track;

    fn textured(w: usize, h: usize, seed: u64) -> GrayImage<f64> {
        let mut s = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
        GrayImage::from_fn(w, h, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64 * 255.0
        })
    }

    #[test]
    fn static_sequence_stays_put() {
        let f = textured(80, 80, 1);
        let seq = Sequence::from_frames(vec![f; 4]).unwrap();
        let init = [Landmark::new(40.3, 39.8)];
        let mut tr = NccTracker::new(NccConfig::default()).unwrap();
        let r = crate::tracking::track(&mut tr, &seq, &init).unwrap();
        assert!(r.estimates.iter().all(|e| e[0] == init[0]));
        assert!((tr.last_peaks()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn integer_translation_is_exact() {
        let f = textured(90, 90, 2);
        let shifted = f.translated(3, 0);
        let seq = Sequence::from_frames(vec![f, shifted]).unwrap();
        let init = [Landmark::new(45.0, 44.0), Landmark::new(30.25, 50.5)];
        let r = ncc_track(&seq, &init, &NccConfig::default()).unwrap();
        assert_eq!(r.estimates[1][0], Landmark::new(48.0, 44.0));
        assert_eq!(r.estimates[1][1], Landmark::new(33.25, 50.5));
    }

    #[test]
    fn parabola_vertex() {
        // Samples of −(x − 0.3)² at −1, 0, 1.
        let f = |x: f64| -(x - 0.3) * (x - 0.3);
        assert!((parabola_offset(f(-1.0), f(0.0), f(1.0)) - 0.3).abs() < 1e-12);
        assert_eq!(parabola_offset(1.0, 0.0, 1.0), 0.0);
    }

    #[test]
    fn flat_template_is_an_error() {
        let f = GrayImage::filled(60, 60, 7.0);
        let seq = Sequence::from_frames(vec![f.clone(), f]).unwrap();
        assert_eq!(
            ncc_track(&seq, &[Landmark::new(30.0, 30.0)], &NccConfig::default()),
            Err(TrackError::ZeroVarianceTemplate { landmark: 0 })
        );
    }

    #[test]
    fn border_search_is_clamped_and_flagged() {
        let f = textured(60, 60, 3);
        let seq = Sequence::from_frames(vec![f.clone(), f]).unwrap();
        let r = ncc_track(&seq, &[Landmark::new(14.0, 30.0)], &NccConfig::default()).unwrap();
        assert_eq!(r.clamped_frames, vec![1]);
        assert_eq!(r.estimates[1][0], Landmark::new(14.0, 30.0));
    }

    #[test]
    fn config_and_init_validation() {
        assert!(NccTracker::new(NccConfig {
            roi_half: 12,
            search_half: 12,
            subpixel: true
        })
        .is_err());
        let f = textured(60, 60, 4);
        let seq = Sequence::from_frames(vec![f]).unwrap();
        assert!(matches!(
            ncc_track(&seq, &[Landmark::new(5.0, 30.0)], &NccConfig::default()),
            Err(TrackError::LandmarkOutside { landmark: 0, .. })
        ));
    }
}
