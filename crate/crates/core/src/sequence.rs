//! Frame sequences and their JSON manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::image::{GrayImage, Landmark};
use crate::pgm::{self, PgmError};
use crate::scalar::Real;

#[derive(Debug, thiserror::Error)]
pub enum SequenceError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("manifest json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("frame {path}: {source}")]
    Frame {
        path: PathBuf,
        #[source]
        source: PgmError,
    },
    #[error("sequence has no frames")]
    Empty,
    #[error("frame {index} is {found:?}, expected {expected:?}")]
    FrameDims {
        index: usize,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("landmark table has {found} rows for {frames} frames")]
    LandmarkRows { frames: usize, found: usize },
    #[error("frame {index} has {found} landmarks, expected {expected}")]
    LandmarkCount {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("landmark {landmark} of frame {index} lies outside the frame")]
    LandmarkOutside { index: usize, landmark: usize },
    #[error("reference frame {reference} out of range for {frames} frames")]
    ReferenceOutOfRange { reference: usize, frames: usize },
    #[error("pixel spacing must be positive and finite, got {0}")]
    BadSpacing(f64),
}

fn default_spacing() -> f64 {
    1.0
}

/// On-disk description of a sequence: frame paths (relative paths resolve
/// against the manifest's directory) plus optional per-frame landmarks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceManifest {
    pub frames: Vec<PathBuf>,
    #[serde(default = "default_spacing")]
    pub pixel_spacing_mm: f64,
    #[serde(default)]
    pub reference_frame: usize,
    #[serde(default)]
    pub landmarks: Option<Vec<Vec<Landmark>>>,
}

impl SequenceManifest {
    pub fn from_json(text: &str) -> Result<Self, SequenceError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, SequenceError> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), SequenceError> {
        fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    /// Loads every frame, resolving relative paths against `base_dir`.
    pub fn load<T: Real>(&self, base_dir: impl AsRef<Path>) -> Result<Sequence<T>, SequenceError> {
        let base = base_dir.as_ref();
        let frames = self
            .frames
            .iter()
            .map(|p| {
                let path = if p.is_absolute() { p.clone() } else { base.join(p) };
                pgm::load_pgm(&path).map_err(|source| SequenceError::Frame { path, source })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Sequence::new(frames, self.pixel_spacing_mm, self.reference_frame, self.landmarks.clone())
    }
}

/// Reads a manifest file and all the frames it names.
pub fn load_sequence<T: Real>(manifest_path: impl AsRef<Path>) -> Result<Sequence<T>, SequenceError> {
    let path = manifest_path.as_ref();
    let manifest = SequenceManifest::read(path)?;
    manifest.load(path.parent().unwrap_or_else(|| Path::new(".")))
}

/// Frames held in memory, validated against the manifest invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence<T> {
    frames: Vec<GrayImage<T>>,
    pixel_spacing_mm: f64,
    reference_frame: usize,
    landmarks: Option<Vec<Vec<Landmark>>>,
}

impl<T: Real> Sequence<T> {
    pub fn new(
        frames: Vec<GrayImage<T>>,
        pixel_spacing_mm: f64,
        reference_frame: usize,
        landmarks: Option<Vec<Vec<Landmark>>>,
    ) -> Result<Self, SequenceError> {
        let first = frames.first().ok_or(SequenceError::Empty)?;
        let dims = first.dims();
        for (index, f) in frames.iter().enumerate() {
            if f.dims() != dims {
                return Err(SequenceError::FrameDims {
                    index,
                    expected: dims,
                    found: f.dims(),
                });
            }
        }
        if !(pixel_spacing_mm > 0.0 && pixel_spacing_mm.is_finite()) {
            return Err(SequenceError::BadSpacing(pixel_spacing_mm));
        }
        if reference_frame >= frames.len() {
            return Err(SequenceError::ReferenceOutOfRange {
                reference: reference_frame,
                frames: frames.len(),
            });
        }
        if let Some(rows) = &landmarks {
            if rows.len() != frames.len() {
                return Err(SequenceError::LandmarkRows {
                    frames: frames.len(),
                    found: rows.len(),
                });
            }
            let expected = rows[0].len();
            for (index, row) in rows.iter().enumerate() {
                if row.len() != expected {
                    return Err(SequenceError::LandmarkCount {
                        index,
                        expected,
                        found: row.len(),
                    });
                }
                if let Some(landmark) = row.iter().position(|l| !l.is_inside(dims.0, dims.1)) {
                    return Err(SequenceError::LandmarkOutside { index, landmark });
                }
            }
        }
        Ok(Self {
            frames,
            pixel_spacing_mm,
            reference_frame,
            landmarks,
        })
    }

    /// Sequence without annotations, spacing 1 mm/px, reference frame 0.
    pub fn from_frames(frames: Vec<GrayImage<T>>) -> Result<Self, SequenceError> {
        Self::new(frames, 1.0, 0, None)
    }

    pub fn frames(&self) -> &[GrayImage<T>] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.frames[0].dims()
    }

    pub fn pixel_spacing_mm(&self) -> f64 {
        self.pixel_spacing_mm
    }

    pub fn reference_frame(&self) -> usize {
        self.reference_frame
    }

    pub fn reference(&self) -> &GrayImage<T> {
        &self.frames[self.reference_frame]
    }

    pub fn landmarks(&self) -> Option<&[Vec<Landmark>]> {
        self.landmarks.as_deref()
    }

    /// Writes `frame_NNNN.pgm` files plus `manifest.json` into `dir` and
    /// returns the manifest (with paths relative to `dir`).
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<SequenceManifest, SequenceError> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let mut paths = Vec::with_capacity(self.frames.len());
        for (i, frame) in self.frames.iter().enumerate() {
            let name = PathBuf::from(format!("frame_{i:04}.pgm"));
            let path = dir.join(&name);
            pgm::save_pgm(frame, &path).map_err(|source| SequenceError::Frame { path, source })?;
            paths.push(name);
        }
        let manifest = SequenceManifest {
            frames: paths,
            pixel_spacing_mm: self.pixel_spacing_mm,
            reference_frame: self.reference_frame,
            landmarks: self.landmarks.clone(),
        };
        manifest.write(dir.join("manifest.json"))?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_json_shape() {
        let text = r#"{"frames": ["a.pgm", "b.pgm"], "pixel_spacing_mm": 0.5,
                       "reference_frame": 1, "landmarks": [[{"x": 1.0, "y": 2.0}], [{"x": 1.5, "y": 2.0}]]}"#;
        let m = SequenceManifest::from_json(text).unwrap();
        assert_eq!(m.frames.len(), 2);
        assert_eq!(m.pixel_spacing_mm, 0.5);
        assert_eq!(m.reference_frame, 1);
        assert_eq!(m.landmarks.as_ref().unwrap()[1][0], Landmark::new(1.5, 2.0));

        let minimal = SequenceManifest::from_json(r#"{"frames": ["a.pgm"], "landmarks": null}"#).unwrap();
        assert_eq!(minimal.pixel_spacing_mm, 1.0);
        assert_eq!(minimal.reference_frame, 0);
        assert!(minimal.landmarks.is_none());
    }

    #[test]
    fn validation_errors() {
        let a = GrayImage::filled(4, 4, 1.0f64);
        let b = GrayImage::filled(5, 4, 1.0f64);
        assert!(matches!(Sequence::<f64>::from_frames(vec![]), Err(SequenceError::Empty)));
        assert!(matches!(
            Sequence::from_frames(vec![a.clone(), b]),
            Err(SequenceError::FrameDims { index: 1, .. })
        ));
        assert!(matches!(
            Sequence::new(vec![a.clone()], 1.0, 3, None),
            Err(SequenceError::ReferenceOutOfRange { .. })
        ));
        assert!(matches!(
            Sequence::new(vec![a.clone()], 0.0, 0, None),
            Err(SequenceError::BadSpacing(_))
        ));
        assert!(matches!(
            Sequence::new(vec![a.clone(), a.clone()], 1.0, 0, Some(vec![vec![Landmark::new(1.0, 1.0)]])),
            Err(SequenceError::LandmarkRows { .. })
        ));
        assert!(matches!(
            Sequence::new(vec![a.clone()], 1.0, 0, Some(vec![vec![Landmark::new(4.0, 1.0)]])),
            Err(SequenceError::LandmarkOutside { index: 0, landmark: 0 })
        ));
    }

    #[test]
    fn write_then_load() {
        let frames = vec![
            GrayImage::from_fn(6, 5, |x, y| (x * 10 + y) as f64),
            GrayImage::filled(6, 5, 7.0),
        ];
        let marks = vec![vec![Landmark::new(2.25, 3.0)], vec![Landmark::new(2.5, 3.0)]];
        let seq = Sequence::new(frames, 0.3, 0, Some(marks)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        seq.write(dir.path()).unwrap();
        let back: Sequence<f64> = load_sequence(dir.path().join("manifest.json")).unwrap();
        assert_eq!(back, seq);
    }

    #[test]
    fn missing_frame_reports_path() {
        let m = SequenceManifest::from_json(r#"{"frames": ["nope.pgm"]}"#).unwrap();
        let err = m.load::<f64>("/nonexistent").unwrap_err();
        assert!(matches!(err, SequenceError::Frame { .. }));
    }
}
