//! Full-reference image similarity for B-mode ultrasound sequences.
//!
//! Six metrics (MSE, PSNR, SSIM, MS-SSIM, CW-SSIM, VIF) over grayscale
//! images, a synthetic speckle and periodic-motion benchmark, and landmark
//! trackers that snap back to their initial annotation whenever the current
//! frame looks enough like the reference.
//!
//! Image, pyramid and metric code is generic over the float type; the
//! aliases below fix it to `f64` (or `f32`) for everyday use.

pub mod harness;
pub mod image;
pub mod metrics;
pub mod pgm;
pub mod pyramid;
pub mod scalar;
pub mod sequence;
pub mod synth;
pub mod tracking;

pub use image::{crop, downsample2, ImageError, Landmark, Roi};
pub use metrics::{Metric, MetricConfig, MetricError};
pub use pgm::{load_pgm, save_pgm, PgmError};
pub use pyramid::{decompose, PyramidParams};
pub use scalar::Real;

/// Double-precision grayscale image.
pub type Image = image::GrayImage<f64>;
/// Single-precision grayscale image.
pub type Image32 = image::GrayImage<f32>;
pub type Pyramid = pyramid::Pyramid<f64>;
pub type Score = metrics::SimilarityScore<f64>;
pub type Sequence = sequence::Sequence<f64>;
