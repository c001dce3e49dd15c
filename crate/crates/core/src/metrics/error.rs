use crate::image::ImageError;
use crate::pyramid::PyramidError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Pyramid(#[from] PyramidError),
    #[error("{metric}: image {width}x{height} too small, need min side {min}")]
    TooSmall {
        metric: &'static str,
        width: usize,
        height: usize,
        min: usize,
    },
    #[error("invalid parameters: {0}")]
    BadParams(String),
    #[error("reference carries no information (flat image)")]
    DegenerateReference,
    #[error("series is constant; normalization undefined")]
    ConstantSeries,
    #[error("series needs at least {needed} values, got {found}")]
    SeriesTooShort { needed: usize, found: usize },
    #[error("series contains NaN or -inf at index {0}")]
    NonFinite(usize),
    #[error("unknown metric {0:?}")]
    UnknownMetric(String),
}
