use super::MetricError;

/// Min-max normalization onto `[0, 1]`.
///
/// `+inf` entries (the PSNR identity sentinel) are first replaced by the
/// largest finite value of the series.
pub fn normalize_series(values: &[f64]) -> Result<Vec<f64>, MetricError> {
    if values.len() < 2 {
        return Err(MetricError::SeriesTooShort {
            needed: 2,
            found: values.len(),
        });
    }
    if let Some(i) = values.iter().position(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
        return Err(MetricError::NonFinite(i));
    }
    let finite = values.iter().copied().filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if hi <= lo {
        return Err(MetricError::ConstantSeries);
    }
    let span = hi - lo;
    Ok(values
        .iter()
        .map(|&v| if v.is_finite() { (v - lo) / span } else { 1.0 })
        .collect())
}
