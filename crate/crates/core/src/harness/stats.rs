use super::HarnessError;
use crate::scalar::compensated_sum;

fn check_pair(x: &[f64], y: &[f64]) -> Result<(), HarnessError> {
    if x.len() != y.len() {
        return Err(HarnessError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(HarnessError::TooShort {
            needed: 3,
            found: x.len(),
        });
    }
    Ok(())
}

/// Sample Pearson correlation, two-pass with compensated sums.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, HarnessError> {
    check_pair(x, y)?;
    let n = x.len() as f64;
    let mx = compensated_sum(x) / n;
    let my = compensated_sum(y) / n;
    let dx: Vec<f64> = x.iter().map(|v| v - mx).collect();
    let dy: Vec<f64> = y.iter().map(|v| v - my).collect();
    let sxx = compensated_sum(&dx.iter().map(|d| d * d).collect::<Vec<_>>());
    let syy = compensated_sum(&dy.iter().map(|d| d * d).collect::<Vec<_>>());
    if sxx == 0.0 || syy == 0.0 {
        return Err(HarnessError::ConstantSeries);
    }
    let sxy = compensated_sum(&dx.iter().zip(&dy).map(|(a, b)| a * b).collect::<Vec<_>>());
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Ranks starting at 1, ties sharing their average rank.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation: Pearson on average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, HarnessError> {
    check_pair(x, y)?;
    pearson(&ranks(x), &ranks(y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn affine_and_reversed() {
        let x = [0.5, 1.0, 4.0, -2.0, 3.3];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert!((pearson(&x, &y).unwrap() - 1.0).abs() < 1e-12);
        let z: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &z).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn textbook_case() {
        let r = pearson(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((r - 0.8).abs() < 1e-12);
    }

    #[test]
    fn contract_errors() {
        assert!(matches!(pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(HarnessError::ConstantSeries)));
        assert!(matches!(pearson(&[1.0, 2.0], &[1.0, 2.0]), Err(HarnessError::TooShort { .. })));
        assert!(matches!(pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0]), Err(HarnessError::LengthMismatch(3, 2))));
    }

    #[test]
    fn spearman_handles_ties() {
        assert_eq!(ranks(&[10.0, 20.0, 10.0, 5.0]), vec![2.5, 4.0, 2.5, 1.0]);
        let r = spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 8.0, 27.0, 64.0]).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn matches_naive_two_pass(values in proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 3..40)) {
            let x: Vec<f64> = values.iter().map(|p| p.0).collect();
            let y: Vec<f64> = values.iter().map(|p| p.1).collect();
            let n = x.len() as f64;
            let mx = x.iter().sum::<f64>() / n;
            let my = y.iter().sum::<f64>() / n;
            let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
            let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
            let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
            prop_assume!(sxx > 1e-6 && syy > 1e-6);
            let naive = sxy / (sxx * syy).sqrt();
            prop_assert!((pearson(&x, &y).unwrap() - naive).abs() < 1e-10);
        }
    }
}
