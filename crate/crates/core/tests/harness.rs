use ussim::harness::{pearson, run_correlation_study, run_trace, Benchmark};
use ussim::metrics::{Metric, MetricConfig};
use ussim::sequence::Sequence;
use ussim::synth::MotionSpec;

fn two_pass(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

#[test]
fn benchmark_ranks_cw_ssim_first_and_repeats() {
    let b = Benchmark::standard();
    let seq = b.sequence(0).unwrap();
    let metrics = [Metric::Mse, Metric::Ssim, Metric::MsSsim, Metric::CwSsim];
    let roi = b.similarity_roi();
    let r = run_correlation_study(&seq, &metrics, Some(&roi), &MetricConfig::default()).unwrap();
    assert_eq!(r.ranking[0].metric, Metric::CwSsim, "{:?}", r.ranking);
    assert!(r.ranking.iter().all(|e| (0.0..=1.0).contains(&e.abs_pearson)));
    let again = run_correlation_study(&seq, &metrics, Some(&roi), &MetricConfig::default()).unwrap();
    assert_eq!(r.to_json(), again.to_json());

    // Every emitted coefficient against a brute-force oracle on the same
    // series (reference frame left out).
    let trace = run_trace(&seq, &metrics, Some(&roi), &MetricConfig::default()).unwrap();
    let lateral: Vec<f64> = seq.landmarks().unwrap()[1..].iter().map(|l| l[0].x).collect();
    for e in &r.ranking {
        let col = trace.column(e.metric).unwrap();
        let want = two_pass(&lateral, &col[1..]).abs();
        assert!((e.abs_pearson - want).abs() < 1e-10, "{}: {} vs {want}", e.metric, e.abs_pearson);
    }
}

#[test]
fn static_trace_is_identity_and_unnormalizable() {
    let mut b = Benchmark::standard().without_speckle();
    b.motion = MotionSpec::new(0.0, 30.0, 10);
    let seq = b.sequence(3).unwrap();
    let t = run_trace(&seq, &[Metric::Ssim, Metric::CwSsim], Some(&b.similarity_roi()), &MetricConfig::default()).unwrap();
    assert!(t.raw.iter().flatten().all(|&v| v == 1.0));
    assert!(t.normalized.iter().all(Option::is_none));
    assert_eq!(t.notes.len(), 2);
}

#[test]
fn single_frame_trace_has_one_row() {
    let seq = Sequence::from_frames(vec![Benchmark::standard().sequence(0).unwrap().frames()[0].clone()]).unwrap();
    let t = run_trace(&seq, &[Metric::Ssim], None, &MetricConfig::default()).unwrap();
    assert_eq!(t.frames(), 1);
    assert_eq!(t.to_csv().lines().count(), 2);
    assert!(t.normalized[0].is_none());
}

#[test]
fn pearson_rejects_degenerate_input() {
    assert_eq!(pearson(&[1.0, 2.0], &[1.0, 2.0]).unwrap_err().kind(), "series_too_short");
    assert_eq!(pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap_err().kind(), "constant_series");
    assert_eq!(pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0]).unwrap_err().kind(), "length_mismatch");
}
