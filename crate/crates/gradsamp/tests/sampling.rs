//! Statistical consistency of the ball sampler against the analytic cone
//! fractions, across the dimensions of the reference table's cheap range.

use gradsamp::core::norm;
use gradsamp::geometry::d2_fraction;
use gradsamp::optimizer::{sample_ball, GSParams};

#[test]
fn membership_fraction_matches_analytic_value_across_dimensions() {
    let trials = 500_000usize;
    let params = GSParams {
        seed: 99,
        ..Default::default()
    };
    for n in 2..=10usize {
        let p = d2_fraction(n).unwrap();
        let mut rng = params.rng_for_trial(n as u64);
        let center = vec![0.0; n];
        let mut hits = 0u64;
        // draw in blocks to keep allocations modest
        let block = 10_000;
        let mut remaining = trials;
        while remaining > 0 {
            let take = remaining.min(block);
            for y in sample_ball(&mut rng, &center, 1.0, take) {
                if y[n - 1] > norm(&y[..n - 1]) {
                    hits += 1;
                }
            }
            remaining -= take;
        }
        let est = hits as f64 / trials as f64;
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        assert!(
            (est - p).abs() <= 4.0 * sigma,
            "n={n}: estimate {est} vs analytic {p} ({:+.2}σ)",
            (est - p) / sigma
        );
    }
}
