mod common;

use std::f64::consts::PI;

use mdiqkd::physics::{phase_randomization_cdf, phase_randomization_density};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn chernoff_intervals_cover_the_mean() {
    let epsilon = 1e-2;
    for (k, (n, q)) in [(10_000, 1e-3), (10_000, 0.1), (1_000_000, 1e-3), (1_000_000, 0.1)].into_iter().enumerate() {
        let coverage = common::chernoff_coverage(n, q, epsilon, 100_000, 40 + k as u64);
        assert!(coverage >= 1.0 - 10.0 * epsilon, "N {n}, q {q}: coverage {coverage}");
    }
}

#[test]
fn phase_density_integrates_to_one() {
    assert!((common::density_integral(1000) - 1.0).abs() < 1e-6);
    assert!((phase_randomization_cdf(1.0) - 1.0).abs() < 1e-15);
    assert!((phase_randomization_density(0.5).unwrap() - 2.0 / PI).abs() < 1e-15);
}

#[test]
fn phase_histogram_matches_density() {
    let p = common::phase_histogram_p_value(1_000_000, 50, 7);
    assert!(p > 0.01, "p-value {p}");
}

#[test]
fn sample_mean_is_one_half() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 200_000;
    let mean: f64 = (0..n).map(|_| 0.5 * (1.0 + rng.random_range(0.0..2.0 * PI).cos())).sum::<f64>() / n as f64;
    // standard deviation of x is 1/√8
    assert!((mean - 0.5).abs() < 4.0 * (0.125f64 / n as f64).sqrt());
}
