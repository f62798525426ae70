//! Sample statistics and bootstrap intervals.

use rand::Rng;

use crate::rng;

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Unbiased sample variance.
///
/// Deviations are taken from the first value before the usual two-pass
/// formula, so a constant sample gives exactly zero.
pub fn unbiased_variance(values: &[f64]) -> f64 {
    let count = values.len();
    if count < 2 {
        return 0.0;
    }
    let anchor = values[0];
    let shifted: Vec<f64> = values.iter().map(|v| v - anchor).collect();
    let m = mean(&shifted);
    shifted.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (count - 1) as f64
}

/// Linear-interpolation quantile of sorted data, `q ∈ [0, 1]`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Percentile bootstrap interval for the unbiased variance.
///
/// Resample `i` draws from ChaCha stream `i` of `seed`. The interval is
/// widened if needed so that it always contains the point estimate.
pub fn bootstrap_variance_ci(values: &[f64], resamples: usize, level: f64, seed: u64) -> (f64, f64) {
    let point = unbiased_variance(values);
    if values.len() < 2 || resamples == 0 {
        return (point, point);
    }
    let count = values.len();
    let mut stats: Vec<f64> = (0..resamples)
        .map(|i| {
            let mut rng = rng::stream(seed, i as u64);
            let resample: Vec<f64> = (0..count).map(|_| values[rng.random_range(0..count)]).collect();
            unbiased_variance(&resample)
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let tail = 0.5 * (1.0 - level);
    let lo = quantile_sorted(&stats, tail).min(point);
    let hi = quantile_sorted(&stats, 1.0 - tail).max(point);
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variance_of_known_sample() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert!((unbiased_variance(&v) - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(unbiased_variance(&[0.1; 7]), 0.0);
        assert_eq!(unbiased_variance(&[3.0]), 0.0);
    }

    #[test]
    fn quantiles_interpolate() {
        let s = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&s, 0.0), 0.0);
        assert_eq!(quantile_sorted(&s, 0.5), 2.0);
        assert!((quantile_sorted(&s, 0.1) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn constant_sample_has_degenerate_interval() {
        assert_eq!(bootstrap_variance_ci(&[-0.5; 50], 1000, 0.95, 1), (0.0, 0.0));
    }

    #[test]
    fn interval_contains_estimate_and_is_reproducible() {
        let v: Vec<f64> = (0..200).map(|i| ((i * 37 % 101) as f64).sin()).collect();
        let (lo, hi) = bootstrap_variance_ci(&v, 1000, 0.95, 7);
        let var = unbiased_variance(&v);
        assert!(lo <= var && var <= hi && lo < hi);
        assert_eq!((lo, hi), bootstrap_variance_ci(&v, 1000, 0.95, 7));
    }
}
