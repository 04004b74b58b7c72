//! Concentration bounds and small statistics helpers.

/// Two-sided Hoeffding tail: an upper bound on `P(|mean - mu| > t)` for the
/// mean of `samples` i.i.d. draws supported on an interval of width `range`.
pub fn hoeffding_tail(samples: u64, deviation: f64, range: f64) -> f64 {
    let m = samples as f64;
    (2.0 * (-2.0 * m * deviation * deviation / (range * range)).exp()).min(1.0)
}

/// Smallest sample count for which the Hoeffding tail at `deviation` is at
/// most `failure` (unit-range variables).
pub fn hoeffding_samples(deviation: f64, failure: f64) -> u64 {
    ((2.0 / failure).ln() / (2.0 * deviation * deviation)).ceil() as u64
}

/// Half-width `t` such that the Hoeffding tail with `samples` draws equals
/// `failure` (unit-range variables).
pub fn hoeffding_radius(samples: u64, failure: f64) -> f64 {
    ((2.0 / failure).ln() / (2.0 * samples as f64)).sqrt()
}

/// Wilson score interval at 95% confidence for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    const Z: f64 = 1.959_963_984_540_054;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// Lower median: the `ceil(len/2)`-th smallest value. `None` when empty.
pub fn lower_median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Some(sorted[sorted.len().div_ceil(2) - 1])
}

pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hoeffding_sample_count_inverts_tail() {
        let m = hoeffding_samples(0.05, 0.01);
        assert!(hoeffding_tail(m, 0.05, 1.0) <= 0.01);
        assert!(hoeffding_tail(m - 1, 0.05, 1.0) > 0.01);
        let r = hoeffding_radius(m, 0.01);
        assert!(r <= 0.05 && r > 0.049);
    }

    #[test]
    fn lower_median_picks_lower_middle() {
        assert_eq!(lower_median(&[3.0, 1.0, 2.0, 4.0]), Some(2.0));
        assert_eq!(lower_median(&[5.0, 1.0, 3.0]), Some(3.0));
        assert_eq!(lower_median(&[0.5]), Some(0.5));
        assert_eq!(lower_median(&[]), None);
    }

    #[test]
    fn wilson_brackets_the_rate() {
        let (lo, hi) = wilson_interval(200, 300);
        assert!(lo < 2.0 / 3.0 && 2.0 / 3.0 < hi);
        assert!(hi - lo < 0.12);
        assert_eq!(wilson_interval(0, 0), (0.0, 1.0));
        let (lo, hi) = wilson_interval(300, 300);
        assert!(lo > 0.98 && hi == 1.0);
    }
}
