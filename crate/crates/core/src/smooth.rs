//! Best sigma-smooth strategy for a known utility vector.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::model::{dot, Strategy, SMOOTHNESS_TOLERANCE};

/// Largest `n` accepted by [`optimal_smooth_value_oracle`].
pub const BRUTE_FORCE_MAX_ARMS: usize = 10;

/// Output of [`compute_optimal_smooth_strategy`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmoothOptResult {
    pub strategy: Strategy,
    pub value: f64,
}

/// Number of arms receiving the full cap `sigma`, i.e. `floor(1/sigma)`
/// guarded against `1/0.1 = 9.999...` style rounding.
pub fn full_blocks(sigma: f64) -> usize {
    (1.0 / sigma + 1e-9).floor() as usize
}

pub fn check_sigma(sigma: f64, arms: usize) -> Result<()> {
    if !(sigma > 0.0 && sigma <= 1.0) {
        return Err(invalid("sigma", format!("{sigma} not in (0, 1]")));
    }
    if arms == 0 {
        return Err(Error::EmptyInput);
    }
    if sigma * (arms as f64) < 1.0 - 1e-9 {
        return Err(invalid(
            "sigma",
            format!("no {sigma}-smooth strategy exists over {arms} arms"),
        ));
    }
    Ok(())
}

/// Arm indices sorted by decreasing utility; ties go to the smaller index.
pub fn rank_arms(utilities: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..utilities.len()).collect();
    order.sort_by(|&a, &b| utilities[b].total_cmp(&utilities[a]));
    order
}

/// Greedy fill: the top `floor(1/sigma)` arms get `sigma`, the next gets the
/// remainder `1 - sigma * floor(1/sigma)`, everything else gets 0.
///
/// Works for any finite real utilities, not only `[0, 1]`.
pub fn compute_optimal_smooth_strategy(sigma: f64, utilities: &[f64]) -> Result<SmoothOptResult> {
    check_sigma(sigma, utilities.len())?;
    if let Some(bad) = utilities.iter().find(|u| !u.is_finite()) {
        return Err(invalid("utilities", format!("non-finite entry {bad}")));
    }
    let n = utilities.len();
    let full = full_blocks(sigma).min(n);
    let mut remainder = 1.0 - sigma * full as f64;
    if remainder < 1e-12 {
        remainder = 0.0;
    }
    let order = rank_arms(utilities);
    let mut probs = vec![0.0; n];
    for &i in &order[..full] {
        probs[i] = sigma;
    }
    if remainder > 0.0 && full < n {
        probs[order[full]] = remainder;
    }
    // an average never leaves the range of its inputs; clamping drops
    // rounding such as 20 * 0.05 * 1.0 summing to 1.0000000000000002
    let (lo, hi) = utilities
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &u| (lo.min(u), hi.max(u)));
    let value = dot(&probs, utilities).clamp(lo, hi);
    Ok(SmoothOptResult {
        strategy: Strategy::from_raw(probs),
        value,
    })
}

/// `max over sigma-smooth pi of pi . u`.
pub fn optimal_smooth_value(sigma: f64, utilities: &[f64]) -> Result<f64> {
    compute_optimal_smooth_strategy(sigma, utilities).map(|o| o.value)
}

/// Reference optimum by enumerating every vertex of the smooth polytope:
/// a choice of `floor(1/sigma)` arms at `sigma` plus one further arm holding
/// the remainder. Independent of sorting; limited to small `n`.
pub fn optimal_smooth_value_oracle(sigma: f64, utilities: &[f64]) -> Result<f64> {
    let n = utilities.len();
    if n > BRUTE_FORCE_MAX_ARMS {
        return Err(Error::EnumerationTooLarge {
            n,
            limit: BRUTE_FORCE_MAX_ARMS,
        });
    }
    check_sigma(sigma, n)?;
    let full = full_blocks(sigma).min(n);
    let remainder = (1.0 - sigma * full as f64).max(0.0);
    let mut best = f64::NEG_INFINITY;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != full {
            continue;
        }
        let base: f64 = (0..n)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| sigma * utilities[i])
            .sum();
        if full == n || remainder == 0.0 {
            best = best.max(base);
            continue;
        }
        for extra in (0..n).filter(|i| mask >> i & 1 == 0) {
            best = best.max(base + remainder * utilities[extra]);
        }
    }
    Ok(best)
}

/// Expected utility `pi . u` with a dimension check.
pub fn strategy_value(strategy: &Strategy, utilities: &[f64]) -> Result<f64> {
    strategy.value(utilities)
}

/// Whether `pi` is sigma-smooth and within `epsilon` of the smooth optimum
/// for `u` (with a 1e-12 numerical allowance).
pub fn is_epsilon_optimal(
    strategy: &Strategy,
    utilities: &[f64],
    sigma: f64,
    epsilon: f64,
) -> Result<bool> {
    let best = optimal_smooth_value(sigma, utilities)?;
    let value = strategy.value(utilities)?;
    Ok(strategy.is_smooth(sigma) && value >= best - epsilon - SMOOTHNESS_TOLERANCE)
}

/// `max over sigma-smooth pi of |pi . d|`, the largest change in value a
/// perturbation `d` can cause for a smooth strategy.
pub fn max_smooth_deviation(sigma: f64, perturbation: &[f64]) -> Result<f64> {
    let up = optimal_smooth_value(sigma, perturbation)?;
    let neg: Vec<f64> = perturbation.iter().map(|d| -d).collect();
    let down = optimal_smooth_value(sigma, &neg)?;
    Ok(up.max(down))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fills_top_arms() {
        let o = compute_optimal_smooth_strategy(0.3, &[0.1, 0.9, 0.5, 0.7]).unwrap();
        let p = o.strategy.probs();
        assert_eq!(&p[1..], &[0.3, 0.3, 0.3]);
        assert!((p[0] - 0.1).abs() < 1e-12);
        let o = compute_optimal_smooth_strategy(0.4, &[0.1, 0.9, 0.5, 0.7]).unwrap();
        let p = o.strategy.probs();
        assert_eq!(p[1], 0.4);
        assert_eq!(p[3], 0.4);
        assert!((p[2] - 0.2).abs() < 1e-12);
        // 0.4 * 0.9 + 0.4 * 0.7 + 0.2 * 0.5
        assert!((o.value - 0.74).abs() < 1e-12);
    }

    #[test]
    fn ties_prefer_smaller_index() {
        let o = compute_optimal_smooth_strategy(0.5, &[0.5, 0.5, 0.5]).unwrap();
        assert_eq!(o.strategy.probs(), &[0.5, 0.5, 0.0]);
    }

    #[test]
    fn sigma_one_is_argmax() {
        let o = compute_optimal_smooth_strategy(1.0, &[0.2, 0.8, 0.8]).unwrap();
        assert_eq!(o.strategy.probs(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn awkward_sigma_stays_normalized() {
        let o = compute_optimal_smooth_strategy(0.1, &[0.3; 12]).unwrap();
        let total: f64 = o.strategy.probs().iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert_eq!(o.strategy.probs().iter().filter(|p| **p > 0.0).count(), 10);
    }

    #[test]
    fn rejects_impossible_sigma() {
        assert!(compute_optimal_smooth_strategy(0.2, &[0.1; 4]).is_err());
        assert!(compute_optimal_smooth_strategy(0.0, &[0.1; 4]).is_err());
        assert!(compute_optimal_smooth_strategy(1.5, &[0.1; 4]).is_err());
    }

    #[test]
    fn epsilon_optimality() {
        let u = [0.9, 0.1, 0.1, 0.1];
        let good = Strategy::new(vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        assert!(is_epsilon_optimal(&good, &u, 0.5, 0.0).unwrap());
        let uniform = Strategy::uniform(4);
        // optimum 0.5, uniform gets 0.3
        assert!(!is_epsilon_optimal(&uniform, &u, 0.5, 0.19).unwrap());
        assert!(is_epsilon_optimal(&uniform, &u, 0.5, 0.2).unwrap());
        let pure = Strategy::pure(4, 0);
        assert!(!is_epsilon_optimal(&pure, &u, 0.5, 1.0).unwrap());
    }

    #[test]
    fn deviation_takes_both_signs() {
        let d = [0.1, -0.3, 0.0];
        // worst smooth pi at sigma 1 puts all mass on the -0.3 entry
        assert!((max_smooth_deviation(1.0, &d).unwrap() - 0.3).abs() < 1e-15);
    }
}
