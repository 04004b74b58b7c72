use banditproof_core::rng::rng_from_seed;
use banditproof_core::smooth::{
    compute_optimal_smooth_strategy, is_epsilon_optimal, optimal_smooth_value_oracle,
    strategy_value,
};
use banditproof_core::Strategy;
use itertools::Itertools;
use proptest::prelude::*;
use proptest::strategy::Strategy as PropStrategy;
use rand::seq::SliceRandom;
use rand::Rng;

const GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

fn sigmas(n: usize) -> Vec<f64> {
    let mut s = vec![1.0 / n as f64];
    s.extend([0.3, 0.4, 0.5, 1.0].into_iter().filter(|&x| x * n as f64 >= 1.0));
    s
}

fn assert_matches_oracle(sigma: f64, u: &[f64]) {
    let fast = compute_optimal_smooth_strategy(sigma, u).unwrap();
    let slow = optimal_smooth_value_oracle(sigma, u).unwrap();
    assert!(
        (fast.value - slow).abs() <= 1e-12,
        "sigma={sigma} u={u:?}: {} vs {slow}",
        fast.value
    );
    assert!(fast.strategy.is_smooth(sigma));
}

#[test]
fn greedy_matches_vertex_enumeration_exhaustively() {
    for n in 1..=5 {
        for sigma in sigmas(n) {
            for u in (0..n).map(|_| GRID).multi_cartesian_product() {
                assert_matches_oracle(sigma, &u);
            }
        }
    }
}

#[test]
fn greedy_matches_vertex_enumeration_on_random_grids() {
    let mut rng = rng_from_seed(0x5eed);
    for n in 6..=8 {
        for sigma in sigmas(n) {
            for _ in 0..10_000 {
                let u: Vec<f64> = (0..n).map(|_| GRID[rng.random_range(0..5)]).collect();
                assert_matches_oracle(sigma, &u);
            }
        }
    }
}

#[test]
fn documented_examples() {
    let o = compute_optimal_smooth_strategy(1.0, &[0.2, 0.9, 0.5]).unwrap();
    assert_eq!(o.strategy.probs(), &[0.0, 1.0, 0.0]);
    assert_eq!(o.value, 0.9);

    let o = compute_optimal_smooth_strategy(0.25, &[0.3, 0.1, 0.9, 0.4]).unwrap();
    assert_eq!(o.strategy.probs(), &[0.25; 4]);

    let u = [0.1, 0.8, 0.6, 0.3];
    let o = compute_optimal_smooth_strategy(0.4, &u).unwrap();
    let p = o.strategy.probs();
    assert_eq!(&p[..3], &[0.0, 0.4, 0.4]);
    assert!((p[3] - 0.2).abs() < 1e-12);
    assert!((o.value - 0.62).abs() < 1e-12);
    assert!((optimal_smooth_value_oracle(0.4, &u).unwrap() - 0.62).abs() < 1e-12);

    let half = Strategy::new(vec![0.5, 0.5]).unwrap();
    assert!((strategy_value(&half, &[0.2, 0.6]).unwrap() - 0.4).abs() < 1e-15);
    assert_eq!(strategy_value(&Strategy::pure(4, 2), &u).unwrap(), 0.6);
    let uniform = Strategy::uniform(4);
    assert!((strategy_value(&uniform, &u).unwrap() - 0.45).abs() < 1e-15);
    assert!(strategy_value(&uniform, &[0.1]).is_err());

    assert!(is_epsilon_optimal(&o.strategy, &u, 0.4, 0.0).unwrap());
    assert!(!is_epsilon_optimal(&uniform, &u, 0.4, 0.1).unwrap());
    assert!(!is_epsilon_optimal(&Strategy::pure(4, 1), &u, 0.4, 1.0).unwrap());

    assert!(compute_optimal_smooth_strategy(0.2, &u).is_err());
    assert!(optimal_smooth_value_oracle(0.5, &[0.0; 11]).is_err());
}

#[test]
fn oracle_edge_cases() {
    let u = [0.2, 0.7, 0.4, 0.9, 0.1];
    let mean = u.iter().sum::<f64>() / 5.0;
    assert!((optimal_smooth_value_oracle(0.2, &u).unwrap() - mean).abs() < 1e-12);
    assert_eq!(optimal_smooth_value_oracle(1.0, &u).unwrap(), 0.9);
}

#[test]
fn closeness_transfer_has_no_violations() {
    let mut rng = rng_from_seed(0xC1A1);
    let mut violations = 0;
    for _ in 0..10_000 {
        let n = rng.random_range(1..=30);
        let sigma = rng.random_range(1.0 / n as f64..=1.0);
        let epsilon = rng.random_range(0.0..0.5);
        let u: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let v: Vec<f64> = u
            .iter()
            .map(|&x| (x + rng.random_range(-epsilon / 2.0..=epsilon / 2.0)).clamp(0.0, 1.0))
            .collect();
        let pi = compute_optimal_smooth_strategy(sigma, &u).unwrap().strategy;
        if !is_epsilon_optimal(&pi, &v, sigma, epsilon).unwrap() {
            violations += 1;
        }
    }
    assert_eq!(violations, 0);
}

fn instance() -> impl PropStrategy<Value = (Vec<f64>, f64)> {
    (1usize..12).prop_flat_map(|n| {
        (
            prop::collection::vec(0.0f64..=1.0, n),
            (1.0 / n as f64)..=1.0,
        )
    })
}

proptest! {
    #[test]
    fn output_is_smooth_and_normalized((u, sigma) in instance()) {
        let o = compute_optimal_smooth_strategy(sigma, &u).unwrap();
        let p = o.strategy.probs();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        prop_assert!(p.iter().all(|&x| (0.0..=sigma + 1e-12).contains(&x)));
        let dot: f64 = p.iter().zip(&u).map(|(a, b)| a * b).sum();
        prop_assert!((dot - o.value).abs() <= 1e-12);
    }

    #[test]
    fn value_ignores_tie_order((u, sigma) in instance(), seed in any::<u64>()) {
        // coarsen to force ties, then permute
        let coarse: Vec<f64> = u.iter().map(|x| (x * 3.0).round() / 3.0).collect();
        let mut perm = coarse.clone();
        perm.shuffle(&mut rng_from_seed(seed));
        let a = compute_optimal_smooth_strategy(sigma, &coarse).unwrap().value;
        let b = compute_optimal_smooth_strategy(sigma, &perm).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn no_smooth_vertex_beats_the_greedy((u, sigma) in instance()) {
        prop_assume!(u.len() <= 10);
        let fast = compute_optimal_smooth_strategy(sigma, &u).unwrap().value;
        let slow = optimal_smooth_value_oracle(sigma, &u).unwrap();
        prop_assert!((fast - slow).abs() <= 1e-12);
    }
}

#[test]
fn value_stays_inside_the_utility_range() {
    for n in [20, 40, 100, 2000] {
        for sigma in [0.05, 0.01, 0.1, 0.3] {
            if sigma * (n as f64) < 1.0 {
                continue;
            }
            let v = compute_optimal_smooth_strategy(sigma, &vec![1.0; n]).unwrap().value;
            assert!(v <= 1.0, "n={n} sigma={sigma}: {v}");
        }
    }
}
