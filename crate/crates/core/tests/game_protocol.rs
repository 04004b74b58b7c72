use banditproof_core::game::player_seed;
use banditproof_core::smooth::compute_optimal_smooth_strategy;
use banditproof_core::strategy::Decision;
use banditproof_core::{
    verify_smooth_equilibrium, verify_strategy_optimality, ArmDistribution, Bandit,
    EquilibriumCheck, Game, ProverBehavior,
};

/// Each player's utility depends only on their own action.
fn separable_game(weights: &[Vec<f64>]) -> Game {
    let k = weights.len();
    let n = weights[0].len();
    let cells = n.pow(k as u32);
    let mut tables = vec![Vec::with_capacity(cells); k];
    for idx in 0..cells {
        // player 0 is the most significant digit
        let mut rest = idx;
        let mut actions = vec![0; k];
        for slot in actions.iter_mut().rev() {
            *slot = rest % n;
            rest /= n;
        }
        for (i, t) in tables.iter_mut().enumerate() {
            t.push(weights[i][actions[i]]);
        }
    }
    Game::tensor(k, n, tables).unwrap()
}

fn weights(k: usize, n: usize) -> Vec<Vec<f64>> {
    (0..k)
        .map(|i| (0..n).map(|a| ((a * 7 + i * 3) % n) as f64 / (n - 1) as f64).collect())
        .collect()
}

#[test]
fn single_player_game_matches_strategy_check() {
    let u: Vec<f64> = (0..10).map(|a| (a as f64 * 0.37) % 1.0).collect();
    let game = Game::tensor(1, 10, vec![u.clone()]).unwrap();
    let bandit = Bandit::new(u.iter().map(|&x| ArmDistribution::point(x).unwrap()).collect())
        .unwrap();
    let check = EquilibriumCheck::new(0.2, 0.1, 0.3);
    let pi = compute_optimal_smooth_strategy(0.2, &u).unwrap().strategy;
    let profile = vec![pi.probs().to_vec()];
    for seed in 0..3 {
        let g = verify_smooth_equilibrium(&game, &profile, &check, &ProverBehavior::Honest, seed)
            .unwrap();
        let s = verify_strategy_optimality(
            &bandit,
            &ProverBehavior::Honest,
            pi.probs(),
            &check.player_check(1),
            player_seed(seed, 0),
        )
        .unwrap();
        assert_eq!(g.per_player.len(), 1);
        assert_eq!(g.per_player[0].verdict, s);
        assert_eq!(g.accepted(), s.accepted());
        assert_eq!(g.verifier_queries, s.verifier_pulls);
    }
}

#[test]
fn best_response_profile_is_accepted() {
    let w = weights(2, 12);
    let game = separable_game(&w);
    let profile: Vec<Vec<f64>> = w
        .iter()
        .map(|row| compute_optimal_smooth_strategy(0.25, row).unwrap().strategy.probs().to_vec())
        .collect();
    let check = EquilibriumCheck::new(0.25, 0.1, 0.3);
    for seed in 0..3 {
        let v = verify_smooth_equilibrium(&game, &profile, &check, &ProverBehavior::Honest, seed)
            .unwrap();
        assert!(v.accepted(), "seed {seed}");
        assert_eq!(v.per_player.len(), 2);
    }
}

#[test]
fn constant_game_accepts_any_smooth_profile() {
    let game = Game::constant(3, 8, vec![0.5, 0.2, 0.9]).unwrap();
    let profile = vec![
        vec![0.25, 0.25, 0.25, 0.25, 0.0, 0.0, 0.0, 0.0],
        vec![0.125; 8],
        vec![0.0, 0.0, 0.0, 0.0, 0.25, 0.25, 0.25, 0.25],
    ];
    let check = EquilibriumCheck::new(0.25, 0.1, 0.3);
    let v = verify_smooth_equilibrium(&game, &profile, &check, &ProverBehavior::Honest, 2).unwrap();
    assert!(v.accepted());
}

#[test]
fn bad_deviation_is_caught_and_short_circuits() {
    let w = weights(3, 12);
    let game = separable_game(&w);
    let mut profile: Vec<Vec<f64>> = w
        .iter()
        .map(|row| compute_optimal_smooth_strategy(0.25, row).unwrap().strategy.probs().to_vec())
        .collect();
    // player 0 plays their four worst actions
    let neg: Vec<f64> = w[0].iter().map(|x| 1.0 - x).collect();
    profile[0] = compute_optimal_smooth_strategy(0.25, &neg).unwrap().strategy.probs().to_vec();
    let mut check = EquilibriumCheck::new(0.25, 0.1, 0.3);
    let v = verify_smooth_equilibrium(&game, &profile, &check, &ProverBehavior::Honest, 6).unwrap();
    assert_eq!(v.decision, Decision::Reject);
    assert_eq!(v.per_player.len(), 1);

    check.full_audit = true;
    let full = verify_smooth_equilibrium(&game, &profile, &check, &ProverBehavior::Honest, 6)
        .unwrap();
    assert_eq!(full.decision, Decision::Reject);
    assert_eq!(full.per_player.len(), 3);
    assert!(!full.per_player[0].verdict.accepted());
    assert!(full.per_player[1].verdict.accepted() && full.per_player[2].verdict.accepted());
    assert_eq!(full.per_player[0].verdict, v.per_player[0].verdict);
}

#[test]
fn query_accounting_sums_over_players() {
    let w = weights(2, 8);
    let game = separable_game(&w);
    let profile = vec![vec![0.125; 8]; 2];
    // loose accuracy: the per-query path samples every opponent action
    let mut check = EquilibriumCheck::new(0.5, 0.1, 0.9);
    check.delta = Some(0.9);
    check.full_audit = true;
    for aggregate in [true, false] {
        check.aggregate = aggregate;
        let v = verify_smooth_equilibrium(&game, &profile, &check, &ProverBehavior::Honest, 3)
            .unwrap();
        let vq: u64 = v.per_player.iter().map(|p| p.verifier_queries).sum();
        let pq: u64 = v.per_player.iter().map(|p| p.prover_queries).sum();
        assert_eq!(v.verifier_queries, vq);
        assert_eq!(v.prover_queries, pq);
        for p in &v.per_player {
            assert_eq!(p.verifier_queries, p.verdict.verifier_pulls);
            assert_eq!(p.prover_queries, p.verdict.prover_pulls);
        }
    }
}

#[test]
fn swapping_players_swaps_verdicts() {
    use banditproof_core::rng::{rng_from_seed, derive_seed};
    use banditproof_core::strategy::{verify_with_sources, StrategyOptions};
    use banditproof_core::{InducedBanditSource, StrategyProfile};
    use rand::Rng;
    use std::sync::atomic::AtomicU64;
    use std::sync::Arc;

    let n = 6;
    let mut rng = rng_from_seed(31);
    let t0: Vec<f64> = (0..n * n).map(|_| rng.random::<f64>()).collect();
    let t1: Vec<f64> = (0..n * n).map(|_| rng.random::<f64>()).collect();
    // swapped[(b, a)] = original[(a, b)]
    let swap = |t: &[f64]| -> Vec<f64> {
        (0..n * n).map(|idx| t[(idx % n) * n + idx / n]).collect()
    };
    let g = Game::tensor(2, n, vec![t0.clone(), t1.clone()]).unwrap();
    let h = Game::tensor(2, n, vec![swap(&t1), swap(&t0)]).unwrap();
    let p0 = vec![0.25, 0.25, 0.25, 0.25, 0.0, 0.0];
    let p1 = vec![0.0, 0.25, 0.0, 0.25, 0.25, 0.25];
    let check = EquilibriumCheck::new(0.25, 0.1, 0.3);
    let pc = check.player_check(2);
    let run = |game: &Game, profile: &[Vec<f64>], player: usize, seed: u64| {
        let parsed = StrategyProfile::from_probs(profile).unwrap();
        let src = InducedBanditSource::new(game, player, &parsed, Arc::new(AtomicU64::new(0)))
            .unwrap();
        verify_with_sources(
            &src,
            &src,
            &ProverBehavior::Honest,
            &profile[player],
            &pc,
            seed,
            &StrategyOptions::default(),
        )
        .unwrap()
    };
    let gp = vec![p0.clone(), p1.clone()];
    let hp = vec![p1, p0];
    for s in 0..3 {
        let (sa, sb) = (derive_seed(s, 1), derive_seed(s, 2));
        assert_eq!(run(&g, &gp, 0, sa), run(&h, &hp, 1, sa));
        assert_eq!(run(&g, &gp, 1, sb), run(&h, &hp, 0, sb));
    }
}
