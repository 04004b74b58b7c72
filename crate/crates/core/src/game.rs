//! Verifying that a profile is an approximate strong smooth equilibrium.
//!
//! Each player's strategy is checked against the bandit that player faces
//! when everyone else follows the profile. The profile is accepted iff every
//! player's check accepts.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bandit::{Encoding, ProverBehavior};
use crate::error::{invalid, Result};
use crate::model::{Game, InducedBanditSource, StrategyProfile};
use crate::rng::{derive_path, labels};
use crate::strategy::{
    verify_with_sources, Decision, StrategyCheck, StrategyOptions, StrategyVerdict,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriumCheck {
    pub sigma: f64,
    pub epsilon: f64,
    pub eta: f64,
    /// Per-player confidence; `None` uses `1 / (3k)`.
    #[serde(default)]
    pub delta: Option<f64>,
    /// Check every player even after a rejection.
    #[serde(default)]
    pub full_audit: bool,
    /// Sample batches of induced-bandit pulls from the exact induced law
    /// instead of one action profile per pull.
    #[serde(default = "default_true")]
    pub aggregate: bool,
    #[serde(default)]
    pub prover_pulls: Option<u64>,
    #[serde(default)]
    pub encoding: Encoding,
}

fn default_true() -> bool {
    true
}

impl EquilibriumCheck {
    pub fn new(sigma: f64, epsilon: f64, eta: f64) -> Self {
        EquilibriumCheck {
            sigma,
            epsilon,
            eta,
            delta: None,
            full_audit: false,
            aggregate: true,
            prover_pulls: None,
            encoding: Encoding::Quantized,
        }
    }

    pub fn player_delta(&self, players: usize) -> f64 {
        self.delta.unwrap_or(1.0 / (3.0 * players as f64))
    }

    pub fn player_check(&self, players: usize) -> StrategyCheck {
        StrategyCheck {
            sigma: self.sigma,
            epsilon: self.epsilon,
            eta: self.eta,
            delta: self.player_delta(players),
            prover_pulls: self.prover_pulls,
            encoding: self.encoding,
        }
    }
}

/// Per-player outcome.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlayerVerdict {
    pub player: usize,
    pub verdict: StrategyVerdict,
    /// Game queries charged to the verifier for this player.
    pub verifier_queries: u64,
    pub prover_queries: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquilibriumVerdict {
    pub decision: Decision,
    /// Set when the profile itself is malformed.
    pub invalid_profile: Option<String>,
    pub per_player: Vec<PlayerVerdict>,
    /// Total game-oracle queries of the verifier.
    pub verifier_queries: u64,
    pub prover_queries: u64,
}

impl EquilibriumVerdict {
    pub fn accepted(&self) -> bool {
        self.decision == Decision::Accept
    }
}

/// Seed of player `i`'s strategy check.
pub fn player_seed(seed: u64, player: usize) -> u64 {
    derive_path(seed, &[labels::PLAYER, player as u64])
}

/// Runs the per-player checks on `game` for `profile` (raw probability
/// vectors, validated as part of the protocol).
pub fn verify_smooth_equilibrium(
    game: &Game,
    profile: &[Vec<f64>],
    check: &EquilibriumCheck,
    behavior: &ProverBehavior,
    seed: u64,
) -> Result<EquilibriumVerdict> {
    verify_with_prover_game(game, game, profile, check, behavior, seed)
}

/// Like [`verify_smooth_equilibrium`], but the prover queries
/// `prover_game` while the verifier queries `game`. With equal games this
/// is the ordinary protocol; different games model a prover that answers
/// from the wrong game.
pub fn verify_with_prover_game(
    game: &Game,
    prover_game: &Game,
    profile: &[Vec<f64>],
    check: &EquilibriumCheck,
    behavior: &ProverBehavior,
    seed: u64,
) -> Result<EquilibriumVerdict> {
    if prover_game.players() != game.players() || prover_game.actions() != game.actions() {
        return Err(invalid("prover_game", "shape differs from the verifier's game"));
    }
    let k = game.players();
    let n = game.actions();
    check.player_check(k).validate(n)?;
    let mut verdict = EquilibriumVerdict {
        decision: Decision::Reject,
        invalid_profile: None,
        per_player: Vec::new(),
        verifier_queries: 0,
        prover_queries: 0,
    };
    if profile.len() != k {
        verdict.invalid_profile = Some(format!("{} strategies for {k} players", profile.len()));
        return Ok(verdict);
    }
    if let Some(bad) = profile.iter().find(|s| s.len() != n) {
        verdict.invalid_profile = Some(format!("strategy over {} actions, expected {n}", bad.len()));
        return Ok(verdict);
    }
    let parsed = match StrategyProfile::from_probs(profile) {
        Ok(p) => p,
        Err(e) => {
            verdict.invalid_profile = Some(e.to_string());
            return Ok(verdict);
        }
    };
    if let Some(d) = check.delta {
        if !(d > 0.0 && d < 1.0) {
            return Err(invalid("delta", format!("{d} not in (0, 1)")));
        }
    }

    let player_check = check.player_check(k);
    let verifier_counter = Arc::new(AtomicU64::new(0));
    let prover_counter = Arc::new(AtomicU64::new(0));
    let mut all_accept = true;
    for (i, given) in profile.iter().enumerate() {
        let before_v = verifier_counter.load(Ordering::Relaxed);
        let before_p = prover_counter.load(Ordering::Relaxed);
        let verifier_view =
            InducedBanditSource::new(game, i, &parsed, Arc::clone(&verifier_counter))?
                .aggregate(check.aggregate);
        let prover_view =
            InducedBanditSource::new(prover_game, i, &parsed, Arc::clone(&prover_counter))?
                .aggregate(check.aggregate);
        let v = verify_with_sources(
            &prover_view,
            &verifier_view,
            behavior,
            given,
            &player_check,
            player_seed(seed, i),
            &StrategyOptions::default(),
        )?;
        let verifier_queries = verifier_view.queries() - before_v;
        let prover_queries = prover_view.queries() - before_p;
        debug_assert_eq!(verifier_queries, v.verifier_pulls);
        debug_assert_eq!(prover_queries, v.prover_pulls);
        let accepted = v.accepted();
        verdict.per_player.push(PlayerVerdict {
            player: i,
            verdict: v,
            verifier_queries,
            prover_queries,
        });
        all_accept &= accepted;
        if !accepted && !check.full_audit {
            break;
        }
    }
    verdict.verifier_queries = verifier_counter.load(Ordering::Relaxed);
    verdict.prover_queries = prover_counter.load(Ordering::Relaxed);
    if all_accept {
        verdict.decision = Decision::Accept;
    }
    Ok(verdict)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn malformed_profiles_reject() {
        let g = Game::constant(2, 4, vec![0.0, 0.0]).unwrap();
        let check = EquilibriumCheck::new(0.5, 0.1, 0.4);
        let short = vec![vec![0.25; 4]];
        let v = verify_smooth_equilibrium(&g, &short, &check, &ProverBehavior::Honest, 1).unwrap();
        assert!(!v.accepted());
        assert!(v.invalid_profile.is_some());
        let unnormalized = vec![vec![0.25; 4], vec![0.3; 4]];
        let v = verify_smooth_equilibrium(&g, &unnormalized, &check, &ProverBehavior::Honest, 1)
            .unwrap();
        assert!(v.invalid_profile.is_some());
        assert_eq!(v.verifier_queries, 0);
    }

    #[test]
    fn delta_defaults_to_union_bound() {
        let c = EquilibriumCheck::new(0.5, 0.1, 0.4);
        assert!((c.player_delta(3) - 1.0 / 9.0).abs() < 1e-15);
    }
}
