//! JSON descriptions of bandits and games, either explicit or generated.
//!
//! ```json
//! {"kind": "bernoulli", "means": [0.1, 0.9]}
//! {"kind": "random-bernoulli", "n": 200}
//! {"kind": "tensor", "players": 2, "actions": 2, "utilities": [[1, 0, 0, 1], [0, 1, 1, 0]]}
//! ```
//!
//! Generated instances draw their randomness from the seed passed to
//! `build`, so a trial seed fixes the instance.

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::lowerbound::{hard_game_instance, hard_learning_instance, HardGameInstance};
use crate::model::{ArmDistribution, Bandit, Game};
use crate::rng::rng_from_seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ArmSpec {
    Bernoulli { p: f64 },
    /// `(value, probability)` pairs.
    Discrete { points: Vec<(f64, f64)> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BanditSpec {
    /// Arm `i` is `Ber(means[i])`.
    Bernoulli { means: Vec<f64> },
    Arms { arms: Vec<ArmSpec> },
    /// `n` Bernoulli arms with means drawn uniformly from `[0, 1]`.
    RandomBernoulli { n: usize },
    /// `ones` arms (placed uniformly at random, or first when
    /// `shuffle` is false) that always pay 1; the rest pay 0.
    Blocks {
        n: usize,
        ones: usize,
        #[serde(default)]
        shuffle: bool,
    },
    /// Every arm pays `value` deterministically.
    Constant { n: usize, value: f64 },
    /// `1/sigma` random arms pay 1, the rest 0.
    HardLearning { n: usize, sigma: f64 },
}

impl BanditSpec {
    pub fn arms(&self) -> usize {
        match self {
            BanditSpec::Bernoulli { means } => means.len(),
            BanditSpec::Arms { arms } => arms.len(),
            BanditSpec::RandomBernoulli { n }
            | BanditSpec::Blocks { n, .. }
            | BanditSpec::Constant { n, .. }
            | BanditSpec::HardLearning { n, .. } => *n,
        }
    }

    pub fn build(&self, seed: u64) -> Result<Bandit> {
        let mut rng = rng_from_seed(seed);
        match self {
            BanditSpec::Bernoulli { means } => Bandit::bernoulli(means),
            BanditSpec::Arms { arms } => Bandit::new(
                arms.iter()
                    .map(|a| match a {
                        ArmSpec::Bernoulli { p } => ArmDistribution::bernoulli(*p),
                        ArmSpec::Discrete { points } => ArmDistribution::discrete(points),
                    })
                    .collect::<Result<Vec<_>>>()?,
            ),
            BanditSpec::RandomBernoulli { n } => {
                let means: Vec<f64> = (0..*n).map(|_| rng.random::<f64>()).collect();
                Bandit::bernoulli(&means)
            }
            BanditSpec::Blocks { n, ones, shuffle } => {
                if ones > n {
                    return Err(invalid("ones", format!("{ones} exceeds n = {n}")));
                }
                let mut means = vec![0.0; *n];
                if *shuffle {
                    for i in sample_indices(&mut rng, *n, *ones) {
                        means[i] = 1.0;
                    }
                } else {
                    means[..*ones].iter_mut().for_each(|m| *m = 1.0);
                }
                Bandit::bernoulli(&means)
            }
            BanditSpec::Constant { n, value } => {
                let arm = ArmDistribution::point(*value)?;
                Bandit::new(vec![arm; *n])
            }
            BanditSpec::HardLearning { n, sigma } => {
                Ok(hard_learning_instance(*n, *sigma, &mut rng)?.bandit)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GameSpec {
    /// Row-major utility tables, player 0 most significant.
    Tensor {
        players: usize,
        actions: usize,
        utilities: Vec<Vec<f64>>,
    },
    Constant {
        players: usize,
        actions: usize,
        values: Vec<f64>,
    },
    /// Utility 0 for everyone, always.
    Zero { players: usize, actions: usize },
    /// Hard family: random sets of size `1/sigma` and a random target.
    HardFamily {
        players: usize,
        actions: usize,
        sigma: f64,
    },
}

/// A built game plus the hidden structure of generated hard instances.
#[derive(Clone, Debug)]
pub struct GameInstance {
    pub game: Game,
    pub hard: Option<HardGameInstance>,
}

impl GameSpec {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            GameSpec::Tensor {
                players, actions, ..
            }
            | GameSpec::Constant {
                players, actions, ..
            }
            | GameSpec::Zero { players, actions }
            | GameSpec::HardFamily {
                players, actions, ..
            } => (*players, *actions),
        }
    }

    pub fn build(&self, seed: u64) -> Result<GameInstance> {
        let mut rng = rng_from_seed(seed);
        let plain = |game| GameInstance { game, hard: None };
        match self {
            GameSpec::Tensor {
                players,
                actions,
                utilities,
            } => Ok(plain(Game::tensor(*players, *actions, utilities.clone())?)),
            GameSpec::Constant {
                players,
                actions,
                values,
            } => Ok(plain(Game::constant(*players, *actions, values.clone())?)),
            GameSpec::Zero { players, actions } => {
                Ok(plain(Game::constant(*players, *actions, vec![0.0; *players])?))
            }
            GameSpec::HardFamily {
                players,
                actions,
                sigma,
            } => {
                let hard = hard_game_instance(*players, *actions, *sigma, &mut rng)?;
                Ok(GameInstance {
                    game: hard.game.clone(),
                    hard: Some(hard),
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_examples() {
        let b: BanditSpec = serde_json::from_str(r#"{"kind": "bernoulli", "means": [0.1, 0.9]}"#).unwrap();
        assert_eq!(b.build(0).unwrap().expected_utilities().as_slice(), &[0.1, 0.9]);
        let b: BanditSpec = serde_json::from_str(r#"{"kind": "random-bernoulli", "n": 200}"#).unwrap();
        assert_eq!(b.build(1).unwrap(), b.build(1).unwrap());
        assert_ne!(b.build(1).unwrap(), b.build(2).unwrap());
        let g: GameSpec = serde_json::from_str(
            r#"{"kind": "tensor", "players": 2, "actions": 2, "utilities": [[1, 0, 0, 1], [0, 1, 1, 0]]}"#,
        )
        .unwrap();
        assert_eq!(g.build(0).unwrap().game.players(), 2);
        let d: BanditSpec = serde_json::from_str(
            r#"{"kind": "arms", "arms": [{"family": "discrete", "points": [[0.1, 0.3], [0.7, 0.7]]}]}"#,
        )
        .unwrap();
        assert!((d.build(0).unwrap().arms()[0].mean() - 0.52).abs() < 1e-12);
    }

    #[test]
    fn unknown_keys_are_errors() {
        let r: std::result::Result<BanditSpec, _> =
            serde_json::from_str(r#"{"kind": "bernoulli", "means": [0.5], "extra": 1}"#);
        assert!(r.is_err());
    }

    #[test]
    fn blocks() {
        let b = BanditSpec::Blocks { n: 5, ones: 2, shuffle: false }.build(0).unwrap();
        assert_eq!(b.expected_utilities().as_slice(), &[1.0, 1.0, 0.0, 0.0, 0.0]);
        let b = BanditSpec::Blocks { n: 50, ones: 5, shuffle: true }.build(3).unwrap();
        assert_eq!(b.expected_utilities().as_slice().iter().sum::<f64>(), 5.0);
    }
}
