//! Experiment configuration files. Unknown keys are rejected.
//!
//! ```json
//! {
//!   "id": "bandit-completeness",
//!   "trials": 300,
//!   "seed": 7,
//!   "protocol": {
//!     "kind": "verify-bandit",
//!     "bandit": {"kind": "random-bernoulli", "n": 200},
//!     "sigma": 0.05,
//!     "epsilon": 0.25,
//!     "expect": "accept"
//!   }
//! }
//! ```

use banditproof_core::bandit::{BanditParams, Encoding};
use banditproof_core::instance::{BanditSpec, GameSpec};
use banditproof_core::lowerbound::{check_hard_sigma, learner_by_name, ReductionParams};
use banditproof_core::{
    Cheat, EquilibriumCheck, LowCommParams, ProverBehavior, StrategyCheck,
};
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub id: String,
    #[serde(default = "one")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    pub protocol: ProtocolConfig,
}

fn one() -> u64 {
    1
}

fn yes() -> bool {
    true
}

fn default_lambda() -> u32 {
    128
}

/// What counts as a successful trial.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expect {
    /// Accept, and the output is within epsilon of the truth.
    #[default]
    Accept,
    Reject,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProtocolConfig {
    VerifyBandit(BanditExperiment),
    VerifyStrategy(StrategyExperiment),
    VerifyGame(GameExperiment),
    Lowcomm(LowCommExperiment),
    LbCoin(CoinExperiment),
    LbLearning(LearningExperiment),
}

impl ProtocolConfig {
    /// The subcommand that runs this protocol.
    pub fn command(&self) -> &'static str {
        match self {
            ProtocolConfig::VerifyBandit(_) => "verify-bandit",
            ProtocolConfig::VerifyStrategy(_) => "verify-strategy",
            ProtocolConfig::VerifyGame(_) => "verify-game",
            ProtocolConfig::Lowcomm(_) => "lowcomm",
            ProtocolConfig::LbCoin(_) => "lb-coin",
            ProtocolConfig::LbLearning(_) => "lb-learning",
        }
    }

    /// Arms (or actions per player).
    pub fn n(&self) -> usize {
        match self {
            ProtocolConfig::VerifyBandit(e) => e.bandit.arms(),
            ProtocolConfig::VerifyStrategy(e) => e.bandit.arms(),
            ProtocolConfig::VerifyGame(e) => e.game.shape().1,
            ProtocolConfig::Lowcomm(e) => e.bandit.arms(),
            ProtocolConfig::LbCoin(e) => e.n,
            ProtocolConfig::LbLearning(e) => e.n,
        }
    }

    pub fn sigma(&self) -> f64 {
        match self {
            ProtocolConfig::VerifyBandit(e) => e.sigma,
            ProtocolConfig::VerifyStrategy(e) => e.sigma,
            ProtocolConfig::VerifyGame(e) => e.sigma,
            ProtocolConfig::Lowcomm(e) => e.sigma,
            ProtocolConfig::LbCoin(e) => e.sigma,
            ProtocolConfig::LbLearning(e) => e.sigma,
        }
    }

    pub fn epsilon(&self) -> f64 {
        match self {
            ProtocolConfig::VerifyBandit(e) => e.epsilon,
            ProtocolConfig::VerifyStrategy(e) => e.epsilon,
            ProtocolConfig::VerifyGame(e) => e.epsilon,
            ProtocolConfig::Lowcomm(e) => e.epsilon,
            ProtocolConfig::LbCoin(e) => e.epsilon,
            ProtocolConfig::LbLearning(e) => e.epsilon,
        }
    }

    /// Query budget of the lower-bound labs (coin supply or learner pulls).
    pub fn budget(&self) -> Option<u64> {
        match self {
            ProtocolConfig::LbCoin(e) => e.reduction().budget().ok(),
            ProtocolConfig::LbLearning(e) => Some(e.budget),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BanditExperiment {
    pub bandit: BanditSpec,
    pub sigma: f64,
    pub epsilon: f64,
    #[serde(default)]
    pub behavior: ProverBehavior,
    #[serde(default)]
    pub prover_pulls: Option<u64>,
    #[serde(default)]
    pub encoding: Encoding,
    #[serde(default)]
    pub expect: Expect,
}

impl BanditExperiment {
    pub fn params(&self) -> BanditParams {
        BanditParams {
            sigma: self.sigma,
            epsilon: self.epsilon,
            prover_pulls: self.prover_pulls,
            encoding: self.encoding,
        }
    }
}

/// The strategy handed to the strategy check, chosen per instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StrategyChoice {
    /// The optimal smooth strategy for the true means.
    Optimal,
    /// The optimal smooth strategy for `1 - mean`.
    Worst,
    Uniform,
    /// Uniform over the arms whose mean is at most `value`.
    UniformBelow { value: f64 },
    Explicit { probs: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyExperiment {
    pub bandit: BanditSpec,
    pub sigma: f64,
    pub epsilon: f64,
    pub eta: f64,
    pub delta: f64,
    pub strategy: StrategyChoice,
    #[serde(default)]
    pub behavior: ProverBehavior,
    #[serde(default)]
    pub prover_pulls: Option<u64>,
    #[serde(default)]
    pub expect: Expect,
}

impl StrategyExperiment {
    pub fn check(&self) -> StrategyCheck {
        let mut c = StrategyCheck::new(self.sigma, self.epsilon, self.eta, self.delta);
        c.prover_pulls = self.prover_pulls;
        c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProfileChoice {
    Uniform,
    /// Hard family only: everyone uniform on their planted set.
    Planted,
    /// Hard family only: the target plays off its set and can gain 1.
    Deviation,
    Explicit { probs: Vec<Vec<f64>> },
}

/// Which game the prover samples from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProverView {
    #[default]
    Same,
    /// The prover answers as if every utility were 0.
    Zero,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameExperiment {
    pub game: GameSpec,
    pub sigma: f64,
    pub epsilon: f64,
    pub eta: f64,
    /// Per-player confidence; defaults to `1/(3k)`.
    #[serde(default)]
    pub delta: Option<f64>,
    pub profile: ProfileChoice,
    #[serde(default)]
    pub behavior: ProverBehavior,
    #[serde(default)]
    pub prover_view: ProverView,
    #[serde(default)]
    pub full_audit: bool,
    #[serde(default = "yes")]
    pub aggregate: bool,
    #[serde(default)]
    pub prover_pulls: Option<u64>,
    #[serde(default)]
    pub expect: Expect,
}

impl GameExperiment {
    pub fn check(&self) -> EquilibriumCheck {
        let mut c = EquilibriumCheck::new(self.sigma, self.epsilon, self.eta);
        c.delta = self.delta;
        c.full_audit = self.full_audit;
        c.aggregate = self.aggregate;
        c.prover_pulls = self.prover_pulls;
        c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LowCommExperiment {
    pub bandit: BanditSpec,
    pub sigma: f64,
    pub epsilon: f64,
    #[serde(default = "default_lambda")]
    pub lambda: u32,
    #[serde(default)]
    pub behavior: ProverBehavior,
    #[serde(default)]
    pub cheat: Cheat,
    #[serde(default)]
    pub prover_pulls: Option<u64>,
    #[serde(default)]
    pub expect: Expect,
}

impl LowCommExperiment {
    pub fn params(&self) -> LowCommParams {
        LowCommParams {
            sigma: self.sigma,
            epsilon: self.epsilon,
            lambda: self.lambda,
            prover_pulls: self.prover_pulls,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoinExperiment {
    pub n: usize,
    pub sigma: f64,
    pub epsilon: f64,
    #[serde(default)]
    pub coin_budget: Option<u64>,
    #[serde(default)]
    pub prover_pulls: Option<u64>,
}

impl CoinExperiment {
    pub fn reduction(&self) -> ReductionParams {
        ReductionParams {
            n: self.n,
            sigma: self.sigma,
            epsilon: self.epsilon,
            coin_budget: self.coin_budget,
            prover_pulls: self.prover_pulls,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearningExperiment {
    pub learner: String,
    pub n: usize,
    pub sigma: f64,
    pub epsilon: f64,
    pub budget: u64,
}

fn check_bandit_spec(spec: &BanditSpec) -> Result<(), HarnessError> {
    // builds cheaply; catches bad means, empty arm lists and the like
    spec.build(0).map(|_| ()).map_err(HarnessError::from)
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// Checks every precondition that can be checked without running a
    /// trial. All failures are config errors.
    pub fn validate(&self) -> Result<(), HarnessError> {
        self.check().map_err(|e| match e {
            HarnessError::Core(c) => HarnessError::Config(format!("{}: {c}", self.id)),
            other => other,
        })
    }

    fn check(&self) -> Result<(), HarnessError> {
        if self.trials == 0 {
            return Err(HarnessError::Config("trials must be at least 1".into()));
        }
        if self.id.is_empty() {
            return Err(HarnessError::Config("id must not be empty".into()));
        }
        let n = self.protocol.n();
        match &self.protocol {
            ProtocolConfig::VerifyBandit(e) => {
                check_bandit_spec(&e.bandit)?;
                e.params().validate(n)?;
                e.behavior.validate(n)?;
            }
            ProtocolConfig::VerifyStrategy(e) => {
                check_bandit_spec(&e.bandit)?;
                e.check().validate(n)?;
                e.behavior.validate(n)?;
                if let StrategyChoice::Explicit { probs } = &e.strategy {
                    if probs.len() != n {
                        return Err(HarnessError::Config(format!(
                            "strategy has {} entries, bandit has {n} arms",
                            probs.len()
                        )));
                    }
                }
            }
            ProtocolConfig::VerifyGame(e) => {
                let (k, _) = e.game.shape();
                e.game.build(0)?;
                e.check().player_check(k).validate(n)?;
                e.behavior.validate(n)?;
                let hard = matches!(e.game, GameSpec::HardFamily { .. });
                if matches!(e.profile, ProfileChoice::Planted | ProfileChoice::Deviation) && !hard {
                    return Err(HarnessError::Config(
                        "planted and deviation profiles need a hard-family game".into(),
                    ));
                }
            }
            ProtocolConfig::Lowcomm(e) => {
                check_bandit_spec(&e.bandit)?;
                e.params().bandit_params().validate(n)?;
                e.behavior.validate(n)?;
                banditproof_core::lowcomm::CommitmentParams::new(e.lambda, n)?;
            }
            ProtocolConfig::LbCoin(e) => e.reduction().validate()?,
            ProtocolConfig::LbLearning(e) => {
                if learner_by_name(&e.learner).is_none() {
                    return Err(HarnessError::Config(format!("unknown learner {:?}", e.learner)));
                }
                check_hard_sigma(e.n, e.sigma, 5.0)?;
                if !(e.epsilon > 0.0 && e.epsilon < 1.0) {
                    return Err(HarnessError::Config(format!("epsilon {} not in (0, 1)", e.epsilon)));
                }
            }
        }
        Ok(())
    }
}
