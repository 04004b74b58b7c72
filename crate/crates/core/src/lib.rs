//! Interactive verification of near-optimal smooth strategies in bandits and
//! smooth equilibria in games, with the supporting lower-bound experiments.
//!
//! Start with [`run_bandit_verification`], then
//! [`verify_strategy_optimality`] and
//! [`verify_smooth_equilibrium`].

pub mod bandit;
pub mod error;
pub mod game;
pub mod instance;
pub mod lowcomm;
pub mod lowerbound;
pub mod model;
pub mod rng;
pub mod smooth;
pub mod stats;
pub mod strategy;

pub use bandit::{
    run_bandit_verification, BanditParams, BinSchedule, ProverBehavior, ProverMessage, Transcript,
    Verdict, VerifierOutcome,
};
pub use error::{Error, Result};
pub use model::{
    ArmDistribution, ArmOracle, Bandit, BanditOracle, BudgetedOracle, Game, GameOracle,
    InducedBandit, InducedBanditSource, OracleSource, Payoff, Strategy, StrategyProfile,
    UtilityVector,
};
pub use smooth::{compute_optimal_smooth_strategy, optimal_smooth_value, SmoothOptResult};
pub use strategy::{verify_strategy_optimality, StrategyCheck, StrategyVerdict};
pub use game::{verify_smooth_equilibrium, EquilibriumCheck, EquilibriumVerdict};
pub use lowcomm::{run_lowcomm_verification, Cheat, LowCommOutcome, LowCommParams};
