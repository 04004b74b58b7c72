//! Experiments around the lower bounds: coin-bias decisions, the reduction
//! from coin bias to bandit verification, hard learning instances and the
//! hard game family.
//!
//! The reduction runs against this crate's own bandit verifier. It shows the
//! mechanism of the argument on a concrete verifier; it does not say anything
//! about verifiers in general.

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::bandit::{
    prover_message, AuditPlan, AuditRequest, AuditSession, BanditParams, ProverBehavior,
};
use crate::error::{invalid, Error, Result};
use crate::model::{ArmOracle, Bandit, BudgetedOracle, Game, Strategy, StrategyProfile};
use crate::rng::{derive_path, derive_seed, labels, rng_from_seed, SimRng};
use crate::smooth::{compute_optimal_smooth_strategy, is_epsilon_optimal};

/// A bias direction, `+1` or `-1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BiasSign {
    Plus,
    Minus,
}

impl BiasSign {
    pub fn value(self) -> f64 {
        match self {
            BiasSign::Plus => 1.0,
            BiasSign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> BiasSign {
        match self {
            BiasSign::Plus => BiasSign::Minus,
            BiasSign::Minus => BiasSign::Plus,
        }
    }

    pub fn random(rng: &mut SimRng) -> BiasSign {
        if rng.random::<bool>() {
            BiasSign::Plus
        } else {
            BiasSign::Minus
        }
    }
}

/// Stream of `Ber(1/2 + b* epsilon)` coins with a usage counter.
#[derive(Debug)]
pub struct CoinStream {
    sign: BiasSign,
    epsilon: f64,
    rng: SimRng,
    used: u64,
}

impl CoinStream {
    pub fn new(sign: BiasSign, epsilon: f64, seed: u64) -> Result<Self> {
        if !(0.0..=0.5).contains(&epsilon) {
            return Err(invalid("epsilon", format!("{epsilon} not in [0, 1/2]")));
        }
        Ok(CoinStream {
            sign,
            epsilon,
            rng: rng_from_seed(seed),
            used: 0,
        })
    }

    pub fn head_probability(&self) -> f64 {
        0.5 + self.sign.value() * self.epsilon
    }

    pub fn draw(&mut self) -> bool {
        self.used += 1;
        self.rng.random::<f64>() < self.head_probability()
    }

    /// Number of heads among the next `count` coins.
    pub fn draw_heads(&mut self, count: u64) -> u64 {
        self.used += count;
        let p = self.head_probability();
        if count == 0 || p <= 0.0 {
            0
        } else if p >= 1.0 {
            count
        } else {
            Binomial::new(count, p).expect("valid binomial").sample(&mut self.rng)
        }
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn sign(&self) -> BiasSign {
        self.sign
    }
}

/// Threshold decision: `+1` iff the empirical mean is at least 1/2.
pub fn solve_coin_bias(samples: &[bool]) -> Result<BiasSign> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    let heads = samples.iter().filter(|&&x| x).count();
    Ok(if 2 * heads >= samples.len() {
        BiasSign::Plus
    } else {
        BiasSign::Minus
    })
}

/// Parameters of the coin-bias reduction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReductionParams {
    pub n: usize,
    pub sigma: f64,
    pub epsilon: f64,
    /// Coin supply `m`; `None` gives both simulations enough for every
    /// planned pull.
    #[serde(default)]
    pub coin_budget: Option<u64>,
    #[serde(default)]
    pub prover_pulls: Option<u64>,
}

impl ReductionParams {
    pub fn new(n: usize, sigma: f64, epsilon: f64) -> Self {
        ReductionParams {
            n,
            sigma,
            epsilon,
            coin_budget: None,
            prover_pulls: None,
        }
    }

    /// `1/sigma` as an integer.
    pub fn planted_size(&self) -> usize {
        (1.0 / self.sigma).round() as usize
    }

    pub fn bandit_params(&self) -> BanditParams {
        let mut p = BanditParams::new(self.sigma, self.epsilon);
        p.prover_pulls = self.prover_pulls;
        p
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigma * (self.n as f64) < 24.0 - 1e-9 {
            return Err(invalid("sigma", format!("need sigma >= 24/n, got {}", self.sigma)));
        }
        let inv = 1.0 / self.sigma;
        if (inv - inv.round()).abs() > 1e-9 {
            return Err(invalid("sigma", "1/sigma must be an integer"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(invalid("epsilon", format!("{} not in (0, 1/2)", self.epsilon)));
        }
        self.bandit_params().validate(self.n)
    }

    pub fn budget(&self) -> Result<u64> {
        match self.coin_budget {
            Some(m) => Ok(m),
            None => {
                let planned = self.bandit_params().schedule(self.n)?.planned_verifier_pulls();
                Ok(2 * planned + 1)
            }
        }
    }
}

/// Rewards seen by the simulation with sign `side` when `heads` of `count`
/// coins came up 1: the coins themselves for `+1`, flipped for `-1`.
pub fn coin_rewards(side: BiasSign, heads: u64, count: u64) -> u64 {
    match side {
        BiasSign::Plus => heads,
        BiasSign::Minus => count - heads,
    }
}

/// The verifier's oracle inside one simulation: planted arms read the coin
/// stream (flipped for the `-1` side), the rest are `Ber(1/2 - epsilon)`.
#[derive(Debug)]
pub struct ReductionView<'c> {
    planted: Vec<bool>,
    side: BiasSign,
    epsilon: f64,
    coins: &'c mut CoinStream,
    rng: SimRng,
    pulls: u64,
}

impl<'c> ReductionView<'c> {
    pub fn new(
        planted_set: &[usize],
        n: usize,
        side: BiasSign,
        epsilon: f64,
        coins: &'c mut CoinStream,
        seed: u64,
    ) -> Self {
        let mut planted = vec![false; n];
        for &i in planted_set {
            planted[i] = true;
        }
        ReductionView {
            planted,
            side,
            epsilon,
            coins,
            rng: rng_from_seed(seed),
            pulls: 0,
        }
    }
}

impl ArmOracle for ReductionView<'_> {
    fn num_arms(&self) -> usize {
        self.planted.len()
    }

    fn pull(&mut self, arm: usize) -> Result<f64> {
        self.pull_sum(arm, 1)
    }

    fn pull_sum(&mut self, arm: usize, count: u64) -> Result<f64> {
        if arm >= self.planted.len() {
            return Err(Error::ArmOutOfRange {
                arm,
                arms: self.planted.len(),
            });
        }
        self.pulls += count;
        let r = if self.planted[arm] {
            coin_rewards(self.side, self.coins.draw_heads(count), count)
        } else {
            low_arm(&mut self.rng, self.epsilon, count)
        };
        Ok(r as f64)
    }

    fn pulls(&self) -> u64 {
        self.pulls
    }
}

fn low_arm(rng: &mut SimRng, epsilon: f64, count: u64) -> u64 {
    if count == 0 {
        return 0;
    }
    Binomial::new(count, 0.5 - epsilon)
        .expect("valid binomial")
        .sample(rng)
}

/// Result of one reduction run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReductionOutcome {
    /// `None` when the coin supply ran out first.
    pub decision: Option<BiasSign>,
    /// The simulation whose verifier terminated first.
    pub terminated: Option<BiasSign>,
    pub verifier_rejected: bool,
    /// Mass the terminating verifier's strategy put on its planted set.
    pub planted_mass: Option<f64>,
    pub coins_used_plus: u64,
    pub coins_used_minus: u64,
    /// Largest `|coins_used_plus - coins_used_minus|` seen at any coin.
    pub max_gap: u64,
    pub coin_budget: u64,
}

enum Step {
    NeedsCoins(u64),
    Done { rejected: bool, planted_mass: f64 },
}

struct Simulation {
    side: BiasSign,
    planted: Vec<bool>,
    claims: Vec<f64>,
    sigma: f64,
    epsilon: f64,
    session: AuditSession,
    rng: SimRng,
    pending: Option<(AuditRequest, u64, u64)>,
    coins_used: u64,
}

impl Simulation {
    fn new(params: &ReductionParams, side: BiasSign, seed: u64) -> Result<Simulation> {
        let n = params.n;
        let mut setup = rng_from_seed(derive_seed(seed, labels::SETUP));
        let set = sample_indices(&mut setup, n, params.planted_size()).into_vec();
        let mut planted = vec![false; n];
        for i in set {
            planted[i] = true;
        }
        // The prover only ever sees Ber(1/2 - epsilon) arms, so it can be
        // simulated locally.
        let prover_bandit = Bandit::bernoulli(&vec![0.5 - params.epsilon; n])?;
        let mut prover_oracle = prover_bandit.oracle(derive_seed(seed, labels::PROVER_ORACLE));
        let mut prover_coins = rng_from_seed(derive_seed(seed, labels::PROVER_COINS));
        let bandit_params = params.bandit_params();
        let (message, _) = prover_message(
            &mut prover_oracle,
            &ProverBehavior::Honest,
            &bandit_params,
            &mut prover_coins,
        )?;
        let plan = AuditPlan::for_seed(n, params.sigma, params.epsilon, seed)?;
        Ok(Simulation {
            side,
            planted,
            claims: message.utilities().to_vec(),
            sigma: params.sigma,
            epsilon: params.epsilon,
            session: AuditSession::new(plan),
            rng: rng_from_seed(derive_seed(seed, labels::VERIFIER_ORACLE)),
            pending: None,
            coins_used: 0,
        })
    }

    /// Runs the verifier until it needs a coin or terminates.
    fn advance(&mut self) -> Result<Step> {
        loop {
            if let Some((req, remaining, sum)) = self.pending {
                if remaining > 0 {
                    return Ok(Step::NeedsCoins(remaining));
                }
                self.session.submit(sum as f64, self.claims[req.arm]);
                self.pending = None;
            }
            match self.session.next_request() {
                Some(req) if self.planted[req.arm] => {
                    self.pending = Some((req, req.pulls, 0));
                }
                Some(req) => {
                    let sum = low_arm(&mut self.rng, self.epsilon, req.pulls);
                    self.session.submit(sum as f64, self.claims[req.arm]);
                }
                None => {
                    let rejected = self.session.rejected().is_some();
                    let mass = if rejected {
                        0.0
                    } else {
                        let pi = compute_optimal_smooth_strategy(self.sigma, &self.claims)?.strategy;
                        pi.probs()
                            .iter()
                            .zip(&self.planted)
                            .filter(|(_, &p)| p)
                            .map(|(m, _)| m)
                            .sum()
                    };
                    return Ok(Step::Done {
                        rejected,
                        planted_mass: mass,
                    });
                }
            }
        }
    }

    fn pending_need(&self) -> u64 {
        self.pending.map_or(0, |(_, r, _)| r)
    }

    /// Feeds `count` coins to the pending audit.
    fn consume(&mut self, coins: &mut CoinStream, count: u64) {
        let (req, remaining, sum) = self.pending.expect("pending coin request");
        debug_assert!(count <= remaining);
        let heads = coins.draw_heads(count);
        let sum = sum + coin_rewards(self.side, heads, count);
        self.pending = Some((req, remaining - count, sum));
        self.coins_used += count;
    }
}

/// Decides the bias of `coins` by simulating two verifications, one per
/// sign, and alternating between them at every coin.
///
/// Whenever both simulations are waiting on coins, a block of alternating
/// turns is served at once: each side gets the same number of coins, drawn
/// as one binomial per side. This is the same process as handing out single
/// coins in turn, since the coins are independent and no simulation can act
/// between two of its own coins.
pub fn decide_coin_bias_via_reduction(
    params: &ReductionParams,
    coins: &mut CoinStream,
    seed: u64,
) -> Result<ReductionOutcome> {
    params.validate()?;
    let budget = params.budget()?;
    let mut sims = [
        Simulation::new(params, BiasSign::Plus, derive_path(seed, &[labels::RUN, 0]))?,
        Simulation::new(params, BiasSign::Minus, derive_path(seed, &[labels::RUN, 1]))?,
    ];
    let mut out = ReductionOutcome {
        decision: None,
        terminated: None,
        verifier_rejected: false,
        planted_mass: None,
        coins_used_plus: 0,
        coins_used_minus: 0,
        max_gap: 0,
        coin_budget: budget,
    };
    let mut t: u64 = 0; // coins handed out so far
    let mut turn = 0usize;
    let gap = |s: &[Simulation; 2]| s[0].coins_used.abs_diff(s[1].coins_used);
    loop {
        if t >= budget {
            break;
        }
        match sims[turn].advance()? {
            Step::Done {
                rejected,
                planted_mass,
            } => {
                let side = sims[turn].side;
                out.terminated = Some(side);
                out.verifier_rejected = rejected;
                out.planted_mass = (!rejected).then_some(planted_mass);
                out.decision = Some(if rejected || planted_mass >= 0.5 {
                    side
                } else {
                    side.flip()
                });
                break;
            }
            Step::NeedsCoins(x) => {
                let other = 1 - turn;
                let y = sims[other].pending_need();
                let rounds = x.min(y).min((budget - t) / 2);
                if rounds > 0 {
                    // inside a round the side on turn is one coin ahead
                    let mid = {
                        let (a, b) = (sims[turn].coins_used + 1, sims[other].coins_used);
                        a.abs_diff(b)
                    };
                    out.max_gap = out.max_gap.max(mid);
                    assert!(mid <= 1, "coin usage drifted apart");
                    sims[turn].consume(coins, rounds);
                    sims[other].consume(coins, rounds);
                    t += 2 * rounds;
                } else {
                    sims[turn].consume(coins, 1);
                    t += 1;
                    turn = other;
                }
                let g = gap(&sims);
                out.max_gap = out.max_gap.max(g);
                assert!(g <= 1, "coin usage drifted apart");
            }
        }
    }
    out.coins_used_plus = sims[0].coins_used;
    out.coins_used_minus = sims[1].coins_used;
    Ok(out)
}

/// Bandit whose arms in `support` always pay 1 and all others pay 0.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HardBanditInstance {
    pub n: usize,
    pub sigma: f64,
    pub support: Vec<usize>,
    pub bandit: Bandit,
}

pub fn check_hard_sigma(n: usize, sigma: f64, min_factor: f64) -> Result<usize> {
    if !(sigma > 0.0 && sigma <= 1.0) || sigma * (n as f64) < min_factor - 1e-9 {
        return Err(invalid("sigma", format!("need {min_factor}/n <= sigma <= 1, got {sigma}")));
    }
    let inv = 1.0 / sigma;
    if (inv - inv.round()).abs() > 1e-9 {
        return Err(invalid("sigma", "1/sigma must be an integer"));
    }
    Ok(inv.round() as usize)
}

/// Draws `S` uniformly among subsets of size `1/sigma`.
///
/// Any `sigma >= 1/n` with integral `1/sigma` is accepted here; the learning
/// experiment itself insists on `sigma >= 5/n`.
pub fn hard_learning_instance(n: usize, sigma: f64, rng: &mut SimRng) -> Result<HardBanditInstance> {
    let size = check_hard_sigma(n, sigma, 1.0)?;
    let mut support = sample_indices(rng, n, size).into_vec();
    support.sort_unstable();
    let mut means = vec![0.0; n];
    for &i in &support {
        means[i] = 1.0;
    }
    Ok(HardBanditInstance {
        n,
        sigma,
        support,
        bandit: Bandit::bernoulli(&means)?,
    })
}

/// A learning algorithm with a pull budget.
pub trait Learner: Sync {
    fn name(&self) -> &'static str;

    /// Outputs a `sigma`-smooth strategy after at most `budget` pulls.
    fn learn(
        &self,
        oracle: &mut dyn ArmOracle,
        sigma: f64,
        budget: u64,
        rng: &mut SimRng,
    ) -> Result<Strategy>;
}

/// Mean reward of observed arms; unobserved arms count as 1/2.
fn greedy_output(sums: &[f64], counts: &[u64], sigma: f64) -> Result<Strategy> {
    let estimates: Vec<f64> = sums
        .iter()
        .zip(counts)
        .map(|(&s, &c)| if c == 0 { 0.5 } else { s / c as f64 })
        .collect();
    Ok(compute_optimal_smooth_strategy(sigma, &estimates)?.strategy)
}

/// Pulls uniformly random arms (with replacement), then plays greedy.
#[derive(Clone, Copy, Debug, Default)]
pub struct UniformGreedy;

impl Learner for UniformGreedy {
    fn name(&self) -> &'static str {
        "uniform-greedy"
    }

    fn learn(
        &self,
        oracle: &mut dyn ArmOracle,
        sigma: f64,
        budget: u64,
        rng: &mut SimRng,
    ) -> Result<Strategy> {
        let n = oracle.num_arms();
        let mut sums = vec![0.0; n];
        let mut counts = vec![0u64; n];
        for _ in 0..budget {
            let arm = rng.random_range(0..n);
            sums[arm] += oracle.pull(arm)?;
            counts[arm] += 1;
        }
        greedy_output(&sums, &counts, sigma)
    }
}

/// Pulls arms `0, 1, 2, ...` cyclically, then plays greedy.
#[derive(Clone, Copy, Debug, Default)]
pub struct RoundRobinGreedy;

impl Learner for RoundRobinGreedy {
    fn name(&self) -> &'static str {
        "round-robin-greedy"
    }

    fn learn(
        &self,
        oracle: &mut dyn ArmOracle,
        sigma: f64,
        budget: u64,
        _rng: &mut SimRng,
    ) -> Result<Strategy> {
        let n = oracle.num_arms();
        let mut sums = vec![0.0; n];
        let mut counts = vec![0u64; n];
        for t in 0..budget {
            let arm = (t % n as u64) as usize;
            sums[arm] += oracle.pull(arm)?;
            counts[arm] += 1;
        }
        greedy_output(&sums, &counts, sigma)
    }
}

pub fn learner_by_name(name: &str) -> Option<Box<dyn Learner>> {
    match name {
        "uniform-greedy" => Some(Box::new(UniformGreedy)),
        "round-robin-greedy" => Some(Box::new(RoundRobinGreedy)),
        _ => None,
    }
}

/// Outcome of one learning trial.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LearningTrial {
    pub success: bool,
    /// The learner asked for more than its budget.
    pub invalidated: bool,
    pub pulls: u64,
}

/// One trial: draw an instance, run the learner under a budget, check the
/// output against the true utilities.
pub fn learning_trial(
    learner: &dyn Learner,
    n: usize,
    sigma: f64,
    epsilon: f64,
    budget: u64,
    seed: u64,
) -> Result<LearningTrial> {
    check_hard_sigma(n, sigma, 5.0)?;
    let mut setup = rng_from_seed(derive_seed(seed, labels::SETUP));
    let instance = hard_learning_instance(n, sigma, &mut setup)?;
    let mut oracle = BudgetedOracle::new(
        instance.bandit.oracle(derive_seed(seed, labels::VERIFIER_ORACLE)),
        budget,
    );
    let mut coins = rng_from_seed(derive_seed(seed, labels::VERIFIER_COINS));
    match learner.learn(&mut oracle, sigma, budget, &mut coins) {
        Ok(pi) => {
            let u = instance.bandit.expected_utilities();
            let ok = is_epsilon_optimal(&pi, u.as_slice(), sigma, epsilon)?;
            Ok(LearningTrial {
                success: ok && !oracle.exceeded(),
                invalidated: oracle.exceeded(),
                pulls: oracle.pulls(),
            })
        }
        Err(Error::BudgetExhausted { .. }) => Ok(LearningTrial {
            success: false,
            invalidated: true,
            pulls: oracle.pulls(),
        }),
        Err(e) => Err(e),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LearningReport {
    pub learner: &'static str,
    pub trials: u64,
    pub successes: u64,
    pub invalidated: u64,
    pub success_rate: f64,
    pub mean_queries: f64,
}

/// Success rate of `learner` over `trials` independent instances.
pub fn measure_learning_success(
    learner: &dyn Learner,
    n: usize,
    sigma: f64,
    epsilon: f64,
    budget: u64,
    trials: u64,
    seed: u64,
) -> Result<LearningReport> {
    let mut successes = 0;
    let mut invalidated = 0;
    let mut pulls = 0;
    for t in 0..trials {
        let r = learning_trial(learner, n, sigma, epsilon, budget, derive_path(seed, &[labels::TRIAL, t]))?;
        successes += r.success as u64;
        invalidated += r.invalidated as u64;
        pulls += r.pulls;
    }
    Ok(LearningReport {
        learner: learner.name(),
        trials,
        successes,
        invalidated,
        success_rate: if trials == 0 { 0.0 } else { successes as f64 / trials as f64 },
        mean_queries: if trials == 0 { 0.0 } else { pulls as f64 / trials as f64 },
    })
}

/// A game from the hard family: player `target` earns 1 exactly when every
/// player `j` plays inside `sets[j]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HardGameInstance {
    pub players: usize,
    pub actions: usize,
    pub sigma: f64,
    pub sets: Vec<Vec<usize>>,
    pub target: usize,
    pub game: Game,
}

impl HardGameInstance {
    /// Everyone uniform on their own set; the target earns exactly 1.
    pub fn planted_profile(&self) -> StrategyProfile {
        StrategyProfile::new(
            self.sets
                .iter()
                .map(|s| Strategy::uniform_on(self.actions, s))
                .collect(),
        )
        .expect("sets are non-empty")
    }

    /// Others uniform on their sets, the target uniform on a random set of
    /// size `1/sigma` disjoint from its own. The target can gain 1 by
    /// deviating.
    pub fn deviation_profile(&self, rng: &mut SimRng) -> StrategyProfile {
        let own = &self.sets[self.target];
        let outside: Vec<usize> = (0..self.actions).filter(|a| !own.contains(a)).collect();
        let picks = sample_indices(rng, outside.len(), own.len());
        let mut r: Vec<usize> = picks.iter().map(|i| outside[i]).collect();
        r.sort_unstable();
        let mut strategies: Vec<Strategy> = self
            .sets
            .iter()
            .map(|s| Strategy::uniform_on(self.actions, s))
            .collect();
        strategies[self.target] = Strategy::uniform_on(self.actions, &r);
        StrategyProfile::new(strategies).expect("sets are non-empty")
    }
}

/// Draws sets `s_j` of size `1/sigma` and a target player uniformly.
/// Needs `2/sigma <= n` so that a disjoint deviation set exists.
pub fn hard_game_instance(
    players: usize,
    actions: usize,
    sigma: f64,
    rng: &mut SimRng,
) -> Result<HardGameInstance> {
    let size = check_hard_sigma(actions, sigma, 2.0)?;
    if players == 0 {
        return Err(invalid("players", "need at least one player"));
    }
    let sets: Vec<Vec<usize>> = (0..players)
        .map(|_| {
            let mut s = sample_indices(rng, actions, size).into_vec();
            s.sort_unstable();
            s
        })
        .collect();
    let target = rng.random_range(0..players);
    let game = Game::planted(actions, sets.clone(), target)?;
    Ok(HardGameInstance {
        players,
        actions,
        sigma,
        sets,
        target,
        game,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_solver() {
        assert_eq!(solve_coin_bias(&[true; 5]).unwrap(), BiasSign::Plus);
        assert_eq!(solve_coin_bias(&[false; 5]).unwrap(), BiasSign::Minus);
        assert_eq!(solve_coin_bias(&[true, false]).unwrap(), BiasSign::Plus);
        assert_eq!(solve_coin_bias(&[]), Err(Error::EmptyInput));
    }

    #[test]
    fn coin_stream_counts() {
        let mut c = CoinStream::new(BiasSign::Plus, 0.5, 1).unwrap();
        assert!(c.draw());
        assert_eq!(c.draw_heads(10), 10);
        assert_eq!(c.used(), 11);
        let mut c = CoinStream::new(BiasSign::Minus, 0.5, 1).unwrap();
        assert_eq!(c.draw_heads(10), 0);
    }

    #[test]
    fn reduction_preconditions() {
        assert!(ReductionParams::new(100, 0.2, 0.2).validate().is_err());
        assert!(ReductionParams::new(480, 0.3, 0.2).validate().is_err());
        assert!(ReductionParams::new(480, 0.05, 0.2).validate().is_ok());
    }

    #[test]
    fn reduction_with_empty_budget_is_undecided() {
        let mut p = ReductionParams::new(48, 0.5, 0.2);
        p.coin_budget = Some(0);
        p.prover_pulls = Some(50);
        let mut coins = CoinStream::new(BiasSign::Plus, 0.2, 3).unwrap();
        let out = decide_coin_bias_via_reduction(&p, &mut coins, 4).unwrap();
        assert_eq!(out.decision, None);
        assert_eq!(coins.used(), 0);
    }

    #[test]
    fn hard_instances() {
        let mut rng = rng_from_seed(2);
        let inst = hard_learning_instance(4, 0.5, &mut rng).unwrap();
        assert_eq!(inst.support.len(), 2);
        for &i in &inst.support {
            assert_eq!(inst.bandit.arms()[i].mean(), 1.0);
        }
        assert!(hard_learning_instance(9, 0.4, &mut rng).is_err());
        assert!(learning_trial(&UniformGreedy, 8, 0.5, 0.25, 4, 1).is_err());
        assert!(learning_trial(&UniformGreedy, 10, 0.5, 0.25, 4, 1).is_ok());
        let g = hard_game_instance(3, 10, 0.2, &mut rng).unwrap();
        let p = g.planted_profile();
        assert_eq!(g.game.expected_utility(g.target, &p).unwrap(), 1.0);
        let d = g.deviation_profile(&mut rng);
        assert_eq!(g.game.expected_utility(g.target, &d).unwrap(), 0.0);
        assert!(d.is_smooth(0.2));
    }
}
