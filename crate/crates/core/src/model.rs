//! Ground-truth bandits and games, and the counted sampling oracles that
//! protocol code is allowed to see.
//!
//! Arms are indexed from 0. Expected utilities are available on [`Bandit`]
//! and [`Game`] for instance generators and tests; the protocol modules only
//! ever receive an [`ArmOracle`] or an [`OracleSource`].

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, OnceLock};

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, RngCore};
use rand_distr::{Binomial, Distribution};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::rng::{rng_from_seed, SimRng};

/// Tolerance on `|sum(pi) - 1|` for strategies received from outside.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;
/// Tolerance on `pi_i <= sigma` and on `pi_i >= 0`.
pub const SMOOTHNESS_TOLERANCE: f64 = 1e-12;

/// Reward distribution of a single arm. Support is always inside `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ArmDistribution {
    Bernoulli { p: f64 },
    /// Finite distribution; `values` strictly increasing, `probs` positive
    /// and summing to one.
    Discrete { values: Vec<f64>, probs: Vec<f64> },
}

impl ArmDistribution {
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidDistribution(format!(
                "Bernoulli parameter {p} outside [0, 1]"
            )));
        }
        Ok(ArmDistribution::Bernoulli { p })
    }

    /// Degenerate distribution at `x`.
    pub fn point(x: f64) -> Result<Self> {
        Self::discrete(&[(x, 1.0)])
    }

    /// Builds a finite distribution from `(value, probability)` pairs.
    ///
    /// Duplicate values are merged and zero-probability points dropped; a
    /// distribution supported on `{0, 1}` is returned as a Bernoulli so
    /// equal laws always share one representation.
    pub fn discrete(points: &[(f64, f64)]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidDistribution("no support points".into()));
        }
        let mut total = 0.0;
        for &(v, p) in points {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidDistribution(format!(
                    "support point {v} outside [0, 1]"
                )));
            }
            if !(p >= 0.0 && p.is_finite()) {
                return Err(Error::InvalidDistribution(format!(
                    "invalid probability {p}"
                )));
            }
            total += p;
        }
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}"
            )));
        }
        let mut sorted: Vec<(f64, f64)> = points
            .iter()
            .filter(|(_, p)| *p > 0.0)
            .map(|&(v, p)| (v, p / total))
            .collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut probs: Vec<f64> = Vec::with_capacity(sorted.len());
        for (v, p) in sorted {
            if values.last() == Some(&v) {
                *probs.last_mut().unwrap() += p;
            } else {
                values.push(v);
                probs.push(p);
            }
        }
        if values.iter().all(|&v| v == 0.0 || v == 1.0) {
            let p = values
                .iter()
                .zip(&probs)
                .find(|(v, _)| **v == 1.0)
                .map_or(0.0, |(_, p)| p.min(1.0));
            return Ok(ArmDistribution::Bernoulli { p });
        }
        Ok(ArmDistribution::Discrete { values, probs })
    }

    pub fn mean(&self) -> f64 {
        match self {
            ArmDistribution::Bernoulli { p } => *p,
            ArmDistribution::Discrete { values, probs } => {
                values.iter().zip(probs).map(|(v, p)| v * p).sum()
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ArmDistribution::Bernoulli { p } => {
                if rng.random::<f64>() < *p {
                    1.0
                } else {
                    0.0
                }
            }
            ArmDistribution::Discrete { values, probs } => {
                let mut u = rng.random::<f64>();
                for (v, p) in values.iter().zip(probs) {
                    if u < *p {
                        return *v;
                    }
                    u -= p;
                }
                *values.last().unwrap()
            }
        }
    }

    /// Sum of `count` independent draws.
    ///
    /// Bernoulli sums are drawn as one binomial variate and finite laws as a
    /// multinomial split (a chain of conditional binomials), so the cost does
    /// not grow with `count`. The result has the same distribution as
    /// `count` calls to [`sample`](Self::sample).
    pub fn sample_sum<R: Rng + ?Sized>(&self, rng: &mut R, count: u64) -> f64 {
        if count == 0 {
            return 0.0;
        }
        match self {
            ArmDistribution::Bernoulli { p } => binomial(rng, count, *p) as f64,
            ArmDistribution::Discrete { values, probs } => {
                let mut remaining = count;
                let mut mass = 1.0;
                let mut sum = 0.0;
                let last = values.len() - 1;
                for (j, (v, p)) in values.iter().zip(probs).enumerate() {
                    if remaining == 0 {
                        break;
                    }
                    let hits = if j == last {
                        remaining
                    } else {
                        binomial(rng, remaining, (p / mass).clamp(0.0, 1.0))
                    };
                    sum += hits as f64 * v;
                    remaining -= hits;
                    mass -= p;
                }
                sum
            }
        }
    }
}

fn binomial<R: Rng + ?Sized>(rng: &mut R, trials: u64, p: f64) -> u64 {
    if p <= 0.0 {
        0
    } else if p >= 1.0 {
        trials
    } else {
        Binomial::new(trials, p)
            .expect("binomial parameters validated")
            .sample(rng)
    }
}

/// Expected utilities `u = U(q)`, or a purported / estimated vector of the
/// same shape. Entries lie in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct UtilityVector(Vec<f64>);

impl UtilityVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(invalid("utility", format!("{bad} outside [0, 1]")));
        }
        Ok(UtilityVector(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for UtilityVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// A probability vector over arms (or actions).
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Strategy(Vec<f64>);

impl Strategy {
    /// Validates a probability vector. Entries in `[-1e-12, 0)` are clamped
    /// to zero; the total must be within [`NORMALIZATION_TOLERANCE`] of one.
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::EmptyInput);
        }
        for p in probs.iter_mut() {
            if !p.is_finite() || *p < -SMOOTHNESS_TOLERANCE {
                return Err(Error::InvalidDistribution(format!(
                    "strategy entry {p} is not a probability"
                )));
            }
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "strategy sums to {total}"
            )));
        }
        Ok(Strategy(probs))
    }

    pub(crate) fn from_raw(probs: Vec<f64>) -> Self {
        Strategy(probs)
    }

    pub fn uniform(n: usize) -> Self {
        Strategy(vec![1.0 / n as f64; n])
    }

    pub fn pure(n: usize, action: usize) -> Self {
        let mut probs = vec![0.0; n];
        probs[action] = 1.0;
        Strategy(probs)
    }

    /// Uniform distribution over `support` (which must be non-empty).
    pub fn uniform_on(n: usize, support: &[usize]) -> Self {
        let mut probs = vec![0.0; n];
        let w = 1.0 / support.len() as f64;
        for &i in support {
            probs[i] = w;
        }
        Strategy(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_smooth(&self, sigma: f64) -> bool {
        self.0.iter().all(|&p| p <= sigma + SMOOTHNESS_TOLERANCE)
    }

    /// Expected utility `pi . u`.
    pub fn value(&self, utilities: &[f64]) -> Result<f64> {
        if utilities.len() != self.0.len() {
            return Err(Error::DimensionMismatch {
                expected: self.0.len(),
                found: utilities.len(),
            });
        }
        Ok(dot(&self.0, utilities))
    }

    pub(crate) fn sampler(&self) -> WeightedIndex<f64> {
        WeightedIndex::new(&self.0).expect("validated strategy has positive mass")
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A stochastic multi-armed bandit `q = (q_1, ..., q_n)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Bandit {
    arms: Vec<ArmDistribution>,
}

impl Bandit {
    pub fn new(arms: Vec<ArmDistribution>) -> Result<Self> {
        if arms.is_empty() {
            return Err(invalid("arms", "a bandit needs at least one arm"));
        }
        Ok(Bandit { arms })
    }

    /// Bandit whose arm `i` is `Ber(means[i])`.
    pub fn bernoulli(means: &[f64]) -> Result<Self> {
        let arms = means
            .iter()
            .map(|&p| ArmDistribution::bernoulli(p))
            .collect::<Result<Vec<_>>>()?;
        Bandit::new(arms)
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn arms(&self) -> &[ArmDistribution] {
        &self.arms
    }

    /// Exact arm means. Generator-side ground truth; consumes no queries.
    pub fn expected_utilities(&self) -> UtilityVector {
        UtilityVector(self.arms.iter().map(ArmDistribution::mean).collect())
    }

    pub fn oracle(&self, seed: u64) -> BanditOracle<'_> {
        BanditOracle {
            bandit: self,
            rng: rng_from_seed(seed),
            pulls: 0,
        }
    }
}

/// Query access to a bandit. Every returned reward is one counted pull.
pub trait ArmOracle {
    fn num_arms(&self) -> usize;

    fn pull(&mut self, arm: usize) -> Result<f64>;

    /// Sum of `count` pulls of `arm`; counts as `count` pulls.
    fn pull_sum(&mut self, arm: usize, count: u64) -> Result<f64> {
        let mut sum = 0.0;
        for _ in 0..count {
            sum += self.pull(arm)?;
        }
        Ok(sum)
    }

    /// Pulls served so far.
    fn pulls(&self) -> u64;
}

impl<O: ArmOracle + ?Sized> ArmOracle for &mut O {
    fn num_arms(&self) -> usize {
        (**self).num_arms()
    }
    fn pull(&mut self, arm: usize) -> Result<f64> {
        (**self).pull(arm)
    }
    fn pull_sum(&mut self, arm: usize, count: u64) -> Result<f64> {
        (**self).pull_sum(arm, count)
    }
    fn pulls(&self) -> u64 {
        (**self).pulls()
    }
}

/// Something that can hand out independent oracles for one bandit, one per
/// seed. Protocols spawn a fresh oracle per party and per run.
pub trait OracleSource {
    type Oracle<'s>: ArmOracle
    where
        Self: 's;

    fn num_arms(&self) -> usize;

    fn spawn(&self, seed: u64) -> Self::Oracle<'_>;
}

impl OracleSource for Bandit {
    type Oracle<'s> = BanditOracle<'s>;

    fn num_arms(&self) -> usize {
        self.arms.len()
    }

    fn spawn(&self, seed: u64) -> BanditOracle<'_> {
        self.oracle(seed)
    }
}

/// Seeded sampling oracle `O_q` with a pull counter.
#[derive(Debug)]
pub struct BanditOracle<'a> {
    bandit: &'a Bandit,
    rng: SimRng,
    pulls: u64,
}

impl BanditOracle<'_> {
    fn check(&self, arm: usize) -> Result<()> {
        if arm >= self.bandit.arms.len() {
            Err(Error::ArmOutOfRange {
                arm,
                arms: self.bandit.arms.len(),
            })
        } else {
            Ok(())
        }
    }
}

impl ArmOracle for BanditOracle<'_> {
    fn num_arms(&self) -> usize {
        self.bandit.arms.len()
    }

    fn pull(&mut self, arm: usize) -> Result<f64> {
        self.check(arm)?;
        self.pulls += 1;
        Ok(self.bandit.arms[arm].sample(&mut self.rng))
    }

    fn pull_sum(&mut self, arm: usize, count: u64) -> Result<f64> {
        self.check(arm)?;
        self.pulls += count;
        Ok(self.bandit.arms[arm].sample_sum(&mut self.rng, count))
    }

    fn pulls(&self) -> u64 {
        self.pulls
    }
}

/// Wraps an oracle and refuses every pull beyond `budget`.
#[derive(Debug)]
pub struct BudgetedOracle<O> {
    inner: O,
    budget: u64,
    attempted: u64,
}

impl<O: ArmOracle> BudgetedOracle<O> {
    pub fn new(inner: O, budget: u64) -> Self {
        BudgetedOracle {
            inner,
            budget,
            attempted: 0,
        }
    }

    /// Whether some pull was refused.
    pub fn exceeded(&self) -> bool {
        self.attempted > self.budget
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn remaining(&self) -> u64 {
        self.budget.saturating_sub(self.inner.pulls())
    }
}

impl<O: ArmOracle> ArmOracle for BudgetedOracle<O> {
    fn num_arms(&self) -> usize {
        self.inner.num_arms()
    }

    fn pull(&mut self, arm: usize) -> Result<f64> {
        self.pull_sum(arm, 1)
    }

    fn pull_sum(&mut self, arm: usize, count: u64) -> Result<f64> {
        self.attempted += count;
        if self.inner.pulls() + count > self.budget {
            return Err(Error::BudgetExhausted {
                budget: self.budget,
            });
        }
        self.inner.pull_sum(arm, count)
    }

    fn pulls(&self) -> u64 {
        self.inner.pulls()
    }
}

/// How utilities of a game are produced.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Payoff {
    /// `utilities[i]` is player `i`'s table in row-major order, player 0
    /// being the most significant coordinate.
    Tensor { utilities: Vec<Vec<f64>> },
    /// Player `i` always receives `values[i]`.
    Constant { values: Vec<f64> },
    /// Player `target` receives 1 when every player `j` plays inside
    /// `sets[j]`; every other outcome pays 0.
    Planted { target: usize, sets: Vec<Vec<usize>> },
}

/// A `k`-player, `n`-action normal-form game with utilities in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Game {
    players: usize,
    actions: usize,
    payoff: Payoff,
    #[serde(skip)]
    membership: Vec<Vec<bool>>,
}

impl Game {
    pub fn tensor(players: usize, actions: usize, utilities: Vec<Vec<f64>>) -> Result<Self> {
        check_shape(players, actions)?;
        let cells = actions
            .checked_pow(players as u32)
            .ok_or_else(|| invalid("actions", "utility tensor too large"))?;
        if utilities.len() != players {
            return Err(Error::DimensionMismatch {
                expected: players,
                found: utilities.len(),
            });
        }
        for table in &utilities {
            if table.len() != cells {
                return Err(Error::DimensionMismatch {
                    expected: cells,
                    found: table.len(),
                });
            }
            if let Some(bad) = table.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(invalid("utilities", format!("{bad} outside [0, 1]")));
            }
        }
        Ok(Game {
            players,
            actions,
            payoff: Payoff::Tensor { utilities },
            membership: Vec::new(),
        })
    }

    pub fn constant(players: usize, actions: usize, values: Vec<f64>) -> Result<Self> {
        check_shape(players, actions)?;
        if values.len() != players {
            return Err(Error::DimensionMismatch {
                expected: players,
                found: values.len(),
            });
        }
        if let Some(bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(invalid("values", format!("{bad} outside [0, 1]")));
        }
        Ok(Game {
            players,
            actions,
            payoff: Payoff::Constant { values },
            membership: Vec::new(),
        })
    }

    pub fn planted(actions: usize, sets: Vec<Vec<usize>>, target: usize) -> Result<Self> {
        let players = sets.len();
        check_shape(players, actions)?;
        if target >= players {
            return Err(Error::PlayerOutOfRange {
                player: target,
                players,
            });
        }
        let mut membership = vec![vec![false; actions]; players];
        for (row, set) in membership.iter_mut().zip(&sets) {
            for &a in set {
                if a >= actions {
                    return Err(invalid("sets", format!("action {a} out of range")));
                }
                row[a] = true;
            }
        }
        Ok(Game {
            players,
            actions,
            payoff: Payoff::Planted { target, sets },
            membership,
        })
    }

    pub fn players(&self) -> usize {
        self.players
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn payoff(&self) -> &Payoff {
        &self.payoff
    }

    fn flat_index(&self, actions: &[usize]) -> usize {
        actions.iter().fold(0, |idx, &a| idx * self.actions + a)
    }

    /// `u_player(actions)`.
    pub fn utility(&self, player: usize, actions: &[usize]) -> f64 {
        match &self.payoff {
            Payoff::Tensor { utilities } => utilities[player][self.flat_index(actions)],
            Payoff::Constant { values } => values[player],
            Payoff::Planted { target, .. } => {
                let hit = player == *target
                    && actions
                        .iter()
                        .zip(&self.membership)
                        .all(|(&a, row)| row[a]);
                if hit {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn utilities(&self, actions: &[usize]) -> Vec<f64> {
        (0..self.players).map(|i| self.utility(i, actions)).collect()
    }

    fn check_profile(&self, profile: &StrategyProfile) -> Result<()> {
        if profile.players() != self.players {
            return Err(Error::DimensionMismatch {
                expected: self.players,
                found: profile.players(),
            });
        }
        if profile.actions() != self.actions {
            return Err(Error::DimensionMismatch {
                expected: self.actions,
                found: profile.actions(),
            });
        }
        Ok(())
    }

    /// Exact expected utility of `player` under `profile` (generator side).
    pub fn expected_utility(&self, player: usize, profile: &StrategyProfile) -> Result<f64> {
        self.check_player(player)?;
        self.check_profile(profile)?;
        Ok(match &self.payoff {
            Payoff::Tensor { .. } => {
                let mut total = 0.0;
                for_each_profile(profile, None, |actions, prob| {
                    total += prob * self.utility(player, actions);
                });
                total
            }
            Payoff::Constant { values } => values[player],
            Payoff::Planted { target, sets } => {
                if player != *target {
                    0.0
                } else {
                    sets.iter()
                        .zip(profile.strategies())
                        .map(|(set, s)| set_mass(set, s))
                        .product()
                }
            }
        })
    }

    /// Exact law of `u_player(a)` when `player` plays `action` and everyone
    /// else follows `profile`.
    pub fn induced_law(
        &self,
        player: usize,
        action: usize,
        profile: &StrategyProfile,
    ) -> Result<ArmDistribution> {
        self.check_player(player)?;
        self.check_profile(profile)?;
        if action >= self.actions {
            return Err(Error::ArmOutOfRange {
                arm: action,
                arms: self.actions,
            });
        }
        match &self.payoff {
            Payoff::Tensor { .. } => {
                let mut points = Vec::new();
                for_each_profile(profile, Some((player, action)), |actions, prob| {
                    points.push((self.utility(player, actions), prob));
                });
                ArmDistribution::discrete(&points)
            }
            Payoff::Constant { values } => ArmDistribution::point(values[player]),
            Payoff::Planted { target, sets } => {
                if player != *target || !self.membership[player][action] {
                    return ArmDistribution::point(0.0);
                }
                let p: f64 = sets
                    .iter()
                    .zip(profile.strategies())
                    .enumerate()
                    .filter(|(j, _)| *j != player)
                    .map(|(_, (set, s))| set_mass(set, s))
                    .product();
                ArmDistribution::bernoulli(p.clamp(0.0, 1.0))
            }
        }
    }

    fn check_player(&self, player: usize) -> Result<()> {
        if player >= self.players {
            Err(Error::PlayerOutOfRange {
                player,
                players: self.players,
            })
        } else {
            Ok(())
        }
    }
}

/// Mass `s` puts on `set`, summed with Neumaier compensation so that a
/// uniform strategy on the set gives exactly 1.
fn set_mass(set: &[usize], s: &Strategy) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &a in set {
        let x = s.probs()[a];
        let t = sum + x;
        comp += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
        sum = t;
    }
    (sum + comp).min(1.0)
}

fn check_shape(players: usize, actions: usize) -> Result<()> {
    if players == 0 {
        return Err(invalid("players", "a game needs at least one player"));
    }
    if actions == 0 {
        return Err(invalid("actions", "a game needs at least one action"));
    }
    Ok(())
}

/// Calls `visit(actions, probability)` for every action vector with positive
/// probability under `profile`. With `fixed = Some((i, a))`, player `i` is
/// pinned to action `a`.
fn for_each_profile(
    profile: &StrategyProfile,
    fixed: Option<(usize, usize)>,
    mut visit: impl FnMut(&[usize], f64),
) {
    let supports: Vec<Vec<(usize, f64)>> = profile
        .strategies()
        .iter()
        .enumerate()
        .map(|(i, s)| match fixed {
            Some((player, action)) if player == i => vec![(action, 1.0)],
            _ => s
                .probs()
                .iter()
                .enumerate()
                .filter(|(_, p)| **p > 0.0)
                .map(|(a, p)| (a, *p))
                .collect(),
        })
        .collect();
    let k = supports.len();
    let mut cursor = vec![0usize; k];
    let mut actions: Vec<usize> = supports.iter().map(|s| s[0].0).collect();
    loop {
        let prob: f64 = cursor
            .iter()
            .zip(&supports)
            .map(|(&c, s)| s[c].1)
            .product();
        visit(&actions, prob);
        let mut pos = k;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            cursor[pos] += 1;
            if cursor[pos] < supports[pos].len() {
                actions[pos] = supports[pos][cursor[pos]].0;
                break;
            }
            cursor[pos] = 0;
            actions[pos] = supports[pos][0].0;
        }
    }
}

/// One strategy per player, all over the same action set.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct StrategyProfile {
    strategies: Vec<Strategy>,
}

impl StrategyProfile {
    pub fn new(strategies: Vec<Strategy>) -> Result<Self> {
        let first = strategies.first().ok_or(Error::EmptyInput)?.len();
        if let Some(s) = strategies.iter().find(|s| s.len() != first) {
            return Err(Error::DimensionMismatch {
                expected: first,
                found: s.len(),
            });
        }
        Ok(StrategyProfile { strategies })
    }

    /// Validates raw probability vectors into a profile.
    pub fn from_probs(probs: &[Vec<f64>]) -> Result<Self> {
        let strategies = probs
            .iter()
            .map(|p| Strategy::new(p.clone()))
            .collect::<Result<Vec<_>>>()?;
        StrategyProfile::new(strategies)
    }

    pub fn uniform(players: usize, actions: usize) -> Self {
        StrategyProfile {
            strategies: vec![Strategy::uniform(actions); players],
        }
    }

    pub fn players(&self) -> usize {
        self.strategies.len()
    }

    pub fn actions(&self) -> usize {
        self.strategies[0].len()
    }

    pub fn strategies(&self) -> &[Strategy] {
        &self.strategies
    }

    pub fn strategy(&self, player: usize) -> &Strategy {
        &self.strategies[player]
    }

    pub fn is_smooth(&self, sigma: f64) -> bool {
        self.strategies.iter().all(|s| s.is_smooth(sigma))
    }

    /// The profile `pi^{i,j}`: player `i` plays `j`, the rest follow `self`.
    pub fn with_pure(&self, player: usize, action: usize) -> StrategyProfile {
        let mut strategies = self.strategies.clone();
        strategies[player] = Strategy::pure(self.actions(), action);
        StrategyProfile { strategies }
    }
}

/// Seeded game oracle `O_u` with a query counter.
///
/// The counter is shared with every induced bandit spawned from this oracle
/// so that the total always equals the number of action profiles sampled.
#[derive(Debug)]
pub struct GameOracle<'a> {
    game: &'a Game,
    rng: SimRng,
    counter: Arc<AtomicU64>,
}

impl<'a> GameOracle<'a> {
    pub fn new(game: &'a Game, seed: u64) -> Self {
        Self::with_counter(game, seed, Arc::new(AtomicU64::new(0)))
    }

    pub fn with_counter(game: &'a Game, seed: u64, counter: Arc<AtomicU64>) -> Self {
        GameOracle {
            game,
            rng: rng_from_seed(seed),
            counter,
        }
    }

    pub fn game(&self) -> &'a Game {
        self.game
    }

    pub fn queries(&self) -> u64 {
        self.counter.load(Ordering::Relaxed)
    }

    pub fn counter(&self) -> Arc<AtomicU64> {
        Arc::clone(&self.counter)
    }

    /// Samples `a_i ~ pi_i` independently and returns `u(a)`.
    pub fn query(&mut self, profile: &StrategyProfile) -> Result<Vec<f64>> {
        self.game.check_profile(profile)?;
        let actions: Vec<usize> = profile
            .strategies()
            .iter()
            .map(|s| s.sampler().sample(&mut self.rng))
            .collect();
        self.counter.fetch_add(1, Ordering::Relaxed);
        Ok(self.game.utilities(&actions))
    }

    /// The bandit `B(i, u, pi)` seen through this oracle. Its pulls are
    /// charged to this oracle's counter.
    pub fn induced_bandit(
        &mut self,
        player: usize,
        profile: &StrategyProfile,
    ) -> Result<InducedBandit<'a>> {
        let source = InducedBanditSource::new(self.game, player, profile, self.counter())?;
        let seed = self.rng.next_u64();
        Ok(source.spawn(seed))
    }
}

/// Hands out oracles for the induced bandit `B(i, u, pi)`; every pull is one
/// game query charged to the shared counter.
#[derive(Clone, Debug)]
pub struct InducedBanditSource<'a> {
    game: &'a Game,
    player: usize,
    profile: Arc<StrategyProfile>,
    samplers: Arc<Vec<WeightedIndex<f64>>>,
    laws: Arc<Vec<OnceLock<ArmDistribution>>>,
    counter: Arc<AtomicU64>,
    aggregate: bool,
}

impl<'a> InducedBanditSource<'a> {
    pub fn new(
        game: &'a Game,
        player: usize,
        profile: &StrategyProfile,
        counter: Arc<AtomicU64>,
    ) -> Result<Self> {
        game.check_player(player)?;
        game.check_profile(profile)?;
        Ok(InducedBanditSource {
            game,
            player,
            profile: Arc::new(profile.clone()),
            samplers: Arc::new(profile.strategies().iter().map(Strategy::sampler).collect()),
            laws: Arc::new((0..game.actions()).map(|_| OnceLock::new()).collect()),
            counter,
            aggregate: true,
        })
    }

    /// Same bandit and law cache, charged to a different counter.
    pub fn with_counter(&self, counter: Arc<AtomicU64>) -> Self {
        InducedBanditSource {
            counter,
            ..self.clone()
        }
    }

    /// When `false`, `pull_sum` samples one action profile per pull instead
    /// of drawing from the exact induced law.
    pub fn aggregate(mut self, aggregate: bool) -> Self {
        self.aggregate = aggregate;
        self
    }

    pub fn queries(&self) -> u64 {
        self.counter.load(Ordering::Relaxed)
    }

    pub fn law(&self, arm: usize) -> &ArmDistribution {
        self.laws[arm].get_or_init(|| {
            self.game
                .induced_law(self.player, arm, &self.profile)
                .expect("profile validated at construction")
        })
    }
}

impl<'a> OracleSource for InducedBanditSource<'a> {
    type Oracle<'s>
        = InducedBandit<'a>
    where
        Self: 's;

    fn num_arms(&self) -> usize {
        self.game.actions()
    }

    fn spawn(&self, seed: u64) -> InducedBandit<'a> {
        InducedBandit {
            source: self.clone(),
            rng: rng_from_seed(seed),
            pulls: 0,
            scratch: vec![0; self.game.players()],
        }
    }
}

/// Oracle for `B(i, u, pi)`: pulling arm `j` issues one game query on the
/// profile where player `i` plays `j` and returns player `i`'s utility.
#[derive(Debug)]
pub struct InducedBandit<'a> {
    source: InducedBanditSource<'a>,
    rng: SimRng,
    pulls: u64,
    scratch: Vec<usize>,
}

impl InducedBandit<'_> {
    fn check(&self, arm: usize) -> Result<()> {
        let arms = self.source.game.actions();
        if arm >= arms {
            Err(Error::ArmOutOfRange { arm, arms })
        } else {
            Ok(())
        }
    }
}

impl ArmOracle for InducedBandit<'_> {
    fn num_arms(&self) -> usize {
        self.source.game.actions()
    }

    fn pull(&mut self, arm: usize) -> Result<f64> {
        self.check(arm)?;
        let player = self.source.player;
        for (j, sampler) in self.source.samplers.iter().enumerate() {
            self.scratch[j] = if j == player {
                arm
            } else {
                sampler.sample(&mut self.rng)
            };
        }
        self.pulls += 1;
        self.source.counter.fetch_add(1, Ordering::Relaxed);
        Ok(self.source.game.utility(player, &self.scratch))
    }

    fn pull_sum(&mut self, arm: usize, count: u64) -> Result<f64> {
        self.check(arm)?;
        if !self.source.aggregate {
            let mut sum = 0.0;
            for _ in 0..count {
                sum += self.pull(arm)?;
            }
            return Ok(sum);
        }
        let sum = self.source.law(arm).sample_sum(&mut self.rng, count);
        self.pulls += count;
        self.source.counter.fetch_add(count, Ordering::Relaxed);
        Ok(sum)
    }

    fn pulls(&self) -> u64 {
        self.pulls
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn means_of_supported_families() {
        let b = Bandit::bernoulli(&[0.2, 0.9]).unwrap();
        assert_eq!(b.expected_utilities().as_slice(), &[0.2, 0.9]);
        let half = ArmDistribution::discrete(&[(0.0, 0.5), (1.0, 0.5)]).unwrap();
        assert_eq!(half.mean(), 0.5);
        let d = ArmDistribution::discrete(&[(0.1, 0.3), (0.7, 0.7)]).unwrap();
        // 0.1 * 0.3 + 0.7 * 0.7 by direct summation
        assert!((d.mean() - 0.52).abs() < 1e-12);
    }

    #[test]
    fn discrete_is_canonical() {
        let a = ArmDistribution::discrete(&[(1.0, 0.25), (0.0, 0.5), (1.0, 0.25)]).unwrap();
        assert_eq!(a, ArmDistribution::Bernoulli { p: 0.5 });
        assert_eq!(
            ArmDistribution::point(0.0).unwrap(),
            ArmDistribution::Bernoulli { p: 0.0 }
        );
        assert!(ArmDistribution::discrete(&[(1.5, 1.0)]).is_err());
        assert!(ArmDistribution::discrete(&[(0.5, 0.4)]).is_err());
        assert!(ArmDistribution::bernoulli(-0.1).is_err());
    }

    #[test]
    fn degenerate_arms_and_counting() {
        let b = Bandit::bernoulli(&[1.0, 0.0]).unwrap();
        let mut o = b.oracle(3);
        assert_eq!(o.pull(0).unwrap(), 1.0);
        assert_eq!(o.pulls(), 1);
        assert_eq!(o.pull(1).unwrap(), 0.0);
        assert_eq!(o.pull_sum(0, 10).unwrap(), 10.0);
        assert_eq!(o.pulls(), 12);
        assert_eq!(
            o.pull(2),
            Err(Error::ArmOutOfRange { arm: 2, arms: 2 })
        );
        assert_eq!(o.pulls(), 12);
    }

    #[test]
    fn bernoulli_half_concentrates() {
        // Hoeffding: P(|mean - 0.5| > 0.02) <= 2 exp(-2 * 10^4 * 4e-4) = 6.7e-4
        let b = Bandit::bernoulli(&[0.5]).unwrap();
        let mut o = b.oracle(11);
        let sum: f64 = (0..10_000).map(|_| o.pull(0).unwrap()).sum();
        assert!((sum / 10_000.0 - 0.5).abs() <= 0.02);
        assert_eq!(o.pulls(), 10_000);
    }

    #[test]
    fn multinomial_sum_matches_mean() {
        let d = ArmDistribution::discrete(&[(0.1, 0.3), (0.7, 0.5), (0.4, 0.2)]).unwrap();
        let mut rng = rng_from_seed(5);
        let m = 200_000;
        let s = d.sample_sum(&mut rng, m);
        assert!((s / m as f64 - d.mean()).abs() < 0.01);
    }

    #[test]
    fn budget_wrapper_cuts_the_oracle() {
        let b = Bandit::bernoulli(&[0.5, 0.5]).unwrap();
        let mut o = BudgetedOracle::new(b.oracle(1), 3);
        assert!(o.pull_sum(0, 2).is_ok());
        assert!(o.pull(1).is_ok());
        assert_eq!(o.pull(1), Err(Error::BudgetExhausted { budget: 3 }));
        assert!(o.exceeded());
        assert_eq!(o.pulls(), 3);
    }

    fn matching_pennies() -> Game {
        // player 0 wins on a match, player 1 on a mismatch
        Game::tensor(2, 2, vec![vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 1.0, 1.0, 0.0]]).unwrap()
    }

    #[test]
    fn constant_game_and_pure_profiles() {
        let g = Game::constant(3, 4, vec![0.7; 3]).unwrap();
        let mut o = GameOracle::new(&g, 9);
        let p = StrategyProfile::uniform(3, 4);
        assert_eq!(o.query(&p).unwrap(), vec![0.7; 3]);
        let mp = matching_pennies();
        let mut o = GameOracle::new(&mp, 1);
        let pure = StrategyProfile::new(vec![Strategy::pure(2, 1), Strategy::pure(2, 0)]).unwrap();
        assert_eq!(o.query(&pure).unwrap(), vec![0.0, 1.0]);
        assert_eq!(o.queries(), 1);
        let short = StrategyProfile::uniform(1, 2);
        assert!(o.query(&short).is_err());
    }

    #[test]
    fn matching_pennies_empirical_mean() {
        let g = matching_pennies();
        let p = StrategyProfile::uniform(2, 2);
        let exact = g.expected_utility(0, &p).unwrap();
        assert!((exact - 0.5).abs() < 1e-15);
        let mut o = GameOracle::new(&g, 21);
        let total: f64 = (0..10_000).map(|_| o.query(&p).unwrap()[0]).sum();
        assert!((total / 10_000.0 - exact).abs() <= 0.02);
        assert_eq!(o.queries(), 10_000);
    }

    #[test]
    fn induced_bandit_of_coordination_game() {
        let n = 5;
        let mut table = vec![0.0; n * n];
        for a in 0..n {
            table[a * n + a] = 1.0;
        }
        let g = Game::tensor(2, n, vec![table.clone(), table]).unwrap();
        let p = StrategyProfile::uniform(2, n);
        for j in 0..n {
            let law = g.induced_law(0, j, &p).unwrap();
            assert!((law.mean() - 1.0 / n as f64).abs() < 1e-12);
        }
        let mut o = GameOracle::new(&g, 4);
        let mut b = o.induced_bandit(0, &p).unwrap();
        b.pull_sum(2, 7).unwrap();
        b.pull(1).unwrap();
        assert_eq!(b.pulls(), 8);
        assert_eq!(o.queries(), 8);
    }

    #[test]
    fn planted_game_closed_forms() {
        let sets = vec![vec![0, 1], vec![2, 3], vec![1, 4]];
        let g = Game::planted(5, sets.clone(), 1).unwrap();
        let profile = StrategyProfile::new(
            sets.iter().map(|s| Strategy::uniform_on(5, s)).collect(),
        )
        .unwrap();
        assert_eq!(g.expected_utility(1, &profile).unwrap(), 1.0);
        assert_eq!(g.expected_utility(0, &profile).unwrap(), 0.0);
        assert_eq!(g.utility(1, &[1, 3, 4]), 1.0);
        assert_eq!(g.utility(1, &[1, 0, 4]), 0.0);
        assert_eq!(g.utility(0, &[1, 3, 4]), 0.0);
        let law = g.induced_law(1, 2, &StrategyProfile::uniform(3, 5)).unwrap();
        assert!((law.mean() - 0.4 * 0.4).abs() < 1e-12);
        assert_eq!(
            g.induced_law(1, 0, &profile).unwrap(),
            ArmDistribution::Bernoulli { p: 0.0 }
        );
    }
}
