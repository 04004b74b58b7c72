//! Verifying that a given strategy is near-optimal among smooth strategies.
//!
//! `k` independent bandit-verification runs at accuracy `eta / 4` each yield
//! a candidate strategy (or a rejection). The verifier estimates the value of
//! every candidate and of the given strategy with `l` pulls each and rejects
//! when the lower median of the candidate values beats the given value by
//! more than `epsilon + eta / 2`.

use serde::{Deserialize, Serialize};

use crate::bandit::{
    check_epsilon, run_with_oracles, BanditParams, Encoding, Party, ProverBehavior,
    VerifierOutcome,
};
use crate::error::{invalid, Result};
use crate::model::{ArmOracle, OracleSource, Strategy, NORMALIZATION_TOLERANCE, SMOOTHNESS_TOLERANCE};
use crate::rng::{derive_path, derive_seed, labels, rng_from_seed, SimRng};
use crate::smooth::check_sigma;
use crate::stats::lower_median;

/// Repetition count `k` and value-estimation sample size `l`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplificationParams {
    pub k: u64,
    pub ell: u64,
    pub delta: f64,
    pub eta: f64,
}

/// `k = ceil(18 ln(8/delta))`, `l = ceil(32 ln(8(k+1)/delta) / eta^2)`.
pub fn amplification_params(delta: f64, eta: f64) -> Result<AmplificationParams> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", format!("{delta} not in (0, 1)")));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(invalid("eta", format!("{eta} not in (0, 1)")));
    }
    let k = (18.0 * (8.0 / delta).ln()).ceil() as u64;
    let ell = (32.0 * (8.0 * (k + 1) as f64 / delta).ln() / (eta * eta)).ceil() as u64;
    Ok(AmplificationParams { k, ell, delta, eta })
}

/// Parameters of one strategy check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyCheck {
    pub sigma: f64,
    pub epsilon: f64,
    pub eta: f64,
    pub delta: f64,
    /// Prover pulls per arm inside each run; `None` uses the default.
    #[serde(default)]
    pub prover_pulls: Option<u64>,
    #[serde(default)]
    pub encoding: Encoding,
}

impl StrategyCheck {
    pub fn new(sigma: f64, epsilon: f64, eta: f64, delta: f64) -> Self {
        StrategyCheck {
            sigma,
            epsilon,
            eta,
            delta,
            prover_pulls: None,
            encoding: Encoding::Quantized,
        }
    }

    /// Parameters of the inner bandit runs (accuracy `eta / 4`).
    pub fn inner_params(&self) -> BanditParams {
        BanditParams {
            sigma: self.sigma,
            epsilon: self.eta / 4.0,
            prover_pulls: self.prover_pulls,
            encoding: self.encoding,
        }
    }

    pub fn amplification(&self) -> Result<AmplificationParams> {
        amplification_params(self.delta, self.eta)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        check_epsilon(self.epsilon)?;
        self.amplification()?;
        self.inner_params().validate(n)
    }
}

/// Extra knobs, mostly for tests and statistics.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StrategyOptions {
    /// Seeds of the `k` inner runs, replacing the derived ones.
    pub run_seeds: Option<Vec<u64>>,
    /// Keep every inner run in the verdict.
    pub keep_runs: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decision {
    Accept,
    Reject,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StrategyRejectReason {
    InvalidStrategy { detail: String },
    TooManyRejectedRuns { rejected: u64, runs: u64 },
    ValueGap { gap: f64, allowed: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StrategyVerdict {
    pub decision: Decision,
    pub reason: Option<StrategyRejectReason>,
    /// `v_i` per run; 0 for rejected runs.
    pub candidate_values: Vec<f64>,
    /// `v`, the estimated value of the given strategy.
    pub given_value: Option<f64>,
    pub median: Option<f64>,
    pub rejected_runs: u64,
    pub amplification: AmplificationParams,
    pub verifier_pulls: u64,
    pub prover_pulls: u64,
    /// `k * planned run pulls + (k + 1) * l`.
    pub planned_verifier_pulls: u64,
    /// Pulls the verifier spent estimating values.
    pub value_pulls: u64,
    /// Message bytes summed over the inner runs.
    pub bytes_prover_to_verifier: u64,
    pub bytes_verifier_to_prover: u64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub runs: Vec<VerifierOutcome>,
}

impl StrategyVerdict {
    pub fn accepted(&self) -> bool {
        self.decision == Decision::Accept
    }
}

/// Checks the validity and smoothness of a received strategy. Entries in
/// `[-1e-12, 0)` are clamped to zero.
pub fn validate_received_strategy(probs: &[f64], sigma: f64) -> std::result::Result<Strategy, String> {
    let s = Strategy::new(probs.to_vec()).map_err(|e| e.to_string())?;
    debug_assert!((s.probs().iter().sum::<f64>() - 1.0).abs() <= NORMALIZATION_TOLERANCE);
    if let Some(p) = s.probs().iter().find(|&&p| p > sigma + SMOOTHNESS_TOLERANCE) {
        return Err(format!("entry {p} exceeds sigma = {sigma}"));
    }
    Ok(s)
}

/// Draws how many of `count` samples from `strategy` land on each action,
/// as `(action, hits)` pairs with positive hits.
pub fn multinomial_counts(rng: &mut SimRng, count: u64, probs: &[f64]) -> Vec<(usize, u64)> {
    use rand_distr::{Binomial, Distribution};
    let mut out = Vec::new();
    let mut remaining = count;
    let mut mass: f64 = probs.iter().sum();
    let last = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    for (a, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if p <= 0.0 {
            continue;
        }
        let hits = if a == last || p >= mass {
            remaining
        } else {
            Binomial::new(remaining, (p / mass).clamp(0.0, 1.0))
                .expect("valid binomial")
                .sample(rng)
        };
        if hits > 0 {
            out.push((a, hits));
        }
        remaining -= hits;
        mass -= p;
    }
    out
}

/// Mean of `ell` rewards, each from an arm drawn from `strategy`.
pub fn estimate_strategy_value<O: ArmOracle + ?Sized>(
    oracle: &mut O,
    strategy: &Strategy,
    ell: u64,
    coins: &mut SimRng,
) -> Result<f64> {
    let mut sum = 0.0;
    for (arm, hits) in multinomial_counts(coins, ell, strategy.probs()) {
        sum += oracle.pull_sum(arm, hits)?;
    }
    Ok(sum / ell as f64)
}

/// Seed of inner run `i`.
pub fn run_seed(seed: u64, i: u64) -> u64 {
    derive_path(seed, &[labels::RUN, i])
}

/// Strategy check on a bandit given by one oracle source for both parties.
pub fn verify_strategy_optimality<S: OracleSource + ?Sized>(
    source: &S,
    behavior: &ProverBehavior,
    strategy: &[f64],
    check: &StrategyCheck,
    seed: u64,
) -> Result<StrategyVerdict> {
    verify_with_sources(source, source, behavior, strategy, check, seed, &StrategyOptions::default())
}

/// Strategy check where the prover and the verifier draw oracles from
/// separate sources (separately counted views of the same bandit).
///
/// Seeds: run `i` uses [`run_seed`]; its value estimate uses the run seed's
/// `VALUE_ORACLE` / `VALUE_COINS` children. The given strategy's estimate
/// uses those children of `seed`.
pub fn verify_with_sources<P, V>(
    prover_source: &P,
    verifier_source: &V,
    behavior: &ProverBehavior,
    strategy: &[f64],
    check: &StrategyCheck,
    seed: u64,
    options: &StrategyOptions,
) -> Result<StrategyVerdict>
where
    P: OracleSource + ?Sized,
    V: OracleSource + ?Sized,
{
    let n = verifier_source.num_arms();
    check_sigma(check.sigma, n)?;
    check.validate(n)?;
    let amp = check.amplification()?;
    let inner = check.inner_params();
    let planned_run = inner.schedule(n)?.planned_verifier_pulls();
    let mut verdict = StrategyVerdict {
        decision: Decision::Reject,
        reason: None,
        candidate_values: Vec::new(),
        given_value: None,
        median: None,
        rejected_runs: 0,
        amplification: amp,
        verifier_pulls: 0,
        prover_pulls: 0,
        planned_verifier_pulls: amp.k * planned_run + (amp.k + 1) * amp.ell,
        value_pulls: 0,
        bytes_prover_to_verifier: 0,
        bytes_verifier_to_prover: 0,
        runs: Vec::new(),
    };

    // The validity gate does not depend on the runs, so it is checked first
    // and the runs are skipped; the verdict is the same either way.
    let given = match validate_received_strategy(strategy, check.sigma) {
        Ok(s) => s,
        Err(detail) => {
            verdict.reason = Some(StrategyRejectReason::InvalidStrategy { detail });
            return Ok(verdict);
        }
    };

    let seeds: Vec<u64> = match &options.run_seeds {
        Some(s) => {
            if s.len() as u64 != amp.k {
                return Err(invalid("run_seeds", format!("expected {} seeds", amp.k)));
            }
            s.clone()
        }
        None => (0..amp.k).map(|i| run_seed(seed, i)).collect(),
    };

    let mut candidates: Vec<Option<Strategy>> = Vec::with_capacity(seeds.len());
    for &s in &seeds {
        let mut prover = prover_source.spawn(derive_seed(s, labels::PROVER_ORACLE));
        let mut verifier = verifier_source.spawn(derive_seed(s, labels::VERIFIER_ORACLE));
        let outcome = run_with_oracles(&mut prover, &mut verifier, behavior, &inner, s)?;
        verdict.prover_pulls += outcome.transcript.prover_pulls;
        verdict.verifier_pulls += outcome.transcript.verifier_pulls;
        verdict.bytes_prover_to_verifier += outcome.transcript.bytes_from(Party::Prover);
        verdict.bytes_verifier_to_prover += outcome.transcript.bytes_from(Party::Verifier);
        candidates.push(outcome.verdict.strategy().cloned());
        if options.keep_runs {
            verdict.runs.push(outcome);
        }
    }
    verdict.rejected_runs = candidates.iter().filter(|c| c.is_none()).count() as u64;
    if 2 * verdict.rejected_runs >= amp.k {
        verdict.reason = Some(StrategyRejectReason::TooManyRejectedRuns {
            rejected: verdict.rejected_runs,
            runs: amp.k,
        });
        return Ok(verdict);
    }

    for (candidate, &s) in candidates.iter().zip(&seeds) {
        let v = match candidate {
            Some(pi) => {
                let mut oracle = verifier_source.spawn(derive_seed(s, labels::VALUE_ORACLE));
                let mut coins = rng_from_seed(derive_seed(s, labels::VALUE_COINS));
                let v = estimate_strategy_value(&mut oracle, pi, amp.ell, &mut coins)?;
                verdict.value_pulls += oracle.pulls();
                v
            }
            None => 0.0,
        };
        verdict.candidate_values.push(v);
    }
    let mut oracle = verifier_source.spawn(derive_seed(seed, labels::VALUE_ORACLE));
    let mut coins = rng_from_seed(derive_seed(seed, labels::VALUE_COINS));
    let v = estimate_strategy_value(&mut oracle, &given, amp.ell, &mut coins)?;
    verdict.value_pulls += oracle.pulls();
    verdict.verifier_pulls += verdict.value_pulls;
    verdict.given_value = Some(v);

    let median = lower_median(&verdict.candidate_values).expect("k >= 1");
    verdict.median = Some(median);
    let allowed = check.epsilon + check.eta / 2.0;
    if median - v > allowed {
        verdict.reason = Some(StrategyRejectReason::ValueGap {
            gap: median - v,
            allowed,
        });
    } else {
        verdict.decision = Decision::Accept;
    }
    Ok(verdict)
}
