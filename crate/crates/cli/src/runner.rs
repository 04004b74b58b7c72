//! Seeded, parallel execution of experiment trials.

use std::time::Instant;

use banditproof_core::bandit::{default_prover_pulls, Party};
use banditproof_core::game::verify_with_prover_game;
use banditproof_core::lowcomm::LowCommVerdict;
use banditproof_core::lowerbound::{
    decide_coin_bias_via_reduction, learner_by_name, learning_trial, BiasSign, CoinStream,
};
use banditproof_core::rng::{derive_path, derive_seed, labels, rng_from_seed};
use banditproof_core::smooth::is_epsilon_optimal;
use banditproof_core::{
    compute_optimal_smooth_strategy, run_bandit_verification, run_lowcomm_verification,
    verify_strategy_optimality, Game, Strategy, StrategyProfile,
};
use rayon::prelude::*;

use crate::config::{
    Expect, ExperimentConfig, ProfileChoice, ProtocolConfig, ProverView, StrategyChoice,
};
use crate::error::HarnessError;
use crate::report::{summarize, ExperimentReport, TrialRecord};

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    /// Worker threads; 0 lets rayon decide.
    pub workers: usize,
    /// Keep each trial's full transcript in the report.
    pub transcripts: bool,
    /// Record wall time per trial (JSON only).
    pub timing: bool,
}

pub fn trial_seed(experiment_seed: u64, trial: u64) -> u64 {
    derive_path(experiment_seed, &[labels::TRIAL, trial])
}

/// Seed of the instance drawn for a trial; the protocol itself runs on the
/// trial seed.
pub fn instance_seed(trial_seed: u64) -> u64 {
    derive_seed(trial_seed, labels::INSTANCE)
}

/// Validates `config`, runs every trial on a pool of `options.workers`
/// threads and aggregates in trial order.
pub fn run_experiment(
    config: &ExperimentConfig,
    options: &RunOptions,
) -> Result<ExperimentReport, HarnessError> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers)
        .build()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
    let trials: Vec<TrialRecord> = pool.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|t| {
                let start = options.timing.then(Instant::now);
                let mut r = run_trial(config, t, options.transcripts)?;
                r.wall_ms = start.map(|s| s.elapsed().as_secs_f64() * 1e3);
                Ok(r)
            })
            .collect::<Result<_, HarnessError>>()
    })?;
    Ok(ExperimentReport {
        summary: summarize(config, &trials),
        config: config.clone(),
        trials,
    })
}

fn accounting(what: &str, detail: String) -> HarnessError {
    HarnessError::Accounting(format!("{what}: {detail}"))
}

fn choose_strategy(choice: &StrategyChoice, u: &[f64], sigma: f64) -> Result<Vec<f64>, HarnessError> {
    let n = u.len();
    Ok(match choice {
        StrategyChoice::Optimal => compute_optimal_smooth_strategy(sigma, u)?.strategy.probs().to_vec(),
        StrategyChoice::Worst => {
            let flipped: Vec<f64> = u.iter().map(|x| 1.0 - x).collect();
            compute_optimal_smooth_strategy(sigma, &flipped)?.strategy.probs().to_vec()
        }
        StrategyChoice::Uniform => vec![1.0 / n as f64; n],
        StrategyChoice::UniformBelow { value } => {
            let arms: Vec<usize> = (0..n).filter(|&i| u[i] <= *value).collect();
            if arms.is_empty() {
                return Err(HarnessError::Config(format!("no arm has mean <= {value}")));
            }
            Strategy::uniform_on(n, &arms).probs().to_vec()
        }
        StrategyChoice::Explicit { probs } => probs.clone(),
    })
}

/// Runs trial `t` of `config` (which must already be valid).
pub fn run_trial(
    config: &ExperimentConfig,
    t: u64,
    transcripts: bool,
) -> Result<TrialRecord, HarnessError> {
    let seed = trial_seed(config.seed, t);
    let inst = instance_seed(seed);
    let mut rec = TrialRecord {
        experiment: config.id.clone(),
        trial: t,
        seed,
        verdict: String::new(),
        success: false,
        verifier_queries: 0,
        prover_queries: 0,
        bytes_prover_to_verifier: 0,
        bytes_verifier_to_prover: 0,
        wall_ms: None,
        transcript: None,
    };
    match &config.protocol {
        ProtocolConfig::VerifyBandit(e) => {
            let bandit = e.bandit.build(inst)?;
            let params = e.params();
            let out = run_bandit_verification(&bandit, &e.behavior, &params, seed)?;
            let tr = &out.transcript;
            let n = bandit.num_arms() as u64;
            let k = params.prover_pulls.unwrap_or_else(|| default_prover_pulls(n as usize, e.epsilon));
            if tr.prover_pulls != n * k {
                return Err(accounting("prover pulls", format!("{} != {n} * {k}", tr.prover_pulls)));
            }
            let audited: u64 = tr.audits.iter().map(|a| a.pulls).sum();
            let exact = out.verdict.is_reject() || tr.verifier_pulls == tr.verifier_pulls_planned;
            if audited != tr.verifier_pulls || !exact {
                return Err(accounting("verifier pulls", format!("{} vs plan {}", tr.verifier_pulls, tr.verifier_pulls_planned)));
            }
            rec.success = match e.expect {
                Expect::Accept => match out.verdict.strategy() {
                    Some(pi) => {
                        is_epsilon_optimal(pi, bandit.expected_utilities().as_ref(), e.sigma, e.epsilon)?
                    }
                    None => false,
                },
                Expect::Reject => out.verdict.is_reject(),
            };
            rec.verdict = if out.verdict.is_reject() { "reject" } else { "accept" }.into();
            rec.verifier_queries = tr.verifier_pulls;
            rec.prover_queries = tr.prover_pulls;
            rec.bytes_prover_to_verifier = tr.bytes_from(Party::Prover);
            rec.bytes_verifier_to_prover = tr.bytes_from(Party::Verifier);
            if transcripts {
                rec.transcript = Some(serde_json::to_value(&out)?);
            }
        }
        ProtocolConfig::VerifyStrategy(e) => {
            let bandit = e.bandit.build(inst)?;
            let u = bandit.expected_utilities();
            let probs = choose_strategy(&e.strategy, u.as_ref(), e.sigma)?;
            let v = verify_strategy_optimality(&bandit, &e.behavior, &probs, &e.check(), seed)?;
            rec.success = match e.expect {
                Expect::Accept => v.accepted(),
                Expect::Reject => !v.accepted(),
            };
            rec.verdict = if v.accepted() { "accept" } else { "reject" }.into();
            rec.verifier_queries = v.verifier_pulls;
            rec.prover_queries = v.prover_pulls;
            rec.bytes_prover_to_verifier = v.bytes_prover_to_verifier;
            rec.bytes_verifier_to_prover = v.bytes_verifier_to_prover;
            if transcripts {
                rec.transcript = Some(serde_json::to_value(&v)?);
            }
        }
        ProtocolConfig::VerifyGame(e) => {
            let built = e.game.build(inst)?;
            let game = &built.game;
            let (k, n) = (game.players(), game.actions());
            let profile = match (&e.profile, &built.hard) {
                (ProfileChoice::Uniform, _) => StrategyProfile::uniform(k, n),
                (ProfileChoice::Planted, Some(h)) => h.planted_profile(),
                (ProfileChoice::Deviation, Some(h)) => {
                    h.deviation_profile(&mut rng_from_seed(derive_seed(inst, labels::SETUP)))
                }
                (ProfileChoice::Explicit { probs }, _) => StrategyProfile::from_probs(probs)?,
                _ => return Err(HarnessError::Config("profile needs a hard-family game".into())),
            };
            let probs: Vec<Vec<f64>> = profile.strategies().iter().map(|s| s.probs().to_vec()).collect();
            let zero;
            let prover_game = match e.prover_view {
                ProverView::Same => game,
                ProverView::Zero => {
                    zero = Game::constant(k, n, vec![0.0; k])?;
                    &zero
                }
            };
            let v = verify_with_prover_game(game, prover_game, &probs, &e.check(), &e.behavior, seed)?;
            let vq: u64 = v.per_player.iter().map(|p| p.verdict.verifier_pulls).sum();
            let pq: u64 = v.per_player.iter().map(|p| p.verdict.prover_pulls).sum();
            if vq != v.verifier_queries || pq != v.prover_queries {
                return Err(accounting("game queries", format!("{} vs induced pulls {vq}", v.verifier_queries)));
            }
            rec.success = match e.expect {
                Expect::Accept => v.accepted(),
                Expect::Reject => !v.accepted(),
            };
            rec.verdict = if v.accepted() { "accept" } else { "reject" }.into();
            rec.verifier_queries = v.verifier_queries;
            rec.prover_queries = v.prover_queries;
            for p in &v.per_player {
                rec.bytes_prover_to_verifier += p.verdict.bytes_prover_to_verifier;
                rec.bytes_verifier_to_prover += p.verdict.bytes_verifier_to_prover;
            }
            if transcripts {
                rec.transcript = Some(serde_json::to_value(&v)?);
            }
        }
        ProtocolConfig::Lowcomm(e) => {
            let bandit = e.bandit.build(inst)?;
            let out = run_lowcomm_verification(&bandit, &e.behavior, &e.cheat, &e.params(), seed)?;
            rec.success = match (e.expect, &out.verdict) {
                (Expect::Accept, LowCommVerdict::Value { t }) => {
                    let best = compute_optimal_smooth_strategy(e.sigma, bandit.expected_utilities().as_ref())?;
                    (t - best.value).abs() <= e.epsilon
                }
                (Expect::Accept, _) => false,
                (Expect::Reject, v) => v.is_reject(),
            };
            rec.verdict = if out.verdict.is_reject() { "reject" } else { "value" }.into();
            rec.verifier_queries = out.transcript.verifier_pulls;
            rec.prover_queries = out.transcript.prover_pulls;
            rec.bytes_prover_to_verifier = out.bytes_prover_to_verifier;
            rec.bytes_verifier_to_prover = out.bytes_verifier_to_prover;
            if transcripts {
                rec.transcript = Some(serde_json::to_value(&out)?);
            }
        }
        ProtocolConfig::LbCoin(e) => {
            let truth = BiasSign::random(&mut rng_from_seed(inst));
            let mut coins = CoinStream::new(truth, e.epsilon, derive_seed(inst, labels::VERIFIER_COINS))?;
            let out = decide_coin_bias_via_reduction(&e.reduction(), &mut coins, seed)?;
            if out.max_gap > 1 || out.coins_used_plus + out.coins_used_minus != coins.used() {
                return Err(accounting(
                    "coin interleaving",
                    format!(
                        "gap {}, {} + {} of {}",
                        out.max_gap,
                        out.coins_used_plus,
                        out.coins_used_minus,
                        coins.used()
                    ),
                ));
            }
            rec.success = out.decision == Some(truth);
            rec.verdict = match out.decision {
                Some(BiasSign::Plus) => "plus",
                Some(BiasSign::Minus) => "minus",
                None => "none",
            }
            .into();
            rec.verifier_queries = coins.used();
            if transcripts {
                rec.transcript = Some(serde_json::to_value(&out)?);
            }
        }
        ProtocolConfig::LbLearning(e) => {
            let learner = learner_by_name(&e.learner)
                .ok_or_else(|| HarnessError::Config(format!("unknown learner {:?}", e.learner)))?;
            let r = learning_trial(learner.as_ref(), e.n, e.sigma, e.epsilon, e.budget, seed)?;
            rec.success = r.success;
            rec.verdict = if r.invalidated {
                "invalidated"
            } else if r.success {
                "success"
            } else {
                "failure"
            }
            .into();
            rec.verifier_queries = r.pulls;
            if transcripts {
                rec.transcript = Some(serde_json::to_value(&r)?);
            }
        }
    }
    Ok(rec)
}
