//! The acceptance matrix: a list of experiments, each with a pass band on
//! its success rate.

use std::fs;
use std::io::Write;
use std::path::Path;

use banditproof_core::rng::{derive_path, labels};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::error::HarnessError;
use crate::report::{emit_reports, ExperimentReport, Format};
use crate::runner::{run_experiment, RunOptions};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteEntry {
    pub experiment: ExperimentConfig,
    /// Pass when `success_rate >= min_success_rate`.
    #[serde(default)]
    pub min_success_rate: Option<f64>,
    /// Pass when `success_rate < max_success_rate`.
    #[serde(default)]
    pub max_success_rate: Option<f64>,
}

impl SuiteEntry {
    pub fn passes(&self, rate: f64) -> bool {
        self.min_success_rate.map_or(true, |m| rate >= m)
            && self.max_success_rate.map_or(true, |m| rate < m)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    /// Master seed; experiment `i` runs on `derive_path(seed, [EXPERIMENT, i])`.
    #[serde(default = "default_master_seed")]
    pub seed: u64,
    pub experiments: Vec<SuiteEntry>,
}

fn default_master_seed() -> u64 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntryOutcome {
    pub experiment: String,
    pub success_rate: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub min_success_rate: Option<f64>,
    pub max_success_rate: Option<f64>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteOutcome {
    pub passed: bool,
    pub entries: Vec<EntryOutcome>,
    pub reports: Vec<ExperimentReport>,
}

/// Completeness and soundness floors: 2/3 less the allowed slack.
const TWO_THIRDS_FLOOR: f64 = 2.0 / 3.0 - 0.06;

fn entry(
    id: &str,
    trials: u64,
    protocol: serde_json::Value,
    min: Option<f64>,
    max: Option<f64>,
) -> SuiteEntry {
    let experiment = serde_json::from_value(json!({
        "id": id,
        "trials": trials,
        "protocol": protocol,
    }))
    .expect("built-in suite entry parses");
    SuiteEntry {
        experiment,
        min_success_rate: min,
        max_success_rate: max,
    }
}

/// The built-in acceptance matrix.
pub fn default_suite() -> SuiteConfig {
    let floor = Some(TWO_THIRDS_FLOOR);
    let strategy_floor = Some(1.0 - 0.1 - 0.06);
    let p1 = |bandit: serde_json::Value, behavior: serde_json::Value, expect: &str| {
        json!({
            "kind": "verify-bandit",
            "bandit": bandit,
            "sigma": 0.05,
            "epsilon": 0.25,
            "behavior": behavior,
            "expect": expect,
        })
    };
    let random = json!({"kind": "random-bernoulli", "n": 200});
    let zeros = json!({"kind": "constant", "n": 200, "value": 0.0});
    let blocks = json!({"kind": "blocks", "n": 20, "ones": 10, "shuffle": true});
    let p2 = |strategy: serde_json::Value, behavior: serde_json::Value, expect: &str| {
        json!({
            "kind": "verify-strategy",
            "bandit": blocks,
            "sigma": 0.1,
            "epsilon": 0.1,
            "eta": 0.3,
            "delta": 0.1,
            "strategy": strategy,
            "behavior": behavior,
            "expect": expect,
        })
    };
    let p3 = |game: serde_json::Value, profile: &str, view: &str, expect: &str| {
        json!({
            "kind": "verify-game",
            "game": game,
            "sigma": 0.1,
            "epsilon": 0.1,
            "eta": 0.3,
            "profile": {"kind": profile},
            "prover_view": view,
            "expect": expect,
        })
    };
    let tamper = |cheat: serde_json::Value| {
        json!({
            "kind": "lowcomm",
            "bandit": {"kind": "random-bernoulli", "n": 50},
            "sigma": 0.1,
            "epsilon": 0.25,
            "cheat": cheat,
            "expect": "reject",
        })
    };
    let learning = |learner: &str| {
        json!({
            "kind": "lb-learning",
            "learner": learner,
            "n": 240,
            "sigma": 1.0 / 12.0,
            "epsilon": 0.25,
            "budget": 20,
        })
    };
    let honest = json!({"kind": "honest"});
    let experiments = vec![
        entry("bandit-completeness", 300, p1(random.clone(), honest.clone(), "accept"), floor, None),
        entry(
            "bandit-soundness-inflate",
            300,
            p1(zeros, json!({"kind": "inflate-block", "delta": 1.0}), "reject"),
            floor,
            None,
        ),
        entry(
            "bandit-soundness-shift",
            300,
            p1(random.clone(), json!({"kind": "shift-all", "delta": 0.25}), "reject"),
            floor,
            None,
        ),
        entry(
            "bandit-soundness-noise",
            300,
            p1(random.clone(), json!({"kind": "random-noise", "delta": 0.3}), "reject"),
            floor,
            None,
        ),
        entry(
            "bandit-soundness-deflate",
            300,
            p1(random.clone(), json!({"kind": "deflate-top", "delta": 0.5}), "reject"),
            floor,
            None,
        ),
        entry("strategy-completeness", 300, p2(json!({"kind": "optimal"}), honest.clone(), "accept"), strategy_floor, None),
        entry(
            "strategy-soundness",
            300,
            p2(json!({"kind": "uniform-below", "value": 0.0}), honest.clone(), "reject"),
            strategy_floor,
            None,
        ),
        entry(
            "strategy-soundness-deflate",
            300,
            p2(
                json!({"kind": "uniform-below", "value": 0.0}),
                json!({"kind": "deflate-top", "delta": 1.0}),
                "reject",
            ),
            strategy_floor,
            None,
        ),
        entry(
            "game-completeness",
            200,
            p3(json!({"kind": "zero", "players": 3, "actions": 60}), "uniform", "same", "accept"),
            floor,
            None,
        ),
        entry(
            "game-soundness",
            200,
            p3(
                json!({"kind": "hard-family", "players": 3, "actions": 60, "sigma": 0.1}),
                "deviation",
                "zero",
                "reject",
            ),
            floor,
            None,
        ),
        entry(
            "lowcomm-completeness",
            300,
            json!({
                "kind": "lowcomm",
                "bandit": random,
                "sigma": 0.05,
                "epsilon": 0.25,
                "expect": "accept",
            }),
            floor,
            None,
        ),
        entry("lowcomm-tamper-value", 250, tamper(json!({"kind": "tamper-value"})), Some(1.0), None),
        entry("lowcomm-tamper-path", 250, tamper(json!({"kind": "tamper-path"})), Some(1.0), None),
        entry("lowcomm-tamper-root", 250, tamper(json!({"kind": "tamper-root"})), Some(1.0), None),
        entry(
            "lowcomm-tamper-claim",
            250,
            tamper(json!({"kind": "inflate-claim", "delta": 0.5})),
            Some(1.0),
            None,
        ),
        entry(
            "lb-coin",
            300,
            json!({"kind": "lb-coin", "n": 480, "sigma": 0.05, "epsilon": 0.2}),
            Some(7.0 / 12.0 - 0.08),
            None,
        ),
        entry("lb-learning-uniform", 500, learning("uniform-greedy"), None, Some(2.0 / 3.0)),
        entry("lb-learning-round-robin", 500, learning("round-robin-greedy"), None, Some(2.0 / 3.0)),
    ];
    SuiteConfig {
        seed: default_master_seed(),
        experiments,
    }
}

impl SuiteConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// Applies seeds and overrides, then validates every experiment.
    pub fn resolve(&self, trials: Option<u64>) -> Result<Vec<ExperimentConfig>, HarnessError> {
        let mut out = Vec::with_capacity(self.experiments.len());
        for (i, e) in self.experiments.iter().enumerate() {
            let mut c = e.experiment.clone();
            c.seed = derive_path(self.seed, &[labels::EXPERIMENT, i as u64]);
            if let Some(t) = trials {
                c.trials = t;
            }
            c.validate()?;
            if out.iter().any(|o: &ExperimentConfig| o.id == c.id) {
                return Err(HarnessError::Config(format!("duplicate experiment id {:?}", c.id)));
            }
            out.push(c);
        }
        Ok(out)
    }
}

/// Runs every experiment of `suite`. All configs are validated before the
/// first trial.
pub fn run_suite(
    suite: &SuiteConfig,
    trials: Option<u64>,
    options: &RunOptions,
) -> Result<SuiteOutcome, HarnessError> {
    let configs = suite.resolve(trials)?;
    let mut reports = Vec::with_capacity(configs.len());
    let mut entries = Vec::with_capacity(configs.len());
    for (config, e) in configs.iter().zip(&suite.experiments) {
        let report = run_experiment(config, options)?;
        let s = &report.summary;
        entries.push(EntryOutcome {
            experiment: s.experiment.clone(),
            success_rate: s.success_rate,
            ci95_low: s.ci95_low,
            ci95_high: s.ci95_high,
            min_success_rate: e.min_success_rate,
            max_success_rate: e.max_success_rate,
            passed: e.passes(s.success_rate),
        });
        reports.push(report);
    }
    Ok(SuiteOutcome {
        passed: entries.iter().all(|e| e.passed),
        entries,
        reports,
    })
}

pub fn write_suite_csv<W: Write>(out: W, entries: &[EntryOutcome]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for e in entries {
        w.serialize(e)?;
    }
    if entries.is_empty() {
        w.write_record([
            "experiment",
            "success_rate",
            "ci95_low",
            "ci95_high",
            "min_success_rate",
            "max_success_rate",
            "passed",
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the experiment reports plus `suite.csv` into `dir`.
pub fn emit_suite(dir: &Path, outcome: &SuiteOutcome, format: Format) -> Result<(), HarnessError> {
    emit_reports(dir, &outcome.reports, format)?;
    let path = dir.join("suite.csv");
    let file = fs::File::create(&path).map_err(|e| HarnessError::io(&path, e))?;
    write_suite_csv(file, &outcome.entries).map_err(|source| HarnessError::Csv { path, source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn built_in_suite_is_valid() {
        let s = default_suite();
        let configs = s.resolve(None).unwrap();
        assert_eq!(configs.len(), s.experiments.len());
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(SuiteConfig::from_json(&text).unwrap(), s);
    }

    #[test]
    fn pass_bands() {
        let mut e = default_suite().experiments.remove(0);
        e.min_success_rate = Some(0.5);
        assert!(e.passes(0.5) && !e.passes(0.49));
        e.min_success_rate = None;
        e.max_success_rate = Some(0.5);
        assert!(!e.passes(0.5) && e.passes(0.49));
    }
}
