//! Trial records, summaries and their CSV / JSON forms. Column layouts are
//! documented in `docs/schema.md`.

use std::fs;
use std::io::Write;
use std::path::Path;

use banditproof_core::stats::wilson_interval;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::HarnessError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub experiment: String,
    pub trial: u64,
    pub seed: u64,
    pub verdict: String,
    pub success: bool,
    pub verifier_queries: u64,
    pub prover_queries: u64,
    pub bytes_prover_to_verifier: u64,
    pub bytes_verifier_to_prover: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript: Option<serde_json::Value>,
}

/// One CSV row per trial.
#[derive(Serialize)]
struct TrialRow<'a> {
    experiment: &'a str,
    trial: u64,
    seed: u64,
    verdict: &'a str,
    success: bool,
    verifier_queries: u64,
    prover_queries: u64,
    bytes_prover_to_verifier: u64,
    bytes_verifier_to_prover: u64,
}

impl<'a> From<&'a TrialRecord> for TrialRow<'a> {
    fn from(r: &'a TrialRecord) -> Self {
        TrialRow {
            experiment: &r.experiment,
            trial: r.trial,
            seed: r.seed,
            verdict: &r.verdict,
            success: r.success,
            verifier_queries: r.verifier_queries,
            prover_queries: r.prover_queries,
            bytes_prover_to_verifier: r.bytes_prover_to_verifier,
            bytes_verifier_to_prover: r.bytes_verifier_to_prover,
        }
    }
}

const TRIAL_COLUMNS: [&str; 9] = [
    "experiment",
    "trial",
    "seed",
    "verdict",
    "success",
    "verifier_queries",
    "prover_queries",
    "bytes_prover_to_verifier",
    "bytes_verifier_to_prover",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: String,
    pub n: usize,
    pub sigma: f64,
    pub epsilon: f64,
    pub budget: Option<u64>,
    pub trials: u64,
    pub successes: u64,
    pub success_rate: f64,
    /// Mean verifier (or learner, or coin) queries per trial.
    pub mean_queries: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    experiment: &'a str,
    n: usize,
    sigma: f64,
    epsilon: f64,
    budget: Option<u64>,
    trials: u64,
    success_rate: f64,
    mean_queries: f64,
    ci95_low: f64,
    ci95_high: f64,
}

const SUMMARY_COLUMNS: [&str; 10] = [
    "experiment",
    "n",
    "sigma",
    "epsilon",
    "budget",
    "trials",
    "success_rate",
    "mean_queries",
    "ci95_low",
    "ci95_high",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub summary: Summary,
    pub trials: Vec<TrialRecord>,
}

/// Aggregates integer counts, so the result does not depend on the order
/// trials finished in.
pub fn summarize(config: &ExperimentConfig, trials: &[TrialRecord]) -> Summary {
    let count = trials.len() as u64;
    let successes = trials.iter().filter(|r| r.success).count() as u64;
    let queries: u64 = trials.iter().map(|r| r.verifier_queries).sum();
    let (lo, hi) = wilson_interval(successes, count);
    let ratio = |x: u64| if count == 0 { 0.0 } else { x as f64 / count as f64 };
    Summary {
        experiment: config.id.clone(),
        n: config.protocol.n(),
        sigma: config.protocol.sigma(),
        epsilon: config.protocol.epsilon(),
        budget: config.protocol.budget(),
        trials: count,
        successes,
        success_rate: ratio(successes),
        mean_queries: ratio(queries),
        ci95_low: lo,
        ci95_high: hi,
    }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> HarnessError + '_ {
    move |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes per-trial rows. An empty slice gives a header-only file.
pub fn write_trials_csv<W: Write>(out: W, trials: &[TrialRecord]) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(TRIAL_COLUMNS)?;
    for r in trials {
        w.serialize(TrialRow::from(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(out: W, summaries: &[Summary]) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(SUMMARY_COLUMNS)?;
    for s in summaries {
        w.serialize(SummaryRow {
            experiment: &s.experiment,
            n: s.n,
            sigma: s.sigma,
            epsilon: s.epsilon,
            budget: s.budget,
            trials: s.trials,
            success_rate: s.success_rate,
            mean_queries: s.mean_queries,
            ci95_low: s.ci95_low,
            ci95_high: s.ci95_high,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Writes `reports` into `dir`: `summary.csv` and `trials.csv`, or
/// `report.json`. Returns the paths written.
pub fn emit_reports(
    dir: &Path,
    reports: &[ExperimentReport],
    format: Format,
) -> Result<Vec<std::path::PathBuf>, HarnessError> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    match format {
        Format::Csv => {
            let summary = dir.join("summary.csv");
            let trials = dir.join("trials.csv");
            let file = fs::File::create(&summary).map_err(|e| HarnessError::io(&summary, e))?;
            let all: Vec<Summary> = reports.iter().map(|r| r.summary.clone()).collect();
            write_summary_csv(file, &all).map_err(csv_err(&summary))?;
            let file = fs::File::create(&trials).map_err(|e| HarnessError::io(&trials, e))?;
            let rows: Vec<TrialRecord> = reports.iter().flat_map(|r| r.trials.iter().cloned()).collect();
            write_trials_csv(file, &rows).map_err(csv_err(&trials))?;
            Ok(vec![summary, trials])
        }
        Format::Json => {
            let path = dir.join("report.json");
            let text = serde_json::to_string_pretty(reports)?;
            fs::write(&path, text).map_err(|e| HarnessError::io(&path, e))?;
            Ok(vec![path])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_trial_list_is_header_only() {
        let mut buf = Vec::new();
        write_trials_csv(&mut buf, &[]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "experiment,trial,seed,verdict,success,verifier_queries,prover_queries,\
             bytes_prover_to_verifier,bytes_verifier_to_prover\n"
        );
        let mut buf = Vec::new();
        write_summary_csv(&mut buf, &[]).unwrap();
        assert_eq!(buf.iter().filter(|&&b| b == b'\n').count(), 1);
    }
}
