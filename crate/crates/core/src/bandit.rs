//! Single-message verification of near-optimal smooth bandit strategies.
//!
//! The prover pulls every arm `k_P` times and sends the (quantized) empirical
//! means `u~`. The verifier audits `u~` bin by bin: bin `b` samples `a_b`
//! arms uniformly with replacement, pulls each `m_b` times and rejects as
//! soon as an estimate is more than `eps_b / 8` away from the claim.
//! Otherwise it outputs the optimal smooth strategy for `u~`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{ArmOracle, OracleSource, Strategy};
use crate::rng::{derive_seed, labels, rng_from_seed, SimRng};
use crate::smooth::{check_sigma, compute_optimal_smooth_strategy, rank_arms};

/// `log_4(1 / epsilon)`.
pub fn log4_inverse(epsilon: f64) -> f64 {
    (1.0 / epsilon).ln() / 4f64.ln()
}

/// Largest bin index `ceil(log_4(1/epsilon))`, snapping values within 1e-9 of
/// an integer so `epsilon = 4^-k` gives exactly `k`.
pub fn max_bin(epsilon: f64) -> u32 {
    let l = log4_inverse(epsilon);
    let r = l.round();
    let c = if (l - r).abs() < 1e-9 { r } else { l.ceil() };
    c.max(0.0) as u32
}

/// One audit bin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinRecord {
    pub bin: u32,
    /// `eps_b = epsilon * 4^b`.
    pub epsilon: f64,
    /// `a_b`, arms sampled in this bin.
    pub arms: u64,
    /// `m_b`, pulls per sampled arm.
    pub pulls: u64,
}

impl BinRecord {
    /// Rejection threshold `eps_b / 8`.
    pub fn threshold(&self) -> f64 {
        self.epsilon / 8.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinSchedule {
    pub bins: Vec<BinRecord>,
}

impl BinSchedule {
    /// `sum_b a_b * m_b`.
    pub fn planned_verifier_pulls(&self) -> u64 {
        self.bins.iter().map(|b| b.arms * b.pulls).sum()
    }

    /// `sum_b a_b`, the number of audited (arm, bin) pairs.
    pub fn planned_audits(&self) -> u64 {
        self.bins.iter().map(|b| b.arms).sum()
    }
}

pub fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(invalid("epsilon", format!("{epsilon} not in (0, 1)")));
    }
    Ok(())
}

/// The verifier's audit schedule for `n` arms.
pub fn bin_schedule(n: usize, sigma: f64, epsilon: f64) -> Result<BinSchedule> {
    check_epsilon(epsilon)?;
    check_sigma(sigma, n)?;
    let l = log4_inverse(epsilon);
    let ln6 = 6f64.ln();
    let bins = (0..=max_bin(epsilon))
        .map(|b| {
            let eps_b = epsilon * 4f64.powi(b as i32);
            let arms = (eps_b * 4.0 * n as f64 * sigma * (l + 2.0) * ln6 / epsilon).ceil() as u64;
            let pulls =
                (128.0 * (12.0 * (l + 2.0) * arms as f64).ln() / (eps_b * eps_b)).ceil() as u64;
            BinRecord {
                bin: b,
                epsilon: eps_b,
                arms,
                pulls,
            }
        })
        .collect();
    Ok(BinSchedule { bins })
}

/// Default prover pulls per arm, `ceil(128 ln(12 n / epsilon) / epsilon^2)`.
pub fn default_prover_pulls(n: usize, epsilon: f64) -> u64 {
    (128.0 * (12.0 * n as f64 / epsilon).ln() / (epsilon * epsilon)).ceil() as u64
}

/// Where a gap `|u~_i - u_i|` falls in the bin partition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bucket {
    /// Gap at most `epsilon / 4`.
    Below,
    /// Gap in `(epsilon 4^(b-1), epsilon 4^b]`.
    Bin(u32),
}

pub fn bucket_of(delta: f64, epsilon: f64) -> Bucket {
    if delta <= epsilon / 4.0 {
        return Bucket::Below;
    }
    let mut b = 0;
    let mut upper = epsilon;
    while delta > upper {
        b += 1;
        upper *= 4.0;
    }
    Bucket::Bin(b)
}

/// Quantization grid with step `epsilon / 64` over `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub step: f64,
    pub max_level: u32,
}

impl Grid {
    pub fn for_epsilon(epsilon: f64) -> Grid {
        let step = epsilon / 64.0;
        Grid {
            step,
            max_level: (1.0 / step + 1e-9).floor() as u32,
        }
    }

    /// Nearest grid level, clamped to the grid.
    pub fn level(&self, x: f64) -> u32 {
        ((x / self.step).round().max(0.0) as u32).min(self.max_level)
    }

    pub fn value(&self, level: u32) -> f64 {
        level as f64 * self.step
    }

    pub fn quantize(&self, x: f64) -> f64 {
        self.value(self.level(x))
    }

    /// Bits needed for one level in `0..=max_level`.
    pub fn bits_per_entry(&self) -> u8 {
        (32 - self.max_level.leading_zeros()).max(1) as u8
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Encoding {
    /// Entries sent as grid levels.
    #[default]
    Quantized,
    /// Entries sent as raw `f64`; a debugging mode.
    FullPrecision,
}

const TAG_UTILITIES: u8 = 0x01;

/// The prover's single message `u~`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProverMessage {
    utilities: Vec<f64>,
    #[serde(skip)]
    levels: Option<(Grid, Vec<u32>)>,
}

impl ProverMessage {
    /// Rounds every claim to the nearest grid point.
    pub fn quantized(claims: &[f64], grid: Grid) -> Self {
        let levels: Vec<u32> = claims.iter().map(|&x| grid.level(x)).collect();
        ProverMessage {
            utilities: levels.iter().map(|&l| grid.value(l)).collect(),
            levels: Some((grid, levels)),
        }
    }

    /// Sends claims unchanged, even if they are outside `[0, 1]`.
    pub fn full_precision(claims: Vec<f64>) -> Self {
        ProverMessage {
            utilities: claims,
            levels: None,
        }
    }

    pub fn new(claims: &[f64], encoding: Encoding, epsilon: f64) -> Self {
        match encoding {
            Encoding::Quantized => Self::quantized(claims, Grid::for_epsilon(epsilon)),
            Encoding::FullPrecision => Self::full_precision(claims.to_vec()),
        }
    }

    pub fn utilities(&self) -> &[f64] {
        &self.utilities
    }

    /// Wire form: `u32` body length, then tag `0x01`, encoding byte,
    /// `u32` entry count and the entries. Quantized entries follow an `f64`
    /// step and a bit width and are packed most significant bit first;
    /// full-precision entries are `f64`. Integers and floats are big-endian.
    pub fn encode(&self) -> Vec<u8> {
        let mut body = vec![TAG_UTILITIES];
        match &self.levels {
            Some((grid, levels)) => {
                body.push(0);
                body.extend_from_slice(&(levels.len() as u32).to_be_bytes());
                body.extend_from_slice(&grid.step.to_be_bytes());
                let bits = grid.bits_per_entry();
                body.push(bits);
                let mut writer = BitWriter::default();
                for &l in levels {
                    writer.push(l, bits);
                }
                body.extend(writer.finish());
            }
            None => {
                body.push(1);
                body.extend_from_slice(&(self.utilities.len() as u32).to_be_bytes());
                for v in &self.utilities {
                    body.extend_from_slice(&v.to_be_bytes());
                }
            }
        }
        let mut out = (body.len() as u32).to_be_bytes().to_vec();
        out.extend(body);
        out
    }

    /// Parses and validates a message for `n` arms under the agreed encoding.
    pub fn decode(
        bytes: &[u8],
        n: usize,
        encoding: Encoding,
        epsilon: f64,
    ) -> std::result::Result<ProverMessage, String> {
        let mut r = Reader::new(bytes);
        let len = r.u32()? as usize;
        if len != r.remaining() {
            return Err(format!("length prefix {len} but {} bytes follow", r.remaining()));
        }
        if r.u8()? != TAG_UTILITIES {
            return Err("unexpected message tag".into());
        }
        let enc = r.u8()?;
        let count = r.u32()? as usize;
        if count != n {
            return Err(format!("message has {count} entries, expected {n}"));
        }
        let msg = match (enc, encoding) {
            (0, Encoding::Quantized) => {
                let grid = Grid::for_epsilon(epsilon);
                let step = r.f64()?;
                if step.to_bits() != grid.step.to_bits() {
                    return Err(format!("grid step {step}, expected {}", grid.step));
                }
                let bits = r.u8()?;
                if bits != grid.bits_per_entry() {
                    return Err(format!("{bits} bits per entry, expected {}", grid.bits_per_entry()));
                }
                let packed = r.rest();
                if packed.len() != (n * bits as usize).div_ceil(8) {
                    return Err("packed payload has the wrong length".into());
                }
                let mut reader = BitReader::new(packed);
                let mut levels = Vec::with_capacity(n);
                for _ in 0..n {
                    let l = reader.take(bits);
                    if l > grid.max_level {
                        return Err(format!("level {l} exceeds the grid"));
                    }
                    levels.push(l);
                }
                ProverMessage {
                    utilities: levels.iter().map(|&l| grid.value(l)).collect(),
                    levels: Some((grid, levels)),
                }
            }
            (1, Encoding::FullPrecision) => {
                let mut values = Vec::with_capacity(n);
                for _ in 0..n {
                    let v = r.f64()?;
                    if !(0.0..=1.0).contains(&v) {
                        return Err(format!("entry {v} outside [0, 1]"));
                    }
                    values.push(v);
                }
                if r.remaining() != 0 {
                    return Err("trailing bytes".into());
                }
                ProverMessage::full_precision(values)
            }
            _ => return Err(format!("unexpected encoding byte {enc}")),
        };
        Ok(msg)
    }
}

#[derive(Default)]
struct BitWriter {
    bytes: Vec<u8>,
    acc: u64,
    filled: u32,
}

impl BitWriter {
    fn push(&mut self, value: u32, bits: u8) {
        self.acc = (self.acc << bits) | value as u64;
        self.filled += bits as u32;
        while self.filled >= 8 {
            self.filled -= 8;
            self.bytes.push((self.acc >> self.filled) as u8);
        }
        self.acc &= (1u64 << self.filled) - 1;
    }

    fn finish(mut self) -> Vec<u8> {
        if self.filled > 0 {
            self.bytes.push((self.acc << (8 - self.filled)) as u8);
        }
        self.bytes
    }
}

struct BitReader<'a> {
    bytes: &'a [u8],
    bit: usize,
}

impl<'a> BitReader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        BitReader { bytes, bit: 0 }
    }

    fn take(&mut self, bits: u8) -> u32 {
        let mut v = 0u32;
        for _ in 0..bits {
            let byte = self.bytes[self.bit / 8];
            let b = (byte >> (7 - self.bit % 8)) & 1;
            v = (v << 1) | b as u32;
            self.bit += 1;
        }
        v
    }
}

/// Big-endian cursor over a received message.
pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Reader { bytes, pos: 0 }
    }

    pub(crate) fn take(&mut self, len: usize) -> std::result::Result<&'a [u8], String> {
        if self.remaining() < len {
            return Err("message truncated".into());
        }
        let s = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(s)
    }

    pub(crate) fn u8(&mut self) -> std::result::Result<u8, String> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn u32(&mut self) -> std::result::Result<u32, String> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn f64(&mut self) -> std::result::Result<f64, String> {
        Ok(f64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn rest(&mut self) -> &'a [u8] {
        let s = &self.bytes[self.pos..];
        self.pos = self.bytes.len();
        s
    }

    pub(crate) fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

/// How the prover turns its honest estimates into the claims it sends.
/// Every variant first spends the same `n * k_P` pulls; adversarial claims
/// are clamped to `[0, 1]`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProverBehavior {
    #[default]
    Honest,
    /// Adds `delta` to every estimate.
    ShiftAll { delta: f64 },
    /// Adds `delta` to the listed arms, or by default to the `ceil(1/sigma)`
    /// arms with the lowest estimates.
    InflateBlock {
        #[serde(default)]
        arms: Option<Vec<usize>>,
        delta: f64,
    },
    /// Subtracts `delta` from the `ceil(1/sigma)` arms with the highest
    /// estimates.
    DeflateTop { delta: f64 },
    /// Adds independent `U(-delta, delta)` noise to every estimate.
    RandomNoise { delta: f64 },
    /// Ignores the estimates and sends `claims`.
    Fixed { claims: Vec<f64> },
}

impl ProverBehavior {
    pub fn name(&self) -> &'static str {
        match self {
            ProverBehavior::Honest => "honest",
            ProverBehavior::ShiftAll { .. } => "shift-all",
            ProverBehavior::InflateBlock { .. } => "inflate-block",
            ProverBehavior::DeflateTop { .. } => "deflate-top",
            ProverBehavior::RandomNoise { .. } => "random-noise",
            ProverBehavior::Fixed { .. } => "fixed",
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            ProverBehavior::InflateBlock {
                arms: Some(arms), ..
            } => {
                if let Some(&a) = arms.iter().find(|&&a| a >= n) {
                    return Err(Error::ArmOutOfRange { arm: a, arms: n });
                }
            }
            ProverBehavior::Fixed { claims } if claims.len() != n => {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: claims.len(),
                });
            }
            _ => {}
        }
        Ok(())
    }

    /// Claims sent in place of the honest `estimates`.
    pub fn claims(&self, estimates: &[f64], sigma: f64, rng: &mut SimRng) -> Vec<f64> {
        let block = ((1.0 / sigma) - 1e-9).ceil().max(1.0) as usize;
        let block = block.min(estimates.len());
        let mut out = estimates.to_vec();
        match self {
            ProverBehavior::Honest => return out,
            ProverBehavior::ShiftAll { delta } => out.iter_mut().for_each(|x| *x += delta),
            ProverBehavior::InflateBlock { arms, delta } => {
                let chosen: Vec<usize> = match arms {
                    Some(a) => a.clone(),
                    None => {
                        let mut order: Vec<usize> = (0..estimates.len()).collect();
                        order.sort_by(|&a, &b| estimates[a].total_cmp(&estimates[b]));
                        order.truncate(block);
                        order
                    }
                };
                for i in chosen {
                    out[i] += delta;
                }
            }
            ProverBehavior::DeflateTop { delta } => {
                for &i in rank_arms(estimates).iter().take(block) {
                    out[i] -= delta;
                }
            }
            ProverBehavior::RandomNoise { delta } => {
                for x in out.iter_mut() {
                    *x += delta * (2.0 * rng.random::<f64>() - 1.0);
                }
            }
            ProverBehavior::Fixed { claims } => out = claims.clone(),
        }
        out.iter_mut().for_each(|x| *x = x.clamp(0.0, 1.0));
        out
    }
}

/// Protocol parameters shared by prover and verifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BanditParams {
    pub sigma: f64,
    pub epsilon: f64,
    /// Prover pulls per arm; `None` uses [`default_prover_pulls`].
    #[serde(default)]
    pub prover_pulls: Option<u64>,
    #[serde(default)]
    pub encoding: Encoding,
}

impl BanditParams {
    pub fn new(sigma: f64, epsilon: f64) -> Self {
        BanditParams {
            sigma,
            epsilon,
            prover_pulls: None,
            encoding: Encoding::Quantized,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        check_epsilon(self.epsilon)?;
        check_sigma(self.sigma, n)?;
        if self.prover_pulls == Some(0) {
            return Err(invalid("prover_pulls", "must be positive"));
        }
        Ok(())
    }

    pub fn prover_pulls_per_arm(&self, n: usize) -> u64 {
        self.prover_pulls
            .unwrap_or_else(|| default_prover_pulls(n, self.epsilon))
    }

    pub fn schedule(&self, n: usize) -> Result<BinSchedule> {
        bin_schedule(n, self.sigma, self.epsilon)
    }
}

/// Honest estimation: `pulls_per_arm` pulls of every arm, empirical means.
/// Returns the raw (unquantized) means.
pub fn prover_estimate_utilities<O: ArmOracle + ?Sized>(
    oracle: &mut O,
    pulls_per_arm: u64,
) -> Result<Vec<f64>> {
    (0..oracle.num_arms())
        .map(|i| Ok(oracle.pull_sum(i, pulls_per_arm)? / pulls_per_arm as f64))
        .collect()
}

/// One planned audit: pull `arm` `pulls` times and compare with bin `bin`'s
/// threshold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditRequest {
    pub bin: u32,
    pub arm: usize,
    pub pulls: u64,
    pub threshold: f64,
}

/// The verifier's full audit plan, drawn from its own coins before any
/// message is read. It depends only on `(n, sigma, epsilon, seed)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditPlan {
    pub schedule: BinSchedule,
    pub requests: Vec<AuditRequest>,
}

impl AuditPlan {
    pub fn draw(n: usize, schedule: BinSchedule, rng: &mut SimRng) -> AuditPlan {
        let mut requests = Vec::with_capacity(schedule.planned_audits() as usize);
        for bin in &schedule.bins {
            for _ in 0..bin.arms {
                requests.push(AuditRequest {
                    bin: bin.bin,
                    arm: rng.random_range(0..n),
                    pulls: bin.pulls,
                    threshold: bin.threshold(),
                });
            }
        }
        AuditPlan { schedule, requests }
    }

    pub fn for_seed(n: usize, sigma: f64, epsilon: f64, seed: u64) -> Result<AuditPlan> {
        let schedule = bin_schedule(n, sigma, epsilon)?;
        let mut coins = rng_from_seed(derive_seed(seed, labels::VERIFIER_COINS));
        Ok(AuditPlan::draw(n, schedule, &mut coins))
    }

    /// Pull multiset `(arm, pulls)` of the whole plan, sorted.
    pub fn query_multiset(&self) -> Vec<(usize, u64)> {
        let mut q: Vec<(usize, u64)> = self.requests.iter().map(|r| (r.arm, r.pulls)).collect();
        q.sort_unstable();
        q
    }
}

/// One executed audit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub bin: u32,
    pub arm: usize,
    pub pulls: u64,
    pub estimate: f64,
    pub claimed: f64,
    pub threshold: f64,
    pub violated: bool,
}

/// Walks an [`AuditPlan`] one request at a time and stops at the first
/// violation. Callers supply rewards and claimed values, which lets the same
/// decision logic run against plain oracles, commitments or simulated coins.
#[derive(Clone, Debug)]
pub struct AuditSession {
    plan: AuditPlan,
    cursor: usize,
    records: Vec<AuditRecord>,
    pulls: u64,
    violation: Option<usize>,
}

impl AuditSession {
    pub fn new(plan: AuditPlan) -> Self {
        AuditSession {
            plan,
            cursor: 0,
            records: Vec::new(),
            pulls: 0,
            violation: None,
        }
    }

    /// The next audit to perform, or `None` when finished.
    pub fn next_request(&self) -> Option<AuditRequest> {
        if self.violation.is_some() {
            return None;
        }
        self.plan.requests.get(self.cursor).copied()
    }

    /// Records the outcome of the current request. Returns `true` when the
    /// claim is rejected.
    pub fn submit(&mut self, reward_sum: f64, claimed: f64) -> bool {
        let req = self.plan.requests[self.cursor];
        let estimate = reward_sum / req.pulls as f64;
        let violated = (claimed - estimate).abs() > req.threshold;
        self.records.push(AuditRecord {
            bin: req.bin,
            arm: req.arm,
            pulls: req.pulls,
            estimate,
            claimed,
            threshold: req.threshold,
            violated,
        });
        self.pulls += req.pulls;
        if violated {
            self.violation = Some(self.cursor);
        }
        self.cursor += 1;
        violated
    }

    pub fn is_finished(&self) -> bool {
        self.next_request().is_none()
    }

    pub fn rejected(&self) -> Option<&AuditRecord> {
        self.violation.map(|i| &self.records[i])
    }

    pub fn pulls(&self) -> u64 {
        self.pulls
    }

    pub fn plan(&self) -> &AuditPlan {
        &self.plan
    }

    pub fn records(&self) -> &[AuditRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<AuditRecord> {
        self.records
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RejectReason {
    MalformedMessage { detail: String },
    AuditFailed { bin: u32, arm: usize },
    InvalidOpening { arm: usize },
    ArgumentRejected,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "decision", rename_all = "kebab-case")]
pub enum Verdict {
    Reject { reason: RejectReason },
    Accept { strategy: Strategy },
}

impl Verdict {
    pub fn is_reject(&self) -> bool {
        matches!(self, Verdict::Reject { .. })
    }

    pub fn strategy(&self) -> Option<&Strategy> {
        match self {
            Verdict::Accept { strategy } => Some(strategy),
            Verdict::Reject { .. } => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Party {
    Prover,
    Verifier,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageRecord {
    pub from: Party,
    pub kind: String,
    pub bytes: u64,
}

/// Ordered message log and pull accounting of one run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Transcript {
    pub protocol: &'static str,
    pub seed: u64,
    pub messages: Vec<MessageRecord>,
    pub prover_pulls: u64,
    pub prover_arm_pulls: Vec<u64>,
    pub verifier_pulls_planned: u64,
    pub verifier_pulls: u64,
    pub audits: Vec<AuditRecord>,
}

impl Transcript {
    pub fn bytes_from(&self, party: Party) -> u64 {
        self.messages
            .iter()
            .filter(|m| m.from == party)
            .map(|m| m.bytes)
            .sum()
    }
}

/// Result of one verification run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifierOutcome {
    pub verdict: Verdict,
    pub transcript: Transcript,
    /// The decoded `u~`, empty when the message was malformed.
    #[serde(skip)]
    pub claimed_utilities: Vec<f64>,
}

impl VerifierOutcome {
    pub fn audit_log(&self) -> &[AuditRecord] {
        &self.transcript.audits
    }
}

/// Prover side: estimates, applies `behavior`, and builds the message.
/// Returns the message and the per-arm pull tally.
pub fn prover_message<O: ArmOracle + ?Sized>(
    oracle: &mut O,
    behavior: &ProverBehavior,
    params: &BanditParams,
    prover_coins: &mut SimRng,
) -> Result<(ProverMessage, Vec<u64>)> {
    let n = oracle.num_arms();
    let k = params.prover_pulls_per_arm(n);
    let before = oracle.pulls();
    let estimates = prover_estimate_utilities(oracle, k)?;
    debug_assert_eq!(oracle.pulls() - before, n as u64 * k);
    let claims = behavior.claims(&estimates, params.sigma, prover_coins);
    let message = ProverMessage::new(&claims, params.encoding, params.epsilon);
    Ok((message, vec![k; n]))
}

/// Protocol run against an explicit prover oracle and verifier oracle.
///
/// Seeds: prover coins and verifier coins are children of `seed`
/// (labels `PROVER_COINS`, `VERIFIER_COINS`).
pub fn run_with_oracles<P, V>(
    prover_oracle: &mut P,
    verifier_oracle: &mut V,
    behavior: &ProverBehavior,
    params: &BanditParams,
    seed: u64,
) -> Result<VerifierOutcome>
where
    P: ArmOracle + ?Sized,
    V: ArmOracle + ?Sized,
{
    let n = verifier_oracle.num_arms();
    if prover_oracle.num_arms() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: prover_oracle.num_arms(),
        });
    }
    params.validate(n)?;
    behavior.validate(n)?;
    let plan = AuditPlan::for_seed(n, params.sigma, params.epsilon, seed)?;
    let mut prover_coins = rng_from_seed(derive_seed(seed, labels::PROVER_COINS));

    let prover_before = prover_oracle.pulls();
    let (message, prover_arm_pulls) =
        prover_message(prover_oracle, behavior, params, &mut prover_coins)?;
    let bytes = message.encode();
    let mut transcript = Transcript {
        protocol: "bandit",
        seed,
        messages: vec![MessageRecord {
            from: Party::Prover,
            kind: "utilities".into(),
            bytes: bytes.len() as u64,
        }],
        prover_pulls: prover_oracle.pulls() - prover_before,
        prover_arm_pulls,
        verifier_pulls_planned: plan.schedule.planned_verifier_pulls(),
        verifier_pulls: 0,
        audits: Vec::new(),
    };

    let claimed = match ProverMessage::decode(&bytes, n, params.encoding, params.epsilon) {
        Ok(m) => m.utilities,
        Err(detail) => {
            return Ok(VerifierOutcome {
                verdict: Verdict::Reject {
                    reason: RejectReason::MalformedMessage { detail },
                },
                transcript,
                claimed_utilities: Vec::new(),
            })
        }
    };

    let verifier_before = verifier_oracle.pulls();
    let mut session = AuditSession::new(plan);
    while let Some(req) = session.next_request() {
        let sum = verifier_oracle.pull_sum(req.arm, req.pulls)?;
        session.submit(sum, claimed[req.arm]);
    }
    let verdict = match session.rejected() {
        Some(r) => Verdict::Reject {
            reason: RejectReason::AuditFailed {
                bin: r.bin,
                arm: r.arm,
            },
        },
        None => Verdict::Accept {
            strategy: compute_optimal_smooth_strategy(params.sigma, &claimed)?.strategy,
        },
    };
    transcript.verifier_pulls = verifier_oracle.pulls() - verifier_before;
    debug_assert_eq!(transcript.verifier_pulls, session.pulls());
    transcript.audits = session.into_records();
    Ok(VerifierOutcome {
        verdict,
        transcript,
        claimed_utilities: claimed,
    })
}

/// Protocol run where both parties get fresh oracles from `source`
/// (labels `PROVER_ORACLE` and `VERIFIER_ORACLE`).
pub fn run_with_source<S: OracleSource + ?Sized>(
    source: &S,
    behavior: &ProverBehavior,
    params: &BanditParams,
    seed: u64,
) -> Result<VerifierOutcome> {
    let mut prover = source.spawn(derive_seed(seed, labels::PROVER_ORACLE));
    let mut verifier = source.spawn(derive_seed(seed, labels::VERIFIER_ORACLE));
    run_with_oracles(&mut prover, &mut verifier, behavior, params, seed)
}

/// Runs the protocol on `bandit` with a prover following `behavior`.
pub fn run_bandit_verification(
    bandit: &crate::model::Bandit,
    behavior: &ProverBehavior,
    params: &BanditParams,
    seed: u64,
) -> Result<VerifierOutcome> {
    run_with_source(bandit, behavior, params, seed)
}
