//! Low-communication verification: the prover commits to `u~` with a Merkle
//! tree, sends the root, the claimed optimal value `t` and an argument that
//! `t` is the smooth optimum of the committed vector. The verifier runs the
//! same bin audit as the single-message protocol, but learns each audited
//! entry by requesting an opening. It outputs `t` instead of a strategy.
//!
//! The argument backend shipped here re-executes the relation at prove time
//! and hands out a keyed token. It is sound only against provers that cannot
//! read the setup key, unlike a real succinct argument.

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};

use crate::bandit::{
    default_prover_pulls, prover_estimate_utilities, AuditPlan, AuditSession, BanditParams,
    Encoding, Grid, MessageRecord, Party, ProverBehavior, Reader, RejectReason, Transcript,
};
use crate::error::{invalid, Error, Result};
use crate::model::{ArmOracle, OracleSource};
use crate::rng::{derive_seed, labels, rng_from_seed};
use crate::smooth::compute_optimal_smooth_strategy;

pub type Digest = Vec<u8>;

/// Tolerance on `t` in [`relation_holds`].
pub const VALUE_TOLERANCE: f64 = 1e-9;

const LEAF: u8 = 0x00;
const NODE: u8 = 0x01;
const PAD: u8 = 0x02;

/// Public parameters: SHA-256 truncated to `lambda` bits, vectors of
/// length `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitmentParams {
    pub lambda: u32,
    pub n: usize,
}

impl CommitmentParams {
    pub fn new(lambda: u32, n: usize) -> Result<Self> {
        if lambda == 0 || lambda > 256 || lambda % 8 != 0 {
            return Err(invalid("lambda", format!("{lambda} is not a multiple of 8 in 8..=256")));
        }
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        Ok(CommitmentParams { lambda, n })
    }

    pub fn digest_len(&self) -> usize {
        self.lambda as usize / 8
    }

    /// Authentication path length `ceil(log2 n)`.
    pub fn depth(&self) -> usize {
        self.n.next_power_of_two().trailing_zeros() as usize
    }

    fn hash(&self, parts: &[&[u8]]) -> Digest {
        let mut h = Sha256::new();
        for p in parts {
            h.update(p);
        }
        h.finalize()[..self.digest_len()].to_vec()
    }

    /// `H(0x00 || index || level)` with big-endian `u64` fields.
    pub fn leaf(&self, index: usize, level: u32) -> Digest {
        self.hash(&[
            &[LEAF],
            &(index as u64).to_be_bytes(),
            &(level as u64).to_be_bytes(),
        ])
    }

    pub fn node(&self, left: &[u8], right: &[u8]) -> Digest {
        self.hash(&[&[NODE], left, right])
    }

    fn pad(&self) -> Digest {
        self.hash(&[&[PAD]])
    }
}

/// Committed vector together with every tree layer.
#[derive(Clone, Debug, PartialEq)]
pub struct MerkleTree {
    params: CommitmentParams,
    levels: Vec<u32>,
    layers: Vec<Vec<Digest>>,
}

impl MerkleTree {
    pub fn root(&self) -> &Digest {
        &self.layers.last().unwrap()[0]
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    pub fn params(&self) -> CommitmentParams {
        self.params
    }
}

/// Commits to grid levels. Leaves are padded to a power of two with a
/// fixed padding digest.
pub fn vc_commit(params: CommitmentParams, levels: &[u32]) -> Result<(Digest, MerkleTree)> {
    if levels.len() != params.n {
        return Err(Error::DimensionMismatch {
            expected: params.n,
            found: levels.len(),
        });
    }
    let width = params.n.next_power_of_two();
    let mut layer: Vec<Digest> = levels
        .iter()
        .enumerate()
        .map(|(i, &l)| params.leaf(i, l))
        .collect();
    layer.resize(width, params.pad());
    let mut layers = vec![layer];
    while layers.last().unwrap().len() > 1 {
        let next = layers
            .last()
            .unwrap()
            .chunks(2)
            .map(|pair| params.node(&pair[0], &pair[1]))
            .collect();
        layers.push(next);
    }
    let tree = MerkleTree {
        params,
        levels: levels.to_vec(),
        layers,
    };
    Ok((tree.root().clone(), tree))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpeningProof {
    pub index: usize,
    pub level: u32,
    /// Sibling digests from the leaf upwards.
    pub path: Vec<Digest>,
}

pub fn vc_open(tree: &MerkleTree, index: usize) -> Result<OpeningProof> {
    if index >= tree.params.n {
        return Err(Error::ArmOutOfRange {
            arm: index,
            arms: tree.params.n,
        });
    }
    let mut path = Vec::with_capacity(tree.params.depth());
    let mut pos = index;
    for layer in &tree.layers[..tree.layers.len() - 1] {
        path.push(layer[pos ^ 1].clone());
        pos /= 2;
    }
    Ok(OpeningProof {
        index,
        level: tree.levels[index],
        path,
    })
}

pub fn vc_verify(params: &CommitmentParams, root: &[u8], proof: &OpeningProof) -> bool {
    if proof.index >= params.n || proof.path.len() != params.depth() {
        return false;
    }
    if proof.path.iter().any(|d| d.len() != params.digest_len()) {
        return false;
    }
    let mut acc = params.leaf(proof.index, proof.level);
    let mut pos = proof.index;
    for sibling in &proof.path {
        acc = if pos % 2 == 0 {
            params.node(&acc, sibling)
        } else {
            params.node(sibling, &acc)
        };
        pos /= 2;
    }
    acc == root
}

/// The relation: `witness` is a vector of grid levels committed under
/// `root` whose optimal smooth value is `value`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Relation {
    pub commitment: CommitmentParams,
    pub sigma: f64,
    pub grid: Grid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Statement {
    pub root: Digest,
    pub value: f64,
}

impl Statement {
    fn bytes(&self) -> Vec<u8> {
        let mut out = self.root.clone();
        out.extend_from_slice(&self.value.to_be_bytes());
        out
    }
}

pub fn relation_holds(relation: &Relation, statement: &Statement, witness: &[u32]) -> bool {
    if witness.len() != relation.commitment.n || witness.iter().any(|&l| l > relation.grid.max_level) {
        return false;
    }
    match vc_commit(relation.commitment, witness) {
        Ok((root, _)) if root == statement.root => {}
        _ => return false,
    }
    let values: Vec<f64> = witness.iter().map(|&l| relation.grid.value(l)).collect();
    match compute_optimal_smooth_strategy(relation.sigma, &values) {
        Ok(opt) => (opt.value - statement.value).abs() <= VALUE_TOLERANCE,
        Err(_) => false,
    }
}

/// Proof system for [`Relation`].
pub trait ArgumentBackend {
    fn setup(&mut self, relation: &Relation, seed: u64);

    /// `None` when the backend cannot produce a proof for this statement.
    fn prove(&self, relation: &Relation, statement: &Statement, witness: &[u32]) -> Option<Vec<u8>>;

    fn verify(&self, relation: &Relation, statement: &Statement, proof: &[u8]) -> bool;
}

/// Trusted backend: proving re-checks the relation and, if it holds,
/// returns a 32-byte keyed hash of the statement; verifying recomputes it.
#[derive(Clone, Debug, Default)]
pub struct ReexecutionBackend {
    key: [u8; 32],
}

impl ReexecutionBackend {
    fn token(&self, statement: &Statement) -> Vec<u8> {
        let mut h = Sha256::new();
        h.update(self.key);
        h.update(statement.bytes());
        h.finalize().to_vec()
    }
}

impl ArgumentBackend for ReexecutionBackend {
    fn setup(&mut self, _relation: &Relation, seed: u64) {
        let mut h = Sha256::new();
        h.update(b"setup");
        h.update(seed.to_be_bytes());
        self.key = h.finalize().into();
    }

    fn prove(&self, relation: &Relation, statement: &Statement, witness: &[u32]) -> Option<Vec<u8>> {
        relation_holds(relation, statement, witness).then(|| self.token(statement))
    }

    fn verify(&self, _relation: &Relation, statement: &Statement, proof: &[u8]) -> bool {
        proof == self.token(statement).as_slice()
    }
}

/// Deviations from the honest low-communication prover.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Cheat {
    #[default]
    None,
    /// Answers every opening with the level one step away.
    TamperValue,
    /// Flips a bit in the first path digest of every opening.
    TamperPath,
    /// Sends a root with one bit flipped.
    TamperRoot,
    /// Claims `t + delta`.
    InflateClaim { delta: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LowCommParams {
    pub sigma: f64,
    pub epsilon: f64,
    #[serde(default = "default_lambda")]
    pub lambda: u32,
    #[serde(default)]
    pub prover_pulls: Option<u64>,
}

fn default_lambda() -> u32 {
    128
}

impl LowCommParams {
    pub fn new(sigma: f64, epsilon: f64) -> Self {
        LowCommParams {
            sigma,
            epsilon,
            lambda: 128,
            prover_pulls: None,
        }
    }

    /// The matching single-message parameters (quantized encoding).
    pub fn bandit_params(&self) -> BanditParams {
        BanditParams {
            sigma: self.sigma,
            epsilon: self.epsilon,
            prover_pulls: self.prover_pulls,
            encoding: Encoding::Quantized,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "decision", rename_all = "kebab-case")]
pub enum LowCommVerdict {
    Reject { reason: RejectReason },
    Value { t: f64 },
}

impl LowCommVerdict {
    pub fn is_reject(&self) -> bool {
        matches!(self, LowCommVerdict::Reject { .. })
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            LowCommVerdict::Value { t } => Some(*t),
            LowCommVerdict::Reject { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LowCommOutcome {
    pub verdict: LowCommVerdict,
    pub bytes_prover_to_verifier: u64,
    pub bytes_verifier_to_prover: u64,
    pub transcript: Transcript,
}

const TAG_COMMIT: u8 = 0x11;
const TAG_QUERY: u8 = 0x12;
const TAG_OPENING: u8 = 0x13;

fn frame(body: Vec<u8>) -> Vec<u8> {
    let mut out = (body.len() as u32).to_be_bytes().to_vec();
    out.extend(body);
    out
}

fn unframe(bytes: &[u8]) -> std::result::Result<Reader<'_>, String> {
    let mut r = Reader::new(bytes);
    let len = r.u32()? as usize;
    if len != r.remaining() {
        return Err("length prefix mismatch".into());
    }
    Ok(r)
}

/// Commitment message: tag `0x11`, root, `t` as `f64`, `u16` proof length,
/// proof bytes.
pub fn encode_commit(statement: &Statement, proof: &[u8]) -> Vec<u8> {
    let mut body = vec![TAG_COMMIT];
    body.extend_from_slice(&statement.root);
    body.extend_from_slice(&statement.value.to_be_bytes());
    body.extend_from_slice(&(proof.len() as u16).to_be_bytes());
    body.extend_from_slice(proof);
    frame(body)
}

pub fn decode_commit(
    bytes: &[u8],
    params: &CommitmentParams,
) -> std::result::Result<(Statement, Vec<u8>), String> {
    let mut r = unframe(bytes)?;
    if r.u8()? != TAG_COMMIT {
        return Err("expected a commitment message".into());
    }
    let root = r.take(params.digest_len())?.to_vec();
    let value = r.f64()?;
    let plen = u16::from_be_bytes(r.take(2)?.try_into().unwrap()) as usize;
    let proof = r.take(plen)?.to_vec();
    if r.remaining() != 0 {
        return Err("trailing bytes".into());
    }
    Ok((Statement { root, value }, proof))
}

/// Opening request: tag `0x12`, `u32` index.
pub fn encode_query(index: usize) -> Vec<u8> {
    let mut body = vec![TAG_QUERY];
    body.extend_from_slice(&(index as u32).to_be_bytes());
    frame(body)
}

pub fn decode_query(bytes: &[u8]) -> std::result::Result<usize, String> {
    let mut r = unframe(bytes)?;
    if r.u8()? != TAG_QUERY {
        return Err("expected a query".into());
    }
    let i = r.u32()? as usize;
    if r.remaining() != 0 {
        return Err("trailing bytes".into());
    }
    Ok(i)
}

/// Opening: tag `0x13`, `u32` index, `u32` level, `u8` path length, digests.
pub fn encode_opening(proof: &OpeningProof) -> Vec<u8> {
    let mut body = vec![TAG_OPENING];
    body.extend_from_slice(&(proof.index as u32).to_be_bytes());
    body.extend_from_slice(&proof.level.to_be_bytes());
    body.push(proof.path.len() as u8);
    for d in &proof.path {
        body.extend_from_slice(d);
    }
    frame(body)
}

pub fn decode_opening(
    bytes: &[u8],
    params: &CommitmentParams,
) -> std::result::Result<OpeningProof, String> {
    let mut r = unframe(bytes)?;
    if r.u8()? != TAG_OPENING {
        return Err("expected an opening".into());
    }
    let index = r.u32()? as usize;
    let level = r.u32()?;
    let count = r.u8()? as usize;
    let mut path = Vec::with_capacity(count);
    for _ in 0..count {
        path.push(r.take(params.digest_len())?.to_vec());
    }
    if r.remaining() != 0 {
        return Err("trailing bytes".into());
    }
    Ok(OpeningProof { index, level, path })
}

/// Prover state after committing.
struct CommittedProver {
    tree: MerkleTree,
    cheat: Cheat,
    max_level: u32,
}

impl CommittedProver {
    fn answer(&self, query: &[u8]) -> Vec<u8> {
        let index = match decode_query(query) {
            Ok(i) if i < self.tree.params.n => i,
            _ => return Vec::new(),
        };
        let mut proof = vc_open(&self.tree, index).expect("index checked");
        match self.cheat {
            Cheat::TamperValue => {
                proof.level = if proof.level < self.max_level {
                    proof.level + 1
                } else {
                    proof.level - 1
                };
            }
            Cheat::TamperPath => {
                if let Some(d) = proof.path.first_mut() {
                    d[0] ^= 1;
                }
            }
            _ => {}
        }
        encode_opening(&proof)
    }
}

/// Runs the protocol with explicit oracles and backend.
///
/// Uses the same seed labels as the single-message protocol, so with an
/// honest prover the audit records coincide with that protocol's.
pub fn run_lowcomm_with<P, V, B>(
    prover_oracle: &mut P,
    verifier_oracle: &mut V,
    behavior: &ProverBehavior,
    cheat: &Cheat,
    params: &LowCommParams,
    backend: &mut B,
    seed: u64,
) -> Result<LowCommOutcome>
where
    P: ArmOracle + ?Sized,
    V: ArmOracle + ?Sized,
    B: ArgumentBackend + ?Sized,
{
    let n = verifier_oracle.num_arms();
    let bandit_params = params.bandit_params();
    bandit_params.validate(n)?;
    behavior.validate(n)?;
    let commitment = CommitmentParams::new(params.lambda, n)?;
    let grid = Grid::for_epsilon(params.epsilon);
    let relation = Relation {
        commitment,
        sigma: params.sigma,
        grid,
    };
    backend.setup(&relation, derive_seed(seed, labels::SETUP));
    let plan = AuditPlan::for_seed(n, params.sigma, params.epsilon, seed)?;

    // prover: estimate, commit, prove
    let k = params.prover_pulls.unwrap_or_else(|| default_prover_pulls(n, params.epsilon));
    let before = prover_oracle.pulls();
    let estimates = prover_estimate_utilities(prover_oracle, k)?;
    let prover_pulls = prover_oracle.pulls() - before;
    let mut prover_coins = rng_from_seed(derive_seed(seed, labels::PROVER_COINS));
    let claims = behavior.claims(&estimates, params.sigma, &mut prover_coins);
    let levels: Vec<u32> = claims.iter().map(|&x| grid.level(x)).collect();
    let values: Vec<f64> = levels.iter().map(|&l| grid.value(l)).collect();
    let t = compute_optimal_smooth_strategy(params.sigma, &values)?.value;
    let (root, tree) = vc_commit(commitment, &levels)?;
    let honest = Statement { root, value: t };
    let proof = backend.prove(&relation, &honest, &levels).unwrap_or_default();
    let sent = match cheat {
        Cheat::TamperRoot => {
            let mut root = honest.root.clone();
            root[0] ^= 0x80;
            let s = Statement { root, value: t };
            let p = backend.prove(&relation, &s, &levels).unwrap_or(proof);
            (s, p)
        }
        Cheat::InflateClaim { delta } => {
            let s = Statement {
                root: honest.root.clone(),
                value: t + delta,
            };
            let p = backend.prove(&relation, &s, &levels).unwrap_or(proof);
            (s, p)
        }
        _ => (honest, proof),
    };
    let commit_bytes = encode_commit(&sent.0, &sent.1);
    let prover = CommittedProver {
        tree,
        cheat: cheat.clone(),
        max_level: grid.max_level,
    };

    let mut transcript = Transcript {
        protocol: "lowcomm",
        seed,
        messages: vec![MessageRecord {
            from: Party::Prover,
            kind: "commitment".into(),
            bytes: commit_bytes.len() as u64,
        }],
        prover_pulls,
        prover_arm_pulls: vec![k; n],
        verifier_pulls_planned: plan.schedule.planned_verifier_pulls(),
        verifier_pulls: 0,
        audits: Vec::new(),
    };

    // verifier
    let finish = |transcript: Transcript, verdict: LowCommVerdict| LowCommOutcome {
        bytes_prover_to_verifier: transcript.bytes_from(Party::Prover),
        bytes_verifier_to_prover: transcript.bytes_from(Party::Verifier),
        verdict,
        transcript,
    };
    let reject = |reason| LowCommVerdict::Reject { reason };
    let (statement, proof) = match decode_commit(&commit_bytes, &commitment) {
        Ok(x) => x,
        Err(detail) => {
            return Ok(finish(transcript, reject(RejectReason::MalformedMessage { detail })))
        }
    };
    if !(0.0..=1.0).contains(&statement.value) {
        let detail = format!("claimed value {} outside [0, 1]", statement.value);
        return Ok(finish(transcript, reject(RejectReason::MalformedMessage { detail })));
    }
    if !backend.verify(&relation, &statement, &proof) {
        return Ok(finish(transcript, reject(RejectReason::ArgumentRejected)));
    }

    let verifier_before = verifier_oracle.pulls();
    let mut session = AuditSession::new(plan);
    let mut failure = None;
    while let Some(req) = session.next_request() {
        let sum = verifier_oracle.pull_sum(req.arm, req.pulls)?;
        let query = encode_query(req.arm);
        transcript.messages.push(MessageRecord {
            from: Party::Verifier,
            kind: "query".into(),
            bytes: query.len() as u64,
        });
        let answer = prover.answer(&query);
        transcript.messages.push(MessageRecord {
            from: Party::Prover,
            kind: "opening".into(),
            bytes: answer.len() as u64,
        });
        let opening = match decode_opening(&answer, &commitment) {
            Ok(o) if o.index == req.arm && o.level <= grid.max_level => o,
            _ => {
                failure = Some(RejectReason::InvalidOpening { arm: req.arm });
                break;
            }
        };
        if !vc_verify(&commitment, &statement.root, &opening) {
            failure = Some(RejectReason::InvalidOpening { arm: req.arm });
            break;
        }
        if session.submit(sum, grid.value(opening.level)) {
            let r = session.rejected().unwrap();
            failure = Some(RejectReason::AuditFailed {
                bin: r.bin,
                arm: r.arm,
            });
        }
    }
    transcript.verifier_pulls = verifier_oracle.pulls() - verifier_before;
    transcript.audits = session.into_records();
    let verdict = match failure {
        Some(reason) => reject(reason),
        None => LowCommVerdict::Value { t: statement.value },
    };
    Ok(finish(transcript, verdict))
}

/// Runs the protocol on fresh oracles from `source` with the default backend.
pub fn run_lowcomm_verification<S: OracleSource + ?Sized>(
    source: &S,
    behavior: &ProverBehavior,
    cheat: &Cheat,
    params: &LowCommParams,
    seed: u64,
) -> Result<LowCommOutcome> {
    let mut prover = source.spawn(derive_seed(seed, labels::PROVER_ORACLE));
    let mut verifier = source.spawn(derive_seed(seed, labels::VERIFIER_ORACLE));
    let mut backend = ReexecutionBackend::default();
    run_lowcomm_with(
        &mut prover,
        &mut verifier,
        behavior,
        cheat,
        params,
        &mut backend,
        seed,
    )
}
