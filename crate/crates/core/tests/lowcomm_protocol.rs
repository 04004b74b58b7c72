use banditproof_core::bandit::{
    run_bandit_verification, BanditParams, Grid, ProverMessage, RejectReason,
};
use banditproof_core::lowcomm::{
    vc_commit, vc_open, vc_verify, CommitmentParams, LowCommVerdict,
};
use banditproof_core::rng::rng_from_seed;
use banditproof_core::smooth::compute_optimal_smooth_strategy;
use banditproof_core::{run_lowcomm_verification, Bandit, Cheat, LowCommParams, ProverBehavior};
use rand::Rng;

fn random_levels(rng: &mut impl Rng, n: usize, max: u32) -> Vec<u32> {
    (0..n).map(|_| rng.random_range(0..=max)).collect()
}

fn random_bandit(n: usize, seed: u64) -> Bandit {
    let mut rng = rng_from_seed(seed);
    Bandit::bernoulli(&(0..n).map(|_| rng.random::<f64>()).collect::<Vec<_>>()).unwrap()
}

#[test]
fn one_index_changes_move_the_root() {
    let p = CommitmentParams::new(128, 16).unwrap();
    let mut rng = rng_from_seed(5);
    let mut roots = std::collections::HashSet::new();
    for _ in 0..1000 {
        let v = random_levels(&mut rng, 16, 256);
        let mut w = v.clone();
        let i = rng.random_range(0..16);
        w[i] = (w[i] + rng.random_range(1..=256)) % 257;
        let (a, _) = vc_commit(p, &v).unwrap();
        let (b, _) = vc_commit(p, &w).unwrap();
        assert_ne!(a, b);
        roots.insert(a);
    }
    assert!(roots.len() >= 999);
}

#[test]
fn every_index_opens_for_any_width() {
    let mut rng = rng_from_seed(6);
    for n in 1..=40 {
        let p = CommitmentParams::new(128, n).unwrap();
        let v = random_levels(&mut rng, n, 1000);
        let (root, tree) = vc_commit(p, &v).unwrap();
        for i in 0..n {
            let proof = vc_open(&tree, i).unwrap();
            assert_eq!(proof.path.len(), p.depth());
            assert_eq!(proof.level, v[i]);
            assert!(vc_verify(&p, &root, &proof));
            let mut moved = proof.clone();
            moved.index = (i + 1) % n;
            assert!(n == 1 || !vc_verify(&p, &root, &moved));
        }
    }
}

#[test]
fn deterministic_bandit_reports_exact_value() {
    let means: Vec<f64> = (0..24).map(|i| if i % 5 == 0 { 1.0 } else { 0.0 }).collect();
    let b = Bandit::bernoulli(&means).unwrap();
    let params = LowCommParams::new(0.25, 0.25);
    let truth = compute_optimal_smooth_strategy(0.25, &means).unwrap().value;
    for seed in 0..5 {
        let out =
            run_lowcomm_verification(&b, &ProverBehavior::Honest, &Cheat::None, &params, seed)
                .unwrap();
        assert_eq!(out.verdict.value(), Some(truth));
    }
}

#[test]
fn honest_value_is_close_on_random_bandits() {
    let params = LowCommParams::new(0.1, 0.25);
    let mut close = 0;
    for seed in 0..30 {
        let b = random_bandit(40, seed);
        let truth =
            compute_optimal_smooth_strategy(0.1, b.expected_utilities().as_ref()).unwrap().value;
        let out =
            run_lowcomm_verification(&b, &ProverBehavior::Honest, &Cheat::None, &params, seed)
                .unwrap();
        if let LowCommVerdict::Value { t } = out.verdict {
            assert!((0.0..=1.0).contains(&t));
            if (t - truth).abs() <= 0.25 {
                close += 1;
            }
        }
    }
    assert!(close >= 20, "{close} of 30");
}

#[test]
fn audits_match_the_single_message_protocol() {
    let behaviors = [
        ProverBehavior::Honest,
        ProverBehavior::ShiftAll { delta: 0.2 },
        ProverBehavior::InflateBlock { arms: None, delta: 0.5 },
    ];
    for seed in 0..20 {
        let b = random_bandit(30, 100 + seed);
        for behavior in &behaviors {
            let lc = LowCommParams::new(0.1, 0.25);
            let p1 = BanditParams::new(0.1, 0.25);
            let a = run_lowcomm_verification(&b, behavior, &Cheat::None, &lc, seed).unwrap();
            let c = run_bandit_verification(&b, behavior, &p1, seed).unwrap();
            assert_eq!(a.transcript.audits, c.transcript.audits, "seed {seed}");
            assert_eq!(a.verdict.is_reject(), c.verdict.is_reject());
            assert_eq!(a.transcript.verifier_pulls, c.transcript.verifier_pulls);
            assert_eq!(a.transcript.prover_pulls, c.transcript.prover_pulls);
            if let (LowCommVerdict::Value { t }, Some(pi)) = (&a.verdict, c.verdict.strategy()) {
                let claimed = pi.value(&c.claimed_utilities).unwrap();
                assert!((t - claimed).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn tampering_is_always_rejected() {
    let b = random_bandit(16, 1);
    let params = LowCommParams::new(0.25, 0.25);
    let cheats = [
        Cheat::TamperValue,
        Cheat::TamperPath,
        Cheat::TamperRoot,
        Cheat::InflateClaim { delta: 0.5 },
    ];
    for cheat in &cheats {
        for seed in 0..100 {
            let out = run_lowcomm_verification(&b, &ProverBehavior::Honest, cheat, &params, seed)
                .unwrap();
            let LowCommVerdict::Reject { reason } = &out.verdict else {
                panic!("{cheat:?} accepted at seed {seed}");
            };
            match cheat {
                Cheat::TamperValue | Cheat::TamperPath => {
                    assert!(matches!(reason, RejectReason::InvalidOpening { .. }))
                }
                // a claim pushed past 1 fails the range check first
                _ => assert!(matches!(
                    reason,
                    RejectReason::ArgumentRejected | RejectReason::MalformedMessage { .. }
                )),
            }
        }
    }
}

#[test]
fn inflating_by_two_epsilon_is_rejected_before_any_audit() {
    let b = random_bandit(20, 2);
    let params = LowCommParams::new(0.25, 0.2);
    for seed in 0..20 {
        let out = run_lowcomm_verification(
            &b,
            &ProverBehavior::Honest,
            &Cheat::InflateClaim { delta: 0.4 },
            &params,
            seed,
        )
        .unwrap();
        assert!(out.verdict.is_reject());
        assert_eq!(out.transcript.verifier_pulls, 0);
        assert_eq!(out.bytes_verifier_to_prover, 0);
    }
}

#[test]
fn byte_counts_equal_message_sums() {
    let b = random_bandit(50, 3);
    let params = LowCommParams::new(0.1, 0.25);
    let out =
        run_lowcomm_verification(&b, &ProverBehavior::Honest, &Cheat::None, &params, 4).unwrap();
    let t = &out.transcript;
    let from_prover: u64 = t.messages.iter().filter(|m| m.kind != "query").map(|m| m.bytes).sum();
    let from_verifier: u64 = t.messages.iter().filter(|m| m.kind == "query").map(|m| m.bytes).sum();
    assert_eq!(out.bytes_prover_to_verifier, from_prover);
    assert_eq!(out.bytes_verifier_to_prover, from_verifier);
    let queries = t.messages.iter().filter(|m| m.kind == "query").count();
    assert_eq!(queries, t.audits.len());
    // commitment: prefix, tag, 16-byte root, f64, u16 length, 32-byte token
    assert_eq!(t.messages[0].bytes, 4 + 1 + 16 + 8 + 2 + 32);
    // opening: prefix, tag, index, level, path length, 6 digests of 16 bytes
    let opening = 4 + 1 + 4 + 4 + 1 + 6 * 16;
    assert!(t.messages.iter().filter(|m| m.kind == "opening").all(|m| m.bytes == opening));
}

/// With `n sigma` fixed and `n` large, the audited openings cost less
/// than sending every estimate.
#[test]
fn commitments_are_cheaper_for_large_sparse_instances() {
    let n = 1_000_000;
    let b = random_bandit(n, 7);
    let params = LowCommParams::new(1e-5, 0.25);
    let out =
        run_lowcomm_verification(&b, &ProverBehavior::Honest, &Cheat::None, &params, 8).unwrap();
    assert!(!out.verdict.is_reject());
    let full = ProverMessage::quantized(&vec![0.5; n], Grid::for_epsilon(0.25)).encode();
    assert!(
        out.bytes_prover_to_verifier < full.len() as u64,
        "{} vs {}",
        out.bytes_prover_to_verifier,
        full.len()
    );
}

/// Twenty weights of 0.05 on claims of 1 must not round past 1.
#[test]
fn all_one_claims_are_not_malformed() {
    let b = Bandit::bernoulli(&[1.0; 100]).unwrap();
    let params = LowCommParams::new(0.05, 0.25);
    for seed in 0..5 {
        let out =
            run_lowcomm_verification(&b, &ProverBehavior::Honest, &Cheat::None, &params, seed).unwrap();
        assert_eq!(out.verdict, LowCommVerdict::Value { t: 1.0 });
    }
}
