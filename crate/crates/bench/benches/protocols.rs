use banditproof_core::bandit::bin_schedule;
use banditproof_core::lowcomm::{vc_commit, vc_open, vc_verify, CommitmentParams};
use banditproof_core::rng::rng_from_seed;
use banditproof_core::{
    compute_optimal_smooth_strategy, run_bandit_verification, run_lowcomm_verification, Bandit,
    BanditParams, Cheat, LowCommParams, ProverBehavior,
};
use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::Rng;

fn random_means(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    (0..n).map(|_| rng.random::<f64>()).collect()
}

fn greedy(c: &mut Criterion) {
    let mut group = c.benchmark_group("greedy");
    for n in [100, 2_000, 100_000] {
        let u = random_means(n, 1);
        group.bench_with_input(BenchmarkId::from_parameter(n), &u, |b, u| {
            b.iter(|| compute_optimal_smooth_strategy(10.0 / n as f64, black_box(u)).unwrap())
        });
    }
    group.finish();
}

fn schedule(c: &mut Criterion) {
    c.bench_function("bin_schedule", |b| {
        b.iter(|| bin_schedule(black_box(2_000), 0.01, 0.25).unwrap())
    });
}

fn protocols(c: &mut Criterion) {
    let mut group = c.benchmark_group("protocol");
    group.sample_size(20);
    let bandit = Bandit::bernoulli(&random_means(200, 2)).unwrap();
    let params = BanditParams::new(0.05, 0.25);
    let mut seed = 0u64;
    group.bench_function("bandit_n200", |b| {
        b.iter(|| {
            seed += 1;
            run_bandit_verification(&bandit, &ProverBehavior::Honest, &params, seed).unwrap()
        })
    });
    let lc = LowCommParams::new(0.05, 0.25);
    group.bench_function("lowcomm_n200", |b| {
        b.iter(|| {
            seed += 1;
            run_lowcomm_verification(&bandit, &ProverBehavior::Honest, &Cheat::None, &lc, seed)
                .unwrap()
        })
    });
    group.finish();
}

fn merkle(c: &mut Criterion) {
    let mut group = c.benchmark_group("merkle");
    for n in [2_000, 1 << 16] {
        let mut rng = rng_from_seed(3);
        let levels: Vec<u32> = (0..n).map(|_| rng.random_range(0..256)).collect();
        let params = CommitmentParams::new(128, n).unwrap();
        group.bench_with_input(BenchmarkId::new("commit", n), &levels, |b, l| {
            b.iter(|| vc_commit(params, black_box(l)).unwrap())
        });
        let (root, tree) = vc_commit(params, &levels).unwrap();
        let proof = vc_open(&tree, n / 2).unwrap();
        group.bench_with_input(BenchmarkId::new("verify", n), &proof, |b, p| {
            b.iter(|| vc_verify(&params, &root, black_box(p)))
        });
    }
    group.finish();
}

criterion_group!(benches, greedy, schedule, protocols, merkle);
criterion_main!(benches);
