use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::Rng;

use coopkey::quantizer::{p_qia, p_qia_all_sectors};
use coopkey::reconciliation::{privacy_amplify, Code};
use coopkey::{BitVector, EstimatorConfig, SeedTree, Session, ToneEstimator};
use coopkey_bench::{noisy_tone, session};

fn estimator(c: &mut Criterion) {
    let mut group = c.benchmark_group("estimate");
    for n in [256, 2025, 20250] {
        let obs = noisy_tone(n, 25.0, 1);
        let mut est = ToneEstimator::new(EstimatorConfig::default());
        group.bench_with_input(BenchmarkId::from_parameter(n), &obs, |b, obs| {
            b.iter(|| est.estimate(black_box(obs)).unwrap())
        });
    }
    group.finish();
}

fn bch(c: &mut Criterion) {
    let code = Code::default();
    let mut rng = SeedTree::new(2).rng();
    let words: Vec<BitVector> = (0..64)
        .map(|_| {
            let mut w = code.random_codeword(&mut rng);
            for _ in 0..3 {
                w.flip(rng.random_range(0..31));
            }
            w
        })
        .collect();
    c.bench_function("bch_31_16_3_decode", |b| {
        let mut i = 0;
        b.iter(|| {
            i = (i + 1) % words.len();
            code.decode(black_box(&words[i]))
        })
    });
    let key: BitVector = (0..1024).map(|_| rng.random::<bool>()).collect();
    c.bench_function("toeplitz_1024_to_256", |b| {
        b.iter(|| privacy_amplify(black_box(&key), 7, 256))
    });
}

fn agreement(c: &mut Criterion) {
    c.bench_function("p_qia_q64", |b| b.iter(|| p_qia(black_box(1e-3), 64)));
    c.bench_function("p_qia_all_sectors_q64", |b| {
        b.iter(|| p_qia_all_sectors(black_box(1e-3), 64))
    });
}

fn protocol_round(c: &mut Criterion) {
    let mut group = c.benchmark_group("round");
    group.sample_size(20);
    for relays in [1, 4] {
        let mut s = Session::new(session(relays, 16, 2025)).unwrap();
        let tree = SeedTree::new(3);
        group.bench_with_input(BenchmarkId::new("relays", relays), &relays, |b, _| {
            b.iter(|| s.run_round(1, &tree).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, estimator, bch, agreement, protocol_round);
criterion_main!(benches);
