use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use vpn0_core::attest::{honest_instance, prove, verify, Instance};
use vpn0_core::crypto::{group_setup, SecurityLabel};

fn prove_and_verify(c: &mut Criterion) {
    let mut group = c.benchmark_group("attestation");
    group.sample_size(20);
    for label in [SecurityLabel::Toy, SecurityLabel::Std256] {
        let params = group_setup(label);
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let Instance { statement, witness, bundle, .. } = honest_instance(&params, &mut rng);
        group.bench_with_input(BenchmarkId::new("prove", label), &label, |b, _| {
            b.iter(|| prove(black_box(&statement), black_box(&witness), &mut rng).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("verify", label), &label, |b, _| {
            b.iter(|| verify(black_box(&bundle.statement), black_box(&bundle.proof)))
        });
    }
    group.finish();
}

criterion_group!(benches, prove_and_verify);
criterion_main!(benches);
