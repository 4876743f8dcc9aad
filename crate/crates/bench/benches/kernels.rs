use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use narrowlab_core::aplab::{count_aps_with_difference, lambda_d, prime_indicator_weight};
use narrowlab_core::cutoff::{make_cutoff, CutoffKind};
use narrowlab_core::linforms::{first_family, lindex};
use narrowlab_core::majorant::{build_majorant, max_r};
use narrowlab_core::numtheory::primorial_context;
use narrowlab_core::singular::singular_series;
use narrowlab_core::{FactorSieve, ShiftVector};

fn sieve(c: &mut Criterion) {
    c.bench_function("factor_sieve_1e6", |b| b.iter(|| FactorSieve::new(black_box(1_000_000)).unwrap()));
}

fn collision_index(c: &mut Criterion) {
    let sys = first_family(3).unwrap();
    c.bench_function("lindex_first_family_3", |b| b.iter(|| lindex(black_box(&sys)).unwrap()));
}

fn majorant(c: &mut Criterion) {
    let ctx = primorial_context(3, 1, 100_003).unwrap();
    let chi = make_cutoff(CutoffKind::Cosine).unwrap();
    let small = FactorSieve::new(1_000).unwrap();
    c.bench_function("majorant_1e5", |b| {
        b.iter(|| build_majorant(&ctx, max_r(&ctx), &chi, &small).unwrap())
    });
}

fn progressions(c: &mut Criterion) {
    let s = FactorSieve::new(1_000_100).unwrap();
    c.bench_function("count_3aps_d6_1e6", |b| {
        b.iter(|| count_aps_with_difference(black_box(1_000_000), 3, 6, &s).unwrap())
    });
    let f = prime_indicator_weight(10_007, &s).unwrap();
    c.bench_function("lambda_d_1e4", |b| b.iter(|| lambda_d(&[&f, &f, &f], black_box(500)).unwrap()));
}

fn series(c: &mut Criterion) {
    let h = ShiftVector::new(vec![0, 2, 6]).unwrap();
    c.bench_function("singular_series_pmax_1e5", |b| {
        b.iter(|| singular_series(black_box(&h), 100_000, 1).unwrap())
    });
}

criterion_group!(benches, sieve, collision_index, majorant, progressions, series);
criterion_main!(benches);
