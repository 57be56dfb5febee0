use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use cvlab::asymptotics::{llt_sup_error, triple_gaussian_lattice_sum, LatticeMode};
use cvlab::exact::{fold_covariance_log, fold_covariance_rational};
use cvlab::oracle::{bitstring_cv_oracle, count_cv_oracle};
use cvlab::sim::{run_cv_mse, AlgorithmSpec, DataSpec, TiePolicy};
use cvlab::FoldScheme;

fn exact(c: &mut Criterion) {
    c.bench_function("rational cov n=1200 m=400", |b| {
        b.iter(|| fold_covariance_rational(black_box(1200), black_box(400)))
    });
    c.bench_function("log cov n=1e6 m=1000", |b| {
        b.iter(|| fold_covariance_log(black_box(1_000_000), black_box(1000)))
    });
}

fn oracles(c: &mut Criterion) {
    let majority = AlgorithmSpec::majority(TiePolicy::ToZero);
    let small = FoldScheme::new(16, 4).unwrap();
    c.bench_function("bitstring oracle n=16 k=4", |b| {
        b.iter(|| bitstring_cv_oracle(black_box(&small), &majority))
    });
    let mid = FoldScheme::new(240, 3).unwrap();
    c.bench_function("count oracle n=240 k=3", |b| {
        b.iter(|| count_cv_oracle(black_box(&mid)))
    });
}

fn asymptotics(c: &mut Criterion) {
    c.bench_function("llt sup error r=2000", |b| b.iter(|| llt_sup_error(black_box(2000))));
    c.bench_function("lattice direct n=1e5 m=1000", |b| {
        b.iter(|| triple_gaussian_lattice_sum(black_box(100_000), black_box(1000), LatticeMode::Direct))
    });
}

fn simulation(c: &mut Criterion) {
    let data = DataSpec::point_mass(0.5, 120).unwrap();
    let majority = AlgorithmSpec::majority(TiePolicy::ToZero);
    c.bench_function("simulate n=120 k=10 10k trials", |b| {
        b.iter(|| run_cv_mse(&data, &majority, 10, 10_000, black_box(1)))
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = exact, oracles, asymptotics, simulation
}
criterion_main!(benches);
