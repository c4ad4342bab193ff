use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qstat_core::qalgebra::{q_exp, q_prod};
use qstat_core::special::c_q;
use qstat_core::{QGaussian, QGaussianParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn algebra(c: &mut Criterion) {
    c.bench_function("q_exp", |b| b.iter(|| q_exp(black_box(1.3), black_box(0.7))));
    c.bench_function("q_prod", |b| b.iter(|| q_prod(black_box(1.3), black_box(1.2), black_box(0.9))));
    c.bench_function("c_q", |b| b.iter(|| c_q(black_box(1.7))));
}

fn distribution(c: &mut Criterion) {
    let mut g = c.benchmark_group("qgaussian");
    for q in [0.5, 1.0, 1.5, 2.5] {
        let d = QGaussian::new(QGaussianParams::standard(q).unwrap()).unwrap();
        g.bench_with_input(BenchmarkId::new("pdf", q), &d, |b, d| b.iter(|| d.pdf(black_box(0.8))));
        g.bench_with_input(BenchmarkId::new("cdf", q), &d, |b, d| b.iter(|| d.cdf(black_box(0.8))));
        g.bench_with_input(BenchmarkId::new("quantile", q), &d, |b, d| b.iter(|| d.quantile(black_box(0.93))));
        g.bench_with_input(BenchmarkId::new("sample_1000", q), &d, |b, d| {
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            b.iter(|| d.sample(&mut rng, 1000))
        });
    }
    g.bench_function("construct_q1.5", |b| {
        b.iter(|| QGaussian::new(QGaussianParams::standard(black_box(1.5)).unwrap()))
    });
    g.finish();
}

criterion_group!(benches, algebra, distribution);
criterion_main!(benches);
