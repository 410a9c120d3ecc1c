use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smbo_core::space::FeatureKind;
use smbo_core::testfns::ackley;
use smbo_core::{ForestConfig, ForestFit, GpConfig, GpFit};

fn data(n: usize, d: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect();
    let ys = xs
        .iter()
        .map(|x| ackley(&x.iter().map(|v| 10.0 * v - 5.0).collect::<Vec<_>>()))
        .collect();
    (xs, ys)
}

fn kriging(c: &mut Criterion) {
    let mut group = c.benchmark_group("kriging");
    group.sample_size(10);
    for n in [25, 50, 75] {
        let (xs, ys) = data(n, 5, 1);
        group.bench_with_input(BenchmarkId::new("fit", n), &n, |b, _| {
            let mut rng = ChaCha8Rng::seed_from_u64(2);
            b.iter(|| GpFit::fit(black_box(&xs), black_box(&ys), &GpConfig::default(), &mut rng).unwrap());
        });
        let fit = GpFit::fit(&xs, &ys, &GpConfig::default(), &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let (probe, _) = data(1000, 5, 3);
        group.bench_with_input(BenchmarkId::new("predict_1000", n), &n, |b, _| {
            b.iter(|| probe.iter().map(|x| fit.predict(black_box(x)).unwrap().0).sum::<f64>());
        });
    }
    group.finish();
}

fn forest(c: &mut Criterion) {
    let mut group = c.benchmark_group("forest");
    group.sample_size(10);
    let kinds = vec![FeatureKind::Numeric; 5];
    for n in [25, 75, 200] {
        let (xs, ys) = data(n, 5, 4);
        let config = ForestConfig::default();
        group.bench_with_input(BenchmarkId::new("fit", n), &n, |b, _| {
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            b.iter(|| ForestFit::fit(black_box(&xs), black_box(&ys), &kinds, &config, &mut rng).unwrap());
        });
        let fit = ForestFit::fit(&xs, &ys, &kinds, &config, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let (probe, _) = data(100, 5, 6);
        group.bench_with_input(BenchmarkId::new("predict_100", n), &n, |b, _| {
            b.iter(|| probe.iter().map(|x| fit.predict(black_box(x)).unwrap().se).sum::<f64>());
        });
    }
    group.finish();
}

criterion_group!(benches, kriging, forest);
criterion_main!(benches);
