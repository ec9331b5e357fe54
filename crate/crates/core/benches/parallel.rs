//! Default rayon pool against a single-thread pool on the data-parallel
//! kernels. Build with `--no-default-features` to measure the sequential
//! fallback instead of the one-thread pool.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ndarray::Array2;
use paqreg::chem::{mean_pairwise_similarity, Fingerprint};
use paqreg::ingest::{make_folds, FeatureMatrix};
use paqreg::models::{fit_rf, ModelConfig, TreeEnsembleConfig};
use paqreg::qsim::{GateKind, Statevector};
use paqreg::rng::seeded;
use paqreg::train::cross_validate_config;
use rand::Rng;
use rayon::ThreadPool;

fn pools() -> Vec<(String, ThreadPool)> {
    let default = rayon::ThreadPoolBuilder::new().build().unwrap();
    let n = default.current_num_threads();
    let mut v = vec![(format!("{n}-threads"), default)];
    if n != 1 {
        v.push(("1-thread".into(), rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap()));
    }
    v
}

fn regression(n: usize, d: usize) -> (Array2<f64>, Vec<f64>) {
    let mut rng = seeded(1);
    let x: Array2<f64> = Array2::from_shape_fn((n, d), |_| rng.gen_range(-1.0..1.0));
    let y = (0..n).map(|i| x[[i, 0]] * 3.0 + (2.0 * x[[i, 1]]).sin() + rng.gen_range(-0.1..0.1)).collect();
    (x, y)
}

fn statevector(c: &mut Criterion) {
    let mut g = c.benchmark_group("statevector_layer_16q");
    for (name, pool) in pools() {
        g.bench_function(BenchmarkId::from_parameter(&name), |b| {
            pool.install(|| {
                let mut s = Statevector::new(16).unwrap();
                b.iter(|| {
                    for q in 0..16 {
                        s.apply(GateKind::Ry, &[q], Some(0.3)).unwrap();
                        s.apply(GateKind::Cnot, &[q, (q + 1) % 16], None).unwrap();
                    }
                    black_box(s.expectations_z());
                })
            })
        });
    }
    g.finish();
}

fn similarity(c: &mut Criterion) {
    let mut rng = seeded(2);
    let fps: Vec<Fingerprint> = (0..600)
        .map(|_| Fingerprint::from_bits(2048, (0..2048).filter(|_| rng.gen_bool(0.1))).unwrap())
        .collect();
    let mut g = c.benchmark_group("pairwise_similarity_600x2048");
    for (name, pool) in pools() {
        g.bench_function(BenchmarkId::from_parameter(&name), |b| {
            pool.install(|| b.iter(|| black_box(mean_pairwise_similarity(&fps).unwrap())))
        });
    }
    g.finish();
}

fn forest(c: &mut Criterion) {
    let (x, y) = regression(600, 32);
    let cfg = TreeEnsembleConfig {
        n_trees: 40,
        ..TreeEnsembleConfig::random_forest()
    };
    let mut g = c.benchmark_group("random_forest_fit_600x32");
    g.sample_size(10);
    for (name, pool) in pools() {
        g.bench_function(BenchmarkId::from_parameter(&name), |b| {
            pool.install(|| b.iter(|| black_box(fit_rf(&cfg, x.view(), &y, 3).unwrap())))
        });
    }
    g.finish();
}

fn cross_validation(c: &mut Criterion) {
    let (x, y) = regression(400, 16);
    let m = FeatureMatrix::new((0..16).map(|j| format!("f{j}")).collect(), x).unwrap();
    let plan = make_folds(400, 5, 2, 0).unwrap();
    let model = ModelConfig::Gbdt(TreeEnsembleConfig {
        n_trees: 50,
        ..TreeEnsembleConfig::gbdt()
    });
    let mut g = c.benchmark_group("gbdt_cv_5x2_400x16");
    g.sample_size(10);
    for (name, pool) in pools() {
        g.bench_function(BenchmarkId::from_parameter(&name), |b| {
            pool.install(|| b.iter(|| black_box(cross_validate_config(&model, &m, &y, &plan, 0).unwrap())))
        });
    }
    g.finish();
}

criterion_group!(benches, statevector, similarity, forest, cross_validation);
criterion_main!(benches);
