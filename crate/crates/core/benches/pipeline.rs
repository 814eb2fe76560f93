//! Data-parallel paths against a one-thread pool running the same code.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rayon::ThreadPool;

use wsmf::analysis::analyze_signals;
use wsmf::config::AnalysisConfig;
use wsmf::multiscale::{theta_omega_leaders, GrowthPair};
use wsmf::synth::{gen_mrw, Model, SynthesisConfig};
use wsmf::wavelet::{decompose_full, Signal, WaveletSpec};

fn mrw(n: usize, seed: u64) -> Signal {
    let model = Model::Mrw {
        hurst: 0.6,
        lambda: 0.3,
    };
    gen_mrw(&SynthesisConfig::new(model, n, seed)).unwrap()
}

fn pools() -> [(&'static str, ThreadPool); 2] {
    let build = |threads| rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    [("sequential", build(1)), ("parallel", build(0))]
}

fn theta_omega(c: &mut Criterion) {
    let mut group = c.benchmark_group("theta_omega_leaders");
    for log_n in [14, 16] {
        let pyramid = decompose_full(&mrw(1 << log_n, 0), &WaveletSpec::default()).unwrap();
        let growth = GrowthPair::default();
        for (name, pool) in pools() {
            group.bench_with_input(BenchmarkId::new(name, 1 << log_n), &pyramid, |b, p| {
                b.iter(|| pool.install(|| theta_omega_leaders(black_box(p), &growth).unwrap()))
            });
        }
    }
    group.finish();
}

fn full_analysis(c: &mut Criterion) {
    let mut group = c.benchmark_group("analyze");
    group.sample_size(10);
    let signals: Vec<Signal> = (0..4).map(|seed| mrw(1 << 15, seed)).collect();
    let config = AnalysisConfig::default();
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::new(name, "4x32768"), |b| {
            b.iter(|| pool.install(|| analyze_signals(black_box(&signals), &config).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, theta_omega, full_analysis);
criterion_main!(benches);
