use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::Rng;

use satqkd_core::extraction::{cascade_reconcile, KeyExtraction, DEFAULT_XI};
use satqkd_core::fidelity::{evaluate, ChannelBudget};
use satqkd_core::optics::{capture_probability_map, jitter_averaged_capture, propagate, BeamChannel, GridSpec};
use satqkd_core::seed::SeedTree;
use satqkd_core::source::{optimize_lambda, RateModel, SourceParams};

fn channel() -> BeamChannel {
    BeamChannel::new(0.13, 0.15, 0.6, 1.0e6, 810e-9, 0.47e-6).unwrap()
}

fn optics(c: &mut Criterion) {
    let ch = channel();
    let mut g = c.benchmark_group("optics");
    g.sample_size(10);
    for size in [512, 2048] {
        let grid = GridSpec { size, oversampling: 8.0, source_samples: 256 };
        g.bench_function(format!("propagate_{size}"), |b| b.iter(|| propagate(black_box(&ch), &grid).unwrap()));
        let field = propagate(&ch, &grid).unwrap();
        g.bench_function(format!("capture_map_{size}"), |b| {
            b.iter(|| capture_probability_map(black_box(&field), ch.b).unwrap())
        });
        let map = capture_probability_map(&field, ch.b).unwrap();
        g.bench_function(format!("jitter_average_{size}"), |b| {
            b.iter(|| jitter_averaged_capture(black_box(&map), &ch).unwrap())
        });
    }
    g.finish();
}

fn cascade(c: &mut Criterion) {
    let mut g = c.benchmark_group("cascade");
    g.sample_size(20);
    for n in [10_000usize, 100_000] {
        let mut rng = SeedTree::new(1).rng("bench");
        let a: Vec<u8> = (0..n).map(|_| rng.random_range(0..2u8)).collect();
        let b: Vec<u8> = a.iter().map(|&x| x ^ (rng.random::<f64>() < 0.03) as u8).collect();
        g.bench_function(format!("reconcile_{n}_q3"), |bn| {
            bn.iter(|| cascade_reconcile(black_box(&a), black_box(&b), 0.03, 9).unwrap())
        });
    }
    g.finish();
}

fn link_budget(c: &mut Criterion) {
    let budget = ChannelBudget::new(0.05, 0.02, 1e-7).unwrap();
    let src = SourceParams::new(0.001, 5.9e6, 1e-7).unwrap();
    c.bench_function("fidelity_evaluate", |b| b.iter(|| evaluate(black_box(&src), black_box(&budget)).unwrap()));
    let ex = KeyExtraction::Analytic { xi: DEFAULT_XI };
    let rate = RateModel::ConstantPairRate { pair_rate: 5.9e6 };
    c.bench_function("optimize_lambda", |b| {
        b.iter(|| optimize_lambda(black_box(&budget), &ex, &rate, (1e-4, 0.5)).unwrap())
    });
}

criterion_group!(benches, optics, cascade, link_budget);
criterion_main!(benches);
