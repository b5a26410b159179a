use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use mvtrack_core::tpn::{fit_hidden, FitConfig, HiddenParams, TpnConfig, TpnModel};
use mvtrack_core::Point2;

fn wave(n: usize, phase: f64) -> Vec<Point2> {
    (0..n)
        .map(|t| {
            let a = t as f64 * 0.15 + phase;
            Point2::new(3.0 * a.cos(), 2.0 * a.sin())
        })
        .collect()
}

fn bench(c: &mut Criterion) {
    let cfg = TpnConfig::default();
    let model = TpnModel::new(cfg, 3.0, 7).unwrap();
    let h = HiddenParams::zeros(&cfg);
    let r_a = wave(40, 0.0);
    let r_b = wave(40, 0.7);
    c.bench_function("tpn forward 40 steps", |b| b.iter(|| model.forward(&h, black_box(&r_a))));
    let fit = FitConfig {
        max_iters: 30,
        ..FitConfig::default()
    };
    c.bench_function("tpn fit_hidden 40 frames 30 iters", |b| {
        b.iter(|| fit_hidden(&model, black_box(&r_a), &r_b, &fit).unwrap())
    });
}

criterion_group!(benches, bench);
criterion_main!(benches);
