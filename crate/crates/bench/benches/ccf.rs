use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use mvtrack_core::ccf::{correlate, gaussian_label, solve_ccf, FeatureMap, FilterBank, Sample, SampleSet};
use mvtrack_core::fft::Fft2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const D: usize = 6;
const N: usize = 32;

fn random_map(rng: &mut ChaCha8Rng) -> FeatureMap {
    let data = (0..D * N * N).map(|_| rng.random_range(-1.0..1.0)).collect();
    FeatureMap::from_data(D, N, N, data).unwrap()
}

fn sample_set(fft: &Fft2, rng: &mut ChaCha8Rng, per_view: usize) -> SampleSet {
    let label = gaussian_label(N, N, 1.5).unwrap();
    let mut set = SampleSet::new(3, per_view);
    for c in 0..3 {
        for j in 0..per_view {
            set.insert(Sample::new(fft, random_map(rng), &label, 0.98f64.powi(j as i32), c, j).unwrap());
        }
    }
    set
}

fn bench(c: &mut Criterion) {
    let fft = Fft2::new(N, N);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for per_view in [1, 20] {
        let set = sample_set(&fft, &mut rng, per_view);
        c.bench_function(&format!("solve_ccf 32x32 D6 {} samples", 3 * per_view), |b| {
            b.iter(|| solve_ccf(&fft, black_box(&set), 1e-2).unwrap())
        });
    }
    let taps: Vec<f64> = (0..D * N * N).map(|_| rng.random_range(-1.0..1.0)).collect();
    let filter = FilterBank::from_spatial(&fft, D, &taps, 0.0).unwrap();
    let x = random_map(&mut rng);
    c.bench_function("correlate 32x32 D6", |b| {
        b.iter(|| correlate(&fft, &filter, black_box(&x)).unwrap())
    });
}

criterion_group!(benches, bench);
criterion_main!(benches);
