use criterion::{criterion_group, criterion_main, Criterion};
use image::GrayImage;
use mvtrack_core::simulator::{generate_scene, Renderer, SceneConfig};
use mvtrack_core::tracker::{Tracker, TrackerConfig};

fn bench(c: &mut Criterion) {
    let scene = generate_scene(
        &SceneConfig {
            n_frames: 2,
            ..SceneConfig::default()
        },
        3,
    )
    .unwrap();
    let ann = scene.annotate().unwrap();
    let r = Renderer::new(&scene);
    let frames = |t| -> Vec<GrayImage> { (0..scene.n_views()).map(|v| r.render(t, v)).collect() };
    let (f0, f1) = (frames(0), frames(1));
    let cfg = TrackerConfig {
        use_tpn: false,
        ..TrackerConfig::default()
    };
    let mut tracker = Tracker::init(&f0, &ann.boxes_at(0), cfg, None).unwrap();
    // repeated steps on one frame, so every seventh call includes a filter update
    c.bench_function("tracker step 3 views", |b| b.iter(|| tracker.step(&f1).unwrap()));
    c.bench_function("render frame", |b| b.iter(|| r.render(1, 0)));
}

criterion_group!(benches, bench);
criterion_main!(benches);
