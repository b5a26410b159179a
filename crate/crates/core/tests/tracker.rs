use image::GrayImage;
use mvtrack_core::ccf::correlate;
use mvtrack_core::simulator::{generate_scene, MotionStyle, OcclusionEvent, Renderer, SceneConfig, SceneSpec};
use mvtrack_core::tpn::{TpnConfig, TpnModel};
use mvtrack_core::tracker::{CenterSource, Tracker, TrackerConfig, ViewResult};
use mvtrack_core::{MultiviewAnnotation, Visibility};
use proptest::prelude::*;

fn frames(r: &Renderer, scene: &SceneSpec, t: usize) -> Vec<GrayImage> {
    (0..scene.n_views()).map(|c| r.render(t, c)).collect()
}

fn still_camera(n_frames: usize) -> SceneConfig {
    SceneConfig {
        n_frames,
        handheld: false,
        motion: MotionStyle::Static,
        ..SceneConfig::default()
    }
}

fn no_tpn() -> TrackerConfig {
    TrackerConfig {
        use_tpn: false,
        ..TrackerConfig::default()
    }
}

fn start(scene: &SceneSpec, cfg: TrackerConfig, tpn: Option<TpnModel>) -> (Tracker, MultiviewAnnotation) {
    let ann = scene.annotate().unwrap();
    let r = Renderer::new(scene);
    let tracker = Tracker::init(&frames(&r, scene, 0), &ann.boxes_at(0), cfg, tpn).unwrap();
    (tracker, ann)
}

#[test]
fn init_fits_every_view() {
    let scene = generate_scene(&still_camera(2), 1).unwrap();
    let (tracker, _) = start(&scene, no_tpn(), None);
    assert_eq!(tracker.samples().sizes(), vec![1, 1, 1]);
    assert_eq!(tracker.confidences(), vec![1.0; 3]);
    let (rows, cols) = tracker.grid();
    for s in tracker.samples().iter() {
        let resp = correlate(tracker.fft(), tracker.filter(), &s.features).unwrap();
        let (peak, y, x) = resp.peak();
        // label peak sits at the origin of the wrapped grid
        assert_eq!((y, x), (0, 0), "grid {rows}x{cols}");
        assert!(peak > 0.5);
    }
}

#[test]
fn tpn_mode_requires_a_model() {
    let scene = generate_scene(&still_camera(2), 1).unwrap();
    let ann = scene.annotate().unwrap();
    let r = Renderer::new(&scene);
    assert!(Tracker::init(&frames(&r, &scene, 0), &ann.boxes_at(0), TrackerConfig::default(), None).is_err());
}

#[test]
fn static_target_does_not_drift() {
    let scene = generate_scene(&still_camera(51), 2).unwrap();
    let (mut tracker, ann) = start(&scene, no_tpn(), None);
    let r = Renderer::new(&scene);
    for t in 1..=50 {
        tracker.step(&frames(&r, &scene, t)).unwrap();
    }
    for (c, b) in tracker.boxes().iter().enumerate() {
        let drift = b.center().distance(&ann.label(0, c).bbox.center());
        assert!(drift < 1.0, "view {c} drifted {drift} px");
    }
}

#[test]
fn filter_updates_every_seventh_frame() {
    let scene = generate_scene(&SceneConfig { n_frames: 30, ..SceneConfig::default() }, 3).unwrap();
    let (mut tracker, _) = start(&scene, no_tpn(), None);
    let r = Renderer::new(&scene);
    let mut fired = Vec::new();
    for t in 1..30 {
        let before = tracker.update_count();
        tracker.step(&frames(&r, &scene, t)).unwrap();
        if tracker.update_count() > before {
            fired.push(t);
        }
    }
    assert_eq!(fired, vec![7, 14, 21, 28]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]
    #[test]
    fn samples_come_from_confident_update_frames(seed in 0u64..1000) {
        let cfg = SceneConfig { n_frames: 36, occluders: 1, ..SceneConfig::default() };
        let scene = generate_scene(&cfg, seed).unwrap();
        let tcfg = TrackerConfig { tau: 0.7, ..no_tpn() };
        let (mut tracker, _) = start(&scene, tcfg, None);
        let r = Renderer::new(&scene);
        for t in 1..36 {
            let out: Vec<ViewResult> = tracker.step(&frames(&r, &scene, t)).unwrap();
            for s in tracker.samples().iter().filter(|s| s.time == t) {
                prop_assert_eq!(t % 7, 0);
                prop_assert!(out[s.view].q >= 0.7);
            }
            if t % 7 == 0 {
                for (c, o) in out.iter().enumerate() {
                    let inserted = tracker.samples().view_samples(c).any(|s| s.time == t);
                    prop_assert_eq!(inserted, o.q >= 0.7);
                }
            }
        }
    }
}

#[test]
fn occluded_view_is_corrected_from_the_others() {
    let cfg = SceneConfig {
        n_frames: 90,
        occlusions: vec![OcclusionEvent {
            view: 1,
            start: 50,
            duration: 30,
        }],
        ..SceneConfig::default()
    };
    let scene = generate_scene(&cfg, 4).unwrap();
    let model = TpnModel::new(TpnConfig::default(), 2.0, 1).unwrap();
    let (mut tracker, ann) = start(&scene, TrackerConfig::default(), Some(model));
    let r = Renderer::new(&scene);
    let tau = tracker.config().tau;
    let mut corrected = 0;
    let mut hidden = 0;
    for t in 1..90 {
        let out = tracker.step(&frames(&r, &scene, t)).unwrap();
        for (c, o) in out.iter().enumerate() {
            if o.q < tau {
                assert_ne!(o.source, CenterSource::Cf, "view {c} at {t}");
            } else {
                assert_eq!(o.source, CenterSource::Cf);
            }
        }
        if ann.label(t, 1).visibility == Visibility::FullyOccluded && t >= 55 {
            hidden += 1;
            if out[1].q < tau && out[1].source == CenterSource::Tpn {
                corrected += 1;
            }
        }
    }
    assert!(hidden >= 25);
    assert!(corrected * 10 >= hidden * 9, "{corrected} of {hidden} hidden frames corrected");
}

#[test]
fn shrinking_target_pulls_the_scale_down() {
    let cfg = SceneConfig {
        size_change: -0.04,
        ..still_camera(21)
    };
    let scene = generate_scene(&cfg, 6).unwrap();
    let (mut tracker, _) = start(&scene, no_tpn(), None);
    let r = Renderer::new(&scene);
    let w0: Vec<f64> = tracker.boxes().iter().map(|b| b.w()).collect();
    let (mut below, mut total) = (0, 0);
    for t in 1..21 {
        for (c, o) in tracker.step(&frames(&r, &scene, t)).unwrap().iter().enumerate() {
            total += 1;
            if o.bbox.w() < w0[c] {
                below += 1;
            }
        }
    }
    assert!(below * 2 > total, "{below} of {total} view-frames below the initial size");
}
