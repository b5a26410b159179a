//! Deterministic grayscale rendering of a scene.

use image::{GrayImage, Luma};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::polygon;
use super::SceneSpec;
use crate::geometry::Point2;

/// Texels per side of the target texture grid.
const TARGET_GRID: usize = 8;

fn hash(seed: u64, a: i64, b: i64) -> f64 {
    // splitmix64 finalizer over the packed inputs
    let mut z = seed
        ^ (a as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (b as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
}

/// Smooth lattice noise in `[-1, 1]` with lattice spacing `cell` pixels.
fn value_noise(seed: u64, x: f64, y: f64, cell: f64) -> f64 {
    let (fx, fy) = (x / cell, y / cell);
    let (x0, y0) = (fx.floor(), fy.floor());
    let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
    let (ax, ay) = (smooth(fx - x0), smooth(fy - y0));
    let (i, j) = (x0 as i64, y0 as i64);
    let top = hash(seed, i, j) * (1.0 - ax) + hash(seed, i + 1, j) * ax;
    let bottom = hash(seed, i, j + 1) * (1.0 - ax) + hash(seed, i + 1, j + 1) * ax;
    top * (1.0 - ay) + bottom * ay
}

/// Precomputes per-scene textures so that many frames can be rendered cheaply.
pub struct Renderer<'a> {
    scene: &'a SceneSpec,
    backgrounds: Vec<Vec<f64>>,
    target_texture: Vec<f64>,
}

impl<'a> Renderer<'a> {
    pub fn new(scene: &'a SceneSpec) -> Self {
        let app = &scene.appearance;
        let backgrounds = scene
            .cameras
            .iter()
            .zip(&scene.background_seeds)
            .map(|(cam, &seed)| {
                let (w, h) = (cam.intrinsics.width as usize, cam.intrinsics.height as usize);
                let mut bg = Vec::with_capacity(w * h);
                for y in 0..h {
                    for x in 0..w {
                        let (px, py) = (x as f64, y as f64);
                        let n = 0.65 * value_noise(seed, px, py, 28.0)
                            + 0.35 * value_noise(seed ^ 0x5555, px, py, 7.0);
                        bg.push(app.background_mean + app.background_amp * n);
                    }
                }
                bg
            })
            .collect();

        let seed = scene.target.texture_seed;
        let mut grid: Vec<f64> = (0..TARGET_GRID * TARGET_GRID)
            .map(|i| hash(seed, (i / TARGET_GRID) as i64, (i % TARGET_GRID) as i64))
            .collect();
        let mean = grid.iter().sum::<f64>() / grid.len() as f64;
        let peak = grid.iter().map(|v| (v - mean).abs()).fold(1e-9, f64::max);
        grid.iter_mut().for_each(|v| *v = (*v - mean) / peak);

        Self {
            scene,
            backgrounds,
            target_texture: grid,
        }
    }

    /// Mean intensity the target texture is centered on.
    pub fn target_mean(&self) -> f64 {
        let app = &self.scene.appearance;
        app.background_mean + app.contrast + 10.0
    }

    /// Target intensity at texture coordinates `(s, t)` in `[0, 1]²`.
    fn target_value(&self, s: f64, t: f64) -> f64 {
        let n = TARGET_GRID as f64;
        let fx = (s * n - 0.5).clamp(0.0, n - 1.0);
        let fy = (t * n - 0.5).clamp(0.0, n - 1.0);
        let (x0, y0) = (fx.floor() as usize, fy.floor() as usize);
        let (x1, y1) = ((x0 + 1).min(TARGET_GRID - 1), (y0 + 1).min(TARGET_GRID - 1));
        let (ax, ay) = (fx - x0 as f64, fy - y0 as f64);
        let g = |x: usize, y: usize| self.target_texture[y * TARGET_GRID + x];
        let v = (g(x0, y0) * (1.0 - ax) + g(x1, y0) * ax) * (1.0 - ay)
            + (g(x0, y1) * (1.0 - ax) + g(x1, y1) * ax) * ay;
        self.target_mean() + self.scene.appearance.texture_amp * v
    }

    /// Occluder intensity at pixel center `(x, y)` (screen-space texture).
    pub(crate) fn occluder_value(&self, idx: usize, x: f64, y: f64) -> f64 {
        let o = &self.scene.occluders[idx];
        o.intensity + 20.0 * value_noise(o.texture_seed, x, y, 6.0)
    }

    /// Noise-free intensities, row-major.
    pub fn render_clean(&self, t: usize, c: usize) -> Vec<f64> {
        let scene = self.scene;
        let k = scene.intrinsics(c);
        let (w, h) = (k.width as usize, k.height as usize);
        let mut img = self.backgrounds[c].clone();

        enum Layer {
            Target,
            Occluder(usize, Vec<Point2>),
        }
        let mut layers: Vec<(f64, Layer)> = Vec::new();
        let fp = scene.footprint(t, c).ok();
        if let Some(fp) = &fp {
            layers.push((fp.depth, Layer::Target));
        }
        for (i, depth, poly) in scene.occluder_polygons(t, c, f64::INFINITY) {
            layers.push((depth, Layer::Occluder(i, poly)));
        }
        // painter's order: farthest first
        layers.sort_by(|a, b| b.0.total_cmp(&a.0));

        for (_, layer) in &layers {
            match layer {
                Layer::Target => {
                    let b = fp.as_ref().expect("target layer implies a footprint").bbox;
                    let (x0, y0) = (b.x(), b.y());
                    let xs = (x0.floor().max(0.0) as usize)..((x0 + b.w()).ceil().clamp(0.0, w as f64) as usize);
                    let ys = (y0.floor().max(0.0) as usize)..((y0 + b.h()).ceil().clamp(0.0, h as f64) as usize);
                    for y in ys {
                        let py = y as f64 + 0.5;
                        if py < y0 || py >= y0 + b.h() {
                            continue;
                        }
                        for x in xs.clone() {
                            let px = x as f64 + 0.5;
                            if px < x0 || px >= x0 + b.w() {
                                continue;
                            }
                            img[y * w + x] = self.target_value((px - x0) / b.w(), (py - y0) / b.h());
                        }
                    }
                }
                Layer::Occluder(i, poly) => {
                    let (mut lo, mut hi) = (Point2::new(f64::INFINITY, f64::INFINITY), Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
                    for p in poly {
                        lo = Point2::new(lo.u.min(p.u), lo.v.min(p.v));
                        hi = Point2::new(hi.u.max(p.u), hi.v.max(p.v));
                    }
                    let x_end = hi.u.ceil().clamp(0.0, w as f64) as usize;
                    let y_end = hi.v.ceil().clamp(0.0, h as f64) as usize;
                    for y in (lo.v.floor().max(0.0) as usize)..y_end {
                        for x in (lo.u.floor().max(0.0) as usize)..x_end {
                            let p = Point2::new(x as f64 + 0.5, y as f64 + 0.5);
                            if polygon::contains(poly, p) {
                                img[y * w + x] = self.occluder_value(*i, p.u, p.v);
                            }
                        }
                    }
                }
            }
        }
        img
    }

    pub fn render(&self, t: usize, c: usize) -> GrayImage {
        let k = self.scene.intrinsics(c);
        let clean = self.render_clean(t, c);
        let sigma = self.scene.appearance.pixel_noise;
        let mut rng = ChaCha8Rng::seed_from_u64(
            self.scene.rng_seed ^ ((t as u64) << 20) ^ ((c as u64) << 52) ^ 0xA076_1D64_78BD_642F,
        );
        let noise = Normal::new(0.0, sigma.max(0.0)).expect("finite noise level");
        let mut img = GrayImage::new(k.width, k.height);
        for (i, px) in img.pixels_mut().enumerate() {
            let n = if sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 };
            *px = Luma([(clean[i] + n).round().clamp(0.0, 255.0) as u8]);
        }
        img
    }
}

pub fn render_frame(scene: &SceneSpec, t: usize, c: usize) -> GrayImage {
    Renderer::new(scene).render(t, c)
}

#[cfg(test)]
mod tests {
    use super::super::{generate_scene, OcclusionEvent, SceneConfig};
    use super::*;
    use crate::geometry::Visibility;

    #[test]
    fn renders_are_deterministic() {
        let cfg = SceneConfig {
            n_frames: 20,
            ..SceneConfig::default()
        };
        let scene = generate_scene(&cfg, 1).unwrap();
        assert_eq!(render_frame(&scene, 7, 1), render_frame(&scene, 7, 1));
    }

    #[test]
    fn occluded_region_shows_the_occluder() {
        let cfg = SceneConfig {
            n_frames: 100,
            occlusions: vec![OcclusionEvent {
                view: 1,
                start: 40,
                duration: 30,
            }],
            ..SceneConfig::default()
        };
        let scene = generate_scene(&cfg, 2).unwrap();
        let r = Renderer::new(&scene);
        let t = 55;
        let fp = scene.footprint(t, 1).unwrap();
        assert_eq!(Visibility::from_coverage(fp.coverage), Visibility::FullyOccluded);
        let img = r.render_clean(t, 1);
        let polys = scene.occluder_polygons(t, 1, fp.depth);
        let b = fp.bbox;
        let w = scene.intrinsics(1).width as usize;
        let mut checked = 0;
        for y in b.y().ceil() as usize..(b.y() + b.h()).floor() as usize {
            for x in b.x().ceil() as usize..(b.x() + b.w()).floor() as usize {
                let p = Point2::new(x as f64 + 0.5, y as f64 + 0.5);
                if let Some((i, _, _)) = polys.iter().find(|(_, _, poly)| polygon::contains(poly, p)) {
                    assert_eq!(img[y * w + x], r.occluder_value(*i, p.u, p.v));
                    checked += 1;
                }
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn target_contrast_meets_margin() {
        let cfg = SceneConfig {
            n_frames: 10,
            ..SceneConfig::default()
        };
        let scene = generate_scene(&cfg, 9).unwrap();
        let img = render_frame(&scene, 5, 0);
        let b = scene.footprint(5, 0).unwrap().bbox;
        let (mut tin, mut nin, mut tout, mut nout) = (0.0, 0, 0.0, 0);
        for (x, y, px) in img.enumerate_pixels() {
            let p = Point2::new(x as f64 + 0.5, y as f64 + 0.5);
            let inside = p.u >= b.x() && p.u < b.x() + b.w() && p.v >= b.y() && p.v < b.y() + b.h();
            if inside {
                tin += px[0] as f64;
                nin += 1;
            } else {
                tout += px[0] as f64;
                nout += 1;
            }
        }
        let contrast = tin / nin as f64 - tout / nout as f64;
        assert!(contrast >= scene.appearance.contrast, "{contrast}");
    }
}
