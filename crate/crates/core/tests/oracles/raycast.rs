//! Per-pixel occlusion by casting camera rays against oriented boxes.

use mvtrack_core::simulator::{Occluder, SceneSpec};
use nalgebra::Vector3;

/// Entry distance of the ray `o + s·d` into the box, if it hits in front of the origin.
fn ray_box(o: &Vector3<f64>, d: &Vector3<f64>, b: &Occluder) -> Option<f64> {
    let rel = o - Vector3::from(b.center);
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for k in 0..3 {
        let axis = Vector3::from(b.axes[k]);
        let (ok, dk) = (axis.dot(&rel), axis.dot(d));
        if dk.abs() < 1e-15 {
            if ok.abs() > b.half[k] {
                return None;
            }
            continue;
        }
        let a = (-b.half[k] - ok) / dk;
        let c = (b.half[k] - ok) / dk;
        lo = lo.max(a.min(c));
        hi = hi.min(a.max(c));
    }
    (hi >= lo.max(0.0)).then_some(lo.max(0.0))
}

/// Fraction of the target box in view `c` at frame `t` whose rays hit an
/// occluder before the target plane, sampled on a `grid`×`grid` lattice.
pub fn coverage(scene: &SceneSpec, t: usize, c: usize, grid: usize) -> f64 {
    let cam = &scene.cameras[c];
    let k = cam.intrinsics;
    let r = cam.rotations[t];
    let origin = cam.position(t);
    let pc = cam.to_camera(t, &scene.target.position(t));
    let side = k.focal * scene.target.size_at(t, scene.n_frames) / pc.z;
    let u0 = k.cx + k.focal * pc.x / pc.z - side / 2.0;
    let v0 = k.cy + k.focal * pc.y / pc.z - side / 2.0;
    let mut hit = 0usize;
    for i in 0..grid {
        for j in 0..grid {
            let u = u0 + side * (i as f64 + 0.5) / grid as f64;
            let v = v0 + side * (j as f64 + 0.5) / grid as f64;
            let dc = Vector3::new((u - k.cx) / k.focal, (v - k.cy) / k.focal, 1.0);
            let d = r.transpose() * dc;
            // with d_z = 1 in camera frame, the ray parameter equals camera depth
            if scene
                .occluders
                .iter()
                .any(|o| ray_box(&origin, &d, o).is_some_and(|s| s < pc.z))
            {
                hit += 1;
            }
        }
    }
    hit as f64 / (grid * grid) as f64
}
