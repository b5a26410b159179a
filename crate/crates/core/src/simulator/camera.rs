//! Pinhole cameras with per-frame extrinsics.
//!
//! World and camera frames both have y pointing down; the camera looks along +z.
//! A world point `p` maps to camera coordinates `R·p + t`.

use nalgebra::{Matrix3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use crate::geometry::Point2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub focal: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl Default for Intrinsics {
    fn default() -> Self {
        Self {
            focal: 500.0,
            cx: 320.0,
            cy: 240.0,
            width: 640,
            height: 480,
        }
    }
}

impl Intrinsics {
    pub fn contains(&self, p: Point2) -> bool {
        p.u >= 0.0 && p.v >= 0.0 && p.u < self.width as f64 && p.v < self.height as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    pub intrinsics: Intrinsics,
    pub rotations: Vec<Matrix3<f64>>,
    pub translations: Vec<Vector3<f64>>,
}

impl CameraPose {
    /// A camera that keeps the same extrinsics for `n_frames` frames.
    pub fn fixed(intrinsics: Intrinsics, r: Matrix3<f64>, t: Vector3<f64>, n_frames: usize) -> Self {
        Self {
            intrinsics,
            rotations: vec![r; n_frames],
            translations: vec![t; n_frames],
        }
    }

    pub fn n_frames(&self) -> usize {
        self.rotations.len()
    }

    pub fn to_camera(&self, t: usize, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotations[t] * p + self.translations[t]
    }

    /// Optical center in world coordinates.
    pub fn position(&self, t: usize) -> Vector3<f64> {
        -(self.rotations[t].transpose() * self.translations[t])
    }

    /// Image point of a camera-frame point in front of the camera.
    pub fn image_of(&self, pc: &Vector3<f64>) -> Option<Point2> {
        if pc.z <= 1e-6 {
            return None;
        }
        let k = &self.intrinsics;
        Some(Point2::new(k.cx + k.focal * pc.x / pc.z, k.cy + k.focal * pc.y / pc.z))
    }

    pub fn project_point(&self, t: usize, p: &Vector3<f64>) -> Option<Point2> {
        self.image_of(&self.to_camera(t, p))
    }
}

/// Rotation whose rows are the camera axes of a camera at `eye` looking at
/// `target`, rolled by `roll` radians about the optical axis.
pub fn look_at(eye: &Vector3<f64>, target: &Vector3<f64>, roll: f64) -> Matrix3<f64> {
    let z = (target - eye).normalize();
    let x = Vector3::new(0.0, 1.0, 0.0).cross(&z).normalize();
    let y = z.cross(&x);
    let (s, c) = roll.sin_cos();
    let xr = x * c + y * s;
    let yr = y * c - x * s;
    Matrix3::from_rows(&[xr.transpose(), yr.transpose(), z.transpose()])
}

/// Camera on a horizontal circle of radius `distance` around `center`, at
/// azimuth `yaw` (0 = on the −z side looking toward +z) and raised by
/// `elevation` radians (negative y is up).
pub fn orbit_pose(
    center: &Vector3<f64>,
    distance: f64,
    yaw: f64,
    elevation: f64,
    roll: f64,
) -> (Matrix3<f64>, Vector3<f64>) {
    let dir = Rotation3::from_axis_angle(&Vector3::y_axis(), yaw) * Vector3::new(0.0, 0.0, -1.0);
    let eye = center + dir * (distance * elevation.cos()) - Vector3::new(0.0, distance * elevation.sin(), 0.0);
    let r = look_at(&eye, center, roll);
    (r, -(r * eye))
}

/// Small smooth pose perturbation for a hand-held camera.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shake {
    pub rot_amp: [f64; 3],
    pub trans_amp: [f64; 3],
    pub periods: [f64; 6],
    pub phases: [f64; 6],
}

impl Shake {
    pub fn apply(&self, r: &Matrix3<f64>, eye: &Vector3<f64>, t: usize) -> (Matrix3<f64>, Vector3<f64>) {
        let wave = |i: usize| {
            (2.0 * std::f64::consts::PI * t as f64 / self.periods[i] + self.phases[i]).sin()
        };
        let jr = Rotation3::from_euler_angles(
            self.rot_amp[0] * wave(0),
            self.rot_amp[1] * wave(1),
            self.rot_amp[2] * wave(2),
        );
        let rt = jr.matrix() * r;
        let e = eye
            + Vector3::new(
                self.trans_amp[0] * wave(3),
                self.trans_amp[1] * wave(4),
                self.trans_amp[2] * wave(5),
            );
        (rt, -(rt * e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn on_axis_projection() {
        let cam = CameraPose::fixed(Intrinsics::default(), Matrix3::identity(), Vector3::zeros(), 1);
        let p = cam.project_point(0, &Vector3::new(0.0, 0.0, 5.0)).unwrap();
        assert_eq!((p.u, p.v), (320.0, 240.0));
        let p = cam.project_point(0, &Vector3::new(1.0, 0.0, 5.0)).unwrap();
        assert_eq!((p.u, p.v), (420.0, 240.0));
        assert!(cam.project_point(0, &Vector3::new(0.0, 0.0, -1.0)).is_none());
    }

    #[test]
    fn orbit_at_zero_yaw_is_a_translation() {
        let (r, t) = orbit_pose(&Vector3::zeros(), 10.0, 0.0, 0.0, 0.0);
        assert!((r - Matrix3::identity()).norm() < 1e-12);
        assert!((t - Vector3::new(0.0, 0.0, 10.0)).norm() < 1e-12);
    }

    #[test]
    fn look_at_is_orthonormal_and_centers_target() {
        let eye = Vector3::new(3.0, -2.0, -7.0);
        let r = look_at(&eye, &Vector3::new(0.5, 0.2, 0.0), 0.3);
        assert!((r * r.transpose() - Matrix3::identity()).norm() < 1e-12);
        assert!((r.determinant() - 1.0).abs() < 1e-12);
        let cam = CameraPose::fixed(Intrinsics::default(), r, -(r * eye), 1);
        let p = cam.project_point(0, &Vector3::new(0.5, 0.2, 0.0)).unwrap();
        assert!((p.u - 320.0).abs() < 1e-9 && (p.v - 240.0).abs() < 1e-9);
        assert!((cam.position(0) - eye).norm() < 1e-12);
    }

    #[test]
    fn opposite_cameras_mirror_horizontal_motion() {
        let (ra, ta) = orbit_pose(&Vector3::zeros(), 10.0, 0.0, 0.0, 0.0);
        let (rb, tb) = orbit_pose(&Vector3::zeros(), 10.0, std::f64::consts::PI, 0.0, 0.0);
        let a = CameraPose::fixed(Intrinsics::default(), ra, ta, 1);
        let b = CameraPose::fixed(Intrinsics::default(), rb, tb, 1);
        let p0 = Vector3::new(0.0, 0.0, 0.0);
        let p1 = Vector3::new(1.0, 0.0, 0.0);
        let da = a.project_point(0, &p1).unwrap().u - a.project_point(0, &p0).unwrap().u;
        let db = b.project_point(0, &p1).unwrap().u - b.project_point(0, &p0).unwrap().u;
        assert!(da > 0.0 && db < 0.0);
        assert!((da + db).abs() < 1e-9);
    }
}
