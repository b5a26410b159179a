//! Projected trajectory pairs for training and benchmarking trajectory prediction.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::camera::{orbit_pose, CameraPose, Intrinsics};
use super::{random_shake, random_waypoints, TargetSpec};
use crate::error::{Error, Result};
use crate::geometry::{Point2, Trajectory};

/// Relative pose family of the two cameras in a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    #[default]
    Random,
    /// Both cameras share one pose.
    Identity,
    /// The second camera faces the first from the other side of the scene.
    Opposite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPair {
    pub scenario_id: usize,
    #[serde(default)]
    pub geometry: Geometry,
    pub view_a: Trajectory,
    pub view_b: Trajectory,
}

impl TrajectoryPair {
    pub fn len(&self) -> usize {
        self.view_a.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Same pair with the roles of the two views exchanged.
    pub fn swapped(&self) -> TrajectoryPair {
        TrajectoryPair {
            scenario_id: self.scenario_id,
            geometry: self.geometry,
            view_a: self.view_b.clone(),
            view_b: self.view_a.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub n_frames: usize,
    pub train_scenarios: usize,
    pub test_scenarios: usize,
    pub geometry: Geometry,
    /// Standard deviation of zero-mean jitter added to every point; 0 disables it.
    pub noise_px: f64,
    pub intrinsics: Intrinsics,
    pub distance: [f64; 2],
    /// Range of the first camera's azimuth, degrees.
    pub yaw_a_deg: f64,
    /// Magnitude range of the azimuth gap for near-side pairs, degrees.
    pub near_gap_deg: [f64; 2],
    /// Range of the azimuth gap for far-side pairs, degrees.
    pub far_gap_deg: [f64; 2],
    pub elevation_deg: f64,
    pub roll_deg: f64,
    pub drift_deg: f64,
    pub extent: [f64; 3],
    pub segment_frames: [f64; 2],
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            n_frames: 900,
            train_scenarios: 25,
            test_scenarios: 8,
            geometry: Geometry::Random,
            noise_px: 0.0,
            intrinsics: Intrinsics::default(),
            distance: [8.0, 13.0],
            yaw_a_deg: 30.0,
            near_gap_deg: [20.0, 50.0],
            far_gap_deg: [130.0, 230.0],
            elevation_deg: 10.0,
            roll_deg: 25.0,
            drift_deg: 0.5,
            extent: [3.5, 2.0, 0.3],
            segment_frames: [36.0, 40.0],
        }
    }
}

fn range(rng: &mut ChaCha8Rng, r: [f64; 2]) -> f64 {
    if r[1] > r[0] {
        rng.random_range(r[0]..r[1])
    } else {
        r[0]
    }
}

fn sym(rng: &mut ChaCha8Rng, amp: f64) -> f64 {
    if amp > 0.0 {
        rng.random_range(-amp..amp)
    } else {
        0.0
    }
}

fn camera(
    rng: &mut ChaCha8Rng,
    cfg: &DatasetConfig,
    yaw: f64,
    distance: f64,
    elevation: f64,
    roll: f64,
) -> CameraPose {
    let (r, t) = orbit_pose(&Vector3::zeros(), distance, yaw, elevation, roll);
    let eye = -(r.transpose() * t);
    let shake = random_shake(rng, cfg.drift_deg.to_radians(), 0.005 * distance);
    let mut pose = CameraPose::fixed(cfg.intrinsics, r, t, cfg.n_frames);
    for f in 0..cfg.n_frames {
        let (rf, tf) = shake.apply(&r, &eye, f);
        pose.rotations[f] = rf;
        pose.translations[f] = tf;
    }
    pose
}

fn scenario(rng: &mut ChaCha8Rng, cfg: &DatasetConfig, id: usize) -> Result<TrajectoryPair> {
    let n = cfg.n_frames;
    let segment_frames = range(rng, cfg.segment_frames);
    let target = TargetSpec {
        waypoints: random_waypoints(rng, n, segment_frames, cfg.extent),
        segment_frames,
        size: 1.0,
        size_change: 0.0,
        texture_seed: 0,
    };
    let yaw_a = sym(rng, cfg.yaw_a_deg).to_radians();
    let dist_a = range(rng, cfg.distance);
    let elev_a = sym(rng, cfg.elevation_deg).to_radians();
    let roll_a = sym(rng, 0.4 * cfg.roll_deg).to_radians();
    let cam_a = camera(rng, cfg, yaw_a, dist_a, elev_a, roll_a);
    let cam_b = match cfg.geometry {
        Geometry::Identity => cam_a.clone(),
        Geometry::Opposite => camera(rng, cfg, yaw_a + std::f64::consts::PI, dist_a, elev_a, 0.0),
        Geometry::Random => {
            let gap = if rng.random_bool(0.5) {
                let g = range(rng, cfg.near_gap_deg);
                if rng.random_bool(0.5) {
                    g
                } else {
                    -g
                }
            } else {
                range(rng, cfg.far_gap_deg)
            };
            let dist = range(rng, cfg.distance);
            let elev = sym(rng, cfg.elevation_deg).to_radians();
            let roll = sym(rng, cfg.roll_deg).to_radians();
            camera(rng, cfg, yaw_a + gap.to_radians(), dist, elev, roll)
        }
    };

    let noise = if cfg.noise_px > 0.0 {
        Some(Normal::new(0.0, cfg.noise_px).map_err(|e| Error::invalid(e.to_string()))?)
    } else {
        None
    };
    let mut pa = Vec::with_capacity(n);
    let mut pb = Vec::with_capacity(n);
    for t in 0..n {
        let p = target.position(t);
        for (cam, out) in [(&cam_a, &mut pa), (&cam_b, &mut pb)] {
            let mut g = cam
                .project_point(t, &p)
                .ok_or_else(|| Error::SceneRejected(format!("target behind a camera at frame {t}")))?;
            if let Some(d) = &noise {
                g += Point2::new(d.sample(rng), d.sample(rng));
            }
            out.push(g);
        }
    }
    Ok(TrajectoryPair {
        scenario_id: id,
        geometry: cfg.geometry,
        view_a: Trajectory::new(0, pa)?,
        view_b: Trajectory::new(0, pb)?,
    })
}

/// `n_scenarios` pairs, each from its own random camera pair and target path.
pub fn generate_trajectory_dataset(
    n_scenarios: usize,
    cfg: &DatasetConfig,
    seed: u64,
) -> Result<Vec<TrajectoryPair>> {
    if n_scenarios == 0 {
        return Err(Error::invalid("need at least one scenario"));
    }
    if cfg.n_frames < 90 {
        return Err(Error::invalid("trajectory pairs need at least 90 frames"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_scenarios).map(|i| scenario(&mut rng, cfg, i)).collect()
}

/// Disjoint train and test sets drawn from independent streams of `seed`.
pub fn generate_split(
    cfg: &DatasetConfig,
    seed: u64,
) -> Result<(Vec<TrajectoryPair>, Vec<TrajectoryPair>)> {
    let train = generate_trajectory_dataset(cfg.train_scenarios, cfg, seed)?;
    let mut test = generate_trajectory_dataset(
        cfg.test_scenarios,
        cfg,
        seed ^ 0x7E57_7E57_7E57_7E57,
    )?;
    for (i, p) in test.iter_mut().enumerate() {
        p.scenario_id = cfg.train_scenarios + i;
    }
    Ok((train, test))
}

pub fn write_jsonl(pairs: &[TrajectoryPair], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for p in pairs {
        serde_json::to_writer(&mut out, p)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_jsonl(path: impl AsRef<Path>) -> Result<Vec<TrajectoryPair>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut pairs = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let p: TrajectoryPair = serde_json::from_str(&line)?;
        if p.view_a.len() != p.view_b.len() {
            return Err(Error::invalid(format!(
                "scenario {} has views of different lengths",
                p.scenario_id
            )));
        }
        pairs.push(p);
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short(geometry: Geometry) -> DatasetConfig {
        DatasetConfig {
            n_frames: 120,
            geometry,
            ..DatasetConfig::default()
        }
    }

    #[test]
    fn default_split_sizes() {
        let cfg = DatasetConfig {
            n_frames: 90,
            ..DatasetConfig::default()
        };
        let (train, test) = generate_split(&cfg, 1).unwrap();
        assert_eq!((train.len(), test.len()), (25, 8));
        assert!(train.iter().chain(&test).all(|p| p.view_a.len() == 90 && p.view_b.len() == 90));
    }

    #[test]
    fn identity_geometry_gives_equal_views() {
        for p in generate_trajectory_dataset(3, &short(Geometry::Identity), 4).unwrap() {
            assert_eq!(p.view_a, p.view_b);
        }
    }

    #[test]
    fn opposite_geometry_flips_horizontal_motion() {
        for p in generate_trajectory_dataset(3, &short(Geometry::Opposite), 5).unwrap() {
            let da = p.view_a.diffs();
            let db = p.view_b.diffs();
            let mut agree = 0;
            let mut moving = 0;
            for (a, b) in da.iter().zip(&db) {
                if a.u.abs() > 0.5 {
                    moving += 1;
                    if a.u.signum() != b.u.signum() {
                        agree += 1;
                    }
                }
            }
            assert!(moving > 0 && agree as f64 >= 0.95 * moving as f64);
        }
    }

    #[test]
    fn jsonl_round_trip() {
        let pairs = generate_trajectory_dataset(2, &short(Geometry::Random), 6).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pairs.jsonl");
        write_jsonl(&pairs, &path).unwrap();
        assert_eq!(read_jsonl(&path).unwrap(), pairs);
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
    }

    #[test]
    fn noise_flag_perturbs_points() {
        let clean = generate_trajectory_dataset(1, &short(Geometry::Identity), 8).unwrap();
        let noisy = generate_trajectory_dataset(
            1,
            &DatasetConfig {
                noise_px: 1.0,
                ..short(Geometry::Identity)
            },
            8,
        )
        .unwrap();
        assert_ne!(clean[0].view_a, noisy[0].view_a);
    }
}
