//! Trajectory prediction network: maps smoothed motions seen in one view to
//! the motions of the same target in another view.
//!
//! Per-pair hidden parameters `h = [h_r1 | h_r2 | h_p]` seed the two RNN
//! layers' initial states (`[h_rk, 0]`) and feed the decoder, so camera
//! geometry can be fitted online while the shared weights stay frozen.

pub mod fit;
pub mod motion;
pub mod net;
pub mod predict;
pub mod rprop;
pub mod train;

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Point2;
pub use fit::{fit_hidden, fit_hidden_batch, fit_online, FitConfig, FitResult};
pub use motion::{integrate, momentum_fallback, predict_fused, smooth_motion, smoothed_motions};
pub use net::TpnConfig;
pub use predict::{extrapolate_len, fit_window_len, predict_online, predict_trajectory, FIT_WINDOW};
pub use rprop::{Rprop, RpropConfig};
pub use train::{train_tpn, TpnTrainConfig, TrainLogRow};

/// Flattened `[h_r1 | h_r2 | h_p]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenParams {
    pub values: Vec<f64>,
}

impl HiddenParams {
    pub fn zeros(cfg: &TpnConfig) -> Self {
        Self {
            values: vec![0.0; cfg.hidden_len()],
        }
    }

    pub fn from_values(cfg: &TpnConfig, values: Vec<f64>) -> Result<Self> {
        if values.len() != cfg.hidden_len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} hidden values", cfg.hidden_len()),
                actual: format!("{}", values.len()),
            });
        }
        Ok(Self { values })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TpnModel {
    pub config: TpnConfig,
    pub theta: Vec<f64>,
    /// Pixel speed that maps to unit input; outputs are rescaled by it.
    pub motion_scale: f64,
}

const MODEL_MAGIC: &[u8; 4] = b"MVTP";
const MODEL_VERSION: u32 = 1;

impl TpnModel {
    pub fn new(config: TpnConfig, motion_scale: f64, seed: u64) -> Result<Self> {
        if config.encoder == 0 || config.hidden < 2 || config.decoder == 0 {
            return Err(Error::invalid("layer sizes must be positive"));
        }
        if !(motion_scale > 0.0 && motion_scale.is_finite()) {
            return Err(Error::invalid("motion scale must be positive and finite"));
        }
        Ok(Self {
            config,
            theta: net::init_params(&config, seed),
            motion_scale,
        })
    }

    pub fn n_params(&self) -> usize {
        self.theta.len()
    }

    pub fn weights(&self) -> net::Weights<'_> {
        net::weights(&self.config, &self.theta)
    }

    /// Predicted target-view motions (pixels/frame) for source-view motions,
    /// one output per input, causally.
    pub fn forward(&self, h: &HiddenParams, r_a: &[Point2]) -> Vec<Point2> {
        if r_a.is_empty() {
            return Vec::new();
        }
        let s = self.motion_scale;
        let seq: Vec<[f64; 2]> = r_a.iter().map(|r| [r.u / s, r.v / s]).collect();
        let x = net::SeqBatch::from_sequences(&[seq]);
        let cache = net::encode(&self.config, &self.theta, &x);
        let trace = net::forward(&self.config, &self.theta, &x, &cache, &h.values);
        trace
            .out
            .chunks(2)
            .map(|o| Point2::new(o[0] * s, o[1] * s))
            .collect()
    }

    /// Header (`MVTP`, version, four layer sizes, motion scale, count) and
    /// little-endian parameters.
    pub fn to_bytes(&self) -> Vec<u8> {
        let c = &self.config;
        let mut out = Vec::with_capacity(40 + 8 * self.theta.len());
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
        for v in [c.encoder, c.hidden, c.decoder, c.hp] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        out.extend_from_slice(&self.motion_scale.to_le_bytes());
        out.extend_from_slice(&(self.theta.len() as u64).to_le_bytes());
        for v in &self.theta {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Snapshot(m.to_string());
        if bytes.len() < 40 || &bytes[..4] != MODEL_MAGIC {
            return Err(bad("missing model header"));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
        if u32_at(4) != MODEL_VERSION as usize {
            return Err(bad("unsupported model snapshot version"));
        }
        let config = TpnConfig {
            encoder: u32_at(8),
            hidden: u32_at(12),
            decoder: u32_at(16),
            hp: u32_at(20),
        };
        let motion_scale = f64::from_le_bytes(bytes[24..32].try_into().unwrap());
        let n = u64::from_le_bytes(bytes[32..40].try_into().unwrap()) as usize;
        if n != config.n_params() || bytes.len() != 40 + 8 * n {
            return Err(bad("parameter count does not match the header"));
        }
        let theta = bytes[40..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self {
            config,
            theta,
            motion_scale,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_bytes(&fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}

/// Smoothed target-view motions predicted from source-view motions.
pub fn tpn_forward(model: &TpnModel, h: &HiddenParams, r_a: &[Point2]) -> Vec<Point2> {
    model.forward(h, r_a)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> TpnModel {
        let cfg = TpnConfig {
            encoder: 6,
            hidden: 4,
            decoder: 5,
            hp: 3,
        };
        TpnModel::new(cfg, 2.0, 7).unwrap()
    }

    #[test]
    fn snapshot_round_trip() {
        let m = tiny();
        let back = TpnModel::from_bytes(&m.to_bytes()).unwrap();
        assert_eq!(m, back);
        let mut broken = m.to_bytes();
        broken.pop();
        assert!(TpnModel::from_bytes(&broken).is_err());
    }

    #[test]
    fn forward_is_deterministic_and_causal() {
        let m = tiny();
        let h = HiddenParams::from_values(&m.config, vec![0.1, -0.2, 0.3, 0.05, 0.0, -0.4, 0.2]).unwrap();
        let r: Vec<Point2> = (0..8).map(|i| Point2::new(i as f64 * 0.3, 1.0 - i as f64 * 0.1)).collect();
        let a = m.forward(&h, &r);
        assert_eq!(a, m.forward(&h, &r));
        let mut r2 = r.clone();
        r2[5] = Point2::new(9.0, -9.0);
        r2[7] = Point2::new(-3.0, 4.0);
        let b = m.forward(&h, &r2);
        assert_eq!(a[..5], b[..5]);
        assert_ne!(a[5], b[5]);
    }

    #[test]
    fn parameter_count_matches_layout() {
        let c = TpnConfig::default();
        let expected = 128 * 2 + 128 + 64 * 128 + 64 * 64 + 64 + 64 * 64 + 64 * 64 + 64 + 64 * 80 + 64 + 2 * 64 + 2;
        assert_eq!(c.n_params(), expected);
        assert_eq!(c.hidden_len(), 80);
    }
}
