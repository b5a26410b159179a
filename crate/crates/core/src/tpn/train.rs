//! Two-stage training: per-window hidden fits, then a joint update of the
//! weights and every window's hidden parameters.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::fit::{fit_hidden_normalized, motion_targets, FitConfig};
use super::motion::{motions_over, smoothed_motions};
use super::net::{self, LossWeights, SeqBatch, Targets, TpnConfig};
use super::rprop::{Rprop, RpropConfig};
use super::TpnModel;
use crate::error::{Error, Result};
use crate::simulator::TrajectoryPair;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TpnTrainConfig {
    pub tpn: TpnConfig,
    pub n_b: usize,
    pub window: usize,
    pub fit_window: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub epochs: usize,
    /// Hidden-fit iterations per window in stage 1.
    pub stage1_iters: usize,
    /// Joint updates per batch in stage 2.
    pub stage2_iters: usize,
    pub rprop: RpropConfig,
    /// Randomly exchange source and target views of sampled windows.
    pub swap_views: bool,
}

impl Default for TpnTrainConfig {
    fn default() -> Self {
        Self {
            tpn: TpnConfig::default(),
            n_b: 100,
            window: 90,
            fit_window: 40,
            lambda1: 1e-3,
            lambda2: 1.0,
            epochs: 20,
            stage1_iters: 60,
            stage2_iters: 10,
            rprop: RpropConfig::default(),
            swap_views: true,
        }
    }
}

impl TpnTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.fit_window == 0 || self.fit_window >= self.window {
            return Err(Error::invalid("fit window must be positive and shorter than the window"));
        }
        if self.n_b == 0 {
            return Err(Error::invalid("batch size must be positive"));
        }
        if !(self.lambda1 >= 0.0 && self.lambda2 >= 0.0) {
            return Err(Error::invalid("loss weights must be non-negative"));
        }
        Ok(())
    }
}

/// Mean per-window losses of one batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainLogRow {
    pub epoch: usize,
    pub batch: usize,
    pub stage1_loss: f64,
    pub stage2_loss: f64,
}

pub fn write_log_csv(rows: &[TrainLogRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("epoch,batch,stage1_loss,stage2_loss\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", r.epoch, r.batch, r.stage1_loss, r.stage2_loss));
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

/// 95th-percentile smoothed speed over both views of every pair.
pub fn motion_scale(dataset: &[TrajectoryPair]) -> f64 {
    let mut speeds: Vec<f64> = dataset
        .iter()
        .flat_map(|p| [&p.view_a, &p.view_b])
        .flat_map(|t| smoothed_motions(t.points()).into_iter().map(|r| r.norm()))
        .collect();
    if speeds.is_empty() {
        return 1.0;
    }
    speeds.sort_by(f64::total_cmp);
    let s = speeds[((speeds.len() - 1) as f64 * 0.95).round() as usize];
    if s > 1e-9 {
        s
    } else {
        1.0
    }
}

/// Untrained model with the dataset's motion scale.
pub fn initial_model(dataset: &[TrajectoryPair], cfg: &TpnTrainConfig, seed: u64) -> Result<TpnModel> {
    TpnModel::new(cfg.tpn, motion_scale(dataset), seed)
}

struct Window {
    r_a: Vec<[f64; 2]>,
    r_b: Vec<[f64; 2]>,
    /// Target displacement from the window's first position.
    q: Vec<[f64; 2]>,
}

fn sample_window(pair: &TrajectoryPair, cfg: &TpnTrainConfig, s: f64, rng: &mut ChaCha8Rng) -> Result<Window> {
    let (a, b) = if cfg.swap_views && rng.random_bool(0.5) {
        (&pair.view_b, &pair.view_a)
    } else {
        (&pair.view_a, &pair.view_b)
    };
    let start = a.start_time().max(b.start_time());
    let end = a.end_time().min(b.end_time());
    if end + 1 < start + cfg.window {
        return Err(Error::invalid(format!(
            "pair {} is shorter than the {}-frame window",
            pair.scenario_id, cfg.window
        )));
    }
    let last = end + 1 - cfg.window;
    // leave room for a full 4-point smoothing history when possible
    let first = (start + 3).min(last);
    let t0 = rng.random_range(first..=last);
    let t_end = t0 + cfg.window - 1;
    let norm = |v: Vec<crate::geometry::Point2>| v.into_iter().map(|p| [p.u / s, p.v / s]).collect();
    let g0 = b.at(t0).expect("in range");
    let q = (t0..=t_end)
        .map(|t| {
            let g = b.at(t).expect("in range");
            [(g.u - g0.u) / s, (g.v - g0.v) / s]
        })
        .collect();
    Ok(Window {
        r_a: norm(motions_over(a, t0, t_end)?),
        r_b: norm(motions_over(b, t0, t_end)?),
        q,
    })
}

/// Trains from a fresh initialization; returns the model and one log row per batch.
pub fn train_tpn(
    dataset: &[TrajectoryPair],
    cfg: &TpnTrainConfig,
    seed: u64,
) -> Result<(TpnModel, Vec<TrainLogRow>)> {
    let model = initial_model(dataset, cfg, seed)?;
    let mut log = Vec::new();
    let model = train_from(model, dataset, cfg, seed, |row| log.push(*row))?;
    Ok((model, log))
}

/// Continues training `model`, reporting each batch to `on_batch`.
pub fn train_from(
    mut model: TpnModel,
    dataset: &[TrajectoryPair],
    cfg: &TpnTrainConfig,
    seed: u64,
    mut on_batch: impl FnMut(&TrainLogRow),
) -> Result<TpnModel> {
    if dataset.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    cfg.validate()?;
    if model.config != cfg.tpn {
        return Err(Error::invalid("model layout differs from the training config"));
    }
    let c = cfg.tpn;
    let hl = c.hidden_len();
    let s = model.motion_scale;
    let total_frames: usize = dataset.iter().map(TrajectoryPair::len).sum();
    let batches = total_frames.div_ceil(cfg.window * cfg.n_b).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_7A11);
    let mut theta_opt = Rprop::new(model.n_params(), cfg.rprop);
    let fit_cfg = FitConfig {
        lambda1: cfg.lambda1,
        max_iters: cfg.stage1_iters,
        rprop: cfg.rprop,
    };
    let weights = LossWeights {
        lambda1: cfg.lambda1,
        lambda2: cfg.lambda2,
    };
    let n_b = cfg.n_b as f64;

    for epoch in 0..cfg.epochs {
        for batch in 0..batches {
            let mut windows = Vec::with_capacity(cfg.n_b);
            for _ in 0..cfg.n_b {
                let pair = &dataset[rng.random_range(0..dataset.len())];
                windows.push(sample_window(pair, cfg, s, &mut rng)?);
            }

            // stage 1: hidden parameters on the leading frames, weights frozen
            let head = |v: &Vec<[f64; 2]>| v[..cfg.fit_window].to_vec();
            let xs: Vec<_> = windows.iter().map(|w| head(&w.r_a)).collect();
            let ys: Vec<_> = windows.iter().map(|w| head(&w.r_b)).collect();
            let fits = fit_hidden_normalized(
                &model,
                &SeqBatch::from_sequences(&xs),
                &motion_targets(&ys),
                vec![0.0; cfg.n_b * hl],
                &fit_cfg,
            )?;
            let stage1_loss = fits.iter().map(|f| f.final_loss).sum::<f64>() / n_b;
            let mut hidden: Vec<f64> = fits.into_iter().flat_map(|f| f.hidden.values).collect();

            // stage 2: weights and hidden parameters jointly over the full window
            let x = SeqBatch::from_sequences(&windows.iter().map(|w| w.r_a.clone()).collect::<Vec<_>>());
            let targets = Targets {
                motions: SeqBatch::from_sequences(&windows.iter().map(|w| w.r_b.clone()).collect::<Vec<_>>()).inputs,
                positions: SeqBatch::from_sequences(&windows.iter().map(|w| w.q.clone()).collect::<Vec<_>>()).inputs,
            };
            let mut h_opt = Rprop::new(hidden.len(), cfg.rprop);
            let mut grad = vec![0.0; model.n_params()];
            let mut stage2_loss = f64::NAN;
            for _ in 0..cfg.stage2_iters {
                grad.iter_mut().for_each(|g| *g = 0.0);
                let (loss, dh) = net::loss_and_grad(&c, &model.theta, &x, &targets, &hidden, weights, Some(&mut grad));
                if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                    return Err(Error::Diverged(format!(
                        "training loss became {loss} at epoch {epoch}, batch {batch}"
                    )));
                }
                stage2_loss = loss / n_b;
                theta_opt.step(&mut model.theta, &grad);
                h_opt.step(&mut hidden, &dh);
            }
            on_batch(&TrainLogRow {
                epoch,
                batch,
                stage1_loss,
                stage2_loss,
            });
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{generate_trajectory_dataset, DatasetConfig};

    fn tiny_cfg() -> TpnTrainConfig {
        TpnTrainConfig {
            tpn: TpnConfig {
                encoder: 8,
                hidden: 8,
                decoder: 8,
                hp: 4,
            },
            n_b: 4,
            window: 30,
            fit_window: 10,
            epochs: 2,
            stage1_iters: 5,
            stage2_iters: 3,
            ..TpnTrainConfig::default()
        }
    }

    fn data() -> Vec<TrajectoryPair> {
        let cfg = DatasetConfig {
            n_frames: 120,
            ..DatasetConfig::default()
        };
        generate_trajectory_dataset(2, &cfg, 5).unwrap()
    }

    #[test]
    fn zero_epochs_returns_initial_model() {
        let d = data();
        let cfg = TpnTrainConfig {
            epochs: 0,
            ..tiny_cfg()
        };
        let (m, log) = train_tpn(&d, &cfg, 9).unwrap();
        assert_eq!(m, initial_model(&d, &cfg, 9).unwrap());
        assert!(log.is_empty());
    }

    #[test]
    fn training_is_deterministic() {
        let d = data();
        let a = train_tpn(&d, &tiny_cfg(), 1).unwrap();
        let b = train_tpn(&d, &tiny_cfg(), 1).unwrap();
        assert_eq!(a.0.to_bytes(), b.0.to_bytes());
        assert_eq!(a.1, b.1);
        assert!(!a.1.is_empty());
    }

    #[test]
    fn empty_dataset_is_rejected() {
        assert!(train_tpn(&[], &tiny_cfg(), 0).is_err());
    }
}
