//! Online fitting: hidden parameters with frozen weights, or all weights (TPN-O).

use super::net::{self, LossWeights, SeqBatch, Targets};
use super::rprop::{Rprop, RpropConfig};
use super::{HiddenParams, TpnModel};
use crate::error::{Error, Result};
use crate::geometry::Point2;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub lambda1: f64,
    pub max_iters: usize,
    pub rprop: RpropConfig,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            lambda1: 1e-3,
            max_iters: 300,
            rprop: RpropConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub hidden: HiddenParams,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub iterations: usize,
}

pub(crate) fn normalize(model: &TpnModel, r: &[Point2]) -> Vec<[f64; 2]> {
    let s = model.motion_scale;
    r.iter().map(|p| [p.u / s, p.v / s]).collect()
}

pub(crate) fn motion_targets(seqs: &[Vec<[f64; 2]>]) -> Targets {
    let x = SeqBatch::from_sequences(seqs);
    Targets {
        motions: x.inputs,
        positions: Vec::new(),
    }
}

/// Lockstep fit of one hidden vector per sequence, starting from `init`.
///
/// Each sequence stops moving once all its step sizes reach the floor; the
/// best-loss iterate is returned, so the final loss never exceeds the initial one.
pub(crate) fn fit_hidden_normalized(
    model: &TpnModel,
    x: &SeqBatch,
    targets: &Targets,
    init: Vec<f64>,
    cfg: &FitConfig,
) -> Result<Vec<FitResult>> {
    let c = &model.config;
    let hl = c.hidden_len();
    let b = x.batch;
    let cache = net::encode(c, &model.theta, x);
    let mut h = init;
    let mut opt = Rprop::new(b * hl, cfg.rprop);
    let mut frozen = vec![false; b];
    let mut best = vec![f64::INFINITY; b];
    let mut best_h = h.clone();
    let mut initial = vec![0.0; b];
    let mut iterations = vec![0usize; b];

    let evaluate = |h: &[f64], want_grad: bool| -> (Vec<f64>, Option<Vec<f64>>) {
        let trace = net::forward(c, &model.theta, x, &cache, h);
        let (mut losses, d_out) = net::output_loss(&trace.out, targets, x.len, b, 0.0);
        for (i, l) in losses.iter_mut().enumerate() {
            *l += cfg.lambda1 * h[i * hl..(i + 1) * hl].iter().map(|v| v * v).sum::<f64>();
        }
        let grad = want_grad.then(|| {
            let mut g = net::backward(c, &model.theta, x, &cache, h, &trace, &d_out, None);
            for (gv, hv) in g.iter_mut().zip(h) {
                *gv += 2.0 * cfg.lambda1 * hv;
            }
            g
        });
        (losses, grad)
    };

    for it in 0..=cfg.max_iters {
        let last = it == cfg.max_iters || frozen.iter().all(|&f| f);
        let (losses, grad) = evaluate(&h, !last);
        for i in 0..b {
            if !losses[i].is_finite() {
                return Err(Error::Diverged(format!("hidden fit loss became {}", losses[i])));
            }
            if it == 0 {
                initial[i] = losses[i];
            }
            if losses[i] < best[i] {
                best[i] = losses[i];
                best_h[i * hl..(i + 1) * hl].copy_from_slice(&h[i * hl..(i + 1) * hl]);
            }
        }
        if last {
            break;
        }
        let grad = grad.expect("gradient requested");
        for i in 0..b {
            if frozen[i] {
                continue;
            }
            let r = i * hl..(i + 1) * hl;
            opt.step_range(r.start, &mut h[r.clone()], &grad[r]);
            iterations[i] += 1;
            frozen[i] = opt.converged(i * hl, hl);
        }
    }
    Ok((0..b)
        .map(|i| FitResult {
            hidden: HiddenParams {
                values: best_h[i * hl..(i + 1) * hl].to_vec(),
            },
            initial_loss: initial[i],
            final_loss: best[i],
            iterations: iterations[i],
        })
        .collect())
}

/// Fits `h` (weights frozen) so the predicted motions from `r_a` match `r_b`,
/// minimizing `‖Ψ(r_a; h) − r_b‖² + λ1‖h‖²` in normalized motion units.
pub fn fit_hidden(model: &TpnModel, r_a: &[Point2], r_b: &[Point2], cfg: &FitConfig) -> Result<FitResult> {
    let mut out = fit_hidden_batch(model, &[(r_a.to_vec(), r_b.to_vec())], cfg)?;
    Ok(out.remove(0))
}

/// Independent fits for several equal-length pairs, evaluated in lockstep.
pub fn fit_hidden_batch(
    model: &TpnModel,
    pairs: &[(Vec<Point2>, Vec<Point2>)],
    cfg: &FitConfig,
) -> Result<Vec<FitResult>> {
    if pairs.is_empty() {
        return Ok(Vec::new());
    }
    let len = pairs[0].0.len();
    if len == 0 || pairs.iter().any(|(a, b)| a.len() != len || b.len() != len) {
        return Err(Error::invalid("fit pairs must be non-empty and share one length"));
    }
    let xs: Vec<Vec<[f64; 2]>> = pairs.iter().map(|(a, _)| normalize(model, a)).collect();
    let ys: Vec<Vec<[f64; 2]>> = pairs.iter().map(|(_, b)| normalize(model, b)).collect();
    let x = SeqBatch::from_sequences(&xs);
    let targets = motion_targets(&ys);
    let init = vec![0.0; pairs.len() * model.config.hidden_len()];
    fit_hidden_normalized(model, &x, &targets, init, cfg)
}

/// Online variant without hidden parameters: every weight is fitted to the
/// pair, starting from `model`, with `h` held at zero.
pub fn fit_online(
    model: &TpnModel,
    r_a: &[Point2],
    r_b: &[Point2],
    iters: usize,
    rprop: RpropConfig,
) -> Result<TpnModel> {
    if r_a.is_empty() || r_a.len() != r_b.len() {
        return Err(Error::invalid("online fit needs two non-empty sequences of one length"));
    }
    let c = model.config;
    let x = SeqBatch::from_sequences(&[normalize(model, r_a)]);
    let targets = motion_targets(&[normalize(model, r_b)]);
    let zeros = vec![0.0; c.hidden_len()];
    let weights = LossWeights {
        lambda1: 0.0,
        lambda2: 0.0,
    };
    let mut theta = model.theta.clone();
    let mut best = (f64::INFINITY, theta.clone());
    let mut opt = Rprop::new(theta.len(), rprop);
    let mut grad = vec![0.0; theta.len()];
    for it in 0..=iters {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let want = it < iters;
        let (loss, _) = net::loss_and_grad(&c, &theta, &x, &targets, &zeros, weights, want.then_some(&mut grad[..]));
        if !loss.is_finite() {
            return Err(Error::Diverged(format!("online fit loss became {loss}")));
        }
        if loss < best.0 {
            best = (loss, theta.clone());
        }
        if !want {
            break;
        }
        opt.step(&mut theta, &grad);
    }
    Ok(TpnModel {
        config: c,
        theta: best.1,
        motion_scale: model.motion_scale,
    })
}
