//! Cross-view trajectory prediction from a 40-frame fit window.

use super::fit::{fit_hidden, fit_online, FitConfig, FitResult};
use super::motion::{integrate, motions_over};
use super::rprop::RpropConfig;
use super::{HiddenParams, TpnModel};
use crate::error::{Error, Result};
use crate::geometry::{Point2, Trajectory};

/// Frames used to fit the hidden parameters before predicting.
pub const FIT_WINDOW: usize = 40;

fn check_ranges(source: &Trajectory, target: &Trajectory, t1: usize, t: usize, window: usize) -> Result<usize> {
    if window == 0 || t1 + 1 < window || t1 + 1 - window < target.start_time() {
        let available = (t1 + 1).saturating_sub(target.start_time());
        return Err(Error::InsufficientHistory {
            needed: window,
            available,
        });
    }
    let t0 = t1 + 1 - window;
    if t1 > target.end_time() {
        return Err(Error::invalid(format!("target trajectory ends before frame {t1}")));
    }
    if t0 < source.start_time() || t > source.end_time() {
        return Err(Error::invalid(format!(
            "source trajectory must cover frames {t0}..={t}"
        )));
    }
    if t < t1 {
        return Err(Error::invalid("prediction time precedes the fit window"));
    }
    Ok(t0)
}

/// Fits hidden parameters on the 40 frames ending at `t1`.
pub fn fit_window(
    model: &TpnModel,
    source: &Trajectory,
    target: &Trajectory,
    t1: usize,
    cfg: &FitConfig,
) -> Result<FitResult> {
    fit_window_len(model, source, target, t1, FIT_WINDOW, cfg)
}

/// [`fit_window`] over the last `window` frames instead of 40.
pub fn fit_window_len(
    model: &TpnModel,
    source: &Trajectory,
    target: &Trajectory,
    t1: usize,
    window: usize,
    cfg: &FitConfig,
) -> Result<FitResult> {
    let t0 = check_ranges(source, target, t1, t1, window)?;
    let r_a = motions_over(source, t0, t1)?;
    let r_b = motions_over(target, t0, t1)?;
    fit_hidden(model, &r_a, &r_b, cfg)
}

/// Predicted target positions for frames `t1+1..=t`, integrated from the
/// target's position at `t1`. The network is run from `t1 − 39` so its state
/// matches the fit.
pub fn extrapolate(
    model: &TpnModel,
    h: &HiddenParams,
    source: &Trajectory,
    target: &Trajectory,
    t1: usize,
    t: usize,
) -> Result<Vec<Point2>> {
    extrapolate_len(model, h, source, target, t1, t, FIT_WINDOW)
}

/// [`extrapolate`] for hidden parameters fitted on a `window`-frame fit.
pub fn extrapolate_len(
    model: &TpnModel,
    h: &HiddenParams,
    source: &Trajectory,
    target: &Trajectory,
    t1: usize,
    t: usize,
    window: usize,
) -> Result<Vec<Point2>> {
    let t0 = check_ranges(source, target, t1, t, window)?;
    let r_a = motions_over(source, t0, t)?;
    let out = model.forward(h, &r_a);
    let anchor = target.at(t1).expect("range checked");
    let mut path = integrate(&out[t1 - t0 + 1..], anchor);
    path.remove(0);
    Ok(path)
}

/// Fit on `[t1 − 39, t1]`, then predict the target position at `t > t1`.
pub fn predict_trajectory(
    model: &TpnModel,
    source: &Trajectory,
    target: &Trajectory,
    t1: usize,
    t: usize,
    cfg: &FitConfig,
) -> Result<Point2> {
    if t <= t1 {
        return Err(Error::invalid("prediction time must follow the fit window"));
    }
    let fit = fit_window(model, source, target, t1, cfg)?;
    let path = extrapolate(model, &fit.hidden, source, target, t1, t)?;
    Ok(*path.last().expect("t > t1"))
}

/// Online variant: all weights fitted on the window with zero hidden
/// parameters; returns positions for `t1+1..=t`.
pub fn predict_online(
    model: &TpnModel,
    source: &Trajectory,
    target: &Trajectory,
    t1: usize,
    t: usize,
    iters: usize,
    rprop: RpropConfig,
) -> Result<Vec<Point2>> {
    let t0 = check_ranges(source, target, t1, t, FIT_WINDOW)?;
    let r_a = motions_over(source, t0, t1)?;
    let r_b = motions_over(target, t0, t1)?;
    let fitted = fit_online(model, &r_a, &r_b, iters, rprop)?;
    extrapolate(&fitted, &HiddenParams::zeros(&model.config), source, target, t1, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tpn::TpnConfig;

    fn model() -> TpnModel {
        let cfg = TpnConfig {
            encoder: 8,
            hidden: 8,
            decoder: 8,
            hp: 4,
        };
        TpnModel::new(cfg, 1.0, 11).unwrap()
    }

    fn line(start: usize, n: usize) -> Trajectory {
        Trajectory::new(start, (0..n).map(|i| Point2::new(i as f64, 0.5 * i as f64)).collect()).unwrap()
    }

    #[test]
    fn short_history_is_rejected() {
        let m = model();
        let s = line(0, 100);
        let target = line(10, 30);
        let err = predict_trajectory(&m, &s, &target, 38, 45, &FitConfig::default()).unwrap_err();
        assert!(matches!(err, Error::InsufficientHistory { needed: 40, .. }));
    }

    #[test]
    fn extrapolation_starts_after_anchor() {
        let m = model();
        let s = line(0, 100);
        let path = extrapolate(&m, &HiddenParams::zeros(&m.config), &s, &s, 50, 60).unwrap();
        assert_eq!(path.len(), 10);
    }
}
