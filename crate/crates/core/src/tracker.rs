//! Multi-view tracking loop: per-view multi-scale correlation with one shared
//! filter, periodic collaborative re-training, and cross-view correction of
//! views whose confidence drops below the threshold.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use image::GrayImage;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ccf::{
    correlate_spectrum, extract_features, gaussian_label, hann_window, label_sigma, FeatureConfig, FeatureMap,
    FilterBank, Response, Sample, SampleSet, solve_ccf,
};
use crate::error::{Error, Result};
use crate::fft::Fft2;
use crate::geometry::{BoundingBox, Point2, Trajectory};
use crate::imaging::crop_resample;
use crate::tpn::motion::motions_over;
use crate::tpn::predict::{extrapolate_len, fit_window_len};
use crate::tpn::{momentum_fallback, predict_fused, FitConfig, HiddenParams, TpnModel, FIT_WINDOW};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerConfig {
    /// Confidence threshold τ.
    pub tau: f64,
    pub update_period: usize,
    pub scales: Vec<f64>,
    /// Sample capacity per view.
    pub m_max: usize,
    pub features: FeatureConfig,
    pub lambda_f: f64,
    /// Per-round decay of stored sample weights.
    pub weight_decay: f64,
    /// Search region side relative to the box.
    pub roi_scale: f64,
    /// Bounds on the feature grid side, in cells.
    pub min_cells: usize,
    pub max_cells: usize,
    /// Correct unreliable views from reliable ones; off gives independent
    /// correlation-filter tracking with a shared filter.
    pub use_tpn: bool,
    pub fit: FitConfig,
    /// Shortest history accepted for a fit when fewer than 40 reliable
    /// frames precede the drop.
    pub min_fit_window: usize,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            tau: 0.5,
            update_period: 7,
            scales: vec![0.96, 0.98, 1.0, 1.02, 1.04],
            m_max: 20,
            features: FeatureConfig::default(),
            lambda_f: 1e-2,
            weight_decay: 0.98,
            roi_scale: 2.5,
            min_cells: 8,
            max_cells: 32,
            use_tpn: true,
            fit: FitConfig::default(),
            min_fit_window: 10,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::invalid("tau must lie in (0, 1)"));
        }
        if self.update_period == 0 {
            return Err(Error::invalid("update period must be at least 1"));
        }
        if !self.scales.contains(&1.0) || self.scales.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::invalid("scales must be positive and include 1.0"));
        }
        if self.m_max == 0 || self.min_cells == 0 || self.min_cells > self.max_cells {
            return Err(Error::invalid("bad sample capacity or grid bounds"));
        }
        if !(self.roi_scale >= 1.0) || !(self.lambda_f >= 0.0) {
            return Err(Error::invalid("roi scale must be ≥ 1 and lambda_f ≥ 0"));
        }
        Ok(())
    }
}

/// Where a view's center came from at one frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CenterSource {
    Cf,
    Tpn,
    Momentum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewResult {
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    pub q: f64,
    pub source: CenterSource,
    pub scale: f64,
}

/// One line of the tracking log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackLogEntry {
    pub t: usize,
    pub view: usize,
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    pub q: f64,
    pub source: CenterSource,
}

pub fn write_track_log(entries: &[TrackLogEntry], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for e in entries {
        out.push_str(&serde_json::to_string(e)?);
        out.push('\n');
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

pub fn read_track_log(path: impl AsRef<Path>) -> Result<Vec<TrackLogEntry>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Ok(serde_json::from_str(l)?))
        .collect()
}

/// `clamp(peak, 0, 1)`; labels peak at one so an exact match scores one.
pub fn confidence(response: &Response) -> f64 {
    let (peak, _, _) = response.peak();
    if peak.is_finite() {
        peak.clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// Index of the response with the highest peak; ties go to scale 1.0, then
/// to the smaller index.
pub fn select_scale(responses: &[Response], scales: &[f64]) -> Option<(usize, (f64, usize, usize))> {
    let mut best: Option<(usize, (f64, usize, usize))> = None;
    for (k, r) in responses.iter().enumerate() {
        let p = r.peak();
        best = match best {
            None => Some((k, p)),
            Some((bk, bp)) => {
                if p.0 > bp.0 || (p.0 == bp.0 && scales[k] == 1.0 && scales[bk] != 1.0) {
                    Some((k, p))
                } else {
                    Some((bk, bp))
                }
            }
        };
    }
    best
}

#[derive(Debug, Clone)]
struct ViewState {
    bbox: BoundingBox,
    traj: Trajectory,
    q: f64,
    /// Last frame at which the view was reliable.
    t1: usize,
    /// Box size at the last reliable frame.
    reliable_size: (f64, f64),
}

/// Full tracking state for one multi-view sequence.
pub struct Tracker {
    cfg: TrackerConfig,
    fft: Fft2,
    grid: (usize, usize),
    label: Vec<f64>,
    filter: FilterBank,
    samples: SampleSet,
    views: Vec<ViewState>,
    t: usize,
    updates: usize,
    tpn: Option<TpnModel>,
    hidden_cache: HashMap<(usize, usize, usize), Option<HiddenParams>>,
}

impl std::fmt::Debug for Tracker {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Tracker")
            .field("t", &self.t)
            .field("grid", &self.grid)
            .field("updates", &self.updates)
            .finish_non_exhaustive()
    }
}

fn in_image(p: Point2, img: &GrayImage) -> bool {
    p.u >= 0.0 && p.v >= 0.0 && p.u < img.width() as f64 && p.v < img.height() as f64
}

impl Tracker {
    /// Starts tracking from one box per view. `tpn` is required when
    /// `cfg.use_tpn` is set.
    pub fn init(
        frames: &[GrayImage],
        boxes: &[BoundingBox],
        cfg: TrackerConfig,
        tpn: Option<TpnModel>,
    ) -> Result<Self> {
        cfg.validate()?;
        if frames.is_empty() || frames.len() != boxes.len() {
            return Err(Error::invalid("need exactly one initial box per view"));
        }
        if cfg.use_tpn && tpn.is_none() {
            return Err(Error::invalid("cross-view correction needs a trained prediction model"));
        }
        for (c, (img, b)) in frames.iter().zip(boxes).enumerate() {
            if !in_image(b.center(), img) {
                return Err(Error::OutOfFrame { frame: 0, view: c });
            }
        }
        let n = boxes.len() as f64;
        let cs = cfg.features.cell_size.max(1) as f64;
        let side = |extent: f64| -> usize {
            ((cfg.roi_scale * extent / n / cs).round() as usize).clamp(cfg.min_cells, cfg.max_cells)
        };
        let grid = (
            side(boxes.iter().map(|b| b.h()).sum()),
            side(boxes.iter().map(|b| b.w()).sum()),
        );
        let fft = Fft2::new(grid.0, grid.1);
        let label = gaussian_label(grid.0, grid.1, label_sigma(grid.0, grid.1, cfg.roi_scale))?;
        let mut samples = SampleSet::new(boxes.len(), cfg.m_max);
        let mut views = Vec::with_capacity(boxes.len());
        for (c, (img, b)) in frames.iter().zip(boxes).enumerate() {
            let x = Self::features_at(&cfg, grid, img, b.center(), b.w(), b.h());
            samples.insert(Sample::new(&fft, x, &label, 1.0, c, 0)?);
            views.push(ViewState {
                bbox: *b,
                traj: Trajectory::single(0, b.center()),
                q: 1.0,
                t1: 0,
                reliable_size: (b.w(), b.h()),
            });
        }
        let filter = solve_ccf(&fft, &samples, cfg.lambda_f)?;
        Ok(Self {
            cfg,
            fft,
            grid,
            label,
            filter,
            samples,
            views,
            t: 0,
            updates: 0,
            tpn,
            hidden_cache: HashMap::new(),
        })
    }

    fn features_at(
        cfg: &TrackerConfig,
        grid: (usize, usize),
        img: &GrayImage,
        center: Point2,
        w: f64,
        h: f64,
    ) -> FeatureMap {
        let cs = cfg.features.cell_size.max(1);
        let patch = crop_resample(
            img,
            center,
            w * cfg.roi_scale,
            h * cfg.roi_scale,
            grid.1 * cs,
            grid.0 * cs,
        );
        hann_window(&extract_features(&patch, &cfg.features))
    }

    fn spectrum(&self, x: &FeatureMap) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(x.data.len());
        for d in 0..x.channels {
            out.extend(self.fft.forward_real(x.plane(d)));
        }
        out
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.cfg
    }

    pub fn frame(&self) -> usize {
        self.t
    }

    /// Feature grid `(rows, cols)`.
    pub fn grid(&self) -> (usize, usize) {
        self.grid
    }

    pub fn fft(&self) -> &Fft2 {
        &self.fft
    }

    pub fn label(&self) -> &[f64] {
        &self.label
    }

    pub fn filter(&self) -> &FilterBank {
        &self.filter
    }

    pub fn samples(&self) -> &SampleSet {
        &self.samples
    }

    /// Number of filter re-solves since init.
    pub fn update_count(&self) -> usize {
        self.updates
    }

    pub fn boxes(&self) -> Vec<BoundingBox> {
        self.views.iter().map(|v| v.bbox).collect()
    }

    pub fn confidences(&self) -> Vec<f64> {
        self.views.iter().map(|v| v.q).collect()
    }

    pub fn trajectory(&self, view: usize) -> &Trajectory {
        &self.views[view].traj
    }

    /// Processes the next synchronized frame of every view.
    pub fn step(&mut self, frames: &[GrayImage]) -> Result<Vec<ViewResult>> {
        if frames.len() != self.views.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} views", self.views.len()),
                actual: format!("{}", frames.len()),
            });
        }
        self.t += 1;
        let t = self.t;
        let (gh, gw) = (self.grid.0 as f64, self.grid.1 as f64);

        // correlation search in every view
        let mut results = Vec::with_capacity(frames.len());
        for (img, v) in frames.iter().zip(&self.views) {
            let prev = v.bbox;
            if !in_image(prev.center(), img) {
                results.push((prev, 0.0, 1.0));
                continue;
            }
            let mut responses = Vec::with_capacity(self.cfg.scales.len());
            for &s in &self.cfg.scales {
                let x = Self::features_at(&self.cfg, self.grid, img, prev.center(), prev.w() * s, prev.h() * s);
                responses.push(correlate_spectrum(&self.fft, &self.filter, &self.spectrum(&x)));
            }
            let (k, _) = select_scale(&responses, &self.cfg.scales).expect("scales are non-empty");
            let s = self.cfg.scales[k];
            let q = confidence(&responses[k]);
            let (dy, dx) = responses[k].subpixel_displacement();
            let (w, h) = (prev.w() * s, prev.h() * s);
            let center = prev.center() + Point2::new(dx * w * self.cfg.roi_scale / gw, dy * h * self.cfg.roi_scale / gh);
            results.push((BoundingBox::from_center(center, w, h)?, q, s));
        }

        let reliable: Vec<usize> = (0..results.len()).filter(|&c| results[c].1 >= self.cfg.tau).collect();
        let mut out = Vec::with_capacity(results.len());
        for (b, &(bbox, q, scale)) in results.iter().enumerate() {
            if q >= self.cfg.tau {
                let v = &mut self.views[b];
                v.bbox = bbox;
                v.q = q;
                v.t1 = t;
                v.reliable_size = (bbox.w(), bbox.h());
                v.traj.push(bbox.center());
                out.push(ViewResult {
                    bbox,
                    q,
                    source: CenterSource::Cf,
                    scale,
                });
                continue;
            }
            let (center, source) = if self.cfg.use_tpn {
                self.correct(b, bbox.center(), q, &results, &reliable)?
            } else {
                (bbox.center(), CenterSource::Cf)
            };
            let v = &mut self.views[b];
            let (w, h) = if self.cfg.use_tpn { v.reliable_size } else { (bbox.w(), bbox.h()) };
            let bbox = BoundingBox::from_center(center, w, h)?;
            v.bbox = bbox;
            v.q = q;
            v.traj.push(center);
            out.push(ViewResult {
                bbox,
                q,
                source,
                scale,
            });
        }

        if t.is_multiple_of(self.cfg.update_period) {
            self.samples.decay(self.cfg.weight_decay);
            for (c, r) in out.iter().enumerate() {
                if r.q >= self.cfg.tau {
                    let x = Self::features_at(&self.cfg, self.grid, &frames[c], r.bbox.center(), r.bbox.w(), r.bbox.h());
                    self.samples.insert(Sample::new(&self.fft, x, &self.label, r.q, c, t)?);
                }
            }
            self.filter = solve_ccf(&self.fft, &self.samples, self.cfg.lambda_f)?;
            self.updates += 1;
        }
        Ok(out)
    }

    /// Center for unreliable view `b`: fused cross-view prediction when any
    /// view is reliable, momentum when none is.
    fn correct(
        &mut self,
        b: usize,
        g_cf: Point2,
        q_b: f64,
        results: &[(BoundingBox, f64, f64)],
        reliable: &[usize],
    ) -> Result<(Point2, CenterSource)> {
        let t = self.t;
        let t1 = self.views[b].t1;
        let model = self.tpn.as_ref().expect("checked at init");
        let mut preds = Vec::new();
        for &c in reliable {
            // source history including the current frame's estimate
            let mut source = self.views[c].traj.clone();
            source.push(results[c].0.center());
            let target = &self.views[b].traj;
            let window = (t1 + 1).saturating_sub(target.start_time().max(source.start_time())).min(FIT_WINDOW);
            if window < self.cfg.min_fit_window.max(2) {
                continue;
            }
            let key = (b, c, t1);
            if !self.hidden_cache.contains_key(&key) {
                let h = match fit_window_len(model, &source, target, t1, window, &self.cfg.fit) {
                    Ok(fit) => Some(fit.hidden),
                    Err(Error::Diverged(_)) => None,
                    Err(e) => return Err(e),
                };
                self.hidden_cache.retain(|k, _| !(k.0 == b && k.1 == c));
                self.hidden_cache.insert(key, h);
            }
            if let Some(h) = &self.hidden_cache[&key] {
                let path = extrapolate_len(model, h, &source, target, t1, t, window)?;
                let p = *path.last().expect("t > t1");
                if p.is_finite() {
                    preds.push((results[c].1, p));
                }
            }
        }
        if !preds.is_empty() {
            return Ok((predict_fused(q_b, g_cf, &preds)?, CenterSource::Tpn));
        }
        if !reliable.is_empty() {
            // histories too short to fit yet: keep the correlation estimate
            return Ok((g_cf, CenterSource::Cf));
        }
        let v = &self.views[b];
        let r_last = if t1 > v.traj.start_time() {
            motions_over(&v.traj, t1, t1)?[0]
        } else {
            Point2::ZERO
        };
        Ok((momentum_fallback(v.traj.last(), r_last), CenterSource::Momentum))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confidence_examples() {
        let r = Response::from_real(2, 2, vec![0.0; 4]);
        assert_eq!(confidence(&r), 0.0);
        let r = Response::from_real(2, 2, vec![0.1, 0.37, -0.2, 0.0]);
        assert_eq!(confidence(&r), 0.37);
        let r = Response::from_real(1, 2, vec![1.7, 0.0]);
        assert_eq!(confidence(&r), 1.0);
    }

    #[test]
    fn scale_ties_prefer_unit_scale() {
        let m = Response::from_real(2, 2, vec![0.2, 0.9, 0.1, 0.0]);
        let (k, _) = select_scale(&[m.clone(), m.clone()], &[0.98, 1.0]).unwrap();
        assert_eq!(k, 1);
        let (k, _) = select_scale(&[m.clone(), m.clone()], &[0.98, 1.02]).unwrap();
        assert_eq!(k, 0);
        let (k, _) = select_scale(std::slice::from_ref(&m), &[1.3]).unwrap();
        assert_eq!(k, 0);
        assert!(select_scale(&[], &[]).is_none());
    }

    #[test]
    fn config_validation() {
        assert!(TrackerConfig::default().validate().is_ok());
        let bad = TrackerConfig {
            scales: vec![0.9, 1.1],
            ..TrackerConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrackerConfig {
            tau: 1.0,
            ..TrackerConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
