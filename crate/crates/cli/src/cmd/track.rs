use std::path::{Path, PathBuf};

use clap::Args;
use mvtrack_core::imaging::{load_pgm, GrayImage};
use mvtrack_core::sequence::{frame_path, FrameSource, SequenceDir};
use mvtrack_core::tpn::TpnModel;
use mvtrack_core::tracker::{write_track_log, CenterSource, TrackLogEntry, Tracker, TrackerConfig};
use mvtrack_core::{iou, MultiviewAnnotation};

use crate::config::{ensure_parent, usage, ExperimentConfig};
use crate::Common;

#[derive(Args)]
pub struct TrackArgs {
    #[command(flatten)]
    common: Common,
    /// Sequence directory written by `simulate`.
    #[arg(long)]
    seq: PathBuf,
    /// Trained prediction network; required unless `--no-tpn`.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Disable cross-view correction.
    #[arg(long)]
    no_tpn: bool,
    /// Track only the first N views.
    #[arg(long)]
    views: Option<usize>,
    /// Track only this view.
    #[arg(long)]
    single_view: Option<usize>,
    /// JSON-lines tracking log.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A sequence directory restricted to some of its views.
pub struct Selected {
    dir: PathBuf,
    views: Vec<usize>,
    pub annotations: MultiviewAnnotation,
}

impl Selected {
    pub fn open(dir: &Path, first: Option<usize>, single: Option<usize>) -> anyhow::Result<Self> {
        let seq = SequenceDir::open(dir)?;
        let n = seq.n_views();
        let views: Vec<usize> = match (first, single) {
            (_, Some(c)) if c >= n => return Err(usage(format!("view {c} not in a {n}-view sequence"))),
            (Some(k), Some(c)) if c >= k => return Err(usage(format!("view {c} is outside the first {k} views"))),
            (_, Some(c)) => vec![c],
            (Some(k), None) if k == 0 || k > n => return Err(usage(format!("--views must be in 1..={n}"))),
            (Some(k), None) => (0..k).collect(),
            (None, None) => (0..n).collect(),
        };
        let annotations = seq.annotations.select_views(&views)?;
        Ok(Self {
            dir: seq.dir,
            views,
            annotations,
        })
    }
}

impl FrameSource for Selected {
    fn n_views(&self) -> usize {
        self.views.len()
    }

    fn n_frames(&self) -> usize {
        self.annotations.n_frames()
    }

    fn frames(&self, t: usize) -> mvtrack_core::Result<Vec<GrayImage>> {
        self.views.iter().map(|&c| load_pgm(frame_path(&self.dir, c, t))).collect()
    }
}

/// Tracker settings and model for the `--no-tpn` / `--model` combination.
pub fn tracker_setup(
    cfg: &ExperimentConfig,
    no_tpn: bool,
    model: Option<&Path>,
) -> anyhow::Result<(TrackerConfig, Option<TpnModel>)> {
    let mut t = cfg.tracker.clone();
    t.use_tpn = t.use_tpn && !no_tpn;
    t.validate().map_err(|e| usage(e.to_string()))?;
    let model = match (t.use_tpn, model) {
        (true, Some(p)) => Some(TpnModel::load(p)?),
        (true, None) => return Err(usage("--model is required unless --no-tpn is given")),
        (false, _) => None,
    };
    Ok((t, model))
}

pub fn run(a: TrackArgs) -> anyhow::Result<()> {
    let cfg = ExperimentConfig::load(a.common.config.as_deref())?;
    let out = cfg.out(a.out)?;
    let (tcfg, model) = tracker_setup(&cfg, a.no_tpn, a.model.as_deref())?;
    let seq = Selected::open(&a.seq, a.views, a.single_view)?;
    let ann = &seq.annotations;

    let boxes = ann.boxes_at(0);
    let mut tracker = Tracker::init(&seq.frames(0)?, &boxes, tcfg, model)?;
    let mut log: Vec<TrackLogEntry> = boxes
        .iter()
        .enumerate()
        .map(|(c, &b)| TrackLogEntry {
            t: 0,
            view: c,
            bbox: b,
            q: 1.0,
            source: CenterSource::Cf,
        })
        .collect();
    let nv = seq.n_views();
    let mut overlap = vec![0.0; nv];
    let mut tally = vec![[0usize; 3]; nv];
    for t in 1..seq.n_frames() {
        for (c, r) in tracker.step(&seq.frames(t)?)?.into_iter().enumerate() {
            overlap[c] += iou(&r.bbox, &ann.label(t, c).bbox);
            tally[c][r.source as usize] += 1;
            log.push(TrackLogEntry {
                t,
                view: c,
                bbox: r.bbox,
                q: r.q,
                source: r.source,
            });
        }
    }
    ensure_parent(&out)?;
    write_track_log(&log, &out)?;
    let steps = (seq.n_frames() - 1).max(1) as f64;
    for c in 0..nv {
        println!(
            "view {}: mean IoU {:.3}, centers cf {} / tpn {} / momentum {}",
            seq.views[c],
            overlap[c] / steps,
            tally[c][0],
            tally[c][1],
            tally[c][2]
        );
    }
    println!("log {}", out.display());
    Ok(())
}
