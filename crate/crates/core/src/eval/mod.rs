//! Tracking metrics (accuracy and robustness under re-initialization, success
//! rate without it), the trajectory-prediction benchmark, and report output.

pub mod bench;
pub mod plot;

use image::GrayImage;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{iou, BoundingBox, MultiviewAnnotation};
use crate::sequence::FrameSource;
use crate::tracker::Tracker;

pub use bench::{naive_c, naive_s, tpn_benchmark, BenchConfig, BenchReport, Method};

/// Anything that turns the next synchronized frames into one box per view.
pub trait MultiviewTracker {
    fn track(&mut self, frames: &[GrayImage]) -> Result<Vec<BoundingBox>>;
}

impl MultiviewTracker for Tracker {
    fn track(&mut self, frames: &[GrayImage]) -> Result<Vec<BoundingBox>> {
        Ok(self.step(frames)?.into_iter().map(|r| r.bbox).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameIou {
    pub t: usize,
    pub iou: Vec<f64>,
}

impl FrameIou {
    pub fn is_valid(&self) -> bool {
        self.iou.iter().all(|&a| a > 0.0)
    }
}

/// Per-frame overlaps of one run over one sequence. Only frames produced by
/// the tracker are logged; initialization frames and frames skipped while
/// waiting to re-initialize are not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub n_views: usize,
    /// Frames the tracker was asked to follow (sequence length minus the first frame).
    pub length: usize,
    pub frames: Vec<FrameIou>,
    /// Frames at which the tracker was re-initialized.
    pub reinits: Vec<usize>,
    pub failures: usize,
    /// Set when a failure left no fully visible frame to restart from.
    pub terminated_at: Option<usize>,
}

impl RunLog {
    /// Log of a run without re-initialization over frames `1..=ious.len()`.
    pub fn from_ious(ious: Vec<Vec<f64>>) -> Result<Self> {
        let n_views = ious.first().map_or(0, Vec::len);
        if n_views == 0 || ious.iter().any(|f| f.len() != n_views) {
            return Err(Error::invalid("every frame needs one IoU per view"));
        }
        if ious.iter().flatten().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::invalid("IoU values must lie in [0, 1]"));
        }
        let failures = ious.iter().filter(|f| f.iter().any(|&a| a <= 0.0)).count();
        Ok(Self {
            n_views,
            length: ious.len(),
            frames: ious
                .into_iter()
                .enumerate()
                .map(|(i, iou)| FrameIou { t: i + 1, iou })
                .collect(),
            reinits: Vec::new(),
            failures,
            terminated_at: None,
        })
    }

    /// `V`: frames where every view overlaps the ground truth.
    pub fn valid_frames(&self) -> impl Iterator<Item = &FrameIou> {
        self.frames.iter().filter(|f| f.is_valid())
    }

    pub fn n_valid(&self) -> usize {
        self.valid_frames().count()
    }
}

fn ious(boxes: &[BoundingBox], ann: &MultiviewAnnotation, t: usize) -> Result<Vec<f64>> {
    if boxes.len() != ann.n_views() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} boxes", ann.n_views()),
            actual: format!("{}", boxes.len()),
        });
    }
    Ok(boxes.iter().enumerate().map(|(c, b)| iou(b, &ann.label(t, c).bbox)).collect())
}

fn check_source(source: &dyn FrameSource, ann: &MultiviewAnnotation) -> Result<()> {
    if source.n_views() != ann.n_views() || source.n_frames() != ann.n_frames() {
        return Err(Error::invalid("frames and annotations disagree on views or length"));
    }
    if ann.n_frames() < 2 {
        return Err(Error::invalid("need at least two frames to track"));
    }
    Ok(())
}

/// Runs with re-initialization: after any view's IoU reaches zero, every
/// view is reset to ground truth at the next frame where all views are fully
/// visible.
pub fn run_with_reinit<T: MultiviewTracker>(
    mut factory: impl FnMut(&[GrayImage], &[BoundingBox]) -> Result<T>,
    source: &dyn FrameSource,
    ann: &MultiviewAnnotation,
) -> Result<RunLog> {
    check_source(source, ann)?;
    let n = ann.n_frames();
    let mut log = RunLog {
        n_views: ann.n_views(),
        length: n - 1,
        frames: Vec::new(),
        reinits: Vec::new(),
        failures: 0,
        terminated_at: None,
    };
    let mut tracker = factory(&source.frames(0)?, &ann.boxes_at(0))?;
    let mut t = 1;
    while t < n {
        let boxes = tracker.track(&source.frames(t)?)?;
        let frame = FrameIou {
            t,
            iou: ious(&boxes, ann, t)?,
        };
        let failed = !frame.is_valid();
        log.frames.push(frame);
        if !failed {
            t += 1;
            continue;
        }
        log.failures += 1;
        match (t + 1..n).find(|&r| ann.all_fully_visible(r)) {
            Some(r) => {
                tracker = factory(&source.frames(r)?, &ann.boxes_at(r))?;
                log.reinits.push(r);
                t = r + 1;
            }
            None => {
                log.terminated_at = Some(t);
                break;
            }
        }
    }
    Ok(log)
}

/// Runs once through the whole sequence from the first frame's boxes.
pub fn run_without_reinit<T: MultiviewTracker>(
    factory: impl FnOnce(&[GrayImage], &[BoundingBox]) -> Result<T>,
    source: &dyn FrameSource,
    ann: &MultiviewAnnotation,
) -> Result<RunLog> {
    check_source(source, ann)?;
    let mut tracker = factory(&source.frames(0)?, &ann.boxes_at(0))?;
    let mut all = Vec::with_capacity(ann.n_frames() - 1);
    for t in 1..ann.n_frames() {
        let boxes = tracker.track(&source.frames(t)?)?;
        all.push(ious(&boxes, ann, t)?);
    }
    RunLog::from_ious(all)
}

/// Mean IoU over valid frames and views; `None` when no frame is valid.
pub fn accuracy(log: &RunLog) -> Option<f64> {
    let n = log.n_valid();
    if n == 0 {
        return None;
    }
    let sum: f64 = log.valid_frames().flat_map(|f| f.iou.iter()).sum();
    Some(sum / (n * log.n_views) as f64)
}

/// `Σ w_i ρ_i / Σ w_i`; `None` when the weights sum to zero.
pub fn weighted_accuracy(scenes: &[(f64, f64)]) -> Option<f64> {
    let w: f64 = scenes.iter().map(|(_, w)| w).sum();
    (w > 0.0).then(|| scenes.iter().map(|(rho, w)| rho * w).sum::<f64>() / w)
}

/// Probability of surviving `s` frames without failure, `exp(−s·F/N)`.
pub fn robustness(failures: usize, frames: usize, s: usize) -> Result<f64> {
    if frames == 0 {
        return Err(Error::invalid("robustness needs at least one evaluated frame"));
    }
    if s == 0 {
        return Err(Error::invalid("survival horizon must be at least one frame"));
    }
    Ok((-(s as f64) * failures as f64 / frames as f64).exp())
}

/// `|V| / l` for a run without re-initialization.
pub fn success_rate(log: &RunLog) -> f64 {
    if log.length == 0 {
        return 0.0;
    }
    log.n_valid() as f64 / log.length as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    Reinit,
    NoReinit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneMetrics {
    pub scene: String,
    pub runs: usize,
    /// Mean over runs of the per-run accuracy; `None` if no run had a valid frame.
    pub accuracy: Option<f64>,
    /// Mean valid-frame count over runs, the scene's weight in the overall accuracy.
    pub valid_frames: f64,
    pub length: usize,
    pub failures: usize,
    /// Total frames evaluated over all runs.
    pub frames: usize,
    pub robustness: f64,
    pub success_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub protocol: Protocol,
    pub runs: usize,
    /// Survival horizon `S` of the robustness figure.
    pub s: usize,
    pub scenes: Vec<SceneMetrics>,
    pub overall_accuracy: Option<f64>,
    pub overall_robustness: f64,
    pub mean_success_rate: f64,
    /// Scenes left out of the overall accuracy for lack of valid frames.
    pub excluded: Vec<String>,
}

impl MetricReport {
    /// Summarizes several runs per scene.
    pub fn from_runs(protocol: Protocol, s: usize, scenes: &[(String, Vec<RunLog>)]) -> Result<Self> {
        if scenes.is_empty() || scenes.iter().any(|(_, runs)| runs.is_empty()) {
            return Err(Error::invalid("every scene needs at least one run"));
        }
        let runs = scenes[0].1.len();
        let mut out = Vec::with_capacity(scenes.len());
        let mut excluded = Vec::new();
        let (mut f_all, mut n_all) = (0, 0);
        for (name, logs) in scenes {
            let acc: Vec<f64> = logs.iter().filter_map(accuracy).collect();
            let failures: usize = logs.iter().map(|l| l.failures).sum();
            let frames: usize = logs.iter().map(|l| l.length).sum();
            f_all += failures;
            n_all += frames;
            let m = SceneMetrics {
                scene: name.clone(),
                runs: logs.len(),
                accuracy: (!acc.is_empty()).then(|| acc.iter().sum::<f64>() / acc.len() as f64),
                valid_frames: logs.iter().map(|l| l.n_valid() as f64).sum::<f64>() / logs.len() as f64,
                length: logs[0].length,
                failures,
                frames,
                robustness: robustness(failures, frames, s)?,
                success_rate: logs.iter().map(success_rate).sum::<f64>() / logs.len() as f64,
            };
            if m.accuracy.is_none() {
                excluded.push(name.clone());
            }
            out.push(m);
        }
        let weighted: Vec<(f64, f64)> = out.iter().filter_map(|m| m.accuracy.map(|a| (a, m.valid_frames))).collect();
        Ok(Self {
            protocol,
            runs,
            s,
            overall_accuracy: weighted_accuracy(&weighted),
            overall_robustness: robustness(f_all, n_all, s)?,
            mean_success_rate: out.iter().map(|m| m.success_rate).sum::<f64>() / out.len() as f64,
            scenes: out,
            excluded,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("scene,runs,accuracy,valid_frames,length,failures,frames,robustness,success_rate\n");
        for m in &self.scenes {
            let acc = m.accuracy.map_or(String::new(), |a| a.to_string());
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                m.scene, m.runs, acc, m.valid_frames, m.length, m.failures, m.frames, m.robustness, m.success_rate
            ));
        }
        let acc = self.overall_accuracy.map_or(String::new(), |a| a.to_string());
        s.push_str(&format!(
            "overall,{},{},,,,,{},{}\n",
            self.runs, acc, self.overall_robustness, self.mean_success_rate
        ));
        s
    }
}

/// One row of a per-clip accuracy table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipAccuracy {
    pub tracker: String,
    pub clip: String,
    pub frames: f64,
    pub accuracy: f64,
}

/// Parses `tracker,clip,frames,accuracy` rows (a header line is skipped).
pub fn parse_clip_table(text: &str) -> Result<Vec<ClipAccuracy>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 4 {
            return Err(Error::invalid(format!("line {}: expected 4 columns", i + 1)));
        }
        let (frames, accuracy) = match (cols[2].parse::<f64>(), cols[3].parse::<f64>()) {
            (Ok(f), Ok(a)) => (f, a),
            _ if rows.is_empty() && i == 0 => continue,
            _ => return Err(Error::invalid(format!("line {}: frames and accuracy must be numbers", i + 1))),
        };
        rows.push(ClipAccuracy {
            tracker: cols[0].to_string(),
            clip: cols[1].to_string(),
            frames,
            accuracy,
        });
    }
    Ok(rows)
}

/// Frame-weighted overall accuracy per tracker, in order of first appearance.
pub fn overall_by_tracker(rows: &[ClipAccuracy]) -> Vec<(String, f64)> {
    let mut names: Vec<&str> = Vec::new();
    for r in rows {
        if !names.contains(&r.tracker.as_str()) {
            names.push(&r.tracker);
        }
    }
    names
        .into_iter()
        .filter_map(|n| {
            let pairs: Vec<(f64, f64)> = rows.iter().filter(|r| r.tracker == n).map(|r| (r.accuracy, r.frames)).collect();
            weighted_accuracy(&pairs).map(|a| (n.to_string(), a))
        })
        .collect()
}
