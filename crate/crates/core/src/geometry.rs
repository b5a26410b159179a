//! Boxes, centers, trajectories and visibility labels shared by every other module.
//!
//! Coordinates are continuous pixels with the origin at the top-left image corner.
//! Frame indices are 0-based everywhere, including the on-disk annotation format.

use std::fs;
use std::ops::{Add, AddAssign, Mul, Sub};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box given by its top-left corner and extent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBox", into = "RawBox")]
pub struct BoundingBox {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
}

#[derive(Serialize, Deserialize)]
struct RawBox {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
}

impl TryFrom<RawBox> for BoundingBox {
    type Error = Error;

    fn try_from(r: RawBox) -> Result<Self> {
        BoundingBox::new(r.x, r.y, r.w, r.h)
    }
}

impl From<BoundingBox> for RawBox {
    fn from(b: BoundingBox) -> Self {
        RawBox {
            x: b.x,
            y: b.y,
            w: b.w,
            h: b.h,
        }
    }
}

impl BoundingBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        let finite = x.is_finite() && y.is_finite() && w.is_finite() && h.is_finite();
        if !finite || w <= 0.0 || h <= 0.0 {
            return Err(Error::InvalidBox { x, y, w, h });
        }
        Ok(Self { x, y, w, h })
    }

    /// Box of size `w`×`h` centered on `c`.
    pub fn from_center(c: Point2, w: f64, h: f64) -> Result<Self> {
        Self::new(c.u - w / 2.0, c.v - h / 2.0, w, h)
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn center(&self) -> Point2 {
        center(self)
    }

    /// Same extent, moved so that its center is `c`.
    pub fn recentered(&self, c: Point2) -> Self {
        Self {
            x: c.u - self.w / 2.0,
            y: c.v - self.h / 2.0,
            w: self.w,
            h: self.h,
        }
    }

    pub fn translated(&self, du: f64, dv: f64) -> Self {
        Self {
            x: self.x + du,
            y: self.y + dv,
            ..*self
        }
    }

    /// Scales the extent by `s` about the center.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::from_center(self.center(), self.w * s, self.h * s)
    }
}

/// Intersection over union of two boxes; 0 when they are disjoint.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let iw = (a.x + a.w).min(b.x + b.w) - a.x.max(b.x);
    let ih = (a.y + a.h).min(b.y + b.h) - a.y.max(b.y);
    if iw <= 0.0 || ih <= 0.0 {
        return 0.0;
    }
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

pub fn center(b: &BoundingBox) -> Point2 {
    Point2::new(b.x + b.w / 2.0, b.y + b.h / 2.0)
}

/// Image-plane point (`u` right, `v` down).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub u: f64,
    pub v: f64,
}

impl Point2 {
    pub const ZERO: Point2 = Point2 { u: 0.0, v: 0.0 };

    pub const fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn norm(&self) -> f64 {
        self.u.hypot(self.v)
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (*self - *other).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.u + o.u, self.v + o.v)
    }
}

impl AddAssign for Point2 {
    fn add_assign(&mut self, o: Point2) {
        self.u += o.u;
        self.v += o.v;
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.u - o.u, self.v - o.v)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.u * s, self.v * s)
    }
}

/// Centers of one view over a contiguous run of frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    start_time: usize,
    points: Vec<Point2>,
}

impl Trajectory {
    pub fn new(start_time: usize, points: Vec<Point2>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("trajectory needs at least one point"));
        }
        Ok(Self { start_time, points })
    }

    pub fn single(start_time: usize, p: Point2) -> Self {
        Self {
            start_time,
            points: vec![p],
        }
    }

    pub fn start_time(&self) -> usize {
        self.start_time
    }

    /// Frame index of the last point.
    pub fn end_time(&self) -> usize {
        self.start_time + self.points.len() - 1
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn last(&self) -> Point2 {
        *self.points.last().expect("trajectory is never empty")
    }

    pub fn push(&mut self, p: Point2) {
        self.points.push(p);
    }

    /// Replaces the most recent point.
    pub fn set_last(&mut self, p: Point2) {
        *self.points.last_mut().expect("trajectory is never empty") = p;
    }

    /// Point at absolute frame `t`, if covered.
    pub fn at(&self, t: usize) -> Option<Point2> {
        t.checked_sub(self.start_time)
            .and_then(|i| self.points.get(i))
            .copied()
    }

    /// Sub-trajectory over the inclusive frame range `[from, to]`.
    pub fn window(&self, from: usize, to: usize) -> Result<Trajectory> {
        if from > to || from < self.start_time || to > self.end_time() {
            return Err(Error::invalid(format!(
                "window [{from}, {to}] outside trajectory [{}, {}]",
                self.start_time,
                self.end_time()
            )));
        }
        let a = from - self.start_time;
        let b = to - self.start_time;
        Ok(Trajectory {
            start_time: from,
            points: self.points[a..=b].to_vec(),
        })
    }

    /// Per-frame differences `g_t - g_{t-1}`; one shorter than the trajectory.
    pub fn diffs(&self) -> Vec<Point2> {
        self.points.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Visibility {
    FullyVisible,
    PartiallyOccluded,
    FullyOccluded,
}

impl Visibility {
    /// Label for a given fraction of the target area hidden by nearer occluders.
    pub fn from_coverage(coverage: f64) -> Self {
        if coverage < 0.2 {
            Visibility::FullyVisible
        } else if coverage <= 0.8 {
            Visibility::PartiallyOccluded
        } else {
            Visibility::FullyOccluded
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameLabel {
    pub bbox: BoundingBox,
    pub visibility: Visibility,
}

/// Ground truth for a set of synchronized views.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiviewAnnotation {
    views: Vec<Vec<FrameLabel>>,
}

#[derive(Serialize, Deserialize)]
struct AnnotationEntry {
    frame: usize,
    x: f64,
    y: f64,
    w: f64,
    h: f64,
    visibility: Visibility,
}

#[derive(Serialize, Deserialize)]
struct AnnotationDoc {
    n_views: usize,
    n_frames: usize,
    views: Vec<Vec<AnnotationEntry>>,
}

impl MultiviewAnnotation {
    pub fn new(views: Vec<Vec<FrameLabel>>) -> Result<Self> {
        let n = views
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::invalid("annotation needs at least one view"))?;
        if views.iter().any(|v| v.len() != n) {
            return Err(Error::invalid("all views must have the same number of frames"));
        }
        Ok(Self { views })
    }

    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    pub fn n_frames(&self) -> usize {
        self.views[0].len()
    }

    pub fn label(&self, t: usize, view: usize) -> &FrameLabel {
        &self.views[view][t]
    }

    pub fn boxes_at(&self, t: usize) -> Vec<BoundingBox> {
        self.views.iter().map(|v| v[t].bbox).collect()
    }

    pub fn all_fully_visible(&self, t: usize) -> bool {
        self.views
            .iter()
            .all(|v| v[t].visibility == Visibility::FullyVisible)
    }

    /// Restricts the annotation to the listed views, in the given order.
    pub fn select_views(&self, views: &[usize]) -> Result<Self> {
        let picked = views
            .iter()
            .map(|&c| {
                self.views
                    .get(c)
                    .cloned()
                    .ok_or_else(|| Error::invalid(format!("no view {c} in annotation")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(picked)
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = AnnotationDoc {
            n_views: self.n_views(),
            n_frames: self.n_frames(),
            views: self
                .views
                .iter()
                .map(|v| {
                    v.iter()
                        .enumerate()
                        .map(|(t, l)| AnnotationEntry {
                            frame: t,
                            x: l.bbox.x,
                            y: l.bbox.y,
                            w: l.bbox.w,
                            h: l.bbox.h,
                            visibility: l.visibility,
                        })
                        .collect()
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: AnnotationDoc = serde_json::from_str(s)?;
        if doc.views.len() != doc.n_views {
            return Err(Error::invalid("n_views does not match the number of view arrays"));
        }
        let mut views = Vec::with_capacity(doc.n_views);
        for entries in doc.views {
            if entries.len() != doc.n_frames {
                return Err(Error::invalid("view frame count does not match n_frames"));
            }
            let mut labels = Vec::with_capacity(entries.len());
            for (t, e) in entries.into_iter().enumerate() {
                if e.frame != t {
                    return Err(Error::invalid(format!(
                        "frames must be contiguous from 0; found {} at position {t}",
                        e.frame
                    )));
                }
                labels.push(FrameLabel {
                    bbox: BoundingBox::new(e.x, e.y, e.w, e.h)?,
                    visibility: e.visibility,
                });
            }
            views.push(labels);
        }
        Self::new(views)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}
