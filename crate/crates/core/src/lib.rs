//! Multi-view single-object tracking with a shared correlation filter and a
//! trajectory prediction network that recovers views lost to occlusion.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ccf;
pub mod error;
pub mod eval;
pub mod fft;
pub mod geometry;
pub mod imaging;
pub mod sequence;
pub mod simulator;
pub mod tpn;
pub mod tracker;

pub use error::{Error, Result};
pub use geometry::{iou, BoundingBox, FrameLabel, MultiviewAnnotation, Point2, Trajectory, Visibility};
