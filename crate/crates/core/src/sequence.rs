//! Multi-view image sequences: rendered on demand from a scene, or stored as
//! a directory of PGM frames next to the scene and annotation JSON.
//!
//! Directory layout: `scene.json`, `annotations.json`, and one folder per view
//! named `view{c}` holding `{t:05}.pgm`.

use std::fs;
use std::path::{Path, PathBuf};

use image::GrayImage;

use crate::error::{Error, Result};
use crate::geometry::MultiviewAnnotation;
use crate::imaging::{load_pgm, save_pgm};
use crate::simulator::{Renderer, SceneSpec};

pub trait FrameSource {
    fn n_views(&self) -> usize;
    fn n_frames(&self) -> usize;
    /// One image per view at frame `t`.
    fn frames(&self, t: usize) -> Result<Vec<GrayImage>>;
}

/// Frames rendered from a scene as they are requested.
pub struct SceneFrames<'a> {
    scene: &'a SceneSpec,
    renderer: Renderer<'a>,
}

impl<'a> SceneFrames<'a> {
    pub fn new(scene: &'a SceneSpec) -> Self {
        Self {
            scene,
            renderer: Renderer::new(scene),
        }
    }
}

impl FrameSource for SceneFrames<'_> {
    fn n_views(&self) -> usize {
        self.scene.n_views()
    }

    fn n_frames(&self) -> usize {
        self.scene.n_frames
    }

    fn frames(&self, t: usize) -> Result<Vec<GrayImage>> {
        if t >= self.scene.n_frames {
            return Err(Error::invalid(format!("frame {t} past the end of the scene")));
        }
        Ok((0..self.n_views()).map(|c| self.renderer.render(t, c)).collect())
    }
}

pub fn frame_path(dir: &Path, view: usize, t: usize) -> PathBuf {
    dir.join(format!("view{view}")).join(format!("{t:05}.pgm"))
}

/// Renders every frame of `scene` into `dir` with its annotations.
pub fn write_sequence(scene: &SceneSpec, dir: impl AsRef<Path>) -> Result<MultiviewAnnotation> {
    let dir = dir.as_ref();
    let ann = scene.annotate()?;
    for c in 0..scene.n_views() {
        let vdir = dir.join(format!("view{c}"));
        fs::create_dir_all(&vdir).map_err(|e| Error::io(&vdir, e))?;
    }
    scene.save(dir.join("scene.json"))?;
    ann.save(dir.join("annotations.json"))?;
    let r = Renderer::new(scene);
    for t in 0..scene.n_frames {
        for c in 0..scene.n_views() {
            save_pgm(&r.render(t, c), frame_path(dir, c, t))?;
        }
    }
    Ok(ann)
}

/// A sequence directory written by [`write_sequence`] (or laid out the same way).
#[derive(Debug, Clone)]
pub struct SequenceDir {
    pub dir: PathBuf,
    pub annotations: MultiviewAnnotation,
}

impl SequenceDir {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        let annotations = MultiviewAnnotation::load(dir.join("annotations.json"))?;
        for c in 0..annotations.n_views() {
            let p = frame_path(&dir, c, 0);
            if !p.exists() {
                return Err(Error::invalid(format!("missing frame {}", p.display())));
            }
        }
        Ok(Self { dir, annotations })
    }
}

impl FrameSource for SequenceDir {
    fn n_views(&self) -> usize {
        self.annotations.n_views()
    }

    fn n_frames(&self) -> usize {
        self.annotations.n_frames()
    }

    fn frames(&self, t: usize) -> Result<Vec<GrayImage>> {
        (0..self.n_views()).map(|c| load_pgm(frame_path(&self.dir, c, t))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{generate_scene, SceneConfig};

    #[test]
    fn directory_round_trip() {
        let cfg = SceneConfig {
            n_frames: 3,
            n_views: 2,
            ..SceneConfig::default()
        };
        let scene = generate_scene(&cfg, 2).unwrap();
        let tmp = tempfile::tempdir().unwrap();
        let ann = write_sequence(&scene, tmp.path()).unwrap();
        let seq = SequenceDir::open(tmp.path()).unwrap();
        assert_eq!(seq.annotations, ann);
        assert_eq!((seq.n_views(), seq.n_frames()), (2, 3));
        let live = SceneFrames::new(&scene);
        for t in 0..3 {
            assert_eq!(seq.frames(t).unwrap(), live.frames(t).unwrap());
        }
        assert!(live.frames(3).is_err());
    }
}
