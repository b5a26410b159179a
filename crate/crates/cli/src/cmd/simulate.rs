use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use mvtrack_core::sequence::write_sequence;
use mvtrack_core::simulator::{generate_scene, generate_split, write_jsonl};
use mvtrack_core::Visibility;

use crate::config::ExperimentConfig;
use crate::Common;

#[derive(Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    views: Option<usize>,
    #[arg(long)]
    frames: Option<usize>,
    /// Number of randomly placed occlusion events.
    #[arg(long)]
    occluders: Option<usize>,
    /// Write `train.jsonl` and `test.jsonl` trajectory pairs instead of a sequence.
    #[arg(long)]
    trajectories: bool,
    /// Scenario counts for `--trajectories`.
    #[arg(long)]
    train_scenarios: Option<usize>,
    #[arg(long)]
    test_scenarios: Option<usize>,
}

pub fn run(a: SimulateArgs) -> anyhow::Result<()> {
    let cfg = ExperimentConfig::load(a.common.config.as_deref())?;
    let seed = cfg.seed(a.common.seed)?;
    let out = cfg.out(a.out)?;
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;

    if a.trajectories {
        let mut d = cfg.dataset;
        d.n_frames = a.frames.unwrap_or(d.n_frames);
        d.train_scenarios = a.train_scenarios.unwrap_or(d.train_scenarios);
        d.test_scenarios = a.test_scenarios.unwrap_or(d.test_scenarios);
        let (train, test) = generate_split(&d, seed)?;
        write_jsonl(&train, out.join("train.jsonl"))?;
        write_jsonl(&test, out.join("test.jsonl"))?;
        println!(
            "wrote {} training and {} test pairs of {} frames to {}",
            train.len(),
            test.len(),
            d.n_frames,
            out.display()
        );
        return Ok(());
    }

    let mut s = cfg.scene;
    s.n_views = a.views.unwrap_or(s.n_views);
    s.n_frames = a.frames.unwrap_or(s.n_frames);
    s.occluders = a.occluders.unwrap_or(s.occluders);
    let scene = generate_scene(&s, seed)?;
    let ann = write_sequence(&scene, &out)?;
    println!(
        "{} views x {} frames written to {}",
        ann.n_views(),
        ann.n_frames(),
        out.display()
    );
    for c in 0..ann.n_views() {
        let count = |v: Visibility| (0..ann.n_frames()).filter(|&t| ann.label(t, c).visibility == v).count();
        let (p, f) = (count(Visibility::PartiallyOccluded), count(Visibility::FullyOccluded));
        println!(
            "view {c}: {:.1}% occluded ({p} partial, {f} full)",
            100.0 * (p + f) as f64 / ann.n_frames() as f64
        );
    }
    Ok(())
}
