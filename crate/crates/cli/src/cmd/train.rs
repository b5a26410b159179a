use std::path::PathBuf;

use clap::Args;
use mvtrack_core::simulator::read_jsonl;
use mvtrack_core::tpn::train::{initial_model, train_from, write_log_csv};
use mvtrack_core::tpn::TrainLogRow;

use crate::config::{ensure_parent, usage, ExperimentConfig};
use crate::Common;

#[derive(Args)]
pub struct TrainArgs {
    #[command(flatten)]
    common: Common,
    /// Trajectory pairs (JSON lines).
    #[arg(long)]
    data: PathBuf,
    /// Model snapshot to write.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-batch loss log; defaults to the snapshot path with a `.csv` extension.
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
}

pub fn run(a: TrainArgs) -> anyhow::Result<()> {
    let cfg = ExperimentConfig::load(a.common.config.as_deref())?;
    let seed = cfg.seed(a.common.seed)?;
    let out = cfg.out(a.out)?;
    let mut t = cfg.train;
    t.epochs = a.epochs.unwrap_or(t.epochs);
    t.validate().map_err(|e| usage(e.to_string()))?;
    let data = read_jsonl(&a.data)?;
    ensure_parent(&out)?;

    let model = initial_model(&data, &t, seed)?;
    println!(
        "training {} parameters on {} pairs for {} epochs (motion scale {:.3} px)",
        model.n_params(),
        data.len(),
        t.epochs,
        model.motion_scale
    );
    let mut rows = Vec::new();
    let model = train_from(model, &data, &t, seed, |r| {
        if rows.last().is_some_and(|p: &TrainLogRow| p.epoch != r.epoch) {
            print_epoch(&rows);
        }
        rows.push(*r);
    })?;
    if !rows.is_empty() {
        print_epoch(&rows);
    }
    model.save(&out)?;
    let log = a.log.unwrap_or_else(|| out.with_extension("csv"));
    ensure_parent(&log)?;
    write_log_csv(&rows, &log)?;
    println!("snapshot {}, log {}", out.display(), log.display());
    Ok(())
}

/// Mean losses of the most recent epoch in `rows`.
fn print_epoch(rows: &[TrainLogRow]) {
    let epoch = rows[rows.len() - 1].epoch;
    let last: Vec<_> = rows.iter().filter(|r| r.epoch == epoch).collect();
    let n = last.len() as f64;
    println!(
        "epoch {:>3}: stage-1 {:.4}  stage-2 {:.4}",
        epoch + 1,
        last.iter().map(|r| r.stage1_loss).sum::<f64>() / n,
        last.iter().map(|r| r.stage2_loss).sum::<f64>() / n
    );
}
