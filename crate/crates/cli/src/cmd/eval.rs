use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{ArgGroup, Args};
use mvtrack_core::eval::plot::{ar_plot, error_curves};
use mvtrack_core::eval::{
    overall_by_tracker, parse_clip_table, run_with_reinit, run_without_reinit, tpn_benchmark, MetricReport,
    Protocol, RunLog,
};
use mvtrack_core::iou;
use mvtrack_core::simulator::read_jsonl;
use mvtrack_core::tpn::TpnModel;
use mvtrack_core::tracker::{read_track_log, Tracker};
use rayon::prelude::*;

use super::track::{tracker_setup, Selected};
use crate::config::{usage, ExperimentConfig};
use crate::Common;

#[derive(Args)]
#[command(group(ArgGroup::new("mode").required(true).args(["reinit", "no_reinit", "tpn_bench", "table"])))]
pub struct EvalArgs {
    #[command(flatten)]
    common: Common,
    /// Accuracy and robustness with re-initialization after failures.
    #[arg(long)]
    reinit: bool,
    /// Success rate of a single pass without re-initialization.
    #[arg(long)]
    no_reinit: bool,
    /// Trajectory prediction benchmark on a pair dataset.
    #[arg(long)]
    tpn_bench: bool,
    /// Per-tracker weighted accuracy from a `tracker,clip,frames,accuracy` CSV.
    #[arg(long, value_name = "FILE")]
    table: Option<PathBuf>,
    /// Sequence directories, one per scene.
    #[arg(long, num_args = 1..)]
    seq: Vec<PathBuf>,
    /// Existing tracking logs, paired in order with `--seq` (no-reinit only).
    #[arg(long, num_args = 1..)]
    log: Vec<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    no_tpn: bool,
    #[arg(long)]
    views: Option<usize>,
    #[arg(long)]
    single_view: Option<usize>,
    /// Runs per scene.
    #[arg(long)]
    runs: Option<usize>,
    /// Pair dataset for the benchmark.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Benchmark simulations.
    #[arg(long)]
    sims: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(a: EvalArgs) -> anyhow::Result<()> {
    if let Some(path) = &a.table {
        return table(path);
    }
    let cfg = ExperimentConfig::load(a.common.config.as_deref())?;
    let out = cfg.out(a.out.clone())?;
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    if a.tpn_bench {
        bench(&a, &cfg, &out)
    } else {
        tracking(&a, &cfg, &out)
    }
}

fn table(path: &Path) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let rows = parse_clip_table(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    if rows.is_empty() {
        return Err(usage(format!("{}: no rows", path.display())));
    }
    for (name, acc) in overall_by_tracker(&rows) {
        println!("{name}: {acc:.3}");
    }
    Ok(())
}

fn scene_name(dir: &Path) -> String {
    dir.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string())
}

/// Rebuilds per-frame overlaps from a saved tracking log.
fn log_run(seq: &Selected, path: &Path) -> anyhow::Result<RunLog> {
    let ann = &seq.annotations;
    let (n, nv) = (ann.n_frames(), ann.n_views());
    let mut ious: Vec<Vec<Option<f64>>> = vec![vec![None; nv]; n.saturating_sub(1)];
    for e in read_track_log(path)? {
        if e.t == 0 {
            continue;
        }
        if e.t >= n || e.view >= nv {
            return Err(usage(format!("{}: entry t={} view={} outside the sequence", path.display(), e.t, e.view)));
        }
        ious[e.t - 1][e.view] = Some(iou(&e.bbox, &ann.label(e.t, e.view).bbox));
    }
    let ious = ious
        .into_iter()
        .enumerate()
        .map(|(i, row)| {
            row.into_iter()
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| usage(format!("{}: frame {} is incomplete", path.display(), i + 1)))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    Ok(RunLog::from_ious(ious)?)
}

fn tracking(a: &EvalArgs, cfg: &ExperimentConfig, out: &Path) -> anyhow::Result<()> {
    if a.seq.is_empty() {
        return Err(usage("--seq needs at least one sequence directory"));
    }
    let protocol = if a.reinit { Protocol::Reinit } else { Protocol::NoReinit };
    let from_logs = !a.log.is_empty();
    if from_logs && (a.reinit || a.log.len() != a.seq.len()) {
        return Err(usage("--log goes with --no-reinit and needs one file per --seq"));
    }
    let runs = a.runs.unwrap_or(cfg.eval.runs);
    if runs == 0 {
        return Err(usage("--runs must be at least 1"));
    }
    let (tcfg, model) = if from_logs {
        (cfg.tracker.clone(), None)
    } else {
        tracker_setup(cfg, a.no_tpn, a.model.as_deref())?
    };
    let scenes = a
        .seq
        .par_iter()
        .enumerate()
        .map(|(i, dir)| -> anyhow::Result<(String, Vec<RunLog>)> {
            let seq = Selected::open(dir, a.views, a.single_view)?;
            let ann = &seq.annotations;
            let logs = if from_logs {
                vec![log_run(&seq, &a.log[i])?]
            } else {
                let make = |f: &[_], b: &[_]| Tracker::init(f, b, tcfg.clone(), model.clone());
                (0..runs)
                    .map(|_| match protocol {
                        Protocol::Reinit => run_with_reinit(make, &seq, ann),
                        Protocol::NoReinit => run_without_reinit(make, &seq, ann),
                    })
                    .collect::<mvtrack_core::Result<Vec<_>>>()?
            };
            Ok((scene_name(dir), logs))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let report = MetricReport::from_runs(protocol, cfg.eval.s, &scenes)?;

    std::fs::write(out.join("report.json"), serde_json::to_string_pretty(&report)?)?;
    std::fs::write(out.join("report.csv"), report.to_csv())?;
    let label = if from_logs {
        "log".to_string()
    } else if tcfg.use_tpn {
        "with prediction".to_string()
    } else {
        "without prediction".to_string()
    };
    std::fs::write(out.join("ar.svg"), ar_plot(&[(label, &report)]))?;

    println!("{} scene(s), {} run(s) each", report.scenes.len(), report.runs);
    if runs > 1 && !from_logs {
        println!("note: tracking is deterministic, so repeated runs give identical logs");
    }
    for m in &report.scenes {
        match protocol {
            Protocol::Reinit => println!(
                "{}: accuracy {} failures {} robustness {:.3}",
                m.scene,
                m.accuracy.map_or("-".into(), |x| format!("{x:.3}")),
                m.failures,
                m.robustness
            ),
            Protocol::NoReinit => println!("{}: success {:.3}", m.scene, m.success_rate),
        }
    }
    match protocol {
        Protocol::Reinit => println!(
            "overall: accuracy {} robustness {:.3}",
            report.overall_accuracy.map_or("-".into(), |x| format!("{x:.3}")),
            report.overall_robustness
        ),
        Protocol::NoReinit => println!("overall: success {:.3}", report.mean_success_rate),
    }
    if !report.excluded.is_empty() {
        println!("no valid frames: {}", report.excluded.join(", "));
    }
    println!("report {}", out.display());
    Ok(())
}

fn bench(a: &EvalArgs, cfg: &ExperimentConfig, out: &Path) -> anyhow::Result<()> {
    let model = a.model.as_deref().ok_or_else(|| usage("--tpn-bench needs --model"))?;
    let data = a.data.as_deref().ok_or_else(|| usage("--tpn-bench needs --data"))?;
    let seed = cfg.seed(a.common.seed)?;
    let model = TpnModel::load(model)?;
    let pairs = read_jsonl(data)?;
    let mut bcfg = cfg.bench.clone();
    bcfg.n_sim = a.sims.unwrap_or(bcfg.n_sim);
    let report = tpn_benchmark(&model, &pairs, &bcfg, seed)?;

    std::fs::write(out.join("bench.json"), serde_json::to_string_pretty(&report)?)?;
    std::fs::write(out.join("bench.csv"), report.to_csv())?;
    for g in &report.groups {
        std::fs::write(out.join(format!("errors_{}.svg", g.geometry)), error_curves(g))?;
        let summary: Vec<String> = g
            .curves
            .iter()
            .map(|c| format!("{} {:.2}", c.method.name(), c.mean))
            .collect();
        println!("{} ({} sims): {}", g.geometry, g.n_sim, summary.join(", "));
    }
    println!("report {}", out.display());
    Ok(())
}
