//! Trajectory-prediction benchmark: fit on the first 40 frames of a sampled
//! 90-frame window, predict the remaining 50, and average the pixel error at
//! each horizon.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::simulator::{Geometry, TrajectoryPair};
use crate::tpn::motion::{integrate, motions_over, smooth_steps};
use crate::tpn::predict::extrapolate_len;
use crate::tpn::{fit_hidden_batch, predict_online, FitConfig, RpropConfig, TpnModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    /// Trained network with per-window hidden parameters.
    #[serde(rename = "TPN-S")]
    TpnS,
    /// Network weights refitted on each window, hidden parameters at zero.
    #[serde(rename = "TPN-O")]
    TpnO,
    /// Last smoothed velocity of the target view, repeated.
    #[serde(rename = "Naive-S")]
    NaiveS,
    /// Source-view displacements copied onto the target view.
    #[serde(rename = "Naive-C")]
    NaiveC,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::TpnS, Method::TpnO, Method::NaiveS, Method::NaiveC];

    pub fn name(self) -> &'static str {
        match self {
            Method::TpnS => "TPN-S",
            Method::TpnO => "TPN-O",
            Method::NaiveS => "Naive-S",
            Method::NaiveC => "Naive-C",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub n_sim: usize,
    pub fit_window: usize,
    pub horizon: usize,
    pub fit: FitConfig,
    /// Weight-refit iterations per window for TPN-O.
    pub online_iters: usize,
    pub online_rprop: RpropConfig,
    /// Simulations fitted together in one lockstep batch.
    pub chunk: usize,
    pub methods: Vec<Method>,
    /// Randomly exchange which view is the source.
    pub swap_views: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            n_sim: 1000,
            fit_window: 40,
            horizon: 50,
            fit: FitConfig::default(),
            online_iters: 30,
            online_rprop: RpropConfig::default(),
            chunk: 50,
            methods: Method::ALL.to_vec(),
            swap_views: true,
        }
    }
}

/// Copies the source view's frame-to-frame steps onto the target view,
/// starting at `start`.
pub fn naive_c(source_steps: &[Point2], start: Point2) -> Vec<Point2> {
    let mut path = integrate(source_steps, start);
    path.remove(0);
    path
}

/// Repeats the smoothed velocity of the last four history points for
/// `horizon` frames.
pub fn naive_s(history: &[Point2], horizon: usize) -> Result<Vec<Point2>> {
    if history.len() < 4 {
        return Err(Error::InsufficientHistory {
            needed: 4,
            available: history.len(),
        });
    }
    let last = history[history.len() - 1];
    let r = smooth_steps(&history[history.len() - 4..]);
    Ok((1..=horizon).map(|k| last + r * k as f64).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub method: Method,
    /// Mean error at horizons `1..=horizon`, in pixels.
    pub errors: Vec<f64>,
    /// Mean of `errors`.
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchGroup {
    /// `"all"` or a geometry name.
    pub geometry: String,
    pub n_sim: usize,
    pub curves: Vec<Curve>,
}

impl BenchGroup {
    pub fn curve(&self, m: Method) -> Option<&Curve> {
        self.curves.iter().find(|c| c.method == m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub horizon: usize,
    pub fit_window: usize,
    pub n_sim: usize,
    pub seed: u64,
    pub groups: Vec<BenchGroup>,
}

impl BenchReport {
    pub fn group(&self, geometry: &str) -> Option<&BenchGroup> {
        self.groups.iter().find(|g| g.geometry == geometry)
    }

    /// Long format: `geometry,method,horizon,error`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("geometry,method,horizon,error\n");
        for g in &self.groups {
            for c in &g.curves {
                for (k, e) in c.errors.iter().enumerate() {
                    s.push_str(&format!("{},{},{},{}\n", g.geometry, c.method.name(), k + 1, e));
                }
            }
        }
        s
    }
}

#[derive(Debug, Clone, Copy)]
struct Sim {
    pair: usize,
    swapped: bool,
    t0: usize,
}

fn geometry_name(g: Geometry) -> &'static str {
    match g {
        Geometry::Random => "random",
        Geometry::Identity => "identity",
        Geometry::Opposite => "opposite",
    }
}

/// Per-simulation errors of every method, in `cfg.methods` order.
fn run_chunk(
    model: &TpnModel,
    pairs: &[TrajectoryPair],
    sims: &[Sim],
    cfg: &BenchConfig,
) -> Result<Vec<Vec<Vec<f64>>>> {
    let views = |s: &Sim| {
        let p = &pairs[s.pair];
        if s.swapped {
            (&p.view_b, &p.view_a)
        } else {
            (&p.view_a, &p.view_b)
        }
    };
    let t1 = |s: &Sim| s.t0 + cfg.fit_window - 1;

    let fits = if cfg.methods.contains(&Method::TpnS) {
        let windows = sims
            .iter()
            .map(|s| {
                let (a, b) = views(s);
                Ok((motions_over(a, s.t0, t1(s))?, motions_over(b, s.t0, t1(s))?))
            })
            .collect::<Result<Vec<_>>>()?;
        Some(fit_hidden_batch(model, &windows, &cfg.fit)?)
    } else {
        None
    };

    let mut out = Vec::with_capacity(sims.len());
    for (i, s) in sims.iter().enumerate() {
        let (a, b) = views(s);
        let t1 = t1(s);
        let t_end = t1 + cfg.horizon;
        let truth: Vec<Point2> = (t1 + 1..=t_end).map(|t| b.at(t).expect("window in range")).collect();
        let mut per_method = Vec::with_capacity(cfg.methods.len());
        for m in &cfg.methods {
            let path = match m {
                Method::TpnS => {
                    let fit = &fits.as_ref().expect("fitted above")[i];
                    extrapolate_len(model, &fit.hidden, a, b, t1, t_end, cfg.fit_window)?
                }
                Method::TpnO => predict_online(model, a, b, t1, t_end, cfg.online_iters, cfg.online_rprop)?,
                Method::NaiveS => naive_s(&b.points()[..=t1 - b.start_time()], cfg.horizon)?,
                Method::NaiveC => {
                    let steps: Vec<Point2> = (t1 + 1..=t_end)
                        .map(|t| a.at(t).expect("in range") - a.at(t - 1).expect("in range"))
                        .collect();
                    naive_c(&steps, b.at(t1).expect("in range"))
                }
            };
            per_method.push(path.iter().zip(&truth).map(|(p, q)| p.distance(q)).collect());
        }
        out.push(per_method);
    }
    Ok(out)
}

/// Runs `cfg.n_sim` seeded simulations over `pairs` and averages the error
/// curves, overall and per camera geometry. Independent chunks run on the
/// current rayon pool; results do not depend on the number of threads.
pub fn tpn_benchmark(model: &TpnModel, pairs: &[TrajectoryPair], cfg: &BenchConfig, seed: u64) -> Result<BenchReport> {
    let span = cfg.fit_window + cfg.horizon;
    if pairs.is_empty() || cfg.n_sim == 0 || cfg.methods.is_empty() {
        return Err(Error::invalid("benchmark needs pairs, simulations and methods"));
    }
    if cfg.fit_window < 2 || cfg.horizon == 0 {
        return Err(Error::invalid("fit window must cover two frames and the horizon one"));
    }
    if let Some(p) = pairs.iter().find(|p| p.len() < span || p.view_b.len() != p.len()) {
        return Err(Error::invalid(format!(
            "pair {} is shorter than the {span}-frame window",
            p.scenario_id
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sims: Vec<Sim> = (0..cfg.n_sim)
        .map(|_| {
            let pair = rng.random_range(0..pairs.len());
            let swapped = cfg.swap_views && rng.random_bool(0.5);
            let len = pairs[pair].len();
            // keep three earlier points for the first smoothing window when possible
            let last = len - span;
            let t0 = rng.random_range(3.min(last)..=last);
            Sim { pair, swapped, t0 }
        })
        .collect();

    let chunks: Vec<&[Sim]> = sims.chunks(cfg.chunk.max(1)).collect();
    let results: Vec<Vec<Vec<Vec<f64>>>> = chunks
        .par_iter()
        .map(|c| run_chunk(model, pairs, c, cfg))
        .collect::<Result<_>>()?;
    let errors: Vec<Vec<Vec<f64>>> = results.into_iter().flatten().collect();

    let mut names = vec!["all"];
    for p in pairs {
        let g = geometry_name(p.geometry);
        if !names.contains(&g) {
            names.push(g);
        }
    }
    // a single-geometry set needs no separate group
    if names.len() == 2 {
        names.pop();
    }
    let groups = names
        .into_iter()
        .filter_map(|g| {
            let members: Vec<usize> = (0..sims.len())
                .filter(|&i| g == "all" || geometry_name(pairs[sims[i].pair].geometry) == g)
                .collect();
            if members.is_empty() {
                return None;
            }
            let curves = cfg
                .methods
                .iter()
                .enumerate()
                .map(|(mi, &method)| {
                    let mut sum = vec![0.0; cfg.horizon];
                    for &i in &members {
                        for (k, e) in errors[i][mi].iter().enumerate() {
                            sum[k] += e;
                        }
                    }
                    let errors: Vec<f64> = sum.iter().map(|s| s / members.len() as f64).collect();
                    let mean = errors.iter().sum::<f64>() / errors.len() as f64;
                    Curve { method, errors, mean }
                })
                .collect();
            Some(BenchGroup {
                geometry: g.to_string(),
                n_sim: members.len(),
                curves,
            })
        })
        .collect();
    Ok(BenchReport {
        horizon: cfg.horizon,
        fit_window: cfg.fit_window,
        n_sim: cfg.n_sim,
        seed,
        groups,
    })
}
