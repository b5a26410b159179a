//! Scalar, one-sequence-at-a-time reference for the prediction network and
//! its two training losses. Parameter order: encoder (W, b), layer 1 (Wx, Wh,
//! b), layer 2 (Wx, Wh, b), decoder (W over [h2; h_p], b), output (W, b);
//! matrices row-major out × in.

pub struct Sizes {
    pub enc: usize,
    pub hid: usize,
    pub dec: usize,
    pub hp: usize,
}

struct Reader<'a> {
    theta: &'a [f64],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> &'a [f64] {
        let s = &self.theta[self.at..self.at + n];
        self.at += n;
        s
    }
}

fn affine(w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    let n_in = x.len();
    (0..b.len())
        .map(|i| b[i] + (0..n_in).map(|j| w[i * n_in + j] * x[j]).sum::<f64>())
        .collect()
}

fn matvec_add(mut acc: Vec<f64>, w: &[f64], x: &[f64]) -> Vec<f64> {
    let n_in = x.len();
    for (i, a) in acc.iter_mut().enumerate() {
        *a += (0..n_in).map(|j| w[i * n_in + j] * x[j]).sum::<f64>();
    }
    acc
}

/// Outputs for one sequence with hidden vector `[h_r1 | h_r2 | h_p]`.
pub fn forward(s: &Sizes, theta: &[f64], hidden: &[f64], inputs: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut r = Reader { theta, at: 0 };
    let (we, be) = (r.take(2 * s.enc), r.take(s.enc));
    let (wx1, wh1, b1) = (r.take(s.hid * s.enc), r.take(s.hid * s.hid), r.take(s.hid));
    let (wx2, wh2, b2) = (r.take(s.hid * s.hid), r.take(s.hid * s.hid), r.take(s.hid));
    let (wd, bd) = (r.take(s.dec * (s.hid + s.hp)), r.take(s.dec));
    let (wo, bo) = (r.take(2 * s.dec), r.take(2));
    assert_eq!(r.at, theta.len());

    let half = s.hid / 2;
    let mut p1 = vec![0.0; s.hid];
    let mut p2 = vec![0.0; s.hid];
    p1[..half].copy_from_slice(&hidden[..half]);
    p2[..half].copy_from_slice(&hidden[half..2 * half]);
    let hp = &hidden[2 * half..];

    let mut out = Vec::new();
    for x in inputs {
        let e: Vec<f64> = affine(we, be, x).into_iter().map(f64::tanh).collect();
        p1 = matvec_add(affine(wx1, b1, &e), wh1, &p1).into_iter().map(f64::tanh).collect();
        p2 = matvec_add(affine(wx2, b2, &p1), wh2, &p2).into_iter().map(f64::tanh).collect();
        let z: Vec<f64> = p2.iter().chain(hp).copied().collect();
        let d: Vec<f64> = affine(wd, bd, &z).into_iter().map(f64::tanh).collect();
        let o = affine(wo, bo, &d);
        out.push([o[0], o[1]]);
    }
    out
}

/// `Σ‖o_t − y_t‖² + λ2 Σ_{t≥1}‖Σ_{1≤τ≤t} o_τ − q_t‖² + λ1‖h‖²`.
#[allow(clippy::too_many_arguments)]
pub fn loss(
    s: &Sizes,
    theta: &[f64],
    hidden: &[f64],
    inputs: &[[f64; 2]],
    motions: &[[f64; 2]],
    positions: &[[f64; 2]],
    lambda1: f64,
    lambda2: f64,
) -> f64 {
    let out = forward(s, theta, hidden, inputs);
    let mut total = 0.0;
    for (o, y) in out.iter().zip(motions) {
        total += (o[0] - y[0]).powi(2) + (o[1] - y[1]).powi(2);
    }
    if lambda2 > 0.0 {
        let mut acc = [0.0, 0.0];
        for t in 1..out.len() {
            acc[0] += out[t][0];
            acc[1] += out[t][1];
            total += lambda2 * ((acc[0] - positions[t][0]).powi(2) + (acc[1] - positions[t][1]).powi(2));
        }
    }
    total + lambda1 * hidden.iter().map(|v| v * v).sum::<f64>()
}

/// Central finite differences of `f` at `x`.
pub fn numeric_gradient(x: &[f64], step: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + step;
            let hi = f(&probe);
            probe[i] = x[i] - step;
            let lo = f(&probe);
            probe[i] = x[i];
            (hi - lo) / (2.0 * step)
        })
        .collect()
}

/// Largest `|a − n| / max(|a|, |n|)` over entries, ignoring pairs where both
/// magnitudes are below `floor`.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| {
            let scale = a.abs().max(n.abs());
            if scale < floor {
                0.0
            } else {
                (a - n).abs() / scale
            }
        })
        .fold(0.0, f64::max)
}

/// Worst relative mismatch between the library's analytic gradients (weights
/// and hidden parameters) and finite differences of [`loss`], on a
/// hidden-size-8, length-6, two-sequence instance.
pub fn gradient_check(seed: u64, lambda2: f64) -> f64 {
    use mvtrack_core::tpn::net::{self, LossWeights, SeqBatch, Targets, TpnConfig};
    use rand::{Rng, SeedableRng};

    let cfg = TpnConfig {
        encoder: 6,
        hidden: 8,
        decoder: 5,
        hp: 3,
    };
    let sizes = Sizes {
        enc: 6,
        hid: 8,
        dec: 5,
        hp: 3,
    };
    let (len, batch, lambda1) = (6, 2, 0.05);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let theta: Vec<f64> = net::init_params(&cfg, seed)
        .into_iter()
        .map(|v| v + rng.random_range(-0.1..0.1))
        .collect();
    let hl = cfg.hidden_len();
    let hidden: Vec<f64> = (0..batch * hl).map(|_| rng.random_range(-0.5..0.5)).collect();
    let mut seq = |amp: f64| -> Vec<Vec<[f64; 2]>> {
        (0..batch)
            .map(|_| (0..len).map(|_| [rng.random_range(-amp..amp), rng.random_range(-amp..amp)]).collect())
            .collect()
    };
    let xs = seq(1.0);
    let ys = seq(1.0);
    let qs = seq(3.0);

    let x = SeqBatch::from_sequences(&xs);
    let targets = Targets {
        motions: SeqBatch::from_sequences(&ys).inputs,
        positions: SeqBatch::from_sequences(&qs).inputs,
    };
    let mut g_theta = vec![0.0; theta.len()];
    let weights = LossWeights { lambda1, lambda2 };
    let (_, g_hidden) = net::loss_and_grad(&cfg, &theta, &x, &targets, &hidden, weights, Some(&mut g_theta));

    let total = |theta: &[f64], hidden: &[f64]| -> f64 {
        (0..batch)
            .map(|b| loss(&sizes, theta, &hidden[b * hl..(b + 1) * hl], &xs[b], &ys[b], &qs[b], lambda1, lambda2))
            .sum()
    };
    let step = 1e-5;
    let n_theta = numeric_gradient(&theta, step, |t| total(t, &hidden));
    let n_hidden = numeric_gradient(&hidden, step, |h| total(&theta, h));
    max_relative_error(&g_theta, &n_theta, 1e-6).max(max_relative_error(&g_hidden, &n_hidden, 1e-6))
}
