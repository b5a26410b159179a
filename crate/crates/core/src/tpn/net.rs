//! Encoder → two stacked tanh RNN layers → decoder, evaluated for a batch of
//! equal-length sequences in lockstep.
//!
//! Activations are row-major matrices whose row `t·B + b` holds time step `t`
//! of sequence `b`, so every non-recurrent layer is a single matrix product.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TpnConfig {
    pub encoder: usize,
    pub hidden: usize,
    pub decoder: usize,
    /// Length of the decoder-side hidden parameter `h_p`.
    pub hp: usize,
}

impl Default for TpnConfig {
    fn default() -> Self {
        Self {
            encoder: 128,
            hidden: 64,
            decoder: 64,
            hp: 16,
        }
    }
}

impl TpnConfig {
    /// Learnable half of each RNN layer's initial state.
    pub fn hr(&self) -> usize {
        self.hidden / 2
    }

    /// Length of a flattened `[h_r1 | h_r2 | h_p]` vector.
    pub fn hidden_len(&self) -> usize {
        2 * self.hr() + self.hp
    }

    pub fn layout(&self) -> Layout {
        Layout::new(self)
    }

    pub fn n_params(&self) -> usize {
        self.layout().total
    }
}

/// Offsets of every weight block inside the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub we: usize,
    pub be: usize,
    pub wx1: usize,
    pub wh1: usize,
    pub b1: usize,
    pub wx2: usize,
    pub wh2: usize,
    pub b2: usize,
    pub wd: usize,
    pub bd: usize,
    pub wo: usize,
    pub bo: usize,
    pub total: usize,
}

impl Layout {
    fn new(c: &TpnConfig) -> Self {
        let (e, h, m, p) = (c.encoder, c.hidden, c.decoder, c.hp);
        let mut at = 0;
        let mut take = |n: usize| {
            let o = at;
            at += n;
            o
        };
        let we = take(e * 2);
        let be = take(e);
        let wx1 = take(h * e);
        let wh1 = take(h * h);
        let b1 = take(h);
        let wx2 = take(h * h);
        let wh2 = take(h * h);
        let b2 = take(h);
        let wd = take(m * (h + p));
        let bd = take(m);
        let wo = take(2 * m);
        let bo = take(2);
        Self {
            we,
            be,
            wx1,
            wh1,
            b1,
            wx2,
            wh2,
            b2,
            wd,
            bd,
            wo,
            bo,
            total: at,
        }
    }
}

/// Named weight blocks (row-major, `out × in`).
#[derive(Debug, Clone, Copy)]
pub struct Weights<'a> {
    pub we: &'a [f64],
    pub be: &'a [f64],
    pub wx1: &'a [f64],
    pub wh1: &'a [f64],
    pub b1: &'a [f64],
    pub wx2: &'a [f64],
    pub wh2: &'a [f64],
    pub b2: &'a [f64],
    /// Decoder weights over `[h2 ; h_p]`.
    pub wd: &'a [f64],
    pub bd: &'a [f64],
    pub wo: &'a [f64],
    pub bo: &'a [f64],
}

pub fn weights<'a>(cfg: &TpnConfig, theta: &'a [f64]) -> Weights<'a> {
    let l = cfg.layout();
    assert_eq!(theta.len(), l.total, "parameter vector does not match the config");
    Weights {
        we: &theta[l.we..l.be],
        be: &theta[l.be..l.wx1],
        wx1: &theta[l.wx1..l.wh1],
        wh1: &theta[l.wh1..l.b1],
        b1: &theta[l.b1..l.wx2],
        wx2: &theta[l.wx2..l.wh2],
        wh2: &theta[l.wh2..l.b2],
        b2: &theta[l.b2..l.wd],
        wd: &theta[l.wd..l.bd],
        bd: &theta[l.bd..l.wo],
        wo: &theta[l.wo..l.bo],
        bo: &theta[l.bo..l.total],
    }
}

/// Uniform `±1/√fan_in` weights, a tighter range for recurrent weights, zero biases.
pub fn init_params(cfg: &TpnConfig, seed: u64) -> Vec<f64> {
    let l = cfg.layout();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut theta = vec![0.0; l.total];
    let (e, h, m, p) = (cfg.encoder, cfg.hidden, cfg.decoder, cfg.hp);
    let mut fill = |range: std::ops::Range<usize>, bound: f64| {
        for v in &mut theta[range] {
            *v = rng.random_range(-bound..bound);
        }
    };
    fill(l.we..l.be, 1.0 / 2f64.sqrt());
    fill(l.wx1..l.wh1, 1.0 / (e as f64).sqrt());
    fill(l.wh1..l.b1, 0.5 / (h as f64).sqrt());
    fill(l.wx2..l.wh2, 1.0 / (h as f64).sqrt());
    fill(l.wh2..l.b2, 0.5 / (h as f64).sqrt());
    fill(l.wd..l.bd, 1.0 / ((h + p) as f64).sqrt());
    fill(l.wo..l.bo, 1.0 / (m as f64).sqrt());
    theta
}

/// Strided matrix operand.
#[derive(Clone, Copy)]
struct Mat<'a> {
    data: &'a [f64],
    rows: usize,
    cols: usize,
    rs: usize,
    cs: usize,
}

impl<'a> Mat<'a> {
    fn new(data: &'a [f64], rows: usize, cols: usize) -> Self {
        Self {
            data,
            rows,
            cols,
            rs: cols,
            cs: 1,
        }
    }

    /// `cols` consecutive columns of a row-major matrix with `stride` columns.
    fn block(data: &'a [f64], rows: usize, cols: usize, stride: usize, first_col: usize) -> Self {
        Self {
            data: &data[first_col..],
            rows,
            cols,
            rs: stride,
            cs: 1,
        }
    }

    fn t(self) -> Self {
        Self {
            data: self.data,
            rows: self.cols,
            cols: self.rows,
            rs: self.cs,
            cs: self.rs,
        }
    }
}

/// `c = beta·c + a·b` with `c` contiguous row-major.
fn gemm(a: Mat, b: Mat, beta: f64, c: &mut [f64]) {
    assert_eq!(a.cols, b.rows);
    let (m, k, n) = (a.rows, a.cols, b.cols);
    assert!(c.len() >= m * n);
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c[..m * n].iter_mut().for_each(|v| *v *= beta);
        return;
    }
    assert!((m - 1) * a.rs + (k - 1) * a.cs < a.data.len());
    assert!((k - 1) * b.rs + (n - 1) * b.cs < b.data.len());
    // SAFETY: the asserts above bound every index the kernel touches.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.data.as_ptr(),
            a.rs as isize,
            a.cs as isize,
            b.data.as_ptr(),
            b.rs as isize,
            b.cs as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

fn add_bias(x: &mut [f64], bias: &[f64]) {
    for row in x.chunks_mut(bias.len()) {
        for (v, b) in row.iter_mut().zip(bias) {
            *v += b;
        }
    }
}

fn col_sums(x: &[f64], cols: usize, out: &mut [f64]) {
    for row in x.chunks(cols) {
        for (o, v) in out.iter_mut().zip(row) {
            *o += v;
        }
    }
}

fn tanh_inplace(x: &mut [f64]) {
    x.iter_mut().for_each(|v| *v = v.tanh());
}

/// `g ⊙ (1 − y²)` in place on `g`.
fn tanh_back(g: &mut [f64], y: &[f64]) {
    for (gv, yv) in g.iter_mut().zip(y) {
        *gv *= 1.0 - yv * yv;
    }
}

/// Inputs of a lockstep batch: `len` steps of `batch` sequences of 2-D motions.
#[derive(Debug, Clone, PartialEq)]
pub struct SeqBatch {
    pub len: usize,
    pub batch: usize,
    /// Row `t·batch + b` holds the motion of sequence `b` at step `t`.
    pub inputs: Vec<f64>,
}

impl SeqBatch {
    pub fn from_sequences(seqs: &[Vec<[f64; 2]>]) -> Self {
        let batch = seqs.len();
        let len = seqs.first().map_or(0, Vec::len);
        assert!(seqs.iter().all(|s| s.len() == len), "lockstep sequences must share a length");
        let mut inputs = vec![0.0; len * batch * 2];
        for (b, s) in seqs.iter().enumerate() {
            for (t, r) in s.iter().enumerate() {
                let row = t * batch + b;
                inputs[2 * row] = r[0];
                inputs[2 * row + 1] = r[1];
            }
        }
        Self { len, batch, inputs }
    }

    pub fn rows(&self) -> usize {
        self.len * self.batch
    }
}

/// Parts of the forward pass that depend only on the weights and inputs.
#[derive(Debug, Clone)]
pub struct InputCache {
    pub e: Vec<f64>,
    pub a1: Vec<f64>,
}

pub fn encode(cfg: &TpnConfig, theta: &[f64], x: &SeqBatch) -> InputCache {
    let w = weights(cfg, theta);
    let (e, h) = (cfg.encoder, cfg.hidden);
    let rows = x.rows();
    let mut enc = vec![0.0; rows * e];
    gemm(Mat::new(&x.inputs, rows, 2), Mat::new(w.we, e, 2).t(), 0.0, &mut enc);
    add_bias(&mut enc, w.be);
    tanh_inplace(&mut enc);
    let mut a1 = vec![0.0; rows * h];
    gemm(Mat::new(&enc, rows, e), Mat::new(w.wx1, h, e).t(), 0.0, &mut a1);
    add_bias(&mut a1, w.b1);
    InputCache { e: enc, a1 }
}

/// Activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Trace {
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    pub d: Vec<f64>,
    /// Outputs, `rows × 2`.
    pub out: Vec<f64>,
    pub init1: Vec<f64>,
    pub init2: Vec<f64>,
}

fn run_recurrent(
    a: &[f64],
    wh: &[f64],
    init: &[f64],
    len: usize,
    batch: usize,
    hsz: usize,
) -> Vec<f64> {
    let mut hs = a.to_vec();
    let step = batch * hsz;
    for t in 0..len {
        let (prev_part, cur_part) = hs.split_at_mut(t * step);
        let prev: &[f64] = if t == 0 { init } else { &prev_part[(t - 1) * step..] };
        let cur = &mut cur_part[..step];
        gemm(Mat::new(prev, batch, hsz), Mat::new(wh, hsz, hsz).t(), 1.0, cur);
        tanh_inplace(cur);
    }
    hs
}

/// Initial RNN states `[h_rk, 0]` for every sequence, from flattened hidden params.
fn initial_states(cfg: &TpnConfig, hidden: &[f64], batch: usize) -> (Vec<f64>, Vec<f64>) {
    let (h, hr, hl) = (cfg.hidden, cfg.hr(), cfg.hidden_len());
    let mut i1 = vec![0.0; batch * h];
    let mut i2 = vec![0.0; batch * h];
    for b in 0..batch {
        let hp = &hidden[b * hl..(b + 1) * hl];
        i1[b * h..b * h + hr].copy_from_slice(&hp[..hr]);
        i2[b * h..b * h + hr].copy_from_slice(&hp[hr..2 * hr]);
    }
    (i1, i2)
}

fn hp_matrix(cfg: &TpnConfig, hidden: &[f64], batch: usize) -> Vec<f64> {
    let (hr, hl, p) = (cfg.hr(), cfg.hidden_len(), cfg.hp);
    let mut out = Vec::with_capacity(batch * p);
    for b in 0..batch {
        out.extend_from_slice(&hidden[b * hl + 2 * hr..(b + 1) * hl]);
    }
    out
}

/// `hidden` holds one flattened `[h_r1 | h_r2 | h_p]` per sequence.
pub fn forward(cfg: &TpnConfig, theta: &[f64], x: &SeqBatch, cache: &InputCache, hidden: &[f64]) -> Trace {
    let w = weights(cfg, theta);
    let (h, m, p) = (cfg.hidden, cfg.decoder, cfg.hp);
    let (len, batch, rows) = (x.len, x.batch, x.rows());
    assert_eq!(hidden.len(), batch * cfg.hidden_len());
    let (init1, init2) = initial_states(cfg, hidden, batch);

    let h1 = run_recurrent(&cache.a1, w.wh1, &init1, len, batch, h);
    let mut a2 = vec![0.0; rows * h];
    gemm(Mat::new(&h1, rows, h), Mat::new(w.wx2, h, h).t(), 0.0, &mut a2);
    add_bias(&mut a2, w.b2);
    let h2 = run_recurrent(&a2, w.wh2, &init2, len, batch, h);

    let hpm = hp_matrix(cfg, hidden, batch);
    let mut ctx = vec![0.0; batch * m];
    gemm(Mat::new(&hpm, batch, p), Mat::block(w.wd, m, p, h + p, h).t(), 0.0, &mut ctx);
    add_bias(&mut ctx, w.bd);
    let mut d = vec![0.0; rows * m];
    for t in 0..len {
        d[t * batch * m..(t + 1) * batch * m].copy_from_slice(&ctx);
    }
    gemm(Mat::new(&h2, rows, h), Mat::block(w.wd, m, h, h + p, 0).t(), 1.0, &mut d);
    tanh_inplace(&mut d);
    let mut out = vec![0.0; rows * 2];
    gemm(Mat::new(&d, rows, m), Mat::new(w.wo, 2, m).t(), 0.0, &mut out);
    add_bias(&mut out, w.bo);
    Trace {
        h1,
        h2,
        d,
        out,
        init1,
        init2,
    }
}

/// Backpropagates through one recurrent layer; returns (dZ for every step, dInit).
fn recurrent_back(
    mut g: Vec<f64>,
    hs: &[f64],
    wh: &[f64],
    len: usize,
    batch: usize,
    hsz: usize,
) -> (Vec<f64>, Vec<f64>) {
    let step = batch * hsz;
    let mut carry = vec![0.0; step];
    for t in (0..len).rev() {
        let gt = &mut g[t * step..(t + 1) * step];
        for (a, c) in gt.iter_mut().zip(&carry) {
            *a += c;
        }
        tanh_back(gt, &hs[t * step..(t + 1) * step]);
        gemm(Mat::new(gt, batch, hsz), Mat::new(wh, hsz, hsz), 0.0, &mut carry);
    }
    (g, carry)
}

/// `[init; states shifted down one step]`: the previous state for every row.
fn previous_states(hs: &[f64], init: &[f64], rows: usize, hsz: usize) -> Vec<f64> {
    let mut prev = Vec::with_capacity(rows * hsz);
    prev.extend_from_slice(init);
    prev.extend_from_slice(&hs[..rows * hsz - init.len()]);
    prev
}

/// Gradients of `Σ ⟨d_out, out⟩`. The parameter gradient is accumulated into
/// `grad_theta` when given; the hidden-parameter gradient is returned.
#[allow(clippy::too_many_arguments)]
pub fn backward(
    cfg: &TpnConfig,
    theta: &[f64],
    x: &SeqBatch,
    cache: &InputCache,
    hidden: &[f64],
    trace: &Trace,
    d_out: &[f64],
    mut grad_theta: Option<&mut [f64]>,
) -> Vec<f64> {
    let w = weights(cfg, theta);
    let l = cfg.layout();
    let (e, h, m, p) = (cfg.encoder, cfg.hidden, cfg.decoder, cfg.hp);
    let (hr, hl) = (cfg.hr(), cfg.hidden_len());
    let (len, batch, rows) = (x.len, x.batch, x.rows());
    assert_eq!(d_out.len(), rows * 2);

    if let Some(gt) = grad_theta.as_deref_mut() {
        let mut tmp = vec![0.0; 2 * m];
        gemm(Mat::new(d_out, rows, 2).t(), Mat::new(&trace.d, rows, m), 0.0, &mut tmp);
        add_into(&mut gt[l.wo..l.bo], &tmp);
        col_sums(d_out, 2, &mut gt[l.bo..l.total]);
    }
    let mut dzd = vec![0.0; rows * m];
    gemm(Mat::new(d_out, rows, 2), Mat::new(w.wo, 2, m), 0.0, &mut dzd);
    tanh_back(&mut dzd, &trace.d);

    // decoder context is shared by every step of a sequence
    let mut dctx = vec![0.0; batch * m];
    for t in 0..len {
        add_into(&mut dctx, &dzd[t * batch * m..(t + 1) * batch * m]);
    }
    let hpm = hp_matrix(cfg, hidden, batch);
    let mut dhp = vec![0.0; batch * p];
    gemm(Mat::new(&dctx, batch, m), Mat::block(w.wd, m, p, h + p, h), 0.0, &mut dhp);

    if let Some(gt) = grad_theta.as_deref_mut() {
        let mut gh = vec![0.0; m * h];
        gemm(Mat::new(&dzd, rows, m).t(), Mat::new(&trace.h2, rows, h), 0.0, &mut gh);
        let mut gp = vec![0.0; m * p];
        gemm(Mat::new(&dctx, batch, m).t(), Mat::new(&hpm, batch, p), 0.0, &mut gp);
        let wd = &mut gt[l.wd..l.bd];
        for i in 0..m {
            add_into(&mut wd[i * (h + p)..i * (h + p) + h], &gh[i * h..(i + 1) * h]);
            add_into(&mut wd[i * (h + p) + h..(i + 1) * (h + p)], &gp[i * p..(i + 1) * p]);
        }
        col_sums(&dctx, m, &mut gt[l.bd..l.wo]);
    }

    let mut dh2 = vec![0.0; rows * h];
    gemm(Mat::new(&dzd, rows, m), Mat::block(w.wd, m, h, h + p, 0), 0.0, &mut dh2);
    let (dz2, dinit2) = recurrent_back(dh2, &trace.h2, w.wh2, len, batch, h);

    let mut dh1 = vec![0.0; rows * h];
    gemm(Mat::new(&dz2, rows, h), Mat::new(w.wx2, h, h), 0.0, &mut dh1);
    let (dz1, dinit1) = recurrent_back(dh1, &trace.h1, w.wh1, len, batch, h);

    if let Some(gt) = grad_theta {
        let mut tmp = vec![0.0; h * h];
        let prev2 = previous_states(&trace.h2, &trace.init2, rows, h);
        gemm(Mat::new(&dz2, rows, h).t(), Mat::new(&prev2, rows, h), 0.0, &mut tmp);
        add_into(&mut gt[l.wh2..l.b2], &tmp);
        gemm(Mat::new(&dz2, rows, h).t(), Mat::new(&trace.h1, rows, h), 0.0, &mut tmp);
        add_into(&mut gt[l.wx2..l.wh2], &tmp);
        col_sums(&dz2, h, &mut gt[l.b2..l.wd]);

        let prev1 = previous_states(&trace.h1, &trace.init1, rows, h);
        gemm(Mat::new(&dz1, rows, h).t(), Mat::new(&prev1, rows, h), 0.0, &mut tmp);
        add_into(&mut gt[l.wh1..l.b1], &tmp);
        let mut tx1 = vec![0.0; h * e];
        gemm(Mat::new(&dz1, rows, h).t(), Mat::new(&cache.e, rows, e), 0.0, &mut tx1);
        add_into(&mut gt[l.wx1..l.wh1], &tx1);
        col_sums(&dz1, h, &mut gt[l.b1..l.wx2]);

        let mut de = vec![0.0; rows * e];
        gemm(Mat::new(&dz1, rows, h), Mat::new(w.wx1, h, e), 0.0, &mut de);
        tanh_back(&mut de, &cache.e);
        let mut twe = vec![0.0; e * 2];
        gemm(Mat::new(&de, rows, e).t(), Mat::new(&x.inputs, rows, 2), 0.0, &mut twe);
        add_into(&mut gt[l.we..l.be], &twe);
        col_sums(&de, e, &mut gt[l.be..l.wx1]);
    }

    let mut dhidden = vec![0.0; batch * hl];
    for b in 0..batch {
        let dst = &mut dhidden[b * hl..(b + 1) * hl];
        dst[..hr].copy_from_slice(&dinit1[b * h..b * h + hr]);
        dst[hr..2 * hr].copy_from_slice(&dinit2[b * h..b * h + hr]);
        dst[2 * hr..].copy_from_slice(&dhp[b * p..(b + 1) * p]);
    }
    dhidden
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

/// Weighting of the two loss terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    /// Hidden-parameter penalty λ1.
    pub lambda1: f64,
    /// Integrated-position term λ2; 0 gives the stage-1 loss.
    pub lambda2: f64,
}

/// Per-sequence targets for a lockstep batch, in normalized units.
#[derive(Debug, Clone, PartialEq)]
pub struct Targets {
    /// Target motions, same layout as the inputs.
    pub motions: Vec<f64>,
    /// Target displacement from the first step's position, per row; only
    /// needed when `lambda2 > 0`.
    pub positions: Vec<f64>,
}

/// Loss per sequence and its gradient with respect to the outputs.
///
/// For sequence `b`: `Σ_t ‖o_t − y_t‖² + λ2 Σ_{t≥1} ‖Σ_{1≤τ≤t} o_τ − q_t‖²`
/// (the hidden penalty is added by the caller).
pub fn output_loss(
    out: &[f64],
    targets: &Targets,
    len: usize,
    batch: usize,
    lambda2: f64,
) -> (Vec<f64>, Vec<f64>) {
    let mut losses = vec![0.0; batch];
    let mut grad = vec![0.0; out.len()];
    for t in 0..len {
        for (b, loss) in losses.iter_mut().enumerate() {
            let r = t * batch + b;
            for k in 0..2 {
                let diff = out[2 * r + k] - targets.motions[2 * r + k];
                *loss += diff * diff;
                grad[2 * r + k] = 2.0 * diff;
            }
        }
    }
    if lambda2 > 0.0 && len > 1 {
        let mut pos = vec![0.0; batch * 2];
        let mut resid = vec![0.0; out.len()];
        for t in 1..len {
            for b in 0..batch {
                let r = t * batch + b;
                for k in 0..2 {
                    pos[2 * b + k] += out[2 * r + k];
                    let diff = pos[2 * b + k] - targets.positions[2 * r + k];
                    losses[b] += lambda2 * diff * diff;
                    resid[2 * r + k] = diff;
                }
            }
        }
        // d/do_τ of the position term is 2λ2 Σ_{t≥τ} residual_t
        let mut acc = vec![0.0; batch * 2];
        for t in (1..len).rev() {
            for b in 0..batch {
                let r = t * batch + b;
                for k in 0..2 {
                    acc[2 * b + k] += resid[2 * r + k];
                    grad[2 * r + k] += 2.0 * lambda2 * acc[2 * b + k];
                }
            }
        }
    }
    (losses, grad)
}

/// Total loss (summed over sequences, including `λ1‖h‖²`) with gradients for
/// the hidden parameters and, optionally, the weights.
pub fn loss_and_grad(
    cfg: &TpnConfig,
    theta: &[f64],
    x: &SeqBatch,
    targets: &Targets,
    hidden: &[f64],
    weights: LossWeights,
    grad_theta: Option<&mut [f64]>,
) -> (f64, Vec<f64>) {
    let cache = encode(cfg, theta, x);
    let trace = forward(cfg, theta, x, &cache, hidden);
    let (losses, d_out) = output_loss(&trace.out, targets, x.len, x.batch, weights.lambda2);
    let mut dh = backward(cfg, theta, x, &cache, hidden, &trace, &d_out, grad_theta);
    let mut total: f64 = losses.iter().sum();
    total += weights.lambda1 * hidden.iter().map(|v| v * v).sum::<f64>();
    for (g, v) in dh.iter_mut().zip(hidden) {
        *g += 2.0 * weights.lambda1 * v;
    }
    (total, dh)
}
