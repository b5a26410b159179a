//! Spatial-domain references for correlation and the filter objective.

/// `out[u] = Σ_d Σ_p f_d[p] · x_d[p + u]` with circular indexing, channel-major inputs.
pub fn circular_xcorr(f: &[f64], x: &[f64], channels: usize, h: usize, w: usize) -> Vec<f64> {
    let n = h * w;
    let mut out = vec![0.0; n];
    for uy in 0..h {
        for ux in 0..w {
            let mut acc = 0.0;
            for d in 0..channels {
                for py in 0..h {
                    for px in 0..w {
                        let qy = (py + uy) % h;
                        let qx = (px + ux) % w;
                        acc += f[d * n + py * w + px] * x[d * n + qy * w + qx];
                    }
                }
            }
            out[uy * w + ux] = acc;
        }
    }
    out
}

/// One weighted training pair in spatial form.
pub struct SpatialSample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub alpha: f64,
}

/// `E(f) = Σ_j α_j ‖xcorr(f, x_j) − y_j‖² + λ‖f‖²`, evaluated directly.
pub fn objective(
    f: &[f64],
    samples: &[SpatialSample],
    lambda: f64,
    channels: usize,
    h: usize,
    w: usize,
) -> f64 {
    let mut e = lambda * f.iter().map(|v| v * v).sum::<f64>();
    for s in samples {
        let r = circular_xcorr(f, &s.x, channels, h, w);
        e += s.alpha * r.iter().zip(&s.y).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    }
    e
}

/// Quadratic form `E(f) = fᵀQf − 2bᵀf + c` of the objective, built from the
/// explicit correlation matrices.
pub struct Quadratic {
    pub dim: usize,
    pub q: Vec<f64>,
    pub b: Vec<f64>,
    pub c: f64,
}

impl Quadratic {
    pub fn new(samples: &[SpatialSample], lambda: f64, channels: usize, h: usize, w: usize) -> Self {
        let n = h * w;
        let dim = channels * n;
        let mut q = vec![0.0; dim * dim];
        let mut b = vec![0.0; dim];
        let mut c = 0.0;
        for s in samples {
            // row u of A: A[u][(d, p)] = x_d[p + u]
            let mut a = vec![0.0; n * dim];
            for uy in 0..h {
                for ux in 0..w {
                    let u = uy * w + ux;
                    for d in 0..channels {
                        for py in 0..h {
                            for px in 0..w {
                                let src = d * n + ((py + uy) % h) * w + (px + ux) % w;
                                a[u * dim + d * n + py * w + px] = s.x[src];
                            }
                        }
                    }
                }
            }
            for u in 0..n {
                let row = &a[u * dim..(u + 1) * dim];
                for i in 0..dim {
                    b[i] += s.alpha * row[i] * s.y[u];
                    let ri = s.alpha * row[i];
                    if ri == 0.0 {
                        continue;
                    }
                    for j in 0..dim {
                        q[i * dim + j] += ri * row[j];
                    }
                }
                c += s.alpha * s.y[u] * s.y[u];
            }
        }
        for i in 0..dim {
            q[i * dim + i] += lambda;
        }
        Self { dim, q, b, c }
    }

    pub fn value(&self, f: &[f64]) -> f64 {
        let qf = self.apply(f);
        let quad: f64 = f.iter().zip(&qf).map(|(a, b)| a * b).sum();
        let lin: f64 = f.iter().zip(&self.b).map(|(a, b)| a * b).sum();
        quad - 2.0 * lin + self.c
    }

    fn apply(&self, f: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| {
                self.q[i * self.dim..(i + 1) * self.dim]
                    .iter()
                    .zip(f)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// Largest eigenvalue of Q by power iteration.
    fn max_eigenvalue(&self) -> f64 {
        let mut v = vec![1.0; self.dim];
        let mut est = 0.0;
        for _ in 0..500 {
            let qv = self.apply(&v);
            let norm = qv.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            est = norm / v.iter().map(|a| a * a).sum::<f64>().sqrt();
            v = qv.into_iter().map(|a| a / norm).collect();
        }
        est
    }

    /// Accelerated gradient descent from zero for `steps` iterations, with
    /// step `1/L` and the constant momentum of a `μ`-strongly convex quadratic.
    pub fn gradient_descent(&self, mu: f64, steps: usize) -> Vec<f64> {
        let l = self.max_eigenvalue() * 1.01;
        let beta = if mu > 0.0 {
            (l.sqrt() - mu.sqrt()) / (l.sqrt() + mu.sqrt())
        } else {
            0.9
        };
        let mut f = vec![0.0; self.dim];
        let mut prev = f.clone();
        for _ in 0..steps {
            let look: Vec<f64> = f.iter().zip(&prev).map(|(a, p)| a + beta * (a - p)).collect();
            let qz = self.apply(&look);
            let next: Vec<f64> = look
                .iter()
                .zip(qz.iter().zip(&self.b))
                .map(|(z, (qz, b))| z - 2.0 * (qz - b) / (2.0 * l))
                .collect();
            prev = std::mem::replace(&mut f, next);
        }
        f
    }
}
