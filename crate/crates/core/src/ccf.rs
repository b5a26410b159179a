//! Hand-crafted features, windowing, and the collaborative correlation filter.
//!
//! The filter is a per-channel spectrum `F_d`. Correlating it with a feature map
//! `x` gives the response `IDFT(Σ_d conj(F_d) · X_d)`, i.e. the circular
//! cross-correlation `y[u] = Σ_d Σ_p f_d[p] · x_d[p + u]`.
//!
//! Training minimizes the weighted ridge objective
//! `E(f) = Σ_j α_j ‖Σ_d f_d ⋆ x_{j,d} − y_j‖² + λ‖f‖²` over samples pooled from
//! every view. Because the DFT is orthogonal up to a factor `N = H·W`, the
//! problem splits into one `D`×`D` Hermitian system per frequency:
//! `(Σ_j α_j X_j X_jᴴ + λI) F = Σ_j α_j X_j conj(Y_j)`.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::Fft2;
use crate::imaging::GrayPatch;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    /// Side of the square pixel cell averaged into one feature cell.
    pub cell_size: usize,
    /// Unsigned gradient-orientation bins over `[0, π)`.
    pub orientation_bins: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            cell_size: 4,
            orientation_bins: 4,
        }
    }
}

impl FeatureConfig {
    /// Intensity, gradient magnitude, then one channel per orientation bin.
    pub fn channels(&self) -> usize {
        2 + self.orientation_bins
    }
}

/// `channels`×`height`×`width` real tensor, channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl FeatureMap {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        }
    }

    pub fn from_data(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(Error::ShapeMismatch {
                expected: format!("{channels}x{height}x{width}"),
                actual: format!("{} values", data.len()),
            });
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn plane(&self, d: usize) -> &[f64] {
        let n = self.height * self.width;
        &self.data[d * n..(d + 1) * n]
    }

    pub fn plane_mut(&mut self, d: usize) -> &mut [f64] {
        let n = self.height * self.width;
        &mut self.data[d * n..(d + 1) * n]
    }

    #[inline]
    pub fn get(&self, d: usize, y: usize, x: usize) -> f64 {
        self.data[(d * self.height + y) * self.width + x]
    }

    /// Circular shift of every channel by `(dy, dx)` cells.
    pub fn rolled(&self, dy: isize, dx: isize) -> FeatureMap {
        let (h, w) = (self.height as isize, self.width as isize);
        let mut out = FeatureMap::zeros(self.channels, self.height, self.width);
        for d in 0..self.channels {
            for y in 0..h {
                for x in 0..w {
                    let ny = (y + dy).rem_euclid(h) as usize;
                    let nx = (x + dx).rem_euclid(w) as usize;
                    out.data[(d * self.height + ny) * self.width + nx] =
                        self.get(d, y as usize, x as usize);
                }
            }
        }
        out
    }

    fn same_shape(&self, other: &FeatureMap) -> bool {
        self.channels == other.channels && self.height == other.height && self.width == other.width
    }

    fn shape_string(&self) -> String {
        format!("{}x{}x{}", self.channels, self.height, self.width)
    }
}

/// Builds the feature stack of a patch whose sides are multiples of the cell size.
///
/// The patch is normalized to zero mean and unit variance first, so the
/// features are invariant to affine intensity changes.
pub fn extract_features(patch: &GrayPatch, cfg: &FeatureConfig) -> FeatureMap {
    let cs = cfg.cell_size.max(1);
    let (pw, ph) = (patch.width, patch.height);
    let (hc, wc) = (ph / cs, pw / cs);
    let bins = cfg.orientation_bins;
    let mut out = FeatureMap::zeros(cfg.channels(), hc, wc);
    if hc == 0 || wc == 0 {
        return out;
    }

    let n = patch.data.len() as f64;
    let mean = patch.data.iter().sum::<f64>() / n;
    let var = patch.data.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    let norm: Vec<f64> = if std > 1e-9 {
        patch.data.iter().map(|v| (v - mean) / std).collect()
    } else {
        vec![0.0; patch.data.len()]
    };
    let at = |x: isize, y: isize| -> f64 {
        let xc = x.clamp(0, pw as isize - 1) as usize;
        let yc = y.clamp(0, ph as isize - 1) as usize;
        norm[yc * pw + xc]
    };

    let plane = hc * wc;
    let inv_area = 1.0 / (cs * cs) as f64;
    let bin_width = std::f64::consts::PI / bins.max(1) as f64;
    for y in 0..hc * cs {
        for x in 0..wc * cs {
            let (xi, yi) = (x as isize, y as isize);
            let gx = 0.5 * (at(xi + 1, yi) - at(xi - 1, yi));
            let gy = 0.5 * (at(xi, yi + 1) - at(xi, yi - 1));
            let mag = gx.hypot(gy);
            let cell = (y / cs) * wc + x / cs;
            out.data[cell] += norm[y * pw + x] * inv_area;
            out.data[plane + cell] += mag * inv_area;
            if bins > 0 && mag > 0.0 {
                let theta = gy.atan2(gx).rem_euclid(std::f64::consts::PI);
                let bin = ((theta / bin_width).round() as usize) % bins;
                out.data[(2 + bin) * plane + cell] += mag * inv_area;
            }
        }
    }
    out
}

/// Symmetric `n`-point Hann window: zero at both ends, one at the center of odd `n`.
pub fn hann(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

pub fn hann_window(x: &FeatureMap) -> FeatureMap {
    let wy = hann(x.height);
    let wx = hann(x.width);
    let mut out = x.clone();
    for d in 0..x.channels {
        let p = out.plane_mut(d);
        for (y, wyv) in wy.iter().enumerate() {
            for (xx, wxv) in wx.iter().enumerate() {
                p[y * x.width + xx] *= wyv * wxv;
            }
        }
    }
    out
}

/// Periodic Gaussian with its unit peak at cell `(0, 0)`.
pub fn gaussian_label(h: usize, w: usize, sigma: f64) -> Result<Vec<f64>> {
    if !(sigma > 0.0) {
        return Err(Error::invalid("label sigma must be positive"));
    }
    let circ = |i: usize, n: usize| -> f64 { i.min(n - i) as f64 };
    let mut out = Vec::with_capacity(h * w);
    for y in 0..h {
        for x in 0..w {
            let (dy, dx) = (circ(y, h), circ(x, w));
            out.push((-(dy * dy + dx * dx) / (2.0 * sigma * sigma)).exp());
        }
    }
    Ok(out)
}

/// Label bandwidth: a tenth of the map's geometric mean side, shrunk by the
/// target-to-RoI ratio.
pub fn label_sigma(h: usize, w: usize, roi_scale: f64) -> f64 {
    0.1 * ((h * w) as f64).sqrt() / roi_scale
}

/// Per-channel filter spectra shared by every view.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub spectra: Vec<Complex64>,
    pub lambda: f64,
}

const FILTER_MAGIC: &[u8; 4] = b"MVCF";
const FILTER_VERSION: u32 = 1;

impl FilterBank {
    /// Real spatial filter, channel-major.
    pub fn spatial(&self, fft: &Fft2) -> Vec<f64> {
        let n = self.height * self.width;
        let mut out = Vec::with_capacity(self.spectra.len());
        for d in 0..self.channels {
            let mut buf = self.spectra[d * n..(d + 1) * n].to_vec();
            fft.inverse(&mut buf);
            out.extend(buf.iter().map(|z| z.re));
        }
        out
    }

    /// Builds a filter from real spatial taps (channel-major).
    pub fn from_spatial(fft: &Fft2, channels: usize, taps: &[f64], lambda: f64) -> Result<Self> {
        let n = fft.len();
        if taps.len() != channels * n {
            return Err(Error::ShapeMismatch {
                expected: format!("{} taps", channels * n),
                actual: format!("{}", taps.len()),
            });
        }
        let mut spectra = Vec::with_capacity(taps.len());
        for d in 0..channels {
            spectra.extend(fft.forward_real(&taps[d * n..(d + 1) * n]));
        }
        Ok(Self {
            channels,
            height: fft.height(),
            width: fft.width(),
            spectra,
            lambda,
        })
    }

    /// `‖f‖²` in the spatial domain (via Parseval).
    pub fn energy(&self) -> f64 {
        self.spectra.iter().map(|z| z.norm_sqr()).sum::<f64>() / (self.height * self.width) as f64
    }

    /// Header (`MVCF`, version, D, H, W, λ) followed by little-endian `(re, im)` pairs.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(28 + 16 * self.spectra.len());
        out.extend_from_slice(FILTER_MAGIC);
        out.extend_from_slice(&FILTER_VERSION.to_le_bytes());
        for dim in [self.channels, self.height, self.width] {
            out.extend_from_slice(&(dim as u32).to_le_bytes());
        }
        out.extend_from_slice(&self.lambda.to_le_bytes());
        for z in &self.spectra {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Snapshot(m.to_string());
        if bytes.len() < 28 || &bytes[..4] != FILTER_MAGIC {
            return Err(bad("missing filter header"));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        if u32_at(4) != FILTER_VERSION {
            return Err(bad("unsupported filter snapshot version"));
        }
        let (d, h, w) = (u32_at(8) as usize, u32_at(12) as usize, u32_at(16) as usize);
        let lambda = f64::from_le_bytes(bytes[20..28].try_into().unwrap());
        let n = d * h * w;
        if bytes.len() != 28 + 16 * n {
            return Err(bad("filter payload length does not match header"));
        }
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let spectra = (0..n)
            .map(|i| Complex64::new(f64_at(28 + 16 * i), f64_at(36 + 16 * i)))
            .collect();
        Ok(Self {
            channels: d,
            height: h,
            width: w,
            spectra,
            lambda,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_bytes(&fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}

/// Real correlation response over the feature grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Response {
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
    /// Largest imaginary residue left by the inverse transform.
    pub max_imag: f64,
}

impl Response {
    pub fn from_real(height: usize, width: usize, data: Vec<f64>) -> Self {
        Self {
            height,
            width,
            data,
            max_imag: 0.0,
        }
    }

    /// `(value, row, col)` of the maximum; the first maximum in row-major order wins.
    pub fn peak(&self) -> (f64, usize, usize) {
        let mut best = (f64::NEG_INFINITY, 0usize);
        for (i, &v) in self.data.iter().enumerate() {
            if v > best.0 {
                best = (v, i);
            }
        }
        (best.0, best.1 / self.width, best.1 % self.width)
    }

    /// Peak displacement in cells, wrapped to `[-n/2, n/2)` and refined by a
    /// 1-D parabola through the peak and its circular neighbours on each axis.
    pub fn subpixel_displacement(&self) -> (f64, f64) {
        let (_, py, px) = self.peak();
        let (h, w) = (self.height, self.width);
        let at = |y: usize, x: usize| self.data[y * w + x];
        let refine = |l: f64, c: f64, r: f64| -> f64 {
            let denom = l - 2.0 * c + r;
            if denom.abs() < 1e-12 {
                0.0
            } else {
                (0.5 * (l - r) / denom).clamp(-0.5, 0.5)
            }
        };
        let oy = if h >= 3 {
            refine(at((py + h - 1) % h, px), at(py, px), at((py + 1) % h, px))
        } else {
            0.0
        };
        let ox = if w >= 3 {
            refine(at(py, (px + w - 1) % w), at(py, px), at(py, (px + 1) % w))
        } else {
            0.0
        };
        let wrap = |i: usize, n: usize| -> f64 {
            if i >= n.div_ceil(2) {
                i as f64 - n as f64
            } else {
                i as f64
            }
        };
        (wrap(py, h) + oy, wrap(px, w) + ox)
    }
}

fn spectra_of(fft: &Fft2, x: &FeatureMap) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(x.data.len());
    for d in 0..x.channels {
        out.extend(fft.forward_real(x.plane(d)));
    }
    out
}

fn check_grid(fft: &Fft2, h: usize, w: usize) -> Result<()> {
    if fft.height() != h || fft.width() != w {
        return Err(Error::ShapeMismatch {
            expected: format!("{}x{} grid", fft.height(), fft.width()),
            actual: format!("{h}x{w}"),
        });
    }
    Ok(())
}

pub fn correlate(fft: &Fft2, f: &FilterBank, x: &FeatureMap) -> Result<Response> {
    if f.channels != x.channels || f.height != x.height || f.width != x.width {
        return Err(Error::ShapeMismatch {
            expected: format!("{}x{}x{}", f.channels, f.height, f.width),
            actual: x.shape_string(),
        });
    }
    check_grid(fft, x.height, x.width)?;
    let xs = spectra_of(fft, x);
    Ok(correlate_spectrum(fft, f, &xs))
}

/// Correlation against a precomputed feature spectrum.
pub fn correlate_spectrum(fft: &Fft2, f: &FilterBank, xs: &[Complex64]) -> Response {
    let n = f.height * f.width;
    let mut acc = vec![Complex64::new(0.0, 0.0); n];
    for d in 0..f.channels {
        let fd = &f.spectra[d * n..(d + 1) * n];
        let xd = &xs[d * n..(d + 1) * n];
        for k in 0..n {
            acc[k] += fd[k].conj() * xd[k];
        }
    }
    fft.inverse(&mut acc);
    let max_imag = acc.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
    Response {
        height: f.height,
        width: f.width,
        data: acc.iter().map(|z| z.re).collect(),
        max_imag,
    }
}

/// One training sample with its cached spectra.
#[derive(Debug, Clone)]
pub struct Sample {
    pub features: FeatureMap,
    pub spectrum: Vec<Complex64>,
    pub label_spectrum: Vec<Complex64>,
    pub weight: f64,
    pub view: usize,
    pub time: usize,
}

impl Sample {
    pub fn new(
        fft: &Fft2,
        features: FeatureMap,
        label: &[f64],
        weight: f64,
        view: usize,
        time: usize,
    ) -> Result<Self> {
        check_grid(fft, features.height, features.width)?;
        if label.len() != fft.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} label cells", fft.len()),
                actual: format!("{}", label.len()),
            });
        }
        if !(weight >= 0.0) {
            return Err(Error::invalid("sample weight must be non-negative"));
        }
        let spectrum = spectra_of(fft, &features);
        Ok(Self {
            features,
            spectrum,
            label_spectrum: fft.forward_real(label),
            weight,
            view,
            time,
        })
    }
}

/// Bounded per-view training memory.
#[derive(Debug, Clone)]
pub struct SampleSet {
    capacity: usize,
    views: Vec<Vec<(u64, Sample)>>,
    next_age: u64,
}

impl SampleSet {
    pub fn new(n_views: usize, capacity: usize) -> Self {
        Self {
            capacity: capacity.max(1),
            views: vec![Vec::new(); n_views],
            next_age: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn view_len(&self, view: usize) -> usize {
        self.views.get(view).map_or(0, Vec::len)
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.views.iter().map(Vec::len).collect()
    }

    pub fn total(&self) -> usize {
        self.views.iter().map(Vec::len).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Sample> {
        self.views.iter().flat_map(|v| v.iter().map(|(_, s)| s))
    }

    pub fn view_samples(&self, view: usize) -> impl Iterator<Item = &Sample> {
        self.views[view].iter().map(|(_, s)| s)
    }

    /// Appends `s` to its view; past capacity the lowest-weight sample of that
    /// view (oldest on ties) is evicted.
    pub fn insert(&mut self, s: Sample) {
        let view = s.view;
        if view >= self.views.len() {
            self.views.resize(view + 1, Vec::new());
        }
        let age = self.next_age;
        self.next_age += 1;
        let bucket = &mut self.views[view];
        bucket.push((age, s));
        if bucket.len() > self.capacity {
            let victim = bucket
                .iter()
                .enumerate()
                .min_by(|(_, a), (_, b)| {
                    a.1.weight
                        .total_cmp(&b.1.weight)
                        .then_with(|| a.0.cmp(&b.0))
                })
                .map(|(i, _)| i)
                .expect("bucket is non-empty");
            bucket.remove(victim);
        }
    }

    /// Multiplies every stored weight by `factor`.
    pub fn decay(&mut self, factor: f64) {
        for (_, s) in self.views.iter_mut().flatten() {
            s.weight *= factor;
        }
    }
}

/// Exact minimizer of the pooled weighted ridge objective.
pub fn solve_ccf(fft: &Fft2, samples: &SampleSet, lambda: f64) -> Result<FilterBank> {
    let active: Vec<&Sample> = samples.iter().filter(|s| s.weight > 0.0).collect();
    let first = *active.first().ok_or(Error::EmptySampleSet)?;
    let (d, h, w) = (first.features.channels, first.features.height, first.features.width);
    check_grid(fft, h, w)?;
    if let Some(bad) = active.iter().find(|s| !s.features.same_shape(&first.features)) {
        return Err(Error::ShapeMismatch {
            expected: first.features.shape_string(),
            actual: bad.features.shape_string(),
        });
    }
    if !(lambda >= 0.0) {
        return Err(Error::invalid("regularizer must be non-negative"));
    }

    let n = h * w;
    let zero = Complex64::new(0.0, 0.0);
    let mut spectra = vec![zero; d * n];
    let mut a = DMatrix::from_element(d, d, zero);
    let mut b = DVector::from_element(d, zero);
    for k in 0..n {
        a.fill(zero);
        b.fill(zero);
        for s in &active {
            let yk = s.label_spectrum[k].conj() * s.weight;
            for r in 0..d {
                let xr = s.spectrum[r * n + k] * s.weight;
                b[r] += s.spectrum[r * n + k] * yk;
                for c in 0..d {
                    a[(r, c)] += xr * s.spectrum[c * n + k].conj();
                }
            }
        }
        let sol = if lambda > 0.0 {
            for r in 0..d {
                a[(r, r)] += lambda;
            }
            match a.clone().cholesky() {
                Some(ch) => ch.solve(&b),
                None => min_norm_solve(&a, &b)?,
            }
        } else {
            min_norm_solve(&a, &b)?
        };
        for r in 0..d {
            spectra[r * n + k] = sol[r];
        }
    }
    Ok(FilterBank {
        channels: d,
        height: h,
        width: w,
        spectra,
        lambda,
    })
}

/// Least-squares solution of minimum norm, for singular systems at `λ = 0`.
fn min_norm_solve(a: &DMatrix<Complex64>, b: &DVector<Complex64>) -> Result<DVector<Complex64>> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = (smax * 1e-12).max(f64::MIN_POSITIVE);
    svd.solve(b, eps)
        .map_err(|e| Error::Diverged(format!("frequency system solve failed: {e}")))
}

/// Objective value of `f` over every sample, evaluated per frequency.
pub fn objective(f: &FilterBank, samples: &SampleSet) -> f64 {
    let n = f.height * f.width;
    let mut data = 0.0;
    for s in samples.iter() {
        let mut acc = 0.0;
        for k in 0..n {
            let mut r = -s.label_spectrum[k];
            for c in 0..f.channels {
                r += f.spectra[c * n + k].conj() * s.spectrum[c * n + k];
            }
            acc += r.norm_sqr();
        }
        data += s.weight * acc;
    }
    data / n as f64 + f.lambda * f.energy()
}
