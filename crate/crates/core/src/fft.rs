//! Planned 2-D FFTs over row-major buffers.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Forward/inverse 2-D transform for a fixed `height`×`width` grid.
///
/// The inverse is normalized by `1 / (height * width)`, so `inverse(forward(x)) == x`.
#[derive(Clone)]
pub struct Fft2 {
    height: usize,
    width: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2")
            .field("height", &self.height)
            .field("width", &self.width)
            .finish()
    }
}

impl Fft2 {
    pub fn new(height: usize, width: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            height,
            width,
            row_fwd: planner.plan_fft_forward(width),
            row_inv: planner.plan_fft_inverse(width),
            col_fwd: planner.plan_fft_forward(height),
            col_inv: planner.plan_fft_inverse(height),
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.row_fwd, &self.col_fwd);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.row_inv, &self.col_inv);
        let scale = 1.0 / self.len() as f64;
        data.iter_mut().for_each(|z| *z *= scale);
    }

    /// Spectrum of a real grid.
    pub fn forward_real(&self, data: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = data.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }

    fn run(&self, data: &mut [Complex64], rows: &Arc<dyn Fft<f64>>, cols: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.len(), self.len(), "buffer does not match FFT grid");
        // rows are contiguous, so one call handles all of them
        rows.process(data);
        let mut column = vec![Complex64::new(0.0, 0.0); self.height];
        for j in 0..self.width {
            for i in 0..self.height {
                column[i] = data[i * self.width + j];
            }
            cols.process(&mut column);
            for i in 0..self.height {
                data[i * self.width + j] = column[i];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_identity() {
        let fft = Fft2::new(5, 6);
        let x: Vec<f64> = (0..30).map(|i| ((i * 7) % 11) as f64 - 3.0).collect();
        let mut spec = fft.forward_real(&x);
        fft.inverse(&mut spec);
        for (a, b) in x.iter().zip(&spec) {
            assert!((a - b.re).abs() < 1e-12 && b.im.abs() < 1e-12);
        }
    }

    #[test]
    fn matches_direct_dft() {
        let (h, w) = (3, 4);
        let fft = Fft2::new(h, w);
        let x: Vec<f64> = (0..h * w).map(|i| (i as f64).sin()).collect();
        let spec = fft.forward_real(&x);
        for ky in 0..h {
            for kx in 0..w {
                let mut acc = Complex64::new(0.0, 0.0);
                for y in 0..h {
                    for xx in 0..w {
                        let ang = -2.0
                            * std::f64::consts::PI
                            * ((ky * y) as f64 / h as f64 + (kx * xx) as f64 / w as f64);
                        acc += Complex64::from_polar(x[y * w + xx], ang);
                    }
                }
                assert!((acc - spec[ky * w + kx]).norm() < 1e-10);
            }
        }
    }
}
