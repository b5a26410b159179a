//! Sign-based adaptive step optimizer (iRprop⁻).

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RpropConfig {
    pub init_step: f64,
    pub eta_plus: f64,
    pub eta_minus: f64,
    pub min_step: f64,
    pub max_step: f64,
}

impl Default for RpropConfig {
    fn default() -> Self {
        Self {
            init_step: 1e-3,
            eta_plus: 1.2,
            eta_minus: 0.5,
            min_step: 1e-6,
            max_step: 1.0,
        }
    }
}

/// Per-parameter step sizes and the previous gradient signs.
#[derive(Debug, Clone, PartialEq)]
pub struct Rprop {
    cfg: RpropConfig,
    steps: Vec<f64>,
    prev: Vec<f64>,
}

impl Rprop {
    pub fn new(n: usize, cfg: RpropConfig) -> Self {
        Self {
            cfg,
            steps: vec![cfg.init_step; n],
            prev: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Applies one update to `params` (a contiguous slice starting at `offset`
    /// of the optimizer's state).
    pub fn step_range(&mut self, offset: usize, params: &mut [f64], grad: &[f64]) {
        let c = self.cfg;
        for (i, (p, &g)) in params.iter_mut().zip(grad).enumerate() {
            let k = offset + i;
            let sign = g * self.prev[k];
            let mut g = g;
            if sign > 0.0 {
                self.steps[k] = (self.steps[k] * c.eta_plus).min(c.max_step);
            } else if sign < 0.0 {
                self.steps[k] = (self.steps[k] * c.eta_minus).max(c.min_step);
                g = 0.0;
            }
            if g > 0.0 {
                *p -= self.steps[k];
            } else if g < 0.0 {
                *p += self.steps[k];
            }
            self.prev[k] = g;
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.step_range(0, params, grad);
    }

    /// True once every step in the range has shrunk to the floor.
    pub fn converged(&self, offset: usize, len: usize) -> bool {
        self.steps[offset..offset + len]
            .iter()
            .all(|&s| s <= self.cfg.min_step)
    }
}
