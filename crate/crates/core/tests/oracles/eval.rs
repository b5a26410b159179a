//! Closed forms for the naive predictors and the weighted accuracy.

/// Constant-velocity prediction from the last four samples of a circle of
/// radius `r` traversed at `omega` rad/frame, ending at angle `theta`.
/// Chords have length `2r·sin(ω/2)`; three unit chord directions spaced by ω
/// average to `(1 + 2cos ω)/3` along the middle chord.
pub fn circle_naive_s(r: f64, omega: f64, theta: f64, k: usize) -> [f64; 2] {
    let speed = 2.0 * r * (omega / 2.0).sin();
    let shrink = (1.0 + 2.0 * omega.cos()) / 3.0;
    // middle chord runs from θ−2ω to θ−ω; its direction is the tangent at θ−1.5ω
    let phi = theta - 1.5 * omega + std::f64::consts::FRAC_PI_2;
    let (x, y) = (r * theta.cos(), r * theta.sin());
    let m = speed * shrink * k as f64;
    [x + m * phi.cos(), y + m * phi.sin()]
}

pub fn circle_point(r: f64, angle: f64) -> [f64; 2] {
    [r * angle.cos(), r * angle.sin()]
}

/// Error at horizon `k` of constant-velocity extrapolation on `u = a t²`
/// from history ending at `t`: the mean of the last three steps is `a(2t − 3)`,
/// so the miss is `a(k² + 3k)`.
pub fn parabola_naive_s_error(a: f64, k: usize) -> f64 {
    let k = k as f64;
    a * (k * k + 3.0 * k)
}

pub fn weighted_mean(values: &[f64], weights: &[f64]) -> f64 {
    let num: f64 = values.iter().zip(weights).map(|(v, w)| v * w).sum();
    num / weights.iter().sum::<f64>()
}
