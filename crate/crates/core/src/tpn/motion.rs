//! Motion smoothing, integration, and position fusion.

use crate::error::{Error, Result};
use crate::geometry::{Point2, Trajectory};

fn unit(p: Point2) -> Point2 {
    let n = p.norm();
    if n > 0.0 {
        p * (1.0 / n)
    } else {
        Point2::ZERO
    }
}

/// Mean step length times mean unit step direction over consecutive points.
/// A zero-length step contributes a zero direction.
pub fn smooth_steps(points: &[Point2]) -> Point2 {
    let k = points.len().saturating_sub(1);
    if k == 0 {
        return Point2::ZERO;
    }
    let mut speed = 0.0;
    let mut dir = Point2::ZERO;
    for w in points.windows(2) {
        let step = w[1] - w[0];
        speed += step.norm();
        dir += unit(step);
    }
    dir * (speed / (k * k) as f64)
}

/// Smoothed motion from the last four trajectory points.
pub fn smooth_motion(g: &[Point2; 4]) -> Point2 {
    smooth_steps(g)
}

/// Smoothed motion at every point; the first three use the shorter history
/// available (the very first is zero).
pub fn smoothed_motions(points: &[Point2]) -> Vec<Point2> {
    (0..points.len())
        .map(|i| smooth_steps(&points[i.saturating_sub(3)..=i]))
        .collect()
}

/// Smoothed motions of `traj` for frames `from..=to`, using earlier points of
/// the trajectory for the first windows when available.
pub fn motions_over(traj: &Trajectory, from: usize, to: usize) -> Result<Vec<Point2>> {
    if from < traj.start_time() || to > traj.end_time() || from > to {
        return Err(Error::invalid(format!(
            "motion range [{from}, {to}] outside trajectory [{}, {}]",
            traj.start_time(),
            traj.end_time()
        )));
    }
    let pts = traj.points();
    let base = traj.start_time();
    Ok((from..=to)
        .map(|t| {
            let i = t - base;
            smooth_steps(&pts[i.saturating_sub(3)..=i])
        })
        .collect())
}

/// Positions reached from `g0` by applying the motions in order; one longer than `motions`.
pub fn integrate(motions: &[Point2], g0: Point2) -> Vec<Point2> {
    let mut out = Vec::with_capacity(motions.len() + 1);
    let mut g = g0;
    out.push(g);
    for r in motions {
        g += *r;
        out.push(g);
    }
    out
}

/// Keeps the last reliable momentum.
pub fn momentum_fallback(g_prev: Point2, r_last: Point2) -> Point2 {
    g_prev + r_last
}

/// Blends a view's own estimate with predictions from reliable views:
/// `√q_b·g_b + (1 − √q_b)·Σ q_c·pred_c / Σ q_c`.
pub fn predict_fused(q_b: f64, g_b: Point2, reliable: &[(f64, Point2)]) -> Result<Point2> {
    let w: f64 = reliable.iter().map(|(q, _)| q).sum();
    if reliable.is_empty() || !(w > 0.0) {
        return Err(Error::NoReliableView);
    }
    let s = q_b.clamp(0.0, 1.0).sqrt();
    let mut mean = Point2::ZERO;
    for (q, p) in reliable {
        mean += *p * (q / w);
    }
    Ok(g_b * s + mean * (1.0 - s))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(steps: &[(f64, f64)]) -> [Point2; 4] {
        let mut pts = [Point2::ZERO; 4];
        for (i, s) in steps.iter().enumerate() {
            pts[i + 1] = pts[i] + Point2::new(s.0, s.1);
        }
        pts
    }

    fn close(a: Point2, b: Point2) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn smoothing_examples() {
        assert!(close(smooth_motion(&path(&[(1.0, 0.0); 3])), Point2::new(1.0, 0.0)));
        assert!(close(
            smooth_motion(&path(&[(1.0, 0.0), (2.0, 0.0), (3.0, 0.0)])),
            Point2::new(2.0, 0.0)
        ));
        assert!(close(
            smooth_motion(&path(&[(1.0, 0.0), (0.0, 1.0), (1.0, 0.0)])),
            Point2::new(2.0 / 3.0, 1.0 / 3.0)
        ));
        // a stalled step lowers both speed and direction
        let r = smooth_motion(&path(&[(3.0, 0.0), (0.0, 0.0), (3.0, 0.0)]));
        assert!(close(r, Point2::new(2.0 * 2.0 / 3.0, 0.0)));
    }

    #[test]
    fn early_windows_are_partial() {
        let pts: Vec<Point2> = (0..6).map(|i| Point2::new(i as f64 * 2.0, 0.0)).collect();
        let r = smoothed_motions(&pts);
        assert_eq!(r[0], Point2::ZERO);
        assert!(r[1..].iter().all(|m| close(*m, Point2::new(2.0, 0.0))));
    }

    #[test]
    fn integrate_examples() {
        let g0 = Point2::new(3.0, 4.0);
        assert!(integrate(&[Point2::ZERO; 5], g0).iter().all(|p| *p == g0));
        let out = integrate(&[Point2::new(1.0, 0.0); 2], Point2::ZERO);
        assert_eq!(out, vec![Point2::ZERO, Point2::new(1.0, 0.0), Point2::new(2.0, 0.0)]);
    }

    #[test]
    fn fusion_examples() {
        let one = predict_fused(0.0, Point2::new(1.0, 1.0), &[(0.7, Point2::new(5.0, 6.0))]).unwrap();
        assert!(close(one, Point2::new(5.0, 6.0)));
        let half =
            predict_fused(0.25, Point2::new(10.0, 0.0), &[(1.0, Point2::new(20.0, 0.0))]).unwrap();
        assert!(close(half, Point2::new(15.0, 0.0)));
        let two = predict_fused(
            0.0,
            Point2::ZERO,
            &[(0.8, Point2::new(10.0, 0.0)), (0.6, Point2::new(20.0, 0.0))],
        )
        .unwrap();
        assert!((two.u - 14.285714285714286).abs() < 1e-12);
        assert!(matches!(predict_fused(0.1, Point2::ZERO, &[]), Err(Error::NoReliableView)));
    }

    #[test]
    fn fallback_examples() {
        let g = Point2::new(5.0, 5.0);
        assert_eq!(momentum_fallback(g, Point2::ZERO), g);
        assert_eq!(momentum_fallback(g, Point2::new(1.0, -1.0)), Point2::new(6.0, 4.0));
        let r = Point2::new(0.5, 2.0);
        let mut p = g;
        for _ in 0..7 {
            p = momentum_fallback(p, r);
        }
        assert!(close(p, g + r * 7.0));
    }
}
