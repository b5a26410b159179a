//! Convex polygon helpers for exact occlusion coverage.

use crate::geometry::Point2;

fn cross(o: Point2, a: Point2, b: Point2) -> f64 {
    (a.u - o.u) * (b.v - o.v) - (a.v - o.v) * (b.u - o.u)
}

/// Counter-clockwise hull (in image axes) by the monotone chain; collinear points dropped.
pub fn convex_hull(points: &[Point2]) -> Vec<Point2> {
    let mut pts: Vec<Point2> = points.to_vec();
    pts.sort_by(|a, b| a.u.total_cmp(&b.u).then(a.v.total_cmp(&b.v)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<Point2> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point2> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Shoelace area (absolute).
pub fn area(poly: &[Point2]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        s += a.u * b.v - b.u * a.v;
    }
    0.5 * s.abs()
}

/// Sutherland–Hodgman clip of `subject` against the convex, consistently
/// oriented polygon `clip`.
pub fn clip(subject: &[Point2], clip: &[Point2]) -> Vec<Point2> {
    if subject.len() < 3 || clip.len() < 3 {
        return Vec::new();
    }
    let orient = if signed_area(clip) >= 0.0 { 1.0 } else { -1.0 };
    let mut out = subject.to_vec();
    for i in 0..clip.len() {
        let (a, b) = (clip[i], clip[(i + 1) % clip.len()]);
        let inside = |p: Point2| orient * cross(a, b, p) >= 0.0;
        let input = std::mem::take(&mut out);
        if input.is_empty() {
            break;
        }
        for j in 0..input.len() {
            let cur = input[j];
            let prev = input[(j + input.len() - 1) % input.len()];
            let (ci, pi) = (inside(cur), inside(prev));
            if ci {
                if !pi {
                    out.push(intersect(prev, cur, a, b));
                }
                out.push(cur);
            } else if pi {
                out.push(intersect(prev, cur, a, b));
            }
        }
    }
    out
}

fn signed_area(poly: &[Point2]) -> f64 {
    let mut s = 0.0;
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        s += a.u * b.v - b.u * a.v;
    }
    0.5 * s
}

/// Intersection of segment `p→q` with the infinite line `a→b`.
fn intersect(p: Point2, q: Point2, a: Point2, b: Point2) -> Point2 {
    let d1 = cross(a, b, p);
    let d2 = cross(a, b, q);
    let t = d1 / (d1 - d2);
    p + (q - p) * t
}

pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<Point2> {
    vec![
        Point2::new(x0, y0),
        Point2::new(x1, y0),
        Point2::new(x1, y1),
        Point2::new(x0, y1),
    ]
}

/// Area of the union of convex polygons by inclusion–exclusion over their intersections.
pub fn union_area(polys: &[Vec<Point2>]) -> f64 {
    let polys: Vec<&Vec<Point2>> = polys.iter().filter(|p| area(p) > 0.0).collect();
    let mut total = 0.0;
    // depth-first over subsets keeps the running intersection
    fn recurse(polys: &[&Vec<Point2>], start: usize, current: &[Point2], k: usize, total: &mut f64) {
        for i in start..polys.len() {
            let next = if k == 0 {
                polys[i].clone()
            } else {
                clip(current, polys[i])
            };
            let a = area(&next);
            if a <= 0.0 {
                continue;
            }
            *total += if k.is_multiple_of(2) { a } else { -a };
            recurse(polys, i + 1, &next, k + 1, total);
        }
    }
    recurse(&polys, 0, &[], 0, &mut total);
    total
}

pub fn contains(poly: &[Point2], p: Point2) -> bool {
    if poly.len() < 3 {
        return false;
    }
    let orient = if signed_area(poly) >= 0.0 { 1.0 } else { -1.0 };
    (0..poly.len()).all(|i| orient * cross(poly[i], poly[(i + 1) % poly.len()], p) >= 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hull_of_square_with_interior_point() {
        let pts = vec![
            Point2::new(0.0, 0.0),
            Point2::new(2.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(2.0, 2.0),
            Point2::new(0.0, 2.0),
        ];
        let h = convex_hull(&pts);
        assert_eq!(h.len(), 4);
        assert_eq!(area(&h), 4.0);
    }

    #[test]
    fn clipping_overlapping_squares() {
        let a = rect(0.0, 0.0, 2.0, 2.0);
        let b = rect(1.0, 1.0, 3.0, 3.0);
        assert!((area(&clip(&a, &b)) - 1.0).abs() < 1e-12);
        assert_eq!(area(&clip(&a, &rect(5.0, 5.0, 6.0, 6.0))), 0.0);
    }

    #[test]
    fn union_by_inclusion_exclusion() {
        let polys = vec![
            rect(0.0, 0.0, 2.0, 2.0),
            rect(1.0, 0.0, 3.0, 2.0),
            rect(0.5, 0.5, 2.5, 1.5),
        ];
        assert!((union_area(&polys) - 6.0).abs() < 1e-12);
        let disjoint = vec![rect(0.0, 0.0, 1.0, 1.0), rect(2.0, 2.0, 3.0, 3.0)];
        assert!((union_area(&disjoint) - 2.0).abs() < 1e-12);
    }
}
