use robust::{orient2d, Coord};
use serde::{Deserialize, Serialize};

use crate::geometry::Point2;
use crate::ingest::{PolylineFoil, CLOSED_TOL};

/// Curvature sign changes tolerated per surface.
pub const MAX_SIGN_CHANGES: usize = 2;
/// Discrete curvatures below this magnitude (1/chord) carry no sign. The
/// value is the smallest that passes every generator foil under all four
/// schemes.
pub const CURVATURE_DEADBAND: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidityOptions {
    pub max_sign_changes: usize,
    pub curvature_deadband: f64,
}

impl Default for ValidityOptions {
    fn default() -> Self {
        ValidityOptions {
            max_sign_changes: MAX_SIGN_CHANGES,
            curvature_deadband: CURVATURE_DEADBAND,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub is_valid: bool,
    pub self_intersections: usize,
    pub upper_sign_changes: usize,
    pub lower_sign_changes: usize,
    /// Sign changes beyond the allowance, summed over both surfaces.
    pub undulation_inflections: usize,
    pub reasons: Vec<String>,
}

fn coord(p: Point2) -> Coord<f64> {
    Coord { x: p.x, y: p.y }
}

fn orient(a: Point2, b: Point2, c: Point2) -> i8 {
    let o = orient2d(coord(a), coord(b), coord(c));
    if o > 0.0 {
        1
    } else if o < 0.0 {
        -1
    } else {
        0
    }
}

/// `c` lies within the bounding box of `a`-`b` (used for collinear triples).
fn within(a: Point2, b: Point2, c: Point2) -> bool {
    c.x >= a.x.min(b.x) && c.x <= a.x.max(b.x) && c.y >= a.y.min(b.y) && c.y <= a.y.max(b.y)
}

/// Closed-segment intersection with exact orientation signs, touching
/// included.
pub fn segments_intersect(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    if o1 * o2 < 0 && o3 * o4 < 0 {
        return true;
    }
    (o1 == 0 && within(a, b, c))
        || (o2 == 0 && within(a, b, d))
        || (o3 == 0 && within(c, d, a))
        || (o4 == 0 && within(c, d, b))
}

/// Segments of the closed outline: consecutive points, plus a closing
/// segment when the endpoints are apart.
pub fn outline_segments(points: &[Point2]) -> Vec<(Point2, Point2)> {
    let mut segs: Vec<(Point2, Point2)> = points.windows(2).map(|w| (w[0], w[1])).collect();
    let (first, last) = (points[0], points[points.len() - 1]);
    if first.dist(last) > CLOSED_TOL {
        segs.push((last, first));
    }
    segs
}

/// Number of crossing pairs among non-adjacent segments of the cyclic
/// outline.
pub fn count_self_intersections(points: &[Point2]) -> usize {
    let segs = outline_segments(points);
    let n = segs.len();
    let boxes: Vec<[f64; 4]> = segs
        .iter()
        .map(|(a, b)| [a.x.min(b.x), a.x.max(b.x), a.y.min(b.y), a.y.max(b.y)])
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| boxes[i][0].total_cmp(&boxes[j][0]));
    let mut count = 0;
    for (k, &i) in order.iter().enumerate() {
        for &j in &order[k + 1..] {
            if boxes[j][0] > boxes[i][1] {
                break;
            }
            let gap = i.abs_diff(j);
            if gap <= 1 || gap == n - 1 {
                continue;
            }
            if boxes[j][2] > boxes[i][3] || boxes[i][2] > boxes[j][3] {
                continue;
            }
            let ((a, b), (c, d)) = (segs[i], segs[j]);
            if segments_intersect(a, b, c, d) {
                count += 1;
            }
        }
    }
    count
}

/// Signed curvature of the circle through three points.
pub fn circumcircle_curvature(a: Point2, b: Point2, c: Point2) -> f64 {
    let denom = a.dist(b) * b.dist(c) * a.dist(c);
    if denom == 0.0 {
        return 0.0;
    }
    2.0 * (b - a).cross(c - b) / denom
}

/// Sign changes of the discrete curvature along `pts`, ignoring interior
/// points whose curvature magnitude is below `deadband`.
pub fn curvature_sign_changes(pts: &[Point2], deadband: f64) -> usize {
    let mut last = 0i8;
    let mut changes = 0;
    for w in pts.windows(3) {
        let k = circumcircle_curvature(w[0], w[1], w[2]);
        if k.abs() < deadband {
            continue;
        }
        let s = if k > 0.0 { 1 } else { -1 };
        if last != 0 && s != last {
            changes += 1;
        }
        last = s;
    }
    changes
}

pub fn check_validity(pf: &PolylineFoil) -> ValidityReport {
    check_validity_with(pf, &ValidityOptions::default())
}

pub fn check_validity_with(pf: &PolylineFoil, opts: &ValidityOptions) -> ValidityReport {
    let pts = pf.points();
    let mut report = ValidityReport {
        is_valid: false,
        self_intersections: 0,
        upper_sign_changes: 0,
        lower_sign_changes: 0,
        undulation_inflections: 0,
        reasons: Vec::new(),
    };
    if pts.len() < 4 {
        report.reasons.push(format!("{} points", pts.len()));
        return report;
    }
    if pts.iter().any(|p| !p.is_finite()) {
        report.reasons.push("non-finite coordinates".into());
        return report;
    }
    if let Some(i) = pts.windows(2).position(|w| w[0] == w[1]) {
        report.reasons.push(format!("points {i} and {} coincide", i + 1));
        return report;
    }

    report.self_intersections = count_self_intersections(pts);
    if report.self_intersections > 0 {
        report
            .reasons
            .push(format!("{} self-intersections", report.self_intersections));
    }

    let le = pf.leading_edge_index();
    report.upper_sign_changes = curvature_sign_changes(&pts[..=le], opts.curvature_deadband);
    report.lower_sign_changes = curvature_sign_changes(&pts[le..], opts.curvature_deadband);
    for (surface, c) in [("upper", report.upper_sign_changes), ("lower", report.lower_sign_changes)] {
        if c > opts.max_sign_changes {
            report.undulation_inflections += c - opts.max_sign_changes;
            report
                .reasons
                .push(format!("{surface} surface undulates ({c} curvature sign changes)"));
        }
    }
    report.is_valid = report.self_intersections == 0 && report.undulation_inflections == 0;
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Provenance;

    fn pf(pts: &[(f64, f64)]) -> PolylineFoil {
        let v = pts.iter().map(|&(x, y)| Point2::new(x, y)).collect();
        PolylineFoil::from_points_unchecked(v, "t", Provenance::File, None)
    }

    #[test]
    fn bowtie_crosses() {
        let r = check_validity(&pf(&[(0.0, 0.0), (1.0, 1.0), (1.0, 0.0), (0.0, 1.0), (0.0, 0.0)]));
        assert!(r.self_intersections >= 1);
        assert!(!r.is_valid);
    }

    #[test]
    fn convex_quad_is_clean() {
        let r = check_validity(&pf(&[(1.0, 0.0), (0.5, 0.1), (0.0, 0.0), (0.5, -0.1), (1.0, 0.0)]));
        assert_eq!(r.self_intersections, 0);
        assert!(r.is_valid, "{r:?}");
    }

    #[test]
    fn touching_and_collinear_overlap_count() {
        let p = |x, y| Point2::new(x, y);
        assert!(segments_intersect(p(0.0, 0.0), p(2.0, 0.0), p(1.0, 0.0), p(1.0, 1.0)));
        assert!(segments_intersect(p(0.0, 0.0), p(2.0, 0.0), p(1.0, 0.0), p(3.0, 0.0)));
        assert!(!segments_intersect(p(0.0, 0.0), p(1.0, 0.0), p(2.0, 0.0), p(3.0, 0.0)));
    }

    #[test]
    fn circumcircle_of_unit_circle_points() {
        let at = |t: f64| Point2::new(t.cos(), t.sin());
        assert!((circumcircle_curvature(at(0.0), at(0.3), at(0.9)) - 1.0).abs() < 1e-12);
        assert!((circumcircle_curvature(at(0.9), at(0.3), at(0.0)) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn open_trailing_edge_gets_a_closing_segment() {
        // lower surface end crosses above the upper surface start
        let r = check_validity(&pf(&[(1.0, -0.01), (0.5, 0.1), (0.0, 0.0), (0.5, -0.1), (1.0, 0.01)]));
        assert!(r.self_intersections >= 1);
    }
}
