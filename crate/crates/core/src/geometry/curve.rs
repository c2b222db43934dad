//! Parametric planar curves: the trait shared by smooth foil profiles and
//! fitted interpolating splines, plus a general rational B-spline.

use serde::{Deserialize, Serialize};

use super::point::Point2;
use super::quadrature::adaptive_integrate;
use crate::error::{Error, Result};

/// Speeds below this are treated as a vanishing first derivative.
const MIN_SPEED: f64 = 1e-12;

/// Absolute tolerance of [`ParamCurve::arc_length`], in chord units.
pub const ARC_LENGTH_TOL: f64 = 1e-9;

/// A C¹ (piecewise C²) planar curve over a closed parameter interval.
pub trait ParamCurve {
    fn domain(&self) -> (f64, f64);

    /// Position, first and second derivative at `t`. `t` is assumed to lie
    /// in the domain.
    fn derivs(&self, t: f64) -> [Point2; 3];

    /// Parameters where the curve may lose smoothness, sorted, including
    /// both domain ends.
    fn breakpoints(&self) -> Vec<f64>;

    /// Parameter of the leading edge: the point splitting the upper and
    /// lower surfaces. Defaults to the domain midpoint.
    fn leading_edge_param(&self) -> f64 {
        let (a, b) = self.domain();
        0.5 * (a + b)
    }

    fn check_param(&self, t: f64) -> Result<()> {
        let (a, b) = self.domain();
        if !(t >= a && t <= b) {
            return Err(Error::Domain(format!("parameter {t} outside [{a}, {b}]")));
        }
        Ok(())
    }

    fn eval(&self, t: f64) -> Result<Point2> {
        self.check_param(t)?;
        Ok(self.derivs(t)[0])
    }

    fn speed(&self, t: f64) -> f64 {
        self.derivs(t)[1].norm()
    }

    /// Signed curvature `(x'y'' - y'x'') / |c'|^3`.
    fn curvature(&self, t: f64) -> Result<f64> {
        self.check_param(t)?;
        let [_, d1, d2] = self.derivs(t);
        let speed = d1.norm();
        if speed < MIN_SPEED {
            return Err(Error::Singularity { t });
        }
        Ok(d1.cross(d2) / (speed * speed * speed))
    }

    /// Arc length between `t0` and `t1` by adaptive Gauss-Legendre
    /// quadrature on each smooth span.
    fn arc_length(&self, t0: f64, t1: f64) -> Result<f64> {
        self.check_param(t0)?;
        self.check_param(t1)?;
        if t1 < t0 {
            return Err(Error::Domain(format!("reversed interval [{t0}, {t1}]")));
        }
        if t0 == t1 {
            return Ok(0.0);
        }
        let speed = |t: f64| self.speed(t);
        let spans: Vec<(f64, f64)> = self
            .breakpoints()
            .windows(2)
            .map(|w| (w[0].max(t0), w[1].min(t1)))
            .filter(|(a, b)| b > a)
            .collect();
        let tol = ARC_LENGTH_TOL / (10.0 * spans.len().max(1) as f64);
        Ok(spans
            .iter()
            .map(|&(a, b)| adaptive_integrate(&speed, a, b, tol))
            .sum())
    }

    fn total_length(&self) -> Result<f64> {
        let (a, b) = self.domain();
        self.arc_length(a, b)
    }
}

/// A rational B-spline of arbitrary degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Nurbs {
    degree: usize,
    control_points: Vec<Point2>,
    weights: Vec<f64>,
    knots: Vec<f64>,
}

impl Nurbs {
    pub fn new(
        degree: usize,
        control_points: Vec<Point2>,
        weights: Vec<f64>,
        knots: Vec<f64>,
    ) -> Result<Self> {
        let n = control_points.len();
        if degree == 0 || n <= degree {
            return Err(Error::Domain(format!(
                "degree {degree} needs more than {degree} control points, got {n}"
            )));
        }
        if weights.len() != n {
            return Err(Error::Arity {
                expected: n,
                got: weights.len(),
            });
        }
        if knots.len() != n + degree + 1 {
            return Err(Error::Arity {
                expected: n + degree + 1,
                got: knots.len(),
            });
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::Domain("weights must be positive and finite".into()));
        }
        if knots.windows(2).any(|w| !(w[1] >= w[0])) || knots.iter().any(|k| !k.is_finite()) {
            return Err(Error::Domain("knot vector must be nondecreasing".into()));
        }
        if knots[degree] >= knots[n] {
            return Err(Error::Domain("empty parameter domain".into()));
        }
        if control_points.iter().any(|p| !p.is_finite()) {
            return Err(Error::Domain("control points must be finite".into()));
        }
        Ok(Nurbs {
            degree,
            control_points,
            weights,
            knots,
        })
    }

    /// Clamped uniform knot vector for `n` control points.
    pub fn clamped_uniform_knots(n: usize, degree: usize) -> Vec<f64> {
        let spans = n - degree;
        let mut knots = vec![0.0; degree + 1];
        knots.extend((1..spans).map(|i| i as f64 / spans as f64));
        knots.extend(std::iter::repeat_n(1.0, degree + 1));
        knots
    }

    /// Full circle as a rational quadratic with nine control points,
    /// starting and ending at `center + (radius, 0)`.
    pub fn circle(center: Point2, radius: f64) -> Nurbs {
        let w = std::f64::consts::FRAC_1_SQRT_2;
        let pts = [
            (1.0, 0.0),
            (1.0, 1.0),
            (0.0, 1.0),
            (-1.0, 1.0),
            (-1.0, 0.0),
            (-1.0, -1.0),
            (0.0, -1.0),
            (1.0, -1.0),
            (1.0, 0.0),
        ];
        Nurbs {
            degree: 2,
            control_points: pts
                .iter()
                .map(|&(x, y)| center + Point2::new(x, y) * radius)
                .collect(),
            weights: vec![1.0, w, 1.0, w, 1.0, w, 1.0, w, 1.0],
            knots: vec![0.0, 0.0, 0.0, 0.25, 0.25, 0.5, 0.5, 0.75, 0.75, 1.0, 1.0, 1.0],
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn control_points(&self) -> &[Point2] {
        &self.control_points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    fn find_span(&self, t: f64) -> usize {
        let n = self.control_points.len();
        let p = self.degree;
        if t >= self.knots[n] {
            // last nonempty span
            let mut s = n - 1;
            while s > p && self.knots[s] >= self.knots[s + 1] {
                s -= 1;
            }
            return s;
        }
        if t <= self.knots[p] {
            let mut s = p;
            while self.knots[s + 1] <= self.knots[p] {
                s += 1;
            }
            return s;
        }
        let (mut lo, mut hi) = (p, n);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if t < self.knots[mid] {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo
    }

    /// Nonzero basis functions and their first two derivatives at `t`
    /// (the standard triangular-table construction).
    fn basis_derivs(&self, span: usize, t: f64) -> [Vec<f64>; 3] {
        let p = self.degree;
        let u = &self.knots;
        let mut ndu = vec![vec![0.0; p + 1]; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        ndu[0][0] = 1.0;
        for j in 1..=p {
            left[j] = t - u[span + 1 - j];
            right[j] = u[span + j] - t;
            let mut saved = 0.0;
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }
        let nd = 2.min(p);
        let mut ders = [vec![0.0; p + 1], vec![0.0; p + 1], vec![0.0; p + 1]];
        for j in 0..=p {
            ders[0][j] = ndu[j][p];
        }
        let mut a = [vec![0.0; p + 1], vec![0.0; p + 1]];
        for r in 0..=p {
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0][0] = 1.0;
            for k in 1..=nd {
                let mut d = 0.0;
                let rk = r as isize - k as isize;
                let pk = p - k;
                if r >= k {
                    a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                    d = a[s2][0] * ndu[rk as usize][pk];
                }
                let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
                let j2 = if r as isize - 1 <= pk as isize { k - 1 } else { p - r };
                for j in j1..=j2 {
                    let idx = (rk + j as isize) as usize;
                    a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                    d += a[s2][j] * ndu[idx][pk];
                }
                if r <= pk {
                    a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                    d += a[s2][k] * ndu[r][pk];
                }
                ders[k][r] = d;
                std::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut factor = p as f64;
        for k in 1..=nd {
            for v in ders[k].iter_mut() {
                *v *= factor;
            }
            factor *= (p - k) as f64;
        }
        ders
    }
}

impl ParamCurve for Nurbs {
    fn domain(&self) -> (f64, f64) {
        (self.knots[self.degree], self.knots[self.control_points.len()])
    }

    fn derivs(&self, t: f64) -> [Point2; 3] {
        let (a, b) = self.domain();
        let t = t.clamp(a, b);
        let span = self.find_span(t);
        let ders = self.basis_derivs(span, t);
        let first = span - self.degree;
        let mut homog = [Point2::ZERO; 3];
        let mut w = [0.0; 3];
        for k in 0..3 {
            for (j, n) in ders[k].iter().enumerate() {
                let wi = self.weights[first + j];
                homog[k] += self.control_points[first + j] * (n * wi);
                w[k] += n * wi;
            }
        }
        let c = homog[0] * (1.0 / w[0]);
        let c1 = (homog[1] - c * w[1]) * (1.0 / w[0]);
        let c2 = (homog[2] - c1 * (2.0 * w[1]) - c * w[2]) * (1.0 / w[0]);
        [c, c1, c2]
    }

    fn breakpoints(&self) -> Vec<f64> {
        let (a, b) = self.domain();
        let mut out: Vec<f64> = vec![a];
        for &k in &self.knots {
            if k > a && k < b && Some(&k) != out.last() {
                out.push(k);
            }
        }
        out.push(b);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn unit_circle() -> Nurbs {
        Nurbs::circle(Point2::ZERO, 1.0)
    }

    fn cubic_bezier(pts: [(f64, f64); 4]) -> Nurbs {
        Nurbs::new(
            3,
            pts.iter().map(|&(x, y)| Point2::new(x, y)).collect(),
            vec![1.0; 4],
            vec![0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0],
        )
        .unwrap()
    }

    #[test]
    fn circle_points_lie_on_circle() {
        let c = unit_circle();
        for i in 0..=1000 {
            let p = c.eval(i as f64 / 1000.0).unwrap();
            assert!((p.norm() - 1.0).abs() < 1e-12, "{p:?}");
        }
    }

    #[test]
    fn circle_curvature_and_quarter_length() {
        let c = unit_circle();
        for i in 0..=200 {
            let k = c.curvature(i as f64 / 200.0).unwrap();
            assert!((k - 1.0).abs() < 1e-9, "{k}");
        }
        let q = c.arc_length(0.0, 0.25).unwrap();
        assert!((q - FRAC_PI_2).abs() < 1e-8, "{q}");
    }

    #[test]
    fn straight_segment_midpoint_zero_curvature_unit_length() {
        let c = cubic_bezier([(0.0, 0.0), (1.0 / 3.0, 0.0), (2.0 / 3.0, 0.0), (1.0, 0.0)]);
        let m = c.eval(0.5).unwrap();
        assert!((m.x - 0.5).abs() < 1e-12 && m.y.abs() < 1e-12);
        assert_eq!(c.curvature(0.3).unwrap(), 0.0);
        assert!((c.total_length().unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(c.arc_length(0.4, 0.4).unwrap(), 0.0);
    }

    #[test]
    fn collinear_control_net_is_linear_precise() {
        let c = Nurbs::new(
            3,
            (0..7).map(|i| Point2::new(i as f64 * 0.3, 2.0 * i as f64 * 0.3 + 1.0)).collect(),
            vec![1.0, 2.0, 0.5, 1.0, 3.0, 1.0, 1.0],
            Nurbs::clamped_uniform_knots(7, 3),
        )
        .unwrap();
        for i in 0..=100 {
            let p = c.eval(i as f64 / 100.0).unwrap();
            assert!((p.y - (2.0 * p.x + 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn s_curve_curvature_flips_at_analytic_inflection() {
        let pts = [(0.0, 0.0), (1.0, 1.0), (2.0, -1.0), (3.0, 0.0)];
        let c = cubic_bezier(pts);
        // x' = 3, so the curvature numerator is 3 y''(t); y(t) = 3t(1-t)^2 - 3t^2(1-t)
        // gives y'' = 36t - 18, root at t = 1/2.
        let root = 0.5;
        assert!(c.curvature(root).unwrap().abs() < 1e-12);
        let before = c.curvature(root - 1e-6).unwrap();
        let after = c.curvature(root + 1e-6).unwrap();
        assert!(before < 0.0 && after > 0.0);
    }

    #[test]
    fn arc_length_rejects_reversed_and_out_of_domain() {
        let c = unit_circle();
        assert!(matches!(c.arc_length(0.5, 0.2), Err(Error::Domain(_))));
        assert!(c.eval(1.5).is_err());
        assert!(c.curvature(-0.1).is_err());
    }

    #[test]
    fn vanishing_speed_is_singular() {
        let c = cubic_bezier([(0.0, 0.0), (0.0, 0.0), (1.0, 1.0), (2.0, 0.0)]);
        assert!(matches!(c.curvature(0.0), Err(Error::Singularity { .. })));
    }

    #[test]
    fn constructor_validates() {
        let pts: Vec<Point2> = (0..5).map(|i| Point2::new(i as f64, 0.0)).collect();
        assert!(Nurbs::new(3, pts.clone(), vec![1.0; 4], Nurbs::clamped_uniform_knots(5, 3)).is_err());
        assert!(Nurbs::new(3, pts.clone(), vec![1.0, 1.0, -1.0, 1.0, 1.0], Nurbs::clamped_uniform_knots(5, 3)).is_err());
        let mut k = Nurbs::clamped_uniform_knots(5, 3);
        k.swap(4, 5);
        k[4] = 0.9;
        assert!(Nurbs::new(3, pts, vec![1.0; 5], k).is_err());
    }

    proptest::proptest! {
        #[test]
        fn arc_length_is_additive(a in 0.0f64..1.0, b in 0.0f64..1.0, c in 0.0f64..1.0) {
            let mut v = [a, b, c];
            v.sort_by(f64::total_cmp);
            let curve = unit_circle();
            let whole = curve.arc_length(v[0], v[2]).unwrap();
            let parts = curve.arc_length(v[0], v[1]).unwrap() + curve.arc_length(v[1], v[2]).unwrap();
            proptest::prop_assert!((whole - parts).abs() < 2e-9);
        }
    }
}
