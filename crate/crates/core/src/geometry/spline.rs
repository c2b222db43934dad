use super::curve::ParamCurve;
use super::point::Point2;
use crate::error::{Error, Result};

/// Natural cubic spline through a point sequence, parameterized by
/// cumulative chord length.
#[derive(Debug, Clone)]
pub struct InterpolatingSpline {
    knots: Vec<f64>,
    points: Vec<Point2>,
    // second derivatives at the knots
    moments: Vec<Point2>,
}

impl InterpolatingSpline {
    /// Consecutive points closer than `1e-12` are merged first; fewer than
    /// four distinct points is an error.
    pub fn fit(points: &[Point2]) -> Result<Self> {
        let mut pts: Vec<Point2> = Vec::with_capacity(points.len());
        for &p in points {
            if !p.is_finite() {
                return Err(Error::Malformed("non-finite coordinate".into()));
            }
            if pts.last().is_none_or(|q: &Point2| q.dist(p) > 1e-12) {
                pts.push(p);
            }
        }
        if pts.len() < 4 {
            return Err(Error::Malformed(format!(
                "need at least 4 distinct points, got {}",
                pts.len()
            )));
        }
        let mut knots = Vec::with_capacity(pts.len());
        knots.push(0.0);
        for w in pts.windows(2) {
            knots.push(knots.last().unwrap() + w[0].dist(w[1]));
        }
        let moments = natural_moments(&knots, &pts);
        Ok(InterpolatingSpline {
            knots,
            points: pts,
            moments,
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    fn interval(&self, t: f64) -> usize {
        let n = self.knots.len();
        match self.knots.binary_search_by(|k| k.total_cmp(&t)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }
}

/// Tridiagonal solve for the second derivatives with natural end conditions.
fn natural_moments(s: &[f64], p: &[Point2]) -> Vec<Point2> {
    let n = s.len();
    let mut m = vec![Point2::ZERO; n];
    if n < 3 {
        return m;
    }
    let h: Vec<f64> = s.windows(2).map(|w| w[1] - w[0]).collect();
    // interior unknowns 1..n-1
    let k = n - 2;
    let mut diag = vec![0.0; k];
    let mut upper = vec![0.0; k];
    let mut rhs = vec![Point2::ZERO; k];
    for i in 0..k {
        let j = i + 1;
        diag[i] = 2.0 * (h[j - 1] + h[j]);
        upper[i] = h[j];
        rhs[i] = ((p[j + 1] - p[j]) * (1.0 / h[j]) - (p[j] - p[j - 1]) * (1.0 / h[j - 1])) * 6.0;
    }
    // Thomas algorithm; sub-diagonal entry of row i is h[i]
    for i in 1..k {
        let w = h[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        let prev = rhs[i - 1];
        rhs[i] = rhs[i] - prev * w;
    }
    let mut sol = vec![Point2::ZERO; k];
    sol[k - 1] = rhs[k - 1] * (1.0 / diag[k - 1]);
    for i in (0..k - 1).rev() {
        sol[i] = (rhs[i] - sol[i + 1] * upper[i]) * (1.0 / diag[i]);
    }
    m[1..(k + 1)].copy_from_slice(&sol);
    m
}

impl ParamCurve for InterpolatingSpline {
    fn domain(&self) -> (f64, f64) {
        (0.0, *self.knots.last().unwrap())
    }

    fn derivs(&self, t: f64) -> [Point2; 3] {
        let i = self.interval(t);
        let (s0, s1) = (self.knots[i], self.knots[i + 1]);
        let h = s1 - s0;
        let (p0, p1) = (self.points[i], self.points[i + 1]);
        let (m0, m1) = (self.moments[i], self.moments[i + 1]);
        let a = (s1 - t) / h;
        let b = (t - s0) / h;
        let pos = p0 * a
            + p1 * b
            + (m0 * (a * a * a - a) + m1 * (b * b * b - b)) * (h * h / 6.0);
        let d1 = (p1 - p0) * (1.0 / h) + (m1 * (3.0 * b * b - 1.0) - m0 * (3.0 * a * a - 1.0)) * (h / 6.0);
        let d2 = m0 * a + m1 * b;
        [pos, d1, d2]
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.knots.clone()
    }

    /// Knot of the point with the smallest x.
    fn leading_edge_param(&self) -> f64 {
        let i = self
            .points
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.x.total_cmp(&b.1.x))
            .map(|(i, _)| i)
            .unwrap();
        self.knots[i]
    }
}
