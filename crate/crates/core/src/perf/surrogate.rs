use super::{Evaluator, FlowCondition, PolarPoint, PolarSource};
use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::ingest::PolylineFoil;

/// Turbulent flat-plate skin-friction coefficient.
fn flat_plate_cd(reynolds: f64) -> f64 {
    0.074 / reynolds.powf(0.2)
}

const FORM_FACTOR: f64 = 2.7;

/// Thin-airfoil lift and form-factor drag. A deterministic proxy that
/// follows camber and thickness trends; not a flow solution.
#[derive(Debug, Clone, Copy, Default)]
pub struct SurrogateEvaluator;

/// Piecewise-linear `y(x)` through points sorted by `x`.
fn interp_sorted(sorted: &[Point2], x: f64) -> Option<f64> {
    let (first, last) = (sorted.first()?, sorted.last()?);
    if x < first.x || x > last.x {
        return None;
    }
    let i = sorted.partition_point(|p| p.x < x);
    if i == 0 {
        return Some(first.y);
    }
    if i == sorted.len() {
        return Some(last.y);
    }
    let (a, b) = (sorted[i - 1], sorted[i]);
    if b.x == a.x {
        return Some(0.5 * (a.y + b.y));
    }
    let s = (x - a.x) / (b.x - a.x);
    Some(a.y + s * (b.y - a.y))
}

/// Camber and thickness of a chord-normalized profile at the union of its
/// surface stations: `(x, camber, thickness)` triples sorted by `x`.
pub fn mean_line(pf: &PolylineFoil) -> Result<Vec<(f64, f64, f64)>> {
    let pts = pf.points();
    let le = pf.leading_edge_index();
    let (upper, lower) = (&pts[..=le], &pts[le..]);
    if upper.len() < 2 || lower.len() < 2 {
        return Err(Error::Degenerate("cannot split the profile into two surfaces".into()));
    }
    let mut su = upper.to_vec();
    su.sort_by(|a, b| a.x.total_cmp(&b.x));
    let mut sl = lower.to_vec();
    sl.sort_by(|a, b| a.x.total_cmp(&b.x));
    let lo = su[0].x.max(sl[0].x);
    let hi = su[su.len() - 1].x.min(sl[sl.len() - 1].x);
    if !(hi > lo) {
        return Err(Error::Degenerate("surfaces share no chordwise range".into()));
    }
    let mut xs: Vec<f64> = su.iter().chain(&sl).map(|p| p.x).filter(|&x| x >= lo && x <= hi).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs.into_iter()
        .map(|x| {
            let yu = interp_sorted(&su, x);
            let yl = interp_sorted(&sl, x);
            match (yu, yl) {
                (Some(u), Some(l)) => Ok((x, 0.5 * (u + l), u - l)),
                _ => Err(Error::Degenerate(format!("no surface height at x = {x}"))),
            }
        })
        .collect()
}

/// Chord-normalized copy: leading edge x at 0, trailing edge x at 1, the
/// leading-edge point at y = 0.
fn normalized(pf: &PolylineFoil) -> Result<PolylineFoil> {
    let (lo, hi) = pf.x_range();
    let chord = hi - lo;
    if !(chord > 0.0) || !chord.is_finite() {
        return Err(Error::Degenerate("zero chord".into()));
    }
    let le = pf.points()[pf.leading_edge_index()];
    let pts = pf
        .points()
        .iter()
        .map(|p| Point2::new((p.x - lo) / chord, (p.y - le.y) / chord))
        .collect();
    Ok(PolylineFoil::from_points_unchecked(pts, pf.name(), pf.provenance(), pf.scheme()))
}

/// Zero-lift angle of a piecewise-linear camber line, from the thin-airfoil
/// integral `α_L0 = -(1/π) ∫ z'(θ) (cos θ - 1) dθ` with `x = (1 - cos θ)/2`.
/// Each linear piece is integrated in closed form.
fn zero_lift_angle(line: &[(f64, f64, f64)]) -> f64 {
    let theta = |x: f64| (1.0 - 2.0 * x.clamp(0.0, 1.0)).acos();
    let antiderivative = |t: f64| t.sin() - t;
    let mut integral = 0.0;
    for w in line.windows(2) {
        let ((x0, z0, _), (x1, z1, _)) = (w[0], w[1]);
        if x1 <= x0 {
            continue;
        }
        let slope = (z1 - z0) / (x1 - x0);
        integral += slope * (antiderivative(theta(x1)) - antiderivative(theta(x0)));
    }
    -integral / std::f64::consts::PI
}

impl Evaluator for SurrogateEvaluator {
    fn name(&self) -> &str {
        "surrogate"
    }

    fn evaluate(&self, pf: &PolylineFoil, fc: &FlowCondition) -> Result<PolarPoint> {
        let norm = normalized(pf)?;
        let line = mean_line(&norm)?;
        let alpha_l0 = zero_lift_angle(&line);
        let camber_term = -alpha_l0 / 2.0;
        let cl = 2.0 * std::f64::consts::PI * (fc.alpha_rad() + 2.0 * camber_term);
        let thickness = line.iter().map(|l| l.2).fold(0.0, f64::max);
        let cd = flat_plate_cd(fc.reynolds) * (1.0 + FORM_FACTOR * thickness);
        Ok(PolarPoint::converged(cl, cd, PolarSource::Surrogate))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Provenance;
    use std::f64::consts::PI;

    fn foil(upper: impl Fn(f64) -> f64, lower: impl Fn(f64) -> f64, n: usize) -> PolylineFoil {
        let xs: Vec<f64> = (0..=n).map(|i| 0.5 * (1.0 - (PI * i as f64 / n as f64).cos())).collect();
        let mut pts: Vec<Point2> = xs.iter().rev().map(|&x| Point2::new(x, upper(x))).collect();
        pts.extend(xs.iter().skip(1).map(|&x| Point2::new(x, lower(x))));
        PolylineFoil::from_points_unchecked(pts, "t", Provenance::File, None)
    }

    fn thickness(t: f64) -> impl Fn(f64) -> f64 {
        move |x: f64| 5.0 * t * (0.2969 * x.sqrt() - 0.126 * x - 0.3516 * x * x + 0.2843 * x.powi(3) - 0.1036 * x.powi(4))
    }

    #[test]
    fn symmetric_foil_at_zero_incidence_has_no_lift() {
        let h = thickness(0.12);
        let pf = foil(&h, |x| -h(x), 80);
        let fc = FlowCondition::new(5e5, 0.0, 0.0, 100).unwrap();
        assert_eq!(SurrogateEvaluator.evaluate(&pf, &fc).unwrap().cl, 0.0);
    }

    #[test]
    fn flat_plate_lift() {
        let pf = foil(|_| 0.0, |_| 0.0, 20);
        let p = SurrogateEvaluator.evaluate(&pf, &FlowCondition::default()).unwrap();
        assert!((p.cl - 2.0 * PI * 3.0f64.to_radians()).abs() < 1e-14);
        assert!((p.cl - 0.3290).abs() < 1e-4);
        assert!((p.cd - 0.074 / 5e5f64.powf(0.2)).abs() < 1e-15);
    }

    #[test]
    fn parabolic_camber_matches_thin_airfoil_theory() {
        // z = 4 m x (1 - x) has α_L0 = -2m
        let m = 0.02;
        let z = move |x: f64| 4.0 * m * x * (1.0 - x);
        let pf = foil(move |x| z(x) + 0.01, move |x| z(x) - 0.01, 2000);
        let fc = FlowCondition::new(5e5, 0.0, 0.0, 100).unwrap();
        let p = SurrogateEvaluator.evaluate(&pf, &fc).unwrap();
        assert!((p.cl - 2.0 * PI * 2.0 * m).abs() < 1e-4, "{}", p.cl);
    }

    #[test]
    fn thicker_foil_has_more_drag() {
        let fc = FlowCondition::default();
        let cd = |t: f64| {
            let h = thickness(t);
            SurrogateEvaluator.evaluate(&foil(&h, |x| -h(x), 60), &fc).unwrap().cd
        };
        assert!(cd(0.15) > cd(0.10));
    }
}
