//! N-point polygonal encodings of smooth profiles under four spacing
//! schemes, and re-sampling of existing polylines through a fitted spline.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::quadrature::gl8_integrate;
use crate::geometry::{point_segment_distance, InterpolatingSpline, ParamCurve, Point2};
use crate::ingest::{PolylineFoil, Provenance};

pub const DEFAULT_N: usize = 200;
/// Panels of the composite quadrature behind the cumulative integrals.
pub const PANELS: usize = 1024;
/// Curvature floor as a fraction of the mean absolute curvature.
pub const CURVATURE_FLOOR: f64 = 0.05;
/// Parameter tolerance of the cumulative-integral inversion, relative to
/// the domain width.
const INVERSION_TOL: f64 = 1e-13;
/// Dense samples per output segment for the Hausdorff estimate.
const HAUSDORFF_OVERSAMPLE: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    UniformParametric,
    Cosine,
    CurvatureBased,
    UniformPoint,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::UniformParametric,
        Scheme::Cosine,
        Scheme::CurvatureBased,
        Scheme::UniformPoint,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Scheme::UniformParametric => "uniform-parametric",
            Scheme::Cosine => "cosine",
            Scheme::CurvatureBased => "curvature-based",
            Scheme::UniformPoint => "uniform-point",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.tag() == s)
            .ok_or_else(|| Error::Domain(format!("unknown scheme '{s}'")))
    }
}

/// Cumulative integral of a positive density over panel boundaries.
struct CumulativeTable {
    breaks: Vec<f64>,
    cum: Vec<f64>,
}

impl CumulativeTable {
    fn build<C: ParamCurve + ?Sized, F: Fn(f64) -> f64>(curve: &C, density: &F) -> Self {
        let spans: Vec<(f64, f64)> = curve
            .breakpoints()
            .windows(2)
            .map(|w| (w[0], w[1]))
            .filter(|(a, b)| b > a)
            .collect();
        let per_span = (PANELS / spans.len()).max(1);
        let mut breaks = vec![spans[0].0];
        for &(a, b) in &spans {
            for k in 1..=per_span {
                breaks.push(if k == per_span { b } else { a + (b - a) * k as f64 / per_span as f64 });
            }
        }
        let mut cum = Vec::with_capacity(breaks.len());
        cum.push(0.0);
        for w in breaks.windows(2) {
            cum.push(cum.last().unwrap() + gl8_integrate(density, w[0], w[1]));
        }
        CumulativeTable { breaks, cum }
    }

    fn total(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    /// Parameter where the cumulative integral reaches `target`.
    fn invert<F: Fn(f64) -> f64>(&self, density: &F, target: f64) -> f64 {
        let k = match self.cum.binary_search_by(|c| c.total_cmp(&target)) {
            Ok(i) => return self.breaks[i],
            Err(i) => i.clamp(1, self.cum.len() - 1) - 1,
        };
        let (mut lo, mut hi) = (self.breaks[k], self.breaks[k + 1]);
        let base = self.cum[k];
        let tol = INVERSION_TOL * (self.breaks.last().unwrap() - self.breaks[0]);
        let span = self.cum[k + 1] - base;
        let mut t = if span > 0.0 { lo + (hi - lo) * (target - base) / span } else { 0.5 * (lo + hi) };
        // Newton on the panel integral, bisecting whenever a step leaves
        // the bracket
        for _ in 0..200 {
            let f = base + gl8_integrate(density, self.breaks[k], t) - target;
            if f < 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            let d = density(t);
            let newton = t - f / d;
            let next = if d > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            let step = (next - t).abs();
            t = next;
            if step <= tol || hi - lo <= tol {
                break;
            }
        }
        t
    }
}

fn invert_uniform<C: ParamCurve + ?Sized, F: Fn(f64) -> f64>(curve: &C, density: F, n: usize) -> Vec<f64> {
    let (a, b) = curve.domain();
    let table = CumulativeTable::build(curve, &density);
    let total = table.total();
    let mut ts = Vec::with_capacity(n);
    ts.push(a);
    for i in 1..n - 1 {
        ts.push(table.invert(&density, total * i as f64 / (n - 1) as f64));
    }
    ts.push(b);
    ts
}

/// Parameter values of the `n` samples of `curve` under `scheme`.
pub fn scheme_parameters<C: ParamCurve + ?Sized>(curve: &C, scheme: Scheme, n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::Domain(format!("need at least 2 samples, got {n}")));
    }
    let (a, b) = curve.domain();
    let frac = |i: usize| i as f64 / (n - 1) as f64;
    let ts = match scheme {
        Scheme::UniformParametric => (0..n)
            .map(|i| if i == n - 1 { b } else { a + frac(i) * (b - a) })
            .collect(),
        Scheme::Cosine => {
            // half-cosine on each surface: clustering at both edges
            let le = curve.leading_edge_param();
            (0..n)
                .map(|i| {
                    let xi = frac(i);
                    if i == n - 1 {
                        b
                    } else if xi <= 0.5 {
                        a + (le - a) * 0.5 * (1.0 - (2.0 * std::f64::consts::PI * xi).cos())
                    } else {
                        le + (b - le) * 0.5 * (1.0 - (2.0 * std::f64::consts::PI * (xi - 0.5)).cos())
                    }
                })
                .collect()
        }
        Scheme::UniformPoint => invert_uniform(curve, |t| curve.speed(t), n),
        Scheme::CurvatureBased => {
            let abs_kappa_ds = |t: f64| {
                let [_, d1, d2] = curve.derivs(t);
                let s = d1.norm();
                if s == 0.0 {
                    0.0
                } else {
                    (d1.cross(d2) / (s * s)).abs()
                }
            };
            // probe for vanishing speed before trusting the integrals
            for w in curve.breakpoints().windows(2) {
                for k in 0..=8 {
                    let t = w[0] + (w[1] - w[0]) * k as f64 / 8.0;
                    curve.curvature(t)?;
                }
            }
            let turning = CumulativeTable::build(curve, &abs_kappa_ds).total();
            let length = curve.total_length()?;
            let eps = CURVATURE_FLOOR * turning / length;
            if eps > 0.0 {
                invert_uniform(curve, |t| abs_kappa_ds(t) + eps * curve.speed(t), n)
            } else {
                invert_uniform(curve, |t| curve.speed(t), n)
            }
        }
    };
    Ok(ts)
}

/// Samples `curve` at `n` points under `scheme`.
pub fn discretize<C: ParamCurve + ?Sized>(curve: &C, scheme: Scheme, n: usize) -> Result<PolylineFoil> {
    if n < 4 {
        return Err(Error::Domain(format!("need N >= 4, got {n}")));
    }
    let ts = scheme_parameters(curve, scheme, n)?;
    let points = ts.iter().map(|&t| curve.derivs(t)[0]).collect();
    PolylineFoil::new(points, "", Provenance::Parametric, Some(scheme))
}

/// Output of [`resample_polyline`].
#[derive(Debug, Clone)]
pub struct Resampled {
    pub foil: PolylineFoil,
    /// Hausdorff distance between the output polyline and a dense sampling
    /// of the fitted spline, chord units.
    pub hausdorff: f64,
}

/// Re-encodes a polyline: fits a chord-length cubic spline through its
/// points, then discretizes the spline.
pub fn resample_polyline(pf: &PolylineFoil, scheme: Scheme, n: usize) -> Result<Resampled> {
    let spline = InterpolatingSpline::fit(pf.points())?;
    let out = discretize(&spline, scheme, n)?;
    let (a, b) = spline.domain();
    let m = HAUSDORFF_OVERSAMPLE * (n - 1);
    let dense: Vec<Point2> = (0..=m)
        .map(|i| spline.derivs(a + (b - a) * i as f64 / m as f64)[0])
        .collect();
    let hausdorff = hausdorff(&dense, out.points());
    let foil = PolylineFoil::new(out.points().to_vec(), pf.name(), pf.provenance(), Some(scheme))?;
    Ok(Resampled { foil, hausdorff })
}

fn distance_to_polyline(p: Point2, line: &[Point2]) -> f64 {
    line.windows(2)
        .map(|w| point_segment_distance(p, w[0], w[1]))
        .fold(f64::INFINITY, f64::min)
}

/// Symmetric Hausdorff distance between two polylines (vertices against
/// segments in both directions).
pub fn hausdorff(a: &[Point2], b: &[Point2]) -> f64 {
    let ab = a.iter().map(|p| distance_to_polyline(*p, b)).fold(0.0, f64::max);
    let ba = b.iter().map(|p| distance_to_polyline(*p, a)).fold(0.0, f64::max);
    ab.max(ba)
}
