//! The 17-parameter foil generator.
//!
//! Each parameter in [0, 1] is mapped affinely onto a geometric quantity by
//! [`PARAM_TABLE`]. The quantities drive a NACA-style thickness and camber
//! description which is then sampled at four chordwise stations to place
//! the 13 control points of a closed cubic B-spline:
//!
//! ```text
//!  b0  b1   b2   b3   b4   b5       trailing edge -> upper surface -> leading edge
//!  (1) (xa) (xm) (xt) (xf) (0)
//!  b12 b11  b10  b9   b8   b7       leading edge -> lower surface -> trailing edge
//!                          b6 = (0, 0)
//! ```
//!
//! The trailing edge is sharp (`b0 = b12 = (1, 0)`), so the curve closes
//! exactly; the trailing-edge "thickness" parameter scales the aft wedge
//! instead. The leading-edge control points `b5` and `b7` sit on `x = 0`
//! together with `b6`, which puts the leading edge on `x = 0` with a
//! vertical tangent. Their heights are a fraction of the intercept of
//! the adjacent station chord, which keeps the nose of the control polygon
//! convex.

use serde::{Deserialize, Serialize};

use super::curve::{Nurbs, ParamCurve};
use super::point::Point2;
use crate::error::{Error, Result};

pub const N_PARAMS: usize = 17;
pub const N_CONTROL: usize = 13;
pub const ORDER: usize = 4;

/// Closure tolerance at the trailing edge, chord units.
pub const CLOSURE_TOL: f64 = 1e-9;

/// One row of the parameter mapping.
#[derive(Debug, Clone, Copy)]
pub struct ParamRange {
    pub name: &'static str,
    pub low: f64,
    pub high: f64,
}

impl ParamRange {
    fn map(&self, p: f64) -> f64 {
        self.low + p * (self.high - self.low)
    }
}

const fn range(name: &'static str, low: f64, high: f64) -> ParamRange {
    ParamRange { name, low, high }
}

/// Parameter index -> geometric quantity.
pub const PARAM_TABLE: [ParamRange; N_PARAMS] = [
    range("max_thickness", 0.07, 0.18),
    range("max_thickness_x", 0.26, 0.40),
    range("max_camber", 0.0, 0.045),
    range("max_camber_x", 0.30, 0.55),
    range("le_radius_factor", 0.80, 1.15),
    range("le_droop", -0.20, 0.25),
    range("forward_station_x", 0.04, 0.09),
    range("mid_station_x", 0.52, 0.64),
    range("aft_station_x", 0.76, 0.86),
    range("upper_crest_fullness", 0.92, 1.08),
    range("lower_crest_fullness", 0.97, 1.08),
    range("upper_aft_fullness", 0.88, 1.12),
    range("lower_aft_fullness", 0.88, 1.06),
    range("te_wedge", 0.88, 1.20),
    range("te_camber", -0.003, 0.003),
    range("upper_forward_fullness", 0.92, 1.08),
    range("lower_forward_fullness", 0.92, 1.08),
];

/// Nondimensional design vector, every component in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamVector([f64; N_PARAMS]);

impl ParamVector {
    pub fn new(values: [f64; N_PARAMS]) -> Result<Self> {
        for (index, &value) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::ParamOutOfRange { index, value });
            }
        }
        Ok(ParamVector(values))
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        let arr: [f64; N_PARAMS] = values.try_into().map_err(|_| Error::Arity {
            expected: N_PARAMS,
            got: values.len(),
        })?;
        Self::new(arr)
    }

    pub fn splat(v: f64) -> Result<Self> {
        Self::new([v; N_PARAMS])
    }

    pub fn values(&self) -> &[f64; N_PARAMS] {
        &self.0
    }
}

/// A closed, chord-normalized cubic rational B-spline foil with 13 control
/// points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoilCurve {
    curve: Nurbs,
}

impl FoilCurve {
    /// Wraps a control net with a clamped uniform knot vector.
    pub fn from_control_net(control_points: Vec<Point2>, weights: Vec<f64>) -> Result<Self> {
        if control_points.len() != N_CONTROL {
            return Err(Error::Arity {
                expected: N_CONTROL,
                got: control_points.len(),
            });
        }
        let knots = Nurbs::clamped_uniform_knots(N_CONTROL, ORDER - 1);
        let curve = Nurbs::new(ORDER - 1, control_points, weights, knots)?;
        let (a, b) = curve.domain();
        let gap = curve.derivs(a)[0].dist(curve.derivs(b)[0]);
        if gap >= CLOSURE_TOL {
            return Err(Error::Domain(format!("trailing edge open by {gap:e}")));
        }
        Ok(FoilCurve { curve })
    }

    pub fn nurbs(&self) -> &Nurbs {
        &self.curve
    }

    pub fn control_points(&self) -> &[Point2] {
        self.curve.control_points()
    }

    pub fn weights(&self) -> &[f64] {
        self.curve.weights()
    }

    pub fn knots(&self) -> &[f64] {
        self.curve.knots()
    }
}

impl ParamCurve for FoilCurve {
    fn domain(&self) -> (f64, f64) {
        self.curve.domain()
    }

    fn derivs(&self, t: f64) -> [Point2; 3] {
        self.curve.derivs(t)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.curve.breakpoints()
    }
}

fn naca_half_thickness(t: f64, x: f64) -> f64 {
    // closed trailing-edge variant of the four-digit distribution
    5.0 * t * (0.2969 * x.sqrt() - 0.1260 * x - 0.3516 * x * x + 0.2843 * x.powi(3) - 0.1036 * x.powi(4))
}

fn naca_camber(m: f64, p: f64, x: f64) -> f64 {
    if x < p {
        m / (p * p) * (2.0 * p * x - x * x)
    } else {
        m / ((1.0 - p) * (1.0 - p)) * (1.0 - 2.0 * p + 2.0 * p * x - x * x)
    }
}

/// Builds the foil for a design vector.
pub fn make_foil(p: &ParamVector) -> Result<FoilCurve> {
    let q: Vec<f64> = p
        .values()
        .iter()
        .zip(PARAM_TABLE.iter())
        .map(|(v, r)| r.map(*v))
        .collect();
    let [thick, thick_x, camber, camber_x, le_radius, le_droop, x_f, x_m, x_a, up_c, lo_c, up_a, lo_a, wedge, te_camber, up_f, lo_f]: [f64; N_PARAMS] =
        q.try_into().expect("table has 17 rows");

    // warp x so the maximum thickness lands at `thick_x`
    let warp = 0.3f64.ln() / thick_x.ln();
    let half = |x: f64| naca_half_thickness(thick, x.powf(warp));
    let mean = |x: f64| naca_camber(camber, camber_x, x);

    let upper = |x: f64, full: f64| Point2::new(x, mean(x) + half(x) * full);
    let lower = |x: f64, full: f64| Point2::new(x, mean(x) - half(x) * full);

    let b1 = Point2::new(x_a, mean(x_a) + te_camber + half(x_a) * wedge * up_a);
    let b2 = upper(x_m, up_a);
    let b3 = upper(thick_x, up_c);
    let b4 = upper(x_f, up_f);
    let b8 = lower(x_f, lo_f);
    let b9 = lower(thick_x, lo_c);
    let b10 = lower(x_m, lo_a);
    let b11 = Point2::new(x_a, mean(x_a) + te_camber - half(x_a) * wedge * lo_a);

    // y-intercepts at x = 0 of the station chords next to the nose
    let intercept = |near: Point2, far: Point2| near.y - near.x * (far.y - near.y) / (far.x - near.x);
    let nose_scale = |side: f64| 0.6 * le_radius * (1.0 + side * le_droop);
    let floor = 0.15 * half(x_f);
    let y5 = (nose_scale(1.0) * intercept(b4, b3)).max(floor);
    let y7 = (nose_scale(-1.0) * intercept(b8, b9)).min(-floor);

    let te = Point2::new(1.0, 0.0);
    let net = vec![
        te,
        b1,
        b2,
        b3,
        b4,
        Point2::new(0.0, y5),
        Point2::ZERO,
        Point2::new(0.0, y7),
        b8,
        b9,
        b10,
        b11,
        te,
    ];
    FoilCurve::from_control_net(net, vec![1.0; N_CONTROL])
}
