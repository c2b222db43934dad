//! Smooth foil geometry: points, rational B-splines, curvature, arc length
//! and the parametric foil generator.

mod curve;
mod foil;
mod point;
pub mod quadrature;
mod spline;

pub use curve::{Nurbs, ParamCurve, ARC_LENGTH_TOL};
pub use foil::{
    make_foil, FoilCurve, ParamRange, ParamVector, CLOSURE_TOL, N_CONTROL, N_PARAMS, ORDER,
    PARAM_TABLE,
};
pub use point::{point_segment_distance, Point2};
pub use spline::InterpolatingSpline;
