//! Lift-to-drag evaluation: an XFOIL process adapter and an analytic
//! surrogate.

mod surrogate;
mod xfoil;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::PolylineFoil;

pub use surrogate::{mean_line, SurrogateEvaluator};
pub use xfoil::{parse_polar, XfoilEvaluator, XFOIL_ENV, XFOIL_MAX_POINTS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowCondition {
    pub reynolds: f64,
    pub mach: f64,
    pub alpha_deg: f64,
    pub iter_limit: u32,
}

impl FlowCondition {
    pub fn new(reynolds: f64, mach: f64, alpha_deg: f64, iter_limit: u32) -> Result<Self> {
        if !(reynolds > 0.0) {
            return Err(Error::Domain(format!("Reynolds number {reynolds} must be positive")));
        }
        if !(0.0..1.0).contains(&mach) {
            return Err(Error::Domain(format!("Mach number {mach} outside [0, 1)")));
        }
        if !alpha_deg.is_finite() {
            return Err(Error::Domain("angle of attack must be finite".into()));
        }
        if iter_limit < 1 {
            return Err(Error::Domain("iteration limit must be at least 1".into()));
        }
        Ok(FlowCondition {
            reynolds,
            mach,
            alpha_deg,
            iter_limit,
        })
    }

    pub fn alpha_rad(&self) -> f64 {
        self.alpha_deg.to_radians()
    }
}

/// Re = 500,000, Ma = 0, α = 3°, 200 iterations.
impl Default for FlowCondition {
    fn default() -> Self {
        FlowCondition {
            reynolds: 5e5,
            mach: 0.0,
            alpha_deg: 3.0,
            iter_limit: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolarSource {
    Xfoil,
    Surrogate,
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarPoint {
    pub cl: f64,
    pub cd: f64,
    pub ld: f64,
    pub converged: bool,
    pub source: PolarSource,
}

impl PolarPoint {
    pub fn converged(cl: f64, cd: f64, source: PolarSource) -> Self {
        PolarPoint {
            cl,
            cd,
            ld: if cd != 0.0 { cl / cd } else { f64::NAN },
            converged: true,
            source,
        }
    }

    pub fn failed(source: PolarSource) -> Self {
        PolarPoint {
            cl: f64::NAN,
            cd: f64::NAN,
            ld: f64::NAN,
            converged: false,
            source,
        }
    }

    /// `cl / cd` when converged with nonzero drag.
    pub fn lift_to_drag(&self) -> Option<f64> {
        (self.converged && self.ld.is_finite()).then_some(self.ld)
    }
}

/// Anything that turns a foil into a polar point.
pub trait Evaluator: Send + Sync {
    fn name(&self) -> &str;

    fn evaluate(&self, pf: &PolylineFoil, fc: &FlowCondition) -> Result<PolarPoint>;
}

/// Returns the same lift-to-drag ratio for every foil.
#[derive(Debug, Clone, Copy)]
pub struct ConstantEvaluator {
    pub ld: f64,
}

impl Evaluator for ConstantEvaluator {
    fn name(&self) -> &str {
        "constant"
    }

    fn evaluate(&self, _pf: &PolylineFoil, _fc: &FlowCondition) -> Result<PolarPoint> {
        Ok(PolarPoint::converged(self.ld, 1.0, PolarSource::Constant))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flow_condition_validation() {
        assert!(FlowCondition::new(0.0, 0.0, 3.0, 10).is_err());
        assert!(FlowCondition::new(1e5, 1.0, 3.0, 10).is_err());
        assert!(FlowCondition::new(1e5, 0.0, 3.0, 0).is_err());
        let fc = FlowCondition::default();
        assert_eq!((fc.reynolds, fc.mach, fc.alpha_deg), (5e5, 0.0, 3.0));
    }

    #[test]
    fn polar_point_ratio() {
        let p = PolarPoint::converged(0.5, 0.01, PolarSource::Xfoil);
        assert_eq!(p.lift_to_drag(), Some(50.0));
        assert_eq!(PolarPoint::failed(PolarSource::Xfoil).lift_to_drag(), None);
    }
}
