use serde::{Deserialize, Serialize};

use crate::discretize::Scheme;
use crate::error::{Error, Result};
use crate::geometry::Point2;

/// Endpoints closer than this make a closed profile.
pub const CLOSED_TOL: f64 = 1e-6;
/// Minimum spacing between consecutive points.
pub const MIN_SPACING: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    File,
    Parametric,
    ExternalSynthesized,
}

impl Provenance {
    pub fn tag(self) -> &'static str {
        match self {
            Provenance::File => "file",
            Provenance::Parametric => "parametric",
            Provenance::ExternalSynthesized => "external-synthesized",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "file" => Some(Provenance::File),
            "parametric" => Some(Provenance::Parametric),
            "external-synthesized" => Some(Provenance::ExternalSynthesized),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Closure {
    Closed,
    /// Both ends sit at the trailing edge (x near 1) with a finite gap.
    OpenTrailingEdge,
    Open,
}

/// A discretized profile in Selig ordering: trailing edge, upper surface,
/// leading edge, lower surface, trailing edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolylineFoil {
    points: Vec<Point2>,
    name: String,
    provenance: Provenance,
    scheme: Option<Scheme>,
    closure: Closure,
}

fn closure_of(points: &[Point2]) -> Closure {
    let (first, last) = (points[0], points[points.len() - 1]);
    if first.dist(last) <= CLOSED_TOL {
        Closure::Closed
    } else {
        let (lo, hi) = x_range(points);
        let chord = (hi - lo).max(f64::MIN_POSITIVE);
        let near_te = |p: Point2| (hi - p.x) / chord < 0.01;
        if near_te(first) && near_te(last) {
            Closure::OpenTrailingEdge
        } else {
            Closure::Open
        }
    }
}

fn x_range(points: &[Point2]) -> (f64, f64) {
    points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.x), hi.max(p.x)))
}

impl PolylineFoil {
    /// Validated constructor: at least four finite points, consecutive
    /// points distinct.
    pub fn new(
        points: Vec<Point2>,
        name: impl Into<String>,
        provenance: Provenance,
        scheme: Option<Scheme>,
    ) -> Result<Self> {
        if points.len() < 4 {
            return Err(Error::Malformed(format!(
                "need at least 4 points, got {}",
                points.len()
            )));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::Malformed(format!("point {i} is not finite")));
        }
        if let Some(i) = points.windows(2).position(|w| w[0].dist(w[1]) <= MIN_SPACING) {
            return Err(Error::Malformed(format!("points {i} and {} coincide", i + 1)));
        }
        Ok(Self::from_points_unchecked(points, name, provenance, scheme))
    }

    /// No validation beyond a nonempty point list. Used for decoded latent
    /// designs, whose defects are for the validity checker to report.
    pub fn from_points_unchecked(
        points: Vec<Point2>,
        name: impl Into<String>,
        provenance: Provenance,
        scheme: Option<Scheme>,
    ) -> Self {
        assert!(!points.is_empty());
        let closure = closure_of(&points);
        PolylineFoil {
            points,
            name: name.into(),
            provenance,
            scheme,
            closure,
        }
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn scheme(&self) -> Option<Scheme> {
        self.scheme
    }

    pub fn closure(&self) -> Closure {
        self.closure
    }

    pub fn is_closed(&self) -> bool {
        self.closure == Closure::Closed
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    /// Copy whose last point repeats the first, closing any trailing-edge gap.
    pub fn closed_copy(&self) -> Self {
        let mut points = self.points.clone();
        if !self.is_closed() {
            points.push(points[0]);
        }
        Self::from_points_unchecked(points, self.name.clone(), self.provenance, self.scheme)
    }

    /// Index of the leading-edge point (smallest x, first on ties).
    pub fn leading_edge_index(&self) -> usize {
        self.points
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.x.total_cmp(&b.1.x))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    pub fn x_range(&self) -> (f64, f64) {
        x_range(&self.points)
    }

    /// True when x spans [0, 1] within `tol`.
    pub fn is_chord_normalized(&self, tol: f64) -> bool {
        let (lo, hi) = self.x_range();
        lo.abs() <= tol && (hi - 1.0).abs() <= tol
    }

    /// Rescales so x spans exactly [0, 1]; y is scaled by the same factor.
    pub fn chord_normalized(&self) -> Result<Self> {
        let (lo, hi) = self.x_range();
        let chord = hi - lo;
        if !(chord > 0.0) {
            return Err(Error::Malformed("zero chord".into()));
        }
        let points = self
            .points
            .iter()
            .map(|p| {
                let x = if p.x == hi { 1.0 } else { (p.x - lo) / chord };
                Point2::new(x, p.y / chord)
            })
            .collect();
        Ok(Self::from_points_unchecked(
            points,
            self.name.clone(),
            self.provenance,
            self.scheme,
        ))
    }

    /// Flattened `x1, y1, ..., xN, yN`.
    pub fn flat_coords(&self) -> Vec<f64> {
        self.points.iter().flat_map(|p| [p.x, p.y]).collect()
    }

    /// Selig coordinate text: name line, then one `x y` row per point.
    pub fn to_selig(&self, decimals: usize) -> String {
        let mut out = String::new();
        out.push_str(if self.name.is_empty() { "foil" } else { &self.name });
        out.push('\n');
        for p in &self.points {
            out.push_str(&format!("{:.*} {:.*}\n", decimals, p.x, decimals, p.y));
        }
        out
    }
}
