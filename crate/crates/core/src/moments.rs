//! Area moments of polygonal regions.
//!
//! Raw moments come from Green's theorem, `∬ x^p y^q dA = ∮ x^(p+1) y^q / (p+1) dy`,
//! integrated exactly edge by edge with a Gauss-Legendre rule of sufficient
//! order. Vertices are shifted to a reference point before integration to
//! keep precision under large translations.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::quadrature::gauss_legendre;
use crate::geometry::Point2;
use crate::ingest::PolylineFoil;

/// Smallest area accepted as a region.
pub const MIN_AREA: f64 = 1e-12;

/// Set of moment orders `r`; every `(p, q)` with `p + q = r` is included.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MomentSpec {
    orders: Vec<u32>,
}

impl MomentSpec {
    pub fn new(orders: &[u32]) -> Result<Self> {
        let mut orders = orders.to_vec();
        orders.sort_unstable();
        orders.dedup();
        if orders.is_empty() {
            return Err(Error::Domain("empty moment order set".into()));
        }
        if let Some(r) = orders.iter().find(|&&r| r < 2) {
            return Err(Error::Domain(format!("moment order {r} carries no shape information")));
        }
        Ok(MomentSpec { orders })
    }

    pub fn r2() -> Self {
        MomentSpec { orders: vec![2] }
    }

    pub fn r3() -> Self {
        MomentSpec { orders: vec![3] }
    }

    pub fn r4() -> Self {
        MomentSpec { orders: vec![4] }
    }

    pub fn r23() -> Self {
        MomentSpec { orders: vec![2, 3] }
    }

    pub fn r234() -> Self {
        MomentSpec { orders: vec![2, 3, 4] }
    }

    pub fn orders(&self) -> &[u32] {
        &self.orders
    }

    /// `(p, q)` pairs ordered by `r`, then by descending `p`.
    pub fn pairs(&self) -> Vec<(u32, u32)> {
        self.orders
            .iter()
            .flat_map(|&r| (0..=r).rev().map(move |p| (p, r - p)))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.orders.iter().map(|&r| r as usize + 1).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.orders.is_empty()
    }
}

/// `r4`, `r23`, `r234` style tags.
impl fmt::Display for MomentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r")?;
        for r in &self.orders {
            write!(f, "{r}")?;
        }
        Ok(())
    }
}

impl FromStr for MomentSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let digits = s
            .strip_prefix('r')
            .ok_or_else(|| Error::Domain(format!("moment spec '{s}' must look like r234")))?;
        let orders = digits
            .chars()
            .map(|c| c.to_digit(10).ok_or_else(|| Error::Domain(format!("bad moment spec '{s}'"))))
            .collect::<Result<Vec<u32>>>()?;
        MomentSpec::new(&orders)
    }
}

/// Distinct vertices of a closed polygon (repeated closing vertex removed).
fn ring(poly: &PolylineFoil) -> Result<&[Point2]> {
    if !poly.is_closed() {
        return Err(Error::Malformed(format!(
            "open polygon '{}': endpoints differ by more than 1e-6",
            poly.name()
        )));
    }
    let pts = poly.points();
    Ok(&pts[..pts.len() - 1])
}

/// Signed `∬ x^p y^q dA` over the polygon with vertices `v` (implicitly
/// closed), positive for counterclockwise order.
fn signed_moment(v: &[Point2], p: u32, q: u32) -> f64 {
    let n_gauss = ((p + q + 2) as usize).div_ceil(2);
    let (nodes, weights) = gauss_legendre(n_gauss);
    let mut total = 0.0;
    for i in 0..v.len() {
        let a = v[i];
        let b = v[(i + 1) % v.len()];
        let d = b - a;
        if d.y == 0.0 {
            continue;
        }
        let mut edge = 0.0;
        for (x, w) in nodes.iter().zip(&weights) {
            let s = 0.5 * (x + 1.0);
            let pt = a + d * s;
            edge += w * pt.x.powi(p as i32 + 1) * pt.y.powi(q as i32);
        }
        total += 0.5 * edge * d.y;
    }
    total / (p + 1) as f64
}

/// Vertices translated by `-origin`, with the signed area.
fn shifted(v: &[Point2], origin: Point2) -> (Vec<Point2>, f64) {
    let s: Vec<Point2> = v.iter().map(|&p| p - origin).collect();
    let area = signed_moment(&s, 0, 0);
    (s, area)
}

fn vertex_mean(v: &[Point2]) -> Point2 {
    let sum = v.iter().fold(Point2::ZERO, |acc, &p| acc + p);
    sum * (1.0 / v.len() as f64)
}

fn binom(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Region bounded by a closed polygon, prepared for moment queries.
#[derive(Debug, Clone)]
pub struct Region {
    // vertices relative to the centroid
    centered: Vec<Point2>,
    centroid: Point2,
    area: f64,
    orientation: f64,
}

impl Region {
    pub fn new(poly: &PolylineFoil) -> Result<Self> {
        Self::from_ring(ring(poly)?)
    }

    /// Vertices in order, without repeating the first.
    pub fn from_ring(v: &[Point2]) -> Result<Self> {
        if v.len() < 3 || v.iter().any(|p| !p.is_finite()) {
            return Err(Error::Degenerate("polygon needs 3 finite vertices".into()));
        }
        let reference = vertex_mean(v);
        let (rel, area) = shifted(v, reference);
        if !(area.abs() >= MIN_AREA) {
            return Err(Error::Degenerate(format!("polygon area {area:e}")));
        }
        let cx = signed_moment(&rel, 1, 0) / area;
        let cy = signed_moment(&rel, 0, 1) / area;
        let centroid = reference + Point2::new(cx, cy);
        let (centered, area) = shifted(v, centroid);
        Ok(Region {
            centered,
            centroid,
            area: area.abs(),
            orientation: area.signum(),
        })
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn centroid(&self) -> Point2 {
        self.centroid
    }

    /// Central moment about the centroid.
    pub fn central(&self, p: u32, q: u32) -> f64 {
        match (p, q) {
            (0, 0) => self.area,
            _ => self.orientation * signed_moment(&self.centered, p, q),
        }
    }

    /// Moment about the origin, expanded from the central moments.
    pub fn raw(&self, p: u32, q: u32) -> f64 {
        let c = self.centroid;
        let mut total = 0.0;
        for i in 0..=p {
            for j in 0..=q {
                total += binom(p, i) * binom(q, j) * c.x.powi((p - i) as i32) * c.y.powi((q - j) as i32) * self.central(i, j);
            }
        }
        total
    }

    /// Central moment normalized by `area^((p+q+2)/2)`.
    pub fn invariant(&self, p: u32, q: u32) -> f64 {
        self.central(p, q) / self.area.powf((p + q + 2) as f64 / 2.0)
    }
}

pub fn raw_moment(poly: &PolylineFoil, p: u32, q: u32) -> Result<f64> {
    Ok(Region::new(poly)?.raw(p, q))
}

pub fn central_moment(poly: &PolylineFoil, p: u32, q: u32) -> Result<f64> {
    Ok(Region::new(poly)?.central(p, q))
}

pub fn invariant_moment(poly: &PolylineFoil, p: u32, q: u32) -> Result<f64> {
    if (p, q) == (0, 0) {
        return Err(Error::Domain("the (0, 0) invariant is identically 1".into()));
    }
    Ok(Region::new(poly)?.invariant(p, q))
}

/// Invariant moments of `spec` in its fixed order.
pub fn moment_vector(poly: &PolylineFoil, spec: &MomentSpec) -> Result<Vec<f64>> {
    let region = Region::new(poly)?;
    let values: Vec<f64> = spec.pairs().into_iter().map(|(p, q)| region.invariant(p, q)).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("non-finite moment".into()));
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Provenance;

    fn poly(pts: &[(f64, f64)]) -> PolylineFoil {
        let mut v: Vec<Point2> = pts.iter().map(|&(x, y)| Point2::new(x, y)).collect();
        v.push(v[0]);
        PolylineFoil::new(v, "p", Provenance::File, None).unwrap()
    }

    fn square(cx: f64, cy: f64) -> PolylineFoil {
        poly(&[(cx - 0.5, cy - 0.5), (cx + 0.5, cy - 0.5), (cx + 0.5, cy + 0.5), (cx - 0.5, cy + 0.5)])
    }

    #[test]
    fn unit_square() {
        let sq = square(0.0, 0.0);
        assert!((raw_moment(&sq, 0, 0).unwrap() - 1.0).abs() < 1e-15);
        assert!((raw_moment(&sq, 2, 0).unwrap() - 1.0 / 12.0).abs() < 1e-15);
        let moved = square(7.0, -3.0);
        assert!((central_moment(&moved, 2, 0).unwrap() - 1.0 / 12.0).abs() < 1e-12);
        assert!(central_moment(&moved, 1, 0).unwrap().abs() < 1e-12);
        // x² about the origin for the moved square: 1/12 + 49
        assert!((raw_moment(&moved, 2, 0).unwrap() - (49.0 + 1.0 / 12.0)).abs() < 1e-11);
    }

    #[test]
    fn orientation_does_not_matter() {
        let a = poly(&[(0.0, 0.0), (2.0, 0.0), (1.5, 1.0), (0.2, 0.7)]);
        let b = poly(&[(0.0, 0.0), (0.2, 0.7), (1.5, 1.0), (2.0, 0.0)]);
        for (p, q) in MomentSpec::r234().pairs() {
            let (x, y) = (invariant_moment(&a, p, q).unwrap(), invariant_moment(&b, p, q).unwrap());
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn open_and_degenerate_inputs() {
        let open = PolylineFoil::new(
            vec![Point2::new(1.0, 0.0), Point2::new(0.0, 0.1), Point2::new(0.0, -0.1), Point2::new(1.0, -0.01)],
            "o",
            Provenance::File,
            None,
        )
        .unwrap();
        assert!(matches!(raw_moment(&open, 0, 0), Err(Error::Malformed(_))));
        let flat = poly(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]);
        assert!(matches!(raw_moment(&flat, 0, 0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn spec_layouts() {
        assert_eq!(MomentSpec::r2().pairs(), vec![(2, 0), (1, 1), (0, 2)]);
        assert_eq!(MomentSpec::r234().len(), 12);
        assert_eq!(MomentSpec::r234().pairs().len(), 12);
        assert_eq!("r4".parse::<MomentSpec>().unwrap(), MomentSpec::r4());
        assert_eq!(MomentSpec::r23().to_string(), "r23");
        assert!("r1".parse::<MomentSpec>().is_err());
    }

    #[test]
    fn point_symmetry_kills_odd_orders_only() {
        let slanted = poly(&[(1.0, 0.2), (0.3, 0.9), (-1.0, -0.2), (-0.3, -0.9)]);
        for (p, q) in MomentSpec::r3().pairs() {
            assert!(central_moment(&slanted, p, q).unwrap().abs() < 1e-14);
        }
        // xy is even under point reflection
        assert!(central_moment(&slanted, 1, 1).unwrap().abs() > 1e-3);
        let hex = poly(&[(2.0, 0.0), (1.0, 1.0), (-1.0, 1.0), (-2.0, 0.0), (-1.0, -1.0), (1.0, -1.0)]);
        assert!(central_moment(&hex, 1, 1).unwrap().abs() < 1e-14);
    }
}
