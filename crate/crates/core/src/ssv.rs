//! Shape signature vectors: flattened geometry plus an optional weighted
//! augmentation block, and the design matrix they stack into.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretize::Scheme;
use crate::error::{Error, Result};
use crate::ingest::{FoilDataset, PolylineFoil};
use crate::moments::{moment_vector, MomentSpec};
use crate::perf::{Evaluator, FlowCondition};

/// What follows the geometry block.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "moments", rename_all = "lowercase")]
pub enum AugKind {
    None,
    Moments(MomentSpec),
    Performance,
}

impl AugKind {
    pub fn len(&self) -> usize {
        match self {
            AugKind::None => 0,
            AugKind::Moments(spec) => spec.len(),
            AugKind::Performance => 1,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// SSV variant names: `geometry`, `geometry+r4`, `geometry+r234`,
/// `geometry+performance`, ...
impl fmt::Display for AugKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AugKind::None => f.write_str("geometry"),
            AugKind::Moments(spec) => write!(f, "geometry+{spec}"),
            AugKind::Performance => f.write_str("geometry+performance"),
        }
    }
}

impl FromStr for AugKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "geometry" => Ok(AugKind::None),
            "geometry+performance" => Ok(AugKind::Performance),
            _ => match s.strip_prefix("geometry+") {
                Some(m) => Ok(AugKind::Moments(m.parse()?)),
                None => Err(Error::Domain(format!("unknown SSV variant '{s}'"))),
            },
        }
    }
}

/// The seven variants of the latent-space grid.
pub fn standard_variants() -> Vec<AugKind> {
    vec![
        AugKind::None,
        AugKind::Moments(MomentSpec::r2()),
        AugKind::Moments(MomentSpec::r3()),
        AugKind::Moments(MomentSpec::r4()),
        AugKind::Moments(MomentSpec::r23()),
        AugKind::Moments(MomentSpec::r234()),
        AugKind::Performance,
    ]
}

/// Augmentation with whatever it needs to be computed.
#[derive(Clone)]
pub enum Augmentation {
    None,
    Moments(MomentSpec),
    Performance {
        evaluator: Arc<dyn Evaluator>,
        condition: FlowCondition,
    },
}

impl Augmentation {
    pub fn kind(&self) -> AugKind {
        match self {
            Augmentation::None => AugKind::None,
            Augmentation::Moments(spec) => AugKind::Moments(spec.clone()),
            Augmentation::Performance { .. } => AugKind::Performance,
        }
    }

    /// Unweighted augmentation values of one polyline. Open trailing edges
    /// are closed before moments are taken.
    pub fn raw_values(&self, pf: &PolylineFoil) -> Result<Vec<f64>> {
        match self {
            Augmentation::None => Ok(Vec::new()),
            Augmentation::Moments(spec) => moment_vector(&pf.closed_copy(), spec),
            Augmentation::Performance { evaluator, condition } => {
                let polar = evaluator.evaluate(pf, condition)?;
                polar.lift_to_drag().map(|ld| vec![ld]).ok_or_else(|| {
                    Error::Degenerate(format!("{} did not converge", evaluator.name()))
                })
            }
        }
    }
}

impl fmt::Debug for Augmentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Augmentation({})", self.kind())
    }
}

/// Block descriptor shared by every SSV of a design matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub n_points: usize,
    pub scheme: Option<Scheme>,
    pub aug: AugKind,
    pub n_mu: usize,
    /// Multiplier applied to the augmentation block.
    pub weight: f64,
}

impl Layout {
    pub fn new(n_points: usize, scheme: Option<Scheme>, aug: AugKind, weight: f64) -> Result<Self> {
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::Domain(format!("augmentation weight {weight} must be positive")));
        }
        let n_mu = aug.len();
        Ok(Layout {
            n_points,
            scheme,
            aug,
            n_mu,
            weight,
        })
    }

    pub fn geometry_len(&self) -> usize {
        2 * self.n_points
    }

    pub fn len(&self) -> usize {
        self.geometry_len() + self.n_mu
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Errors unless `other` describes the same blocks.
    pub fn check_compatible(&self, other: &Layout) -> Result<()> {
        if self != other {
            return Err(Error::LayoutMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ssv {
    values: Vec<f64>,
    layout: Layout,
}

impl Ssv {
    pub fn from_parts(geometry: &[f64], augmentation: &[f64], layout: Layout) -> Result<Self> {
        if geometry.len() != layout.geometry_len() || augmentation.len() != layout.n_mu {
            return Err(Error::LayoutMismatch(format!(
                "blocks of {} + {} values, layout wants {} + {}",
                geometry.len(),
                augmentation.len(),
                layout.geometry_len(),
                layout.n_mu
            )));
        }
        let mut values = geometry.to_vec();
        values.extend_from_slice(augmentation);
        Ok(Ssv { values, layout })
    }

    pub fn from_values(values: Vec<f64>, layout: Layout) -> Result<Self> {
        if values.len() != layout.len() {
            return Err(Error::LayoutMismatch(format!(
                "{} values, layout wants {}",
                values.len(),
                layout.len()
            )));
        }
        Ok(Ssv { values, layout })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn geometry(&self) -> &[f64] {
        &self.values[..self.layout.geometry_len()]
    }

    /// Augmentation block as stored (weighted).
    pub fn augmentation(&self) -> &[f64] {
        &self.values[self.layout.geometry_len()..]
    }

    /// Augmentation block with the weight divided out.
    pub fn augmentation_unweighted(&self) -> Vec<f64> {
        self.augmentation().iter().map(|v| v / self.layout.weight).collect()
    }
}

fn ssv_from_raw(pf: &PolylineFoil, raw: &[f64], layout: &Layout) -> Result<Ssv> {
    let aug: Vec<f64> = raw.iter().map(|v| v * layout.weight).collect();
    Ssv::from_parts(&pf.flat_coords(), &aug, layout.clone())
}

/// SSV of one polyline with the augmentation block scaled by `weight`.
pub fn build_ssv(pf: &PolylineFoil, aug: &Augmentation, weight: f64) -> Result<Ssv> {
    let layout = Layout::new(pf.len(), pf.scheme(), aug.kind(), weight)?;
    let raw = aug.raw_values(pf)?;
    ssv_from_raw(pf, &raw, &layout)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WeightChoice {
    /// `√(2N/n_μ)·σ_geo/σ_aug`, equalizing total block variance.
    Balanced,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureMode {
    FailFast,
    Drop,
}

/// RMS over components of the per-component standard deviation.
fn block_sigma(rows: &[&[f64]]) -> f64 {
    let m = rows.len() as f64;
    let width = rows.first().map_or(0, |r| r.len());
    if width == 0 || rows.len() < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    for j in 0..width {
        let mean = rows.iter().map(|r| r[j]).sum::<f64>() / m;
        total += rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / (m - 1.0);
    }
    (total / width as f64).sqrt()
}

/// Balanced augmentation weight for the given geometry and raw
/// augmentation rows.
pub fn balanced_weight(geometry: &[&[f64]], augmentation: &[&[f64]]) -> Option<f64> {
    let n_mu = augmentation.first().map_or(0, |r| r.len());
    if n_mu == 0 {
        return Some(1.0);
    }
    let width = geometry.first().map_or(0, |r| r.len()) as f64;
    let (sg, sa) = (block_sigma(geometry), block_sigma(augmentation));
    let w = (width / n_mu as f64).sqrt() * sg / sa;
    (w.is_finite() && w > 0.0).then_some(w)
}

/// Stacked SSVs of identical layout.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    rows: Vec<Vec<f64>>,
    layout: Layout,
    labels: Vec<String>,
    /// Per-row weights. Fitting currently requires them all equal.
    row_weights: Vec<f64>,
}

impl DesignMatrix {
    pub fn new(rows: Vec<Vec<f64>>, layout: Layout, labels: Vec<String>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::EmptyDataset(format!("{} rows, need at least 2", rows.len())));
        }
        if labels.len() != rows.len() {
            return Err(Error::Arity {
                expected: rows.len(),
                got: labels.len(),
            });
        }
        if let Some(i) = rows.iter().position(|r| r.len() != layout.len()) {
            return Err(Error::LayoutMismatch(format!(
                "row {i} has {} values, layout wants {}",
                rows[i].len(),
                layout.len()
            )));
        }
        let row_weights = vec![1.0; rows.len()];
        Ok(DesignMatrix {
            rows,
            layout,
            labels,
            row_weights,
        })
    }

    /// Stacks SSVs after checking that their layouts agree.
    pub fn from_ssvs(ssvs: Vec<Ssv>, labels: Vec<String>) -> Result<Self> {
        let layout = ssvs
            .first()
            .map(|s| s.layout().clone())
            .ok_or_else(|| Error::EmptyDataset("no rows".into()))?;
        for s in &ssvs {
            layout.check_compatible(s.layout())?;
        }
        Self::new(ssvs.into_iter().map(Ssv::into_values).collect(), layout, labels)
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn row_weights(&self) -> &[f64] {
        &self.row_weights
    }

    pub fn with_row_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.rows.len() || weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Domain("row weights must be positive, one per row".into()));
        }
        self.row_weights = weights;
        Ok(self)
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.layout.len()
    }

    pub fn ssv(&self, i: usize) -> Ssv {
        Ssv {
            values: self.rows[i].clone(),
            layout: self.layout.clone(),
        }
    }

    /// CSV with a `label` column, plus the layout as a JSON sidecar at
    /// `path` with extension `.json`.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["label".to_string()];
        header.extend((0..self.n_cols()).map(|j| format!("c{j}")));
        w.write_record(&header)?;
        for (label, row) in self.labels.iter().zip(&self.rows) {
            let mut rec = vec![label.clone()];
            rec.extend(row.iter().map(|v| format!("{v:.16e}")));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        let sidecar = path.with_extension("json");
        fs::write(&sidecar, serde_json::to_string_pretty(&self.layout)?).map_err(|e| Error::io(&sidecar, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let sidecar = path.with_extension("json");
        let text = fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
        let layout: Layout = serde_json::from_str(&text)?;
        let mut r = csv::Reader::from_path(path)?;
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            labels.push(rec.get(0).unwrap_or_default().to_string());
            let row = rec
                .iter()
                .skip(1)
                .map(|s| {
                    s.parse::<f64>().map_err(|_| Error::Parse {
                        line: i + 2,
                        msg: format!("'{s}' is not a number"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Self::new(rows, layout, labels)
    }
}

/// Result of [`assemble_design_matrix`].
#[derive(Debug, Clone)]
pub struct Assembly {
    pub matrix: DesignMatrix,
    /// One line per dropped member.
    pub warnings: Vec<String>,
}

/// One SSV per dataset member, in dataset order. Member failures abort in
/// [`FailureMode::FailFast`] and are dropped with a warning otherwise.
pub fn assemble_design_matrix(
    ds: &FoilDataset,
    aug: &Augmentation,
    weight: WeightChoice,
    mode: FailureMode,
) -> Result<Assembly> {
    let raws: Vec<Result<Vec<f64>>> = ds.members().par_iter().map(|pf| aug.raw_values(pf)).collect();
    let mut kept: Vec<(&PolylineFoil, Vec<f64>)> = Vec::with_capacity(raws.len());
    let mut warnings = Vec::new();
    for (i, (pf, raw)) in ds.members().iter().zip(raws).enumerate() {
        match raw {
            Ok(v) => kept.push((pf, v)),
            Err(e) => {
                let e = Error::member(i, pf.name(), e);
                if mode == FailureMode::FailFast {
                    return Err(e);
                }
                log::warn!("dropping member: {e}");
                warnings.push(e.to_string());
            }
        }
    }
    let geometry: Vec<Vec<f64>> = kept.iter().map(|(pf, _)| pf.flat_coords()).collect();
    let w = match weight {
        WeightChoice::Fixed(w) => w,
        WeightChoice::Balanced => {
            let g: Vec<&[f64]> = geometry.iter().map(Vec::as_slice).collect();
            let a: Vec<&[f64]> = kept.iter().map(|(_, v)| v.as_slice()).collect();
            balanced_weight(&g, &a).unwrap_or_else(|| {
                warnings.push("augmentation block has no variance; weight set to 1".into());
                1.0
            })
        }
    };
    let layout = Layout::new(ds.common_n(), Some(ds.scheme()), aug.kind(), w)?;
    let mut rows = Vec::with_capacity(kept.len());
    let mut labels = Vec::with_capacity(kept.len());
    for ((pf, raw), geo) in kept.into_iter().zip(geometry) {
        let mut row = geo;
        row.extend(raw.iter().map(|v| v * w));
        rows.push(row);
        labels.push(pf.name().to_string());
    }
    Ok(Assembly {
        matrix: DesignMatrix::new(rows, layout, labels)?,
        warnings,
    })
}
