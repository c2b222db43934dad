//! Karhunen-Loève expansion of a design matrix.
//!
//! The sample covariance spectrum comes from a thin SVD of the centered
//! matrix, `λ_i = s_i² / (m - 1)`. The retained dimension κ is the smallest
//! count whose eigenvalues reach `β` of the total variance. At `β = 1` it is
//! the numerical rank of the centered matrix.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{PolylineFoil, Provenance};
use crate::geometry::Point2;
use crate::moments::moment_vector;
use crate::rng;
use crate::ssv::{AugKind, DesignMatrix, Layout, Ssv};

pub const DEFAULT_BETA: f64 = 0.95;
pub const DEFAULT_ALPHA: f64 = 2.0;

/// Relative slack on the retained-variance test, absorbing rounding in the
/// cumulative sum.
const BETA_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LatentSpace {
    mean: DVector<f64>,
    /// `n_p × κ`, orthonormal columns.
    basis: DMatrix<f64>,
    /// Retained eigenvalues, nonincreasing.
    eigenvalues: Vec<f64>,
    /// Every eigenvalue of the thin decomposition.
    spectrum: Vec<f64>,
    total_variance: f64,
    layout: Layout,
    beta: f64,
    n_samples: usize,
}

/// Fits the expansion and truncates at retained-variance fraction `beta`.
pub fn fit_kle(dm: &DesignMatrix, beta: f64) -> Result<LatentSpace> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::Domain(format!("beta {beta} outside (0, 1]")));
    }
    let m = dm.n_rows();
    if m < 2 {
        return Err(Error::EmptyDataset("need at least 2 rows".into()));
    }
    if dm.row_weights().windows(2).any(|w| w[0] != w[1]) {
        return Err(Error::Domain("weighted rows are not supported by the fit".into()));
    }
    let n = dm.n_cols();
    let x = DMatrix::from_fn(m, n, |i, j| dm.rows()[i][j]);
    let mean = DVector::from_fn(n, |j, _| x.column(j).mean());
    let mut centered = x;
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let svd = centered.svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| Error::Degenerate("SVD produced no basis".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let spectrum: Vec<f64> = order
        .iter()
        .map(|&k| {
            let lam = svd.singular_values[k].powi(2) / (m - 1) as f64;
            if lam < 0.0 { 0.0 } else { lam }
        })
        .collect();
    let total: f64 = spectrum.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Degenerate("design matrix has zero total variance".into()));
    }
    let kappa = if beta >= 1.0 {
        // numerical rank: s_k > max(m, n)·ε·s_max, squared into eigenvalue terms
        let tol = ((m.max(n) as f64) * f64::EPSILON).powi(2) * spectrum[0];
        spectrum.iter().filter(|&&lam| lam > tol).count().max(1)
    } else {
        let target = beta * total * (1.0 - BETA_SLACK);
        let mut cum = 0.0;
        let mut kappa = spectrum.len();
        for (k, lam) in spectrum.iter().enumerate() {
            cum += lam;
            if cum >= target {
                kappa = k + 1;
                break;
            }
        }
        kappa
    };
    let mut basis = DMatrix::zeros(n, kappa);
    for (c, &k) in order.iter().take(kappa).enumerate() {
        let mut col: DVector<f64> = v_t.row(k).transpose();
        col /= col.norm();
        let (imax, _) = col.iter().enumerate().fold((0, 0.0), |best, (i, v)| {
            if v.abs() > best.1 { (i, v.abs()) } else { best }
        });
        if col[imax] < 0.0 {
            col = -col;
        }
        basis.set_column(c, &col);
    }
    Ok(LatentSpace {
        mean,
        basis,
        eigenvalues: spectrum[..kappa].to_vec(),
        spectrum,
        total_variance: total,
        layout: dm.layout().clone(),
        beta,
        n_samples: m,
    })
}

/// Symmetric per-component latent box `±α√λ_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentBounds {
    pub low: Vec<f64>,
    pub high: Vec<f64>,
    pub alpha: f64,
}

impl LatentSpace {
    pub fn kappa(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn total_variance(&self) -> f64 {
        self.total_variance
    }

    /// Fraction of the total variance carried by the retained modes.
    pub fn retained_fraction(&self) -> f64 {
        self.eigenvalues.iter().sum::<f64>() / self.total_variance
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    /// `u_i = φ_iᵀ (v - mean)`.
    pub fn encode(&self, v: &Ssv) -> Result<Vec<f64>> {
        self.layout.check_compatible(v.layout())?;
        let d = DVector::from_column_slice(v.values()) - &self.mean;
        Ok((self.basis.tr_mul(&d)).iter().copied().collect())
    }

    /// `mean + Σ u_i φ_i`.
    pub fn decode(&self, u: &[f64]) -> Result<Ssv> {
        self.decode_rank(u, self.kappa())
    }

    /// Decode using only the leading `k` modes of `u`.
    pub fn decode_rank(&self, u: &[f64], k: usize) -> Result<Ssv> {
        if u.len() != self.kappa() {
            return Err(Error::Arity {
                expected: self.kappa(),
                got: u.len(),
            });
        }
        let k = k.min(self.kappa());
        let mut v = self.mean.clone();
        for (i, ui) in u.iter().enumerate().take(k) {
            v.axpy(*ui, &self.basis.column(i), 1.0);
        }
        Ssv::from_values(v.iter().copied().collect(), self.layout.clone())
    }

    /// Geometry block of a decoded SSV as a polyline (no validation).
    pub fn polyline(&self, v: &Ssv, name: impl Into<String>) -> PolylineFoil {
        let pts = v.geometry().chunks(2).map(|c| Point2::new(c[0], c[1])).collect();
        PolylineFoil::from_points_unchecked(pts, name, Provenance::Parametric, self.layout.scheme)
    }

    pub fn latent_bounds(&self, alpha: f64) -> Result<LatentBounds> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Domain(format!("alpha {alpha} must be positive")));
        }
        Ok(bounds_from_eigenvalues(&self.eigenvalues, alpha))
    }

    /// Uniform draws in the latent box, decoded. Draws are sequential from
    /// the `sampling` stream of `seed`; decoding is parallel.
    pub fn sample(&self, lb: &LatentBounds, count: usize, seed: u64) -> Result<Vec<(Vec<f64>, Ssv, PolylineFoil)>> {
        if count == 0 {
            return Err(Error::Domain("sample count must be at least 1".into()));
        }
        if lb.high.len() != self.kappa() || lb.low.len() != self.kappa() {
            return Err(Error::Arity {
                expected: self.kappa(),
                got: lb.high.len(),
            });
        }
        let mut r = rng::stream(seed, rng::STREAM_SAMPLING);
        let us: Vec<Vec<f64>> = (0..count)
            .map(|_| {
                lb.low
                    .iter()
                    .zip(&lb.high)
                    .map(|(lo, hi)| {
                        let s: f64 = r.random();
                        if hi > lo { lo + s * (hi - lo) } else { 0.5 * (lo + hi) }
                    })
                    .collect()
            })
            .collect();
        us.into_par_iter()
            .enumerate()
            .map(|(i, u)| {
                let v = self.decode(&u)?;
                let pf = self.polyline(&v, format!("sample-{i:05}"));
                Ok((u, v, pf))
            })
            .collect()
    }

    /// Relative residual between moments recomputed from a decoded geometry
    /// block and the decoded (unweighted) augmentation block. `None` when
    /// the layout carries no moments or the geometry encloses no area.
    pub fn moment_residual(&self, v: &Ssv) -> Option<f64> {
        let AugKind::Moments(spec) = &self.layout.aug else {
            return None;
        };
        let pf = self.polyline(v, "decoded").closed_copy();
        let actual = moment_vector(&pf, spec).ok()?;
        let predicted = v.augmentation_unweighted();
        let num: f64 = actual.iter().zip(&predicted).map(|(a, b)| (a - b).powi(2)).sum();
        let den: f64 = actual.iter().map(|a| a * a).sum();
        Some((num / den.max(f64::MIN_POSITIVE)).sqrt())
    }

    /// JSON header `space.json` plus `mean.csv` and `basis.csv` in `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let header = Header {
            layout: self.layout.clone(),
            kappa: self.kappa(),
            beta: self.beta,
            n_samples: self.n_samples,
            total_variance: self.total_variance,
            eigenvalues: self.eigenvalues.clone(),
            spectrum: self.spectrum.clone(),
        };
        let path = dir.join(HEADER_FILE);
        fs::write(&path, serde_json::to_string_pretty(&header)?).map_err(|e| Error::io(&path, e))?;
        let mean: String = self.mean.iter().map(|v| format!("{v:.16e}\n")).collect();
        let path = dir.join(MEAN_FILE);
        fs::write(&path, mean).map_err(|e| Error::io(&path, e))?;
        let mut basis = String::new();
        for row in self.basis.row_iter() {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            basis.push_str(&line.join(","));
            basis.push('\n');
        }
        let path = dir.join(BASIS_FILE);
        fs::write(&path, basis).map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let read = |name: &str| {
            let path = dir.join(name);
            fs::read_to_string(&path).map_err(|e| Error::io(&path, e))
        };
        let header: Header = serde_json::from_str(&read(HEADER_FILE)?)?;
        let n = header.layout.len();
        let parse = |s: &str, line: usize| {
            s.trim().parse::<f64>().map_err(|_| Error::Parse {
                line,
                msg: format!("'{s}' is not a number"),
            })
        };
        let mean: Vec<f64> = read(MEAN_FILE)?
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| parse(l, i + 1))
            .collect::<Result<_>>()?;
        let mut basis_vals = Vec::with_capacity(n * header.kappa);
        for (i, l) in read(BASIS_FILE)?.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let row: Vec<f64> = l.split(',').map(|s| parse(s, i + 1)).collect::<Result<_>>()?;
            if row.len() != header.kappa {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("{} columns, expected {}", row.len(), header.kappa),
                });
            }
            basis_vals.extend(row);
        }
        if mean.len() != n || basis_vals.len() != n * header.kappa || header.eigenvalues.len() != header.kappa {
            return Err(Error::LayoutMismatch("stored latent space does not match its header".into()));
        }
        Ok(LatentSpace {
            mean: DVector::from_vec(mean),
            basis: DMatrix::from_row_slice(n, header.kappa, &basis_vals),
            eigenvalues: header.eigenvalues,
            spectrum: header.spectrum,
            total_variance: header.total_variance,
            layout: header.layout,
            beta: header.beta,
            n_samples: header.n_samples,
        })
    }
}

pub const HEADER_FILE: &str = "space.json";
pub const MEAN_FILE: &str = "mean.csv";
pub const BASIS_FILE: &str = "basis.csv";

#[derive(Serialize, Deserialize)]
struct Header {
    layout: Layout,
    kappa: usize,
    beta: f64,
    n_samples: usize,
    total_variance: f64,
    eigenvalues: Vec<f64>,
    spectrum: Vec<f64>,
}

pub fn bounds_from_eigenvalues(eigenvalues: &[f64], alpha: f64) -> LatentBounds {
    let high: Vec<f64> = eigenvalues.iter().map(|l| alpha * l.max(0.0).sqrt()).collect();
    LatentBounds {
        low: high.iter().map(|h| -h).collect(),
        high,
        alpha,
    }
}
