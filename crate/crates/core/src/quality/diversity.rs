use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Relative diagonal jitter of the fallback factorization.
pub const JITTER: f64 = 1e-10;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `L_ij = exp(-‖x_i - x_j‖² / (2h²)) · (q_i q_j)^γ₀`.
pub fn similarity_kernel(designs: &[&[f64]], bandwidth: f64, q: Option<&[f64]>, gamma0: f64) -> Result<DMatrix<f64>> {
    let m = designs.len();
    if m < 2 {
        return Err(Error::Domain(format!("kernel needs at least 2 designs, got {m}")));
    }
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::Domain(format!("bandwidth {bandwidth} must be positive")));
    }
    let perf: Option<Vec<f64>> = match q {
        Some(q) if gamma0 != 0.0 => {
            if q.len() != m {
                return Err(Error::Arity { expected: m, got: q.len() });
            }
            if let Some(v) = q.iter().find(|v| !(**v > 0.0)) {
                return Err(Error::Domain(format!("performance {v} must be positive when γ₀ ≠ 0")));
            }
            Some(q.iter().map(|v| v.powf(gamma0)).collect())
        }
        _ => None,
    };
    let inv = 1.0 / (2.0 * bandwidth * bandwidth);
    let mut l = DMatrix::identity(m, m);
    for i in 0..m {
        for j in 0..i {
            let k = (-sq_dist(designs[i], designs[j]) * inv).exp();
            l[(i, j)] = k;
            l[(j, i)] = k;
        }
    }
    if let Some(p) = perf {
        for i in 0..m {
            for j in 0..m {
                l[(i, j)] *= p[i] * p[j];
            }
        }
    }
    Ok(l)
}

/// Median pairwise distance divided by √2.
pub fn median_bandwidth(designs: &[&[f64]]) -> f64 {
    let mut d: Vec<f64> = Vec::with_capacity(designs.len() * designs.len().saturating_sub(1) / 2);
    for i in 0..designs.len() {
        for j in 0..i {
            d.push(sq_dist(designs[i], designs[j]).sqrt());
        }
    }
    if d.is_empty() {
        return f64::NAN;
    }
    d.sort_by(f64::total_cmp);
    let mid = d.len() / 2;
    let med = if d.len() % 2 == 1 { d[mid] } else { 0.5 * (d[mid - 1] + d[mid]) };
    med / std::f64::consts::SQRT_2
}

/// How a log-determinant was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LogDetPath {
    Cholesky,
    Jittered,
    /// Exactly singular (repeated design) or not factorizable.
    Singular,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDet {
    pub value: f64,
    pub path: LogDetPath,
}

fn cholesky_logdet(l: DMatrix<f64>) -> Option<f64> {
    let c = l.cholesky()?;
    Some(2.0 * c.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

/// `log det L` by Cholesky, retrying once with `JITTER·trace/m` on the
/// diagonal, else `-∞`.
pub fn log_det(l: &DMatrix<f64>) -> LogDet {
    if let Some(v) = cholesky_logdet(l.clone()) {
        return LogDet { value: v, path: LogDetPath::Cholesky };
    }
    let m = l.nrows();
    let eps = JITTER * l.trace() / m as f64;
    let mut j = l.clone();
    for i in 0..m {
        j[(i, i)] += eps;
    }
    match cholesky_logdet(j) {
        Some(v) => LogDet { value: v, path: LogDetPath::Jittered },
        None => LogDet { value: f64::NEG_INFINITY, path: LogDetPath::Singular },
    }
}

/// `(1/|B|) log det L_B` with γ₀ = 0. Subsets holding two identical designs
/// have determinant exactly zero and score `-∞`.
pub fn subset_score(designs: &[&[f64]], bandwidth: f64) -> Result<LogDet> {
    let m = designs.len();
    for i in 0..m {
        for j in 0..i {
            if designs[i] == designs[j] {
                return Ok(LogDet { value: f64::NEG_INFINITY, path: LogDetPath::Singular });
            }
        }
    }
    let l = similarity_kernel(designs, bandwidth, None, 0.0)?;
    let ld = log_det(&l);
    Ok(LogDet { value: ld.value / m as f64, path: ld.path })
}

/// Kernel bandwidth rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bandwidth {
    /// Median heuristic, per subset.
    Median,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversityScore {
    #[serde(with = "crate::quality::nonfinite::vec")]
    pub per_subset: Vec<f64>,
    #[serde(with = "crate::quality::nonfinite")]
    pub mean: f64,
    #[serde(with = "crate::quality::nonfinite")]
    pub min: f64,
    #[serde(with = "crate::quality::nonfinite")]
    pub max: f64,
    /// Bandwidth used per subset.
    pub kernel_bandwidth: Vec<f64>,
    pub paths: Vec<LogDetPath>,
    pub gamma0: f64,
    pub warnings: Vec<String>,
}

/// Shuffles the designs with the `subsets` stream of `seed`, splits them
/// into `subset_count` near-equal parts and scores each.
pub fn diversity_score(designs: &[&[f64]], subset_count: usize, bandwidth: Bandwidth, seed: u64) -> Result<DiversityScore> {
    if subset_count == 0 {
        return Err(Error::Domain("subset count must be at least 1".into()));
    }
    let size = designs.len() / subset_count;
    if size < 2 {
        return Err(Error::Domain(format!(
            "{} designs cannot fill {subset_count} subsets of at least 2",
            designs.len()
        )));
    }
    let mut order: Vec<usize> = (0..designs.len()).collect();
    order.shuffle(&mut rng::stream(seed, rng::STREAM_SUBSETS));
    let extra = designs.len() % subset_count;
    let mut start = 0;
    let mut per_subset = Vec::with_capacity(subset_count);
    let mut bandwidths = Vec::with_capacity(subset_count);
    let mut paths = Vec::with_capacity(subset_count);
    let mut warnings = Vec::new();
    for s in 0..subset_count {
        let len = size + usize::from(s < extra);
        let subset: Vec<&[f64]> = order[start..start + len].iter().map(|&i| designs[i]).collect();
        start += len;
        let h = match bandwidth {
            Bandwidth::Fixed(h) => h,
            Bandwidth::Median => median_bandwidth(&subset),
        };
        let score = if h > 0.0 {
            subset_score(&subset, h)?
        } else {
            LogDet { value: f64::NEG_INFINITY, path: LogDetPath::Singular }
        };
        match score.path {
            LogDetPath::Singular => warnings.push(format!("subset {s}: singular kernel, score -inf")),
            LogDetPath::Jittered => warnings.push(format!("subset {s}: kernel needed diagonal jitter")),
            LogDetPath::Cholesky => {}
        }
        per_subset.push(score.value);
        bandwidths.push(h);
        paths.push(score.path);
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    let mean = per_subset.iter().sum::<f64>() / subset_count as f64;
    let min = per_subset.iter().copied().fold(f64::INFINITY, f64::min);
    let max = per_subset.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(DiversityScore {
        per_subset,
        mean,
        min,
        max,
        kernel_bandwidth: bandwidths,
        paths,
        gamma0: 0.0,
        warnings,
    })
}
