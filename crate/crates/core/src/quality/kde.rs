use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const KDE_GRID: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kde {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub bandwidth: f64,
    /// Set when the sample has no spread.
    pub warning: Option<String>,
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// `0.9 · min(σ, IQR/1.34) · n^(-1/5)`, falling back to whichever spread
/// is nonzero.
pub fn silverman_bandwidth(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = (quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25)) / 1.34;
    let spread = match (sd > 0.0, iqr > 0.0) {
        (true, true) => sd.min(iqr),
        (true, false) => sd,
        (false, true) => iqr,
        (false, false) => 0.0,
    };
    0.9 * spread * n.powf(-0.2)
}

/// Gaussian kernel density on a 512-point grid over `[min - 3h, max + 3h]`,
/// renormalized so its trapezoid integral is 1.
pub fn kde(values: &[f64], bandwidth: Option<f64>) -> Result<Kde> {
    if values.len() < 2 {
        return Err(Error::Domain(format!("KDE needs at least 2 values, got {}", values.len())));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("KDE input must be finite".into()));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut warning = None;
    let h = match bandwidth {
        Some(h) if h > 0.0 && h.is_finite() => h,
        Some(h) => return Err(Error::Domain(format!("bandwidth {h} must be positive"))),
        None => {
            let h = silverman_bandwidth(values);
            if h > 0.0 {
                h
            } else {
                let msg = format!("all {} values equal {lo}; density is a narrow spike", values.len());
                log::warn!("{msg}");
                warning = Some(msg);
                1e-3 * lo.abs().max(1.0)
            }
        }
    };
    let (a, b) = (lo - 3.0 * h, hi + 3.0 * h);
    let step = (b - a) / (KDE_GRID - 1) as f64;
    let grid: Vec<f64> = (0..KDE_GRID).map(|i| a + step * i as f64).collect();
    let norm = 1.0 / (values.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    let mut density: Vec<f64> = grid
        .iter()
        .map(|x| norm * values.iter().map(|v| (-0.5 * ((x - v) / h).powi(2)).exp()).sum::<f64>())
        .collect();
    let integral = trapezoid(&grid, &density);
    density.iter_mut().for_each(|d| *d /= integral);
    Ok(Kde {
        grid,
        density,
        bandwidth: h,
        warning,
    })
}

pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xw, yw)| 0.5 * (xw[1] - xw[0]) * (yw[0] + yw[1]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_sample_is_bimodal_and_symmetric() {
        let k = kde(&[0.0, 10.0], None).unwrap();
        assert!((trapezoid(&k.grid, &k.density) - 1.0).abs() < 1e-12);
        let peak = |lo: f64, hi: f64| {
            k.grid
                .iter()
                .zip(&k.density)
                .filter(|(x, _)| **x >= lo && **x <= hi)
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(x, _)| *x)
                .unwrap()
        };
        assert!(peak(-100.0, 5.0).abs() < k.bandwidth / 10.0);
        assert!((peak(5.0, 100.0) - 10.0).abs() < k.bandwidth / 10.0);
        let n = k.density.len();
        for i in 0..n {
            assert!((k.density[i] - k.density[n - 1 - i]).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_sample_warns() {
        let k = kde(&[4.0; 5], None).unwrap();
        assert!(k.warning.is_some());
        assert!((trapezoid(&k.grid, &k.density) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_tiny_input() {
        assert!(kde(&[1.0], None).is_err());
    }
}
