use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::diversity::{diversity_score, Bandwidth, DiversityScore};
use super::kde::{kde, Kde};
use super::validity::{check_validity_with, ValidityOptions, ValidityReport};
use crate::discretize::Scheme;
use crate::error::{Error, ErrorKind, Result};
use crate::ingest::PolylineFoil;
use crate::kle::{LatentBounds, LatentSpace};
use crate::perf::{Evaluator, FlowCondition};

pub const DEFAULT_SAMPLE_COUNT: usize = 10_000;
pub const DEFAULT_SUBSETS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceStats {
    pub mean: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
    pub evaluated: usize,
    pub non_converged: usize,
    pub errors: usize,
    /// Lift-to-drag per input design; `None` where evaluation failed.
    #[serde(skip)]
    pub values: Vec<Option<f64>>,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Lift-to-drag statistics over the designs. Failed and non-converged
/// evaluations are counted and excluded. Evaluations run on a pool of at
/// most `max_parallel` threads.
pub fn performance_stats(
    designs: &[PolylineFoil],
    evaluator: &dyn Evaluator,
    condition: &FlowCondition,
    max_parallel: usize,
) -> Result<PerformanceStats> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(max_parallel.max(1))
        .build()
        .map_err(|e| Error::Environment(e.to_string()))?;
    let results: Vec<Result<Option<f64>>> = pool.install(|| {
        designs
            .par_iter()
            .map(|pf| evaluator.evaluate(pf, condition).map(|p| p.lift_to_drag()))
            .collect()
    });
    let mut values = Vec::with_capacity(results.len());
    let (mut non_converged, mut errors, mut external) = (0, 0, 0);
    let mut first_error = None;
    for r in results {
        match r {
            Ok(Some(v)) => values.push(Some(v)),
            Ok(None) => {
                non_converged += 1;
                values.push(None);
            }
            Err(e) => {
                errors += 1;
                if e.kind() == ErrorKind::External {
                    external += 1;
                }
                first_error.get_or_insert_with(|| e.to_string());
                values.push(None);
            }
        }
    }
    let mut ok: Vec<f64> = values.iter().flatten().copied().collect();
    if ok.is_empty() {
        let census = format!(
            "all {} evaluations failed: {non_converged} non-converged, {errors} errors{}",
            designs.len(),
            first_error.map(|e| format!(" (first: {e})")).unwrap_or_default()
        );
        return Err(if external > 0 && external == errors && non_converged == 0 {
            Error::Environment(census)
        } else {
            Error::Degenerate(census)
        });
    }
    ok.sort_by(f64::total_cmp);
    Ok(PerformanceStats {
        mean: ok.iter().sum::<f64>() / ok.len() as f64,
        q1: quantile(&ok, 0.25),
        median: quantile(&ok, 0.5),
        q3: quantile(&ok, 0.75),
        min: ok[0],
        max: ok[ok.len() - 1],
        evaluated: ok.len(),
        non_converged,
        errors,
        values,
    })
}

/// Everything that fixes an audit run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditProtocol {
    pub count: usize,
    pub subsets: usize,
    pub seed: u64,
    pub condition: FlowCondition,
    pub alpha: f64,
    pub beta: f64,
    pub scheme: Option<Scheme>,
    pub variant: String,
    pub bandwidth: Bandwidth,
    pub validity: ValidityOptions,
    pub max_parallel: usize,
}

impl AuditProtocol {
    /// Protocol for `ls` with default counts and flow condition.
    pub fn for_space(ls: &LatentSpace, alpha: f64, seed: u64) -> Self {
        AuditProtocol {
            count: DEFAULT_SAMPLE_COUNT,
            subsets: DEFAULT_SUBSETS,
            seed,
            condition: FlowCondition::default(),
            alpha,
            beta: ls.beta(),
            scheme: ls.layout().scheme,
            variant: ls.layout().aug.to_string(),
            bandwidth: Bandwidth::Median,
            validity: ValidityOptions::default(),
            max_parallel: rayon::current_num_threads(),
        }
    }
}

/// Per-design line of the audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignRecord {
    pub index: usize,
    pub valid: bool,
    pub self_intersections: usize,
    pub upper_sign_changes: usize,
    pub lower_sign_changes: usize,
    pub lift_to_drag: Option<f64>,
    pub moment_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualSummary {
    pub median: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub protocol: AuditProtocol,
    pub kappa: usize,
    /// Percent of sampled designs failing the validity check.
    pub invalid_fraction: f64,
    pub valid_count: usize,
    pub diversity: Option<DiversityScore>,
    pub performance: Option<PerformanceStats>,
    pub kde: Option<Kde>,
    /// Decoded-moment consistency, for moment-augmented spaces.
    pub moment_residual: Option<ResidualSummary>,
    /// Metrics that failed as a whole.
    pub errors: Vec<String>,
    #[serde(skip)]
    pub records: Vec<DesignRecord>,
}

/// Samples the latent box, checks validity, then scores diversity and
/// performance of the valid designs. A metric that fails wholesale is
/// recorded in `errors` and left empty.
pub fn audit_space(
    ls: &LatentSpace,
    lb: &LatentBounds,
    protocol: &AuditProtocol,
    evaluator: Option<&dyn Evaluator>,
) -> Result<QualityReport> {
    let samples = ls.sample(lb, protocol.count, protocol.seed)?;
    let checks: Vec<(ValidityReport, Option<f64>)> = samples
        .par_iter()
        .map(|(_, v, pf)| (check_validity_with(pf, &protocol.validity), ls.moment_residual(v)))
        .collect();
    let valid_idx: Vec<usize> = (0..samples.len()).filter(|&i| checks[i].0.is_valid).collect();
    let invalid_fraction = 100.0 * (samples.len() - valid_idx.len()) as f64 / samples.len() as f64;
    let mut errors = Vec::new();

    let geometry: Vec<&[f64]> = valid_idx.iter().map(|&i| samples[i].1.geometry()).collect();
    let diversity = match diversity_score(&geometry, protocol.subsets, protocol.bandwidth, protocol.seed) {
        Ok(d) => Some(d),
        Err(e) => {
            errors.push(format!("diversity: {e}"));
            None
        }
    };

    let mut lift_to_drag = vec![None; samples.len()];
    let (performance, kde_curve) = match evaluator {
        None => {
            errors.push("performance: no evaluator configured".into());
            (None, None)
        }
        Some(ev) => {
            let foils: Vec<PolylineFoil> = valid_idx.iter().map(|&i| samples[i].2.clone()).collect();
            match performance_stats(&foils, ev, &protocol.condition, protocol.max_parallel) {
                Ok(stats) => {
                    for (k, &i) in valid_idx.iter().enumerate() {
                        lift_to_drag[i] = stats.values[k];
                    }
                    let vals: Vec<f64> = stats.values.iter().flatten().copied().collect();
                    let curve = match kde(&vals, None) {
                        Ok(k) => Some(k),
                        Err(e) => {
                            errors.push(format!("kde: {e}"));
                            None
                        }
                    };
                    (Some(stats), curve)
                }
                Err(e) => {
                    errors.push(format!("performance: {e}"));
                    (None, None)
                }
            }
        }
    };

    let mut residuals: Vec<f64> = checks.iter().filter_map(|c| c.1).filter(|r| r.is_finite()).collect();
    residuals.sort_by(f64::total_cmp);
    let moment_residual = (!residuals.is_empty()).then(|| ResidualSummary {
        median: quantile(&residuals, 0.5),
        max: residuals[residuals.len() - 1],
    });

    let records = checks
        .iter()
        .enumerate()
        .map(|(i, (v, r))| DesignRecord {
            index: i,
            valid: v.is_valid,
            self_intersections: v.self_intersections,
            upper_sign_changes: v.upper_sign_changes,
            lower_sign_changes: v.lower_sign_changes,
            lift_to_drag: lift_to_drag[i],
            moment_residual: *r,
        })
        .collect();

    Ok(QualityReport {
        protocol: protocol.clone(),
        kappa: ls.kappa(),
        invalid_fraction,
        valid_count: valid_idx.len(),
        diversity,
        performance,
        kde: kde_curve,
        moment_residual,
        errors,
        records,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

impl QualityReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn records_csv(&self) -> String {
        let mut s = String::from("index,valid,self_intersections,upper_sign_changes,lower_sign_changes,lift_to_drag,moment_residual\n");
        for r in &self.records {
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.index,
                r.valid,
                r.self_intersections,
                r.upper_sign_changes,
                r.lower_sign_changes,
                opt(r.lift_to_drag),
                opt(r.moment_residual)
            ));
        }
        s
    }

    pub fn kde_csv(&self) -> Option<String> {
        self.kde.as_ref().map(|k| {
            let mut s = String::from("x,density\n");
            for (x, d) in k.grid.iter().zip(&k.density) {
                s.push_str(&format!("{x:.16e},{d:.16e}\n"));
            }
            s
        })
    }

    /// `report.json`, `designs.csv` and, when present, `kde.csv` in `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let write = |name: &str, text: String| {
            let path = dir.join(name);
            fs::write(&path, text).map_err(|e| Error::io(&path, e))
        };
        write("report.json", self.to_json()?)?;
        write("designs.csv", self.records_csv())?;
        if let Some(k) = self.kde_csv() {
            write("kde.csv", k)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Provenance;
    use crate::perf::{ConstantEvaluator, PolarPoint, PolarSource};
    use crate::geometry::Point2;

    fn foil() -> PolylineFoil {
        let pts = [(1.0, 0.0), (0.5, 0.06), (0.0, 0.0), (0.5, -0.04), (1.0, 0.0)];
        PolylineFoil::from_points_unchecked(
            pts.iter().map(|&(x, y)| Point2::new(x, y)).collect(),
            "f",
            Provenance::File,
            None,
        )
    }

    struct Failing;

    impl Evaluator for Failing {
        fn name(&self) -> &str {
            "failing"
        }

        fn evaluate(&self, _: &PolylineFoil, _: &FlowCondition) -> Result<PolarPoint> {
            Ok(PolarPoint::failed(PolarSource::Xfoil))
        }
    }

    #[test]
    fn constant_evaluator_stats() {
        let designs = vec![foil(); 7];
        let s = performance_stats(&designs, &ConstantEvaluator { ld: 80.0 }, &FlowCondition::default(), 2).unwrap();
        assert_eq!((s.mean, s.min, s.max, s.q1, s.q3), (80.0, 80.0, 80.0, 80.0, 80.0));
        assert_eq!(s.evaluated, 7);
    }

    #[test]
    fn all_failures_is_an_error_with_census() {
        let err = performance_stats(&[foil(), foil()], &Failing, &FlowCondition::default(), 1).unwrap_err();
        assert!(err.to_string().contains("2 non-converged"), "{err}");
    }
}
