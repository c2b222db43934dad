use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dat::parse_dat;
use super::polyline::{PolylineFoil, Provenance};
use crate::discretize::{discretize, resample_polyline, Scheme};
use crate::error::{Error, Result};
use crate::geometry::{make_foil, ParamVector, Point2, N_PARAMS};
use crate::rng;

/// Perturbed copies generated per base design.
pub const PERTURBATIONS_PER_BASE: usize = 5;
/// Relative perturbation half-width.
pub const PERTURBATION_FRACTION: f64 = 0.05;
/// Max point distance below which two resampled members count as duplicates.
pub const DUPLICATE_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SourceLabel {
    D1,
    D2,
    Custom,
}

/// Polylines sharing one point count and discretization scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct FoilDataset {
    members: Vec<PolylineFoil>,
    n: usize,
    scheme: Scheme,
    source: SourceLabel,
}

impl FoilDataset {
    pub fn new(members: Vec<PolylineFoil>, scheme: Scheme, source: SourceLabel) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| Error::EmptyDataset("no members".into()))?;
        let n = first.len();
        for (i, m) in members.iter().enumerate() {
            if m.len() != n {
                return Err(Error::member(
                    i,
                    m.name(),
                    Error::Malformed(format!("{} points, dataset uses {n}", m.len())),
                ));
            }
            if m.scheme().is_some_and(|s| s != scheme) {
                return Err(Error::member(
                    i,
                    m.name(),
                    Error::Malformed(format!("scheme differs from {scheme}")),
                ));
            }
        }
        Ok(FoilDataset {
            members,
            n,
            scheme,
            source,
        })
    }

    pub fn members(&self) -> &[PolylineFoil] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn common_n(&self) -> usize {
        self.n
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn source(&self) -> SourceLabel {
        self.source
    }

    /// Canonical CSV: `name,provenance,x1,y1,...,xN,yN`, 17 significant
    /// digits.
    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["name".to_string(), "provenance".to_string()];
        for i in 1..=self.n {
            header.push(format!("x{i}"));
            header.push(format!("y{i}"));
        }
        w.write_record(&header)?;
        for m in &self.members {
            let mut row = vec![m.name().to_string(), m.provenance().tag().to_string()];
            row.extend(m.flat_coords().iter().map(|v| format!("{v:.16e}")));
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Malformed(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv_string()?).map_err(|e| Error::io(path, e))
    }

    pub fn from_csv_str(text: &str, scheme: Scheme, source: SourceLabel) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let mut members = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            if rec.len() < 2 || rec.len() % 2 != 0 {
                return Err(Error::Parse {
                    line,
                    msg: format!("{} fields", rec.len()),
                });
            }
            let provenance = Provenance::from_tag(&rec[1]).ok_or_else(|| Error::Parse {
                line,
                msg: format!("unknown provenance '{}'", &rec[1]),
            })?;
            let vals = rec
                .iter()
                .skip(2)
                .map(|s| {
                    s.parse::<f64>().map_err(|_| Error::Parse {
                        line,
                        msg: format!("'{s}' is not a number"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            let points = vals.chunks(2).map(|c| Point2::new(c[0], c[1])).collect();
            members.push(PolylineFoil::from_points_unchecked(
                points,
                &rec[0],
                provenance,
                Some(scheme),
            ));
        }
        Self::new(members, scheme, source)
    }

    pub fn read_csv(path: &Path, scheme: Scheme, source: SourceLabel) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&text, scheme, source)
    }
}

/// `count` copies of `p` with each component drawn uniformly from
/// `[p_i(1 - fraction), p_i(1 + fraction)]` and clamped to [0, 1].
pub fn perturb_params(p: &ParamVector, count: usize, fraction: f64, seed: u64) -> Result<Vec<ParamVector>> {
    if count == 0 {
        return Err(Error::Domain("perturbation count must be at least 1".into()));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Domain(format!("perturbation fraction {fraction} outside (0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut v = [0.0; N_PARAMS];
            for (out, &pi) in v.iter_mut().zip(p.values()) {
                let (lo, hi) = (pi * (1.0 - fraction), pi * (1.0 + fraction));
                let draw = if hi > lo { rng.random_range(lo..=hi) } else { pi };
                *out = draw.clamp(0.0, 1.0);
            }
            ParamVector::new(v)
        })
        .collect()
}

/// Uniformly random design vectors.
pub fn random_params(count: usize, seed: u64) -> Vec<ParamVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut v = [0.0; N_PARAMS];
            v.iter_mut().for_each(|x| *x = rng.random_range(0.0..=1.0));
            ParamVector::new(v).expect("draws lie in [0, 1]")
        })
        .collect()
}

/// Each base design followed by its perturbed copies, discretized at a
/// shared scheme and point count.
pub fn build_dataset_d1(bases: &[ParamVector], scheme: Scheme, n: usize, seed: u64) -> Result<FoilDataset> {
    if bases.is_empty() {
        return Err(Error::EmptyDataset("no base designs".into()));
    }
    let groups = bases
        .par_iter()
        .enumerate()
        .map(|(i, base)| {
            let member_seed = rng::stream_seed(seed, &format!("{}/{i}", rng::STREAM_DATASET));
            let mut params = vec![*base];
            params.extend(perturb_params(base, PERTURBATIONS_PER_BASE, PERTURBATION_FRACTION, member_seed)?);
            params
                .iter()
                .enumerate()
                .map(|(k, p)| {
                    let label = format!("d1-{i:05}-{k}");
                    let index = i * (PERTURBATIONS_PER_BASE + 1) + k;
                    make_foil(p)
                        .and_then(|c| discretize(&c, scheme, n))
                        .map(|pf| pf.with_name(label.clone()))
                        .map_err(|e| Error::member(index, &label, e))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    FoilDataset::new(groups.into_iter().flatten().collect(), scheme, SourceLabel::D1)
}

/// One entry of an optional `manifest.json` in an external dataset
/// directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: Option<String>,
    pub provenance: Option<Provenance>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LoadWarning {
    pub path: PathBuf,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub scheme: Scheme,
    pub n: usize,
    /// Provenance of files the manifest does not mention.
    pub default_provenance: Provenance,
    /// Member labels to drop.
    pub exclude: Vec<String>,
    /// Near-duplicate threshold; `None` keeps everything.
    pub duplicate_tol: Option<f64>,
}

impl LoadOptions {
    pub fn new(scheme: Scheme, n: usize) -> Self {
        LoadOptions {
            scheme,
            n,
            default_provenance: Provenance::ExternalSynthesized,
            exclude: Vec::new(),
            duplicate_tol: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExternalLoad {
    pub dataset: FoilDataset,
    pub warnings: Vec<LoadWarning>,
    /// Largest resampling Hausdorff distance over kept members.
    pub max_hausdorff: f64,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Loads every coordinate file of `dir` (sorted by file name), resampled to
/// the requested scheme and point count. Unreadable files become warnings.
pub fn load_external_dataset(dir: &Path, opts: &LoadOptions) -> Result<ExternalLoad> {
    let manifest: Vec<ManifestEntry> = match fs::read_to_string(dir.join(MANIFEST_FILE)) {
        Ok(text) => serde_json::from_str(&text)?,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(Error::io(dir.join(MANIFEST_FILE), e)),
    };
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.file_name().is_some_and(|f| f != MANIFEST_FILE))
        .collect();
    files.sort();

    let results: Vec<(PathBuf, Result<(PolylineFoil, f64)>)> = files
        .into_par_iter()
        .map(|path| {
            let entry = manifest.iter().find(|m| dir.join(&m.path) == path || m.path == path);
            let res = fs::read(&path)
                .map_err(|e| Error::io(&path, e))
                .and_then(|bytes| {
                    String::from_utf8(bytes).map_err(|_| Error::Malformed("not utf-8 text".into()))
                })
                .and_then(|text| parse_dat(&text))
                .and_then(|pf| resample_polyline(&pf, opts.scheme, opts.n))
                .map(|r| {
                    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                    let label = entry.and_then(|m| m.label.clone()).unwrap_or(stem);
                    let provenance = entry.and_then(|m| m.provenance).unwrap_or(opts.default_provenance);
                    (r.foil.with_name(label).with_provenance(provenance), r.hausdorff)
                });
            (path, res)
        })
        .collect();

    let mut warnings = Vec::new();
    let mut members = Vec::new();
    let mut max_hausdorff: f64 = 0.0;
    for (path, res) in results {
        match res {
            Ok((pf, _)) if opts.exclude.iter().any(|x| x == pf.name()) => {
                log::info!("excluded {}", pf.name());
            }
            Ok((pf, h)) => {
                max_hausdorff = max_hausdorff.max(h);
                members.push(pf);
            }
            Err(e) => {
                log::warn!("skipping {}: {e}", path.display());
                warnings.push(LoadWarning {
                    path,
                    message: e.to_string(),
                });
            }
        }
    }
    if let Some(tol) = opts.duplicate_tol {
        let (kept, dropped) = filter_near_duplicates(members, tol);
        for name in dropped {
            warnings.push(LoadWarning {
                path: dir.join(&name),
                message: format!("near-duplicate of an earlier member: {name}"),
            });
        }
        members = kept;
    }
    if members.is_empty() {
        return Err(Error::EmptyDataset(format!("no usable files in {}", dir.display())));
    }
    Ok(ExternalLoad {
        dataset: FoilDataset::new(members, opts.scheme, SourceLabel::D2)?,
        warnings,
        max_hausdorff,
    })
}

/// Drops every member whose points all lie within `tol` of an earlier
/// kept member's. Returns kept members and the dropped labels.
pub fn filter_near_duplicates(members: Vec<PolylineFoil>, tol: f64) -> (Vec<PolylineFoil>, Vec<String>) {
    let mut kept: Vec<PolylineFoil> = Vec::with_capacity(members.len());
    let mut dropped = Vec::new();
    for m in members {
        let dup = kept.iter().any(|k| {
            k.len() == m.len() && k.points().iter().zip(m.points()).all(|(a, b)| a.dist(*b) < tol)
        });
        if dup {
            dropped.push(m.name().to_string());
        } else {
            kept.push(m);
        }
    }
    (kept, dropped)
}

/// Reads design vectors: one row of 17 comma- or space-separated values
/// per line; blank lines and `#` comments are skipped.
pub fn parse_params(text: &str) -> Result<Vec<ParamVector>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let vals = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>().map_err(|_| Error::Parse {
                    line: i + 1,
                    msg: format!("'{s}' is not a number"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        let p = ParamVector::from_slice(&vals).map_err(|e| Error::Parse {
            line: i + 1,
            msg: e.to_string(),
        })?;
        out.push(p);
    }
    Ok(out)
}
