use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use foilspace::discretize::Scheme;
use foilspace::ingest::{
    build_dataset_d1, load_external_dataset, parse_params, random_params, FoilDataset, LoadOptions, SourceLabel,
};
use foilspace::kle::{fit_kle, LatentSpace};
use foilspace::perf::{Evaluator, SurrogateEvaluator, XfoilEvaluator};
use foilspace::quality::{audit_space, AuditProtocol, Bandwidth, QualityReport};
use foilspace::rng;
use foilspace::ssv::{assemble_design_matrix, AugKind, Augmentation, FailureMode, WeightChoice};
use foilspace::Error;
use serde::{Deserialize, Serialize};

use crate::config::{parse_variant, EvaluatorChoice, RunConfig};
use crate::error::{CliError, CliResult};

pub const RUN_MANIFEST: &str = "run-manifest.json";
pub const DATASET_FILE: &str = "dataset.csv";
pub const SPACE_DIR: &str = "space";
pub const AUDIT_DIR: &str = "audit";
pub const GRID_DIR: &str = "grid";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const PLOT_DIR: &str = "plot";

/// Wall-clock facts about a run; the only non-deterministic content.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Metadata {
    pub created_unix: u64,
    pub elapsed_s: f64,
    pub version: String,
}

/// Record of one command. `run-manifest.json` maps command names to these.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: RunConfig,
    /// Paths relative to the run directory.
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
    pub metadata: Metadata,
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Core(Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn write_manifest(cfg: &RunConfig, command: &str, outputs: Vec<String>, warnings: Vec<String>, start: SystemTime) -> CliResult<()> {
    let now = SystemTime::now();
    let manifest = RunManifest {
        command: command.into(),
        config: cfg.clone(),
        outputs,
        warnings,
        metadata: Metadata {
            created_unix: start.duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            elapsed_s: now.duration_since(start).map(|d| d.as_secs_f64()).unwrap_or(0.0),
            version: env!("CARGO_PKG_VERSION").into(),
        },
    };
    // one entry per command, so later commands keep earlier records
    let path = cfg.out_dir.join(RUN_MANIFEST);
    let mut all: std::collections::BTreeMap<String, serde_json::Value> = match fs::read_to_string(&path) {
        Ok(text) => serde_json::from_str(&text).map_err(Error::from)?,
        Err(_) => Default::default(),
    };
    all.insert(command.into(), serde_json::to_value(&manifest).map_err(Error::from)?);
    let text = serde_json::to_string_pretty(&all).map_err(Error::from)?;
    write_file(&path, &text)
}

/// Dataset for `scheme` from the configured source.
pub fn build_dataset(cfg: &RunConfig, scheme: Scheme) -> CliResult<(FoilDataset, Vec<String>)> {
    if let Some(dir) = &cfg.dat_dir {
        let mut opts = LoadOptions::new(scheme, cfg.n_points);
        opts.exclude = cfg.exclude.clone();
        opts.duplicate_tol = cfg.duplicate_tol;
        let load = load_external_dataset(dir, &opts)?;
        let warnings = load.warnings.iter().map(|w| format!("{}: {}", w.path.display(), w.message)).collect();
        return Ok((load.dataset, warnings));
    }
    let bases = match &cfg.params_file {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
            let bases = parse_params(&text)?;
            if bases.is_empty() {
                return Err(Error::EmptyDataset(format!("{} holds no design vectors", path.display())).into());
            }
            bases
        }
        None => random_params(cfg.random_bases, rng::stream_seed(cfg.seed, "bases")),
    };
    Ok((build_dataset_d1(&bases, scheme, cfg.n_points, cfg.seed)?, Vec::new()))
}

pub fn make_evaluator(cfg: &RunConfig) -> CliResult<Option<Arc<dyn Evaluator>>> {
    Ok(match cfg.evaluator {
        EvaluatorChoice::None => None,
        EvaluatorChoice::Surrogate => Some(Arc::new(SurrogateEvaluator)),
        EvaluatorChoice::Xfoil => {
            let mut ev = match &cfg.xfoil_exe {
                Some(exe) => XfoilEvaluator::new(exe),
                None => XfoilEvaluator::from_env()?,
            };
            ev.timeout = Duration::from_secs_f64(cfg.xfoil_timeout_s);
            ev.repanel = cfg.repanel;
            Some(Arc::new(ev))
        }
    })
}

fn augmentation(kind: &AugKind, cfg: &RunConfig, evaluator: Option<&Arc<dyn Evaluator>>) -> CliResult<Augmentation> {
    Ok(match kind {
        AugKind::None => Augmentation::None,
        AugKind::Moments(spec) => Augmentation::Moments(spec.clone()),
        AugKind::Performance => match evaluator {
            Some(ev) => Augmentation::Performance {
                evaluator: Arc::clone(ev),
                condition: cfg.flow_condition()?,
            },
            None => {
                return Err(CliError::Config("the performance variant needs an evaluator".into()));
            }
        },
    })
}

fn weight(cfg: &RunConfig) -> WeightChoice {
    cfg.weight.map_or(WeightChoice::Balanced, WeightChoice::Fixed)
}

/// Fits one latent space; returns it with assembly warnings.
pub fn fit_space(
    ds: &FoilDataset,
    kind: &AugKind,
    cfg: &RunConfig,
    evaluator: Option<&Arc<dyn Evaluator>>,
) -> CliResult<(LatentSpace, Vec<String>)> {
    let aug = augmentation(kind, cfg, evaluator)?;
    let assembly = assemble_design_matrix(ds, &aug, weight(cfg), FailureMode::Drop)?;
    Ok((fit_kle(&assembly.matrix, cfg.beta)?, assembly.warnings))
}

pub fn protocol(ls: &LatentSpace, cfg: &RunConfig) -> CliResult<AuditProtocol> {
    let mut p = AuditProtocol::for_space(ls, cfg.alpha, cfg.seed);
    p.count = cfg.count;
    p.subsets = cfg.subsets;
    p.condition = cfg.flow_condition()?;
    p.bandwidth = Bandwidth::Median;
    p.max_parallel = cfg.max_parallel;
    Ok(p)
}

pub fn audit(ls: &LatentSpace, cfg: &RunConfig, evaluator: Option<&Arc<dyn Evaluator>>) -> CliResult<QualityReport> {
    let lb = ls.latent_bounds(cfg.alpha)?;
    let p = protocol(ls, cfg)?;
    Ok(audit_space(ls, &lb, &p, evaluator.map(|e| e.as_ref() as &dyn Evaluator))?)
}

/// Builds the dataset and writes `dataset.csv`.
pub fn cmd_ingest(cfg: &RunConfig) -> CliResult<PathBuf> {
    let start = SystemTime::now();
    let (ds, warnings) = build_dataset(cfg, cfg.scheme)?;
    let path = cfg.out_dir.join(DATASET_FILE);
    write_file(&path, &ds.to_csv_string()?)?;
    println!("{} members, scheme {}, {} points", ds.len(), ds.scheme(), ds.common_n());
    write_manifest(cfg, "ingest", vec![DATASET_FILE.into()], warnings, start)?;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitSummary {
    pub kappa: usize,
    pub retained: f64,
    pub ssv_len: usize,
    pub members: usize,
}

/// Assembles the design matrix, fits the latent space and saves it under
/// `space/`. Reads `dataset` when given, otherwise builds the dataset.
pub fn cmd_fit(cfg: &RunConfig, dataset: Option<&Path>) -> CliResult<FitSummary> {
    let start = SystemTime::now();
    let (ds, mut warnings) = match dataset {
        Some(path) => (FoilDataset::read_csv(path, cfg.scheme, SourceLabel::Custom)?, Vec::new()),
        None => build_dataset(cfg, cfg.scheme)?,
    };
    let evaluator = make_evaluator(cfg)?;
    let (ls, more) = fit_space(&ds, &cfg.aug_kind()?, cfg, evaluator.as_ref())?;
    warnings.extend(more);
    ls.save(&cfg.out_dir.join(SPACE_DIR))?;
    let summary = FitSummary {
        kappa: ls.kappa(),
        retained: ls.retained_fraction(),
        ssv_len: ls.layout().len(),
        members: ls.n_samples(),
    };
    println!(
        "kappa {} (retained variance {:.6}), SSV length {}, {} members",
        summary.kappa, summary.retained, summary.ssv_len, summary.members
    );
    write_manifest(cfg, "fit", vec![SPACE_DIR.into()], warnings, start)?;
    Ok(summary)
}

/// Audits a saved latent space; writes the report under `audit/`.
pub fn cmd_audit(cfg: &RunConfig, space: &Path) -> CliResult<QualityReport> {
    let start = SystemTime::now();
    let ls = LatentSpace::load(space)?;
    let evaluator = make_evaluator(cfg)?;
    let report = audit(&ls, cfg, evaluator.as_ref())?;
    report.write(&cfg.out_dir.join(AUDIT_DIR))?;
    println!("invalid {:.4}% of {} designs", report.invalid_fraction, cfg.count);
    if let Some(d) = &report.diversity {
        println!("diversity mean {:.6}", d.mean);
    }
    if let Some(p) = &report.performance {
        println!("lift-to-drag median {:.4}", p.median);
    }
    write_manifest(cfg, "audit", vec![AUDIT_DIR.into()], report.errors.clone(), start)?;
    Ok(report)
}

/// One grid cell's outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridRow {
    pub index: usize,
    pub variant: String,
    pub scheme: String,
    pub kappa: Option<usize>,
    pub ssv_length: Option<usize>,
    pub retained_variance: Option<f64>,
    pub invalid_percent: Option<f64>,
    pub valid_count: Option<usize>,
    pub diversity_mean: Option<f64>,
    pub diversity_min: Option<f64>,
    pub diversity_max: Option<f64>,
    pub performance_mean: Option<f64>,
    pub performance_median: Option<f64>,
    pub error: String,
}

impl GridRow {
    fn failed(index: usize, variant: &str, scheme: Scheme, error: String) -> Self {
        GridRow {
            index,
            variant: variant.into(),
            scheme: scheme.to_string(),
            kappa: None,
            ssv_length: None,
            retained_variance: None,
            invalid_percent: None,
            valid_count: None,
            diversity_mean: None,
            diversity_min: None,
            diversity_max: None,
            performance_mean: None,
            performance_median: None,
            error,
        }
    }
}

fn grid_cell(
    index: usize,
    variant: &str,
    scheme: Scheme,
    ds: &FoilDataset,
    cfg: &RunConfig,
    evaluator: Option<&Arc<dyn Evaluator>>,
) -> CliResult<GridRow> {
    let kind = parse_variant(variant)?;
    let (ls, _) = fit_space(ds, &kind, cfg, evaluator)?;
    let report = audit(&ls, cfg, evaluator)?;
    report.write(&cfg.out_dir.join(GRID_DIR).join(format!("cell-{index:02}")))?;
    let mut row = GridRow::failed(index, variant, scheme, report.errors.join("; "));
    row.kappa = Some(ls.kappa());
    row.ssv_length = Some(ls.layout().len());
    row.retained_variance = Some(ls.retained_fraction());
    row.invalid_percent = Some(report.invalid_fraction);
    row.valid_count = Some(report.valid_count);
    if let Some(d) = &report.diversity {
        (row.diversity_mean, row.diversity_min, row.diversity_max) = (Some(d.mean), Some(d.min), Some(d.max));
    }
    if let Some(p) = &report.performance {
        (row.performance_mean, row.performance_median) = (Some(p.mean), Some(p.median));
    }
    Ok(row)
}

fn fmt_opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

pub fn summary_csv(rows: &[GridRow]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Core(Error::Csv(e));
    w.write_record([
        "index",
        "variant",
        "scheme",
        "kappa",
        "ssv_length",
        "retained_variance",
        "invalid_percent",
        "valid_count",
        "diversity_mean",
        "diversity_min",
        "diversity_max",
        "performance_mean",
        "performance_median",
        "error",
    ])
    .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.index.to_string(),
            r.variant.clone(),
            r.scheme.clone(),
            fmt_opt(&r.kappa),
            fmt_opt(&r.ssv_length),
            fmt_opt(&r.retained_variance),
            fmt_opt(&r.invalid_percent),
            fmt_opt(&r.valid_count),
            fmt_opt(&r.diversity_mean),
            fmt_opt(&r.diversity_min),
            fmt_opt(&r.diversity_max),
            fmt_opt(&r.performance_mean),
            fmt_opt(&r.performance_median),
            r.error.clone(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Core(Error::Malformed(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Fits and audits every (variant, scheme) cell. Cells run in parallel up
/// to `max_parallel`; a failing cell becomes a row with an error message.
/// Rows are ordered by cell index, variants outermost.
pub fn cmd_grid(cfg: &RunConfig) -> CliResult<Vec<GridRow>> {
    use rayon::prelude::*;

    let start = SystemTime::now();
    let evaluator = make_evaluator(cfg)?;
    let mut warnings = Vec::new();
    let mut datasets = Vec::with_capacity(cfg.grid_schemes.len());
    for &scheme in &cfg.grid_schemes {
        let (ds, w) = build_dataset(cfg, scheme)?;
        warnings.extend(w.into_iter().map(|w| format!("{scheme}: {w}")));
        datasets.push(ds);
    }
    let cells: Vec<(usize, &String, usize)> = cfg
        .grid_variants
        .iter()
        .flat_map(|v| (0..cfg.grid_schemes.len()).map(move |s| (v, s)))
        .enumerate()
        .map(|(i, (v, s))| (i, v, s))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.max_parallel)
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let rows: Vec<GridRow> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(i, variant, s)| {
                let scheme = cfg.grid_schemes[s];
                grid_cell(i, variant, scheme, &datasets[s], cfg, evaluator.as_ref()).unwrap_or_else(|e| {
                    log::warn!("grid cell {i} ({variant}, {scheme}) failed: {e}");
                    GridRow::failed(i, variant, scheme, e.to_string())
                })
            })
            .collect()
    });
    let path = cfg.out_dir.join(GRID_DIR).join(SUMMARY_FILE);
    write_file(&path, &summary_csv(&rows)?)?;
    for r in &rows {
        println!(
            "{:>2} {:<22} {:<18} invalid {:>8}  diversity {:>12}  performance {:>10}{}",
            r.index,
            r.variant,
            r.scheme,
            fmt_opt(&r.invalid_percent.map(|v| format!("{v:.3}%"))),
            fmt_opt(&r.diversity_mean.map(|v| format!("{v:.4}"))),
            fmt_opt(&r.performance_mean.map(|v| format!("{v:.3}"))),
            if r.error.is_empty() { String::new() } else { format!("  [{}]", r.error) }
        );
    }
    write_manifest(cfg, "grid", vec![format!("{GRID_DIR}/{SUMMARY_FILE}")], warnings, start)?;
    Ok(rows)
}

/// Writes plot-ready CSVs for a saved space under `plot/`: the spectrum,
/// the mean shape, the leading modes at `±α√λ`, and the performance KDE of
/// an audit directory when given.
pub fn cmd_export_plotdata(cfg: &RunConfig, space: &Path, audit_dir: Option<&Path>) -> CliResult<Vec<String>> {
    let start = SystemTime::now();
    let ls = LatentSpace::load(space)?;
    let dir = cfg.out_dir.join(PLOT_DIR);
    let mut outputs = Vec::new();

    let total = ls.total_variance();
    let mut cum = 0.0;
    let mut spectrum = String::from("k,eigenvalue,cumulative_fraction,retained\n");
    for (k, lam) in ls.spectrum().iter().enumerate() {
        cum += lam;
        spectrum.push_str(&format!("{},{lam:e},{:.12},{}\n", k + 1, cum / total, k < ls.kappa()));
    }
    write_file(&dir.join("spectrum.csv"), &spectrum)?;
    outputs.push(format!("{PLOT_DIR}/spectrum.csv"));

    let zero = vec![0.0; ls.kappa()];
    let mean = ls.decode(&zero)?;
    let mut shapes = String::from("shape,point,x,y\n");
    let mut push = |name: &str, geometry: &[f64]| {
        for (i, c) in geometry.chunks(2).enumerate() {
            shapes.push_str(&format!("{name},{i},{:e},{:e}\n", c[0], c[1]));
        }
    };
    push("mean", mean.geometry());
    for k in 0..ls.kappa().min(4) {
        for sign in [1.0, -1.0] {
            let mut u = zero.clone();
            u[k] = sign * cfg.alpha * ls.eigenvalues()[k].sqrt();
            let v = ls.decode(&u)?;
            push(&format!("mode{}{}", k + 1, if sign > 0.0 { "+" } else { "-" }), v.geometry());
        }
    }
    write_file(&dir.join("shapes.csv"), &shapes)?;
    outputs.push(format!("{PLOT_DIR}/shapes.csv"));

    if let Some(a) = audit_dir {
        let src = a.join("kde.csv");
        if src.is_file() {
            let text = fs::read_to_string(&src).map_err(|e| io_err(&src, e))?;
            write_file(&dir.join("kde.csv"), &text)?;
            outputs.push(format!("{PLOT_DIR}/kde.csv"));
        }
    }
    for o in &outputs {
        println!("{o}");
    }
    write_manifest(cfg, "export-plotdata", outputs.clone(), Vec::new(), start)?;
    Ok(outputs)
}
