//! Run configuration: a flat TOML document layered as
//! flags > file > defaults. The XFOIL path may also come from
//! `FOILSPACE_XFOIL`, which sits between the file and the flags.

use std::fs;
use std::path::PathBuf;

use clap::Args;
use foilspace::discretize::Scheme;
use foilspace::perf::{FlowCondition, XFOIL_ENV};
use foilspace::ssv::{standard_variants, AugKind};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvaluatorChoice {
    Surrogate,
    Xfoil,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,

    /// Base design vectors, one per line.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params_file: Option<PathBuf>,
    /// Directory of `.dat` coordinate files.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dat_dir: Option<PathBuf>,
    /// Random base designs drawn when neither source is given.
    pub random_bases: usize,
    pub exclude: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duplicate_tol: Option<f64>,

    pub scheme: Scheme,
    pub n_points: usize,
    pub variant: String,
    /// Fixed augmentation weight; balanced when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
    pub beta: f64,
    pub alpha: f64,

    pub count: usize,
    pub subsets: usize,
    pub evaluator: EvaluatorChoice,
    pub max_parallel: usize,

    pub reynolds: f64,
    pub mach: f64,
    pub alpha_deg: f64,
    pub iter_limit: u32,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub xfoil_exe: Option<PathBuf>,
    pub xfoil_timeout_s: f64,
    pub repanel: bool,

    pub grid_variants: Vec<String>,
    pub grid_schemes: Vec<Scheme>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let fc = FlowCondition::default();
        RunConfig {
            seed: 0,
            out_dir: PathBuf::from("run"),
            params_file: None,
            dat_dir: None,
            random_bases: 200,
            exclude: Vec::new(),
            duplicate_tol: None,
            scheme: Scheme::Cosine,
            n_points: 200,
            variant: "geometry+r4".into(),
            weight: None,
            beta: foilspace::kle::DEFAULT_BETA,
            alpha: foilspace::kle::DEFAULT_ALPHA,
            count: foilspace::quality::DEFAULT_SAMPLE_COUNT,
            subsets: foilspace::quality::DEFAULT_SUBSETS,
            evaluator: EvaluatorChoice::Surrogate,
            max_parallel: 4,
            reynolds: fc.reynolds,
            mach: fc.mach,
            alpha_deg: fc.alpha_deg,
            iter_limit: fc.iter_limit,
            xfoil_exe: None,
            xfoil_timeout_s: 20.0,
            repanel: true,
            grid_variants: standard_variants().iter().map(ToString::to_string).collect(),
            grid_schemes: Scheme::ALL.to_vec(),
        }
    }
}

/// Command-line overrides shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Run directory.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub params_file: Option<PathBuf>,
    #[arg(long, global = true)]
    pub dat_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub random_bases: Option<usize>,
    #[arg(long, global = true)]
    pub scheme: Option<Scheme>,
    #[arg(long, global = true)]
    pub n_points: Option<usize>,
    #[arg(long, global = true)]
    pub variant: Option<String>,
    #[arg(long, global = true)]
    pub weight: Option<f64>,
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true)]
    pub count: Option<usize>,
    #[arg(long, global = true)]
    pub subsets: Option<usize>,
    #[arg(long, global = true, value_parser = parse_evaluator)]
    pub evaluator: Option<EvaluatorChoice>,
    #[arg(long, global = true)]
    pub max_parallel: Option<usize>,
    #[arg(long, global = true)]
    pub xfoil_exe: Option<PathBuf>,
}

fn parse_evaluator(s: &str) -> Result<EvaluatorChoice, String> {
    match s {
        "surrogate" => Ok(EvaluatorChoice::Surrogate),
        "xfoil" => Ok(EvaluatorChoice::Xfoil),
        "none" => Ok(EvaluatorChoice::None),
        _ => Err(format!("unknown evaluator '{s}' (surrogate, xfoil, none)")),
    }
}

fn to_value<T: Serialize>(v: &T) -> CliResult<toml::Value> {
    toml::Value::try_from(v).map_err(|e| CliError::Config(e.to_string()))
}

impl Overrides {
    fn table(&self) -> CliResult<toml::Table> {
        let mut t = toml::Table::new();
        macro_rules! put {
            ($($field:ident),*) => {
                $(if let Some(v) = &self.$field {
                    t.insert(stringify!($field).into(), to_value(v)?);
                })*
            };
        }
        put!(
            seed, out_dir, params_file, dat_dir, random_bases, scheme, n_points, variant, weight, beta, alpha, count,
            subsets, evaluator, max_parallel, xfoil_exe
        );
        Ok(t)
    }
}

impl RunConfig {
    /// Layers defaults, the config file, the environment and `flags`, then
    /// validates the result.
    pub fn resolve(flags: &Overrides) -> CliResult<Self> {
        let mut table = match to_value(&RunConfig::default())? {
            toml::Value::Table(t) => t,
            _ => unreachable!("config serializes to a table"),
        };
        if let Some(path) = &flags.config {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let file: toml::Table =
                toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            table.extend(file);
        }
        if let Some(exe) = std::env::var_os(XFOIL_ENV) {
            table.insert("xfoil_exe".into(), to_value(&PathBuf::from(exe))?);
        }
        table.extend(flags.table()?);
        let cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.params_file.is_some() && self.dat_dir.is_some() {
            return bad("params_file and dat_dir are mutually exclusive".into());
        }
        if let Some(p) = &self.params_file {
            if !p.is_file() {
                return bad(format!("params_file {} does not exist", p.display()));
            }
        }
        if let Some(d) = &self.dat_dir {
            if !d.is_dir() {
                return bad(format!("dat_dir {} is not a directory", d.display()));
            }
        }
        if self.params_file.is_none() && self.dat_dir.is_none() && self.random_bases == 0 {
            return bad("random_bases must be positive when no dataset source is given".into());
        }
        if self.n_points < 4 {
            return bad(format!("n_points {} is below 4", self.n_points));
        }
        self.aug_kind()?;
        for v in &self.grid_variants {
            parse_variant(v)?;
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return bad(format!("beta {} outside (0, 1]", self.beta));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha {} must be positive", self.alpha));
        }
        if let Some(w) = self.weight {
            if !(w > 0.0 && w.is_finite()) {
                return bad(format!("weight {w} must be positive"));
            }
        }
        if self.count == 0 || self.subsets == 0 || self.max_parallel == 0 {
            return bad("count, subsets and max_parallel must be positive".into());
        }
        if !(self.xfoil_timeout_s > 0.0 && self.xfoil_timeout_s.is_finite()) {
            return bad(format!("xfoil_timeout_s {} must be positive", self.xfoil_timeout_s));
        }
        self.flow_condition()?;
        Ok(())
    }

    pub fn aug_kind(&self) -> CliResult<AugKind> {
        parse_variant(&self.variant)
    }

    pub fn flow_condition(&self) -> CliResult<FlowCondition> {
        FlowCondition::new(self.reynolds, self.mach, self.alpha_deg, self.iter_limit)
            .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

pub fn parse_variant(s: &str) -> CliResult<AugKind> {
    let kind: AugKind = s.parse().map_err(|e: foilspace::Error| CliError::Config(e.to_string()))?;
    if !standard_variants().contains(&kind) {
        return Err(CliError::Config(format!("'{s}' is not one of the seven standard variants")));
    }
    Ok(kind)
}
