//! Run configuration: one TOML or JSON document, paths relative to the file.

use std::path::{Path, PathBuf};

use gridflex::expansion::ExpansionOptions;
use gridflex::flexload::ProfileShape;
use gridflex::harness::{FlexGrid, Knob, Point, Variant};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub case: Option<PathBuf>,
    pub profiles: Option<PathBuf>,
    pub flex: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    /// Seed for synthetic profiles.
    pub seed: Option<u64>,
    #[serde(default)]
    pub expansion: ExpansionOptions,
    pub solve: Option<PointConfig>,
    pub sweep: Option<SweepConfig>,
    pub search: Option<SearchConfig>,
    pub gen_profiles: Option<GenProfilesConfig>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointConfig {
    #[serde(default)]
    pub firm: bool,
    pub growth_ratio: Option<f64>,
    pub line_factor: Option<f64>,
    pub window_h: Option<usize>,
    pub geo_portion: Option<f64>,
    pub budget_scale: Option<f64>,
}

impl PointConfig {
    pub fn point(&self) -> Point {
        Point {
            variant: if self.firm { Variant::Firm } else { Variant::Flex },
            growth_ratio: self.growth_ratio,
            line_factor: self.line_factor,
            window_h: self.window_h,
            geo_portion: self.geo_portion,
            budget_scale: self.budget_scale,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Flexibility,
    Penetration,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub kind: SweepKind,
    #[serde(default)]
    pub windows: Vec<usize>,
    #[serde(default)]
    pub geo_portions: Vec<f64>,
    #[serde(default)]
    pub line_factors: Vec<f64>,
    #[serde(default)]
    pub budget_scales: Vec<f64>,
    #[serde(default)]
    pub growth_ratios: Vec<f64>,
}

impl SweepConfig {
    pub fn grid(&self) -> FlexGrid {
        FlexGrid {
            windows: self.windows.clone(),
            geo_portions: self.geo_portions.clone(),
            line_factors: self.line_factors.clone(),
            budget_scales: self.budget_scales.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub knob: Knob,
    /// Cap on investment cost, $.
    pub investment_cap: Option<f64>,
    /// Cap on added capacity, MW.
    pub capacity_cap: Option<f64>,
    #[serde(default = "default_search_tol")]
    pub tol: f64,
    pub max_window: Option<usize>,
}

fn default_search_tol() -> f64 {
    0.01
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenProfilesConfig {
    pub horizon: usize,
    pub shape: ProfileShape,
    #[serde(default = "default_peak_hour")]
    pub peak_hour: usize,
    #[serde(default = "default_trough")]
    pub trough_ratio: f64,
    #[serde(default)]
    pub noise: f64,
    pub peaks: Vec<PeakEntry>,
    /// Output file; `--out DIR` writes `DIR/profiles.csv` instead.
    pub output: Option<PathBuf>,
}

fn default_peak_hour() -> usize {
    18
}

fn default_trough() -> f64 {
    0.6
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeakEntry {
    pub bus: String,
    pub mw: f64,
}

/// A parsed config plus the directory its relative paths are based on.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: RunConfig,
    pub base_dir: PathBuf,
    pub bytes: Vec<u8>,
}

impl Loaded {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Resolves an optional path field, checking that it exists.
    pub fn existing(&self, field: &str, p: &Option<PathBuf>) -> Result<Option<PathBuf>, CliError> {
        match p {
            None => Ok(None),
            Some(p) => {
                let full = self.resolve(p);
                if full.exists() {
                    Ok(Some(full))
                } else {
                    Err(CliError::MissingFile { field: field.to_string(), path: full })
                }
            }
        }
    }

    pub fn required(&self, field: &str, p: &Option<PathBuf>) -> Result<PathBuf, CliError> {
        self.existing(field, p)?.ok_or_else(|| CliError::Config(format!("config has no `{field}` entry")))
    }
}

pub fn load(path: &Path) -> Result<Loaded, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| CliError::Config(format!("{} is not valid UTF-8", path.display())))?;
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    let config: RunConfig = match ext.as_str() {
        "toml" => toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?,
        "json" => serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?,
        _ => return Err(CliError::Config(format!("{}: config must have a .toml or .json extension", path.display()))),
    };
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Loaded { config, base_dir, bytes })
}
