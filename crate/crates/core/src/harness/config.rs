//! Experiment configuration.
//!
//! Config files are flat `key = value` text:
//!
//! ```text
//! # embedding probabilities for d = 20
//! experiment = embed
//! source = wishart
//! d = 20
//! k = 400, 800
//! b = 10000
//! seed = 7
//! ```
//!
//! One pair per line; blank lines and lines starting with `#` are skipped;
//! keys are case-insensitive and `-` is read as `_`; lists are
//! comma-separated. A key may appear once per file. Settings are layered
//! defaults < file < command line with [`merge`].

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::data::{ColumnRef, Generator};
use crate::error::{Error, Result};
use crate::sketch::SketchKind;
use crate::solver::{DEFAULT_GRAD_TOL, DEFAULT_MAX_STEPS};

pub type ConfigMap = BTreeMap<String, String>;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "SKETCHTW_OUTPUT_DIR";

pub const KEYS: &[&str] = &[
    "experiment", "source", "d", "n", "generator", "data", "response", "header", "intercept", "kinds", "k",
    "k_ratio", "b", "seed", "output", "eps_grid", "eps_points", "max_steps", "grad_tol", "z_min", "z_max",
];

fn normalize_key(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

/// Parses config-file text into a key map.
pub fn parse_config_text(text: &str) -> Result<ConfigMap> {
    let mut map = ConfigMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value, got '{line}'", i + 1)))?;
        let key = normalize_key(key);
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::Config(format!("line {}: unknown key '{key}'", i + 1)));
        }
        let value = value.trim();
        if value.is_empty() {
            return Err(Error::Config(format!("line {}: empty value for '{key}'", i + 1)));
        }
        if map.insert(key.clone(), value.to_string()).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key '{key}'", i + 1)));
        }
    }
    Ok(map)
}

/// Later maps win.
pub fn merge(layers: &[&ConfigMap]) -> ConfigMap {
    let mut out = ConfigMap::new();
    for layer in layers {
        for (k, v) in layer.iter() {
            out.insert(normalize_key(k), v.clone());
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Empirical vs approximate embedding probability.
    Embed,
    /// Preconditioned-solver convergence rates.
    Conv,
    /// Wall-clock sketching time.
    Timing,
    /// Dump of the F1 table.
    TwTable,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Embed => "embed",
            ExperimentKind::Conv => "conv",
            ExperimentKind::Timing => "timing",
            ExperimentKind::TwTable => "tw-table",
        }
    }

    fn default_b(self) -> usize {
        match self {
            ExperimentKind::Embed => 10_000,
            ExperimentKind::Conv => 100,
            ExperimentKind::Timing => 10,
            ExperimentKind::TwTable => 1,
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "embed" => Ok(ExperimentKind::Embed),
            "conv" => Ok(ExperimentKind::Conv),
            "timing" => Ok(ExperimentKind::Timing),
            "tw-table" | "tw_table" => Ok(ExperimentKind::TwTable),
            other => Err(Error::Config(format!("unknown experiment '{other}'"))),
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where the data comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum DatasetSource {
    /// No data: trials are direct Wishart draws of dimension `d`.
    Wishart { d: usize },
    Synthetic { generator: Generator, n: usize, d: usize },
    File { path: PathBuf, response: Option<ColumnRef>, has_header: bool, intercept: bool },
}

/// Sketch sizes, either absolute or as multiples of `d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KChoice {
    Values(Vec<usize>),
    Ratios(Vec<f64>),
}

impl KChoice {
    /// Absolute sizes for a `d`-column problem; ratios round to the nearest integer.
    pub fn resolve(&self, d: usize) -> Result<Vec<usize>> {
        let ks: Vec<usize> = match self {
            KChoice::Values(v) => v.clone(),
            KChoice::Ratios(r) => r.iter().map(|&x| (x * d as f64).round() as usize).collect(),
        };
        if ks.is_empty() {
            return Err(Error::Config("no sketch sizes given".into()));
        }
        if let Some(&k) = ks.iter().find(|&&k| k < d.max(1)) {
            return Err(Error::Config(format!("sketch size k={k} is below d={d}")));
        }
        Ok(ks)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// `None` only for `tw-table`.
    pub dataset: Option<DatasetSource>,
    pub kinds: Vec<SketchKind>,
    pub k: KChoice,
    /// Trials (embed), runs per condition (conv) or repetitions (timing).
    pub b: usize,
    pub seed: u64,
    pub output: PathBuf,
    /// Explicit ε grid for embedding CDFs; otherwise `eps_points` spanning the samples.
    pub eps_grid: Option<Vec<f64>>,
    pub eps_points: usize,
    pub max_steps: usize,
    pub grad_tol: f64,
    /// Range of the `tw-table` dump.
    pub z_range: (f64, f64),
}

fn parse_num<T: FromStr>(key: &str, s: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    s.trim().parse::<T>().map_err(|e| Error::Config(format!("{key} = '{s}': {e}")))
}

fn parse_list<T: FromStr>(key: &str, s: &str) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    s.split(',').filter(|p| !p.trim().is_empty()).map(|p| parse_num(key, p)).collect()
}

fn parse_bool(key: &str, s: &str) -> Result<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        other => Err(Error::Config(format!("{key} = '{other}' is not a boolean"))),
    }
}

/// Output directory used when none is configured.
pub fn default_output_dir() -> PathBuf {
    std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("sketchtw-out"))
}

impl ExperimentConfig {
    /// Builds and validates a config; missing keys take their defaults.
    pub fn from_map(map: &ConfigMap) -> Result<Self> {
        if let Some(bad) = map.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(Error::Config(format!("unknown key '{bad}'")));
        }
        let get = |k: &str| map.get(k).map(String::as_str);
        let experiment: ExperimentKind = get("experiment")
            .ok_or_else(|| Error::Config("missing 'experiment'".into()))?
            .parse()?;
        let need = |k: &str| get(k).ok_or_else(|| Error::Config(format!("missing '{k}'")));

        let dataset = if experiment == ExperimentKind::TwTable {
            None
        } else {
            let default_source = if get("data").is_some() {
                "file"
            } else if experiment == ExperimentKind::Embed && get("n").is_none() {
                "wishart"
            } else {
                "synthetic"
            };
            Some(match get("source").unwrap_or(default_source).trim() {
                "wishart" => {
                    if experiment != ExperimentKind::Embed {
                        return Err(Error::Config(format!("{experiment} experiments need a dataset")));
                    }
                    DatasetSource::Wishart { d: parse_num("d", need("d")?)? }
                }
                "synthetic" => DatasetSource::Synthetic {
                    generator: get("generator").unwrap_or("gaussian").parse()?,
                    n: parse_num("n", need("n")?)?,
                    d: parse_num("d", need("d")?)?,
                },
                "file" => DatasetSource::File {
                    path: PathBuf::from(need("data")?),
                    response: get("response").map(str::parse).transpose()?,
                    has_header: get("header").map(|v| parse_bool("header", v)).transpose()?.unwrap_or(true),
                    intercept: get("intercept").map(|v| parse_bool("intercept", v)).transpose()?.unwrap_or(false),
                },
                other => return Err(Error::Config(format!("unknown source '{other}'"))),
            })
        };

        let kinds = match get("kinds") {
            Some(list) => list.split(',').filter(|s| !s.trim().is_empty()).map(|s| s.trim().parse()).collect::<Result<_>>()?,
            None if matches!(dataset, Some(DatasetSource::Wishart { .. })) => Vec::new(),
            None if experiment == ExperimentKind::Conv => {
                vec![SketchKind::Gaussian, SketchKind::Hadamard, SketchKind::ClarksonWoodruff, SketchKind::Uniform]
            }
            None => SketchKind::ALL.to_vec(),
        };
        let k = match (get("k"), get("k_ratio")) {
            (Some(_), Some(_)) => return Err(Error::Config("give either k or k_ratio, not both".into())),
            (Some(v), None) => KChoice::Values(parse_list("k", v)?),
            (None, Some(r)) => KChoice::Ratios(parse_list("k_ratio", r)?),
            (None, None) if experiment == ExperimentKind::Conv => {
                KChoice::Ratios((1..=10).map(|i| 2.0 * i as f64).collect())
            }
            (None, None) => KChoice::Ratios(vec![20.0]),
        };
        let cfg = ExperimentConfig {
            experiment,
            dataset,
            kinds,
            k,
            b: get("b").map(|v| parse_num("b", v)).transpose()?.unwrap_or(experiment.default_b()),
            seed: get("seed").map(|v| parse_num("seed", v)).transpose()?.unwrap_or(0),
            output: get("output").map(PathBuf::from).unwrap_or_else(default_output_dir),
            eps_grid: get("eps_grid").map(|v| parse_list("eps_grid", v)).transpose()?,
            eps_points: get("eps_points").map(|v| parse_num("eps_points", v)).transpose()?.unwrap_or(401),
            max_steps: get("max_steps").map(|v| parse_num("max_steps", v)).transpose()?.unwrap_or(DEFAULT_MAX_STEPS),
            grad_tol: get("grad_tol").map(|v| parse_num("grad_tol", v)).transpose()?.unwrap_or(DEFAULT_GRAD_TOL),
            z_range: (
                get("z_min").map(|v| parse_num("z_min", v)).transpose()?.unwrap_or(-10.0),
                get("z_max").map(|v| parse_num("z_max", v)).transpose()?.unwrap_or(6.0),
            ),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks everything that can be checked before data is loaded.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.b == 0 {
            return bad("b must be at least 1".into());
        }
        if self.eps_points < 2 {
            return bad("eps_points must be at least 2".into());
        }
        if let Some(grid) = &self.eps_grid {
            if grid.is_empty() || grid.windows(2).any(|w| !(w[0] < w[1])) || grid.iter().any(|e| !(*e > 0.0)) {
                return bad("eps_grid must be positive and strictly ascending".into());
            }
        }
        if self.max_steps == 0 || !(self.grad_tol > 0.0) {
            return bad("need max_steps ≥ 1 and grad_tol > 0".into());
        }
        if !(self.z_range.0 < self.z_range.1) {
            return bad("z_min must be below z_max".into());
        }
        let uses_kinds = !matches!(self.dataset, None | Some(DatasetSource::Wishart { .. }));
        if uses_kinds && self.kinds.is_empty() {
            return bad("no sketch kinds given".into());
        }
        match &self.dataset {
            Some(DatasetSource::Wishart { d }) | Some(DatasetSource::Synthetic { d, .. }) if *d == 0 => {
                bad("d must be at least 1".into())
            }
            Some(DatasetSource::Synthetic { n, d, .. }) if n <= d => bad(format!("need n > d, got n={n}, d={d}")),
            Some(DatasetSource::File { response: None, .. }) if self.experiment == ExperimentKind::Conv => {
                bad("conv experiments on a file need a response column".into())
            }
            Some(DatasetSource::File { response: Some(ColumnRef::Name(_)), has_header: false, .. }) => {
                bad("a named response column needs header = true".into())
            }
            _ => Ok(()),
        }
    }
}
