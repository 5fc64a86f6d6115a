//! Reproducible experiment driver.
//!
//! [`run_experiment`] executes one [`ExperimentConfig`] and writes
//! `result.json` (config echo, outputs, version, timestamp) plus CSV
//! sidecars into the configured output directory. A failing run writes
//! `error.json` next to whatever partial outputs exist. Every random draw is
//! derived from the config seed, so [`replay`] reproduces trial samples and
//! rates bit for bit.

mod config;
mod data;

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use config::{
    default_output_dir, merge, parse_config_text, ConfigMap, DatasetSource, ExperimentConfig, ExperimentKind,
    KChoice, KEYS, OUTPUT_DIR_ENV,
};
pub use data::{load_dataset, synth_dataset, synth_problem, ColumnRef, Dataset, Generator, SPIKED_ROWS};

use crate::embedding::{empirical_embedding_cdf, simulate_wishart_trials, sketch_embedding_trials, thin_svd_factor};
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::rmt::embedding_prob_approx;
use crate::rng::derive_seed_path;
use crate::sketch::{apply_sketch, build_sketch, SketchKind, SketchSpec};
use crate::solver::{convergence_experiment, write_rates_csv, GradientEvaluation, RateRow, SolveOptions};
use crate::stats::{mean, median};
use crate::tracy_widom::table;
use crate::VERSION;

pub const RESULT_FILE: &str = "result.json";
pub const ERROR_FILE: &str = "error.json";

// Seed-path tags keeping the data, Wishart and timing streams apart from
// the per-kind streams (which use the kind ordinal, 0..4).
const TAG_DATA: u64 = 100;
const TAG_WISHART: u64 = 101;
const TAG_TIMING: u64 = 102;

/// One point of an embedding CDF comparison.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CdfPoint {
    pub eps: f64,
    pub empirical: f64,
    pub psi_hat: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbedCondition {
    /// `wishart` or a sketch kind.
    pub source: String,
    pub k: usize,
    pub d: usize,
    pub n: Option<usize>,
    pub master_seed: u64,
    pub trials: usize,
    pub trials_csv: String,
    pub cdf_csv: String,
    /// `max |empirical - ψ̂|` over the grid.
    pub sup_gap: f64,
    pub cdf: Vec<CdfPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub kind: SketchKind,
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub mean_seconds: f64,
    pub median_seconds: f64,
    pub reps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum Outputs {
    Embed { conditions: Vec<EmbedCondition> },
    Conv { n: usize, d: usize, rates: Vec<RateRow>, rates_csv: String },
    Timing { rows: Vec<TimingRow>, timing_csv: String },
    TwTable { points: usize, tw_csv: String },
}

/// Self-describing record of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub config: ExperimentConfig,
    pub version: String,
    pub timestamp: String,
    pub elapsed_seconds: f64,
    pub outputs: Outputs,
}

impl ResultRecord {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ErrorRecord {
    /// `config` or `data`.
    pub category: String,
    pub error: String,
    pub config: ExperimentConfig,
    pub version: String,
    pub timestamp: String,
}

fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

fn create_file(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Runs one experiment and persists its record.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ResultRecord> {
    config.validate()?;
    std::fs::create_dir_all(&config.output).map_err(|e| {
        Error::Config(format!("output directory {} is not writable: {e}", config.output.display()))
    })?;
    let started = Instant::now();
    match execute(config) {
        Ok(outputs) => {
            let record = ResultRecord {
                config: config.clone(),
                version: VERSION.to_string(),
                timestamp: timestamp(),
                elapsed_seconds: started.elapsed().as_secs_f64(),
                outputs,
            };
            write_json(&config.output.join(RESULT_FILE), &record)?;
            Ok(record)
        }
        Err(e) => {
            let record = ErrorRecord {
                category: if e.is_config() { "config" } else { "data" }.to_string(),
                error: e.to_string(),
                config: config.clone(),
                version: VERSION.to_string(),
                timestamp: timestamp(),
            };
            // The original error matters more than a failure to record it.
            let _ = write_json(&config.output.join(ERROR_FILE), &record);
            Err(e)
        }
    }
}

/// Re-runs the config embedded in a result file, optionally into another directory.
pub fn replay(record_path: impl AsRef<Path>, output: Option<PathBuf>) -> Result<ResultRecord> {
    let mut config = ResultRecord::read(record_path)?.config;
    if let Some(out) = output {
        config.output = out;
    }
    run_experiment(&config)
}

fn execute(config: &ExperimentConfig) -> Result<Outputs> {
    match config.experiment {
        ExperimentKind::Embed => run_embed(config),
        ExperimentKind::Conv => run_conv(config),
        ExperimentKind::Timing => run_timing(config),
        ExperimentKind::TwTable => run_tw_table(config),
    }
}

fn data_seed(config: &ExperimentConfig) -> u64 {
    derive_seed_path(config.seed, &[TAG_DATA])
}

fn dataset_source(config: &ExperimentConfig) -> Result<&DatasetSource> {
    config.dataset.as_ref().ok_or_else(|| Error::Config(format!("{} needs a dataset", config.experiment)))
}

/// Design matrix, dropping the response column when one is configured.
fn load_design(config: &ExperimentConfig) -> Result<DenseMatrix> {
    match dataset_source(config)? {
        DatasetSource::Synthetic { generator, n, d } => synth_dataset(*generator, *n, *d, data_seed(config)),
        DatasetSource::File { path, response, has_header, intercept } => {
            Ok(load_dataset(path, response.as_ref(), *has_header, *intercept)?.x)
        }
        DatasetSource::Wishart { .. } => Err(Error::Config("Wishart mode has no design matrix".into())),
    }
}

fn eps_grid(config: &ExperimentConfig, samples: &[f64]) -> Vec<f64> {
    if let Some(grid) = &config.eps_grid {
        return grid.clone();
    }
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min).max(1e-12);
    let hi = samples.iter().copied().fold(0.0, f64::max).max(lo * (1.0 + 1e-9));
    let m = config.eps_points - 1;
    (0..=m).map(|i| lo + (hi - lo) * i as f64 / m as f64).collect()
}

fn run_embed(config: &ExperimentConfig) -> Result<Outputs> {
    let mut conditions = Vec::new();
    let dir = &config.output;
    match dataset_source(config)? {
        DatasetSource::Wishart { d } => {
            for k in config.k.resolve(*d)? {
                let seed = derive_seed_path(config.seed, &[TAG_WISHART, k as u64]);
                let trials = simulate_wishart_trials(k, *d, config.b, seed)?;
                conditions.push(embed_condition(config, dir, &trials)?);
            }
        }
        _ => {
            let u = thin_svd_factor(&load_design(config)?)?;
            for &kind in &config.kinds {
                for k in config.k.resolve(u.d())? {
                    let seed = derive_seed_path(config.seed, &[kind.ordinal(), k as u64]);
                    let trials = sketch_embedding_trials(&u, kind, k, config.b, seed)?;
                    conditions.push(embed_condition(config, dir, &trials)?);
                }
            }
        }
    }
    Ok(Outputs::Embed { conditions })
}

fn embed_condition(
    config: &ExperimentConfig,
    dir: &Path,
    trials: &crate::embedding::EmbeddingTrialSet,
) -> Result<EmbedCondition> {
    let label = trials.source.label();
    let grid = eps_grid(config, &trials.eps_samples);
    let empirical = empirical_embedding_cdf(trials, &grid)?;
    let cdf: Vec<CdfPoint> = grid
        .iter()
        .zip(&empirical)
        .map(|(&eps, &emp)| Ok(CdfPoint { eps, empirical: emp, psi_hat: embedding_prob_approx(trials.k, trials.d, eps)? }))
        .collect::<Result<_>>()?;
    let sup_gap = cdf.iter().map(|p| (p.empirical - p.psi_hat).abs()).fold(0.0, f64::max);

    let trials_csv = format!("trials_{label}_k{}.csv", trials.k);
    let cdf_csv = format!("cdf_{label}_k{}.csv", trials.k);
    let mut w = create_file(dir, &trials_csv)?;
    trials.write_csv(&mut w)?;
    w.flush()?;
    let mut w = create_file(dir, &cdf_csv)?;
    write_cdf_csv(&cdf, &mut w)?;
    w.flush()?;
    Ok(EmbedCondition {
        source: label.to_string(),
        k: trials.k,
        d: trials.d,
        n: trials.n,
        master_seed: trials.master_seed,
        trials: trials.len(),
        trials_csv,
        cdf_csv,
        sup_gap,
        cdf,
    })
}

fn run_conv(config: &ExperimentConfig) -> Result<Outputs> {
    let problem = match dataset_source(config)? {
        DatasetSource::Synthetic { generator, n, d } => synth_problem(*generator, *n, *d, data_seed(config))?,
        DatasetSource::File { path, response, has_header, intercept } => {
            load_dataset(path, response.as_ref(), *has_header, *intercept)?.into_problem()?
        }
        DatasetSource::Wishart { .. } => return Err(Error::Config("conv experiments need a dataset".into())),
    };
    let ks = config.k.resolve(problem.d())?;
    let opts = SolveOptions {
        max_steps: config.max_steps,
        grad_tol: config.grad_tol,
        gradient: GradientEvaluation::Gram,
        ..SolveOptions::default()
    };
    let rates = convergence_experiment(&problem, &config.kinds, &ks, config.b, config.seed, &opts)?;
    let rates_csv = "rates.csv".to_string();
    let mut w = create_file(&config.output, &rates_csv)?;
    write_rates_csv(&rates, &mut w)?;
    w.flush()?;
    Ok(Outputs::Conv { n: problem.n(), d: problem.d(), rates, rates_csv })
}

/// Median and mean wall-clock seconds of `reps` sketch-and-apply runs.
pub fn time_sketch(a: &DenseMatrix, kind: SketchKind, k: usize, reps: usize, seed: u64) -> Result<TimingRow> {
    if reps == 0 {
        return Err(Error::Config("timing needs at least one repetition".into()));
    }
    let mut secs = Vec::with_capacity(reps);
    for rep in 0..reps {
        let spec = SketchSpec::new(kind, k, derive_seed_path(seed, &[TAG_TIMING, kind.ordinal(), k as u64, rep as u64]))?;
        let start = Instant::now();
        let op = build_sketch(spec, a.n_rows())?;
        let out = apply_sketch(&op, a)?;
        secs.push(start.elapsed().as_secs_f64());
        std::hint::black_box(out);
    }
    Ok(TimingRow {
        kind,
        n: a.n_rows(),
        d: a.n_cols(),
        k,
        mean_seconds: mean(&secs),
        median_seconds: median(&secs),
        reps,
    })
}

fn run_timing(config: &ExperimentConfig) -> Result<Outputs> {
    let a = load_design(config)?;
    let mut rows = Vec::new();
    for &kind in &config.kinds {
        for k in config.k.resolve(a.n_cols())? {
            rows.push(time_sketch(&a, kind, k, config.b, config.seed)?);
        }
    }
    let timing_csv = "timing.csv".to_string();
    let mut w = create_file(&config.output, &timing_csv)?;
    write_timing_csv(&rows, &mut w)?;
    w.flush()?;
    Ok(Outputs::Timing { rows, timing_csv })
}

fn run_tw_table(config: &ExperimentConfig) -> Result<Outputs> {
    let t = table();
    let (lo, hi) = config.z_range;
    let points: Vec<(f64, f64)> = t
        .grid()
        .iter()
        .zip(t.values())
        .filter(|(z, _)| **z >= lo - 1e-12 && **z <= hi + 1e-12)
        .map(|(&z, &f)| (z, f))
        .collect();
    if points.is_empty() {
        return Err(Error::Config(format!("z range [{lo}, {hi}] misses the table [{}, {}]", t.z_min(), t.z_max())));
    }
    let tw_csv = "tw_table.csv".to_string();
    let mut w = create_file(&config.output, &tw_csv)?;
    write_tw_csv(&points, &mut w)?;
    w.flush()?;
    Ok(Outputs::TwTable { points: points.len(), tw_csv })
}

fn check_header(r: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<()> {
    let h = r.headers()?;
    if h.iter().ne(expected.iter().copied()) {
        return Err(Error::Data(format!("expected header {}, got {}", expected.join(","), h.iter().collect::<Vec<_>>().join(","))));
    }
    Ok(())
}

fn field<'a>(rec: &'a csv::StringRecord, row: usize, col: usize) -> Result<&'a str> {
    rec.get(col).ok_or_else(|| Error::Parse { row, col: col + 1, msg: "missing field".into() })
}

fn number<T: std::str::FromStr>(rec: &csv::StringRecord, row: usize, col: usize) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let s = field(rec, row, col)?;
    s.parse().map_err(|e| Error::Parse { row, col: col + 1, msg: format!("'{s}': {e}") })
}

/// Reads a numeric CSV with a known header into rows.
fn read_numeric<R: Read>(input: R, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::Reader::from_reader(input);
    check_header(&mut r, header)?;
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        rows.push((0..header.len()).map(|c| number(&rec, i + 2, c)).collect::<Result<Vec<f64>>>()?);
    }
    Ok(rows)
}

/// `eps,empirical,psi_hat` CSV.
pub fn write_cdf_csv<W: Write>(points: &[CdfPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["eps", "empirical", "psi_hat"])?;
    for p in points {
        w.write_record([p.eps.to_string(), p.empirical.to_string(), p.psi_hat.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_cdf_csv<R: Read>(input: R) -> Result<Vec<CdfPoint>> {
    Ok(read_numeric(input, &["eps", "empirical", "psi_hat"])?
        .into_iter()
        .map(|r| CdfPoint { eps: r[0], empirical: r[1], psi_hat: r[2] })
        .collect())
}

/// `z,cdf` CSV.
pub fn write_tw_csv<W: Write>(points: &[(f64, f64)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["z", "cdf"])?;
    for (z, f) in points {
        w.write_record([z.to_string(), f.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_tw_csv<R: Read>(input: R) -> Result<Vec<(f64, f64)>> {
    Ok(read_numeric(input, &["z", "cdf"])?.into_iter().map(|r| (r[0], r[1])).collect())
}

const TIMING_HEADER: [&str; 7] = ["kind", "n", "d", "k", "mean_seconds", "median_seconds", "reps"];

/// `kind,n,d,k,mean_seconds,median_seconds,reps` CSV.
pub fn write_timing_csv<W: Write>(rows: &[TimingRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TIMING_HEADER)?;
    for r in rows {
        w.write_record([
            r.kind.as_str().to_string(),
            r.n.to_string(),
            r.d.to_string(),
            r.k.to_string(),
            r.mean_seconds.to_string(),
            r.median_seconds.to_string(),
            r.reps.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_timing_csv<R: Read>(input: R) -> Result<Vec<TimingRow>> {
    let mut r = csv::Reader::from_reader(input);
    check_header(&mut r, &TIMING_HEADER)?;
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        rows.push(TimingRow {
            kind: field(&rec, row, 0)?.parse()?,
            n: number(&rec, row, 1)?,
            d: number(&rec, row, 2)?,
            k: number(&rec, row, 3)?,
            mean_seconds: number(&rec, row, 4)?,
            median_seconds: number(&rec, row, 5)?,
            reps: number(&rec, row, 6)?,
        });
    }
    Ok(rows)
}
