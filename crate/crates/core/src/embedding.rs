//! Monte-Carlo oracles for the subspace-embedding probability.
//!
//! A sketch `S` is an ε-subspace embedding for `A = U D Vᵀ` exactly when
//! `σ_max(I - UᵀSᵀSU) ≤ ε`, and that distortion equals
//! `max(|1 - λ_min(M)|, |1 - λ_max(M)|)` for `M = (SU)ᵀ(SU)`.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, shape, Error, Result};
use crate::matrix::DenseMatrix;
use crate::rng::{derive_seed, stream_rng};
use crate::sketch::{apply_sketch, build_sketch, SketchKind, SketchOperator, SketchSpec};

/// Relative singular-value floor below which a matrix is treated as rank deficient.
pub const RANK_TOL: f64 = 1e-12;
const ORTHONORMAL_TOL: f64 = 1e-8;

/// An `n × d` matrix with orthonormal columns.
#[derive(Clone, Debug)]
pub struct OrthonormalFactor {
    u: DenseMatrix,
}

impl OrthonormalFactor {
    /// Checks `UᵀU = I` to `1e-8` in max-norm.
    pub fn new(u: DenseMatrix) -> Result<Self> {
        let g = u.gram();
        let d = u.n_cols();
        let mut worst = 0.0_f64;
        for i in 0..d {
            for j in 0..d {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g.get(i, j) - target).abs());
            }
        }
        if worst > ORTHONORMAL_TOL {
            return Err(Error::Contract(format!("columns are not orthonormal (max |UᵀU - I| = {worst:.3e})")));
        }
        Ok(Self { u })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.u
    }

    pub fn n(&self) -> usize {
        self.u.n_rows()
    }

    pub fn d(&self) -> usize {
        self.u.n_cols()
    }
}

/// Singular values of `A`, largest first, via `A = QR` then an SVD of `R`.
pub(crate) fn qr_factor(a: &DenseMatrix) -> Result<(DMatrix<f64>, Vec<f64>, DMatrix<f64>)> {
    let (n, d) = a.shape();
    if n < d {
        return Err(Error::Rank(format!("{n}x{d} matrix cannot have rank {d}")));
    }
    let qr = a.as_nalgebra().clone().qr();
    let q = qr.q();
    let r = qr.r();
    let svd = r.svd(true, false);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    let (smax, smin) = (sv[0], sv[d - 1]);
    if !(smax > 0.0) || smin / smax < RANK_TOL {
        return Err(Error::Rank(format!(
            "σ_min/σ_max = {:.3e} below {RANK_TOL:e}",
            if smax > 0.0 { smin / smax } else { 0.0 }
        )));
    }
    let u_r = svd.u.expect("requested U");
    Ok((q, sv, u_r))
}

/// Left singular vectors of a full-column-rank `A` (thin, `n × d`).
pub fn thin_svd_factor(a: &DenseMatrix) -> Result<OrthonormalFactor> {
    let (q, _, u_r) = qr_factor(a)?;
    let u = DenseMatrix::from_nalgebra_unchecked(q * u_r);
    OrthonormalFactor::new(u)
}

fn extreme_eigenvalues(m: DMatrix<f64>) -> (f64, f64) {
    let ev = m.symmetric_eigenvalues();
    ev.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// `max(|1 - λ_min(M)|, |1 - λ_max(M)|)` for a symmetric `M`.
pub fn distortion_from_gram(m: &DenseMatrix) -> Result<f64> {
    if m.n_rows() != m.n_cols() {
        return Err(shape(format!("gram matrix must be square, got {:?}", m.shape())));
    }
    let (lo, hi) = extreme_eigenvalues(m.as_nalgebra().clone());
    Ok((1.0 - lo).abs().max((1.0 - hi).abs()))
}

fn sketched_extremes(u: &OrthonormalFactor, op: &SketchOperator) -> Result<(f64, f64)> {
    let su = apply_sketch(op, u.matrix())?.into_nalgebra();
    Ok(extreme_eigenvalues(su.tr_mul(&su)))
}

/// Distortion `σ_max(I - UᵀSᵀSU)` of one realized sketch.
pub fn distortion(u: &OrthonormalFactor, op: &SketchOperator) -> Result<f64> {
    let (lo, hi) = sketched_extremes(u, op)?;
    Ok((1.0 - lo).abs().max((1.0 - hi).abs()))
}

/// Where a trial set came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialSource {
    /// Direct `Wishart(k, I_d/k)` draws.
    Wishart,
    /// Realized sketches applied to a fixed orthonormal factor.
    Sketch(SketchKind),
}

impl TrialSource {
    pub fn label(&self) -> &'static str {
        match self {
            TrialSource::Wishart => "wishart",
            TrialSource::Sketch(kind) => kind.as_str(),
        }
    }
}

/// `B` simulated distortions with their provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingTrialSet {
    pub source: TrialSource,
    pub k: usize,
    pub d: usize,
    /// Source rows; `None` for Wishart draws, which do not depend on `n`.
    pub n: Option<usize>,
    pub master_seed: u64,
    pub eps_samples: Vec<f64>,
}

impl EmbeddingTrialSet {
    pub fn len(&self) -> usize {
        self.eps_samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eps_samples.is_empty()
    }

    /// `trial,eps` CSV.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_trials_csv(&self.eps_samples, out)
    }
}

pub fn write_trials_csv<W: Write>(eps: &[f64], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["trial", "eps"])?;
    for (i, e) in eps.iter().enumerate() {
        w.write_record([i.to_string(), e.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a `trial,eps` CSV back into a sample vector.
pub fn read_trials_csv<R: Read>(input: R) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["trial", "eps"] {
        return Err(Error::Data(format!("expected header trial,eps, got {headers:?}")));
    }
    let mut out = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let eps = rec.get(1).unwrap_or("");
        out.push(eps.trim().parse::<f64>().map_err(|e| Error::Parse {
            row: row + 2,
            col: 2,
            msg: format!("'{eps}': {e}"),
        })?);
    }
    Ok(out)
}

fn check_trial_dims(k: usize, d: usize, b: usize) -> Result<()> {
    if d == 0 || k < d {
        return Err(domain(format!("Wishart trials need k ≥ d ≥ 1 (k={k}, d={d})")));
    }
    if b == 0 {
        return Err(domain("need at least one trial"));
    }
    Ok(())
}

/// `(λ_min, λ_max)` of `B` independent `Wishart(k, I_d/k)` matrices `GᵀG/k`.
pub fn simulate_wishart_extremes(k: usize, d: usize, b: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
    check_trial_dims(k, d, b)?;
    let inv_k = 1.0 / k as f64;
    Ok((0..b)
        .into_par_iter()
        .map(|trial| {
            let mut rng = stream_rng(derive_seed(seed, trial as u64), 0);
            let g = DMatrix::<f64>::from_fn(k, d, |_, _| rng.sample(StandardNormal));
            extreme_eigenvalues(g.tr_mul(&g) * inv_k)
        })
        .collect())
}

/// Distortions `σ_max(I - W)` for `B` Wishart draws.
pub fn simulate_wishart_trials(k: usize, d: usize, b: usize, seed: u64) -> Result<EmbeddingTrialSet> {
    let eps_samples = simulate_wishart_extremes(k, d, b, seed)?
        .into_iter()
        .map(|(lo, hi)| (1.0 - lo).abs().max((1.0 - hi).abs()))
        .collect();
    Ok(EmbeddingTrialSet { source: TrialSource::Wishart, k, d, n: None, master_seed: seed, eps_samples })
}

/// `(λ_min, λ_max)` of `(SU)ᵀ(SU)` for `B` realized sketches.
pub fn sketch_embedding_extremes(
    u: &OrthonormalFactor,
    kind: SketchKind,
    k: usize,
    b: usize,
    master_seed: u64,
) -> Result<Vec<(f64, f64)>> {
    if b == 0 {
        return Err(domain("need at least one trial"));
    }
    let template = SketchSpec::new(kind, k, master_seed)?;
    (0..b)
        .into_par_iter()
        .map(|trial| {
            let spec = template.with_seed(derive_seed(master_seed, trial as u64));
            let op = build_sketch(spec, u.n())?;
            sketched_extremes(u, &op)
        })
        .collect()
}

/// Oracle distribution of the distortion for one sketch family on a fixed `U`.
pub fn sketch_embedding_trials(
    u: &OrthonormalFactor,
    kind: SketchKind,
    k: usize,
    b: usize,
    master_seed: u64,
) -> Result<EmbeddingTrialSet> {
    let eps_samples = sketch_embedding_extremes(u, kind, k, b, master_seed)?
        .into_iter()
        .map(|(lo, hi)| (1.0 - lo).abs().max((1.0 - hi).abs()))
        .collect();
    Ok(EmbeddingTrialSet {
        source: TrialSource::Sketch(kind),
        k,
        d: u.d(),
        n: Some(u.n()),
        master_seed,
        eps_samples,
    })
}

/// `(1/B) #{b : ε_b ≤ ε}` at each grid point.
pub fn empirical_embedding_cdf(trials: &EmbeddingTrialSet, eps_grid: &[f64]) -> Result<Vec<f64>> {
    if trials.is_empty() || eps_grid.is_empty() {
        return Err(domain("empirical CDF needs non-empty trials and grid"));
    }
    if eps_grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(domain("eps grid must be ascending"));
    }
    let mut sorted = trials.eps_samples.clone();
    sorted.sort_by(f64::total_cmp);
    let b = sorted.len() as f64;
    Ok(eps_grid.iter().map(|&e| sorted.partition_point(|&x| x <= e) as f64 / b).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Distribution of the row leverage scores `‖u_i‖²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeverageSummary {
    pub n: usize,
    pub d: usize,
    pub max_leverage: f64,
    pub mean_leverage: f64,
    /// Ten equal-width bins over `[0, max_leverage]`.
    pub histogram: Vec<HistogramBin>,
}

const LEVERAGE_BINS: usize = 10;

pub fn leverage_scores(u: &OrthonormalFactor) -> Vec<f64> {
    let m = u.matrix();
    let mut lev = vec![0.0; m.n_rows()];
    for j in 0..m.n_cols() {
        for (l, x) in lev.iter_mut().zip(m.column(j)) {
            *l += x * x;
        }
    }
    lev
}

pub fn leverage_summary(u: &OrthonormalFactor) -> LeverageSummary {
    let lev = leverage_scores(u);
    let max = lev.iter().copied().fold(0.0_f64, f64::max);
    let mean = lev.iter().sum::<f64>() / lev.len() as f64;
    let width = max / LEVERAGE_BINS as f64;
    let mut histogram: Vec<HistogramBin> = (0..LEVERAGE_BINS)
        .map(|i| HistogramBin { lo: i as f64 * width, hi: (i + 1) as f64 * width, count: 0 })
        .collect();
    for &l in &lev {
        let i = if width > 0.0 { ((l / width) as usize).min(LEVERAGE_BINS - 1) } else { 0 };
        histogram[i].count += 1;
    }
    LeverageSummary { n: u.n(), d: u.d(), max_leverage: max, mean_leverage: mean, histogram }
}

/// Resamples `factor · n` rows of `A` with replacement.
pub fn bootstrap_rows(a: &DenseMatrix, factor: usize, seed: u64) -> Result<DenseMatrix> {
    if factor == 0 {
        return Err(domain("bootstrap factor must be at least 1"));
    }
    let n = a.n_rows();
    let mut rng = stream_rng(seed, 0);
    let idx: Vec<usize> = (0..factor * n).map(|_| rng.random_range(0..n)).collect();
    a.select_rows(&idx)
}
