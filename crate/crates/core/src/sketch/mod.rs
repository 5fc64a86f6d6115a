//! The four data-oblivious random projections.
//!
//! | kind               | `S`                    | cost of `S A`       |
//! |--------------------|------------------------|---------------------|
//! | Gaussian           | iid `N(0, 1/k)`        | `O(n d k)`          |
//! | Hadamard (SRHT)    | `Φ H D / √k`           | `O(n d log n_pad)`  |
//! | Clarkson-Woodruff  | `Γ D`, one ±1 per col  | `O(n d)`            |
//! | Uniform            | `√(n/k) Φ`             | `O(k d)`            |
//!
//! `Φ` samples rows with replacement and `D` is a diagonal of independent
//! Rademacher signs. The Hadamard sketch zero-pads the source rows up to the
//! next power of two; signs act on the first `n` coordinates only.

mod fwht;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub use fwht::fwht_inplace;
pub(crate) use fwht::hadamard_entry;

use crate::error::{domain, shape, Error, Result};
use crate::matrix::DenseMatrix;
use crate::rng::stream_rng;

/// Columns of a Gaussian sketch generated per random stream.
const GAUSSIAN_BLOCK: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SketchKind {
    #[serde(rename = "gaussian")]
    Gaussian,
    #[serde(rename = "hadamard")]
    Hadamard,
    #[serde(rename = "cw", alias = "clarkson-woodruff")]
    ClarksonWoodruff,
    #[serde(rename = "uniform")]
    Uniform,
}

impl SketchKind {
    pub const ALL: [SketchKind; 4] = [
        SketchKind::Gaussian,
        SketchKind::Hadamard,
        SketchKind::ClarksonWoodruff,
        SketchKind::Uniform,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SketchKind::Gaussian => "gaussian",
            SketchKind::Hadamard => "hadamard",
            SketchKind::ClarksonWoodruff => "cw",
            SketchKind::Uniform => "uniform",
        }
    }

    /// Stable small integer used when deriving per-condition seeds.
    pub(crate) fn ordinal(self) -> u64 {
        match self {
            SketchKind::Gaussian => 0,
            SketchKind::Hadamard => 1,
            SketchKind::ClarksonWoodruff => 2,
            SketchKind::Uniform => 3,
        }
    }
}

impl fmt::Display for SketchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SketchKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" | "gauss" => Ok(SketchKind::Gaussian),
            "hadamard" | "srht" => Ok(SketchKind::Hadamard),
            "cw" | "clarkson-woodruff" | "clarksonwoodruff" | "countsketch" => {
                Ok(SketchKind::ClarksonWoodruff)
            }
            "uniform" => Ok(SketchKind::Uniform),
            other => Err(Error::Config(format!("unknown sketch kind '{other}'"))),
        }
    }
}

/// Sketch family, number of sketch rows `k`, and seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SketchSpec {
    pub kind: SketchKind,
    pub k: usize,
    pub seed: u64,
}

impl SketchSpec {
    pub fn new(kind: SketchKind, k: usize, seed: u64) -> Result<Self> {
        if k == 0 {
            return Err(domain("sketch size k must be at least 1"));
        }
        Ok(Self { kind, k, seed })
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

#[derive(Clone, Debug)]
enum Realization {
    /// Coefficients are regenerated block by block from the seed on demand,
    /// so a `k × n` operator never has to be held in memory at once.
    Gaussian,
    Hadamard { n_pad: usize, signs: Vec<f64>, rows: Vec<usize> },
    ClarksonWoodruff { targets: Vec<usize>, signs: Vec<f64> },
    Uniform { rows: Vec<usize> },
}

/// A realized `k × n` sketching matrix.
///
/// Immutable once built; [`apply_sketch`] may be called concurrently.
#[derive(Clone, Debug)]
pub struct SketchOperator {
    spec: SketchSpec,
    n: usize,
    realization: Realization,
}

fn rademacher(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
}

/// Draws the random ingredients of a sketch for `n` source rows.
pub fn build_sketch(spec: SketchSpec, n: usize) -> Result<SketchOperator> {
    if n == 0 {
        return Err(domain("source row count n must be at least 1"));
    }
    if spec.k == 0 {
        return Err(domain("sketch size k must be at least 1"));
    }
    let k = spec.k;
    let realization = match spec.kind {
        SketchKind::Gaussian => Realization::Gaussian,
        SketchKind::Hadamard => {
            let n_pad = n.next_power_of_two();
            let signs = rademacher(&mut stream_rng(spec.seed, 0), n);
            let mut rng = stream_rng(spec.seed, 1);
            let rows = (0..k).map(|_| rng.random_range(0..n_pad)).collect();
            Realization::Hadamard { n_pad, signs, rows }
        }
        SketchKind::ClarksonWoodruff => {
            let mut rng = stream_rng(spec.seed, 0);
            let targets = (0..n).map(|_| rng.random_range(0..k)).collect();
            let signs = rademacher(&mut stream_rng(spec.seed, 1), n);
            Realization::ClarksonWoodruff { targets, signs }
        }
        SketchKind::Uniform => {
            let mut rng = stream_rng(spec.seed, 0);
            Realization::Uniform { rows: (0..k).map(|_| rng.random_range(0..n)).collect() }
        }
    };
    Ok(SketchOperator { spec, n, realization })
}

impl SketchOperator {
    /// Clarkson-Woodruff operator with an explicit column map `j -> (targets[j], signs[j])`.
    pub fn clarkson_woodruff_from_map(k: usize, targets: Vec<usize>, signs: Vec<f64>) -> Result<Self> {
        if targets.len() != signs.len() || targets.is_empty() {
            return Err(shape("targets and signs must be non-empty and of equal length"));
        }
        if targets.iter().any(|&t| t >= k) {
            return Err(domain("target row out of range"));
        }
        if signs.iter().any(|&s| s != 1.0 && s != -1.0) {
            return Err(domain("signs must be ±1"));
        }
        let spec = SketchSpec::new(SketchKind::ClarksonWoodruff, k, 0)?;
        Ok(Self { spec, n: targets.len(), realization: Realization::ClarksonWoodruff { targets, signs } })
    }

    /// Uniform operator that samples the given source rows.
    pub fn uniform_from_rows(n: usize, rows: Vec<usize>) -> Result<Self> {
        if rows.iter().any(|&r| r >= n) {
            return Err(domain("sampled row out of range"));
        }
        let spec = SketchSpec::new(SketchKind::Uniform, rows.len(), 0)?;
        Ok(Self { spec, n, realization: Realization::Uniform { rows } })
    }

    pub fn spec(&self) -> SketchSpec {
        self.spec
    }

    pub fn kind(&self) -> SketchKind {
        self.spec.kind
    }

    pub fn k(&self) -> usize {
        self.spec.k
    }

    /// Logical number of source rows; padding is internal.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Padded Hadamard order, or `None` for other kinds.
    pub fn n_pad(&self) -> Option<usize> {
        match &self.realization {
            Realization::Hadamard { n_pad, .. } => Some(*n_pad),
            _ => None,
        }
    }

    /// Sampled source (Uniform) or Hadamard (Hadamard) row indices.
    pub fn sampled_rows(&self) -> Option<&[usize]> {
        match &self.realization {
            Realization::Hadamard { rows, .. } | Realization::Uniform { rows } => Some(rows),
            _ => None,
        }
    }

    /// Columns `[start, start + width)` of a Gaussian sketch, `k × width`.
    fn gaussian_block(&self, block: usize) -> DMatrix<f64> {
        let k = self.spec.k;
        let start = block * GAUSSIAN_BLOCK;
        let width = GAUSSIAN_BLOCK.min(self.n - start);
        let scale = 1.0 / (k as f64).sqrt();
        let mut rng = stream_rng(self.spec.seed, block as u64);
        DMatrix::from_fn(k, width, |_, _| rng.sample::<f64, _>(StandardNormal) * scale)
    }

    /// Materializes `S` as a dense `k × n` matrix. Intended for small operators.
    pub fn to_dense(&self) -> Result<DenseMatrix> {
        let (k, n) = (self.spec.k, self.n);
        let mut s = DMatrix::<f64>::zeros(k, n);
        match &self.realization {
            Realization::Gaussian => {
                for b in 0..n.div_ceil(GAUSSIAN_BLOCK) {
                    let blk = self.gaussian_block(b);
                    s.columns_mut(b * GAUSSIAN_BLOCK, blk.ncols()).copy_from(&blk);
                }
            }
            Realization::Hadamard { signs, rows, .. } => {
                let scale = 1.0 / (k as f64).sqrt();
                for (r, &h) in rows.iter().enumerate() {
                    for i in 0..n {
                        s[(r, i)] = hadamard_entry(h, i) * signs[i] * scale;
                    }
                }
            }
            Realization::ClarksonWoodruff { targets, signs } => {
                for (i, (&t, &sg)) in targets.iter().zip(signs).enumerate() {
                    s[(t, i)] = sg;
                }
            }
            Realization::Uniform { rows } => {
                let scale = (n as f64 / k as f64).sqrt();
                for (r, &i) in rows.iter().enumerate() {
                    s[(r, i)] += scale;
                }
            }
        }
        DenseMatrix::from_nalgebra(s)
    }
}

/// Computes `S A` using the fast path for the operator's kind.
pub fn apply_sketch(op: &SketchOperator, a: &DenseMatrix) -> Result<DenseMatrix> {
    if a.n_rows() != op.n {
        return Err(shape(format!(
            "sketch expects {} source rows, matrix has {}",
            op.n,
            a.n_rows()
        )));
    }
    let (k, n, d) = (op.spec.k, op.n, a.n_cols());
    let src = a.as_nalgebra();
    let out = match &op.realization {
        Realization::Gaussian => {
            let mut out = DMatrix::<f64>::zeros(k, d);
            for b in 0..n.div_ceil(GAUSSIAN_BLOCK) {
                let blk = op.gaussian_block(b);
                let rows = src.rows(b * GAUSSIAN_BLOCK, blk.ncols());
                out.gemm(1.0, &blk, &rows, 1.0);
            }
            out
        }
        Realization::Hadamard { n_pad, signs, rows } => {
            let scale = 1.0 / (k as f64).sqrt();
            let mut out = DMatrix::<f64>::zeros(k, d);
            let mut buf = vec![0.0; *n_pad];
            for j in 0..d {
                for ((b, &x), &sg) in buf.iter_mut().zip(a.column(j)).zip(signs) {
                    *b = x * sg;
                }
                buf[n..].fill(0.0);
                fwht_inplace(&mut buf)?;
                for (r, &h) in rows.iter().enumerate() {
                    out[(r, j)] = buf[h] * scale;
                }
            }
            out
        }
        Realization::ClarksonWoodruff { targets, signs } => {
            let mut out = DMatrix::<f64>::zeros(k, d);
            for j in 0..d {
                let col = a.column(j);
                let mut dst = out.column_mut(j);
                for ((&t, &sg), &x) in targets.iter().zip(signs).zip(col) {
                    dst[t] += sg * x;
                }
            }
            out
        }
        Realization::Uniform { rows } => {
            let scale = (n as f64 / k as f64).sqrt();
            src.select_rows(rows) * scale
        }
    };
    Ok(DenseMatrix::from_nalgebra_unchecked(out))
}
