//! Least squares with a sketched preconditioner.
//!
//! The basic iteration is
//! `β ← β + (X̃ᵀX̃)⁻¹ Xᵀ(y - Xβ)` with `X̃ = S X`, which converges for every
//! starting point iff `λ_max((X̃ᵀX̃)⁻¹ XᵀX) < 2`, i.e. iff
//! `λ_min(UᵀSᵀSU) > ½`. No damping, line search or acceleration is applied.

use std::io::{Read, Write};
use std::sync::OnceLock;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::qr_factor;
use crate::error::{domain, shape, Error, Result};
use crate::matrix::DenseMatrix;
use crate::rmt::convergence_prob_approx;
use crate::rng::derive_seed_path;
use crate::sketch::{apply_sketch, build_sketch, SketchKind, SketchSpec};
use crate::stats::{wilson_interval, Z_95};

pub const DEFAULT_MAX_STEPS: usize = 2000;
pub const DEFAULT_GRAD_TOL: f64 = 1e-6;

/// Full-column-rank regression problem `min ‖y - Xβ‖²` with `n > d`.
#[derive(Debug)]
pub struct LeastSquaresProblem {
    x: DenseMatrix,
    y: Vec<f64>,
    normal: OnceLock<(DMatrix<f64>, DVector<f64>)>,
}

impl Clone for LeastSquaresProblem {
    fn clone(&self) -> Self {
        Self { x: self.x.clone(), y: self.y.clone(), normal: OnceLock::new() }
    }
}

impl LeastSquaresProblem {
    pub fn new(x: DenseMatrix, y: Vec<f64>) -> Result<Self> {
        let (n, d) = x.shape();
        if y.len() != n {
            return Err(shape(format!("response has {} entries, design has {n} rows", y.len())));
        }
        if n <= d {
            return Err(domain(format!("need n > d, got n={n}, d={d}")));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::Contract(format!("non-finite response at row {i}")));
        }
        qr_factor(&x)?;
        Ok(Self { x, y, normal: OnceLock::new() })
    }

    pub fn x(&self) -> &DenseMatrix {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.x.n_rows()
    }

    pub fn d(&self) -> usize {
        self.x.n_cols()
    }

    /// `(XᵀX, Xᵀy)`, computed once.
    fn normal_equations(&self) -> &(DMatrix<f64>, DVector<f64>) {
        self.normal.get_or_init(|| {
            let x = self.x.as_nalgebra();
            let y = DVector::from_column_slice(&self.y);
            (x.tr_mul(x), x.tr_mul(&y))
        })
    }

    /// `Xᵀ(y - Xβ)` evaluated through the residual.
    pub fn gradient(&self, beta: &[f64]) -> Vec<f64> {
        let x = self.x.as_nalgebra();
        let mut r = DVector::from_column_slice(&self.y);
        r.gemv(-1.0, x, &DVector::from_column_slice(beta), 1.0);
        x.tr_mul(&r).as_slice().to_vec()
    }
}

/// How the gradient `Xᵀ(y - Xβ)` is evaluated each step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GradientEvaluation {
    /// One `n × d` multiply pair per step.
    #[default]
    Residual,
    /// `Xᵀy - (XᵀX)β` from cached normal equations; `O(d²)` per step.
    /// Algebraically identical, used for large replicate sweeps.
    Gram,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub max_steps: usize,
    pub grad_tol: f64,
    /// Starting point; zeros when `None`.
    pub beta0: Option<Vec<f64>>,
    pub gradient: GradientEvaluation,
    /// Keep every iterate in the report.
    pub record_iterates: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_steps: DEFAULT_MAX_STEPS,
            grad_tol: DEFAULT_GRAD_TOL,
            beta0: None,
            gradient: GradientEvaluation::Residual,
            record_iterates: false,
        }
    }
}

/// Outcome of one preconditioned solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub converged: bool,
    /// Iterations taken; the final gradient norm is `grad_norms[steps]`.
    pub steps: usize,
    /// `‖Xᵀ(y - Xβ⁽ᵗ⁾)‖₂` for `t = 0..=steps`.
    pub grad_norms: Vec<f64>,
    pub beta: Vec<f64>,
    pub spec: Option<SketchSpec>,
    /// Why the solve stopped early, if it did.
    pub diagnostic: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterates: Option<Vec<Vec<f64>>>,
}

fn inner_product(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn factor_preconditioner(x_tilde: &DenseMatrix) -> std::result::Result<Cholesky<f64, Dyn>, String> {
    let p = x_tilde.as_nalgebra().tr_mul(x_tilde.as_nalgebra());
    let chol = Cholesky::new(p).ok_or_else(|| "preconditioner X̃ᵀX̃ is not positive definite".to_string())?;
    let diag = chol.l_dirty().diagonal();
    let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(lo > 0.0) || lo / hi < 1e-8 {
        return Err(format!("preconditioner X̃ᵀX̃ is numerically singular (diag ratio {:.2e})", lo / hi));
    }
    Ok(chol)
}

/// Runs the basic iteration with the preconditioner `(X̃ᵀX̃)⁻¹` for a given `X̃`.
pub fn solve_with_sketched_design(
    prob: &LeastSquaresProblem,
    x_tilde: &DenseMatrix,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    let d = prob.d();
    if x_tilde.n_cols() != d {
        return Err(shape(format!("sketched design has {} columns, expected {d}", x_tilde.n_cols())));
    }
    if opts.max_steps == 0 || !(opts.grad_tol > 0.0) {
        return Err(domain("need max_steps ≥ 1 and grad_tol > 0"));
    }
    let mut beta = match &opts.beta0 {
        Some(b) if b.len() != d => return Err(shape("beta0 has the wrong length")),
        Some(b) => b.clone(),
        None => vec![0.0; d],
    };
    let mut report = SolveReport {
        converged: false,
        steps: 0,
        grad_norms: Vec::new(),
        beta: Vec::new(),
        spec: None,
        diagnostic: None,
        iterates: opts.record_iterates.then(|| vec![beta.clone()]),
    };
    let chol = match factor_preconditioner(x_tilde) {
        Ok(c) => c,
        Err(msg) => {
            report.grad_norms.push(inner_product(&prob.gradient(&beta), &prob.gradient(&beta)).sqrt());
            report.beta = beta;
            report.diagnostic = Some(msg);
            return Ok(report);
        }
    };
    let normal = (opts.gradient == GradientEvaluation::Gram).then(|| prob.normal_equations());
    let gradient = |beta: &[f64]| -> Vec<f64> {
        match normal {
            Some((g, b)) => {
                let mut out = b.clone();
                out.gemv(-1.0, g, &DVector::from_column_slice(beta), 1.0);
                out.as_slice().to_vec()
            }
            None => prob.gradient(beta),
        }
    };
    for t in 0..=opts.max_steps {
        let g = gradient(&beta);
        let norm = inner_product(&g, &g).sqrt();
        report.grad_norms.push(norm);
        report.steps = t;
        if norm < opts.grad_tol {
            report.converged = true;
            break;
        }
        if !norm.is_finite() {
            report.diagnostic = Some(format!("gradient norm became non-finite at step {t}"));
            break;
        }
        if t == opts.max_steps {
            break;
        }
        let step = chol.solve(&DVector::from_vec(g));
        for (b, s) in beta.iter_mut().zip(step.iter()) {
            *b += s;
        }
        if let Some(its) = report.iterates.as_mut() {
            its.push(beta.clone());
        }
    }
    report.beta = beta;
    Ok(report)
}

/// Sketches `X` with `spec`, factors `X̃ᵀX̃` once and iterates from `β⁽⁰⁾`.
pub fn sketched_solve(prob: &LeastSquaresProblem, spec: SketchSpec, opts: &SolveOptions) -> Result<SolveReport> {
    if spec.k < prob.d() {
        return Err(domain(format!("sketch size k={} below d={}", spec.k, prob.d())));
    }
    let op = build_sketch(spec, prob.n())?;
    let x_tilde = apply_sketch(&op, prob.x())?;
    let mut report = solve_with_sketched_design(prob, &x_tilde, opts)?;
    report.spec = Some(spec);
    Ok(report)
}

/// `(λ_min, λ_max)` of `(X̃ᵀX̃)⁻¹ XᵀX`. The iteration converges iff `λ_max < 2`.
pub fn preconditioned_spectrum(prob: &LeastSquaresProblem, x_tilde: &DenseMatrix) -> Result<(f64, f64)> {
    let chol = factor_preconditioner(x_tilde).map_err(Error::Rank)?;
    let (g, _) = prob.normal_equations();
    let l = chol.l();
    let a = l.solve_lower_triangular(g).ok_or_else(|| Error::Rank("singular factor".into()))?;
    let c = l.solve_lower_triangular(&a.transpose()).ok_or_else(|| Error::Rank("singular factor".into()))?;
    let c = (&c + c.transpose()) * 0.5;
    let ev = c.symmetric_eigenvalues();
    Ok(ev.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v))))
}

/// Least-squares solution through a Householder QR of `X`.
pub fn exact_solve(prob: &LeastSquaresProblem) -> Result<Vec<f64>> {
    let qr = prob.x().as_nalgebra().clone().qr();
    let qty = qr.q().tr_mul(&DVector::from_column_slice(prob.y()));
    let beta = qr
        .r()
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Rank("triangular factor is singular".into()))?;
    Ok(beta.as_slice().to_vec())
}

/// Empirical convergence rate for one `(kind, k)` condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub kind: SketchKind,
    pub k: usize,
    pub runs: usize,
    pub converged: usize,
    pub rate: f64,
    /// Wilson 95% interval.
    pub lo: f64,
    pub hi: f64,
    /// Tracy-Widom prediction; NaN when `k ≤ d`, where it is undefined
    /// (`null` in JSON).
    #[serde(with = "nan_as_null")]
    pub gamma_hat: f64,
}

mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_nan() {
            s.serialize_none()
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

/// Runs `b` seeded solves for every `(kind, k)` and tabulates convergence rates.
pub fn convergence_experiment(
    prob: &LeastSquaresProblem,
    kinds: &[SketchKind],
    k_grid: &[usize],
    b: usize,
    master_seed: u64,
    opts: &SolveOptions,
) -> Result<Vec<RateRow>> {
    if b == 0 {
        return Err(domain("convergence experiment needs at least one replicate"));
    }
    if kinds.is_empty() || k_grid.is_empty() {
        return Err(domain("need at least one sketch kind and one k"));
    }
    let d = prob.d();
    if let Some(&k) = k_grid.iter().find(|&&k| k < d) {
        return Err(domain(format!("k={k} below d={d}")));
    }
    let conditions: Vec<(SketchKind, usize)> =
        kinds.iter().flat_map(|&kind| k_grid.iter().map(move |&k| (kind, k))).collect();
    let tasks: Vec<(usize, usize)> =
        (0..conditions.len()).flat_map(|c| (0..b).map(move |r| (c, r))).collect();
    let outcomes: Vec<bool> = tasks
        .par_iter()
        .map(|&(c, rep)| {
            let (kind, k) = conditions[c];
            let seed = derive_seed_path(master_seed, &[kind.ordinal(), k as u64, rep as u64]);
            let spec = SketchSpec::new(kind, k, seed)?;
            Ok(sketched_solve(prob, spec, opts)?.converged)
        })
        .collect::<Result<_>>()?;
    Ok(conditions
        .iter()
        .enumerate()
        .map(|(c, &(kind, k))| {
            let converged = outcomes[c * b..(c + 1) * b].iter().filter(|&&ok| ok).count();
            let p = wilson_interval(converged, b, Z_95);
            RateRow {
                kind,
                k,
                runs: b,
                converged,
                rate: p.rate,
                lo: p.lo,
                hi: p.hi,
                gamma_hat: convergence_prob_approx(k, d).unwrap_or(f64::NAN),
            }
        })
        .collect())
}

/// `kind,k,rate,lo,hi,gamma_hat` CSV.
pub fn write_rates_csv<W: Write>(rows: &[RateRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["kind", "k", "rate", "lo", "hi", "gamma_hat"])?;
    for r in rows {
        w.write_record([
            r.kind.as_str().to_string(),
            r.k.to_string(),
            r.rate.to_string(),
            r.lo.to_string(),
            r.hi.to_string(),
            r.gamma_hat.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Parsed row of a rate table: `(kind, k, rate, lo, hi, gamma_hat)`.
pub type RateCsvRow = (SketchKind, usize, f64, f64, f64, f64);

pub fn read_rates_csv<R: Read>(input: R) -> Result<Vec<RateCsvRow>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let field = |c: usize| -> Result<&str> {
            rec.get(c).ok_or_else(|| Error::Parse { row: i + 2, col: c + 1, msg: "missing field".into() })
        };
        let num = |c: usize| -> Result<f64> {
            let s = field(c)?;
            s.parse::<f64>().map_err(|e| Error::Parse { row: i + 2, col: c + 1, msg: format!("'{s}': {e}") })
        };
        let kind: SketchKind = field(0)?.parse()?;
        let k = field(1)?
            .parse::<usize>()
            .map_err(|e| Error::Parse { row: i + 2, col: 2, msg: e.to_string() })?;
        out.push((kind, k, num(2)?, num(3)?, num(4)?, num(5)?));
    }
    Ok(out)
}
