//! Python bindings. Matrices cross the boundary as lists of rows.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use sketchtw::embedding::leverage_scores;
use sketchtw::{DenseMatrix, Error, SketchKind, SketchSpec};

fn to_py(e: Error) -> PyErr {
    if e.is_config() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<DenseMatrix> {
    DenseMatrix::from_rows(&rows).map_err(to_py)
}

fn spec(kind: &str, k: usize, seed: u64) -> PyResult<SketchSpec> {
    let kind: SketchKind = kind.parse().map_err(to_py)?;
    SketchSpec::new(kind, k, seed).map_err(to_py)
}

/// Tracy-Widom F1 CDF.
#[pyfunction]
fn tw_cdf(z: f64) -> PyResult<f64> {
    sketchtw::tw_cdf(z).map_err(to_py)
}

#[pyfunction]
fn tw_quantile(p: f64) -> PyResult<f64> {
    sketchtw::tw_quantile(p).map_err(to_py)
}

/// Approximate probability that a Gaussian sketch is an ε-subspace embedding.
#[pyfunction]
fn embedding_prob(k: usize, d: usize, eps: f64) -> PyResult<f64> {
    sketchtw::embedding_prob_approx(k, d, eps).map_err(to_py)
}

/// Approximate probability that the sketch-preconditioned iteration converges.
#[pyfunction]
fn convergence_prob(k: usize, d: usize) -> PyResult<f64> {
    sketchtw::convergence_prob_approx(k, d).map_err(to_py)
}

/// `S A` for a freshly drawn k×n sketch `S`.
#[pyfunction]
#[pyo3(signature = (rows, kind, k, seed=0))]
fn sketch(rows: Vec<Vec<f64>>, kind: &str, k: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
    let a = matrix(rows)?;
    let op = sketchtw::build_sketch(spec(kind, k, seed)?, a.n_rows()).map_err(to_py)?;
    Ok(sketchtw::apply_sketch(&op, &a).map_err(to_py)?.to_rows())
}

/// Embedding distortion of one sketch on the column space of `A`.
#[pyfunction]
#[pyo3(signature = (rows, kind, k, seed=0))]
fn distortion(rows: Vec<Vec<f64>>, kind: &str, k: usize, seed: u64) -> PyResult<f64> {
    let u = sketchtw::thin_svd_factor(&matrix(rows)?).map_err(to_py)?;
    let op = sketchtw::build_sketch(spec(kind, k, seed)?, u.n()).map_err(to_py)?;
    sketchtw::distortion(&u, &op).map_err(to_py)
}

/// Distortion samples of `b` independent sketches of the column space of `A`.
#[pyfunction]
#[pyo3(signature = (rows, kind, k, b, seed=0))]
fn sketch_trials(rows: Vec<Vec<f64>>, kind: &str, k: usize, b: usize, seed: u64) -> PyResult<Vec<f64>> {
    let u = sketchtw::thin_svd_factor(&matrix(rows)?).map_err(to_py)?;
    let kind: SketchKind = kind.parse().map_err(to_py)?;
    Ok(sketchtw::sketch_embedding_trials(&u, kind, k, b, seed).map_err(to_py)?.eps_samples)
}

/// Distortion samples of `b` Wishart(k, I/k) matrices of size d.
#[pyfunction]
#[pyo3(signature = (k, d, b, seed=0))]
fn wishart_trials(k: usize, d: usize, b: usize, seed: u64) -> PyResult<Vec<f64>> {
    Ok(sketchtw::simulate_wishart_trials(k, d, b, seed).map_err(to_py)?.eps_samples)
}

#[pyfunction]
fn leverage(rows: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
    Ok(leverage_scores(&sketchtw::thin_svd_factor(&matrix(rows)?).map_err(to_py)?))
}

#[pymodule]
fn sketchtw_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", sketchtw::VERSION)?;
    m.add_function(wrap_pyfunction!(tw_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(tw_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(embedding_prob, m)?)?;
    m.add_function(wrap_pyfunction!(convergence_prob, m)?)?;
    m.add_function(wrap_pyfunction!(sketch, m)?)?;
    m.add_function(wrap_pyfunction!(distortion, m)?)?;
    m.add_function(wrap_pyfunction!(sketch_trials, m)?)?;
    m.add_function(wrap_pyfunction!(wishart_trials, m)?)?;
    m.add_function(wrap_pyfunction!(leverage, m)?)?;
    Ok(())
}
