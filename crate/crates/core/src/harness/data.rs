//! CSV ingestion and synthetic designs.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::matrix::DenseMatrix;
use crate::rng::stream_rng;
use crate::solver::LeastSquaresProblem;

/// Column selector: a 1-based index or a header name.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColumnRef {
    Index(usize),
    Name(String),
}

impl FromStr for ColumnRef {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::Config("empty column reference".into()));
        }
        Ok(match s.parse::<usize>() {
            Ok(0) => return Err(Error::Config("column indices start at 1".into())),
            Ok(i) => ColumnRef::Index(i),
            Err(_) => ColumnRef::Name(s.to_string()),
        })
    }
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnRef::Index(i) => write!(f, "{i}"),
            ColumnRef::Name(n) => f.write_str(n),
        }
    }
}

/// A parsed CSV: covariates plus the response when one was requested.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub x: DenseMatrix,
    pub y: Option<Vec<f64>>,
    /// Covariate names from the header (`"intercept"` first when added).
    pub names: Option<Vec<String>>,
}

impl Dataset {
    pub fn into_problem(self) -> Result<LeastSquaresProblem> {
        let y = self.y.ok_or_else(|| Error::Config("dataset has no response column".into()))?;
        LeastSquaresProblem::new(self.x, y)
    }
}

/// Reads a comma-separated numeric file.
///
/// Cells are trimmed and parsed with `.` as the decimal point. Error
/// locations are 1-based file lines and columns, so with a header the first
/// data row is row 2.
pub fn load_dataset(
    path: impl AsRef<Path>,
    response: Option<&ColumnRef>,
    has_header: bool,
    intercept: bool,
) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let header: Option<Vec<String>> = if has_header {
        Some(reader.headers()?.iter().map(str::to_string).collect())
    } else {
        None
    };
    let mut width = header.as_ref().map(Vec::len);
    let first_data_line = if has_header { 2 } else { 1 };
    let mut cells: Vec<f64> = Vec::new();
    let mut n_rows = 0;
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(first_data_line + i, |p| p.line() as usize);
        let w = *width.get_or_insert(rec.len());
        if rec.len() != w {
            return Err(Error::Parse {
                row: line,
                col: rec.len().min(w) + 1,
                msg: format!("expected {w} fields, found {}", rec.len()),
            });
        }
        for (j, cell) in rec.iter().enumerate() {
            let v = cell.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Parse {
                row: line,
                col: j + 1,
                msg: format!("'{cell}' is not a finite number"),
            })?;
            cells.push(v);
        }
        n_rows += 1;
    }
    let width = width.unwrap_or(0);
    if n_rows == 0 || width == 0 {
        return Err(Error::Data(format!("{} has no data rows", path.display())));
    }

    let response_col = match response {
        None => None,
        Some(ColumnRef::Index(i)) if *i >= 1 && *i <= width => Some(i - 1),
        Some(ColumnRef::Index(i)) => {
            return Err(Error::Parse { row: 1, col: *i, msg: format!("response column {i} out of range 1..={width}") })
        }
        Some(ColumnRef::Name(name)) => {
            let names = header.as_ref().ok_or_else(|| {
                Error::Config(format!("response column '{name}' given by name but the file has no header"))
            })?;
            let pos = names.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
                row: 1,
                col: names.len() + 1,
                msg: format!("no column named '{name}' in header"),
            })?;
            Some(pos)
        }
    };

    let n_cov = width - usize::from(response_col.is_some()) + usize::from(intercept);
    if n_cov == 0 {
        return Err(Error::Data("no covariate columns left after removing the response".into()));
    }
    let mut x = Vec::with_capacity(n_rows * n_cov);
    let mut y = response_col.map(|_| Vec::with_capacity(n_rows));
    for row in cells.chunks_exact(width) {
        if intercept {
            x.push(1.0);
        }
        for (j, &v) in row.iter().enumerate() {
            if Some(j) == response_col {
                y.as_mut().unwrap().push(v);
            } else {
                x.push(v);
            }
        }
    }
    let names = header.map(|h| {
        let mut names: Vec<String> = Vec::with_capacity(n_cov);
        if intercept {
            names.push("intercept".into());
        }
        names.extend(h.into_iter().enumerate().filter(|(j, _)| Some(*j) != response_col).map(|(_, n)| n));
        names
    });
    Ok(Dataset { x: DenseMatrix::from_row_major(n_rows, n_cov, &x)?, y, names })
}

/// Synthetic design families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    /// iid standard normal entries.
    Gaussian,
    /// Gaussian with a few rows scaled by `√n`, giving high leverage.
    SpikedLeverage,
    /// `[I_d; 0]`: every nonzero row has leverage one.
    OrthonormalBlock,
}

impl Generator {
    pub fn as_str(self) -> &'static str {
        match self {
            Generator::Gaussian => "gaussian",
            Generator::SpikedLeverage => "spiked-leverage",
            Generator::OrthonormalBlock => "orthonormal-block",
        }
    }
}

impl FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "gaussian" => Ok(Generator::Gaussian),
            "spiked-leverage" | "spiked" => Ok(Generator::SpikedLeverage),
            "orthonormal-block" | "orthonormal" => Ok(Generator::OrthonormalBlock),
            other => Err(Error::Config(format!(
                "unknown generator '{other}' (expected gaussian, spiked-leverage or orthonormal-block)"
            ))),
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Rows scaled up by the spiked-leverage generator.
pub const SPIKED_ROWS: usize = 5;

/// An `n × d` synthetic design.
pub fn synth_dataset(generator: Generator, n: usize, d: usize, seed: u64) -> Result<DenseMatrix> {
    if d == 0 || n <= d {
        return Err(domain(format!("synthetic design needs n > d ≥ 1, got n={n}, d={d}")));
    }
    match generator {
        Generator::OrthonormalBlock => DenseMatrix::from_fn(n, d, |i, j| if i == j { 1.0 } else { 0.0 }),
        Generator::Gaussian | Generator::SpikedLeverage => {
            let mut rng = stream_rng(seed, 0);
            // Column-major fill keeps the draw order independent of `n` per column.
            let mut data: Vec<f64> = (0..n * d).map(|_| rng.sample(StandardNormal)).collect();
            if generator == Generator::SpikedLeverage {
                let scale = (n as f64).sqrt();
                for j in 0..d {
                    for i in 0..SPIKED_ROWS.min(n) {
                        data[j * n + i] *= scale;
                    }
                }
            }
            DenseMatrix::from_col_major(n, d, data)
        }
    }
}

/// Synthetic regression: `y = X·1 + N(0, 1)` noise on a [`synth_dataset`] design.
pub fn synth_problem(generator: Generator, n: usize, d: usize, seed: u64) -> Result<LeastSquaresProblem> {
    let x = synth_dataset(generator, n, d, seed)?;
    let mut rng = stream_rng(seed, 1);
    let mut y = x.mul_vec(&vec![1.0; d])?;
    for v in &mut y {
        *v += rng.sample::<f64, _>(StandardNormal);
    }
    LeastSquaresProblem::new(x, y)
}
