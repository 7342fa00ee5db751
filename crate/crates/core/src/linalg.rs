//! Square linear systems, per-row orthogonal projectors and the scalar
//! quantities (row-norm bound, inverse norm, condition numbers) that the
//! convergence bounds are built from.
//!
//! Rows are indexed from 0 in the library API. File formats and the CLI use
//! 1-based indices.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Systems with `sigma_min / sigma_max` below this are rejected as singular.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// A square, full-rank system `A x = b` where agent `i` owns row `i`.
///
/// Immutable after construction; the solution, row norms and spectral
/// quantities are computed once.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    a: DMatrix<f64>,
    b: DVector<f64>,
    x_star: DVector<f64>,
    row_norms: Vec<f64>,
    tau: f64,
    norm: f64,
    inv_norm: f64,
    frobenius: f64,
    projectors: OnceLock<Vec<DMatrix<f64>>>,
}

/// `P = I - a a^T / |a|^2` for one row `a` of the system.
#[derive(Debug, Clone, PartialEq)]
pub struct RowProjector {
    pub row_index: usize,
    pub matrix: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionNumbers {
    /// `|A| |A^-1|` in the spectral norm.
    pub kappa: f64,
    /// `|A|_F |A^-1|`.
    pub kappa_scaled: f64,
}

impl LinearSystem {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        let n = a.nrows();
        if n == 0 {
            return Err(Error::DimensionMismatch("empty matrix".into()));
        }
        if a.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, expected square",
                n,
                a.ncols()
            )));
        }
        if b.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "rhs has length {}, matrix has {} rows",
                b.len(),
                n
            )));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("non-finite entry in system".into()));
        }

        let sv = a.singular_values();
        let sigma_max = sv.max();
        let sigma_min = sv.min();
        let ratio = if sigma_max > 0.0 { sigma_min / sigma_max } else { 0.0 };
        if ratio < RANK_TOLERANCE {
            return Err(Error::SingularMatrix { ratio });
        }

        let x_star = a
            .clone()
            .lu()
            .solve(&b)
            .ok_or(Error::SingularMatrix { ratio })?;

        let row_norms: Vec<f64> = a.row_iter().map(|r| r.norm()).collect();
        let tau = row_norms.iter().copied().fold(0.0, f64::max);
        let frobenius = a.norm();

        Ok(LinearSystem {
            a,
            b,
            x_star,
            row_norms,
            tau,
            norm: sigma_max,
            inv_norm: 1.0 / sigma_min,
            frobenius,
            projectors: OnceLock::new(),
        })
    }

    /// Builds a system from row-major data.
    pub fn from_rows(n: usize, a_row_major: &[f64], b: &[f64]) -> Result<Self> {
        if a_row_major.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "expected {} matrix entries, got {}",
                n * n,
                a_row_major.len()
            )));
        }
        LinearSystem::new(
            DMatrix::from_row_slice(n, n, a_row_major),
            DVector::from_column_slice(b),
        )
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn x_star(&self) -> &DVector<f64> {
        &self.x_star
    }

    pub fn row(&self, i: usize) -> DVector<f64> {
        self.a.row(i).transpose()
    }

    pub fn row_norms(&self) -> &[f64] {
        &self.row_norms
    }

    /// Largest row norm.
    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Spectral norm of `A`.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Spectral norm of `A^-1`, i.e. `1 / sigma_min`.
    pub fn inv_norm(&self) -> f64 {
        self.inv_norm
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius
    }

    /// `phi = 1 / (sqrt(n) tau |A^-1|)^2`, the per-coverage contraction
    /// ingredient in `(1 - phi)^(n r / 2)`.
    pub fn phi(&self) -> f64 {
        let s = (self.n() as f64).sqrt() * self.tau * self.inv_norm;
        1.0 / (s * s)
    }

    pub fn condition_numbers(&self) -> ConditionNumbers {
        ConditionNumbers {
            kappa: self.norm * self.inv_norm,
            kappa_scaled: self.frobenius * self.inv_norm,
        }
    }

    fn check_row(&self, i: usize) -> Result<()> {
        if i >= self.n() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.n(),
            });
        }
        Ok(())
    }

    pub fn row_projector(&self, i: usize) -> Result<RowProjector> {
        self.check_row(i)?;
        Ok(RowProjector {
            row_index: i,
            matrix: self.projectors()[i].clone(),
        })
    }

    /// Dense projector matrices for every row, built on first use.
    pub fn projectors(&self) -> &[DMatrix<f64>] {
        self.projectors.get_or_init(|| {
            (0..self.n())
                .map(|i| {
                    let a = self.row(i);
                    let nn = self.row_norms[i] * self.row_norms[i];
                    DMatrix::identity(self.n(), self.n()) - (&a * a.transpose()) / nn
                })
                .collect()
        })
    }

    /// Applies `P_i` to `v` in O(n) using the rank-one form.
    pub fn project(&self, i: usize, v: &DVector<f64>) -> DVector<f64> {
        let row = self.a.row(i);
        let nn = self.row_norms[i] * self.row_norms[i];
        let c = row.dot(&v.transpose()) / nn;
        let mut out = v.clone();
        for (o, a) in out.iter_mut().zip(row.iter()) {
            *o -= c * a;
        }
        out
    }

    /// `A_i x - b_i`.
    pub fn row_residual(&self, i: usize, x: &DVector<f64>) -> f64 {
        self.a.row(i).dot(&x.transpose()) - self.b[i]
    }
}

pub fn parse_matrix_csv<R: Read>(reader: R) -> Result<DMatrix<f64>> {
    let rows = parse_rows(reader)?;
    let nrows = rows.len();
    if nrows == 0 {
        return Err(Error::EmptyInput);
    }
    let ncols = rows[0].len();
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != ncols) {
        return Err(Error::DimensionMismatch(format!(
            "row {} has {} entries, expected {}",
            i + 1,
            r.len(),
            ncols
        )));
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(DMatrix::from_row_slice(nrows, ncols, &flat))
}

/// Reads a single-column CSV. A single row of values is accepted as well.
pub fn parse_vector_csv<R: Read>(reader: R) -> Result<DVector<f64>> {
    let rows = parse_rows(reader)?;
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    if rows.len() == 1 {
        return Ok(DVector::from_vec(rows.into_iter().next().unwrap()));
    }
    if rows.iter().any(|r| r.len() != 1) {
        return Err(Error::DimensionMismatch(
            "vector CSV must have a single column".into(),
        ));
    }
    Ok(DVector::from_vec(rows.into_iter().flatten().collect()))
}

fn parse_rows<R: Read>(reader: R) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut rows = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let row = record
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("line {}: bad number {:?}", line + 1, f)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    parse_matrix_csv(std::fs::File::open(path)?)
}

pub fn read_vector_csv(path: impl AsRef<Path>) -> Result<DVector<f64>> {
    parse_vector_csv(std::fs::File::open(path)?)
}

/// Shortest text that parses back to the same `f64`.
pub(crate) fn fmt_shortest(v: f64) -> String {
    format!("{:?}", v)
}

pub fn write_matrix_csv<W: Write>(mut w: W, m: &DMatrix<f64>) -> Result<()> {
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|v| fmt_shortest(*v)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn write_vector_csv<W: Write>(mut w: W, v: &DVector<f64>) -> Result<()> {
    for x in v.iter() {
        writeln!(w, "{}", fmt_shortest(*x))?;
    }
    Ok(())
}

/// Loads `A` and `b` from CSV files. With no rhs file, `b = 0`.
pub fn load_system(a_path: impl AsRef<Path>, b_path: Option<&Path>) -> Result<LinearSystem> {
    let a = read_matrix_csv(a_path)?;
    let b = match b_path {
        Some(p) => read_vector_csv(p)?,
        None => DVector::zeros(a.nrows()),
    };
    LinearSystem::new(a, b)
}
