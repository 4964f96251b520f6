use super::{parse, EvalError, Expr, SourceError, VarSet};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Grid of expressions: an `n x n` matrix function such as `A(t)`, or an
/// `n x 1` vector field such as the disturbance `omega(x, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFunction {
    rows: usize,
    cols: usize,
    entries: Vec<Expr>,
    vars: VarSet,
}

impl MatrixFunction {
    /// Builds a grid, checking that every entry stays within `vars`.
    pub fn new(rows: usize, cols: usize, entries: Vec<Expr>, vars: VarSet) -> Result<Self> {
        if entries.len() != rows * cols || rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!(
                "expected {rows}x{cols} entries, got {}",
                entries.len()
            )));
        }
        if let Some(k) = entries.iter().position(|e| !e.vars().is_subset_of(&vars)) {
            return Err(Error::Dimension(format!(
                "entry ({}, {}) references variables outside the allowed set",
                k / cols,
                k % cols
            )));
        }
        Ok(Self {
            rows,
            cols,
            entries,
            vars,
        })
    }

    /// Parses a square grid of expression strings.
    pub fn parse_square<S: AsRef<str>>(grid: &[Vec<S>], vars: VarSet) -> Result<Self> {
        let n = grid.len();
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in grid.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Dimension(format!(
                    "matrix must be square: row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            for (j, s) in row.iter().enumerate() {
                entries.push(parse(s.as_ref(), &vars).map_err(|e| at_entry(e, i, j))?);
            }
        }
        Self::new(n, n, entries, vars)
    }

    /// Parses a column vector of expression strings.
    pub fn parse_column<S: AsRef<str>>(items: &[S], vars: VarSet) -> Result<Self> {
        let entries = items
            .iter()
            .enumerate()
            .map(|(i, s)| parse(s.as_ref(), &vars).map_err(|e| at_entry(e, i, 0)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(items.len(), 1, entries, vars)
    }

    pub fn zero(n: usize) -> Self {
        Self::constant(&Matrix::zeros(n))
    }

    pub fn constant(m: &Matrix) -> Self {
        let n = m.dim();
        Self {
            rows: n,
            cols: n,
            entries: m.as_slice().iter().map(|&v| Expr::num(v)).collect(),
            vars: VarSet::time(),
        }
    }

    pub fn from_fn(
        n: usize,
        vars: VarSet,
        mut f: impl FnMut(usize, usize) -> Expr,
    ) -> Result<Self> {
        let entries = (0..n * n).map(|k| f(k / n, k % n)).collect();
        Self::new(n, n, entries, vars)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn vars(&self) -> VarSet {
        self.vars
    }

    pub fn entry(&self, i: usize, j: usize) -> &Expr {
        &self.entries[i * self.cols + j]
    }

    pub fn entries(&self) -> &[Expr] {
        &self.entries
    }

    /// Expression strings, row by row; each one reparses to the same entry.
    pub fn to_strings(&self) -> Vec<Vec<String>> {
        self.entries
            .chunks(self.cols)
            .map(|row| row.iter().map(Expr::to_string).collect())
            .collect()
    }

    /// Entrywise evaluation of a square grid.
    pub fn eval(&self, t: f64, x: Option<&[f64]>) -> Result<Matrix> {
        if !self.is_square() {
            return Err(Error::Dimension(format!(
                "cannot evaluate a {}x{} grid as a square matrix",
                self.rows, self.cols
            )));
        }
        let values = self.eval_entries(t, x)?;
        Matrix::new(self.rows, values)
    }

    /// Entrywise evaluation in row-major order (a column grid yields a vector).
    pub fn eval_entries(
        &self,
        t: f64,
        x: Option<&[f64]>,
    ) -> std::result::Result<Vec<f64>, EvalError> {
        self.entries
            .iter()
            .enumerate()
            .map(|(k, e)| {
                e.eval(t, x).map_err(|mut err| {
                    err.entry = Some((k / self.cols, k % self.cols));
                    err
                })
            })
            .collect()
    }
}

fn at_entry(mut e: SourceError, i: usize, j: usize) -> Error {
    e.message = format!("{} in entry ({i}, {j})", e.message);
    Error::Source(e)
}
