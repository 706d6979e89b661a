//! Dense row-major f64 matrices.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// A dense `rows x cols` matrix of f64 values, stored row-major.
///
/// Scalars are `1x1`, per-example columns are `n x 1`. Values are expected to
/// stay finite; [`Tensor::check_finite`] is the guard used at subsystem
/// boundaries (losses, optimizer steps, environment observations).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Tensor {
    /// Builds a tensor from row-major data; the length must equal `rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::Shape {
                op: "from_vec",
                details: format!("{}x{} with {} values", rows, cols, data.len()),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// An all-zero `rows x cols` tensor.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// A `1x1` tensor holding one value.
    pub fn scalar(v: f64) -> Self {
        Self { rows: 1, cols: 1, data: vec![v] }
    }

    /// A `1xn` row built from a slice.
    pub fn row_vector(v: &[f64]) -> Self {
        Self { rows: 1, cols: v.len(), data: v.to_vec() }
    }

    /// Stacks equal-length rows into an `n x m` tensor.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map(|r| r.len()).unwrap_or(0);
        if n == 0 || m == 0 || rows.iter().any(|r| r.len() != m) {
            return Err(Error::Shape { op: "from_rows", details: "empty or ragged rows".into() });
        }
        let mut data = Vec::with_capacity(n * m);
        for r in rows {
            data.extend_from_slice(r);
        }
        Ok(Self { rows: n, cols: m, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Row `i` as a slice.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    /// The single value of a `1x1` tensor.
    pub fn item(&self) -> f64 {
        debug_assert!(self.rows == 1 && self.cols == 1, "item() on {}x{}", self.rows, self.cols);
        self.data[0]
    }

    /// Errors if any entry is NaN or infinite; `context` names the caller.
    pub fn check_finite(&self, context: &str) -> Result<()> {
        if self.data.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite(context.to_string()))
        }
    }
}
