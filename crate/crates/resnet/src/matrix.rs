//! Dense row-major matrix. Rows index graph nodes throughout the crate, so
//! row access (feature distances, embedding lookups) is the hot path.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |v| v.len());
        debug_assert!(rows.iter().all(|v| v.len() == c));
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            data.extend_from_slice(&row);
        }
        Matrix { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[f64]) {
        debug_assert_eq!(v.len(), self.rows);
        for (i, &x) in v.iter().enumerate() {
            self.set(i, j, x);
        }
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Squared Euclidean distance between rows s and t.
    #[inline]
    pub fn row_dist_sq(&self, s: usize, t: usize) -> f64 {
        let a = self.row(s);
        let b = self.row(t);
        let mut acc = 0.0;
        for k in 0..self.cols {
            let d = a[k] - b[k];
            acc += d * d;
        }
        acc
    }

    /// Tr(X^T X) = sum of squares of all entries.
    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn expect_rows(&self, n: usize) -> Result<()> {
        if self.rows != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.rows,
            });
        }
        Ok(())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn mean(a: &[f64]) -> f64 {
    if a.is_empty() {
        0.0
    } else {
        a.iter().sum::<f64>() / a.len() as f64
    }
}

/// Subtract the mean in place (projection onto the complement of all-ones).
pub fn center(a: &mut [f64]) {
    let m = mean(a);
    for v in a.iter_mut() {
        *v -= m;
    }
}

pub fn scale(a: &mut [f64], s: f64) {
    for v in a.iter_mut() {
        *v *= s;
    }
}

pub fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
