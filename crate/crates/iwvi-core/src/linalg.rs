//! Minimal dense linear algebra: an upper-triangular scale factor and a
//! small row-major matrix. Dimensions here are desk-scale (d up to a few
//! hundred), so everything is plain loops over `Vec<f64>`.

// Resolves float math on targets whose crate graph excludes std.
#[allow(unused_imports)]
use crate::fmath::F64Math;
use crate::Error;
use alloc::vec;
use alloc::vec::Vec;

/// Upper-triangular d×d matrix in packed row-major storage
/// (row i holds entries A[i][i..d]).
#[derive(Debug, Clone, PartialEq)]
pub struct UpperTriangular {
    dim: usize,
    data: Vec<f64>,
}

impl UpperTriangular {
    pub fn zeros(dim: usize) -> Self {
        UpperTriangular {
            dim,
            data: vec![0.0; dim * (dim + 1) / 2],
        }
    }

    pub fn scaled_identity(dim: usize, scale: f64) -> Self {
        let mut t = Self::zeros(dim);
        for i in 0..dim {
            *t.get_mut(i, i) = scale;
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= j && j < self.dim);
        // offset of row i = i*d - i*(i-1)/2
        i * self.dim - i * (i.wrapping_sub(1)) / 2 + (j - i)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i <= j {
            self.data[self.idx(i, j)]
        } else {
            0.0
        }
    }

    #[inline]
    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        let k = self.idx(i, j);
        &mut self.data[k]
    }

    /// y = Aᵀ x.
    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut y = vec![0.0; d];
        for i in 0..d {
            let xi = x[i];
            for j in i..d {
                y[j] += self.get(i, j) * xi;
            }
        }
        y
    }

    /// Solve Aᵀ y = b (forward substitution; Aᵀ is lower-triangular).
    pub fn solve_t(&self, b: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut y = vec![0.0; d];
        for i in 0..d {
            let mut s = b[i];
            for j in 0..i {
                s -= self.get(j, i) * y[j];
            }
            y[i] = s / self.get(i, i);
        }
        y
    }

    /// Solve A y = b (back substitution).
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut y = vec![0.0; d];
        for i in (0..d).rev() {
            let mut s = b[i];
            for j in i + 1..d {
                s -= self.get(i, j) * y[j];
            }
            y[i] = s / self.get(i, i);
        }
        y
    }

    /// ln |det A| = Σ ln A_ii (diagonal assumed positive).
    pub fn log_det(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i).ln()).sum()
    }
}

/// Small dense row-major matrix, used for oracle moments and estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn frobenius_distance(&self, other: &Mat) -> Result<f64, Error> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.cols,
                got: other.rows * other.cols,
            });
        }
        let s: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Ok(s.sqrt())
    }
}

impl core::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
