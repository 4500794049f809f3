//! Small dense row-major matrix.
//!
//! Model parameters at desk scale are at most a few thousand on a side, so a
//! flat `Vec` with row slicing is all the sampler needs.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch(format!(
                "row {bad} has {} columns, expected {cols}",
                rows[bad].len()
            )));
        }
        let n = rows.len();
        Ok(Self {
            rows: n,
            cols,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn set_row(&mut self, i: usize, values: &[T]) {
        self.row_mut(i).copy_from_slice(values);
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks(self.cols.max(1)).take(self.rows)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        self.iter_rows().map(<[T]>::to_vec).collect()
    }

    pub fn push_row(&mut self, values: &[T]) {
        assert_eq!(values.len(), self.cols, "push_row: wrong width");
        self.data.extend_from_slice(values);
        self.rows += 1;
    }

    /// Appends a column filled with `fill`.
    pub fn push_col(&mut self, fill: T) {
        let mut data = Vec::with_capacity(self.rows * (self.cols + 1));
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
            data.push(fill);
        }
        self.cols += 1;
        self.data = data;
    }

    /// Keeps only the columns for which `keep` is true.
    pub fn retain_cols(&mut self, keep: &[bool]) {
        assert_eq!(keep.len(), self.cols);
        let cols = keep.iter().filter(|&&k| k).count();
        let mut data = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            data.extend(
                self.row(i)
                    .iter()
                    .zip(keep)
                    .filter(|(_, &k)| k)
                    .map(|(&x, _)| x),
            );
        }
        self.cols = cols;
        self.data = data;
    }

    pub fn retain_rows(&mut self, keep: &[bool]) {
        assert_eq!(keep.len(), self.rows);
        let cols = self.cols;
        let mut data = Vec::with_capacity(self.data.len());
        for (i, _) in keep.iter().enumerate().filter(|(_, &k)| k) {
            data.extend_from_slice(&self.data[i * cols..(i + 1) * cols]);
        }
        self.rows = keep.iter().filter(|&&k| k).count();
        self.data = data;
    }

    /// `self · rhs`.
    pub fn matmul(&self, rhs: &Matrix<T>) -> Result<Matrix<T>> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let o = out.row_mut(i);
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == T::zero() {
                    continue;
                }
                for (dst, &b) in o.iter_mut().zip(rhs.row(k)) {
                    *dst += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Row vector times matrix.
    pub fn vec_mul(v: &[T], m: &Matrix<T>) -> Result<Vec<T>> {
        if v.len() != m.rows {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} times {}x{}",
                v.len(),
                m.rows,
                m.cols
            )));
        }
        let mut out = vec![T::zero(); m.cols];
        for (k, &a) in v.iter().enumerate() {
            if a == T::zero() {
                continue;
            }
            for (dst, &b) in out.iter_mut().zip(m.row(k)) {
                *dst += a * b;
            }
        }
        Ok(out)
    }

    pub fn count_positive(&self) -> usize {
        self.data.iter().filter(|&&x| x > T::zero()).count()
    }

    pub fn max_abs_diff(&self, other: &Matrix<T>) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max)
    }

    pub fn cast<U: Real>(&self) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| U::of(x.as_f64())).collect(),
        }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Binary mask stored as one byte per entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mask {
    rows: usize,
    cols: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            bits: vec![false; rows * cols],
        }
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            bits: vec![true; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<bool>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged mask rows".into()));
        }
        let n = rows.len();
        Ok(Self {
            rows: n,
            cols,
            bits: rows.into_iter().flatten().collect(),
        })
    }

    /// Mask of strictly positive entries of `m`.
    pub fn support_of<T: Real>(m: &Matrix<T>) -> Self {
        Self {
            rows: m.rows(),
            cols: m.cols(),
            bits: m.as_slice().iter().map(|&x| x > T::zero()).collect(),
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        self.bits[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[bool] {
        &self.bits[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [bool] {
        &mut self.bits[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_sum(&self, i: usize) -> usize {
        self.row(i).iter().filter(|&&b| b).count()
    }

    pub fn col_sum(&self, j: usize) -> usize {
        (0..self.rows).filter(|&i| self.get(i, j)).count()
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn to_rows(&self) -> Vec<Vec<bool>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn push_row(&mut self, values: &[bool]) {
        assert_eq!(values.len(), self.cols);
        self.bits.extend_from_slice(values);
        self.rows += 1;
    }

    pub fn push_col(&mut self, fill: bool) {
        let mut bits = Vec::with_capacity(self.rows * (self.cols + 1));
        for i in 0..self.rows {
            bits.extend_from_slice(self.row(i));
            bits.push(fill);
        }
        self.cols += 1;
        self.bits = bits;
    }

    pub fn retain_cols(&mut self, keep: &[bool]) {
        assert_eq!(keep.len(), self.cols);
        let cols = keep.iter().filter(|&&k| k).count();
        let mut bits = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            bits.extend(self.row(i).iter().zip(keep).filter(|(_, &k)| k).map(|(&b, _)| b));
        }
        self.cols = cols;
        self.bits = bits;
    }

    pub fn retain_rows(&mut self, keep: &[bool]) {
        assert_eq!(keep.len(), self.rows);
        let cols = self.cols;
        let mut bits = Vec::with_capacity(self.bits.len());
        for (i, _) in keep.iter().enumerate().filter(|(_, &k)| k) {
            bits.extend_from_slice(&self.bits[i * cols..(i + 1) * cols]);
        }
        self.rows = keep.iter().filter(|&&k| k).count();
        self.bits = bits;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_small() {
        let a = Matrix::from_rows(vec![vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        let b = Matrix::from_rows(vec![vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]]).unwrap();
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.to_rows(), vec![vec![5.0, 2.0, 1.0], vec![2.0, 1.0, 0.0]]);
        assert!(b.matmul(&a).is_err());
    }

    #[test]
    fn retain_and_push_cols() {
        let mut m: Matrix<f64> = Matrix::from_fn(2, 3, |i, j| (i * 3 + j) as f64);
        m.retain_cols(&[true, false, true]);
        assert_eq!(m.to_rows(), vec![vec![0.0, 2.0], vec![3.0, 5.0]]);
        m.push_col(9.0);
        assert_eq!(m.row(1), &[3.0, 5.0, 9.0]);

        let mut mask = Mask::ones(2, 2);
        mask.set(0, 1, false);
        mask.push_col(false);
        mask.retain_cols(&[false, true, true]);
        assert_eq!(mask.to_rows(), vec![vec![false, false], vec![true, false]]);
    }
}
