//! Small dense linear algebra: a row-major matrix, the cyclic Jacobi
//! eigensolver for symmetric matrices, and a pivoted linear solve.

use serde::Serialize;
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LinalgError {
    #[error("matrix is not square ({0} × {1})")]
    NotSquare(usize, usize),
    #[error("matrix is not symmetric at ({0}, {1})")]
    NotSymmetric(usize, usize),
    #[error("matrix is singular to working precision")]
    Singular,
    #[error("dimension mismatch")]
    DimensionMismatch,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RealMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> RealMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length does not match shape");
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map(Vec::len).unwrap_or(0);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self { rows: r, cols: c, data: rows.concat() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] = out[(i, j)] + a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data.iter().zip(&other.data).map(|(a, b)| (*a - *b).abs()).fold(T::zero(), T::max)
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        self.data.chunks(self.cols.max(1)).map(<[T]>::to_vec).collect()
    }

    fn check_symmetric(&self) -> Result<(), LinalgError> {
        if self.rows != self.cols {
            return Err(LinalgError::NotSquare(self.rows, self.cols));
        }
        let scale = self.data.iter().fold(T::one(), |m, v| m.max(v.abs()));
        let tol = T::lit(1e-9) * scale;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if (self[(i, j)] - self[(j, i)]).abs() > tol {
                    return Err(LinalgError::NotSymmetric(i, j));
                }
            }
        }
        Ok(())
    }
}

impl<T> std::ops::Index<(usize, usize)> for RealMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for RealMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigenvalues in descending order with eigenvectors as matching columns.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricEigen<T> {
    pub values: Vec<T>,
    pub vectors: RealMatrix<T>,
}

impl<T: Scalar> SymmetricEigen<T> {
    /// V · diag(values) · Vᵀ
    pub fn reconstruct(&self) -> RealMatrix<T> {
        let n = self.values.len();
        let mut out = RealMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut s = T::zero();
                for k in 0..n {
                    s = s + self.vectors[(i, k)] * self.values[k] * self.vectors[(j, k)];
                }
                out[(i, j)] = s;
            }
        }
        out
    }
}

const JACOBI_MAX_SWEEPS: usize = 100;

fn off_diagonal_norm<T: Scalar>(a: &RealMatrix<T>) -> T {
    let n = a.rows();
    let mut s = T::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s = s + a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm is below
/// 1e−10 (relative to the matrix scale for large entries).
pub fn symmetric_eigen<T: Scalar>(m: &RealMatrix<T>) -> Result<SymmetricEigen<T>, LinalgError> {
    m.check_symmetric()?;
    let n = m.rows();
    let mut a = m.clone();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = (a[(i, j)] + a[(j, i)]) * T::lit(0.5);
            a[(i, j)] = avg;
            a[(j, i)] = avg;
        }
    }
    let mut v = RealMatrix::identity(n);
    let scale = a.as_slice().iter().fold(T::one(), |s, x| s.max(x.abs()));
    let tol = T::lit(1e-10).max(T::epsilon() * T::lit(64.0) * scale * T::of_usize(n.max(1)));
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a) <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let sign = if theta >= T::zero() { T::one() } else { -T::one() };
                let t = sign / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = T::zero();
                a[(q, p)] = T::zero();
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].partial_cmp(&a[(i, i)]).expect("finite eigenvalues").then(i.cmp(&j)));
    let values = order.iter().map(|&k| a[(k, k)]).collect();
    let mut vectors = RealMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        for r in 0..n {
            vectors[(r, col)] = v[(r, k)];
        }
    }
    Ok(SymmetricEigen { values, vectors })
}

/// Solves A X = B by Gaussian elimination with partial pivoting.
pub fn solve<T: Scalar>(a: &RealMatrix<T>, b: &RealMatrix<T>) -> Result<RealMatrix<T>, LinalgError> {
    let n = a.rows();
    if a.cols() != n {
        return Err(LinalgError::NotSquare(a.rows(), a.cols()));
    }
    if b.rows() != n {
        return Err(LinalgError::DimensionMismatch);
    }
    let m = b.cols();
    let mut a = a.clone();
    let mut x = b.clone();
    let scale = a.as_slice().iter().fold(T::zero(), |s, v| s.max(v.abs()));
    let tiny = scale * T::epsilon() * T::of_usize(n.max(1));
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[(i, col)].abs().partial_cmp(&a[(j, col)].abs()).expect("finite"))
            .expect("non-empty range");
        if a[(pivot, col)].abs() <= tiny {
            return Err(LinalgError::Singular);
        }
        if pivot != col {
            for k in 0..n {
                let tmp = a[(col, k)];
                a[(col, k)] = a[(pivot, k)];
                a[(pivot, k)] = tmp;
            }
            for k in 0..m {
                let tmp = x[(col, k)];
                x[(col, k)] = x[(pivot, k)];
                x[(pivot, k)] = tmp;
            }
        }
        let d = a[(col, col)];
        for r in (col + 1)..n {
            let f = a[(r, col)] / d;
            if f == T::zero() {
                continue;
            }
            for k in col..n {
                a[(r, k)] = a[(r, k)] - f * a[(col, k)];
            }
            for k in 0..m {
                x[(r, k)] = x[(r, k)] - f * x[(col, k)];
            }
        }
    }
    for col in (0..n).rev() {
        let d = a[(col, col)];
        for k in 0..m {
            let mut s = x[(col, k)];
            for j in (col + 1)..n {
                s = s - a[(col, j)] * x[(j, k)];
            }
            x[(col, k)] = s / d;
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_eigenvalues() {
        let e = symmetric_eigen(&RealMatrix::<f64>::identity(4)).unwrap();
        assert_eq!(e.values, vec![1.0; 4]);
    }

    #[test]
    fn two_by_two() {
        let m = RealMatrix::from_rows(&[vec![2.0f64, 1.0], vec![1.0, 2.0]]);
        let e = symmetric_eigen(&m).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v0 = (e.vectors[(0, 0)], e.vectors[(1, 0)]);
        let v1 = (e.vectors[(0, 1)], e.vectors[(1, 1)]);
        assert!((v0.0.abs() - h).abs() < 1e-14 && (v0.0 - v0.1).abs() < 1e-14);
        assert!((v1.0.abs() - h).abs() < 1e-14 && (v1.0 + v1.1).abs() < 1e-14);
    }

    #[test]
    fn rejects_asymmetric() {
        let m = RealMatrix::from_rows(&[vec![1.0f64, 2.0], vec![0.0, 1.0]]);
        assert_eq!(symmetric_eigen(&m).unwrap_err(), LinalgError::NotSymmetric(0, 1));
        let m = RealMatrix::from_rows(&[vec![1.0f64, 2.0]]);
        assert_eq!(symmetric_eigen(&m).unwrap_err(), LinalgError::NotSquare(1, 2));
    }

    #[test]
    fn solve_small_system() {
        let a = RealMatrix::from_rows(&[vec![0.0f64, 2.0], vec![3.0, 1.0]]);
        let b = RealMatrix::from_rows(&[vec![4.0], vec![5.0]]);
        let x = solve(&a, &b).unwrap();
        assert!((x[(0, 0)] - 1.0).abs() < 1e-15 && (x[(1, 0)] - 2.0).abs() < 1e-15);
        let s = RealMatrix::from_rows(&[vec![1.0f64, 2.0], vec![2.0, 4.0]]);
        assert_eq!(solve(&s, &b).unwrap_err(), LinalgError::Singular);
    }
}
