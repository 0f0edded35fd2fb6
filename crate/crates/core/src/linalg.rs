//! Small dense matrices.
//!
//! State spaces here have a handful of states, so everything is row-major
//! `Vec` storage with straightforward O(n^3) kernels.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
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

    pub fn from_diag(d: &[T]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    /// Builds a matrix from nested rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::validation("matrix", "ragged rows"));
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
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

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|x| x * s)
    }

    pub fn hadamard(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a * b)
                .collect(),
        }
    }

    /// `M x` for a column vector `x`.
    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(self.cols, x.len());
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    /// `x^T M` for a row vector `x`.
    pub fn vec_mul(&self, x: &[T]) -> Vec<T> {
        assert_eq!(self.rows, x.len());
        let mut out = vec![T::zero(); self.cols];
        for (i, &xi) in x.iter().enumerate() {
            for (o, &m) in out.iter_mut().zip(self.row(i)) {
                *o += xi * m;
            }
        }
        out
    }

    pub fn row_sums(&self) -> Vec<T> {
        (0..self.rows)
            .map(|i| self.row(i).iter().fold(T::zero(), |a, &b| a + b))
            .collect()
    }

    pub fn norm_1(&self) -> T {
        (0..self.cols)
            .map(|j| (0..self.rows).fold(T::zero(), |a, i| a + self[(i, j)].abs()))
            .fold(T::zero(), T::max)
    }

    pub fn norm_inf(&self) -> T {
        (0..self.rows)
            .map(|i| self.row(i).iter().fold(T::zero(), |a, &b| a + b.abs()))
            .fold(T::zero(), T::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|&x| x >= T::zero())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn powi(&self, n: u32) -> Self {
        assert!(self.is_square());
        let mut result = Self::identity(self.rows);
        let mut base = self.clone();
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                result = &result * &base;
            }
            base = &base * &base;
            k >>= 1;
        }
        result
    }

    /// LU factorization with partial pivoting.
    fn lu(&self) -> Result<(Matrix<T>, Vec<usize>)> {
        if !self.is_square() {
            return Err(Error::Numerical("LU of a non-square matrix".into()));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = self.norm_inf().max(T::min_positive_value());
        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|i| (i, a[(i, k)].abs()))
                .fold((k, -T::one()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot <= scale * T::epsilon() * T::lit(n as f64) {
                return Err(Error::Numerical("singular matrix".into()));
            }
            if p != k {
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            for i in (k + 1)..n {
                let f = a[(i, k)] / a[(k, k)];
                a[(i, k)] = f;
                for j in (k + 1)..n {
                    let akj = a[(k, j)];
                    a[(i, j)] -= f * akj;
                }
            }
        }
        Ok((a, perm))
    }

    /// Solves `M x = b`.
    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        let (lu, perm) = self.lu()?;
        Ok(lu_solve(&lu, &perm, b))
    }

    /// Solves `M X = B` column by column.
    pub fn solve_matrix(&self, b: &Matrix<T>) -> Result<Matrix<T>> {
        let (lu, perm) = self.lu()?;
        let n = self.rows;
        let mut out = Matrix::zeros(n, b.cols);
        for j in 0..b.cols {
            let col: Vec<T> = (0..n).map(|i| b[(i, j)]).collect();
            let x = lu_solve(&lu, &perm, &col);
            for i in 0..n {
                out[(i, j)] = x[i];
            }
        }
        Ok(out)
    }

    pub fn inverse(&self) -> Result<Matrix<T>> {
        self.solve_matrix(&Matrix::identity(self.rows))
    }

    /// Matrix exponential by scaling and squaring with the degree-13
    /// diagonal Padé approximant.
    pub fn expm(&self) -> Result<Matrix<T>> {
        assert!(self.is_square());
        let n = self.rows;
        if !self.is_finite() {
            return Err(Error::Numerical("expm of a non-finite matrix".into()));
        }
        const B: [f64; 14] = [
            64764752532480000.0,
            32382376266240000.0,
            7771770303897600.0,
            1187353796428800.0,
            129060195264000.0,
            10559470521600.0,
            670442572800.0,
            33522128640.0,
            1323241920.0,
            40840800.0,
            960960.0,
            16380.0,
            182.0,
            1.0,
        ];
        const THETA_13: f64 = 5.371920351148152;
        let norm = self.norm_1().to_f64().unwrap_or(f64::INFINITY);
        let s = if norm > THETA_13 {
            (norm / THETA_13).log2().ceil() as i32
        } else {
            0
        };
        let a = self.scale(T::lit(2f64.powi(-s)));
        let id = Matrix::identity(n);
        let a2 = &a * &a;
        let a4 = &a2 * &a2;
        let a6 = &a4 * &a2;
        let b = |k: usize| T::lit(B[k]);
        let u_inner = &(&(&a6.scale(b(13)) + &a4.scale(b(11))) + &a2.scale(b(9)));
        let u_tail = &(&(&(&a6.scale(b(7)) + &a4.scale(b(5))) + &a2.scale(b(3))) + &id.scale(b(1)));
        let u = &a * &(&(&a6 * u_inner) + u_tail);
        let v_inner = &(&(&a6.scale(b(12)) + &a4.scale(b(10))) + &a2.scale(b(8)));
        let v_tail = &(&(&(&a6.scale(b(6)) + &a4.scale(b(4))) + &a2.scale(b(2))) + &id.scale(b(0)));
        let v = &(&a6 * v_inner) + v_tail;
        let p = &v + &u;
        let q = &v - &u;
        let mut r = q.solve_matrix(&p)?;
        for _ in 0..s {
            r = &r * &r;
        }
        if !r.is_finite() {
            return Err(Error::Numerical("matrix exponential overflow".into()));
        }
        Ok(r)
    }

    pub fn cast<U: Scalar>(&self) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .map(|x| U::lit(x.to_f64().unwrap_or(f64::NAN)))
                .collect(),
        }
    }
}

fn lu_solve<T: Scalar>(lu: &Matrix<T>, perm: &[usize], b: &[T]) -> Vec<T> {
    let n = lu.rows;
    let mut x: Vec<T> = perm.iter().map(|&p| b[p]).collect();
    for i in 0..n {
        for k in 0..i {
            let l = lu[(i, k)];
            let xk = x[k];
            x[i] -= l * xk;
        }
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            let u = lu[(i, k)];
            let xk = x[k];
            x[i] -= u * xk;
        }
        x[i] /= lu[(i, i)];
    }
    x
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Scalar> Mul for &Matrix<T> {
    type Output = Matrix<T>;
    fn mul(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.cols, rhs.rows);
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl<T: Scalar> Add for &Matrix<T> {
    type Output = Matrix<T>;
    fn add(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect(),
        }
    }
}

impl<T: Scalar> Sub for &Matrix<T> {
    type Output = Matrix<T>;
    fn sub(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect(),
        }
    }
}

impl<T: fmt::Debug> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.data.chunks(self.cols.max(1))).finish()
    }
}

/// Sup-norm distance between two vectors.
pub fn max_abs_diff<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y).abs())
        .fold(T::zero(), T::max)
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}
