//! Scalar abstraction and dense matrices over rung space.
//!
//! The recursions are integer identities, so the primary instantiation is
//! [`BigInt`]. The same code runs over `f64` for the floating-point path and
//! over [`BigRational`] where an α-basis expansion has fractional coefficients.

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
{
    fn from_i64(v: i64) -> Self;
    fn from_bigint(v: &BigInt) -> Self;
    fn to_f64(&self) -> f64;

    fn mul_ref(&self, other: &Self) -> Self {
        self.clone() * other.clone()
    }
}

impl Scalar for BigInt {
    fn from_i64(v: i64) -> Self {
        BigInt::from(v)
    }
    fn from_bigint(v: &BigInt) -> Self {
        v.clone()
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }
}

impl Scalar for BigRational {
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn from_bigint(v: &BigInt) -> Self {
        BigRational::from_integer(v.clone())
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }
}

impl Scalar for f64 {
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn from_bigint(v: &BigInt) -> Self {
        ToPrimitive::to_f64(v).unwrap_or(f64::NAN)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

/// Exact integer from a rational, if the denominator is one.
pub fn rational_to_integer(r: &BigRational) -> Option<BigInt> {
    r.is_integer().then(|| r.to_integer())
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + x.mul_ref(y))
}

pub fn axpy<T: Scalar>(alpha: &T, x: &[T], y: &mut [T]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi = yi.clone() + alpha.mul_ref(xi);
    }
}

pub fn scaled<T: Scalar>(alpha: &T, x: &[T]) -> Vec<T> {
    x.iter().map(|v| alpha.mul_ref(v)).collect()
}

pub fn convert_vec<S: Scalar, T: Scalar>(v: &[S], f: impl Fn(&S) -> T) -> Vec<T> {
    v.iter().map(f).collect()
}

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
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
            m.data[i * n + i] = T::one();
        }
        m
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

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// `a bᵀ`
    pub fn outer(a: &[T], b: &[T]) -> Self {
        Self::from_fn(a.len(), b.len(), |i, j| a[i].mul_ref(&b[j]))
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

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square() && (0..self.rows).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).fold(T::zero(), |acc, i| acc + self.get(i, i).clone())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let idx = i * other.cols + j;
                    out.data[idx] = out.data[idx].clone() + a.mul_ref(b);
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[T]) -> Result<Vec<T>> {
        if self.cols != v.len() {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: v.len(),
            });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a.clone() + b.clone())
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a.clone() - b.clone())
                .collect(),
        })
    }

    pub fn add_assign(&mut self, other: &Self) -> Result<()> {
        self.check_same_shape(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a = a.clone() + b.clone();
        }
        Ok(())
    }

    pub fn scale(&self, alpha: &T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| alpha.mul_ref(v)).collect(),
        }
    }

    /// Sum of squared entries (the squared norm of the matrix read as a state).
    pub fn frobenius_sq(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, v| acc + v.mul_ref(v))
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.cols,
                got: other.rows * other.cols,
            });
        }
        Ok(())
    }
}

/// Kronecker-style product on a two-rung window: `(A ⊗ B)[(a,b),(a',b')] = A[a][a'] B[b][b']`
/// with the left rung occupying the low bits of the window index.
pub fn window_kron<T: Scalar>(left: &Matrix<T>, right: &Matrix<T>) -> Matrix<T> {
    let d = left.rows();
    debug_assert!(left.is_square() && right.is_square() && right.rows() == d);
    let dim = d * d;
    Matrix::from_fn(dim, dim, |row, col| {
        let (a, b) = (row % d, row / d);
        let (ap, bp) = (col % d, col / d);
        left.get(a, ap).mul_ref(right.get(b, bp))
    })
}

/// Flatten a rung-pair matrix `V[a][b]` into a window vector indexed by `a + d·b`.
pub fn window_vec<T: Scalar>(block: &Matrix<T>) -> Vec<T> {
    let d = block.rows();
    let mut out = vec![T::zero(); d * d];
    for a in 0..d {
        for b in 0..d {
            out[a + d * b] = block.get(a, b).clone();
        }
    }
    out
}

/// Window vector of a product of two rung vectors.
pub fn window_product<T: Scalar>(left: &[T], right: &[T]) -> Vec<T> {
    let d = left.len();
    let mut out = vec![T::zero(); d * right.len()];
    for (b, rb) in right.iter().enumerate() {
        for (a, la) in left.iter().enumerate() {
            out[a + d * b] = la.mul_ref(rb);
        }
    }
    out
}
