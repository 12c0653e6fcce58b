//! Matrices whose entries are polynomials in the time parameter.
//!
//! Coefficients are stored lowest degree first. Trailing zero matrices are
//! stripped on construction, so the zero polynomial has no coefficients and
//! every other polynomial has a non-zero leading coefficient.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixPolynomial {
    rows: usize,
    cols: usize,
    coeffs: Vec<DMatrix<f64>>,
}

impl MatrixPolynomial {
    /// Builds a polynomial from degree-indexed coefficients.
    pub fn new(rows: usize, cols: usize, coeffs: Vec<DMatrix<f64>>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument("matrix polynomial must have positive shape"));
        }
        for c in &coeffs {
            if c.shape() != (rows, cols) {
                return Err(Error::Shape {
                    context: "matrix polynomial coefficient",
                    expected: (rows, cols),
                    found: c.shape(),
                });
            }
        }
        Ok(Self::normalized(rows, cols, coeffs))
    }

    fn normalized(rows: usize, cols: usize, mut coeffs: Vec<DMatrix<f64>>) -> Self {
        while coeffs.last().is_some_and(|c| c.iter().all(|&x| x == 0.0)) {
            coeffs.pop();
        }
        Self { rows, cols, coeffs }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, coeffs: Vec::new() }
    }

    pub fn constant(m: DMatrix<f64>) -> Self {
        let (rows, cols) = m.shape();
        Self::normalized(rows, cols, vec![m])
    }

    pub fn identity(n: usize) -> Self {
        Self::constant(DMatrix::identity(n, n))
    }

    /// A 1×1 polynomial from scalar coefficients, lowest degree first.
    pub fn scalar(coeffs: &[f64]) -> Self {
        Self::normalized(1, 1, coeffs.iter().map(|&c| DMatrix::from_element(1, 1, c)).collect())
    }

    /// An n×1 polynomial from a list of vector coefficients, lowest degree first.
    pub fn column(n: usize, coeffs: &[&[f64]]) -> Result<Self> {
        let mats = coeffs
            .iter()
            .map(|c| {
                if c.len() != n {
                    Err(Error::Shape { context: "vector coefficient", expected: (n, 1), found: (c.len(), 1) })
                } else {
                    Ok(DMatrix::from_column_slice(n, 1, c))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, 1, mats)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[DMatrix<f64>] {
        &self.coeffs
    }

    /// Horner evaluation.
    pub fn eval(&self, t: f64) -> DMatrix<f64> {
        let mut acc = DMatrix::zeros(self.rows, self.cols);
        for c in self.coeffs.iter().rev() {
            acc *= t;
            acc += c;
        }
        acc
    }

    /// Scalar value of a 1×1 polynomial.
    pub fn eval_scalar(&self, t: f64) -> f64 {
        debug_assert_eq!(self.shape(), (1, 1));
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c[(0, 0)])
    }

    pub fn derivative(&self) -> Self {
        let coeffs = self.coeffs.iter().enumerate().skip(1).map(|(d, c)| c * d as f64).collect();
        Self::normalized(self.rows, self.cols, coeffs)
    }

    pub fn nth_derivative(&self, m: usize) -> Self {
        (0..m).fold(self.clone(), |p, _| p.derivative())
    }

    /// Coefficients of `s ↦ P(t + s)` up to and including `s^order`.
    ///
    /// Entry `m` equals `P^(m)(t) / m!`.
    pub fn taylor(&self, t: f64, order: usize) -> Vec<DMatrix<f64>> {
        let deg = self.coeffs.len();
        let mut out = Vec::with_capacity(order + 1);
        for m in 0..=order {
            let mut acc = DMatrix::zeros(self.rows, self.cols);
            if m < deg {
                // Σ_{d ≥ m} binom(d, m) c_d t^(d-m), by Horner in t.
                for d in (m..deg).rev() {
                    acc *= t;
                    acc += &self.coeffs[d] * binomial(d, m);
                }
            }
            out.push(acc);
        }
        out
    }

    pub fn transpose(&self) -> Self {
        Self {
            rows: self.cols,
            cols: self.rows,
            coeffs: self.coeffs.iter().map(|c| c.transpose()).collect(),
        }
    }

    /// `(P + Pᵀ) / 2`, coefficient by coefficient.
    pub fn symmetrized(&self) -> Self {
        assert_eq!(self.rows, self.cols, "symmetrization needs a square polynomial");
        let coeffs = self.coeffs.iter().map(|c| (c + c.transpose()) * 0.5).collect();
        Self::normalized(self.rows, self.cols, coeffs)
    }

    /// Exact coefficient-wise symmetry.
    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols && self.coeffs.iter().all(|c| *c == c.transpose())
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self::normalized(self.rows, self.cols, self.coeffs.iter().map(|c| c * factor).collect())
    }

    /// Polynomial product with a scalar polynomial `p` (1×1).
    pub fn scale_by(&self, p: &MatrixPolynomial) -> Self {
        assert_eq!(p.shape(), (1, 1), "scalar polynomial expected");
        if self.is_zero() || p.is_zero() {
            return Self::zeros(self.rows, self.cols);
        }
        let mut coeffs = vec![DMatrix::zeros(self.rows, self.cols); self.coeffs.len() + p.coeffs.len() - 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            for (j, s) in p.coeffs.iter().enumerate() {
                coeffs[i + j] += c * s[(0, 0)];
            }
        }
        Self::normalized(self.rows, self.cols, coeffs)
    }

    /// `t ↦ P(alpha + beta·t)`.
    pub fn compose_affine(&self, alpha: f64, beta: f64) -> Self {
        let line = MatrixPolynomial::scalar(&[alpha, beta]);
        let mut acc = Self::zeros(self.rows, self.cols);
        for c in self.coeffs.iter().rev() {
            acc = &acc.scale_by(&line) + &Self::constant(c.clone());
        }
        acc
    }

    /// Largest absolute coefficient entry.
    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().flat_map(|c| c.iter()).fold(0.0_f64, |m, &x| m.max(x.abs()))
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl Add for &MatrixPolynomial {
    type Output = MatrixPolynomial;

    fn add(self, rhs: &MatrixPolynomial) -> MatrixPolynomial {
        assert_eq!(self.shape(), rhs.shape(), "polynomial shapes differ");
        let len = self.coeffs.len().max(rhs.coeffs.len());
        let coeffs = (0..len)
            .map(|d| match (self.coeffs.get(d), rhs.coeffs.get(d)) {
                (Some(x), Some(y)) => x + y,
                (Some(x), None) => x.clone(),
                (None, Some(y)) => y.clone(),
                (None, None) => unreachable!(),
            })
            .collect();
        MatrixPolynomial::normalized(self.rows, self.cols, coeffs)
    }
}

impl Neg for &MatrixPolynomial {
    type Output = MatrixPolynomial;

    fn neg(self) -> MatrixPolynomial {
        self.scale(-1.0)
    }
}

impl Sub for &MatrixPolynomial {
    type Output = MatrixPolynomial;

    fn sub(self, rhs: &MatrixPolynomial) -> MatrixPolynomial {
        self + &(-rhs)
    }
}

impl Mul for &MatrixPolynomial {
    type Output = MatrixPolynomial;

    fn mul(self, rhs: &MatrixPolynomial) -> MatrixPolynomial {
        assert_eq!(self.cols, rhs.rows, "polynomial product shape mismatch");
        if self.is_zero() || rhs.is_zero() {
            return MatrixPolynomial::zeros(self.rows, rhs.cols);
        }
        let mut coeffs = vec![DMatrix::zeros(self.rows, rhs.cols); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, x) in self.coeffs.iter().enumerate() {
            for (j, y) in rhs.coeffs.iter().enumerate() {
                coeffs[i + j] += x * y;
            }
        }
        MatrixPolynomial::normalized(self.rows, rhs.cols, coeffs)
    }
}

/// Cauchy product of two truncated matrix power series.
pub(crate) fn series_mul(x: &[DMatrix<f64>], y: &[DMatrix<f64>], order: usize) -> Vec<DMatrix<f64>> {
    let (r, c) = (x[0].nrows(), y[0].ncols());
    (0..=order)
        .map(|m| {
            let mut acc = DMatrix::zeros(r, c);
            for l in 0..=m {
                if l < x.len() && m - l < y.len() {
                    acc += &x[l] * &y[m - l];
                }
            }
            acc
        })
        .collect()
}

/// Power series of `P(t+s)^{-1}` given the Taylor coefficients of `P`.
pub(crate) fn series_inverse(p: &[DMatrix<f64>], order: usize, t: f64) -> Result<Vec<DMatrix<f64>>> {
    let x0 = p[0].clone().try_inverse().ok_or(Error::SingularLeading { t })?;
    let mut out: Vec<DMatrix<f64>> = Vec::with_capacity(order + 1);
    out.push(x0.clone());
    for m in 1..=order {
        let mut acc = DMatrix::zeros(x0.nrows(), x0.ncols());
        for l in 1..=m.min(p.len() - 1) {
            acc += &p[l] * &out[m - l];
        }
        out.push(-(&x0 * acc));
    }
    Ok(out)
}
