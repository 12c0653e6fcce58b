//! Small dense linear-algebra helpers shared by the analysis modules.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use nalgebra::{DMatrix, DVector};

/// The canonical symplectic matrix `[[0, I], [-I, 0]]` of size `2m`.
pub fn symplectic_unit(m: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        j[(i, m + i)] = 1.0;
        j[(m + i, i)] = -1.0;
    }
    j
}

/// Singular values in decreasing order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Number of singular values above `rel_tol · σ_max`.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    let s = singular_values(m);
    match s.first() {
        Some(&max) if max > 0.0 => s.iter().filter(|&&x| x > rel_tol * max).count(),
        _ => 0,
    }
}

/// 2-norm condition number; infinite for singular or empty input.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&max), Some(&min)) if min > 0.0 && s.len() == m.nrows().min(m.ncols()) => max / min,
        _ => f64::INFINITY,
    }
}

pub fn determinant(m: &DMatrix<f64>) -> f64 {
    m.clone().lu().determinant()
}

/// Solves `Y x = rhs` after scaling rows and columns of `Y` to unit max-norm.
///
/// Keeps graded systems (entries spanning many orders of magnitude) solvable
/// to componentwise accuracy.
pub fn equilibrated_solve(y: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = y.nrows();
    let mut scaled = y.clone();
    let mut row_scale = DVector::from_element(n, 1.0);
    for i in 0..n {
        let m = scaled.row(i).amax();
        if m == 0.0 {
            return None;
        }
        row_scale[i] = 1.0 / m;
        scaled.row_mut(i).scale_mut(1.0 / m);
    }
    let mut col_scale = DVector::from_element(n, 1.0);
    for j in 0..n {
        let m = scaled.column(j).amax();
        if m == 0.0 {
            return None;
        }
        col_scale[j] = 1.0 / m;
        scaled.column_mut(j).scale_mut(1.0 / m);
    }
    let mut b = rhs.clone();
    for i in 0..n {
        b.row_mut(i).scale_mut(row_scale[i]);
    }
    let mut x = scaled.lu().solve(&b)?;
    for j in 0..n {
        x.row_mut(j).scale_mut(col_scale[j]);
    }
    Some(x)
}

/// Row-major fixed-decimal dump, one matrix row per line.
pub fn format_matrix(m: &DMatrix<f64>, decimals: usize) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{:.*}", decimals, m[(i, j)]);
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn symplectic_unit_squares_to_minus_identity() {
        let j = symplectic_unit(3);
        assert_eq!(&j * &j, -DMatrix::<f64>::identity(6, 6));
    }

    #[test]
    fn rank_of_repeated_columns() {
        let m = dmatrix![1.0, 1.0; 2.0, 2.0; 3.0, 3.0];
        assert_eq!(numerical_rank(&m, 1e-8), 1);
        assert_eq!(condition_number(&m), f64::INFINITY);
    }

    #[test]
    fn graded_solve() {
        let s: f64 = 1e-5;
        let y = dmatrix![-s * s * s / 6.0, s * s / 2.0; -s * s / 2.0, s];
        let x_true = dmatrix![3.0; -7.0];
        let rhs = &y * &x_true;
        let x = equilibrated_solve(&y, &rhs).unwrap();
        assert!((x[(0, 0)] - 3.0).abs() < 1e-6);
        assert!((x[(1, 0)] + 7.0).abs() < 1e-6);
    }

    #[test]
    fn matrix_dump() {
        assert_eq!(format_matrix(&dmatrix![1.0, -0.5], 2), "1.00 -0.50\n");
    }
}
