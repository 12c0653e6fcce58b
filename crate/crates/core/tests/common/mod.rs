//! Random problems and fields shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use varjacobi_core::{MatrixPolynomial, TestField, VariationalProblem};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-scale..scale))
}

pub fn random_polynomial(rng: &mut ChaCha8Rng, rows: usize, cols: usize, degree: usize, scale: f64) -> MatrixPolynomial {
    let coeffs = (0..=degree).map(|_| random_matrix(rng, rows, cols, scale)).collect();
    MatrixPolynomial::new(rows, cols, coeffs).unwrap()
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize, degree: usize, scale: f64) -> MatrixPolynomial {
    random_polynomial(rng, n, n, degree, scale).symmetrized()
}

/// Band problem on `interval` whose leading block stays close to `2I`;
/// `shift` is subtracted from `M_00` to provoke conjugate points.
pub fn random_problem(seed: u64, order: usize, dim: usize, interval: (f64, f64), shift: f64) -> VariationalProblem {
    let mut rng = rng(seed);
    let mut diag: Vec<MatrixPolynomial> = (0..order).map(|_| random_symmetric(&mut rng, dim, 2, 0.5)).collect();
    let lead = &MatrixPolynomial::identity(dim).scale(2.0) + &random_symmetric(&mut rng, dim, 1, 0.2 / dim as f64);
    diag.push(lead);
    diag[0] = &diag[0] - &MatrixPolynomial::identity(dim).scale(shift);
    let sup = (0..order).map(|_| random_polynomial(&mut rng, dim, dim, 2, 0.5)).collect();
    VariationalProblem::new(order, dim, interval, diag, sup).unwrap()
}

pub fn random_field(rng: &mut ChaCha8Rng, dim: usize, order: usize, interval: (f64, f64)) -> TestField {
    TestField::new(random_polynomial(rng, dim, 1, 3, 1.0), order, interval).unwrap()
}

pub fn constant(x: f64) -> MatrixPolynomial {
    MatrixPolynomial::scalar(&[x])
}

pub fn harmonic(omega: f64, interval: (f64, f64)) -> VariationalProblem {
    VariationalProblem::new(1, 1, interval, vec![constant(-2.0 * omega * omega), constant(2.0)], vec![constant(0.0)])
        .unwrap()
}

pub fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}
