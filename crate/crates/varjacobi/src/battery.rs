//! Seeded random problem families used by `verify` and the test suites.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use varjacobi_core::{MatrixPolynomial, ScalarProblem1D, TestField, VariationalProblem};

pub const DEFAULT_SEED: u64 = 20_240_917;

/// Shift subtracted from `M_00` of the first-order battery members (as a
/// multiple of the identity) to force a conjugate point.
const BAND_SHIFT: f64 = 25.0;

/// Shift subtracted from `P_0`; larger, so several conjugate points appear.
fn scalar_shift(order: usize) -> f64 {
    match order {
        1 => 60.0,
        2 => 8.0e3,
        _ => 1.5e6,
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| scale * rng.random_range(-1.0..1.0))
}

/// Polynomial in `t − a` with coefficients uniform in `[−scale, scale]`.
pub fn random_polynomial(
    rng: &mut ChaCha8Rng,
    rows: usize,
    cols: usize,
    degree: usize,
    scale: f64,
    a: f64,
) -> MatrixPolynomial {
    let coeffs = (0..=degree).map(|_| random_matrix(rng, rows, cols, scale)).collect();
    MatrixPolynomial::new(rows, cols, coeffs).expect("shapes agree").compose_affine(-a, 1.0)
}

fn random_symmetric(rng: &mut ChaCha8Rng, n: usize, degree: usize, scale: f64, a: f64) -> MatrixPolynomial {
    random_polynomial(rng, n, n, degree, scale, a).symmetrized()
}

/// `I + E(t)` with `|E| < 1` entrywise-summed on intervals of length ≤ 1.5.
fn random_leading(rng: &mut ChaCha8Rng, n: usize, a: f64) -> MatrixPolynomial {
    let coeffs: Vec<DMatrix<f64>> = (0..=2)
        .map(|d| {
            let m = random_matrix(rng, n, n, 0.25 / n as f64 / 1.5f64.powi(d));
            (&m + m.transpose()) * 0.5
        })
        .collect();
    let e = MatrixPolynomial::new(n, n, coeffs).expect("shapes agree").compose_affine(-a, 1.0);
    &MatrixPolynomial::identity(n) + &e
}

fn random_interval(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let a = rng.random_range(-1.0..1.0);
    (a, a + rng.random_range(0.8..1.5))
}

/// Band problems with `k = 1 + p mod 3`, `n = 1 + ⌊p/3⌋ mod 3`, coefficient
/// degree ≤ 4 and `M_kk = I + E` positive definite. Every other first-order
/// problem has `M_00` shifted down so that it has a conjugate point; higher
/// orders are left alone because their frames grow exponentially past a
/// conjugate point and the absolute drift bound stops being meaningful.
pub fn band_battery(seed: u64, count: usize) -> Vec<VariationalProblem> {
    let mut rng = rng(seed);
    (0..count)
        .map(|p| {
            let k = 1 + p % 3;
            let n = 1 + (p / 3) % 3;
            let interval = random_interval(&mut rng);
            let a = interval.0;
            let mut diag: Vec<MatrixPolynomial> =
                (0..k).map(|_| random_symmetric(&mut rng, n, 4, 1.0, a)).collect();
            diag.push(random_leading(&mut rng, n, a));
            let sup = (0..k).map(|_| random_polynomial(&mut rng, n, n, 4, 1.0, a)).collect();
            if k == 1 && p % 2 == 1 {
                diag[0] = &diag[0] - &MatrixPolynomial::identity(n).scale(BAND_SHIFT);
            }
            VariationalProblem::new(k, n, interval, diag, sup).expect("battery problem is well formed")
        })
        .collect()
}

/// `count` admissible fields `(t−a)ᵏ (b−t)ᵏ q(t)` with `q` of degree ≤ 3.
pub fn random_fields(
    rng: &mut ChaCha8Rng,
    dim: usize,
    order: usize,
    interval: (f64, f64),
    count: usize,
) -> Vec<TestField> {
    (0..count)
        .map(|_| {
            let degree = rng.random_range(0..=3);
            let q = random_polynomial(rng, dim, 1, degree, 1.0, interval.0);
            TestField::new(q, order, interval).expect("column polynomial")
        })
        .collect()
}

/// Scalar problems `∫ Σ P_l (h⁽ˡ⁾)²` with `P_k ≥ 1` and the lower `P_l`
/// positive, hence free of conjugate points.
pub fn scalar_battery(seed: u64, count: usize) -> Vec<ScalarProblem1D> {
    let mut rng = rng(seed ^ 0x5ca1a7);
    (0..count)
        .map(|p| {
            let k = 1 + p % 3;
            let interval = random_interval(&mut rng);
            let coeffs = (0..=k)
                .map(|l| {
                    let c0 = if l == k { rng.random_range(1.0..2.0) } else { rng.random_range(0.6..1.2) };
                    let c1 = rng.random_range(-0.1..0.1);
                    let c2 = rng.random_range(-0.1..0.1);
                    MatrixPolynomial::scalar(&[c0, c1, c2]).compose_affine(-interval.0, 1.0)
                })
                .collect();
            ScalarProblem1D::new(k, interval, coeffs).expect("battery problem is well formed")
        })
        .collect()
}

/// Same problem with `P_0` lowered so that a conjugate point appears.
pub fn shifted_scalar(sp: &ScalarProblem1D) -> ScalarProblem1D {
    let k = sp.order();
    let mut coeffs: Vec<MatrixPolynomial> = (0..=k).map(|l| sp.coeff(l).clone()).collect();
    coeffs[0] = &coeffs[0] - &MatrixPolynomial::scalar(&[scalar_shift(k)]);
    ScalarProblem1D::new(k, sp.interval(), coeffs).expect("shift keeps the problem well formed")
}

/// Band form of a scalar problem: `M_ll = 2 P_l`, no couplings.
pub fn scalar_as_band(sp: &ScalarProblem1D) -> VariationalProblem {
    let k = sp.order();
    let diag = (0..=k).map(|l| sp.coeff(l).scale(2.0)).collect();
    let sup = (0..k).map(|_| MatrixPolynomial::zeros(1, 1)).collect();
    VariationalProblem::new(k, 1, sp.interval(), diag, sup).expect("scalar coefficients are 1x1")
}

/// `∫ ḣ² − ω² h²` on `[a, b]`: conjugate points at `a + jπ/ω`.
pub fn harmonic(omega: f64, interval: (f64, f64)) -> VariationalProblem {
    VariationalProblem::new(
        1,
        1,
        interval,
        vec![MatrixPolynomial::scalar(&[-2.0 * omega * omega]), MatrixPolynomial::scalar(&[2.0])],
        vec![MatrixPolynomial::zeros(1, 1)],
    )
    .expect("harmonic problem is well formed")
}

/// Harmonic problems on `[0, b]` for `b` on both sides of `π`.
pub fn harmonic_family() -> Vec<VariationalProblem> {
    [2.0, 2.8, 3.0, 3.1, 3.2, 3.3, 3.6, 4.0, 5.0, 7.0].iter().map(|&b| harmonic(1.0, (0.0, b))).collect()
}
