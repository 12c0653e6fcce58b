//! Quadratic higher-order functionals with polynomial coefficients.
//!
//! The band normal form used everywhere else is
//!
//! ```text
//! L = ½ Σ_{i=0..k} h⁽ⁱ⁾ᵀ M_ii h⁽ⁱ⁾ + Σ_{i=0..k-1} h⁽ⁱ⁾ᵀ M_i(i+1) h⁽ⁱ⁺¹⁾
//! ```
//!
//! with every `M_ii` symmetric and `M_kk` positive definite on `[a, b]`.
//! [`RawCoefficients`] accepts couplings `(i, j)` for any `i ≤ j` and is
//! brought to band form by [`RawCoefficients::reduce_to_band`]; it uses the
//! same convention (diagonal blocks carry the factor ½, off-diagonal blocks
//! do not), so band-shaped raw input is a fixed point of the reduction.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hamiltonian::JetVector;
use crate::poly::MatrixPolynomial;

/// Common surface of the three coefficient representations, enough to
/// evaluate the functional by quadrature.
pub trait QuadraticFunctional {
    fn order(&self) -> usize;
    fn dim(&self) -> usize;
    fn interval(&self) -> (f64, f64);
    /// Symmetric bilinear form whose diagonal is the integrand `L`.
    fn bilinear_density(&self, t: f64, u: &JetVector, v: &JetVector) -> f64;
    /// Upper bound on the polynomial degree of any coefficient.
    fn coefficient_degree(&self) -> usize;

    fn density(&self, t: f64, jet: &JetVector) -> f64 {
        self.bilinear_density(t, jet, jet)
    }
}

fn check_interval(interval: (f64, f64)) -> Result<()> {
    if !(interval.0.is_finite() && interval.1.is_finite() && interval.0 < interval.1) {
        return Err(Error::InvalidArgument("interval must satisfy a < b"));
    }
    Ok(())
}

fn check_block(p: &MatrixPolynomial, n: usize) -> Result<()> {
    if p.shape() != (n, n) {
        return Err(Error::Shape { context: "coefficient block", expected: (n, n), found: p.shape() });
    }
    Ok(())
}

fn quad(u: &DVector<f64>, m: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    u.dot(&(m * v))
}

fn uniform_grid(interval: (f64, f64), points: usize) -> impl Iterator<Item = f64> {
    let (a, b) = interval;
    (0..points).map(move |i| if i + 1 == points { b } else { a + (b - a) * i as f64 / (points - 1) as f64 })
}

#[derive(Clone, Debug, PartialEq)]
pub struct VariationalProblem {
    order: usize,
    dim: usize,
    interval: (f64, f64),
    diag: Vec<MatrixPolynomial>,
    sup: Vec<MatrixPolynomial>,
    symmetrized: bool,
}

/// Outcome of the strong Legendre check on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub passed: bool,
    pub first_failure: Option<f64>,
    pub min_eigenvalue: f64,
    pub symmetric: bool,
}

/// Default number of grid points for the strong Legendre check.
pub const DEFAULT_VALIDATION_POINTS: usize = 257;

impl VariationalProblem {
    /// `diag` holds `M_00 … M_kk`, `sup` holds `M_01 … M_(k-1)k`.
    /// Diagonal blocks are replaced by their symmetric part.
    pub fn new(
        order: usize,
        dim: usize,
        interval: (f64, f64),
        diag: Vec<MatrixPolynomial>,
        sup: Vec<MatrixPolynomial>,
    ) -> Result<Self> {
        if order == 0 || dim == 0 {
            return Err(Error::InvalidArgument("order and dimension must be positive"));
        }
        check_interval(interval)?;
        if diag.len() != order + 1 || sup.len() != order {
            return Err(Error::InvalidArgument("expected k+1 diagonal and k super-diagonal blocks"));
        }
        for p in diag.iter().chain(&sup) {
            check_block(p, dim)?;
        }
        let symmetrized = diag.iter().any(|p| !p.is_symmetric());
        let diag = diag.iter().map(MatrixPolynomial::symmetrized).collect();
        Ok(Self { order, dim, interval, diag, sup, symmetrized })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    /// `M_ii`.
    pub fn diag(&self, i: usize) -> &MatrixPolynomial {
        &self.diag[i]
    }

    /// `M_i(i+1)`.
    pub fn sup(&self, i: usize) -> &MatrixPolynomial {
        &self.sup[i]
    }

    /// `M_kk`.
    pub fn leading(&self) -> &MatrixPolynomial {
        &self.diag[self.order]
    }

    /// True when some diagonal block had to be symmetrized on input.
    pub fn was_symmetrized(&self) -> bool {
        self.symmetrized
    }

    /// Strong Legendre condition on `grid_points` uniformly spaced points.
    ///
    /// `M_kk(t)` passes at a point when its smallest eigenvalue exceeds
    /// `1e-12 · (1 + λ_max)`.
    pub fn validate(&self, grid_points: usize) -> Result<ValidationReport> {
        if grid_points < 2 {
            return Err(Error::InvalidArgument("validation grid needs at least two points"));
        }
        let symmetric = self.diag.iter().all(MatrixPolynomial::is_symmetric);
        let mut first_failure = None;
        let mut min_eigenvalue = f64::INFINITY;
        for t in uniform_grid(self.interval, grid_points) {
            let m = self.leading().eval(t);
            let eig = m.symmetric_eigen().eigenvalues;
            let lo = eig.min();
            let hi = eig.max();
            min_eigenvalue = min_eigenvalue.min(lo);
            if first_failure.is_none() && !(lo > 1e-12 * (1.0 + hi)) {
                first_failure = Some(t);
            }
        }
        Ok(ValidationReport {
            passed: symmetric && first_failure.is_none(),
            first_failure,
            min_eigenvalue,
            symmetric,
        })
    }

    /// Rewrites the scalar (`n = 1`) problem as `Σ P_l (h⁽ˡ⁾)²`.
    ///
    /// Uses `∫ M h⁽ⁱ⁾h⁽ⁱ⁺¹⁾ = -½ ∫ M′ (h⁽ⁱ⁾)²` on boundary-flat fields, so
    /// `P_i = ½ M_ii − ½ M′_i(i+1)` and `P_k = ½ M_kk`.
    pub fn diagonalize_1d(&self) -> Result<ScalarProblem1D> {
        if self.dim != 1 {
            return Err(Error::InvalidArgument("diagonal form requires a scalar problem"));
        }
        let p = (0..=self.order)
            .map(|i| {
                let half = self.diag[i].scale(0.5);
                if i < self.order {
                    &half - &self.sup[i].derivative().scale(0.5)
                } else {
                    half
                }
            })
            .collect();
        ScalarProblem1D::new(self.order, self.interval, p)
    }
}

impl QuadraticFunctional for VariationalProblem {
    fn order(&self) -> usize {
        self.order
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn interval(&self) -> (f64, f64) {
        self.interval
    }

    fn bilinear_density(&self, t: f64, u: &JetVector, v: &JetVector) -> f64 {
        let k = self.order;
        let mut acc = 0.0;
        for i in 0..=k {
            acc += 0.5 * quad(u.get(i), &self.diag[i].eval(t), v.get(i));
        }
        for i in 0..k {
            let m = self.sup[i].eval(t);
            acc += 0.5 * (quad(u.get(i), &m, v.get(i + 1)) + quad(v.get(i), &m, u.get(i + 1)));
        }
        acc
    }

    fn coefficient_degree(&self) -> usize {
        self.diag.iter().chain(&self.sup).filter_map(MatrixPolynomial::degree).max().unwrap_or(0)
    }
}

/// The scalar functional `∫ Σ_l P_l(t) (h⁽ˡ⁾)² dt`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarProblem1D {
    order: usize,
    interval: (f64, f64),
    p: Vec<MatrixPolynomial>,
}

impl ScalarProblem1D {
    pub fn new(order: usize, interval: (f64, f64), p: Vec<MatrixPolynomial>) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidArgument("order must be positive"));
        }
        check_interval(interval)?;
        if p.len() != order + 1 {
            return Err(Error::InvalidArgument("expected k+1 scalar coefficients"));
        }
        for c in &p {
            check_block(c, 1)?;
        }
        Ok(Self { order, interval, p })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    /// `P_l`.
    pub fn coeff(&self, l: usize) -> &MatrixPolynomial {
        &self.p[l]
    }

    /// `P_k(t) > 0` on the grid.
    pub fn validate(&self, grid_points: usize) -> Result<ValidationReport> {
        if grid_points < 2 {
            return Err(Error::InvalidArgument("validation grid needs at least two points"));
        }
        let mut first_failure = None;
        let mut min_eigenvalue = f64::INFINITY;
        for t in uniform_grid(self.interval, grid_points) {
            let v = self.p[self.order].eval_scalar(t);
            min_eigenvalue = min_eigenvalue.min(v);
            if first_failure.is_none() && !(v > 1e-12 * (1.0 + v.abs())) {
                first_failure = Some(t);
            }
        }
        Ok(ValidationReport { passed: first_failure.is_none(), first_failure, min_eigenvalue, symmetric: true })
    }
}

impl QuadraticFunctional for ScalarProblem1D {
    fn order(&self) -> usize {
        self.order
    }

    fn dim(&self) -> usize {
        1
    }

    fn interval(&self) -> (f64, f64) {
        self.interval
    }

    fn bilinear_density(&self, t: f64, u: &JetVector, v: &JetVector) -> f64 {
        (0..=self.order).map(|l| self.p[l].eval_scalar(t) * u.get(l)[0] * v.get(l)[0]).sum()
    }

    fn coefficient_degree(&self) -> usize {
        self.p.iter().filter_map(MatrixPolynomial::degree).max().unwrap_or(0)
    }
}

/// Unreduced coefficients: block `(i, j)`, `i ≤ j`, couples `h⁽ⁱ⁾` and `h⁽ʲ⁾`.
#[derive(Clone, Debug, PartialEq)]
pub struct RawCoefficients {
    order: usize,
    dim: usize,
    interval: (f64, f64),
    blocks: BTreeMap<(usize, usize), MatrixPolynomial>,
}

impl RawCoefficients {
    pub fn new(
        order: usize,
        dim: usize,
        interval: (f64, f64),
        blocks: BTreeMap<(usize, usize), MatrixPolynomial>,
    ) -> Result<Self> {
        if order == 0 || dim == 0 {
            return Err(Error::InvalidArgument("order and dimension must be positive"));
        }
        check_interval(interval)?;
        for (&(i, j), p) in &blocks {
            if i > j || j > order {
                return Err(Error::InvalidArgument("block indices must satisfy i <= j <= k"));
            }
            check_block(p, dim)?;
        }
        Ok(Self { order, dim, interval, blocks })
    }

    pub fn blocks(&self) -> &BTreeMap<(usize, usize), MatrixPolynomial> {
        &self.blocks
    }

    /// True when every coupling is already `(i, i)` or `(i, i+1)`.
    pub fn is_band(&self) -> bool {
        self.blocks.keys().all(|&(i, j)| j <= i + 1)
    }

    /// Integrates by parts until only `(i, i)` and `(i, i+1)` couplings remain.
    ///
    /// A coupling `h⁽ⁱ⁾ᵀ R h⁽ʲ⁾` with `j ≥ i+2` becomes
    /// `−h⁽ⁱ⁺¹⁾ᵀ R h⁽ʲ⁻¹⁾ − h⁽ⁱ⁾ᵀ R′ h⁽ʲ⁻¹⁾` plus a total derivative that
    /// vanishes on fields flat to order `k−1` at both ends.
    pub fn reduce_to_band(&self) -> Result<VariationalProblem> {
        let k = self.order;
        let n = self.dim;
        let mut work = self.blocks.clone();
        let accumulate = |work: &mut BTreeMap<(usize, usize), MatrixPolynomial>, key, p: MatrixPolynomial| {
            let entry = work.entry(key).or_insert_with(|| MatrixPolynomial::zeros(n, n));
            *entry = &*entry + &p;
        };
        for gap in (2..=k).rev() {
            for i in 0..=k - gap {
                let j = i + gap;
                let Some(r) = work.remove(&(i, j)) else { continue };
                if gap == 2 {
                    // h⁽ᵐ⁾ᵀ(−R)h⁽ᵐ⁾ is ½ h⁽ᵐ⁾ᵀ(−2R)h⁽ᵐ⁾ in the diagonal convention.
                    accumulate(&mut work, (i + 1, i + 1), r.scale(-2.0));
                } else {
                    accumulate(&mut work, (i + 1, j - 1), -&r);
                }
                accumulate(&mut work, (i, j - 1), -&r.derivative());
            }
        }
        let take = |key| work.get(&key).cloned().unwrap_or_else(|| MatrixPolynomial::zeros(n, n));
        let diag = (0..=k).map(|i| take((i, i))).collect();
        let sup = (0..k).map(|i| take((i, i + 1))).collect();
        VariationalProblem::new(k, n, self.interval, diag, sup)
    }
}

impl From<&VariationalProblem> for RawCoefficients {
    fn from(p: &VariationalProblem) -> Self {
        let mut blocks = BTreeMap::new();
        for i in 0..=p.order {
            if !p.diag[i].is_zero() {
                blocks.insert((i, i), p.diag[i].clone());
            }
        }
        for i in 0..p.order {
            if !p.sup[i].is_zero() {
                blocks.insert((i, i + 1), p.sup[i].clone());
            }
        }
        Self { order: p.order, dim: p.dim, interval: p.interval, blocks }
    }
}

impl QuadraticFunctional for RawCoefficients {
    fn order(&self) -> usize {
        self.order
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn interval(&self) -> (f64, f64) {
        self.interval
    }

    fn bilinear_density(&self, t: f64, u: &JetVector, v: &JetVector) -> f64 {
        self.blocks
            .iter()
            .map(|(&(i, j), p)| {
                let m = p.eval(t);
                if i == j {
                    0.25 * (quad(u.get(i), &m, v.get(i)) + quad(v.get(i), &m, u.get(i)))
                } else {
                    0.5 * (quad(u.get(i), &m, v.get(j)) + quad(v.get(i), &m, u.get(j)))
                }
            })
            .sum()
    }

    fn coefficient_degree(&self) -> usize {
        self.blocks.values().filter_map(MatrixPolynomial::degree).max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use nalgebra::dmatrix;

    fn c(x: f64) -> MatrixPolynomial {
        MatrixPolynomial::scalar(&[x])
    }

    fn zero1() -> MatrixPolynomial {
        MatrixPolynomial::zeros(1, 1)
    }

    #[test]
    fn harmonic_validates() {
        let p = VariationalProblem::new(1, 1, (0.0, 1.0), vec![c(-1.0), c(1.0)], vec![zero1()]).unwrap();
        let r = p.validate(DEFAULT_VALIDATION_POINTS).unwrap();
        assert!(r.passed);
        assert_eq!(r.first_failure, None);
        assert!((r.min_eigenvalue - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sign_changing_leading_fails_at_left_end() {
        let lead = MatrixPolynomial::scalar(&[-0.5, 1.0]);
        let p = VariationalProblem::new(1, 1, (0.0, 1.0), vec![zero1(), lead], vec![zero1()]).unwrap();
        let r = p.validate(257).unwrap();
        assert!(!r.passed);
        let t = r.first_failure.unwrap();
        assert!(t <= 0.5);
        assert_eq!(t, 0.0);
    }

    #[test]
    fn indefinite_leading_fails() {
        let lead = MatrixPolynomial::constant(dmatrix![1.0, 2.0; 2.0, 1.0]);
        let z = MatrixPolynomial::zeros(2, 2);
        let p = VariationalProblem::new(1, 2, (0.0, 1.0), vec![z.clone(), lead], vec![z]).unwrap();
        let r = p.validate(17).unwrap();
        assert!(!r.passed);
        assert!((r.min_eigenvalue + 1.0).abs() < 1e-12);
    }

    #[test]
    fn validation_grid_needs_two_points() {
        let p = VariationalProblem::new(1, 1, (0.0, 1.0), vec![c(0.0), c(1.0)], vec![zero1()]).unwrap();
        assert!(p.validate(1).is_err());
    }

    #[test]
    fn diagonal_blocks_are_symmetrized() {
        let m00 = MatrixPolynomial::constant(dmatrix![1.0, 2.0; 0.0, 1.0]);
        let z = MatrixPolynomial::zeros(2, 2);
        let p = VariationalProblem::new(1, 2, (0.0, 1.0), vec![m00, MatrixPolynomial::identity(2)], vec![z]).unwrap();
        assert!(p.was_symmetrized());
        assert_eq!(p.diag(0).eval(0.0), dmatrix![1.0, 1.0; 1.0, 1.0]);
    }

    #[test]
    fn reduction_of_h_times_second_derivative() {
        let mut blocks = BTreeMap::new();
        blocks.insert((0, 2), c(1.0));
        blocks.insert((2, 2), c(1.0));
        let raw = RawCoefficients::new(2, 1, (0.0, 1.0), blocks).unwrap();
        let band = raw.reduce_to_band().unwrap();
        assert_eq!(band.diag(1).eval(0.3), dmatrix![-2.0]);
        assert_eq!(band.diag(2).eval(0.3), dmatrix![1.0]);
        assert!(band.diag(0).is_zero());
        assert!(band.sup(0).is_zero() && band.sup(1).is_zero());
    }

    #[test]
    fn band_input_is_fixed_point() {
        let mut blocks = BTreeMap::new();
        blocks.insert((0, 0), MatrixPolynomial::scalar(&[1.0, 2.0]));
        blocks.insert((0, 1), MatrixPolynomial::scalar(&[0.0, 1.0]));
        blocks.insert((1, 1), c(3.0));
        let raw = RawCoefficients::new(1, 1, (0.0, 2.0), blocks).unwrap();
        assert!(raw.is_band());
        let band = raw.reduce_to_band().unwrap();
        assert_eq!(RawCoefficients::from(&band), raw);
    }

    #[test]
    fn diagonalize_examples() {
        let p = VariationalProblem::new(1, 1, (0.0, 1.0), vec![zero1(), c(2.0)], vec![zero1()]).unwrap();
        let s = p.diagonalize_1d().unwrap();
        assert_eq!(s.coeff(1), &c(1.0));
        assert!(s.coeff(0).is_zero());

        let cross = MatrixPolynomial::scalar(&[0.0, 1.0]);
        let p = VariationalProblem::new(1, 1, (0.0, 1.0), vec![zero1(), c(2.0)], vec![cross]).unwrap();
        let s = p.diagonalize_1d().unwrap();
        assert_eq!(s.coeff(1), &c(1.0));
        assert_eq!(s.coeff(0), &c(-0.5));

        let p = VariationalProblem::new(2, 1, (0.0, 1.0), vec![zero1(), zero1(), c(2.0)], vec![zero1(), zero1()])
            .unwrap();
        let s = p.diagonalize_1d().unwrap();
        assert_eq!(s.coeff(2), &c(1.0));
        assert!(s.coeff(1).is_zero() && s.coeff(0).is_zero());
    }

    #[test]
    fn diagonalize_rejects_vector_problems() {
        let z = MatrixPolynomial::zeros(2, 2);
        let p = VariationalProblem::new(1, 2, (0.0, 1.0), vec![z.clone(), MatrixPolynomial::identity(2)], vec![z])
            .unwrap();
        assert!(p.diagonalize_1d().is_err());
    }

    #[test]
    fn constructor_checks() {
        assert!(VariationalProblem::new(1, 1, (1.0, 0.0), vec![c(0.0), c(1.0)], vec![zero1()]).is_err());
        assert!(VariationalProblem::new(1, 1, (0.0, 1.0), vec![c(1.0)], vec![zero1()]).is_err());
        let mut blocks = BTreeMap::new();
        blocks.insert((2, 1), c(1.0));
        assert!(RawCoefficients::new(2, 1, (0.0, 1.0), blocks).is_err());
    }
}
