//! The linear Hamiltonian system attached to a band-form problem.
//!
//! With `y = (h, ḣ, …, h⁽ᵏ⁻¹⁾)` and conjugate momenta `z`, the Jacobi
//! equation becomes `y′ = A y + B z`, `z′ = C y − Aᵀ z`. The blocks that
//! involve `M_kk⁻¹` are not polynomial; they are formed per evaluation point
//! (or as truncated power series when Taylor coefficients are requested).

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::symplectic_unit;
use crate::poly::{binomial, series_inverse, series_mul, MatrixPolynomial};
use crate::problem::VariationalProblem;

/// Values `h(t), h′(t), …, h⁽ᵐ⁾(t)` of a vector field at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct JetVector {
    entries: Vec<DVector<f64>>,
}

impl JetVector {
    pub fn new(entries: Vec<DVector<f64>>) -> Result<Self> {
        let Some(first) = entries.first() else {
            return Err(Error::InvalidArgument("a jet needs at least one entry"));
        };
        let n = first.len();
        if let Some(bad) = entries.iter().find(|e| e.len() != n) {
            return Err(Error::Shape { context: "jet entry", expected: (n, 1), found: (bad.len(), 1) });
        }
        Ok(Self { entries })
    }

    pub fn zeros(order: usize, dim: usize) -> Self {
        Self { entries: (0..=order).map(|_| DVector::zeros(dim)).collect() }
    }

    /// Jet of the column polynomial `q` (shape `n × 1`) at `t`.
    pub fn of_polynomial(q: &MatrixPolynomial, t: f64, order: usize) -> Self {
        let mut factorial = 1.0;
        let entries = q
            .taylor(t, order)
            .into_iter()
            .enumerate()
            .map(|(j, c)| {
                if j > 0 {
                    factorial *= j as f64;
                }
                DVector::from_column_slice((c * factorial).as_slice())
            })
            .collect();
        Self { entries }
    }

    pub fn order(&self) -> usize {
        self.entries.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.entries[0].len()
    }

    /// `h⁽ʲ⁾`.
    pub fn get(&self, j: usize) -> &DVector<f64> {
        &self.entries[j]
    }

    pub fn entries(&self) -> &[DVector<f64>] {
        &self.entries
    }

    /// Keeps entries `0..=order`.
    pub fn truncated(&self, order: usize) -> Self {
        Self { entries: self.entries[..=order].to_vec() }
    }

    /// Stacks entries `from..to` into one vector.
    pub fn stacked(&self, from: usize, to: usize) -> DVector<f64> {
        let n = self.dim();
        let mut out = DVector::zeros((to - from) * n);
        for (slot, j) in (from..to).enumerate() {
            out.rows_mut(slot * n, n).copy_from(&self.entries[j]);
        }
        out
    }
}

/// Number of grid points on which the leading block is checked for
/// invertibility when a system is built.
const INVERTIBILITY_GRID: usize = 257;

#[derive(Clone, Debug)]
pub struct HamiltonianSystem {
    problem: VariationalProblem,
    /// `A` without the `M_kk⁻¹` corner.
    a_poly: MatrixPolynomial,
    /// `C` with `M_(k-1)(k-1)` in the corner, before the Schur correction.
    c_poly: MatrixPolynomial,
}

fn place(target: &mut DMatrix<f64>, row: usize, col: usize, block: &DMatrix<f64>) {
    target.view_mut((row, col), block.shape()).copy_from(block);
}

impl HamiltonianSystem {
    pub fn new(problem: &VariationalProblem) -> Result<Self> {
        let k = problem.order();
        let n = problem.dim();
        let kn = k * n;
        let (a, b) = problem.interval();
        for i in 0..INVERTIBILITY_GRID {
            let t = a + (b - a) * i as f64 / (INVERTIBILITY_GRID - 1) as f64;
            if problem.leading().eval(t).lu().try_inverse().is_none() {
                return Err(Error::SingularLeading { t });
            }
        }

        let mut a_const = DMatrix::zeros(kn, kn);
        for i in 0..k - 1 {
            place(&mut a_const, i * n, (i + 1) * n, &DMatrix::identity(n, n));
        }
        let a_poly = MatrixPolynomial::constant(a_const);

        let degree = (0..k).map(|i| problem.diag(i).coeffs().len().max(problem.sup(i).coeffs().len())).max();
        let terms = degree.unwrap_or(1).max(1);
        let mut coeffs = alloc::vec![DMatrix::zeros(kn, kn); terms];
        for (d, c) in coeffs.iter_mut().enumerate() {
            for i in 0..k {
                if let Some(m) = problem.diag(i).coeffs().get(d) {
                    place(c, i * n, i * n, m);
                }
                if i + 1 < k {
                    if let Some(m) = problem.sup(i).coeffs().get(d) {
                        place(c, i * n, (i + 1) * n, m);
                        place(c, (i + 1) * n, i * n, &m.transpose());
                    }
                }
            }
        }
        let c_poly = MatrixPolynomial::new(kn, kn, coeffs)?;
        Ok(Self { problem: problem.clone(), a_poly, c_poly })
    }

    pub fn problem(&self) -> &VariationalProblem {
        &self.problem
    }

    /// `kn`, the size of each of `y` and `z`.
    pub fn half_dim(&self) -> usize {
        self.problem.order() * self.problem.dim()
    }

    /// `2kn`.
    pub fn dim(&self) -> usize {
        2 * self.half_dim()
    }

    /// Taylor coefficients of `s ↦ (A, B, C)(t + s)` up to `s^order`.
    pub fn block_taylor(&self, t: f64, order: usize) -> Result<Vec<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)>> {
        let k = self.problem.order();
        let n = self.problem.dim();
        let kn = k * n;
        let corner = (k - 1) * n;
        let inv = series_inverse(&self.problem.leading().taylor(t, order), order, t)?;
        let cross = self.problem.sup(k - 1).taylor(t, order);
        let cross_t: Vec<DMatrix<f64>> = cross.iter().map(DMatrix::transpose).collect();
        let inv_cross_t = series_mul(&inv, &cross_t, order);
        let schur = series_mul(&cross, &inv_cross_t, order);
        let a_poly = self.a_poly.taylor(t, order);
        let c_poly = self.c_poly.taylor(t, order);
        Ok((0..=order)
            .map(|m| {
                let mut a = a_poly[m].clone();
                place(&mut a, corner, corner, &-&inv_cross_t[m]);
                let mut b = DMatrix::zeros(kn, kn);
                place(&mut b, corner, corner, &inv[m]);
                let mut c = c_poly[m].clone();
                let fixed = c.view((corner, corner), (n, n)) - &schur[m];
                place(&mut c, corner, corner, &fixed);
                (a, b, c)
            })
            .collect())
    }

    /// `(A(t), B(t), C(t))`.
    pub fn blocks(&self, t: f64) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
        Ok(self.block_taylor(t, 0)?.swap_remove(0))
    }

    /// `H(t) = [[A, B], [C, −Aᵀ]]`.
    pub fn matrix(&self, t: f64) -> Result<DMatrix<f64>> {
        let (a, b, c) = self.blocks(t)?;
        Ok(assemble(&a, &b, &c))
    }

    /// Taylor coefficients of `s ↦ H(t + s)` up to `s^order`.
    pub fn taylor(&self, t: f64, order: usize) -> Result<Vec<DMatrix<f64>>> {
        Ok(self.block_taylor(t, order)?.iter().map(|(a, b, c)| assemble(a, b, c)).collect())
    }

    /// Largest `‖HᵀJ + JH‖_F` over a uniform grid.
    pub fn check_infinitesimally_symplectic(&self, grid_points: usize) -> Result<f64> {
        let (a, b) = self.problem.interval();
        let points = grid_points.max(2);
        let mut worst: f64 = 0.0;
        for i in 0..points {
            let t = a + (b - a) * i as f64 / (points - 1) as f64;
            worst = worst.max(hamiltonian_residual(&self.matrix(t)?));
        }
        Ok(worst)
    }
}

/// `[[A, B], [C, −Aᵀ]]`.
pub fn assemble(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>) -> DMatrix<f64> {
    let m = a.nrows();
    let mut h = DMatrix::zeros(2 * m, 2 * m);
    place(&mut h, 0, 0, a);
    place(&mut h, 0, m, b);
    place(&mut h, m, 0, c);
    place(&mut h, m, m, &-a.transpose());
    h
}

/// `‖HᵀJ + JH‖_F`; zero exactly when `H` lies in the symplectic Lie algebra.
pub fn hamiltonian_residual(h: &DMatrix<f64>) -> f64 {
    let j = symplectic_unit(h.nrows() / 2);
    (h.transpose() * &j + &j * h).norm()
}

fn check_jet(prob: &VariationalProblem, jet: &JetVector, order: usize) -> Result<()> {
    if jet.order() != order || jet.dim() != prob.dim() {
        return Err(Error::Shape {
            context: "jet (order + 1, dimension)",
            expected: (order + 1, prob.dim()),
            found: (jet.order() + 1, jet.dim()),
        });
    }
    Ok(())
}

/// `(ŷ, ẑ)` with `ŷ = (h, …, h⁽ᵏ⁻¹⁾)` and `ẑ = (0, …, 0, M_kk h⁽ᵏ⁾ + M_(k-1)kᵀ h⁽ᵏ⁻¹⁾)`.
pub fn zeroing_transform(
    prob: &VariationalProblem,
    jet: &JetVector,
    t: f64,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let k = prob.order();
    let n = prob.dim();
    check_jet(prob, jet, k)?;
    let y = jet.stacked(0, k);
    let mut z = DVector::zeros(k * n);
    let top = prob.leading().eval(t) * jet.get(k) + prob.sup(k - 1).eval(t).transpose() * jet.get(k - 1);
    z.rows_mut((k - 1) * n, n).copy_from(&top);
    Ok((y, z))
}

/// `(y, z)` from the `(2k−1)`-jet, with
/// `z_i = Σ_{j ≥ i} (−1)^{j−i} (d/dt)^{j−i} ∂L/∂h⁽ʲ⁾` for `i = 1..k`.
pub fn legendre_transform(
    prob: &VariationalProblem,
    jet: &JetVector,
    t: f64,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let k = prob.order();
    let n = prob.dim();
    check_jet(prob, jet, 2 * k - 1)?;
    // ∂L/∂h⁽ʲ⁾ = Σ over (coefficient, jet index) pairs.
    let partial_terms = |j: usize| {
        let mut terms: Vec<(MatrixPolynomial, usize)> = Vec::with_capacity(3);
        terms.push((prob.diag(j).clone(), j));
        if j > 0 {
            terms.push((prob.sup(j - 1).transpose(), j - 1));
        }
        if j < k {
            terms.push((prob.sup(j).clone(), j + 1));
        }
        terms
    };
    let mut z = DVector::zeros(k * n);
    for i in 1..=k {
        let mut zi = DVector::zeros(n);
        for j in i..=k {
            let m = j - i;
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            for (coeff, idx) in partial_terms(j) {
                let taylor = coeff.taylor(t, m);
                let mut factorial = 1.0;
                for (r, c) in taylor.iter().enumerate() {
                    if r > 0 {
                        factorial *= r as f64;
                    }
                    // binom(m, r) M⁽ʳ⁾ h⁽ⁱᵈˣ⁺ᵐ⁻ʳ⁾
                    let w = sign * binomial(m, r) * factorial;
                    zi += c * jet.get(idx + m - r) * w;
                }
            }
        }
        z.rows_mut((i - 1) * n, n).copy_from(&zi);
    }
    Ok((jet.stacked(0, k), z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use nalgebra::{dmatrix, dvector};

    fn c(x: f64) -> MatrixPolynomial {
        MatrixPolynomial::scalar(&[x])
    }

    fn zero() -> MatrixPolynomial {
        MatrixPolynomial::zeros(1, 1)
    }

    fn harmonic() -> VariationalProblem {
        VariationalProblem::new(1, 1, (0.0, 1.0), vec![c(-1.0), c(1.0)], vec![zero()]).unwrap()
    }

    fn fourth(lead: f64) -> VariationalProblem {
        VariationalProblem::new(2, 1, (0.0, 1.0), vec![zero(), zero(), c(lead)], vec![zero(), zero()]).unwrap()
    }

    fn jet(values: &[f64]) -> JetVector {
        JetVector::new(values.iter().map(|&v| dvector![v]).collect()).unwrap()
    }

    #[test]
    fn harmonic_blocks() {
        let sys = HamiltonianSystem::new(&harmonic()).unwrap();
        let (a, b, cc) = sys.blocks(0.7).unwrap();
        assert_eq!((a, b, cc), (dmatrix![0.0], dmatrix![1.0], dmatrix![-1.0]));
        assert_eq!(sys.matrix(2.0).unwrap(), dmatrix![0.0, 1.0; -1.0, 0.0]);
        assert_eq!(sys.check_infinitesimally_symplectic(9).unwrap(), 0.0);
    }

    #[test]
    fn fourth_order_blocks() {
        let sys = HamiltonianSystem::new(&fourth(1.0)).unwrap();
        let (a, b, cc) = sys.blocks(0.3).unwrap();
        assert_eq!(a, dmatrix![0.0, 1.0; 0.0, 0.0]);
        assert_eq!(b, dmatrix![0.0, 0.0; 0.0, 1.0]);
        assert_eq!(cc, DMatrix::zeros(2, 2));
        let h = sys.matrix(0.3).unwrap();
        let mut expected = DMatrix::zeros(4, 4);
        expected[(0, 1)] = 1.0;
        expected[(1, 3)] = 1.0;
        expected[(3, 2)] = -1.0;
        assert_eq!(h, expected);

        let (_, b, _) = HamiltonianSystem::new(&fourth(2.0)).unwrap().blocks(0.0).unwrap();
        assert_eq!(b, dmatrix![0.0, 0.0; 0.0, 0.5]);
    }

    #[test]
    fn asymmetric_c_has_residual() {
        let h = dmatrix![0.0, 0.0, 0.0, 0.0;
                         0.0, 0.0, 0.0, 0.0;
                         0.0, 0.3, 0.0, 0.0;
                         0.1, 0.0, 0.0, 0.0];
        let r = hamiltonian_residual(&h);
        // HᵀJ + JH has entries ±(0.3 − 0.1) in two places.
        assert!((r - 0.2 * 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn singular_leading_rejected() {
        let lead = MatrixPolynomial::scalar(&[-0.5, 1.0]);
        let p = VariationalProblem::new(1, 1, (0.0, 1.0), vec![zero(), lead], vec![zero()]).unwrap();
        assert!(matches!(HamiltonianSystem::new(&p), Err(Error::SingularLeading { .. })));
    }

    #[test]
    fn zeroing_examples() {
        let h = harmonic();
        let (y, z) = zeroing_transform(&h, &jet(&[2.0, 3.0]), 0.0).unwrap();
        assert_eq!((y, z), (dvector![2.0], dvector![3.0]));
        let (y, z) = zeroing_transform(&fourth(1.0), &jet(&[0.0, 1.0, 5.0]), 0.0).unwrap();
        assert_eq!((y, z), (dvector![0.0, 1.0], dvector![0.0, 5.0]));
        let (y, z) = zeroing_transform(&fourth(1.0), &JetVector::zeros(2, 1), 0.0).unwrap();
        assert!(y.iter().chain(z.iter()).all(|&v| v == 0.0));
        assert!(zeroing_transform(&h, &JetVector::zeros(2, 1), 0.0).is_err());
    }

    #[test]
    fn legendre_examples() {
        let (y, z) = legendre_transform(&harmonic(), &jet(&[2.0, 3.0]), 0.4).unwrap();
        assert_eq!((y, z), (dvector![2.0], dvector![3.0]));
        let (y, z) = legendre_transform(&fourth(1.0), &jet(&[0.0, 0.0, 1.0, 2.0]), 0.4).unwrap();
        assert_eq!((y, z), (dvector![0.0, 0.0], dvector![-2.0, 1.0]));
        let (y, z) = legendre_transform(&fourth(1.0), &JetVector::zeros(3, 1), 0.4).unwrap();
        assert!(y.iter().chain(z.iter()).all(|&v| v == 0.0));
    }

    #[test]
    fn legendre_differentiates_time_dependent_leading() {
        // z_1 = −d/dt(t ḧ) = −ḧ − t h‴ for L = ½ t ḧ².
        let p = VariationalProblem::new(
            2,
            1,
            (1.0, 2.0),
            vec![zero(), zero(), MatrixPolynomial::scalar(&[0.0, 1.0])],
            vec![zero(), zero()],
        )
        .unwrap();
        let (_, z) = legendre_transform(&p, &jet(&[0.0, 0.0, 3.0, 5.0]), 1.5).unwrap();
        assert!((z[0] - (-3.0 - 1.5 * 5.0)).abs() < 1e-14);
        assert!((z[1] - 4.5).abs() < 1e-14);
    }

    #[test]
    fn jet_of_polynomial() {
        let q = MatrixPolynomial::column(1, &[&[1.0], &[0.0], &[1.0]]).unwrap();
        let j = JetVector::of_polynomial(&q, 2.0, 3);
        assert_eq!(j.get(0)[0], 5.0);
        assert_eq!(j.get(1)[0], 4.0);
        assert_eq!(j.get(2)[0], 2.0);
        assert_eq!(j.get(3)[0], 0.0);
    }

    #[test]
    fn taylor_matches_derivatives_of_inverse() {
        let lead = MatrixPolynomial::scalar(&[1.0, 1.0]);
        let p = VariationalProblem::new(1, 1, (0.0, 1.0), vec![zero(), lead], vec![zero()]).unwrap();
        let sys = HamiltonianSystem::new(&p).unwrap();
        let t = 0.5;
        let coeffs = sys.taylor(t, 3).unwrap();
        // B(t + s) = 1 / (1.5 + s)
        for (m, cm) in coeffs.iter().enumerate() {
            let expected = if m % 2 == 0 { 1.0 } else { -1.0 } / libm::pow(1.5, m as f64 + 1.0);
            assert!((cm[(0, 1)] - expected).abs() < 1e-14);
        }
    }
}
