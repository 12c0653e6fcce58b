//! The scalar route: the order-`2k` Jacobi equation of `∫ Σ P_l (h⁽ˡ⁾)²`,
//! its vertical solutions, their Wronskian, and the integrated square
//! identity `∫ Σ P_l (h⁽ˡ⁾)² = ∫ P_k (W[h, σ] / W[σ])²` on admissible fields.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::conjugacy::{scan_zeros, verdict_for, ConjugacyOptions, ConjugacyResult, ScanSettings};
use crate::error::{Error, Result};
use crate::frame::default_step;
use crate::linalg::{determinant, equilibrated_solve};
use crate::ode::{integrate, LinearFlow, Trajectory};
use crate::picone::{functional_value, TestField, NODES_PER_STEP};
use crate::poly::{binomial, series_inverse, series_mul, MatrixPolynomial};
use crate::problem::ScalarProblem1D;
use crate::quadrature::gauss_legendre;

/// First-order form of the scalar Jacobi equation on the jet
/// `(h, h′, …, h⁽²ᵏ⁻¹⁾)`.
#[derive(Clone, Debug)]
pub struct ScalarJacobiFlow {
    order: usize,
    /// `c_j` with `Σ_j c_j h⁽ʲ⁾ = Σ_l (−1)ˡ (P_l h⁽ˡ⁾)⁽ˡ⁾`, `j = 0..=2k`.
    coeffs: Vec<MatrixPolynomial>,
}

impl ScalarJacobiFlow {
    pub fn new(sp: &ScalarProblem1D) -> Self {
        let k = sp.order();
        let mut coeffs = alloc::vec![MatrixPolynomial::zeros(1, 1); 2 * k + 1];
        for l in 0..=k {
            let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
            let mut deriv = sp.coeff(l).clone();
            for m in 0..=l {
                let j = 2 * l - m;
                coeffs[j] = &coeffs[j] + &deriv.scale(sign * binomial(l, m));
                deriv = deriv.derivative();
            }
        }
        Self { order: k, coeffs }
    }

    /// Coefficient of `h⁽ʲ⁾` in the expanded equation.
    pub fn coefficient(&self, j: usize) -> &MatrixPolynomial {
        &self.coeffs[j]
    }
}

impl LinearFlow for ScalarJacobiFlow {
    fn dim(&self) -> usize {
        2 * self.order
    }

    fn matrix(&self, t: f64) -> Result<DMatrix<f64>> {
        Ok(self.taylor(t, 0)?.swap_remove(0))
    }

    fn taylor(&self, t: f64, order: usize) -> Result<Vec<DMatrix<f64>>> {
        let m = 2 * self.order;
        let inv = series_inverse(&self.coeffs[m].taylor(t, order), order, t)?;
        let mut out: Vec<DMatrix<f64>> = (0..=order).map(|_| DMatrix::zeros(m, m)).collect();
        for i in 0..m - 1 {
            out[0][(i, i + 1)] = 1.0;
        }
        for j in 0..m {
            let prod = series_mul(&self.coeffs[j].taylor(t, order), &inv, order);
            for (q, c) in prod.iter().enumerate() {
                out[q][(m - 1, j)] = -c[(0, 0)];
            }
        }
        Ok(out)
    }
}

/// The `k` vertical solutions `σ_i`, flat to order `k − 1` at `a`, sampled
/// with their jets up to order `2k − 1`.
#[derive(Clone, Debug)]
pub struct ScalarSolutionSet {
    problem: ScalarProblem1D,
    flow: ScalarJacobiFlow,
    trajectory: Trajectory,
    seed: DMatrix<f64>,
}

/// Vertical solutions with the identity seed.
pub fn scalar_vertical_solutions(sp: &ScalarProblem1D, step: Option<f64>) -> Result<ScalarSolutionSet> {
    let k = sp.order();
    scalar_vertical_solutions_seeded(sp, step, &DMatrix::identity(k, k))
}

/// Vertical solutions whose jets `k..2k` at `a` are the rows of `seed`.
pub fn scalar_vertical_solutions_seeded(
    sp: &ScalarProblem1D,
    step: Option<f64>,
    seed: &DMatrix<f64>,
) -> Result<ScalarSolutionSet> {
    let k = sp.order();
    if seed.shape() != (k, k) {
        return Err(Error::Shape { context: "initial seed", expected: (k, k), found: seed.shape() });
    }
    if determinant(seed) == 0.0 {
        return Err(Error::InvalidArgument("initial seed must be invertible"));
    }
    let interval = sp.interval();
    let flow = ScalarJacobiFlow::new(sp);
    let mut init = DMatrix::zeros(2 * k, k);
    for i in 0..k {
        for r in 0..k {
            init[(k + r, i)] = seed[(i, r)];
        }
    }
    let step = step.unwrap_or_else(|| default_step(interval));
    let trajectory = integrate(&flow, interval, init, step)?;
    Ok(ScalarSolutionSet { problem: sp.clone(), flow, trajectory, seed: seed.clone() })
}

impl ScalarSolutionSet {
    pub fn problem(&self) -> &ScalarProblem1D {
        &self.problem
    }

    pub fn flow(&self) -> &ScalarJacobiFlow {
        &self.flow
    }

    pub fn seed(&self) -> &DMatrix<f64> {
        &self.seed
    }

    pub fn grid(&self) -> &[f64] {
        self.trajectory.grid()
    }

    pub fn len(&self) -> usize {
        self.trajectory.grid().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn step(&self) -> f64 {
        self.trajectory.step()
    }

    /// Column `i` holds `σ_i, σ_i′, …, σ_i⁽²ᵏ⁻¹⁾` at the grid index.
    pub fn jets(&self, index: usize) -> &DMatrix<f64> {
        self.trajectory.state(index)
    }

    pub fn jets_at(&self, t: f64) -> Result<DMatrix<f64>> {
        self.trajectory.state_at(&self.flow, t)
    }

    /// `W[σ_1, …, σ_k]` at a grid index.
    pub fn wronskian(&self, index: usize) -> f64 {
        let k = self.problem.order();
        determinant(&self.jets(index).rows(0, k).into_owned())
    }

    pub fn wronskian_at(&self, t: f64) -> Result<f64> {
        let k = self.problem.order();
        Ok(determinant(&self.jets_at(t)?.rows(0, k).into_owned()))
    }

    /// Zeros of `W[σ]` after the exclusion window.
    pub fn find_conjugate_points(&self, opts: &ConjugacyOptions) -> Result<ConjugacyResult> {
        let interval = self.problem.interval();
        let delta = opts.resolved_delta(interval, self.step());
        if !(delta > 0.0) {
            return Err(Error::InvalidArgument("exclusion window must be positive"));
        }
        let settings = ScanSettings {
            start: interval.0 + delta,
            refine_tol: opts.resolved_refine_tol(interval),
            tangential_threshold: opts.tangential_threshold,
        };
        let times = self.grid();
        let values: Vec<f64> = (0..self.len()).map(|i| self.wronskian(i)).collect();
        let points = scan_zeros(times, &values, &settings, |t| self.wronskian_at(t))?;
        let scanned = times.iter().filter(|&&t| t > settings.start).count() >= 2;
        Ok(ConjugacyResult {
            samples: times.iter().copied().zip(values).collect(),
            verdict: verdict_for(&points, scanned),
            conjugate_points: points,
            exclusion_window: delta,
        })
    }
}

/// `W[h, σ_1, …, σ_k] / W[σ_1, …, σ_k]` from the `k`-jet of `h` and the
/// `k`-jets of the solutions (rows = derivative order, columns = solutions).
///
/// Evaluated through the Schur complement of the bordered matrix,
/// `(−1)ᵏ (h⁽ᵏ⁾ − s_kᵀ Σ⁻¹ h_top)`, which is the same quotient but keeps
/// its accuracy where `Σ` is nearly singular.
pub fn eswaran_ratio_from_jets(h_jet: &[f64], sigma: &DMatrix<f64>, t: f64) -> Result<f64> {
    let k = sigma.ncols();
    if h_jet.len() < k + 1 || sigma.nrows() < k + 1 {
        return Err(Error::InvalidArgument("jets of order k are required"));
    }
    let top = sigma.rows(0, k).into_owned();
    let h_top = DMatrix::from_column_slice(k, 1, &h_jet[..k]);
    let coeffs = equilibrated_solve(&top, &h_top)
        .filter(|x| x.iter().all(|v| v.is_finite()))
        .ok_or(Error::ConjugatePoint { t })?;
    let s_k: DVector<f64> = sigma.row(k).transpose();
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    Ok(sign * (h_jet[k] - s_k.dot(&coeffs.column(0))))
}

/// The ratio for the field `h` against the solution set at time `t`.
pub fn eswaran_ratio(h_jet: &[f64], sols: &ScalarSolutionSet, t: f64) -> Result<f64> {
    let jets = sols.jets_at(t)?;
    if sols.wronskian_at(t)? == 0.0 {
        return Err(Error::ConjugatePoint { t });
    }
    eswaran_ratio_from_jets(h_jet, &jets, t)
}

/// Both sides of the integrated identity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratedIdentity {
    /// `∫ Σ P_l (h⁽ˡ⁾)²`.
    pub lhs: f64,
    /// `∫ P_k (W[h, σ] / W[σ])²`.
    pub rhs: f64,
    /// Set when the near-`a` guard on the ratio had to intervene.
    pub capped: bool,
}

/// Ratio between the guard on the ratio and the largest `|h⁽ᵏ⁾|`.
const GUARD_FACTOR: f64 = 1e6;

/// Evaluates both sides; refuses when `W[σ]` vanishes after the window.
pub fn eswaran_integrated_check(
    sols: &ScalarSolutionSet,
    field: &TestField,
    opts: &ConjugacyOptions,
) -> Result<IntegratedIdentity> {
    let sp = sols.problem();
    let k = sp.order();
    if field.dim() != 1 || field.order() != k || field.interval() != sp.interval() {
        return Err(Error::InvalidArgument("test field does not match the problem"));
    }
    let scan = sols.find_conjugate_points(opts)?;
    if let Some(p) = scan.conjugate_points.first() {
        return Err(Error::ConjugatePoint { t: p.t });
    }
    let lhs = functional_value(sp, field);

    let (x, w) = gauss_legendre(NODES_PER_STEP);
    let mut nodes = Vec::with_capacity((sols.len() - 1) * NODES_PER_STEP);
    for i in 0..sols.len() - 1 {
        let (t0, t1) = (sols.grid()[i], sols.grid()[i + 1]);
        let half = 0.5 * (t1 - t0);
        let offsets: Vec<f64> = x.iter().map(|&xi| half * (xi + 1.0)).collect();
        let jets = sols.trajectory.states_after(&sols.flow, i, &offsets)?;
        for ((s, wi), sigma) in offsets.iter().zip(&w).zip(jets) {
            nodes.push((t0 + s, half * wi, sigma));
        }
    }
    let h_jets: Vec<Vec<f64>> =
        nodes.iter().map(|(t, ..)| field.jet(*t, k).entries().iter().map(|e| e[0]).collect()).collect();
    let cap = GUARD_FACTOR * (1.0 + h_jets.iter().map(|j| j[k].abs()).fold(0.0, f64::max));
    let mut rhs = 0.0;
    let mut capped = false;
    for ((t, weight, sigma), h) in nodes.iter().zip(&h_jets) {
        let ratio = match eswaran_ratio_from_jets(h, sigma, *t) {
            Ok(r) if r.is_finite() && r.abs() <= cap => r,
            Ok(r) if r.is_finite() => {
                capped = true;
                r.clamp(-cap, cap)
            }
            _ => {
                capped = true;
                continue;
            }
        };
        rhs += weight * sp.coeff(k).eval_scalar(*t) * ratio * ratio;
    }
    Ok(IntegratedIdentity { lhs, rhs, capped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use core::f64::consts::PI;
    use nalgebra::dmatrix;

    fn sp(p: &[f64], b: f64) -> ScalarProblem1D {
        ScalarProblem1D::new(p.len() - 1, (0.0, b), p.iter().map(|&x| MatrixPolynomial::scalar(&[x])).collect())
            .unwrap()
    }

    #[test]
    fn harmonic_solution_is_sine() {
        let sols = scalar_vertical_solutions(&sp(&[-1.0, 1.0], 3.0), Some(1e-3)).unwrap();
        for i in (0..sols.len()).step_by(211) {
            let t = sols.grid()[i];
            assert!((sols.jets(i)[(0, 0)] - t.sin()).abs() < 1e-8);
        }
    }

    #[test]
    fn free_solution_is_linear() {
        let sols = scalar_vertical_solutions(&sp(&[0.0, 1.0], 1.0), None).unwrap();
        for i in (0..sols.len()).step_by(101) {
            assert!((sols.jets(i)[(0, 0)] - sols.grid()[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn fourth_order_span() {
        let sols = scalar_vertical_solutions(&sp(&[0.0, 0.0, 1.0], 1.0), None).unwrap();
        // Seeds e_0, e_1 on (h'', h''') give t²/2 and t³/6.
        for i in (0..sols.len()).step_by(97) {
            let t = sols.grid()[i];
            let j = sols.jets(i);
            assert!((j[(0, 0)] - t * t / 2.0).abs() < 1e-14);
            assert!((j[(0, 1)] - t * t * t / 6.0).abs() < 1e-14);
            assert!((sols.wronskian(i) - libm::pow(t, 4.0) / 12.0).abs() < 1e-14);
        }
    }

    #[test]
    fn equation_coefficients() {
        // P_1 = t: (t h′)′ expands to t h″ + h′, with sign −1.
        let p = ScalarProblem1D::new(1, (1.0, 2.0), vec![MatrixPolynomial::zeros(1, 1), MatrixPolynomial::scalar(&[0.0, 1.0])])
            .unwrap();
        let flow = ScalarJacobiFlow::new(&p);
        assert_eq!(flow.coefficient(2).eval_scalar(1.5), -1.5);
        assert_eq!(flow.coefficient(1).eval_scalar(1.5), -1.0);
        assert_eq!(flow.coefficient(0).eval_scalar(1.5), 0.0);
    }

    #[test]
    fn ratio_examples() {
        let t = 0.7;
        let sigma = dmatrix![t; 1.0];
        assert!((eswaran_ratio_from_jets(&[t * t, 2.0 * t], &sigma, t).unwrap() + t).abs() < 1e-15);
        assert!(eswaran_ratio_from_jets(&[t, 1.0], &sigma, t).unwrap().abs() < 1e-15);
        let sigma2 = dmatrix![t * t / 2.0, t * t * t / 6.0; t, t * t / 2.0; 1.0, t];
        let h = [t * t / 2.0, t, 1.0];
        assert!(eswaran_ratio_from_jets(&h, &sigma2, t).unwrap().abs() < 1e-14);
    }

    #[test]
    fn ratio_matches_bordered_determinant() {
        let t = 0.4;
        let sigma = dmatrix![t * t / 2.0, t * t * t / 6.0; t, t * t / 2.0; 1.0, t];
        let h = [0.3, -1.2, 2.5];
        let mut bordered = DMatrix::zeros(3, 3);
        for r in 0..3 {
            bordered[(r, 0)] = h[r];
            bordered[(r, 1)] = sigma[(r, 0)];
            bordered[(r, 2)] = sigma[(r, 1)];
        }
        let literal = determinant(&bordered) / determinant(&sigma.rows(0, 2).into_owned());
        assert!((eswaran_ratio_from_jets(&h, &sigma, t).unwrap() - literal).abs() < 1e-12);
    }

    #[test]
    fn integrated_hand_cases() {
        let opts = ConjugacyOptions::default();
        let field = |k| TestField::new(MatrixPolynomial::column(1, &[&[1.0]]).unwrap(), k, (0.0, 1.0)).unwrap();
        let sols = scalar_vertical_solutions(&sp(&[0.0, 1.0], 1.0), None).unwrap();
        let r = eswaran_integrated_check(&sols, &field(1), &opts).unwrap();
        assert!((r.lhs - 1.0 / 3.0).abs() < 1e-9 && (r.rhs - 1.0 / 3.0).abs() < 1e-9, "{r:?}");
        let z = eswaran_integrated_check(&sols, &TestField::zero(1, 1, (0.0, 1.0)), &opts).unwrap();
        assert_eq!((z.lhs, z.rhs), (0.0, 0.0));
        let sols = scalar_vertical_solutions(&sp(&[0.0, 0.0, 1.0], 1.0), None).unwrap();
        let r = eswaran_integrated_check(&sols, &field(2), &opts).unwrap();
        assert!((r.lhs - 0.8).abs() < 1e-6 && (r.rhs - 0.8).abs() < 1e-6, "{r:?}");
    }

    #[test]
    fn conjugate_points_of_scalar_harmonic() {
        let sols = scalar_vertical_solutions(&sp(&[-1.0, 1.0], 10.0), Some(1e-3)).unwrap();
        let r = sols.find_conjugate_points(&ConjugacyOptions::with_delta(0.01)).unwrap();
        let pts: Vec<f64> = r.sign_change_points().collect();
        assert_eq!(pts.len(), 3);
        for (m, t) in pts.iter().enumerate() {
            assert!((t - (m + 1) as f64 * PI).abs() < 1e-6);
        }
        let field = TestField::new(MatrixPolynomial::column(1, &[&[1.0]]).unwrap(), 1, (0.0, 10.0)).unwrap();
        assert!(eswaran_integrated_check(&sols, &field, &ConjugacyOptions::default()).is_err());
    }
}
