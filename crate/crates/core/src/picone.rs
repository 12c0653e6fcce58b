//! Picone identity checks, two evaluations of the functional, and a Galerkin
//! eigenvalue oracle for positivity.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::conjugacy::{find_conjugate_points, ConjugacyOptions};
use crate::error::{Error, Result};
use crate::frame::FrameTrajectory;
use crate::hamiltonian::{zeroing_transform, JetVector};
use crate::linalg::{condition_number, equilibrated_solve};
use crate::poly::MatrixPolynomial;
use crate::problem::QuadraticFunctional;
use crate::quadrature::{gauss_legendre, gauss_legendre_on, nodes_for_degree};

/// `Y(t)` with a condition number at or above this is treated as singular.
pub const FRAME_CONDITION_LIMIT: f64 = 1e8;

/// Gauss–Legendre nodes per trajectory step.
pub const NODES_PER_STEP: usize = 8;

/// An admissible field `h(t) = (t−a)ᵏ (b−t)ᵏ q(t)`, flat to order `k−1` at
/// both ends.
#[derive(Clone, Debug, PartialEq)]
pub struct TestField {
    base: MatrixPolynomial,
    field: MatrixPolynomial,
    /// `s ↦ h(a + s)`, built so that the first `k` coefficients are exactly
    /// zero; jets near `a` keep their relative accuracy this way.
    shifted: MatrixPolynomial,
    order: usize,
    interval: (f64, f64),
}

impl TestField {
    /// `q` must be a column polynomial (`n × 1`).
    pub fn new(q: MatrixPolynomial, order: usize, interval: (f64, f64)) -> Result<Self> {
        if q.cols() != 1 {
            return Err(Error::Shape { context: "test field polynomial", expected: (q.rows(), 1), found: q.shape() });
        }
        let (a, b) = interval;
        let left = MatrixPolynomial::scalar(&[-a, 1.0]);
        let right = MatrixPolynomial::scalar(&[b, -1.0]);
        let mut weight = MatrixPolynomial::scalar(&[1.0]);
        for _ in 0..order {
            weight = &(&weight * &left) * &right;
        }
        let field = q.scale_by(&weight);
        let mut shifted_weight = MatrixPolynomial::scalar(&[1.0]);
        for _ in 0..order {
            shifted_weight = &(&shifted_weight * &MatrixPolynomial::scalar(&[0.0, 1.0]))
                * &MatrixPolynomial::scalar(&[b - a, -1.0]);
        }
        let shifted = q.compose_affine(a, 1.0).scale_by(&shifted_weight);
        Ok(Self { base: q, field, shifted, order, interval })
    }

    pub fn zero(dim: usize, order: usize, interval: (f64, f64)) -> Self {
        Self::new(MatrixPolynomial::zeros(dim, 1), order, interval).expect("zero column is a valid field")
    }

    /// `q`.
    pub fn base(&self) -> &MatrixPolynomial {
        &self.base
    }

    /// `h`.
    pub fn polynomial(&self) -> &MatrixPolynomial {
        &self.field
    }

    pub fn dim(&self) -> usize {
        self.field.rows()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    /// `h(t), …, h⁽ᵐ⁾(t)`.
    pub fn jet(&self, t: f64, order: usize) -> JetVector {
        JetVector::of_polynomial(&self.shifted, t - self.interval.0, order)
    }

    /// `max |h|` over a uniform grid of `points` samples.
    pub fn sup_norm(&self, points: usize) -> f64 {
        let (a, b) = self.interval;
        (0..points.max(2))
            .map(|i| self.field.eval(a + (b - a) * i as f64 / (points.max(2) - 1) as f64).amax())
            .fold(0.0, f64::max)
    }
}

fn check_field(traj: &FrameTrajectory, field: &TestField) -> Result<()> {
    let prob = traj.system().problem();
    if field.dim() != prob.dim() || field.order() != prob.order() || field.interval() != prob.interval() {
        return Err(Error::InvalidArgument("test field does not match the problem"));
    }
    Ok(())
}

/// `S = Z Y⁻¹`, solved as `Yᵀ Sᵀ = Zᵀ` with equilibration.
fn right_divide(z: &DMatrix<f64>, y: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    Some(equilibrated_solve(&y.transpose(), &z.transpose())?.transpose())
}

/// Both sides of the Picone identity at time `t` for the frame `(Y, Z)`.
fn lhs_rhs(traj: &FrameTrajectory, field: &TestField, t: f64, y: &DMatrix<f64>, z: &DMatrix<f64>) -> Result<(f64, f64)> {
    let condition = condition_number(y);
    if !(condition < FRAME_CONDITION_LIMIT) {
        return Err(Error::SingularFrame { t, condition });
    }
    let sys = traj.system();
    let prob = sys.problem();
    let k = prob.order();
    let (a, b, c) = sys.blocks(t)?;
    let jet = field.jet(t, k + 1);
    let (yh, zh) = zeroing_transform(prob, &jet.truncated(k), t)?;
    let yh_dot = jet.stacked(1, k + 1);

    let singular = || Error::SingularFrame { t, condition };
    let s = right_divide(z, y).ok_or_else(singular)?;
    let y_dot = &a * y + &b * z;
    let z_dot = &c * y - a.transpose() * z;
    let s_dot = right_divide(&(z_dot - &s * y_dot), y).ok_or_else(singular)?;

    let lhs = yh_dot.dot(&(&s * &yh)) + yh.dot(&(&s_dot * &yh)) + yh.dot(&(&s * &yh_dot));
    let w = &zh - &s * &yh;
    let rhs = zh.dot(&(&b * &zh)) + yh.dot(&(&c * &yh)) - w.dot(&(&b * &w));
    Ok((lhs, rhs))
}

/// `(d/dt(ŷᵀ Z Y⁻¹ ŷ), ẑᵀBẑ + ŷᵀCŷ − (ẑ − ZY⁻¹ŷ)ᵀ B (ẑ − ZY⁻¹ŷ))` at a grid
/// index. Refuses when `Y` is too ill-conditioned.
pub fn picone_lhs_rhs(traj: &FrameTrajectory, field: &TestField, index: usize) -> Result<(f64, f64)> {
    check_field(traj, field)?;
    let (y, z) = traj.vertical_frame(index);
    lhs_rhs(traj, field, traj.time(index), &y, &z)
}

pub fn picone_lhs_rhs_at(traj: &FrameTrajectory, field: &TestField, t: f64) -> Result<(f64, f64)> {
    check_field(traj, field)?;
    let (y, z) = traj.vertical_frame_at(t)?;
    lhs_rhs(traj, field, t, &y, &z)
}

/// Up to `count` grid indices after `a + delta` where `Y` is well
/// conditioned, spread evenly over the admissible ones.
pub fn picone_sample_indices(traj: &FrameTrajectory, delta: f64, count: usize) -> Vec<usize> {
    let start = traj.interval().0 + delta;
    let admissible: Vec<usize> = (0..traj.len())
        .filter(|&i| traj.time(i) > start && condition_number(&traj.vertical_frame(i).0) < FRAME_CONDITION_LIMIT)
        .collect();
    if admissible.len() <= count {
        return admissible;
    }
    if count == 1 {
        return alloc::vec![admissible[admissible.len() - 1]];
    }
    let last = admissible.len() - 1;
    (0..count).map(|j| admissible[j * last / (count - 1)]).collect()
}

/// `∫ L(t, h, …, h⁽ᵏ⁾) dt`, exact for polynomial data.
pub fn functional_value<Q: QuadraticFunctional + ?Sized>(prob: &Q, field: &TestField) -> f64 {
    bilinear_value(prob, field.polynomial(), field.polynomial())
}

/// `∫ B(t; u, v) dt` for column polynomials `u`, `v`, exact for polynomial data.
pub fn bilinear_value<Q: QuadraticFunctional + ?Sized>(prob: &Q, u: &MatrixPolynomial, v: &MatrixPolynomial) -> f64 {
    let (a, b) = prob.interval();
    let k = prob.order();
    let degree = prob.coefficient_degree() + u.degree().unwrap_or(0) + v.degree().unwrap_or(0);
    let nodes = nodes_for_degree(degree);
    const PANELS: usize = 4;
    let width = (b - a) / PANELS as f64;
    let mut total = 0.0;
    for p in 0..PANELS {
        let lo = a + width * p as f64;
        for (t, w) in gauss_legendre_on(nodes, lo, lo + width) {
            let ju = JetVector::of_polynomial(u, t, k);
            let jv = JetVector::of_polynomial(v, t, k);
            total += w * prob.bilinear_density(t, &ju, &jv);
        }
    }
    total
}

/// Result of the Picone-based evaluation of the functional.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PiconeIntegral {
    pub value: f64,
    /// Set when the near-`a` guard on `|Z Y⁻¹ ŷ|` had to intervene.
    pub capped: bool,
    pub min_integrand: f64,
}

/// Ratio between the guard on `|Z Y⁻¹ ŷ|` and the largest `|ẑ|` of the field.
const GUARD_FACTOR: f64 = 1e6;

/// Per-node data of the Picone integrand that does not depend on the field:
/// time, weight, the last block row of `Z Y⁻¹`, and `M_kk⁻¹`.
#[derive(Clone, Debug)]
pub struct PiconeNodes {
    nodes: Vec<(f64, f64, Option<DMatrix<f64>>, DMatrix<f64>)>,
}

impl PiconeNodes {
    /// Composite Gauss–Legendre nodes, [`NODES_PER_STEP`] per trajectory step.
    pub fn new(traj: &FrameTrajectory) -> Result<Self> {
        let sys = traj.system();
        let prob = sys.problem();
        let (k, n) = (prob.order(), prob.dim());
        let kn = k * n;
        let (x, w) = gauss_legendre(NODES_PER_STEP);
        let mut nodes = Vec::with_capacity((traj.len() - 1) * NODES_PER_STEP);
        for i in 0..traj.len() - 1 {
            let (t0, t1) = (traj.time(i), traj.time(i + 1));
            let half = 0.5 * (t1 - t0);
            let offsets: Vec<f64> = x.iter().map(|&xi| half * (xi + 1.0)).collect();
            let frames = traj.frames_after(i, &offsets)?;
            for ((s, wi), psi) in offsets.iter().zip(&w).zip(frames) {
                let t = t0 + s;
                let y = psi.view((0, 0), (kn, kn)).into_owned();
                let z_last = psi.view((kn + (k - 1) * n, 0), (n, kn)).into_owned();
                let s_last = right_divide(&z_last, &y);
                let inv = prob.leading().eval(t).try_inverse().ok_or(Error::SingularLeading { t })?;
                nodes.push((t, half * wi, s_last, inv));
            }
        }
        Ok(Self { nodes })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `½ ∫ (ẑ − ZY⁻¹ŷ)ᵀ B (ẑ − ZY⁻¹ŷ) dt`.
    pub fn integrate(&self, traj: &FrameTrajectory, field: &TestField) -> Result<PiconeIntegral> {
        check_field(traj, field)?;
        let prob = traj.system().problem();
        let k = prob.order();
        let n = prob.dim();
        let mut last_blocks = Vec::with_capacity(self.nodes.len());
        let mut zh_max: f64 = 0.0;
        for (t, ..) in &self.nodes {
            let (yh, zh) = zeroing_transform(prob, &field.jet(*t, k), *t)?;
            let z_last: DVector<f64> = zh.rows((k - 1) * n, n).into_owned();
            zh_max = zh_max.max(z_last.amax());
            last_blocks.push((yh, z_last));
        }
        let cap = GUARD_FACTOR * (1.0 + zh_max);
        let mut value = 0.0;
        let mut capped = false;
        let mut min_integrand = f64::INFINITY;
        for ((_, weight, s_last, inv), (yh, z_last)) in self.nodes.iter().zip(last_blocks) {
            let projected = match s_last {
                Some(s) => s * &yh,
                None => {
                    capped = true;
                    continue;
                }
            };
            let projected = if projected.amax() > cap || !projected.iter().all(|v| v.is_finite()) {
                capped = true;
                projected.map(|v| if v.is_finite() { v.clamp(-cap, cap) } else { 0.0 })
            } else {
                projected
            };
            let w = z_last - projected;
            let g = w.dot(&(inv * &w));
            min_integrand = min_integrand.min(g);
            value += weight * g;
        }
        Ok(PiconeIntegral { value: 0.5 * value, capped, min_integrand })
    }
}

/// `½ ∫ (ẑ − ZY⁻¹ŷ)ᵀ B (ẑ − ZY⁻¹ŷ) dt`, which equals the functional on
/// admissible fields when there is no conjugate point. Refuses otherwise.
pub fn functional_via_picone(
    traj: &FrameTrajectory,
    field: &TestField,
    opts: &ConjugacyOptions,
) -> Result<PiconeIntegral> {
    check_field(traj, field)?;
    let scan = find_conjugate_points(traj, opts)?;
    if let Some(p) = scan.conjugate_points.first() {
        return Err(Error::ConjugatePoint { t: p.t });
    }
    PiconeNodes::new(traj)?.integrate(traj, field)
}

/// Largest residuals of the frame identities over the grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameResiduals {
    /// `max ‖YᵀZ − ZᵀY‖`.
    pub lagrangian: f64,
    /// `max ‖YᵀZ − ZᵀY‖ / (1 + ‖Y‖‖Z‖)`.
    pub lagrangian_scaled: f64,
    /// `max ‖S − Sᵀ‖` with `S = ZY⁻¹`, where `Y` is well conditioned.
    pub symmetry: f64,
    /// `max ‖S − Sᵀ‖ / (1 + ‖S‖)`.
    pub symmetry_scaled: f64,
}

pub fn frame_symmetry_residuals(traj: &FrameTrajectory) -> FrameResiduals {
    let mut out = FrameResiduals { lagrangian: 0.0, lagrangian_scaled: 0.0, symmetry: 0.0, symmetry_scaled: 0.0 };
    for i in 0..traj.len() {
        let (y, z) = traj.vertical_frame(i);
        let r = (y.transpose() * &z - z.transpose() * &y).norm();
        out.lagrangian = out.lagrangian.max(r);
        out.lagrangian_scaled = out.lagrangian_scaled.max(r / (1.0 + y.norm() * z.norm()));
        if condition_number(&y) < FRAME_CONDITION_LIMIT {
            if let Some(s) = right_divide(&z, &y) {
                let r = (&s - s.transpose()).norm();
                out.symmetry = out.symmetry.max(r);
                out.symmetry_scaled = out.symmetry_scaled.max(r / (1.0 + s.norm()));
            }
        }
    }
    out
}

fn legendre_polynomials(count: usize) -> Vec<MatrixPolynomial> {
    let mut out: Vec<MatrixPolynomial> = Vec::with_capacity(count);
    let x = MatrixPolynomial::scalar(&[0.0, 1.0]);
    for p in 0..count {
        let next = match p {
            0 => MatrixPolynomial::scalar(&[1.0]),
            1 => x.clone(),
            _ => {
                let m = (p - 1) as f64;
                let lhs = (&x * &out[p - 1]).scale((2.0 * m + 1.0) / (m + 1.0));
                &lhs - &out[p - 2].scale(m / (m + 1.0))
            }
        };
        out.push(next);
    }
    out
}

/// Admissible basis `(t−a)ᵏ (b−t)ᵏ P_j(x(t)) e_r`, `P_j` Legendre on `[a, b]`.
pub fn hessian_basis(order: usize, dim: usize, interval: (f64, f64), basis_size: usize) -> Vec<TestField> {
    let (a, b) = interval;
    let legendre = legendre_polynomials(basis_size);
    let mut out = Vec::with_capacity(basis_size * dim);
    for p in &legendre {
        let shifted = p.compose_affine(-(a + b) / (b - a), 2.0 / (b - a));
        for r in 0..dim {
            let coeffs = shifted
                .coeffs()
                .iter()
                .map(|c| {
                    let mut col = DMatrix::zeros(dim, 1);
                    col[(r, 0)] = c[(0, 0)];
                    col
                })
                .collect();
            let q = MatrixPolynomial::new(dim, 1, coeffs).expect("column coefficients");
            out.push(TestField::new(q, order, interval).expect("column polynomial"));
        }
    }
    out
}

/// Smallest generalized eigenvalue of the functional against the L² Gram
/// matrix on a finite admissible basis.
pub fn discrete_hessian_min_eig<Q: QuadraticFunctional + ?Sized>(prob: &Q, basis_size: usize) -> Result<f64> {
    if basis_size < 4 {
        return Err(Error::InvalidArgument("basis size must be at least 4"));
    }
    let basis = hessian_basis(prob.order(), prob.dim(), prob.interval(), basis_size);
    let m = basis.len();
    let (a, b) = prob.interval();
    let mass_degree = 2 * basis[m - 1].polynomial().degree().unwrap_or(0);
    let mass_nodes: Vec<(f64, f64)> = gauss_legendre_on(nodes_for_degree(mass_degree), a, b).collect();
    let values: Vec<Vec<DMatrix<f64>>> =
        basis.iter().map(|f| mass_nodes.iter().map(|&(t, _)| f.polynomial().eval(t)).collect()).collect();
    let mut stiffness = DMatrix::zeros(m, m);
    let mut mass = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let kij = bilinear_value(prob, basis[i].polynomial(), basis[j].polynomial());
            let gij: f64 = mass_nodes
                .iter()
                .zip(values[i].iter().zip(&values[j]))
                .map(|(&(_, w), (u, v))| w * u.dot(v))
                .sum();
            stiffness[(i, j)] = kij;
            stiffness[(j, i)] = kij;
            mass[(i, j)] = gij;
            mass[(j, i)] = gij;
        }
    }
    let chol = mass.cholesky().ok_or(Error::InvalidArgument("basis Gram matrix is not positive definite"))?;
    let l = chol.l();
    let l_inv = l.clone().try_inverse().ok_or(Error::InvalidArgument("basis Gram matrix is singular"))?;
    let reduced = &l_inv * stiffness * l_inv.transpose();
    let sym = (&reduced + reduced.transpose()) * 0.5;
    Ok(sym.symmetric_eigen().eigenvalues.min())
}
