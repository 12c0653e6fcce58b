//! The fundamental symplectic frame `Ψ(t)` of the Hamiltonian system and its
//! vertical part `(Y, Z)`.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianSystem;
use crate::linalg::symplectic_unit;
use crate::ode::{self, LinearFlow, Trajectory};

impl LinearFlow for HamiltonianSystem {
    fn dim(&self) -> usize {
        HamiltonianSystem::dim(self)
    }

    fn matrix(&self, t: f64) -> Result<DMatrix<f64>> {
        HamiltonianSystem::matrix(self, t)
    }

    fn taylor(&self, t: f64, order: usize) -> Result<Vec<DMatrix<f64>>> {
        HamiltonianSystem::taylor(self, t, order)
    }
}

#[derive(Clone, Debug)]
pub struct FrameTrajectory {
    system: HamiltonianSystem,
    trajectory: Trajectory,
    init: DMatrix<f64>,
}

/// Default step: a 4096th of the interval.
pub fn default_step(interval: (f64, f64)) -> f64 {
    (interval.1 - interval.0) / 4096.0
}

/// Integrates `Ψ′ = HΨ` from `Ψ(a) = −J`, so the first `kn` columns start
/// vertical with `Y(a) = 0`, `Z(a) = I`.
pub fn integrate_frame(system: &HamiltonianSystem, step: f64) -> Result<FrameTrajectory> {
    let m = system.half_dim();
    integrate_frame_from(system, step, -symplectic_unit(m))
}

/// Same as [`integrate_frame`] with `Z(a) = K`; the horizontal columns are
/// chosen as `(−K⁻ᵀ, 0)` so the initial frame stays symplectic.
pub fn integrate_frame_with_vertical(
    system: &HamiltonianSystem,
    step: f64,
    vertical: &DMatrix<f64>,
) -> Result<FrameTrajectory> {
    let m = system.half_dim();
    if vertical.shape() != (m, m) {
        return Err(Error::Shape { context: "vertical normalization", expected: (m, m), found: vertical.shape() });
    }
    let inv_t = vertical
        .clone()
        .try_inverse()
        .ok_or(Error::InvalidArgument("vertical normalization must be invertible"))?
        .transpose();
    let mut init = DMatrix::zeros(2 * m, 2 * m);
    init.view_mut((0, m), (m, m)).copy_from(&-inv_t);
    init.view_mut((m, 0), (m, m)).copy_from(vertical);
    integrate_frame_from(system, step, init)
}

fn integrate_frame_from(system: &HamiltonianSystem, step: f64, init: DMatrix<f64>) -> Result<FrameTrajectory> {
    let trajectory = ode::integrate(system, system.problem().interval(), init.clone(), step)?;
    Ok(FrameTrajectory { system: system.clone(), trajectory, init })
}

fn split(psi: &DMatrix<f64>, m: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    (psi.view((0, 0), (m, m)).into_owned(), psi.view((m, 0), (m, m)).into_owned())
}

impl FrameTrajectory {
    pub fn system(&self) -> &HamiltonianSystem {
        &self.system
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

    pub fn time(&self, index: usize) -> f64 {
        self.trajectory.grid()[index]
    }

    pub fn frames(&self) -> &[DMatrix<f64>] {
        self.trajectory.states()
    }

    pub fn frame(&self, index: usize) -> &DMatrix<f64> {
        self.trajectory.state(index)
    }

    /// `Ψ(a)`.
    pub fn init(&self) -> &DMatrix<f64> {
        &self.init
    }

    pub fn step(&self) -> f64 {
        self.trajectory.step()
    }

    pub fn interval(&self) -> (f64, f64) {
        self.trajectory.interval()
    }

    /// Length of the initial stretch that was sampled from the power series.
    pub fn series_window(&self) -> f64 {
        self.trajectory.series_window()
    }

    /// `Ψ(t)` at any `t` in the interval.
    pub fn frame_at(&self, t: f64) -> Result<DMatrix<f64>> {
        self.trajectory.state_at(&self.system, t)
    }

    /// `Ψ(t_index + s)` for each offset `s`, from one local power series.
    pub fn frames_after(&self, index: usize, offsets: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        self.trajectory.states_after(&self.system, index, offsets)
    }

    /// `(Y, Z)`: top and bottom halves of the first `kn` columns.
    pub fn vertical_frame(&self, index: usize) -> (DMatrix<f64>, DMatrix<f64>) {
        split(self.frame(index), self.system.half_dim())
    }

    pub fn vertical_frame_at(&self, t: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        Ok(split(&self.frame_at(t)?, self.system.half_dim()))
    }

    /// Largest `‖ΨᵀJΨ − J‖_F` over the grid.
    pub fn symplectic_drift(&self) -> f64 {
        let j = symplectic_unit(self.system.half_dim());
        self.frames().iter().map(|psi| (psi.transpose() * &j * psi - &j).norm()).fold(0.0, f64::max)
    }

    /// Copy with `delta` added to the frame at `index`; used to exercise the
    /// residual checks on a damaged trajectory.
    pub fn with_perturbed_frame(&self, index: usize, delta: &DMatrix<f64>) -> Result<Self> {
        if index >= self.len() || delta.shape() != self.frame(index).shape() {
            return Err(Error::InvalidArgument("perturbation does not match the trajectory"));
        }
        let mut out = self.clone();
        *out.trajectory.state_mut(index) += delta;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::MatrixPolynomial;
    use crate::problem::VariationalProblem;
    use alloc::vec;
    use core::f64::consts::PI;
    use nalgebra::dmatrix;

    fn c(x: f64) -> MatrixPolynomial {
        MatrixPolynomial::scalar(&[x])
    }

    fn z() -> MatrixPolynomial {
        MatrixPolynomial::zeros(1, 1)
    }

    fn harmonic(b: f64) -> HamiltonianSystem {
        let p = VariationalProblem::new(1, 1, (0.0, b), vec![c(-1.0), c(1.0)], vec![z()]).unwrap();
        HamiltonianSystem::new(&p).unwrap()
    }

    fn fourth() -> HamiltonianSystem {
        let p = VariationalProblem::new(2, 1, (0.0, 1.0), vec![z(), z(), c(1.0)], vec![z(), z()]).unwrap();
        HamiltonianSystem::new(&p).unwrap()
    }

    #[test]
    fn initial_frame_is_minus_j() {
        let traj = integrate_frame(&harmonic(2.0), 1e-2).unwrap();
        assert_eq!(traj.frame(0), &dmatrix![0.0, -1.0; 1.0, 0.0]);
        assert_eq!(traj.vertical_frame(0), (dmatrix![0.0], dmatrix![1.0]));
    }

    #[test]
    fn harmonic_quarter_turn() {
        let traj = integrate_frame(&harmonic(PI), 1e-3).unwrap();
        let psi = traj.frame_at(PI / 2.0).unwrap();
        assert!((psi[(0, 0)] - 1.0).abs() < 1e-8);
        assert!((psi[(0, 1)]).abs() < 1e-8);
        assert!((psi[(1, 1)] - 1.0).abs() < 1e-8);
        for i in (0..traj.len()).step_by(97) {
            let (y, zz) = traj.vertical_frame(i);
            let t = traj.time(i);
            assert!((y[(0, 0)] - t.sin()).abs() < 1e-10);
            assert!((zz[(0, 0)] - t.cos()).abs() < 1e-10);
        }
    }

    #[test]
    fn free_particle_is_exact() {
        let p = VariationalProblem::new(1, 1, (0.0, 1.0), vec![z(), c(1.0)], vec![z()]).unwrap();
        let traj = integrate_frame(&HamiltonianSystem::new(&p).unwrap(), 1.0 / 64.0).unwrap();
        for (i, psi) in traj.frames().iter().enumerate() {
            let t = traj.time(i);
            let expected = dmatrix![1.0, t; 0.0, 1.0] * dmatrix![0.0, -1.0; 1.0, 0.0];
            assert!((psi - expected).amax() < 1e-14);
        }
    }

    #[test]
    fn fourth_order_vertical_frame() {
        let traj = integrate_frame(&fourth(), 1.0 / 256.0).unwrap();
        for i in (0..traj.len()).step_by(17) {
            let t = traj.time(i);
            let (y, _) = traj.vertical_frame(i);
            let expected = dmatrix![-t * t * t / 6.0, t * t / 2.0; -t * t / 2.0, t];
            assert!((y - expected).amax() < 1e-13, "t = {t}");
        }
    }

    #[test]
    fn drift_is_small() {
        let traj = integrate_frame(&harmonic(2.0 * PI), 1e-3).unwrap();
        assert!(traj.symplectic_drift() <= 1e-10);
    }

    #[test]
    fn custom_vertical_normalization() {
        let k = dmatrix![2.0, 1.0; 0.0, 1.0];
        let traj = integrate_frame_with_vertical(&fourth(), 1.0 / 128.0, &k).unwrap();
        let (y0, z0) = traj.vertical_frame(0);
        assert_eq!(y0, DMatrix::zeros(2, 2));
        assert_eq!(z0, k);
        assert!(traj.symplectic_drift() < 1e-12);
        assert!(integrate_frame_with_vertical(&fourth(), 1.0 / 128.0, &DMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn perturbation_hook() {
        let traj = integrate_frame(&harmonic(1.0), 1.0 / 64.0).unwrap();
        let bad = traj.with_perturbed_frame(10, &dmatrix![0.0, 0.1; 0.0, 0.0]).unwrap();
        assert!(bad.symplectic_drift() > 1e-3);
        assert!(traj.with_perturbed_frame(1000, &dmatrix![0.0, 0.1; 0.0, 0.0]).is_err());
    }
}
