//! Jets of the solution frame and the geometry of the Jacobi curve.
//!
//! Row `r < n` of `Ψ(t)` lists component `r` of every solution, so
//! `𝒜(t) = Ψ(t)[0..n, :]ᵀ` is a `2kn × n` frame of the solution curve in
//! `Gr(n, 2kn)`. Its derivatives come from the power series of `Ψ` at `t`,
//! which only needs Taylor coefficients of `H` and no differencing of
//! integrated data. Span computations work on column-normalized matrices;
//! spans and ranks do not depend on column scaling, and the normalization
//! keeps jets of very different magnitudes comparable.

use alloc::vec::Vec;
use core::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::frame::FrameTrajectory;
use crate::linalg::{condition_number, numerical_rank, symplectic_unit};
use crate::ode::solution_series;

/// Default relative threshold for numerical ranks.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Condition number below which the full jet matrix counts as invertible.
pub const FANNING_CONDITION_LIMIT: f64 = 1e10;

#[derive(Clone, Debug, PartialEq)]
pub struct FrameJetStack {
    t: f64,
    jets: Vec<DMatrix<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymplecticClass {
    Isotropic,
    Lagrangian,
    Coisotropic,
    Full,
    None,
}

impl SymplecticClass {
    pub fn as_str(self) -> &'static str {
        match self {
            SymplecticClass::Isotropic => "isotropic",
            SymplecticClass::Lagrangian => "lagrangian",
            SymplecticClass::Coisotropic => "coisotropic",
            SymplecticClass::Full => "full",
            SymplecticClass::None => "none",
        }
    }

    /// Pattern for prolongations `0..2k` of a Jacobi curve of order `k`.
    pub fn expected_sequence(k: usize) -> Vec<SymplecticClass> {
        let mut out = Vec::with_capacity(2 * k);
        out.extend((0..k - 1).map(|_| SymplecticClass::Isotropic));
        out.push(SymplecticClass::Lagrangian);
        out.extend((0..k - 1).map(|_| SymplecticClass::Coisotropic));
        out.push(SymplecticClass::Full);
        out
    }
}

impl fmt::Display for SymplecticClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FanningCheck {
    pub is_fanning: bool,
    pub condition_number: f64,
}

fn normalize_columns(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for mut col in out.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
    }
    out
}

/// Orthonormal basis of the column span, rank decided relative to `σ_max`.
fn span_basis(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let max = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > rel_tol * max).collect();
    DMatrix::from_fn(m.nrows(), keep.len(), |r, c| u[(r, keep[c])])
}

/// Orthonormal basis of the null space of a wide matrix.
fn kernel_basis(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let cols = m.ncols();
    let mut padded = DMatrix::zeros(cols.max(m.nrows()), cols);
    padded.view_mut((0, 0), m.shape()).copy_from(m);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let max = svd.singular_values.max();
    let null: Vec<usize> =
        (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] <= rel_tol * max).collect();
    DMatrix::from_fn(cols, null.len(), |r, c| v_t[(null[c], r)])
}

impl FrameJetStack {
    /// All jets must share the shape `2kn × n`.
    pub fn new(t: f64, jets: Vec<DMatrix<f64>>) -> Result<Self> {
        let Some(first) = jets.first() else {
            return Err(Error::InvalidArgument("a jet stack needs at least one matrix"));
        };
        let shape = first.shape();
        if shape.0 % 2 != 0 || shape.1 == 0 || shape.0 % (2 * shape.1) != 0 {
            return Err(Error::InvalidArgument("jets must be 2kn x n"));
        }
        if let Some(bad) = jets.iter().find(|j| j.shape() != shape) {
            return Err(Error::Shape { context: "frame jet", expected: shape, found: bad.shape() });
        }
        Ok(Self { t, jets })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn jets(&self) -> &[DMatrix<f64>] {
        &self.jets
    }

    /// Highest jet order held.
    pub fn max_order(&self) -> usize {
        self.jets.len() - 1
    }

    /// `n`.
    pub fn dim(&self) -> usize {
        self.jets[0].ncols()
    }

    /// `kn`.
    pub fn half_dim(&self) -> usize {
        self.jets[0].nrows() / 2
    }

    /// `k`.
    pub fn order(&self) -> usize {
        self.half_dim() / self.dim()
    }

    /// `(𝒜 | 𝒜′ | … | 𝒜⁽ⁱ⁾)`.
    pub fn juxtaposed(&self, i: usize) -> Result<DMatrix<f64>> {
        if i > self.max_order() {
            return Err(Error::InvalidArgument("jet order exceeds the stack"));
        }
        let n = self.dim();
        let mut out = DMatrix::zeros(self.jets[0].nrows(), (i + 1) * n);
        for (j, jet) in self.jets[..=i].iter().enumerate() {
            out.view_mut((0, j * n), jet.shape()).copy_from(jet);
        }
        Ok(out)
    }

    /// `rank(𝒜 | … | 𝒜⁽ᵏ⁾) − kn`.
    pub fn curve_rank(&self, rel_tol: f64) -> Result<isize> {
        let f = normalize_columns(&self.juxtaposed(self.order())?);
        Ok(numerical_rank(&f, rel_tol) as isize - self.half_dim() as isize)
    }

    /// Invertibility of `(𝒜 | … | 𝒜⁽²ᵏ⁻¹⁾)`.
    pub fn fanning_check(&self) -> Result<FanningCheck> {
        let f = normalize_columns(&self.juxtaposed(2 * self.order() - 1)?);
        let condition_number = condition_number(&f);
        Ok(FanningCheck { is_fanning: condition_number < FANNING_CONDITION_LIMIT, condition_number })
    }

    /// Symplectic type of the `i`-th prolongation `span(𝒜, …, 𝒜⁽ⁱ⁾)`.
    pub fn classify_symplectic(&self, i: usize, rel_tol: f64) -> Result<SymplecticClass> {
        let kn = self.half_dim();
        if i >= 2 * self.order() {
            return Err(Error::InvalidArgument("prolongation order must be below 2k"));
        }
        let f = normalize_columns(&self.juxtaposed(i)?);
        let d = numerical_rank(&f, rel_tol);
        if d == 2 * kn {
            return Ok(SymplecticClass::Full);
        }
        let j = symplectic_unit(kn);
        let form = f.transpose() * &j;
        let norm = f.norm();
        if (&form * &f).norm() <= rel_tol * norm * norm {
            return Ok(if d == kn { SymplecticClass::Lagrangian } else { SymplecticClass::Isotropic });
        }
        let complement = kernel_basis(&form, rel_tol);
        let span = span_basis(&f, rel_tol);
        let residual = (&complement - &span * (span.transpose() * &complement)).amax();
        Ok(if complement.ncols() == 0 || residual <= rel_tol {
            SymplecticClass::Coisotropic
        } else {
            SymplecticClass::None
        })
    }

    /// Classes of all prolongations `0..=max_order`.
    pub fn flag_profile(&self, rel_tol: f64) -> Result<Vec<SymplecticClass>> {
        (0..=self.max_order().min(2 * self.order() - 1)).map(|i| self.classify_symplectic(i, rel_tol)).collect()
    }

    /// `dim(ℓ(t) ∩ 𝒱)`: corank of the top `kn` rows of `(𝒜 | … | 𝒜⁽ᵏ⁻¹⁾)`,
    /// with singular values judged relative to the norm of that frame.
    pub fn vertical_intersection_dim(&self, rel_tol: f64) -> Result<usize> {
        let kn = self.half_dim();
        let frame = self.juxtaposed(self.order() - 1)?;
        let scale = crate::linalg::singular_values(&frame).first().copied().unwrap_or(0.0);
        let top = frame.view((0, 0), (kn, kn)).into_owned();
        let rank = crate::linalg::singular_values(&top).iter().filter(|&&s| s > rel_tol * scale).count();
        Ok(kn - rank)
    }
}

fn stack_from_frame(traj: &FrameTrajectory, t: f64, psi: &DMatrix<f64>, max_order: usize) -> Result<FrameJetStack> {
    let k = traj.system().problem().order();
    let n = traj.system().problem().dim();
    if max_order > 2 * k - 1 {
        return Err(Error::InvalidArgument("jet order must not exceed 2k - 1"));
    }
    let series = solution_series(traj.system(), t, psi, max_order)?;
    let mut factorial = 1.0;
    let jets = series
        .iter()
        .enumerate()
        .map(|(j, c)| {
            if j > 0 {
                factorial *= j as f64;
            }
            c.rows(0, n).transpose() * factorial
        })
        .collect();
    FrameJetStack::new(t, jets)
}

/// Jets `𝒜, …, 𝒜⁽ᵐ⁾` at a grid index, `m ≤ 2k − 1`.
pub fn frame_jet(traj: &FrameTrajectory, index: usize, max_order: usize) -> Result<FrameJetStack> {
    stack_from_frame(traj, traj.time(index), traj.frame(index), max_order)
}

/// Jets at an arbitrary time in the interval.
pub fn frame_jet_at(traj: &FrameTrajectory, t: f64, max_order: usize) -> Result<FrameJetStack> {
    let psi = traj.frame_at(t)?;
    stack_from_frame(traj, t, &psi, max_order)
}

/// Everything the rank table reports at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct RankSample {
    pub t: f64,
    pub rank: isize,
    pub flags: Vec<SymplecticClass>,
    pub fanning: FanningCheck,
    pub vertical_dim: usize,
}

pub fn rank_sample(traj: &FrameTrajectory, t: f64, rel_tol: f64) -> Result<RankSample> {
    let k = traj.system().problem().order();
    let stack = frame_jet_at(traj, t, 2 * k - 1)?;
    Ok(RankSample {
        t,
        rank: stack.curve_rank(rel_tol)?,
        flags: stack.flag_profile(rel_tol)?,
        fanning: stack.fanning_check()?,
        vertical_dim: stack.vertical_intersection_dim(rel_tol)?,
    })
}

/// `count` equally spaced times in `[a, b]`, or in `(a, b]` when
/// `include_start` is false.
pub fn sample_times(interval: (f64, f64), count: usize, include_start: bool) -> Vec<f64> {
    let (a, b) = interval;
    match (count, include_start) {
        (0, _) => Vec::new(),
        (1, _) => alloc::vec![b],
        (_, true) => (0..count).map(|i| if i + 1 == count { b } else { a + (b - a) * i as f64 / (count - 1) as f64 }).collect(),
        (_, false) => (1..=count).map(|i| if i == count { b } else { a + (b - a) * i as f64 / count as f64 }).collect(),
    }
}
