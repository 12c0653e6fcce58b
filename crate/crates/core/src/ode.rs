//! Fixed-step integration of linear matrix ODEs `Ψ′ = H(t) Ψ`.
//!
//! The solution is sampled on a uniform grid by classical RK4. Close to the
//! initial time the grid samples come from the power series of the exact
//! solution instead: solutions that start at zero and grow like a high power
//! of `t − a` keep their relative accuracy that way, which RK4 alone cannot
//! deliver when the solution is smaller than its own truncation error.

use alloc::vec::Vec;

use libm::ceil;
use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub trait LinearFlow {
    /// Size of the square coefficient matrix.
    fn dim(&self) -> usize;
    /// `H(t)`.
    fn matrix(&self, t: f64) -> Result<DMatrix<f64>>;
    /// Taylor coefficients of `s ↦ H(t + s)` up to `s^order`.
    fn taylor(&self, t: f64, order: usize) -> Result<Vec<DMatrix<f64>>>;
}

/// Number of power-series terms used near the initial time.
pub const SERIES_TERMS: usize = 60;

/// Terms of the power series used between grid points.
const LOCAL_TERMS: usize = 16;

/// Relative size of the last series terms at which the window is accepted.
const SERIES_TAIL: f64 = 1e-18;

#[derive(Clone, Debug)]
pub struct Trajectory {
    grid: Vec<f64>,
    states: Vec<DMatrix<f64>>,
    step: f64,
    series: Vec<DMatrix<f64>>,
    window: f64,
}

/// Power series coefficients of the solution through `(t0, init)`.
pub fn solution_series<F: LinearFlow + ?Sized>(
    flow: &F,
    t0: f64,
    init: &DMatrix<f64>,
    order: usize,
) -> Result<Vec<DMatrix<f64>>> {
    let h = flow.taylor(t0, order)?;
    let mut p: Vec<DMatrix<f64>> = Vec::with_capacity(order + 1);
    p.push(init.clone());
    for q in 0..order {
        let mut acc = DMatrix::zeros(init.nrows(), init.ncols());
        for l in 0..=q {
            acc += &h[l] * &p[q - l];
        }
        p.push(acc / (q + 1) as f64);
    }
    Ok(p)
}

fn eval_series(series: &[DMatrix<f64>], s: f64) -> DMatrix<f64> {
    let mut acc = DMatrix::zeros(series[0].nrows(), series[0].ncols());
    for c in series.iter().rev() {
        acc *= s;
        acc += c;
    }
    acc
}

/// Largest `w ≤ max_window` (by halving) on which the truncated series is
/// converged; zero if none is found above `min_window`.
fn series_window(series: &[DMatrix<f64>], max_window: f64, min_window: f64) -> f64 {
    let mut w = max_window;
    while w >= min_window {
        let mut power = 1.0;
        let mut peak: f64 = 0.0;
        let mut tail: f64 = 0.0;
        let len = series.len();
        for (q, c) in series.iter().enumerate() {
            let m = c.norm() * power;
            peak = peak.max(m);
            if q + 4 >= len {
                tail = tail.max(m);
            }
            power *= w;
        }
        if tail.is_finite() && tail <= SERIES_TAIL * peak {
            return w;
        }
        w *= 0.5;
    }
    0.0
}

fn rk4_step<F: LinearFlow + ?Sized>(flow: &F, t: f64, h: f64, psi: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let h0 = flow.matrix(t)?;
    let hm = flow.matrix(t + 0.5 * h)?;
    let h1 = flow.matrix(t + h)?;
    let k1 = &h0 * psi;
    let k2 = &hm * (psi + &k1 * (0.5 * h));
    let k3 = &hm * (psi + &k2 * (0.5 * h));
    let k4 = &h1 * (psi + &k3 * h);
    Ok(psi + (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0))
}

/// Integrates `Ψ′ = H Ψ` on `interval` from `Ψ(a) = init`.
///
/// The step is rounded down so that a whole number of steps covers the
/// interval; `step` must not exceed a sixteenth of its length.
pub fn integrate<F: LinearFlow + ?Sized>(
    flow: &F,
    interval: (f64, f64),
    init: DMatrix<f64>,
    step: f64,
) -> Result<Trajectory> {
    let (a, b) = interval;
    if !(step.is_finite() && step > 0.0) || step > (b - a) / 16.0 * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument("step must lie in (0, (b - a) / 16]"));
    }
    if init.nrows() != flow.dim() {
        return Err(Error::Shape {
            context: "initial frame",
            expected: (flow.dim(), init.ncols()),
            found: init.shape(),
        });
    }
    let steps = ceil((b - a) / step - 1e-9) as usize;
    let h = (b - a) / steps as f64;
    let grid: Vec<f64> = (0..=steps).map(|i| if i == steps { b } else { a + h * i as f64 }).collect();

    let series = solution_series(flow, a, &init, SERIES_TERMS)?;
    let window = series_window(&series, (b - a) / 16.0, h);

    let mut states = Vec::with_capacity(steps + 1);
    for &t in &grid {
        if t - a > window {
            break;
        }
        states.push(if t == a { init.clone() } else { eval_series(&series, t - a) });
    }
    while states.len() <= steps {
        let i = states.len() - 1;
        let next = rk4_step(flow, grid[i], grid[i + 1] - grid[i], &states[i])?;
        states.push(next);
    }
    Ok(Trajectory { grid, states, step: h, series, window })
}

impl Trajectory {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn states(&self) -> &[DMatrix<f64>] {
        &self.states
    }

    pub fn state(&self, index: usize) -> &DMatrix<f64> {
        &self.states[index]
    }

    /// Actual step used (a divisor of the interval length).
    pub fn step(&self) -> f64 {
        self.step
    }

    /// Length of the initial stretch sampled from the power series.
    pub fn series_window(&self) -> f64 {
        self.window
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.grid[0], self.grid[self.grid.len() - 1])
    }

    /// Solution at an arbitrary `t` in the interval: the power series at `a`
    /// inside the initial window, otherwise the power series around the grid
    /// point to the left.
    pub fn state_at<F: LinearFlow + ?Sized>(&self, flow: &F, t: f64) -> Result<DMatrix<f64>> {
        let (a, b) = self.interval();
        if !(a..=b).contains(&t) {
            return Err(Error::InvalidArgument("time outside the integration interval"));
        }
        if t - a <= self.window {
            return Ok(eval_series(&self.series, t - a));
        }
        let i = self.left_index(t);
        let dt = t - self.grid[i];
        if dt == 0.0 {
            return Ok(self.states[i].clone());
        }
        Ok(eval_series(&self.local_series(flow, i)?, dt))
    }

    /// Solution at several offsets `s` to the right of grid point `index`,
    /// sharing one local power series.
    pub fn states_after<F: LinearFlow + ?Sized>(
        &self,
        flow: &F,
        index: usize,
        offsets: &[f64],
    ) -> Result<Vec<DMatrix<f64>>> {
        let a = self.grid[0];
        let t0 = self.grid[index];
        let mut local = None;
        offsets
            .iter()
            .map(|&s| {
                if t0 + s - a <= self.window {
                    return Ok(eval_series(&self.series, t0 + s - a));
                }
                if local.is_none() {
                    local = Some(self.local_series(flow, index)?);
                }
                Ok(eval_series(local.as_ref().expect("series computed above"), s))
            })
            .collect()
    }

    /// Grid index `i` with `t_i ≤ t < t_(i+1)`, clamped to the last step.
    pub fn left_index(&self, t: f64) -> usize {
        let i = ((t - self.grid[0]) / self.step) as usize;
        let i = i.min(self.grid.len() - 2);
        if self.grid[i] > t {
            i - 1
        } else {
            i
        }
    }

    fn local_series<F: LinearFlow + ?Sized>(&self, flow: &F, index: usize) -> Result<Vec<DMatrix<f64>>> {
        solution_series(flow, self.grid[index], &self.states[index], LOCAL_TERMS)
    }

    pub(crate) fn state_mut(&mut self, index: usize) -> &mut DMatrix<f64> {
        &mut self.states[index]
    }
}
