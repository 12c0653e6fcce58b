//! Conjugate points as zeros of the sub-Wronskian `W(t) = det Y(t)`.

use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::frame::{default_step, integrate_frame, FrameTrajectory};
use crate::hamiltonian::HamiltonianSystem;
use crate::linalg::determinant;
use crate::problem::VariationalProblem;

/// The absence of conjugate points is sufficient for positivity; their
/// presence does not by itself prove the functional indefinite.
pub const SUFFICIENCY_NOTE: &str = "absence of conjugate points on (a, b] certifies positive definiteness; \
a detected conjugate point does not by itself prove that the functional fails to be positive definite";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZeroKind {
    SignChange,
    Tangential,
}

impl ZeroKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ZeroKind::SignChange => "sign-change",
            ZeroKind::Tangential => "tangential",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConjugatePoint {
    pub t: f64,
    pub kind: ZeroKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    PositiveDefiniteCertified,
    ConjugatePointFound,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::PositiveDefiniteCertified => "positive-definite-certified",
            Verdict::ConjugatePointFound => "conjugate-point-found",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConjugacyOptions {
    /// Exclusion window after `a`; `None` picks `max(10·step, 1e-3·(b−a))`.
    pub delta: Option<f64>,
    /// Bracket width at which bisection stops; `None` picks `1e-12·max(1, b−a)`.
    pub refine_tol: Option<f64>,
    /// `|W|` below this fraction of `max |W|` counts as a near-zero.
    pub tangential_threshold: f64,
}

impl Default for ConjugacyOptions {
    fn default() -> Self {
        Self { delta: None, refine_tol: None, tangential_threshold: 1e-8 }
    }
}

impl ConjugacyOptions {
    pub fn with_delta(delta: f64) -> Self {
        Self { delta: Some(delta), ..Self::default() }
    }

    pub fn resolved_delta(&self, interval: (f64, f64), step: f64) -> f64 {
        self.delta.unwrap_or_else(|| default_delta(interval, step))
    }

    pub fn resolved_refine_tol(&self, interval: (f64, f64)) -> f64 {
        self.refine_tol.unwrap_or(1e-12 * (interval.1 - interval.0).max(1.0))
    }
}

pub fn default_delta(interval: (f64, f64), step: f64) -> f64 {
    (10.0 * step).max(1e-3 * (interval.1 - interval.0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConjugacyResult {
    pub samples: Vec<(f64, f64)>,
    pub conjugate_points: Vec<ConjugatePoint>,
    pub exclusion_window: f64,
    pub verdict: Verdict,
}

impl ConjugacyResult {
    pub fn note(&self) -> &'static str {
        SUFFICIENCY_NOTE
    }

    pub fn sign_change_points(&self) -> impl Iterator<Item = f64> + '_ {
        self.conjugate_points.iter().filter(|p| p.kind == ZeroKind::SignChange).map(|p| p.t)
    }
}

/// `det Y(t)` at a grid index.
pub fn subwronskian(traj: &FrameTrajectory, index: usize) -> f64 {
    determinant(&traj.vertical_frame(index).0)
}

pub fn subwronskian_at(traj: &FrameTrajectory, t: f64) -> Result<f64> {
    Ok(determinant(&traj.vertical_frame_at(t)?.0))
}

/// Parameters of a zero scan once defaults are resolved.
#[derive(Clone, Copy, Debug)]
pub struct ScanSettings {
    pub start: f64,
    pub refine_tol: f64,
    pub tangential_threshold: f64,
}

fn bisect<F: FnMut(f64) -> Result<f64>>(
    eval: &mut F,
    mut lo: f64,
    mut f_lo: f64,
    mut hi: f64,
    tol: f64,
) -> Result<f64> {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = eval(mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Minimizes `|f|` on `[lo, hi]`; returns the minimizer, the value there,
/// and the first point whose sign differs from `sign_ref` if one was seen.
fn golden_section<F: FnMut(f64) -> Result<f64>>(
    eval: &mut F,
    mut lo: f64,
    mut hi: f64,
    sign_ref: f64,
    tol: f64,
) -> Result<(f64, f64, Option<f64>)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut flip = None;
    let probe = |eval: &mut F, t: f64, flip: &mut Option<f64>| -> Result<f64> {
        let v = eval(t)?;
        if flip.is_none() && v != 0.0 && (v > 0.0) != (sign_ref > 0.0) {
            *flip = Some(t);
        }
        Ok(v)
    };
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = probe(eval, x1, &mut flip)?;
    let mut f2 = probe(eval, x2, &mut flip)?;
    for _ in 0..200 {
        if hi - lo <= tol || flip.is_some() {
            break;
        }
        if f1.abs() < f2.abs() {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = probe(eval, x1, &mut flip)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = probe(eval, x2, &mut flip)?;
        }
    }
    let (t, v) = if f1.abs() < f2.abs() { (x1, f1) } else { (x2, f2) };
    Ok((t, v, flip))
}

/// Scans sampled values of a function for zeros after `settings.start`.
///
/// Sign changes between neighbouring samples are refined by bisection;
/// interior local minima of `|f|` below the relative threshold are refined
/// by golden-section search and reported as tangential unless the search
/// uncovers a sign change. A near-zero value at the last sample is reported
/// as well.
pub fn scan_zeros<F: FnMut(f64) -> Result<f64>>(
    times: &[f64],
    values: &[f64],
    settings: &ScanSettings,
    mut eval: F,
) -> Result<Vec<ConjugatePoint>> {
    let idx: Vec<usize> = (0..times.len()).filter(|&i| times[i] > settings.start).collect();
    let mut points = Vec::new();
    if idx.is_empty() {
        return Ok(points);
    }
    let scale = idx.iter().map(|&i| values[i].abs()).fold(0.0, f64::max);
    let small = settings.tangential_threshold * scale;
    let tol = settings.refine_tol;

    for w in idx.windows(2) {
        let (i, j) = (w[0], w[1]);
        let (fi, fj) = (values[i], values[j]);
        if fi != 0.0 && fj != 0.0 && (fi > 0.0) != (fj > 0.0) {
            let t = bisect(&mut eval, times[i], fi, times[j], tol)?;
            points.push(ConjugatePoint { t, kind: ZeroKind::SignChange });
        } else if fi == 0.0 && w[0] != idx[0] {
            points.push(ConjugatePoint { t: times[i], kind: ZeroKind::SignChange });
        }
    }

    for w in idx.windows(3) {
        let (p, i, q) = (w[0], w[1], w[2]);
        let (fp, fi, fq) = (values[p], values[i], values[q]);
        let v = fi.abs();
        if fi == 0.0 || v > small || v > fp.abs() || v > fq.abs() {
            continue;
        }
        if (fp > 0.0) != (fi > 0.0) || (fq > 0.0) != (fi > 0.0) {
            continue;
        }
        let (t_min, _, flip) = golden_section(&mut eval, times[p], times[q], fi, tol)?;
        match flip {
            Some(tf) => {
                let f_left = fp;
                let left = bisect(&mut eval, times[p], f_left, tf, tol)?;
                let f_flip = eval(tf)?;
                let right = bisect(&mut eval, tf, f_flip, times[q], tol)?;
                points.push(ConjugatePoint { t: left, kind: ZeroKind::SignChange });
                points.push(ConjugatePoint { t: right, kind: ZeroKind::SignChange });
            }
            None => points.push(ConjugatePoint { t: t_min, kind: ZeroKind::Tangential }),
        }
    }

    let last = *idx.last().unwrap_or(&0);
    if values[last].abs() <= small && !points.iter().any(|p| p.t >= times[last] - tol) {
        let isolated = idx.len() >= 2 && values[idx[idx.len() - 2]].abs() > small;
        let kind = if isolated { ZeroKind::SignChange } else { ZeroKind::Tangential };
        points.push(ConjugatePoint { t: times[last], kind });
    }

    points.sort_by(|x, y| x.t.total_cmp(&y.t));
    points.dedup_by(|x, y| (x.t - y.t).abs() <= tol && x.kind == y.kind);
    Ok(points)
}

pub fn verdict_for(points: &[ConjugatePoint], scanned: bool) -> Verdict {
    if points.iter().any(|p| p.kind == ZeroKind::SignChange) {
        Verdict::ConjugatePointFound
    } else if !points.is_empty() || !scanned {
        Verdict::Inconclusive
    } else {
        Verdict::PositiveDefiniteCertified
    }
}

pub fn find_conjugate_points(traj: &FrameTrajectory, opts: &ConjugacyOptions) -> Result<ConjugacyResult> {
    let interval = traj.interval();
    let delta = opts.resolved_delta(interval, traj.step());
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument("exclusion window must be positive"));
    }
    let settings = ScanSettings {
        start: interval.0 + delta,
        refine_tol: opts.resolved_refine_tol(interval),
        tangential_threshold: opts.tangential_threshold,
    };
    let times = traj.grid();
    let values: Vec<f64> = (0..traj.len()).map(|i| subwronskian(traj, i)).collect();
    let points = scan_zeros(times, &values, &settings, |t| subwronskian_at(traj, t))?;
    let scanned = times.iter().filter(|&&t| t > settings.start).count() >= 2;
    Ok(ConjugacyResult {
        samples: times.iter().copied().zip(values).collect(),
        verdict: verdict_for(&points, scanned),
        conjugate_points: points,
        exclusion_window: delta,
    })
}

/// Builds the Hamiltonian system, integrates the frame and scans `det Y`.
pub fn positivity_verdict(
    prob: &VariationalProblem,
    step: Option<f64>,
    opts: &ConjugacyOptions,
) -> Result<ConjugacyResult> {
    let system = HamiltonianSystem::new(prob)?;
    let traj = integrate_frame(&system, step.unwrap_or_else(|| default_step(prob.interval())))?;
    find_conjugate_points(&traj, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::MatrixPolynomial;
    use alloc::vec;
    use core::f64::consts::PI;

    fn c(x: f64) -> MatrixPolynomial {
        MatrixPolynomial::scalar(&[x])
    }

    fn z() -> MatrixPolynomial {
        MatrixPolynomial::zeros(1, 1)
    }

    fn harmonic(b: f64) -> VariationalProblem {
        VariationalProblem::new(1, 1, (0.0, b), vec![c(-1.0), c(1.0)], vec![z()]).unwrap()
    }

    fn fourth() -> VariationalProblem {
        VariationalProblem::new(2, 1, (0.0, 1.0), vec![z(), z(), c(1.0)], vec![z(), z()]).unwrap()
    }

    fn traj(p: &VariationalProblem, step: f64) -> FrameTrajectory {
        integrate_frame(&HamiltonianSystem::new(p).unwrap(), step).unwrap()
    }

    #[test]
    fn subwronskian_examples() {
        let t = traj(&harmonic(3.0), 1e-3);
        assert_eq!(subwronskian(&t, 0), 0.0);
        for i in (0..t.len()).step_by(250) {
            assert!((subwronskian(&t, i) - t.time(i).sin()).abs() < 1e-10);
        }
        let t = traj(&fourth(), 1.0 / 512.0);
        for i in (0..t.len()).step_by(31) {
            let s = t.time(i);
            assert!((subwronskian(&t, i) - s.powi(4) / 12.0).abs() < 1e-13);
        }
    }

    #[test]
    fn harmonic_zeros() {
        let t = traj(&harmonic(10.0), 1e-3);
        let r = find_conjugate_points(&t, &ConjugacyOptions::with_delta(0.01)).unwrap();
        assert_eq!(r.verdict, Verdict::ConjugatePointFound);
        let found: Vec<f64> = r.sign_change_points().collect();
        assert_eq!(found.len(), 3);
        for (m, t) in found.iter().enumerate() {
            assert!((t - (m + 1) as f64 * PI).abs() < 1e-6);
        }
    }

    #[test]
    fn no_zero_before_pi() {
        let r = positivity_verdict(&harmonic(3.0), Some(1e-3), &ConjugacyOptions::with_delta(0.01)).unwrap();
        assert!(r.conjugate_points.is_empty());
        assert_eq!(r.verdict, Verdict::PositiveDefiniteCertified);
    }

    #[test]
    fn verdicts() {
        let opts = ConjugacyOptions::default();
        assert_eq!(positivity_verdict(&harmonic(1.0), None, &opts).unwrap().verdict, Verdict::PositiveDefiniteCertified);
        let r = positivity_verdict(&harmonic(4.0), None, &opts).unwrap();
        assert_eq!(r.verdict, Verdict::ConjugatePointFound);
        assert!((r.conjugate_points[0].t - PI).abs() < 1e-6);
        assert_eq!(positivity_verdict(&fourth(), None, &opts).unwrap().verdict, Verdict::PositiveDefiniteCertified);
    }

    #[test]
    fn default_window() {
        let r = positivity_verdict(&harmonic(1.0), None, &ConjugacyOptions::default()).unwrap();
        assert!((r.exclusion_window - 1e-3 * 10.0 / 4.096).abs() < 1e-15);
    }

    #[test]
    fn tangential_zero_is_flagged() {
        let times: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let f = |t: f64| (t - 0.5) * (t - 0.5) + 1e-14;
        let values: Vec<f64> = times.iter().map(|&t| f(t)).collect();
        let settings = ScanSettings { start: 0.01, refine_tol: 1e-12, tangential_threshold: 1e-8 };
        let pts = scan_zeros(&times, &values, &settings, |t| Ok(f(t))).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].kind, ZeroKind::Tangential);
        assert!((pts[0].t - 0.5).abs() < 1e-5);
        assert_eq!(verdict_for(&pts, true), Verdict::Inconclusive);
    }

    #[test]
    fn hidden_pair_of_zeros_is_resolved() {
        let times: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let f = |t: f64| (t - 0.5019) * (t - 0.5021);
        let values: Vec<f64> = times.iter().map(|&t| f(t)).collect();
        let settings = ScanSettings { start: 0.01, refine_tol: 1e-13, tangential_threshold: 1e-4 };
        assert!(values[50] < 1e-4 * 0.25);
        let pts = scan_zeros(&times, &values, &settings, |t| Ok(f(t))).unwrap();
        assert_eq!(pts.len(), 2);
        assert!(pts.iter().all(|p| p.kind == ZeroKind::SignChange));
        assert!((pts[0].t - 0.5019).abs() < 1e-10 && (pts[1].t - 0.5021).abs() < 1e-10);
    }
}
