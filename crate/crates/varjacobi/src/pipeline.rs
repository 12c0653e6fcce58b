//! The `analyze`, `verify` and `rank` pipelines.

use varjacobi_core::conjugacy::find_conjugate_points;
use varjacobi_core::eswaran::{eswaran_integrated_check, scalar_vertical_solutions};
use varjacobi_core::frame::{default_step, integrate_frame};
use varjacobi_core::grassmann::{rank_sample, sample_times, RankSample, DEFAULT_RANK_TOL};
use varjacobi_core::picone::{
    discrete_hessian_min_eig, frame_symmetry_residuals, functional_value, picone_lhs_rhs, picone_sample_indices,
    PiconeNodes,
};
use varjacobi_core::{
    ConjugacyOptions, ConjugacyResult, ConjugatePoint, Error, FrameTrajectory, HamiltonianSystem, Result,
    SymplecticClass, TestField, Verdict, VariationalProblem,
};

use crate::battery::{self, DEFAULT_SEED};
use crate::problem_file::LoadedProblem;
use crate::report::{
    AnalysisReport, ConjugacySection, ConjugatePointEntry, FlagEntry, FunctionalEntry, OracleSection, ProblemEcho,
    RankEntry, ResidualSection, ScalarRouteSection, Statistic, ValidationEcho, VerifyReport,
};

pub const PICONE_TOL: f64 = 1e-7;
pub const LAGRANGIAN_TOL: f64 = 1e-9;
pub const RICCATI_TOL: f64 = 1e-6;
pub const DRIFT_TOL: f64 = 1e-9;
pub const HAMILTONIAN_TOL: f64 = 1e-12;
pub const FUNCTIONAL_TOL: f64 = 1e-6;
pub const ROUTE_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineOptions {
    pub step: Option<f64>,
    pub delta: Option<f64>,
    pub rank_tol: f64,
    pub basis: usize,
    pub seed: u64,
    /// Times in the rank and flag profiles.
    pub samples: usize,
    /// Random admissible fields for the identity checks.
    pub fields: usize,
    /// Grid points per field for the pointwise Picone check.
    pub picone_samples: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            step: None,
            delta: None,
            rank_tol: DEFAULT_RANK_TOL,
            basis: 12,
            seed: DEFAULT_SEED,
            samples: 101,
            fields: 5,
            picone_samples: 50,
        }
    }
}

impl PipelineOptions {
    pub fn step_for(&self, problem: &VariationalProblem) -> f64 {
        self.step.unwrap_or_else(|| default_step(problem.interval()))
    }

    pub fn conjugacy(&self) -> ConjugacyOptions {
        ConjugacyOptions { delta: self.delta, ..ConjugacyOptions::default() }
    }

    pub fn fields_for(&self, problem: &VariationalProblem) -> Vec<TestField> {
        let mut rng = battery::rng(self.seed);
        battery::random_fields(&mut rng, problem.dim(), problem.order(), problem.interval(), self.fields)
    }
}

pub fn integrate(problem: &VariationalProblem, opts: &PipelineOptions) -> Result<FrameTrajectory> {
    integrate_frame(&HamiltonianSystem::new(problem)?, opts.step_for(problem))
}

pub fn problem_echo(loaded: &LoadedProblem) -> ProblemEcho {
    let p = &loaded.problem;
    let (a, b) = p.interval();
    ProblemEcho {
        order: p.order(),
        dim: p.dim(),
        interval: [a, b],
        validation: ValidationEcho {
            passed: loaded.validation.passed,
            first_failure: loaded.validation.first_failure,
            min_leading_eigenvalue: loaded.validation.min_eigenvalue,
            symmetrized: loaded.symmetrized,
            reduced_to_band: loaded.reduced,
        },
        notes: loaded.notes(),
    }
}

fn point_entries(points: &[ConjugatePoint]) -> Vec<ConjugatePointEntry> {
    points.iter().map(|p| ConjugatePointEntry { t: p.t, kind: p.kind.as_str().to_string() }).collect()
}

/// Rank, flags and vertical intersection at `samples` times in `[a, b]`.
pub fn rank_table(traj: &FrameTrajectory, opts: &PipelineOptions) -> Result<Vec<RankSample>> {
    sample_times(traj.interval(), opts.samples, true).into_iter().map(|t| rank_sample(traj, t, opts.rank_tol)).collect()
}

fn drift_halving_ratio(problem: &VariationalProblem) -> Result<Option<f64>> {
    let (a, b) = problem.interval();
    let system = HamiltonianSystem::new(problem)?;
    let coarse = integrate_frame(&system, (b - a) / 64.0)?.symplectic_drift();
    let fine = integrate_frame(&system, (b - a) / 128.0)?.symplectic_drift();
    // Below this the drift is rounding noise and the ratio says nothing.
    Ok((coarse > 1e-12).then(|| fine / coarse))
}

fn relative_difference(x: f64, y: f64) -> f64 {
    (x - y).abs() / x.abs().max(y.abs()).max(f64::MIN_POSITIVE)
}

fn scalar_route(
    problem: &VariationalProblem,
    step: f64,
    opts: &PipelineOptions,
    fields: &[TestField],
    hamiltonian: &ConjugacyResult,
    failures: &mut Vec<String>,
) -> Result<Option<ScalarRouteSection>> {
    if problem.dim() != 1 {
        return Ok(None);
    }
    let sp = problem.diagonalize_1d()?;
    let sols = scalar_vertical_solutions(&sp, Some(step))?;
    let copts = opts.conjugacy();
    let scan = sols.find_conjugate_points(&copts)?;
    let ours: Vec<f64> = scan.sign_change_points().collect();
    let theirs: Vec<f64> = hamiltonian.sign_change_points().collect();
    let scale = 1.0_f64.max(problem.interval().1 - problem.interval().0);
    if ours.len() != theirs.len() || ours.iter().zip(&theirs).any(|(x, y)| (x - y).abs() > ROUTE_TOL * scale) {
        failures.push("scalar and Hamiltonian routes disagree on conjugate points".to_string());
    }
    let identity_residual = if scan.conjugate_points.is_empty() {
        let mut values = Vec::new();
        for field in fields {
            let check = eswaran_integrated_check(&sols, field, &copts)?;
            if !check.capped {
                values.push(relative_difference(check.lhs, check.rhs));
            }
        }
        let stat = Statistic::of(&values);
        if !(stat.max <= FUNCTIONAL_TOL) {
            failures.push(format!("scalar integrated identity residual {:e}", stat.max));
        }
        Some(stat)
    } else {
        None
    };
    Ok(Some(ScalarRouteSection { conjugate_points: point_entries(&scan.conjugate_points), identity_residual }))
}

/// Every residual check on a given trajectory. The trajectory is taken as
/// is, so a damaged one can be passed in to exercise the checks.
pub fn residuals(
    problem: &VariationalProblem,
    traj: &FrameTrajectory,
    conjugacy: &ConjugacyResult,
    ranks: &[RankSample],
    opts: &PipelineOptions,
) -> Result<ResidualSection> {
    let mut failures = Vec::new();
    let fields = opts.fields_for(problem);

    let indices = picone_sample_indices(traj, conjugacy.exclusion_window, opts.picone_samples);
    let mut picone = Vec::with_capacity(indices.len() * fields.len());
    for field in &fields {
        for &i in &indices {
            let (lhs, rhs) = picone_lhs_rhs(traj, field, i)?;
            picone.push((lhs - rhs).abs() / (1.0 + lhs.abs()));
        }
    }
    let picone = Statistic::of(&picone);
    if !(picone.max <= PICONE_TOL) {
        failures.push(format!("Picone residual {:e} exceeds {PICONE_TOL:e}", picone.max));
    }

    let frame = frame_symmetry_residuals(traj);
    if !(frame.lagrangian_scaled <= LAGRANGIAN_TOL) {
        failures.push(format!("YᵀZ − ZᵀY residual {:e} exceeds {LAGRANGIAN_TOL:e}", frame.lagrangian_scaled));
    }
    if !(frame.symmetry_scaled <= RICCATI_TOL) {
        failures.push(format!("ZY⁻¹ symmetry residual {:e} exceeds {RICCATI_TOL:e}", frame.symmetry_scaled));
    }

    let drift = traj.symplectic_drift();
    let drift_scale = traj.frames().iter().map(|psi| psi.norm_squared()).fold(0.0, f64::max);
    if !(drift <= DRIFT_TOL * drift_scale.max(1.0)) {
        failures.push(format!("symplectic drift {drift:e} exceeds {DRIFT_TOL:e} times the frame scale"));
    }

    let system = traj.system();
    let (a, b) = problem.interval();
    let mut infinitesimal: f64 = 0.0;
    for t in sample_times((a, b), 257, true) {
        let h = system.matrix(t)?;
        infinitesimal = infinitesimal.max(varjacobi_core::hamiltonian::hamiltonian_residual(&h) / (1.0 + h.norm()));
    }
    if !(infinitesimal <= HAMILTONIAN_TOL) {
        failures.push(format!("Hamiltonian structure residual {infinitesimal:e}"));
    }

    let n = problem.dim() as isize;
    let expected = SymplecticClass::expected_sequence(problem.order());
    let rank_consistent = ranks.iter().all(|r| r.rank == n);
    let flags_consistent = ranks.iter().all(|r| r.flags == expected);
    if !rank_consistent {
        failures.push(format!("Jacobi curve rank differs from {n}"));
    }
    if !flags_consistent {
        failures.push("flag classification differs from the isotropic/Lagrangian/coisotropic pattern".to_string());
    }

    let mut functionals = Vec::with_capacity(fields.len());
    let nodes = if conjugacy.verdict == Verdict::PositiveDefiniteCertified { Some(PiconeNodes::new(traj)?) } else { None };
    for (index, field) in fields.iter().enumerate() {
        let direct = functional_value(problem, field);
        let (via_picone, guard_capped) = match &nodes {
            Some(nodes) => {
                let integral = nodes.integrate(traj, field)?;
                (Some(integral.value), integral.capped)
            }
            None => (None, false),
        };
        let relative_difference = via_picone.map(|v| relative_difference(direct, v));
        if let Some(d) = relative_difference {
            if !guard_capped && !(d <= FUNCTIONAL_TOL) {
                failures.push(format!("two-way functional mismatch {d:e} on field {index}"));
            }
        }
        functionals.push(FunctionalEntry { field: index, direct, via_picone, guard_capped, relative_difference });
    }

    let scalar_route = scalar_route(problem, traj.step(), opts, &fields, conjugacy, &mut failures)?;

    Ok(ResidualSection {
        picone,
        lagrangian: frame.lagrangian_scaled,
        riccati_symmetry: frame.symmetry_scaled,
        symplectic_drift: drift,
        drift_scale,
        drift_halving_ratio: drift_halving_ratio(problem)?,
        infinitesimal_symplectic: infinitesimal,
        rank_consistent,
        flags_consistent,
        functionals,
        scalar_route,
        passed: failures.is_empty(),
        failures,
    })
}

/// Everything `analyze` computed; the trajectory is kept for CSV output.
pub struct Analysis {
    pub report: AnalysisReport,
    pub trajectory: FrameTrajectory,
    pub conjugacy: ConjugacyResult,
    pub ranks: Vec<RankSample>,
}

pub fn final_verdict(conjugacy: Verdict, residuals_passed: bool) -> &'static str {
    match conjugacy {
        Verdict::PositiveDefiniteCertified if residuals_passed => Verdict::PositiveDefiniteCertified.as_str(),
        Verdict::ConjugatePointFound => Verdict::ConjugatePointFound.as_str(),
        _ => Verdict::Inconclusive.as_str(),
    }
}

/// Exit status for a verdict string: 0 certified, 1 conjugate point, 2 otherwise.
pub fn exit_code(verdict: &str) -> i32 {
    if verdict == Verdict::PositiveDefiniteCertified.as_str() {
        0
    } else if verdict == Verdict::ConjugatePointFound.as_str() {
        1
    } else {
        2
    }
}

pub fn analyze(loaded: &LoadedProblem, opts: &PipelineOptions) -> Result<Analysis> {
    let traj = integrate(&loaded.problem, opts)?;
    analyze_trajectory(loaded, traj, opts)
}

pub fn analyze_trajectory(loaded: &LoadedProblem, traj: FrameTrajectory, opts: &PipelineOptions) -> Result<Analysis> {
    let problem = &loaded.problem;
    check_options(opts)?;
    let conjugacy = find_conjugate_points(&traj, &opts.conjugacy())?;
    let ranks = rank_table(&traj, opts)?;
    let residuals = residuals(problem, &traj, &conjugacy, &ranks, opts)?;
    let oracle = OracleSection { basis: opts.basis, min_eigenvalue: discrete_hessian_min_eig(problem, opts.basis)? };
    let verdict = final_verdict(conjugacy.verdict, residuals.passed).to_string();
    let report = AnalysisReport {
        seed: opts.seed,
        problem: problem_echo(loaded),
        conjugacy: ConjugacySection {
            step: traj.step(),
            delta: conjugacy.exclusion_window,
            verdict: conjugacy.verdict.as_str().to_string(),
            conjugate_points: point_entries(&conjugacy.conjugate_points),
            note: conjugacy.note().to_string(),
        },
        rank_profile: ranks.iter().map(|r| RankEntry { t: r.t, rank: r.rank }).collect(),
        flag_profile: ranks
            .iter()
            .map(|r| FlagEntry { t: r.t, classifications: r.flags.iter().map(|c| c.as_str().to_string()).collect() })
            .collect(),
        residuals,
        oracle,
        verdict,
    };
    Ok(Analysis { report, trajectory: traj, conjugacy, ranks })
}

pub fn verify(loaded: &LoadedProblem, opts: &PipelineOptions) -> Result<VerifyReport> {
    let traj = integrate(&loaded.problem, opts)?;
    verify_trajectory(loaded, &traj, opts)
}

pub fn verify_trajectory(loaded: &LoadedProblem, traj: &FrameTrajectory, opts: &PipelineOptions) -> Result<VerifyReport> {
    check_options(opts)?;
    let conjugacy = find_conjugate_points(traj, &opts.conjugacy())?;
    let ranks = rank_table(traj, opts)?;
    let residuals = residuals(&loaded.problem, traj, &conjugacy, &ranks, opts)?;
    Ok(VerifyReport {
        seed: opts.seed,
        problem: problem_echo(loaded),
        step: traj.step(),
        passed: residuals.passed,
        residuals,
    })
}

fn check_options(opts: &PipelineOptions) -> Result<()> {
    if !(opts.rank_tol > 0.0 && opts.rank_tol < 1.0) {
        return Err(Error::InvalidArgument("rank tolerance must lie in (0, 1)"));
    }
    if opts.basis == 0 {
        return Err(Error::InvalidArgument("oracle basis size must be positive"));
    }
    Ok(())
}
