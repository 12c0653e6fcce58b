use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use varjacobi::pipeline::{self, PipelineOptions};
use varjacobi::problem_file::{load_problem, LoadedProblem};
use varjacobi::{battery, report, tables};
use varjacobi_core::eswaran::scalar_vertical_solutions;

const EXIT_INVALID: u8 = 3;

#[derive(Parser)]
#[command(name = "varjacobi", version, about = "Conjugate points and positivity of higher-order quadratic functionals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline; exit 0 certified, 1 conjugate point, 2 inconclusive, 3 invalid input.
    Analyze(Common),
    /// Residual checks only; exit 0 iff all are within tolerance.
    Verify(Common),
    /// CSV of t, rank, flags, vertical_dim.
    Rank(Common),
}

#[derive(Args)]
struct Common {
    /// Problem file (JSON).
    problem: PathBuf,
    /// Write the report (or CSV for `rank`) here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Prefix for CSV tables written by `analyze`.
    #[arg(long)]
    csv: Option<String>,
    /// Integration step; defaults to (b - a) / 4096.
    #[arg(long)]
    step: Option<f64>,
    /// Exclusion window after a; defaults to max(10 step, 1e-3 (b - a)).
    #[arg(long)]
    delta: Option<f64>,
    /// Seed for the random test fields.
    #[arg(long, default_value_t = battery::DEFAULT_SEED)]
    seed: u64,
    /// Relative singular value threshold for ranks.
    #[arg(long = "rank-tol", default_value_t = 1e-8)]
    rank_tol: f64,
    /// Basis size of the discretized Hessian.
    #[arg(long, default_value_t = 12)]
    basis: usize,
    /// Number of times in the rank and flag profiles.
    #[arg(long, default_value_t = 101)]
    samples: usize,
    /// Adds 1e-3 to one entry of the frame at this grid index before the checks.
    #[arg(long, hide = true)]
    perturb_frame: Option<usize>,
}

impl Common {
    fn options(&self) -> PipelineOptions {
        PipelineOptions {
            step: self.step,
            delta: self.delta,
            rank_tol: self.rank_tol,
            basis: self.basis,
            seed: self.seed,
            samples: self.samples,
            ..PipelineOptions::default()
        }
    }

    fn trajectory(&self, loaded: &LoadedProblem, opts: &PipelineOptions) -> Result<varjacobi_core::FrameTrajectory, String> {
        let traj = pipeline::integrate(&loaded.problem, opts).map_err(|e| e.to_string())?;
        match self.perturb_frame {
            Some(index) => {
                let m = traj.frame(0).nrows();
                let mut delta = DMatrix::zeros(m, m);
                delta[(0, m - 1)] = 1e-3;
                traj.with_perturbed_frame(index, &delta).map_err(|e| e.to_string())
            }
            None => Ok(traj),
        }
    }
}

fn open_out(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn create(path: String) -> Result<File, String> {
    File::create(&path).map_err(|e| format!("cannot write {path}: {e}"))
}

fn write_csv_tables(prefix: &str, analysis: &pipeline::Analysis, loaded: &LoadedProblem, opts: &PipelineOptions) -> Result<(), String> {
    let traj = &analysis.trajectory;
    let err = |e: csv::Error| e.to_string();
    tables::write_wronskian(create(format!("{prefix}_wronskian.csv"))?, traj).map_err(err)?;
    tables::write_frame(create(format!("{prefix}_frame.csv"))?, traj).map_err(err)?;
    tables::write_rank(create(format!("{prefix}_rank.csv"))?, &analysis.ranks).map_err(err)?;
    if loaded.problem.dim() == 1 {
        let sp = loaded.problem.diagonalize_1d().map_err(|e| e.to_string())?;
        let sols = scalar_vertical_solutions(&sp, Some(traj.step())).map_err(|e| e.to_string())?;
        let fields = opts.fields_for(&loaded.problem);
        if let Some(field) = fields.first() {
            tables::write_scalar(create(format!("{prefix}_scalar.csv"))?, &sols, field).map_err(err)?;
        }
    }
    Ok(())
}

fn run(command: &Command) -> Result<u8, String> {
    let (Command::Analyze(args) | Command::Verify(args) | Command::Rank(args)) = command;
    let loaded = load_problem(&args.problem).map_err(|e| format!("{}: {e}", args.problem.display()))?;
    let opts = args.options();
    let traj = args.trajectory(&loaded, &opts)?;
    let mut out = open_out(args.out.as_deref()).map_err(|e| e.to_string())?;
    let code = match command {
        Command::Analyze(_) => {
            let analysis = pipeline::analyze_trajectory(&loaded, traj, &opts).map_err(|e| e.to_string())?;
            if let Some(prefix) = &args.csv {
                write_csv_tables(prefix, &analysis, &loaded, &opts)?;
            }
            out.write_all(report::to_json(&analysis.report).as_bytes()).map_err(|e| e.to_string())?;
            pipeline::exit_code(&analysis.report.verdict) as u8
        }
        Command::Verify(_) => {
            let report = pipeline::verify_trajectory(&loaded, &traj, &opts).map_err(|e| e.to_string())?;
            out.write_all(report::to_json(&report).as_bytes()).map_err(|e| e.to_string())?;
            for failure in &report.residuals.failures {
                eprintln!("check failed: {failure}");
            }
            u8::from(!report.passed)
        }
        Command::Rank(_) => {
            let rows = pipeline::rank_table(&traj, &opts).map_err(|e| e.to_string())?;
            tables::write_rank(out, &rows).map_err(|e| e.to_string())?;
            0
        }
    };
    Ok(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(EXIT_INVALID)
        }
    }
}
