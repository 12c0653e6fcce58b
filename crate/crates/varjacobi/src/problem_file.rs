//! Problem files: JSON with `order`, `dim`, `interval` and a sparse map of
//! coefficient blocks.
//!
//! ```json
//! {
//!   "order": 1, "dim": 1, "interval": [0.0, 1.0],
//!   "blocks": { "M00": [[[-2.0]]], "M11": [[[2.0]]] }
//! }
//! ```
//!
//! Each block is a list of coefficient matrices indexed by degree in `t`,
//! each matrix a list of rows. Keys are `Mij` for single-digit indices or
//! `M<i>_<j>` in general, with `i ≤ j ≤ order`. Diagonal blocks carry the
//! `½` of the quadratic form: the integrand is
//! `½ Σ h⁽ⁱ⁾ᵀ M_ii h⁽ⁱ⁾ + Σ_(i<j) h⁽ⁱ⁾ᵀ M_ij h⁽ʲ⁾`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use varjacobi_core::problem::DEFAULT_VALIDATION_POINTS;
use varjacobi_core::{MatrixPolynomial, RawCoefficients, ValidationReport, VariationalProblem};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub order: usize,
    pub dim: usize,
    pub interval: [f64; 2],
    pub blocks: BTreeMap<String, Vec<Vec<Vec<f64>>>>,
}

/// Where a problem file went wrong.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemFileError {
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub field: Option<String>,
    pub message: String,
}

impl ProblemFileError {
    fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { line: None, column: None, field: Some(field.into()), message: message.into() }
    }

    fn plain(message: impl Into<String>) -> Self {
        Self { line: None, column: None, field: None, message: message.into() }
    }
}

impl fmt::Display for ProblemFileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let (Some(line), Some(column)) = (self.line, self.column) {
            write!(f, "line {line}, column {column}: ")?;
        }
        if let Some(field) = &self.field {
            write!(f, "{field}: ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ProblemFileError {}

impl From<serde_json::Error> for ProblemFileError {
    fn from(e: serde_json::Error) -> Self {
        let (line, column) = if e.line() > 0 { (Some(e.line()), Some(e.column())) } else { (None, None) };
        // serde_json appends " at line L column C"; the position is reported separately.
        let text = e.to_string();
        let message = match text.rfind(" at line ") {
            Some(cut) => text[..cut].to_string(),
            None => text,
        };
        Self { line, column, field: None, message }
    }
}

/// A validated band-form problem plus what had to be done to get there.
#[derive(Clone, Debug)]
pub struct LoadedProblem {
    pub problem: VariationalProblem,
    pub validation: ValidationReport,
    /// Some diagonal block was not symmetric and was replaced by its symmetric part.
    pub symmetrized: bool,
    /// Couplings beyond the band were integrated by parts away.
    pub reduced: bool,
}

impl LoadedProblem {
    pub fn notes(&self) -> Vec<String> {
        let mut notes = Vec::new();
        if self.symmetrized {
            notes.push("non-symmetric diagonal block replaced by its symmetric part".to_string());
        }
        if self.reduced {
            notes.push("couplings beyond the band reduced by integration by parts".to_string());
        }
        notes
    }
}

/// Parses `Mij` or `M<i>_<j>`.
pub fn parse_block_key(key: &str) -> Option<(usize, usize)> {
    let rest = key.strip_prefix('M')?;
    if let Some((i, j)) = rest.split_once('_') {
        return Some((i.parse().ok()?, j.parse().ok()?));
    }
    let mut chars = rest.chars();
    let (i, j) = (chars.next()?.to_digit(10)?, chars.next()?.to_digit(10)?);
    chars.next().is_none().then_some((i as usize, j as usize))
}

fn block_polynomial(key: &str, coeffs: &[Vec<Vec<f64>>], n: usize) -> Result<MatrixPolynomial, ProblemFileError> {
    if coeffs.is_empty() {
        return Ok(MatrixPolynomial::zeros(n, n));
    }
    let mut mats = Vec::with_capacity(coeffs.len());
    for (d, rows) in coeffs.iter().enumerate() {
        let field = format!("blocks.{key}[{d}]");
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(ProblemFileError::field(field, format!("expected a {n}x{n} matrix")));
        }
        if rows.iter().flatten().any(|x| !x.is_finite()) {
            return Err(ProblemFileError::field(field, "coefficients must be finite"));
        }
        mats.push(DMatrix::from_fn(n, n, |r, c| rows[r][c]));
    }
    MatrixPolynomial::new(n, n, mats).map_err(|e| ProblemFileError::field(format!("blocks.{key}"), e.to_string()))
}

impl ProblemFile {
    pub fn from_problem(problem: &VariationalProblem) -> Self {
        let raw = RawCoefficients::from(problem);
        let blocks = raw
            .blocks()
            .iter()
            .map(|(&(i, j), p)| {
                let key = if i < 10 && j < 10 { format!("M{i}{j}") } else { format!("M{i}_{j}") };
                let coeffs = p
                    .coeffs()
                    .iter()
                    .map(|m| (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect())
                    .collect();
                (key, coeffs)
            })
            .collect();
        let (a, b) = problem.interval();
        Self { order: problem.order(), dim: problem.dim(), interval: [a, b], blocks }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem files always serialize")
    }

    /// Builds the band-form problem and checks the strong Legendre condition.
    pub fn into_problem(&self) -> Result<LoadedProblem, ProblemFileError> {
        let (k, n) = (self.order, self.dim);
        if k == 0 {
            return Err(ProblemFileError::field("order", "must be positive"));
        }
        if n == 0 {
            return Err(ProblemFileError::field("dim", "must be positive"));
        }
        let [a, b] = self.interval;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(ProblemFileError::field("interval", "expected finite [a, b] with a < b"));
        }
        let mut blocks = BTreeMap::new();
        for (key, coeffs) in &self.blocks {
            let Some((i, j)) = parse_block_key(key) else {
                return Err(ProblemFileError::field(format!("blocks.{key}"), "expected a key of the form Mij or M<i>_<j>"));
            };
            if i > j || j > k {
                return Err(ProblemFileError::field(
                    format!("blocks.{key}"),
                    format!("block indices must satisfy i <= j <= {k}"),
                ));
            }
            let p = block_polynomial(key, coeffs, n)?;
            if blocks.insert((i, j), p).is_some() {
                return Err(ProblemFileError::field(format!("blocks.{key}"), "block given twice"));
            }
        }
        let symmetrized = blocks.iter().any(|(&(i, j), p)| i == j && !p.is_symmetric());
        let raw = RawCoefficients::new(k, n, (a, b), blocks).map_err(|e| ProblemFileError::plain(e.to_string()))?;
        let reduced = !raw.is_band();
        let problem = raw.reduce_to_band().map_err(|e| ProblemFileError::plain(e.to_string()))?;
        let validation =
            problem.validate(DEFAULT_VALIDATION_POINTS).map_err(|e| ProblemFileError::plain(e.to_string()))?;
        if !validation.passed {
            let at = validation.first_failure.map(|t| format!(" at t = {t}")).unwrap_or_default();
            return Err(ProblemFileError::field(
                format!("blocks.M{k}{k}"),
                format!(
                    "leading block is not positive definite{at} (smallest eigenvalue {:e})",
                    validation.min_eigenvalue
                ),
            ));
        }
        Ok(LoadedProblem { problem, validation, symmetrized, reduced })
    }
}

pub fn parse_problem(text: &str) -> Result<LoadedProblem, ProblemFileError> {
    let file: ProblemFile = serde_json::from_str(text)?;
    file.into_problem()
}

pub fn load_problem(path: &Path) -> Result<LoadedProblem, ProblemFileError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ProblemFileError::plain(format!("cannot read {}: {e}", path.display())))?;
    parse_problem(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HARMONIC: &str = r#"{
        "order": 1, "dim": 1, "interval": [0.0, 4.0],
        "blocks": { "M00": [[[-2.0]]], "M11": [[[2.0]]] }
    }"#;

    #[test]
    fn block_keys() {
        assert_eq!(parse_block_key("M01"), Some((0, 1)));
        assert_eq!(parse_block_key("M10_12"), Some((10, 12)));
        assert_eq!(parse_block_key("M012"), None);
        assert_eq!(parse_block_key("N01"), None);
        assert_eq!(parse_block_key("M0"), None);
    }

    #[test]
    fn harmonic_loads() {
        let loaded = parse_problem(HARMONIC).unwrap();
        assert_eq!(loaded.problem.order(), 1);
        assert_eq!(loaded.problem.interval(), (0.0, 4.0));
        assert_eq!(loaded.problem.diag(0).eval_scalar(1.0), -2.0);
        assert!(!loaded.symmetrized && !loaded.reduced);
        assert!(loaded.notes().is_empty());
    }

    #[test]
    fn unknown_key_is_rejected_with_position() {
        let text = "{\n \"order\": 1, \"dim\": 1, \"interval\": [0, 1],\n \"colour\": 3,\n \"blocks\": {}\n}";
        let err = parse_problem(text).unwrap_err();
        assert_eq!(err.line, Some(3));
        assert!(err.message.contains("unknown field `colour`"), "{err}");
    }

    #[test]
    fn bad_block_shape_names_the_field() {
        let text = r#"{"order": 1, "dim": 2, "interval": [0, 1], "blocks": {"M11": [[[1.0, 0.0]]]}}"#;
        let err = parse_problem(text).unwrap_err();
        assert_eq!(err.field.as_deref(), Some("blocks.M11[0]"));
    }

    #[test]
    fn legendre_failure_is_reported() {
        let text = r#"{"order": 1, "dim": 1, "interval": [0, 1], "blocks": {"M11": [[[-1.0]]]}}"#;
        let err = parse_problem(text).unwrap_err();
        assert_eq!(err.field.as_deref(), Some("blocks.M11"));
        assert!(err.message.contains("not positive definite"));
    }

    #[test]
    fn non_symmetric_diagonal_is_symmetrized() {
        let text = r#"{"order": 1, "dim": 2, "interval": [0, 1],
            "blocks": {"M00": [[[1.0, 2.0], [0.0, 1.0]]], "M11": [[[1.0, 0.0], [0.0, 1.0]]]}}"#;
        let loaded = parse_problem(text).unwrap();
        assert!(loaded.symmetrized);
        assert_eq!(loaded.problem.diag(0).eval(0.0)[(0, 1)], 1.0);
        assert_eq!(loaded.notes().len(), 1);
    }

    #[test]
    fn wide_couplings_are_reduced() {
        let text = r#"{"order": 2, "dim": 1, "interval": [0, 1],
            "blocks": {"M02": [[[1.0]]], "M22": [[[2.0]]]}}"#;
        let loaded = parse_problem(text).unwrap();
        assert!(loaded.reduced);
        assert_eq!(loaded.problem.diag(1).eval_scalar(0.5), -2.0);
    }

    #[test]
    fn file_round_trip() {
        let loaded = parse_problem(HARMONIC).unwrap();
        let again = parse_problem(&ProblemFile::from_problem(&loaded.problem).to_json()).unwrap();
        assert_eq!(again.problem, loaded.problem);
    }
}
