//! Machine-readable reports. Floats are written with 17 significant digits,
//! so a report read back and written again is byte-for-byte identical.

use std::io;

use serde::{Deserialize, Deserializer, Serialize};
use serde_json::ser::{Formatter, Serializer};

/// JSON formatter that writes every float as `d.dddddddddddddddde±x`.
struct ExactFloats {
    inner: serde_json::ser::PrettyFormatter<'static>,
}

impl Formatter for ExactFloats {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        write!(writer, "{value:.8e}")
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_array(writer)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object(writer)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object_value(writer)
    }
}

/// Pretty JSON with 17-significant-digit floats; non-finite values become `null`.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = Serializer::with_formatter(&mut out, ExactFloats { inner: Default::default() });
    value.serialize(&mut ser).expect("reports always serialize");
    out.push(b'\n');
    String::from_utf8(out).expect("JSON output is UTF-8")
}

/// Reads a float that may have been written as `null` (non-finite) back as NaN.
fn nullable<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationEcho {
    pub passed: bool,
    pub first_failure: Option<f64>,
    #[serde(deserialize_with = "nullable")]
    pub min_leading_eigenvalue: f64,
    pub symmetrized: bool,
    pub reduced_to_band: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemEcho {
    pub order: usize,
    pub dim: usize,
    pub interval: [f64; 2],
    pub validation: ValidationEcho,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjugatePointEntry {
    pub t: f64,
    #[serde(rename = "type")]
    pub kind: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjugacySection {
    pub step: f64,
    pub delta: f64,
    pub verdict: String,
    pub conjugate_points: Vec<ConjugatePointEntry>,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub t: f64,
    pub rank: isize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlagEntry {
    pub t: f64,
    pub classifications: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Statistic {
    #[serde(deserialize_with = "nullable")]
    pub max: f64,
    #[serde(deserialize_with = "nullable")]
    pub mean: f64,
    pub count: usize,
}

impl Statistic {
    pub fn of(values: &[f64]) -> Self {
        let max = values.iter().copied().fold(0.0, |m: f64, v| if v.is_nan() { f64::NAN } else { m.max(v) });
        let mean = if values.is_empty() { 0.0 } else { values.iter().sum::<f64>() / values.len() as f64 };
        Self { max, mean, count: values.len() }
    }
}

/// One row of the two-way functional table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalEntry {
    pub field: usize,
    #[serde(deserialize_with = "nullable")]
    pub direct: f64,
    /// `None` when the Picone route is unavailable (conjugate point).
    pub via_picone: Option<f64>,
    pub guard_capped: bool,
    pub relative_difference: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarRouteSection {
    pub conjugate_points: Vec<ConjugatePointEntry>,
    pub identity_residual: Option<Statistic>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualSection {
    /// `|lhs − rhs| / (1 + |lhs|)` of the pointwise Picone identity.
    pub picone: Statistic,
    /// `‖YᵀZ − ZᵀY‖ / (1 + ‖Y‖‖Z‖)` over the grid.
    #[serde(deserialize_with = "nullable")]
    pub lagrangian: f64,
    /// `‖S − Sᵀ‖ / (1 + ‖S‖)` for `S = ZY⁻¹` where `Y` is well conditioned.
    #[serde(deserialize_with = "nullable")]
    pub riccati_symmetry: f64,
    /// `max ‖ΨᵀJΨ − J‖_F`.
    #[serde(deserialize_with = "nullable")]
    pub symplectic_drift: f64,
    /// `max ‖Ψ‖²_F`, the scale the drift is judged against.
    #[serde(deserialize_with = "nullable")]
    pub drift_scale: f64,
    /// Drift ratio under step halving at coarse steps. Close to 1/32: the
    /// leading RK4 error term is Hamiltonian and drops out of `ΨᵀJΨ − J`.
    pub drift_halving_ratio: Option<f64>,
    /// `max ‖HᵀJ + JH‖_F`.
    #[serde(deserialize_with = "nullable")]
    pub infinitesimal_symplectic: f64,
    pub rank_consistent: bool,
    pub flags_consistent: bool,
    pub functionals: Vec<FunctionalEntry>,
    pub scalar_route: Option<ScalarRouteSection>,
    pub failures: Vec<String>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleSection {
    pub basis: usize,
    #[serde(deserialize_with = "nullable")]
    pub min_eigenvalue: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub seed: u64,
    pub problem: ProblemEcho,
    pub conjugacy: ConjugacySection,
    pub rank_profile: Vec<RankEntry>,
    pub flag_profile: Vec<FlagEntry>,
    pub residuals: ResidualSection,
    pub oracle: OracleSection,
    pub verdict: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub problem: ProblemEcho,
    pub step: f64,
    pub residuals: ResidualSection,
    pub passed: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_seventeen_digits() {
        let text = to_json(&vec![0.1, 1.0 / 3.0, -2.5e-300, f64::NAN]);
        assert!(text.contains("1.0000000000000001e-1"), "{text}");
        assert!(text.contains("3.3333333333333331e-1"));
        assert!(text.contains("null"));
        let back: Vec<Option<f64>> = serde_json::from_str(&text).unwrap();
        assert_eq!(back[1], Some(1.0 / 3.0));
        assert_eq!(back[2], Some(-2.5e-300));
    }

    #[test]
    fn statistic_of_values() {
        let s = Statistic::of(&[1.0, 3.0]);
        assert_eq!((s.max, s.mean, s.count), (3.0, 2.0, 2));
        assert_eq!(Statistic::of(&[]).count, 0);
    }
}
