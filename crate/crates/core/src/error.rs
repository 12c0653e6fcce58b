use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    Shape {
        context: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },
    InvalidArgument(&'static str),
    /// The leading block `M_kk(t)` (or `P_k(t)`) could not be inverted.
    SingularLeading { t: f64 },
    /// The vertical frame `Y(t)` is too ill-conditioned for the requested quantity.
    SingularFrame { t: f64, condition: f64 },
    /// A conjugate point rules out the requested computation.
    ConjugatePoint { t: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Shape { context, expected, found } => write!(
                f,
                "{context}: expected {}x{}, found {}x{}",
                expected.0, expected.1, found.0, found.1
            ),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::SingularLeading { t } => write!(f, "leading coefficient block is singular at t = {t}"),
            Error::SingularFrame { t, condition } => {
                write!(f, "vertical frame is singular at t = {t} (condition number {condition:e})")
            }
            Error::ConjugatePoint { t } => write!(
                f,
                "conjugate point near t = {t}; the frame is not invertible on the interval"
            ),
        }
    }
}

impl core::error::Error for Error {}
