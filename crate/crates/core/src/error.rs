use thiserror::Error;

/// Failures raised by the numerical routines and the front end.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("no constant equilibrium: lambda = {lambda} exceeds 1/e")]
    NoEquilibrium { lambda: f64 },

    #[error("unsupported dimension N = {dimension} (need N >= 3)")]
    UnsupportedDimension { dimension: u32 },

    #[error("N = 10 is the borderline case and is not supported by the Morse dichotomy scan")]
    UnsupportedBorderline,

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("fitted tail beyond zeta = {zeta_max} grows instead of decaying")]
    TailNotDecaying { zeta_max: f64 },

    #[error("Picard map is not a contraction up to zeta0 = {zeta0} (observed ratio {ratio})")]
    NoContraction { zeta0: f64, ratio: f64 },

    #[error("solution blew up at r = {r} before reaching r_max = {r_max}")]
    BlowupBeforeRmax { r: f64, r_max: f64 },

    #[error("step size underflow at t = {t} (h = {h})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("step budget of {max_steps} exhausted at t = {t}")]
    TooManySteps { t: f64, max_steps: usize },

    #[error("degenerate zero near {at} (slope {slope})")]
    DegenerateZero { at: f64, slope: f64 },

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("profile covers [{have_lo}, {have_hi}] but [{need_lo}, {need_hi}] was requested")]
    ProfileCoverage {
        need_lo: f64,
        need_hi: f64,
        have_lo: f64,
        have_hi: f64,
    },

    #[error("found {found} critical points, needed {needed} (window up to r = {r_max})")]
    NotEnoughCriticalPoints {
        needed: usize,
        found: usize,
        r_max: f64,
    },

    #[error("no sign change found: {0}")]
    BracketFailure(String),

    #[error("no root in bracket [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    NoRootInBracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("{count} disjoint sign changes in bracket [{lo}, {hi}]")]
    MultipleRoots { lo: f64, hi: f64, count: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for errors caused by bad user input rather than a numerical failure.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Parse(_)
                | Error::Validation(_)
                | Error::UnsupportedDimension { .. }
                | Error::UnsupportedBorderline
                | Error::InvalidInput(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
