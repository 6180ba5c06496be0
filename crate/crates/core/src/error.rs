use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("probability {0} is outside (0, 1)")]
    InvalidProbability(f64),

    #[error("alpha {0} is outside [1e-6, 1 - 1e-6]")]
    InvalidAlpha(f64),

    #[error("no sign change found for the quantile of p = {p} within |z| <= {limit}")]
    BracketFailure { p: f64, limit: f64 },

    #[error("survival function underflows at z = {0}")]
    DegenerateTail(f64),

    #[error("family `{0}` is not logconcave")]
    NonLogconcaveFamily(String),

    #[error("upper interval endpoint grows without bound as x -> -inf (u = {last} at x = {x})")]
    LimitDiverged { x: f64, last: f64 },

    #[error("tail limit of the upper endpoint did not settle (last estimate {last})")]
    LimitNotConverged { last: f64 },

    #[error("tail limit a = {a} exceeds d1 = {d1}")]
    TailLimitExceedsD1 { a: f64, d1: f64 },

    #[error("theta = {theta} is outside the domain of boundary {branch}")]
    OutOfRegion { branch: &'static str, theta: f64 },

    #[error("residual does not change sign on [{lo}, {hi}]")]
    RootNotBracketed { lo: f64, hi: f64 },

    #[error("negative discriminant {0} in the closed-form Laplace coverage")]
    NegativeDiscriminant(f64),

    #[error("unsupported family spec `{0}`")]
    UnsupportedSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed curve data: {0}")]
    Format(String),
}

impl Error {
    /// True for failures of the numerical machinery itself (brackets, roots,
    /// limits) as opposed to invalid input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::BracketFailure { .. }
                | Error::DegenerateTail(_)
                | Error::LimitDiverged { .. }
                | Error::LimitNotConverged { .. }
                | Error::TailLimitExceedsD1 { .. }
                | Error::RootNotBracketed { .. }
                | Error::NegativeDiscriminant(_)
        )
    }
}
