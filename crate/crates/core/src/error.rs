use thiserror::Error;

/// Failures raised by the solvers and the large-deviation pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The (tilted) potential does not confine the gas, so no equilibrium
    /// measure exists.
    #[error("ill-confined potential: {reason}")]
    IllConfined { reason: String },

    /// Every admissible edge configuration produced a negative density or
    /// violated the equilibrium inequality off the support (multi-cut regime).
    #[error("no one-cut equilibrium measure: {reason}")]
    NoOneCut { reason: String },

    /// Edge root-finding failed, including the bisection fallback.
    #[error("edge equations did not converge: {reason}")]
    NoConvergence { reason: String },

    /// x*(s) is not strictly decreasing, so J is not strictly concave and the
    /// Legendre transform only yields a convex envelope.
    #[error("flat segment in x*(s) between s = {s_lo} and s = {s_hi}")]
    FlatSegment { s_lo: f64, s_hi: f64 },

    #[error("cumulant generating function is not analytic at s = 0: {reason}")]
    NotAnalytic { reason: String },

    /// The two axis paths integrating dJ disagree.
    #[error("axis paths disagree by {mismatch:e} at (s1, s2) = ({s1}, {s2})")]
    PathMismatch { s1: f64, s2: f64, mismatch: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    /// True for errors meaning "no equilibrium measure at this tilt", which
    /// grid builders turn into a truncated domain rather than a hard failure.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            Error::IllConfined { .. } | Error::NoOneCut { .. } | Error::NoConvergence { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
