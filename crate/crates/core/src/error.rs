use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("fields live on different radial grids")]
    GridMismatch,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("{what} did not converge after {iterations} iterations (last residual {last:.3e})")]
    SolverFailure {
        what: &'static str,
        iterations: usize,
        last: f64,
        history: Vec<f64>,
    },

    #[error("singular linear system in {0}; refine the radial grid")]
    Singular(&'static str),

    #[error("solvability condition violated for ({j},{k}): residual {residual:.3e}")]
    Solvability { j: usize, k: usize, residual: f64 },

    #[error("no bracketing interval for {what} in [{lo:.6e}, {hi:.6e}]")]
    NoBracket { what: &'static str, lo: f64, hi: f64 },

    #[error("truncation order {requested} exceeds the cap {cap}")]
    CapExceeded { requested: usize, cap: usize },

    #[error("series spans a factor of {span:.3} only; at least {required} is needed")]
    InsufficientSpan { span: f64, required: f64 },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
}
