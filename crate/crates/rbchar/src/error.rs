use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Posterior summaries requested before any stage was consumed.
    #[error("recursion state has no stages (k = 0)")]
    UndefinedState,
    #[error("invalid input: {0}")]
    Input(String),
    #[error("category {got} outside 1..={max}")]
    CategoryRange { got: usize, max: usize },
    #[error("empty distance band")]
    EmptyBand,
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("bound defined only for stage j >= 2, got {0}")]
    StageDomain(usize),
    #[error("calibration failed: no grid value satisfies {0}")]
    Calibration(String),
    #[error("kernel matrix not positive definite after maximum jitter")]
    SingularKernel,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("intensity {value} exceeds dominating bound {bound}")]
    DominatingBound { value: f64, bound: f64 },
    #[error("Strauss interaction gamma = {0} > 1 is not integrable")]
    NonIntegrable(f64),
    #[error("joint CDF vanished in the conditioning prefix")]
    NullConditioning,
    #[error("value {0} above the top breakpoint")]
    BinRange(f64),
    #[error("no valid distance band; covariance stationarity cannot be verified")]
    NotVerifiable,
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
