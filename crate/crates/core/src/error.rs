use thiserror::Error;

/// Errors raised by the estimation pipeline and the experiment harness.
#[derive(Debug, Error)]
pub enum CmfError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("design matrix is numerically rank deficient (singular value ratio {ratio:e})")]
    SingularDesign { ratio: f64 },

    #[error("sensing Gram matrix is ill-conditioned (condition estimate {condition:e}); re-draw the sensing seed")]
    IllConditionedSensing { condition: f64 },

    #[error("parameter is not identifiable from the compressed data: {0}")]
    Unidentifiable(String),

    #[error("threshold root not bracketed in k = h/sigma in [{lo}, {hi}]")]
    BracketExceeded { lo: f64, hi: f64 },

    #[error("outlier support is empty")]
    EmptySupport,

    #[error("solver produced non-finite values at iteration {iteration}")]
    Divergence { iteration: usize },

    #[error("too many failed trials: {dropped} of {trials} dropped")]
    BudgetExceeded { dropped: usize, trials: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed results file: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for CmfError {
    fn from(err: csv::Error) -> Self {
        match err.into_kind() {
            csv::ErrorKind::Io(e) => CmfError::Io(e),
            other => CmfError::Parse(format!("{other:?}")),
        }
    }
}

pub type Result<T> = std::result::Result<T, CmfError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(CmfError::InvalidArgument(msg.into()))
}
