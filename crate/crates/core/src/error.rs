use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("non-numeric cell {value:?} at row {row}, column {column:?}")]
    NonNumeric { row: usize, column: String, value: String },

    #[error("response column {0:?} not found in header")]
    MissingColumn(String),

    #[error("dataset is empty or has no predictors")]
    EmptyData,

    #[error("column {0:?} is constant and cannot be scaled")]
    ConstantColumn(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("XᵀX + σ²·diag(τ) is not numerically positive definite")]
    Factorization,

    #[error("coordinate descent did not converge within {sweeps} sweeps")]
    LassoNotConverged { sweeps: usize },

    #[error("empirical Bayes diverged at iteration {iteration}: λ = {lambda:e}, σ² = {sigma2:e}")]
    EbDiverged { iteration: usize, lambda: f64, sigma2: f64 },

    #[error("no draw from ν accepted after {attempts} attempts; the window has negligible mass")]
    NuRejectionBudget { attempts: usize },

    #[error(
        "only {found} complete tour(s) observed; at least two regenerations are needed \
         (run the chain longer or retune the window)"
    )]
    InsufficientTours { found: usize },

    #[error("every α on the grid gave zero mean regeneration probability on this pilot")]
    NoUsableWindow,

    #[error("AR(1) fit is not stationary (ρ = {rho}); total-variation bounds are undefined")]
    NonStationary { rho: f64 },

    #[error("series is constant")]
    ConstantSeries,

    #[error("AR(1) bound did not fall below ε within {max_t} steps")]
    BurninNotReached { max_t: u64 },

    #[error("configuration: {0}")]
    Config(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |source| Error::Stage {
            stage,
            source: Box::new(source),
        }
    }

    /// Message without the `configuration:` prefix for config errors.
    pub(crate) fn root_message(&self) -> String {
        match self.root() {
            Error::Config(m) => m.clone(),
            other => other.to_string(),
        }
    }

    /// The innermost error, looking through stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}
