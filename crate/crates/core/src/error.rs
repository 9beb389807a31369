use thiserror::Error;

/// Errors produced by the inference routines.
///
/// Variants split into two families: input validation (bad data, bad
/// parameters) and numerical failure (rank deficiency, non-convergence,
/// degenerate quantities). [`Error::is_validation`] tells them apart; the CLI
/// maps the two families onto distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("column `{0}` not found")]
    MissingColumn(String),

    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("column `{0}` has zero empirical standard deviation")]
    DegenerateColumn(String),

    #[error("design is rank deficient: numerical rank {rank} < {cols} columns")]
    RankDeficient { rank: usize, cols: usize },

    #[error("{0} lies in the column span of the controls")]
    DegenerateResidual(&'static str),

    #[error("partial correlation is ±1; statistic is infinite")]
    InfiniteStatistic,

    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("complete separation detected (max |coefficient| = {0:.3e})")]
    Separation(f64),

    #[error("singular Hessian in sandwich estimator")]
    SingularHessian,

    #[error("degenerate curvature: sum of U' is zero")]
    DegenerateCurvature,

    #[error("mean derivative underflow at observation {0} (|mu'| < 1e-10)")]
    MeanDerivativeUnderflow(usize),

    #[error("fit is degenerate (zero residuals)")]
    DegenerateFit,

    #[error("statistic never exceeds the critical value {critical:.4} within {doublings} bracket doublings")]
    NoCrossing { critical: f64, doublings: usize },

    #[error("generator error: {0}")]
    Generator(String),

    #[error("{failed} of {total} replicates failed (more than 2%)")]
    TooManyFailures { failed: usize, total: usize },
}

impl Error {
    /// `true` for errors caused by the caller's inputs rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::MissingColumn(_)
                | Error::Parse { .. }
                | Error::Io(_)
                | Error::Csv(_)
                | Error::Invalid(_)
                | Error::DegenerateColumn(_)
        )
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::MissingColumn(_) => "missing-column",
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Invalid(_) => "invalid-input",
            Error::DegenerateColumn(_) => "degenerate-column",
            Error::RankDeficient { .. } => "rank-deficient",
            Error::DegenerateResidual(_) => "degenerate-residual",
            Error::InfiniteStatistic => "infinite-statistic",
            Error::NoConvergence { .. } => "no-convergence",
            Error::Separation(_) => "separation",
            Error::SingularHessian => "singular-hessian",
            Error::DegenerateCurvature => "degenerate-curvature",
            Error::MeanDerivativeUnderflow(_) => "mean-derivative-underflow",
            Error::DegenerateFit => "degenerate-fit",
            Error::NoCrossing { .. } => "no-crossing",
            Error::Generator(_) => "generator",
            Error::TooManyFailures { .. } => "too-many-failures",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
