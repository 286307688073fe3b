use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("outside supported range: {0}")]
    Range(String),

    #[error("resource guard: {what} would need {needed}, budget is {budget}")]
    Budget {
        what: &'static str,
        needed: u64,
        budget: u64,
    },

    #[error("truncation risk: grid reaches {requested}, safe limit is {safe}")]
    Truncation { requested: f64, safe: f64 },

    #[error("no eigenvalue with label {0} in the slice")]
    NotInSpectrum(String),

    #[error("extrapolation did not converge: last residuals {residuals:?}")]
    NoConvergence { residuals: Vec<f64> },

    #[error("accuracy target {target:e} not met, achieved {achieved:e}")]
    Accuracy { target: f64, achieved: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("conjugate point guard: r_max = {0} must stay below pi")]
    ConjugatePoint(f64),

    #[error("config {file}:{line}: {msg}")]
    Config {
        file: String,
        line: usize,
        msg: String,
    },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn at(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Process exit code: 1 validation, 2 numerical tolerance, 3 resource guard.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Stage { source, .. } => source.exit_code(),
            Error::Budget { .. } => 3,
            Error::NoConvergence { .. } | Error::Accuracy { .. } | Error::DegenerateFit(_) => 2,
            _ => 1,
        }
    }
}
