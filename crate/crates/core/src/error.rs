use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// The sum-rate solver needs a point satisfying every constraint of the
    /// original problem. Use [`crate::feasibility::run_feasibility`] to find one.
    #[error("initial point is infeasible ({0}); run the feasibility search to obtain a feasible start")]
    InfeasibleStart(String),

    #[error("antenna {0} coincides with antenna {1}; spacing constraint cannot be linearized")]
    CoincidentAntennas(usize, usize),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
