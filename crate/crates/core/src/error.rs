use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),

    #[error("topology error: {0}")]
    Topology(String),

    #[error("reference error: {0}")]
    Reference(String),

    #[error("power flow did not converge within {iterations} sweeps (last max |dV| = {last_delta:.3e} p.u.)")]
    Divergence { iterations: usize, last_delta: f64 },

    #[error("state {state}: {source}")]
    AtState {
        state: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("internal consistency error: {0}")]
    Consistency(String),

    #[error("envelope error: {0}")]
    Envelope(String),

    #[error("accounting error: {0}")]
    Accounting(String),

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn at_state(self, state: usize) -> Self {
        Error::AtState {
            state,
            source: Box::new(self),
        }
    }

    /// Innermost error, with any state annotation peeled off.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtState { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
