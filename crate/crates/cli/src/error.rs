use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{what} not found: {}", path.display())]
    NotFound { what: &'static str, path: PathBuf },

    #[error("config: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("comparison error: {0}")]
    Compare(String),

    #[error(transparent)]
    Core(#[from] mpas_core::Error),
}

impl CliError {
    /// 0 ok, 1 input, 2 convergence, 3 accounting.
    pub fn exit_code(&self) -> i32 {
        use mpas_core::Error as E;
        match self {
            CliError::Core(e) => match e.root() {
                E::Divergence { .. } | E::Evaluation(_) => 2,
                E::Accounting(_) | E::Consistency(_) => 3,
                _ => 1,
            },
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let div = mpas_core::Error::Divergence { iterations: 200, last_delta: 1.0 }.at_state(4);
        assert_eq!(CliError::from(div).exit_code(), 2);
        assert_eq!(CliError::from(mpas_core::Error::Accounting("x".into())).exit_code(), 3);
        assert_eq!(CliError::from(mpas_core::Error::Input("x".into())).exit_code(), 1);
        let missing = CliError::NotFound { what: "price file", path: "p.csv".into() };
        assert_eq!(missing.exit_code(), 1);
        assert_eq!(missing.to_string(), "price file not found: p.csv");
    }
}
