use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("success probability must lie strictly inside (0, 1), got {0}")]
    InvalidProbability(f64),
    #[error("family scale s must be >= 2, got {0}")]
    InvalidScale(u32),
    #[error("index must be >= 1, got {0}")]
    InvalidIndex(u64),
    #[error("{name} out of domain: {value} ({expected})")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("Lambert W argument {z} outside the domain of the {branch} branch")]
    LambertDomain { branch: &'static str, z: f64 },
    #[error("{what} did not converge after {iterations} iterations")]
    Convergence { what: &'static str, iterations: usize },
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(name: &'static str, value: f64, expected: &'static str) -> Error {
    Error::Domain { name, value, expected }
}
