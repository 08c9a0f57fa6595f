use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("a chain needs at least 2 sites, got {0}")]
    TooFewSites(usize),

    #[error("{name} must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },

    #[error("coupling count mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("{name} = {value} lies outside [{lo}, {hi}]")]
    Domain {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("site index {index} out of range for a chain of {n_sites} sites")]
    SiteIndex { index: usize, n_sites: usize },

    #[error("tridiagonal eigensolver did not converge for eigenvalue index {index}")]
    NoConvergence { index: usize },

    #[error("probability vector is not normalized (sum = {sum})")]
    NotNormalized { sum: f64 },

    #[error("invalid optimizer configuration: {0}")]
    InvalidConfig(String),

    #[error("warm start lies outside the hypercube [0, {side}]^{dimension}")]
    WarmStartOutside { side: f64, dimension: usize },

    #[error("degenerate fit data: {0}")]
    DegenerateData(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn check_unit(name: &'static str, value: f64) -> Result<()> {
        if (0.0..=1.0).contains(&value) {
            Ok(())
        } else {
            Err(Error::Domain {
                name,
                value,
                lo: 0.0,
                hi: 1.0,
            })
        }
    }

    pub(crate) fn check_finite(name: &'static str, value: f64) -> Result<()> {
        if value.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite { name, value })
        }
    }
}
