use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("model diverged at step {step}")]
    Divergence { step: usize },
    #[error("matrix is not symmetric positive definite ({0})")]
    NotPositiveDefinite(&'static str),
    #[error("vectors are not orthonormal (deviation {0:e})")]
    NotOrthonormal(f64),
    #[error("dense assembly of dimension {dim} exceeds the limit of {limit}")]
    TooLarge { dim: usize, limit: usize },
    #[error("observation point (step {step}, site {site}) is outside the window")]
    ObservationOutOfRange { step: usize, site: usize },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn check_dim(what: &'static str, expected: usize, found: usize) -> Result<()> {
        if expected == found {
            Ok(())
        } else {
            Err(Error::Dimension {
                what,
                expected,
                found,
            })
        }
    }
}
