use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The falling power in the estimator's denominator vanishes.
    #[error("{estimator} is undefined for n = {n} (needs n >= {required})")]
    Undefined {
        estimator: &'static str,
        n: u64,
        required: u64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("contract violation: {0}")]
    Contract(String),

    /// Brute-force enumeration would visit more tuples than the cap allows.
    #[error(
        "multiple sum over {n} points with {k} indices exceeds the enumeration cap ({cap} tuples)"
    )]
    TooExpensive { n: usize, k: usize, cap: u64 },
}

pub(crate) fn require_n(estimator: &'static str, n: u64, required: u64) -> Result<()> {
    if n < required {
        Err(Error::Undefined {
            estimator,
            n,
            required,
        })
    } else {
        Ok(())
    }
}
