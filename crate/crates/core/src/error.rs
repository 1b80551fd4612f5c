use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A numeric argument is outside its admissible domain.
    #[error("{field}: {reason}")]
    Domain {
        field: &'static str,
        reason: &'static str,
    },
    #[error("{0} is empty")]
    Empty(&'static str),
    #[error("distribution is not normalized (total probability {0})")]
    Unnormalized(f64),
    #[error("{levels} distinct levels need more than {bits} bits per sample; use a larger width")]
    TooManyLevels { levels: usize, bits: u32 },
    #[error("seed has {actual} bits, expected {expected}")]
    SeedLength { expected: usize, actual: usize },
    #[error("extraction ratio {k}/{n} exceeds the entropy bound of {bound} output bits per input bit")]
    RatioBound { n: usize, k: usize, bound: f64 },
}

impl Error {
    pub(crate) const fn domain(field: &'static str, reason: &'static str) -> Self {
        Error::Domain { field, reason }
    }
}
