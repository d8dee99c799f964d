use thiserror::Error;

/// Errors raised by the arithmetic and verification routines.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("modulus {0} must be odd and positive")]
    EvenModulus(i128),

    #[error("invalid character modulus {q}: {reason}")]
    InvalidModulus { q: u64, reason: &'static str },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),

    #[error("internal invariant broken: {0}")]
    Invariant(String),

    #[error("no imitating modulus found below search ceiling {ceiling}")]
    SearchExhausted { ceiling: u64 },

    #[error("cannot parse rational {0:?}")]
    ParseRational(String),

    #[error("certificate rejected: {0}")]
    CertificateRejected(String),

    #[error("bound insufficient: {0}")]
    BoundInsufficient(String),

    #[error("i/o failure: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

/// Checked helpers for the wide-integer accumulators. Overflow is always an error.
pub(crate) trait CheckedWide: Sized {
    fn add_or(self, rhs: Self, what: &'static str) -> Result<Self>;
    fn mul_or(self, rhs: Self, what: &'static str) -> Result<Self>;
}

impl CheckedWide for i128 {
    #[inline]
    fn add_or(self, rhs: Self, what: &'static str) -> Result<Self> {
        self.checked_add(rhs).ok_or(Error::Overflow(what))
    }

    #[inline]
    fn mul_or(self, rhs: Self, what: &'static str) -> Result<Self> {
        self.checked_mul(rhs).ok_or(Error::Overflow(what))
    }
}
