use alloc::string::String;

/// Errors raised while building channels, precoders and simulated links.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A scalar parameter is outside its admissible range.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A length or matrix dimension does not satisfy a structural requirement.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// Expected and actual lengths differ.
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    /// A link matrix is numerically singular, so the generators cannot be formed.
    #[error(
        "degenerate channel: link ({receiver}, {transmitter}) has singular-value ratio {ratio:e}"
    )]
    DegenerateChannel {
        receiver: usize,
        transmitter: usize,
        ratio: f64,
    },

    /// The stacked desired/interference basis at a receiver is rank deficient.
    #[error("degenerate receiver {receiver}: stacked basis singular-value ratio {ratio:e}")]
    DegenerateReceiver { receiver: usize, ratio: f64 },

    /// The direct MIMO block of a receiver cannot be inverted.
    #[error("degenerate MIMO block at receiver {receiver}")]
    DegenerateMimo { receiver: usize },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
