use thiserror::Error;

/// Crate-wide error type.
///
/// The CLI maps `Input`/`Domain`/`Parse`/`Range`/`Bracket` to exit code 1
/// and `Internal` to exit code 2.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed argument or out-of-range vertex index.
    #[error("invalid input: {0}")]
    Input(String),

    /// Operation called outside its proven or supported domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Exhaustive enumeration guard tripped.
    #[error("range error: {0}")]
    Range(String),

    /// Edge-list file could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    /// Threshold search could not establish a valid bracket.
    #[error("bracket error: {0}")]
    Bracket(String),

    /// An internal invariant was violated; indicates an engine bug.
    #[error("internal invariant violation: {0}")]
    Internal(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
