#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed input: files, graphs, stems, parameters.
    #[error("input error: {0}")]
    Input(String),
    /// A verification suite found a genuine failure.
    #[error("verification failure: {0}")]
    Verification(String),
    /// An internal invariant was violated; always a bug.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}

pub fn internal<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Internal(msg.into()))
}
