use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two inputs that must agree in shape do not.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A non-finite value appeared in an embedding or kernel.
    #[error("non-finite state: {0}")]
    NonFinite(String),

    /// The optimizer produced a non-finite cost or coordinate.
    #[error("optimization diverged at iteration {iteration}")]
    Diverged { iteration: usize },

    /// The input cannot support the requested metric (e.g. a single class).
    #[error("degenerate input: {0}")]
    Degenerate(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }
}
