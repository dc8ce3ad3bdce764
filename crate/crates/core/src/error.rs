use alloc::string::String;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("division by zero: {0}")]
    DivisionByZero(String),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::error::Error::InvalidArgument(alloc::format!($($arg)*))
    };
}
pub(crate) use invalid;
