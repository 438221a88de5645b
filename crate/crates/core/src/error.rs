use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An operation was called outside its documented parameter range.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no value supplied for X({0})")]
    MissingValue(usize),

    #[error("enumeration budget exceeded: {terms} terms requested, limit is {limit}")]
    BudgetExceeded { terms: u128, limit: u128 },

    #[error("{0} is not a valid field size")]
    InvalidFieldSize(u64),

    #[error("arithmetic overflow computing {0}")]
    Overflow(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Returns `Err(Error::Precondition)` carrying the formatted message when `cond` fails.
macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        // negated on purpose: a NaN argument fails the check
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !($cond) {
            return Err($crate::error::Error::Precondition(format!($($arg)+)));
        }
    };
}
pub(crate) use ensure;
