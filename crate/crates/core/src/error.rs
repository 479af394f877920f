use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: expected {expected}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error(
        "lambda = {0} violates the strip-scale constraint 0 < lambda < 1/5 under which the sheet approximation converges"
    )]
    LambdaOutOfRange(f64),

    #[error("beta = {beta} violates the rate constraint 0 < beta < lambda/2 = {}", .lambda / 2.0)]
    BetaOutOfRange { beta: f64, lambda: f64 },

    #[error("{0} must be sorted in ascending order")]
    Unsorted(&'static str),

    #[error("{0} must not be empty")]
    Empty(&'static str),

    #[error("time grid must contain both endpoints 0 and 1")]
    GridEndpoints,

    #[error("root is not bracketed on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    NotBracketed { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("function is not strictly decreasing on the bracket near x = {0}")]
    NotMonotone(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check(cond: bool, name: &'static str, value: f64, expected: &'static str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            expected,
        })
    }
}
