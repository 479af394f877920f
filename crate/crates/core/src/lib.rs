//! Uniform transport approximations of the Brownian sheet.
//!
//! The crate builds piecewise-linear telegraph paths from Poisson events,
//! couples each with a Brownian motion on shared randomness, stacks them
//! over strips of the unit square into an approximation `W_n` of the
//! Brownian sheet, and measures how fast `sup |W_n - W|` shrinks.
//!
//! * [`rng`]: addressable random streams.
//! * [`transport`]: telegraph paths and their exact evaluation.
//! * [`coupling`]: Brownian motion coupled to a telegraph path.
//! * [`sheet`]: the strip construction and its error decomposition.
//! * [`maximal`]: the Orlicz norm of `exp(N(0,1))` under `t log⁺ t` and
//!   maximal-inequality checks for `exp` of a Brownian sheet.
//! * [`rates`]: Monte Carlo rate experiments.

pub mod coupling;
pub mod error;
pub mod maximal;
pub mod quadrature;
pub mod rates;
pub mod rng;
pub mod sheet;
pub mod special;
pub mod stats;
pub mod transport;

pub use error::{Error, Result};
pub use rng::{derive_stream, RngStream};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/transport.md")]
    mod transport {}
    #[doc = include_str!("../../../book/src/coupling.md")]
    mod coupling {}
    #[doc = include_str!("../../../book/src/sheet.md")]
    mod sheet {}
    #[doc = include_str!("../../../book/src/rates.md")]
    mod rates {}
    #[doc = include_str!("../../../book/src/maximal.md")]
    mod maximal {}
    #[doc = include_str!("../../../book/src/reproducibility.md")]
    mod reproducibility {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
