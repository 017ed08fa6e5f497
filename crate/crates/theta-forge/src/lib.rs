//! Jacobi theta and Weierstrass sigma functions with checkable residuals.
//!
//! Every closed formula is paired with an independent way of computing the
//! same quantity, so the library doubles as a verification harness.

pub mod constants;
pub mod cx;
pub mod derivation;
pub mod diffsys;
pub mod elliptic;
pub mod error;
mod memo;
pub mod noncanonical;
pub mod painleve;
pub mod poly;
pub mod series;
pub mod theta;
pub mod transforms;
pub mod weierstrass;

pub use cx::{format_complex, parse_complex, C64};
pub use error::{Result, ThetaError};
