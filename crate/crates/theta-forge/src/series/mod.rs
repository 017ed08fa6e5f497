//! Integer recurrences and the power series they generate.
//!
//! This is the second, q-series-free way of evaluating sigma and theta:
//! coefficients come from exact integer tables or exact polynomial
//! recurrences, and only the final evaluation is in floating point.

mod grid;
mod halphen;
mod sigma;
mod theta_series;
mod truncated;

pub use grid::*;
pub use halphen::*;
pub use sigma::*;
pub use theta_series::*;
pub use truncated::*;
