//! Slow reference computations used to check the fast paths.
//!
//! - [`multiple`]: brute-force sums over distinct index tuples and the
//!   product rule linking them to simple sums.
//! - [`compensated`]: power sums accumulated in double-double arithmetic.
//! - [`exact`]: power sums and estimators in exact integer/rational arithmetic.

pub mod compensated;
pub mod exact;
pub mod multiple;

pub use compensated::{compensated_sums, CompensatedSums, DoubleDouble};
pub use exact::ExactSums;
pub use multiple::{
    multiple_sum, multiple_sum_exact, verify_product_rule, verify_product_rule_exact, MultiIndex,
    MAX_TUPLES,
};
