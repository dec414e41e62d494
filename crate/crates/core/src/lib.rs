//! Streaming Monte Carlo integration estimates with first- and second-order
//! errors.
//!
//! A run reports `result ± (first-order error ± second-order error)`, where
//! the first-order error is the square root of the unbiased variance estimate
//! `E2` and the second-order error is the fourth root of the nonnegative
//! variance-of-`E2` estimate `Ê4`. Both are maintained in one pass by
//! [`CentralAccumulator`] without the cancellation that plagues power sums.
//!
//! ```
//! use mcerr::{CentralAccumulator, EstimateReport};
//!
//! let acc: CentralAccumulator = [0.0, 0.0, 1.0, 1.0].into_iter().collect();
//! let report = EstimateReport::from_accumulator(&acc);
//! assert_eq!(report.e1, Some(0.5));
//! assert!((report.e2.unwrap() - 1.0 / 12.0).abs() < 1e-15);
//! assert_eq!(report.e4_hat, Some(0.0));
//! ```

pub mod cli;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod moment_core;
pub mod oracle;
pub mod output;
pub mod sampling;

pub use error::{Error, Result};
pub use estimators::{EstimateReport, ReportFlag};
pub use moment_core::{CentralAccumulator, PowerSums};
pub use sampling::{DistributionSpec, Moment, SeededStream};
