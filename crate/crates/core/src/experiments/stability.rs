use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::{self, EstimateReport};
use crate::moment_core::{CentralAccumulator, PowerSums};
use crate::oracle::{compensated_sums, ExactSums};
use crate::sampling::{DistributionSpec, SeededStream};

/// `E2` and `Ê4` from one evaluation route, with deviations from the oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathResult {
    pub e2: f64,
    pub e4_hat: f64,
    pub rel_dev_e2: f64,
    pub rel_dev_e4_hat: f64,
    pub e2_negative: bool,
}

impl PathResult {
    fn against(e2: f64, e4_hat: f64, oracle_e2: f64, oracle_e4_hat: f64) -> Self {
        PathResult {
            e2,
            e4_hat,
            rel_dev_e2: relative_deviation(e2, oracle_e2),
            rel_dev_e4_hat: relative_deviation(e4_hat, oracle_e4_hat),
            e2_negative: e2 < 0.0,
        }
    }
}

fn relative_deviation(value: f64, reference: f64) -> f64 {
    if value == reference {
        0.0
    } else {
        (value - reference).abs() / reference.abs()
    }
}

/// Cancellation stress test on `w = offset + u`, `u` uniform on `(0, 1]`.
///
/// The reference values come from exact rational arithmetic on the very same
/// doubles, so every deviation is attributable to the route itself.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub offset: f64,
    pub n: u64,
    pub seed: u64,
    pub oracle_e2: f64,
    pub oracle_e4_hat: f64,
    /// Power sums in native precision.
    pub naive: PowerSumsPath,
    /// One-pass central accumulator.
    pub accumulator: PathResult,
    /// Power sums in double-double precision.
    pub compensated: PathResult,
}

/// The naive route keeps its raw sums for inspection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerSumsPath {
    #[serde(flatten)]
    pub result: PathResult,
    pub sums: PowerSums,
}

pub fn run_stability(offset: f64, n: u64, seed: u64) -> Result<StabilityReport> {
    if n < 4 {
        return Err(Error::Config(format!(
            "stability run needs n >= 4, got {n}"
        )));
    }
    if !offset.is_finite() {
        return Err(Error::Config(format!("offset {offset} is not finite")));
    }
    let weights: Vec<f64> = SeededStream::new(seed, 0)
        .weights(DistributionSpec::Uniform01)
        .take(n as usize)
        .map(|u| offset + u)
        .collect();

    let exact = ExactSums::from_f64(&weights)?;
    let to_f64 = |q: num_rational::BigRational| q.to_f64().unwrap_or(f64::NAN);
    let oracle_e2 = to_f64(exact.e2()?);
    let oracle_e4_hat = to_f64(exact.e4_hat()?);

    let sums: PowerSums = weights.iter().copied().collect();
    let naive = PathResult::against(
        estimators::e2(&sums)?,
        estimators::e4_hat(&sums)?,
        oracle_e2,
        oracle_e4_hat,
    );

    let acc: CentralAccumulator = weights.iter().copied().collect();
    let report = EstimateReport::from_accumulator(&acc);
    let accumulator = PathResult::against(
        report.e2.unwrap_or(f64::NAN),
        report.e4_hat.unwrap_or(f64::NAN),
        oracle_e2,
        oracle_e4_hat,
    );

    let comp = compensated_sums(&weights);
    let compensated = PathResult::against(
        comp.e2().unwrap_or(f64::NAN),
        comp.e4_hat().unwrap_or(f64::NAN),
        oracle_e2,
        oracle_e4_hat,
    );

    Ok(StabilityReport {
        offset,
        n,
        seed,
        oracle_e2,
        oracle_e4_hat,
        naive: PowerSumsPath {
            result: naive,
            sums,
        },
        accumulator,
        compensated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_offset_everything_agrees() {
        let r = run_stability(0.0, 2000, 4).unwrap();
        assert!(r.accumulator.rel_dev_e2 < 1e-12);
        assert!(r.accumulator.rel_dev_e4_hat < 1e-12);
        assert!(r.naive.result.rel_dev_e2 < 1e-12);
        assert!(r.naive.result.rel_dev_e4_hat < 1e-12);
        assert!(r.compensated.rel_dev_e2 < 1e-12);
        assert!(r.compensated.rel_dev_e4_hat < 1e-12);
    }

    #[test]
    fn large_offset_breaks_naive_sums_only() {
        let r = run_stability(1e8, 10_000, 1).unwrap();
        assert!(r.accumulator.rel_dev_e2 < 1e-6);
        assert!(r.accumulator.rel_dev_e4_hat < 1e-6);
        assert!(r.naive.result.rel_dev_e2 > 1e-2 || r.naive.result.e2_negative);
        assert!(r.compensated.rel_dev_e2 < 1e-12);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(run_stability(0.0, 3, 1).is_err());
        assert!(run_stability(f64::INFINITY, 10, 1).is_err());
    }
}
