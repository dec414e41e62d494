use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::EstimateReport;
use crate::moment_core::CentralAccumulator;
use crate::output::{csv_num, metadata_line};
use crate::sampling::{DistributionSpec, SeededStream};

pub const TRACE_HEADER: &str = "n,e1,e2,e4hat,err1,err2";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub n: u64,
    pub e1: f64,
    pub e2: Option<f64>,
    pub e4_hat: Option<f64>,
    pub sqrt_e2: Option<f64>,
    pub fourthroot_e4hat: Option<f64>,
}

/// Estimator values recorded every `stride` points of one stream.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTrace {
    pub spec: DistributionSpec,
    pub seed: u64,
    pub stride: u64,
    pub rows: Vec<TraceRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceColumn {
    E2,
    E4Hat,
}

pub fn run_convergence(
    spec: DistributionSpec,
    n_max: u64,
    seed: u64,
    stride: u64,
) -> Result<ConvergenceTrace> {
    spec.validate()?;
    if n_max < 4 {
        return Err(Error::Config(format!(
            "n_max must be at least 4, got {n_max}"
        )));
    }
    if stride == 0 {
        return Err(Error::Config("stride must be positive".into()));
    }
    let mut acc = CentralAccumulator::new();
    let mut rows = Vec::with_capacity((n_max / stride) as usize);
    for w in SeededStream::new(seed, 0)
        .weights(spec)
        .take(n_max as usize)
    {
        acc.push(w);
        if acc.n().is_multiple_of(stride) {
            let r = EstimateReport::from_accumulator(&acc);
            rows.push(TraceRow {
                n: r.n,
                e1: acc.mean(),
                e2: r.e2,
                e4_hat: r.e4_hat,
                sqrt_e2: r.first_order_error,
                fourthroot_e4hat: r.second_order_error,
            });
        }
    }
    Ok(ConvergenceTrace {
        spec,
        seed,
        stride,
        rows,
    })
}

impl ConvergenceTrace {
    pub fn n_max(&self) -> u64 {
        self.rows.last().map_or(0, |r| r.n)
    }

    /// Least-squares slope of `log(column)` against `log(n)` over `lo <= n <= hi`.
    pub fn slope(&self, column: TraceColumn, lo: u64, hi: u64) -> Option<f64> {
        let points: Vec<(f64, f64)> = self
            .rows
            .iter()
            .filter(|r| r.n >= lo && r.n <= hi)
            .filter_map(|r| {
                let v = match column {
                    TraceColumn::E2 => r.e2,
                    TraceColumn::E4Hat => r.e4_hat,
                }?;
                (v > 0.0).then(|| ((r.n as f64).ln(), v.ln()))
            })
            .collect();
        log_log_slope(&points)
    }

    /// Slope over the last decade of the trace.
    pub fn top_decade_slope(&self, column: TraceColumn) -> Option<f64> {
        let hi = self.n_max();
        self.slope(column, hi / 10, hi)
    }

    /// Row with the largest `n` not exceeding `n`.
    pub fn row_at(&self, n: u64) -> Option<&TraceRow> {
        self.rows.iter().take_while(|r| r.n <= n).last()
    }

    pub fn to_csv(&self) -> String {
        let mut out = metadata_line(&[
            ("command", "converge".into()),
            ("spec", self.spec.to_string()),
            ("seed", self.seed.to_string()),
            ("stride", self.stride.to_string()),
        ]);
        out.push_str(TRACE_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.n,
                csv_num(Some(r.e1)),
                csv_num(r.e2),
                csv_num(r.e4_hat),
                csv_num(r.sqrt_e2),
                csv_num(r.fourthroot_e4hat)
            ));
        }
        out
    }
}

/// Ordinary least-squares slope through `(x, y)` points.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// 1-based positions where a weight exceeds every earlier weight.
///
/// For the power integrands these are the arrivals of new smallest `x`, the
/// points where the estimator traces jump.
pub fn record_arrivals(spec: DistributionSpec, seed: u64, n: u64) -> Vec<u64> {
    let mut best = f64::NEG_INFINITY;
    let mut out = Vec::new();
    for (i, w) in SeededStream::new(seed, 0)
        .weights(spec)
        .take(n as usize)
        .enumerate()
    {
        if w > best {
            best = w;
            out.push(i as u64 + 1);
        }
    }
    out
}
