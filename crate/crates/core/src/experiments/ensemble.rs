//! Replica ensembles: distribution of `E1` and `E2` over many independent
//! runs, compared with Gaussians whose widths come from the run's own error
//! estimates.
//!
//! Replica `i` always draws from `SeededStream::new(seed, i)`. Replicas are
//! evaluated in parallel, but ensemble statistics are reduced over fixed
//! blocks merged in a fixed pairwise tree, so results do not depend on the
//! number of worker threads.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::{analytic_var_e1, analytic_var_e2, EstimateReport};
use crate::moment_core::CentralAccumulator;
use crate::sampling::{DistributionSpec, SeededStream};

use super::histogram::{ks_distance, Gaussian, Histogram};

const BLOCK: usize = 4096;

/// Estimators of one replica plus `X = (1/n) Σ w²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReplicaStats {
    pub e1: f64,
    pub e2: f64,
    pub e4: f64,
    pub e4_hat: f64,
    pub x: f64,
}

pub fn replica_stats(spec: DistributionSpec, n: u64, stream: SeededStream) -> ReplicaStats {
    let mut acc = CentralAccumulator::new();
    let mut sum_sq = 0.0;
    for w in stream.weights(spec).take(n as usize) {
        acc.push(w);
        sum_sq += w * w;
    }
    let r = EstimateReport::from_accumulator(&acc);
    ReplicaStats {
        e1: acc.mean(),
        e2: r.e2.unwrap_or(f64::NAN),
        e4: r.e4_unbiased.unwrap_or(f64::NAN),
        e4_hat: r.e4_hat.unwrap_or(f64::NAN),
        x: sum_sq / n as f64,
    }
}

/// Mean and variance of an ensemble column with their standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub count: u64,
    pub mean: f64,
    pub variance: f64,
    pub stderr_mean: f64,
    pub stderr_variance: f64,
}

impl Summary {
    pub fn from_accumulator(acc: &CentralAccumulator) -> Self {
        let m = acc.n() as f64;
        let variance = acc.p() * m / (m - 1.0);
        // m4 = R + P²
        let m4 = acc.r() + acc.p() * acc.p();
        let var_of_var = (m4 - variance * variance * (m - 3.0) / (m - 1.0)) / m;
        Summary {
            count: acc.n(),
            mean: acc.mean(),
            variance,
            stderr_mean: (variance / m).sqrt(),
            stderr_variance: var_of_var.max(0.0).sqrt(),
        }
    }

    /// `|mean - target|` in units of the standard error.
    pub fn mean_z(&self, target: f64) -> f64 {
        (self.mean - target).abs() / self.stderr_mean
    }

    pub fn variance_z(&self, target: f64) -> f64 {
        (self.variance - target).abs() / self.stderr_variance
    }
}

/// Merges accumulators pairwise in a fixed tree shape.
pub fn tree_merge(mut parts: Vec<CentralAccumulator>) -> CentralAccumulator {
    if parts.is_empty() {
        return CentralAccumulator::new();
    }
    while parts.len() > 1 {
        parts = parts
            .chunks(2)
            .map(|pair| match pair {
                [a, b] => a.merge(*b),
                [a] => *a,
                _ => unreachable!(),
            })
            .collect();
    }
    parts[0]
}

fn summarize(values: &[ReplicaStats], column: impl Fn(&ReplicaStats) -> f64 + Sync) -> Summary {
    let blocks: Vec<CentralAccumulator> = values
        .par_chunks(BLOCK)
        .map(|chunk| chunk.iter().map(&column).collect())
        .collect();
    Summary::from_accumulator(&tree_merge(blocks))
}

/// Width of the Gaussian that `X = (1/n) Σ w²` approaches for large `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CltPrediction {
    /// `<w²>`
    pub lambda0: f64,
    /// `<w⁴> - <w²>²`
    pub tau0: f64,
    /// `tau0 / n`
    pub variance: f64,
}

pub fn clt_prediction(mean_w2: f64, mean_w4: f64, n: u64) -> Result<CltPrediction> {
    if !(mean_w2.is_finite() && mean_w4.is_finite()) {
        return Err(Error::Contract(
            "CLT prediction needs finite moments".into(),
        ));
    }
    if n == 0 {
        return Err(Error::Contract("CLT prediction needs n >= 1".into()));
    }
    let tau0 = mean_w4 - mean_w2 * mean_w2;
    if tau0 < 0.0 {
        return Err(Error::Contract(format!(
            "<w^4> - <w^2>^2 = {tau0} is negative"
        )));
    }
    Ok(CltPrediction {
        lambda0: mean_w2,
        tau0,
        variance: tau0 / n as f64,
    })
}

/// Observed spread of `X` against the prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CltCheck {
    pub prediction: CltPrediction,
    pub observed_mean: f64,
    pub observed_variance: f64,
    pub stderr_variance: f64,
    /// Deviation of the observed variance in standard errors.
    pub z: f64,
}

/// Analytic targets for the ensemble means, where the moments exist.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Targets {
    pub j1: Option<f64>,
    pub var_e1: Option<f64>,
    pub var_e2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleResult {
    pub spec: DistributionSpec,
    pub n: u64,
    pub replicas: u64,
    pub seed: u64,
    pub e1: Summary,
    pub e2: Summary,
    pub e4: Summary,
    pub e4_hat: Summary,
    pub x: Summary,
    pub targets: Targets,
    /// Centre `mean(E1)`, width `mean(E2)^{1/2}`.
    pub overlay_e1: Gaussian,
    /// Centre `mean(E2)`, width `mean(Ê4)^{1/2}`.
    pub overlay_e2: Gaussian,
    pub ks_e1: Option<f64>,
    pub ks_e2: Option<f64>,
    pub clt: Option<CltCheck>,
    #[serde(skip)]
    pub hist_e1: Histogram,
    #[serde(skip)]
    pub hist_e2: Histogram,
}

/// Evaluates every replica; the output is ordered by replica index.
pub fn replica_values(
    spec: DistributionSpec,
    n: u64,
    replicas: u64,
    seed: u64,
) -> Vec<ReplicaStats> {
    (0..replicas)
        .into_par_iter()
        .map(|i| replica_stats(spec, n, SeededStream::new(seed, i)))
        .collect()
}

fn histogram_for(
    values: &[f64],
    summary: &Summary,
    bin_count: usize,
    overlay: Gaussian,
) -> Histogram {
    let sd = summary.variance.sqrt();
    let half = if sd > 0.0 {
        5.0 * sd
    } else {
        summary.mean.abs().max(1.0) * 0.5
    };
    Histogram::build(
        values,
        summary.mean - half,
        summary.mean + half,
        bin_count,
        overlay,
    )
}

pub fn run_ensemble(
    spec: DistributionSpec,
    n: u64,
    replicas: u64,
    seed: u64,
    bin_count: usize,
) -> Result<EnsembleResult> {
    spec.validate()?;
    if n < 4 {
        return Err(Error::Config(format!("ensemble needs n >= 4, got {n}")));
    }
    if replicas < 100 {
        return Err(Error::Config(format!(
            "ensemble needs at least 100 replicas, got {replicas}"
        )));
    }
    if bin_count == 0 {
        return Err(Error::Config("bin count must be positive".into()));
    }

    let values = replica_values(spec, n, replicas, seed);
    let e1 = summarize(&values, |r| r.e1);
    let e2 = summarize(&values, |r| r.e2);
    let e4 = summarize(&values, |r| r.e4);
    let e4_hat = summarize(&values, |r| r.e4_hat);
    let x = summarize(&values, |r| r.x);

    let overlay_e1 = Gaussian {
        mean: e1.mean,
        width: e2.mean.max(0.0).sqrt(),
    };
    let overlay_e2 = Gaussian {
        mean: e2.mean,
        width: e4_hat.mean.max(0.0).sqrt(),
    };

    let col_e1: Vec<f64> = values.iter().map(|r| r.e1).collect();
    let col_e2: Vec<f64> = values.iter().map(|r| r.e2).collect();

    let moments = |p| spec.analytic_moment(p).ok().and_then(|m| m.value());
    let (j1, j2) = (moments(1), moments(2));
    let targets = Targets {
        j1,
        var_e1: j1.zip(j2).and_then(|(a, b)| analytic_var_e1(a, b, n).ok()),
        var_e2: spec.moments4().and_then(|j| analytic_var_e2(j, n).ok()),
    };

    let clt = match (j2, moments(4)) {
        (Some(w2), Some(w4)) => {
            let prediction = clt_prediction(w2, w4, n)?;
            Some(CltCheck {
                prediction,
                observed_mean: x.mean,
                observed_variance: x.variance,
                stderr_variance: x.stderr_variance,
                z: x.variance_z(prediction.variance),
            })
        }
        _ => None,
    };

    Ok(EnsembleResult {
        spec,
        n,
        replicas,
        seed,
        hist_e1: histogram_for(&col_e1, &e1, bin_count, overlay_e1),
        hist_e2: histogram_for(&col_e2, &e2, bin_count, overlay_e2),
        ks_e1: ks_distance(&col_e1, overlay_e1),
        ks_e2: ks_distance(&col_e2, overlay_e2),
        e1,
        e2,
        e4,
        e4_hat,
        x,
        targets,
        overlay_e1,
        overlay_e2,
        clt,
    })
}

impl EnsembleResult {
    pub fn histogram_meta(&self, quantity: &str) -> Vec<(&'static str, String)> {
        vec![
            ("command", "ensemble".into()),
            ("quantity", quantity.into()),
            ("spec", self.spec.to_string()),
            ("n", self.n.to_string()),
            ("replicas", self.replicas.to_string()),
            ("seed", self.seed.to_string()),
            ("bins", self.hist_e1.bin_count.to_string()),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clt_prediction_examples() {
        let u = clt_prediction(1.0 / 3.0, 0.2, 10).unwrap();
        assert!((u.tau0 - 4.0 / 45.0).abs() < 1e-16);
        assert!((u.variance - 4.0 / 450.0).abs() < 1e-17);
        let z = clt_prediction(0.0, 0.0, 5).unwrap();
        assert_eq!((z.lambda0, z.tau0), (0.0, 0.0));
        let e = clt_prediction(2.0, 24.0, 1).unwrap();
        assert_eq!((e.lambda0, e.tau0), (2.0, 20.0));
        assert!(matches!(
            clt_prediction(1.0, 0.5, 3),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn tree_merge_matches_sequential() {
        let ws: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.01).collect();
        let seq: CentralAccumulator = ws.iter().copied().collect();
        let parts: Vec<CentralAccumulator> =
            ws.chunks(64).map(|c| c.iter().copied().collect()).collect();
        let tree = tree_merge(parts);
        assert_eq!(tree.n(), seq.n());
        assert!((tree.mean() - seq.mean()).abs() < 1e-13);
        assert!((tree.p() - seq.p()).abs() < 1e-13);
        assert!((tree.r() - seq.r()).abs() < 1e-13);
        assert_eq!(tree_merge(vec![]).n(), 0);
    }

    #[test]
    fn summary_of_known_sample() {
        let acc: CentralAccumulator = [1.0, 2.0, 3.0, 4.0].into_iter().collect();
        let s = Summary::from_accumulator(&acc);
        assert_eq!(s.mean, 2.5);
        assert!((s.variance - 5.0 / 3.0).abs() < 1e-15);
        assert!((s.stderr_mean - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn replica_is_reproducible() {
        let s = SeededStream::new(5, 17);
        let a = replica_stats(DistributionSpec::Exponential, 50, s);
        let b = replica_stats(DistributionSpec::Exponential, 50, s);
        assert_eq!(a, b);
    }

    #[test]
    fn small_ensemble_is_consistent() {
        let r = run_ensemble(DistributionSpec::Uniform01, 10, 20_000, 7, 50).unwrap();
        assert_eq!(
            r.hist_e1.counts.iter().sum::<u64>() + r.hist_e1.out_of_range,
            20_000
        );
        assert_eq!(r.hist_e2.counts.len(), 50);
        assert!(r.e1.mean_z(0.5) < 5.0);
        assert!(r.e2.mean_z(1.0 / 120.0) < 5.0);
        assert!(r.e4.mean_z(r.targets.var_e2.unwrap()) < 5.0);
        assert!(r.clt.unwrap().z < 5.0);
        assert!(r.ks_e1.unwrap() < r.ks_e2.unwrap());
    }

    #[test]
    fn result_independent_of_thread_count() {
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_ensemble(DistributionSpec::ExpIntegral, 12, 10_000, 3, 40).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(run_ensemble(DistributionSpec::Uniform01, 3, 1000, 1, 10).is_err());
        assert!(run_ensemble(DistributionSpec::Uniform01, 10, 99, 1, 10).is_err());
        assert!(run_ensemble(DistributionSpec::Uniform01, 10, 1000, 1, 0).is_err());
    }
}
