//! Drivers for the convergence, ensemble, CLT and stability studies.

pub mod convergence;
pub mod ensemble;
pub mod histogram;
pub mod stability;

pub use convergence::{
    log_log_slope, record_arrivals, run_convergence, ConvergenceTrace, TraceColumn, TraceRow,
};
pub use ensemble::{
    clt_prediction, replica_stats, run_ensemble, tree_merge, CltCheck, CltPrediction,
    EnsembleResult, ReplicaStats, Summary,
};
pub use histogram::{ks_distance, normal_cdf, Gaussian, Histogram};
pub use stability::{run_stability, PathResult, StabilityReport};
