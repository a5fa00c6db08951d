//! Simulation study: scenario truths, data generation, accuracy metrics and
//! a replicated benchmark over the six estimators.

mod bench;
mod generate;
mod metrics;
mod scenario;

pub use bench::{
    aggregate, run_benchmark, run_replicate, AggregateRow, BenchmarkConfig, BenchmarkReport, FailureRecord,
    MetricName, ReplicateRecord,
};
pub use generate::{
    beta_projections, curve_basis, gen_curves, gen_curves_seeded, gen_response, gen_sample, ErrorCase,
    SimData, SimResponse, CURVE_COEF_SD, CURVE_DEGREE, CURVE_INTERVALS,
};
pub use metrics::{metrics, metrics_from_fn, MetricsReport, ISE_DENSITY, RATE_GRID_POINTS};
pub use scenario::{scenario_beta, Piece, ScenarioId, ScenarioSpec};
