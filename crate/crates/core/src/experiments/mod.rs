//! Data generation, calibration, policy evaluation, backtests and
//! Monte-Carlo checks.
//!
//! * [`generators`]: seeded scalar, two-group and five-asset processes.
//! * [`policies`]: the six decision policies, grid calibration and evaluation.
//! * [`backtest`]: CSV ingestion, rolling-window runs and return metrics.
//! * [`montecarlo`]: concentration and coverage trials.
//! * [`studies`]: many-instance comparisons, parallel over instances.

pub mod backtest;
pub mod generators;
pub mod montecarlo;
pub mod policies;
pub mod studies;

pub use backtest::{effective_samples, metrics, read_backtest_csv, rolling_backtest, write_backtest_csv, BacktestResult, MetricReport, TimeSeries};
pub use generators::{
    gen_example1, gen_factor_series, gen_portfolio_synthetic, gen_two_group_shift, PortfolioSplit, ScalarProcess, ShiftDegree, SyntheticIncomeConfig,
    SyntheticPortfolioConfig, TwoGroupShiftConfig,
};
pub use montecarlo::{concentration_trial, coverage_trial, ConcentrationConfig, CoverageConfig, EstimatorKind, RadiiMode};
pub use policies::{
    cross_validate, decide, decide_grid, evaluate_at, evaluate_policy, select_on_holdout, CalibrationObjective, HyperPoint, PolicyKind, PolicySpec,
    ProblemSetup,
};
