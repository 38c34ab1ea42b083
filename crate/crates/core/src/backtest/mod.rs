//! Resampled train/test experiment: per-window clustering, state labeling,
//! portfolio construction on every input, off-sample evaluation and
//! aggregation.

mod experiment;
mod metrics;
mod output;

pub use experiment::{
    aggregate_metrics, load_returns, run_experiment, run_on_panel, run_window, train_length_sweep, window_seed,
    AssetSelection, BacktestReport, Cell, CellOutcome, CellResult, CellSummary, DataSource, DayGain,
    ExperimentConfig, GammaGrid, SweepReport, SweepRow, WindowResult,
};
pub use metrics::{evaluate_portfolio, likelihood_gain_series, mean_std, percentile, Evaluation, Summary};
pub use output::{read_report, write_report, write_sweep};
