use std::path::PathBuf;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{evaluate_portfolio, likelihood_gain_series, Evaluation, Summary};
use crate::data::{
    compute_log_returns, load_market_caps, load_prices, sample_windows, select_assets, CsvSchema, ReturnsPanel,
    SelectionMode, WindowSplit,
};
use crate::error::{Error, Result};
use crate::forecast::{label_assignment, StateLabeling, DEFAULT_PREVALENCE_WINDOW};
use crate::icc::{assign_clusters, calibrate_gamma, log_grid, median_abs_gain, ClusterConfig, StateModel};
use crate::network::SparsePrecision;
use crate::optim::{naive_weights, select_portfolio, Criterion, InputSource, PortfolioInputs, Solver};
use crate::synth::{generate, SynthParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    File {
        prices: PathBuf,
        #[serde(default)]
        market_caps: Option<PathBuf>,
        #[serde(default)]
        schema: CsvSchema,
    },
    /// Generated panel; its seed is replaced by the experiment seed.
    Synthetic(SynthParams),
}

impl Default for DataSource {
    fn default() -> Self {
        Self::Synthetic(SynthParams::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssetSelection {
    pub mode: SelectionMode,
    pub count: usize,
}

/// Candidate switching penalties. `low`/`high` are multiples of the median
/// absolute single-state gain on the train window; `values`, when given, are
/// used as-is.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GammaGrid {
    pub low: f64,
    pub high: f64,
    pub points: usize,
    pub values: Option<Vec<f64>>,
}

impl Default for GammaGrid {
    fn default() -> Self {
        Self { low: 1e-4, high: 1e4, points: 15, values: None }
    }
}

impl GammaGrid {
    pub fn resolve(&self, train: &ReturnsPanel, cfg: &ClusterConfig) -> Result<Vec<f64>> {
        if let Some(v) = &self.values {
            return Ok(v.clone());
        }
        if !(self.low > 0.0 && self.high >= self.low) || self.points == 0 {
            return Err(Error::Parameter(format!(
                "gamma grid needs 0 < low <= high and points > 0, got [{}, {}] x {}",
                self.low, self.high, self.points
            )));
        }
        Ok(log_grid(self.low, self.high, self.points, median_abs_gain(train, cfg)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub selection: Option<AssetSelection>,
    pub train_days: usize,
    pub test_days: usize,
    pub windows: usize,
    pub cluster: ClusterConfig,
    pub prevalence_window: usize,
    pub target_persistence: f64,
    pub gamma_grid: GammaGrid,
    pub solvers: Vec<Solver>,
    pub criterion: Criterion,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    /// Annualize the mean return by √252 instead of 252.
    pub literal_return_scaling: bool,
    /// Window worker threads; `None` uses the available parallelism.
    pub workers: Option<usize>,
    /// Also write `labels_window<i>.csv` per window.
    pub save_labels: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data: DataSource::default(),
            selection: None,
            train_days: 252,
            test_days: 30,
            windows: 100,
            cluster: ClusterConfig::default(),
            prevalence_window: DEFAULT_PREVALENCE_WINDOW,
            target_persistence: 30.0,
            gamma_grid: GammaGrid::default(),
            solvers: vec![Solver::Sls, Solver::Cla],
            criterion: Criterion::MaxSharpe,
            seed: 0,
            output_dir: None,
            literal_return_scaling: false,
            workers: None,
            save_labels: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.cluster.validate()?;
        if self.cluster.k != 2 {
            return Err(Error::Unsupported(format!(
                "the backtest labels exactly 2 states, got k = {}",
                self.cluster.k
            )));
        }
        if let Some(s) = self.solvers.iter().find(|s| !matches!(s, Solver::Sls | Solver::Cla)) {
            return Err(Error::Parameter(format!(
                "backtest solvers must be SLS or CLA, got {}",
                s.name()
            )));
        }
        if self.solvers.is_empty() {
            return Err(Error::Parameter("no solvers configured".into()));
        }
        if self.prevalence_window == 0 || self.prevalence_window > self.train_days {
            return Err(Error::Parameter(format!(
                "prevalence window {} must be in 1..={}",
                self.prevalence_window, self.train_days
            )));
        }
        if !(self.target_persistence >= 1.0) {
            return Err(Error::Parameter("target persistence must be >= 1 day".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Parameter("workers must be positive".into()));
        }
        Ok(())
    }

    /// Ordered report cells: each solver on every input, then the naive benchmark.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out: Vec<Cell> = self
            .solvers
            .iter()
            .flat_map(|&solver| InputSource::ALL.map(|s| Cell { solver, source: Some(s) }))
            .collect();
        out.push(Cell { solver: Solver::Naive, source: None });
        out
    }
}

/// Returns panel described by the config's data source.
pub fn load_returns(config: &ExperimentConfig) -> Result<ReturnsPanel> {
    match &config.data {
        DataSource::Synthetic(params) => {
            let mut params = params.clone();
            params.seed = config.seed;
            let (panel, _) = generate(&params.to_spec()?)?;
            match config.selection {
                Some(sel) => {
                    let prices = select_assets(&panel.to_prices(100.0), sel.mode, sel.count, config.seed)?;
                    compute_log_returns(&prices)
                }
                None => Ok(panel),
            }
        }
        DataSource::File { prices, market_caps, schema } => {
            let mut panel = load_prices(prices, schema)?;
            if let Some(caps) = market_caps {
                load_market_caps(&mut panel, caps)?;
            }
            if let Some(sel) = config.selection {
                panel = select_assets(&panel, sel.mode, sel.count, config.seed)?;
            }
            compute_log_returns(&panel)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub solver: Solver,
    /// `None` for the naive benchmark.
    pub source: Option<InputSource>,
}

impl Cell {
    pub fn state_name(&self) -> &'static str {
        self.source.map_or("-", InputSource::name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CellOutcome {
    Ok { weights: Vec<f64>, evaluation: Evaluation },
    Failed { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub cell: Cell,
    pub outcome: CellOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowResult {
    pub index: usize,
    pub split: WindowSplit,
    pub seed: u64,
    pub gamma: Option<f64>,
    pub persistence: Option<f64>,
    pub converged: Option<bool>,
    pub labeling: Option<StateLabeling>,
    pub labels: Vec<usize>,
    pub cells: Vec<CellResult>,
    /// Per test day: (Sparse 0 − Full, Sparse 1 − Full); empty if unavailable.
    pub likelihood_gains: Vec<(f64, f64)>,
    pub errors: Vec<String>,
}

impl WindowResult {
    pub fn outcome(&self, cell: Cell) -> Option<&CellOutcome> {
        self.cells.iter().find(|c| c.cell == cell).map(|c| &c.outcome)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell: Cell,
    pub successes: usize,
    pub failures: usize,
    /// Successful windows whose Sharpe ratio was undefined (zero variance).
    pub undefined_sharpe: usize,
    pub annual_return: Option<Summary>,
    pub annual_volatility: Option<Summary>,
    pub sharpe: Option<Summary>,
    /// More than half of the windows failed.
    pub unreliable: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayGain {
    /// 1-based day within the test horizon.
    pub day: usize,
    pub sparse0_gain: f64,
    pub sparse1_gain: f64,
    pub windows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub config: ExperimentConfig,
    pub assets: Vec<String>,
    /// Dates of the returns panel the windows index into.
    pub dates: Vec<NaiveDate>,
    pub cells: Vec<CellSummary>,
    pub likelihood_gains: Vec<DayGain>,
    /// Mean over all windows and days of (Sparse 0 − Full, Sparse 1 − Full).
    pub mean_likelihood_gain: Option<(f64, f64)>,
    pub failed_windows: usize,
    pub unreliable: bool,
    pub windows: Vec<WindowResult>,
}

impl BacktestReport {
    pub fn summary(&self, cell: Cell) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.cell == cell)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of window `index` derived from the master seed.
pub fn window_seed(master: u64, index: usize) -> u64 {
    splitmix64(master ^ splitmix64(index as u64 + 1))
}

/// Precision of the covariance itself, undoing any Student-t scale adjustment.
fn covariance_precision(model: &StateModel) -> SparsePrecision {
    match model.scale_nu {
        Some(nu) => model.precision.scaled(1.0 - 2.0 / nu),
        None => model.precision.clone(),
    }
}

struct Clustering {
    gamma: f64,
    persistence: f64,
    converged: bool,
    labels: Vec<usize>,
    labeling: StateLabeling,
    sparse0: StateModel,
    sparse1: StateModel,
}

fn cluster_window(train: &ReturnsPanel, config: &ExperimentConfig, seed: u64) -> Result<Clustering> {
    let grid = config.gamma_grid.resolve(train, &config.cluster)?;
    let cal = calibrate_gamma(train, &config.cluster, config.target_persistence, &grid, seed)?;
    let (assignment, models) = assign_clusters(train, &config.cluster, cal.gamma, seed)?;
    let labeling = label_assignment(&assignment, config.prevalence_window)?;
    let sparse0 = models[labeling.sparse0].clone();
    let sparse1 = models[labeling.sparse1].clone();
    Ok(Clustering {
        gamma: cal.gamma,
        persistence: cal.persistence,
        converged: assignment.converged,
        labels: assignment.labels,
        labeling,
        sparse0,
        sparse1,
    })
}

fn upstream(e: &Error) -> Error {
    Error::Estimation(format!("upstream stage failed: {e}"))
}

/// Cluster, label, optimize and evaluate one train/test split. Failures are
/// recorded per cell and never abort the window.
pub fn run_window(returns: &ReturnsPanel, config: &ExperimentConfig, index: usize, split: WindowSplit) -> WindowResult {
    let seed = window_seed(config.seed, index);
    let train = returns.train(&split);
    let test = returns.test(&split);
    let mut errors = Vec::new();

    let full = config.cluster.fit_state(&train.returns, (0..train.len()).collect());
    let clustering = cluster_window(&train, config, seed);
    if let Err(e) = &full {
        errors.push(format!("full-sample fit: {e}"));
    }
    if let Err(e) = &clustering {
        errors.push(format!("clustering: {e}"));
    }

    let inputs = |source: InputSource| -> Result<PortfolioInputs> {
        let full = full.as_ref().map_err(upstream)?;
        match source {
            InputSource::Full => PortfolioInputs::from_covariance(full.mean.clone(), full.covariance.clone(), source),
            InputSource::Sparse => PortfolioInputs::from_precision(full.mean.clone(), &covariance_precision(full), source),
            InputSource::Sparse0 | InputSource::Sparse1 => {
                let c = clustering.as_ref().map_err(upstream)?;
                let m = if source == InputSource::Sparse0 { &c.sparse0 } else { &c.sparse1 };
                PortfolioInputs::from_precision(m.mean.clone(), &covariance_precision(m), source)
            }
        }
    };
    let built: Vec<(InputSource, Result<PortfolioInputs>)> = InputSource::ALL.iter().map(|&s| (s, inputs(s))).collect();

    let evaluate = |w: &nalgebra::DVector<f64>| evaluate_portfolio(w, &test, config.literal_return_scaling);
    let cells = config
        .cells()
        .into_iter()
        .map(|cell| {
            let result = match cell.source {
                None => naive_weights(test.n_assets()).and_then(|w| Ok((evaluate(&w.weights)?, w.weights))),
                Some(source) => {
                    let inp = built.iter().find(|(s, _)| *s == source).expect("all sources built");
                    inp.1
                        .as_ref()
                        .map_err(upstream)
                        .and_then(|inp| select_portfolio(inp, cell.solver, config.criterion))
                        .and_then(|w| Ok((evaluate(&w.weights)?, w.weights)))
                }
            };
            let outcome = match result {
                Ok((evaluation, w)) => CellOutcome::Ok { weights: w.iter().copied().collect(), evaluation },
                Err(e) => CellOutcome::Failed { reason: e.to_string() },
            };
            CellResult { cell, outcome }
        })
        .collect();

    let likelihood_gains = match (&full, &clustering) {
        (Ok(full), Ok(c)) => {
            match likelihood_gain_series(&c.sparse0, &c.sparse1, full, &test, config.cluster.gain, &config.cluster.params) {
                Ok(g) => g,
                Err(e) => {
                    errors.push(format!("likelihood gains: {e}"));
                    Vec::new()
                }
            }
        }
        _ => Vec::new(),
    };

    let c = clustering.ok();
    WindowResult {
        index,
        split,
        seed,
        gamma: c.as_ref().map(|c| c.gamma),
        persistence: c.as_ref().map(|c| c.persistence),
        converged: c.as_ref().map(|c| c.converged),
        labeling: c.as_ref().map(|c| c.labeling.clone()),
        labels: c.map(|c| c.labels).unwrap_or_default(),
        cells,
        likelihood_gains,
        errors,
    }
}

/// Mean and 5th/95th percentiles per cell over the successful windows, and
/// the per-day likelihood gains averaged across windows.
pub fn aggregate_metrics(
    config: &ExperimentConfig,
    assets: Vec<String>,
    dates: Vec<NaiveDate>,
    windows: Vec<WindowResult>,
) -> BacktestReport {
    let total = windows.len();
    let cells: Vec<CellSummary> = config
        .cells()
        .into_iter()
        .map(|cell| {
            let mut ret = Vec::new();
            let mut vol = Vec::new();
            let mut sharpe = Vec::new();
            let mut undefined = 0;
            let mut failures = 0;
            for w in &windows {
                match w.outcome(cell) {
                    Some(CellOutcome::Ok { evaluation, .. }) => {
                        ret.push(evaluation.annual_return);
                        vol.push(evaluation.annual_volatility);
                        match evaluation.sharpe {
                            Some(s) => sharpe.push(s),
                            None => undefined += 1,
                        }
                    }
                    _ => failures += 1,
                }
            }
            let note = if ret.is_empty() {
                Some("no successful windows".to_string())
            } else if sharpe.is_empty() {
                Some("Sharpe ratio undefined in every window".to_string())
            } else {
                None
            };
            CellSummary {
                cell,
                successes: ret.len(),
                failures,
                undefined_sharpe: undefined,
                annual_return: Summary::of(&ret),
                annual_volatility: Summary::of(&vol),
                sharpe: Summary::of(&sharpe),
                unreliable: 2 * failures > total,
                note,
            }
        })
        .collect();

    let horizon = windows.iter().map(|w| w.likelihood_gains.len()).max().unwrap_or(0);
    let likelihood_gains: Vec<DayGain> = (0..horizon)
        .map(|d| {
            let vals: Vec<(f64, f64)> = windows.iter().filter_map(|w| w.likelihood_gains.get(d).copied()).collect();
            let m = vals.len() as f64;
            DayGain {
                day: d + 1,
                sparse0_gain: vals.iter().map(|v| v.0).sum::<f64>() / m,
                sparse1_gain: vals.iter().map(|v| v.1).sum::<f64>() / m,
                windows: vals.len(),
            }
        })
        .collect();
    let all: Vec<(f64, f64)> = windows.iter().flat_map(|w| w.likelihood_gains.iter().copied()).collect();
    let mean_likelihood_gain = (!all.is_empty()).then(|| {
        let m = all.len() as f64;
        (all.iter().map(|v| v.0).sum::<f64>() / m, all.iter().map(|v| v.1).sum::<f64>() / m)
    });
    let failed_windows = windows.iter().filter(|w| !w.errors.is_empty()).count();
    BacktestReport {
        config: config.clone(),
        assets,
        dates,
        unreliable: cells.iter().any(|c| c.unreliable),
        cells,
        likelihood_gains,
        mean_likelihood_gain,
        failed_windows,
        windows,
    }
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Parameter(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Run every sampled window on an already loaded panel.
pub fn run_on_panel(returns: &ReturnsPanel, config: &ExperimentConfig) -> Result<BacktestReport> {
    config.validate()?;
    let splits = sample_windows(returns, config.train_days, config.test_days, config.windows, config.seed)?;
    let windows = with_workers(config.workers, || {
        splits
            .par_iter()
            .enumerate()
            .map(|(i, &s)| run_window(returns, config, i, s))
            .collect::<Vec<_>>()
    })?;
    Ok(aggregate_metrics(config, returns.assets.clone(), returns.dates.clone(), windows))
}

/// Load the configured data and run the full resampled experiment.
pub fn run_experiment(config: &ExperimentConfig) -> Result<BacktestReport> {
    config.validate()?;
    let returns = load_returns(config)?;
    run_on_panel(&returns, config)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub train_days: usize,
    pub cell: Cell,
    pub mean_sharpe: Option<f64>,
    pub std_sharpe: Option<f64>,
    /// Mean Sharpe of this cell over the same solver's Full cell.
    pub relative_to_full: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub reports: Vec<BacktestReport>,
}

impl SweepReport {
    pub fn unreliable(&self) -> bool {
        self.reports.iter().any(|r| r.unreliable)
    }
}

/// Repeat the experiment for each train length on the same panel.
pub fn train_length_sweep(config: &ExperimentConfig, lengths: &[usize]) -> Result<SweepReport> {
    if lengths.is_empty() {
        return Err(Error::Parameter("no train lengths given".into()));
    }
    config.validate()?;
    let returns = load_returns(config)?;
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for &len in lengths {
        let cfg = ExperimentConfig { train_days: len, prevalence_window: config.prevalence_window.min(len), ..config.clone() };
        let report = run_on_panel(&returns, &cfg)?;
        for summary in &report.cells {
            let full = Cell { solver: summary.cell.solver, source: Some(InputSource::Full) };
            let full_mean = report.summary(full).and_then(|s| s.sharpe).map(|s| s.mean);
            let mean = summary.sharpe.map(|s| s.mean);
            rows.push(SweepRow {
                train_days: len,
                cell: summary.cell,
                mean_sharpe: mean,
                std_sharpe: summary.sharpe.map(|s| s.std),
                relative_to_full: match (mean, full_mean, summary.cell.source) {
                    (Some(m), Some(f), Some(_)) if f != 0.0 => Some(m / f),
                    _ => None,
                },
            });
        }
        reports.push(report);
    }
    Ok(SweepReport { rows, reports })
}
