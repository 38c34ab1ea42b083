use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use iccpo_core::backtest::{DataSource, ExperimentConfig};
use iccpo_core::data::CsvSchema;
use iccpo_core::icc::{ClusterConfig, GainKind};
use iccpo_core::optim::{Criterion, Solver};
use iccpo_core::synth::{MeanPattern, ReturnDistribution, SynthParams};
use iccpo_core::{Error, Result};

pub const OUTPUT_DIR_ENV: &str = "ICC_PO_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "iccpo", version, about = "Inverse covariance clustering and long-only portfolio backtests")]
pub struct Cli {
    /// Output directory; falls back to the config file, then $ICC_PO_OUTPUT_DIR, then `.`.
    #[arg(long, short = 'o', global = true)]
    pub output_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a regime-switching price panel and its true state labels.
    Synth(SynthArgs),
    /// Cluster one window of returns into states.
    Cluster(ClusterArgs),
    /// Run the resampled train/test experiment.
    Backtest(BacktestArgs),
    /// Re-aggregate the windows stored in an existing report.json.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GainArg {
    Euclidean,
    Normal,
    StudentT,
    Hybrid,
}

impl From<GainArg> for GainKind {
    fn from(g: GainArg) -> Self {
        match g {
            GainArg::Euclidean => GainKind::Euclidean,
            GainArg::Normal => GainKind::Normal,
            GainArg::StudentT => GainKind::StudentT,
            GainArg::Hybrid => GainKind::Hybrid,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SolverArg {
    Sls,
    Cla,
}

impl From<SolverArg> for Solver {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Sls => Solver::Sls,
            SolverArg::Cla => Solver::Cla,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PatternArg {
    Level,
    Rotation,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DistributionArg {
    Normal,
    StudentT,
}

/// Config file shared by every subcommand: `.toml` or `.json`.
#[derive(Debug, Args)]
pub struct ConfigArg {
    #[arg(long, short = 'c')]
    pub config: Option<PathBuf>,
}

impl ConfigArg {
    pub fn load(&self) -> Result<ExperimentConfig> {
        match &self.config {
            Some(p) => read_document(p),
            None => Ok(ExperimentConfig::default()),
        }
    }
}

/// Parse a TOML (default) or JSON (`.json`) document.
pub fn read_document<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
    let parsed = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| Error::Validation(format!("{}: {e}", path.display())))
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    /// Full regime description (means and covariances); overrides the shape flags.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Number of regimes.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub persistence: Option<f64>,
    #[arg(long)]
    pub days: Option<usize>,
    #[arg(long)]
    pub assets: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Regime mean separation in volatility units.
    #[arg(long)]
    pub separation: Option<f64>,
    #[arg(long, value_enum)]
    pub pattern: Option<PatternArg>,
    /// Daily volatility, one value or one per regime.
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    pub vol: Option<Vec<f64>>,
    /// Pairwise correlation, one value or one per regime.
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    pub correlation: Option<Vec<f64>>,
    #[arg(long)]
    pub drift: Option<f64>,
    #[arg(long, value_enum)]
    pub distribution: Option<DistributionArg>,
    /// Degrees of freedom for Student-t draws.
    #[arg(long, default_value_t = 5.0)]
    pub nu: f64,
}

impl SynthArgs {
    pub fn params(&self) -> Result<SynthParams> {
        let cfg = self.config.load()?;
        let mut p = match cfg.data {
            DataSource::Synthetic(p) => SynthParams { seed: cfg.seed, ..p },
            DataSource::File { .. } => SynthParams::default(),
        };
        if let Some(v) = self.k {
            p.regimes = v;
        }
        if let Some(v) = self.persistence {
            p.persistence = v;
        }
        if let Some(v) = self.days {
            p.days = v;
        }
        if let Some(v) = self.assets {
            p.assets = v;
        }
        if let Some(v) = self.seed {
            p.seed = v;
        }
        if let Some(v) = self.separation {
            p.separation = v;
        }
        if let Some(v) = self.pattern {
            p.pattern = match v {
                PatternArg::Level => MeanPattern::Level,
                PatternArg::Rotation => MeanPattern::Rotation,
            };
        }
        if let Some(v) = &self.vol {
            p.vol = v.clone();
        }
        if let Some(v) = &self.correlation {
            p.correlation = v.clone();
        }
        if let Some(v) = self.drift {
            p.drift = v;
        }
        if let Some(v) = self.distribution {
            p.distribution = match v {
                DistributionArg::Normal => ReturnDistribution::Normal,
                DistributionArg::StudentT => ReturnDistribution::StudentT { nu: self.nu },
            };
        }
        Ok(p)
    }
}

/// Flags mirroring the clustering part of the config.
#[derive(Debug, Args)]
pub struct ClusterFlags {
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_enum)]
    pub gain: Option<GainArg>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub c1: Option<f64>,
    #[arg(long)]
    pub c2: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub target_persistence: Option<f64>,
    #[arg(long)]
    pub prevalence_window: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Wide price CSV to use instead of the configured data source.
    #[arg(long)]
    pub prices: Option<PathBuf>,
    #[arg(long)]
    pub market_caps: Option<PathBuf>,
}

impl ClusterFlags {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        let c: &mut ClusterConfig = &mut cfg.cluster;
        if let Some(v) = self.k {
            c.k = v;
        }
        if let Some(v) = self.gain {
            c.gain = v.into();
        }
        if let Some(v) = self.nu {
            c.params.nu = v;
        }
        if let Some(v) = self.c1 {
            c.params.c1 = v;
        }
        if let Some(v) = self.c2 {
            c.params.c2 = v;
        }
        if let Some(v) = self.max_iter {
            c.max_iter = v;
        }
        if let Some(v) = self.restarts {
            c.restarts = v;
        }
        if let Some(v) = self.target_persistence {
            cfg.target_persistence = v;
        }
        if let Some(v) = self.prevalence_window {
            cfg.prevalence_window = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(p) = &self.prices {
            let schema = match &cfg.data {
                DataSource::File { schema, .. } => schema.clone(),
                DataSource::Synthetic(_) => CsvSchema::default(),
            };
            cfg.data = DataSource::File { prices: p.clone(), market_caps: self.market_caps.clone(), schema };
        }
    }
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[command(flatten)]
    pub flags: ClusterFlags,
    /// `auto` calibrates against the target persistence; otherwise a fixed penalty.
    #[arg(long, default_value = "auto")]
    pub gamma: String,
    /// First return row of the window.
    #[arg(long, default_value_t = 0)]
    pub start: usize,
    /// Window length in days; defaults to the rest of the panel.
    #[arg(long)]
    pub days: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BacktestArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[command(flatten)]
    pub flags: ClusterFlags,
    /// Train length; several values with `--sweep`.
    #[arg(long, num_args = 1..)]
    pub train_days: Vec<usize>,
    /// Run the experiment once per `--train-days` value.
    #[arg(long)]
    pub sweep: bool,
    #[arg(long)]
    pub test_days: Option<usize>,
    #[arg(long)]
    pub windows: Option<usize>,
    #[arg(long, value_enum, num_args = 1.., value_delimiter = ',')]
    pub solvers: Option<Vec<SolverArg>>,
    /// Select by a fixed daily target return instead of the maximum Sharpe ratio.
    #[arg(long)]
    pub target_return: Option<f64>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub save_labels: bool,
    /// Annualize the mean return by √252 instead of 252.
    #[arg(long)]
    pub literal_return_scaling: bool,
}

impl BacktestArgs {
    pub fn effective_config(&self) -> Result<ExperimentConfig> {
        let mut cfg = self.config.load()?;
        self.flags.apply(&mut cfg);
        if let [d] = self.train_days[..] {
            cfg.train_days = d;
        }
        if self.train_days.len() > 1 && !self.sweep {
            return Err(Error::Validation("several --train-days values need --sweep".into()));
        }
        if let Some(v) = self.test_days {
            cfg.test_days = v;
        }
        if let Some(v) = self.windows {
            cfg.windows = v;
        }
        if let Some(v) = &self.solvers {
            cfg.solvers = v.iter().map(|&s| s.into()).collect();
        }
        if let Some(v) = self.target_return {
            cfg.criterion = Criterion::TargetReturn(v);
        }
        if let Some(v) = self.workers {
            cfg.workers = Some(v);
        }
        cfg.save_labels |= self.save_labels;
        cfg.literal_return_scaling |= self.literal_return_scaling;
        Ok(cfg)
    }

    pub fn sweep_lengths(&self, cfg: &ExperimentConfig) -> Vec<usize> {
        if self.train_days.is_empty() {
            vec![cfg.train_days]
        } else {
            self.train_days.clone()
        }
    }
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// A report.json written by `backtest`.
    pub report: PathBuf,
}

/// Flag, then config file, then environment, then the working directory.
pub fn resolve_output_dir(flag: Option<&PathBuf>, config: Option<&PathBuf>) -> PathBuf {
    flag.or(config)
        .cloned()
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}
