//! Inverse covariance clustering: per-state gain functions, the penalized
//! temporal assignment, and calibration of the switching penalty.
//!
//! Each state is summarized by its sample mean, ML sample covariance and a
//! LoGo sparse precision on a TMFG built from squared correlations. Every day
//! goes to the state with the largest gain minus a penalty `gamma` whenever
//! its state differs from the previous day's.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::ReturnsPanel;
use crate::error::{Error, Result};
use crate::linalg::{mean_and_covariance, spd_inverse, squared_correlation};
use crate::network::{build_tmfg, logo_estimate, FilteringNetwork, SparsePrecision};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainKind {
    Euclidean,
    Normal,
    StudentT,
    Hybrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GainParams {
    /// Student-t degrees of freedom, must exceed 2.
    pub nu: f64,
    /// Hybrid-gain weight on `ln |precision|`.
    pub c1: f64,
    /// Hybrid-gain weight on the Mahalanobis distance.
    pub c2: f64,
}

impl Default for GainParams {
    fn default() -> Self {
        Self { nu: 5.0, c1: 0.5, c2: 0.5 }
    }
}

impl GainParams {
    pub fn validate(&self, kind: GainKind) -> Result<()> {
        match kind {
            GainKind::StudentT if !(self.nu > 2.0 && self.nu.is_finite()) => {
                Err(Error::Parameter(format!("student-t gain needs nu > 2, got {}", self.nu)))
            }
            GainKind::Hybrid if !(self.c1 >= 0.0 && self.c2 >= 0.0) => Err(Error::Parameter(format!(
                "hybrid gain needs c1, c2 >= 0, got ({}, {})",
                self.c1, self.c2
            ))),
            _ => Ok(()),
        }
    }
}

/// Sign convention of the switching penalty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyConvention {
    /// `gamma` is charged when the state differs from the previous day's.
    #[default]
    Switching,
    /// `gamma` is charged when the state equals the previous day's, i.e. the
    /// Kronecker delta taken literally.
    Literal,
}

/// Fitted parameters of one market state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateModel {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    /// `None` below four assets, where the precision is the dense inverse.
    pub network: Option<FilteringNetwork>,
    /// LoGo precision of the covariance, or of the Student-t scale matrix
    /// when `scale_nu` is set.
    pub precision: SparsePrecision,
    pub log_det_precision: f64,
    pub members: Vec<usize>,
    /// Degrees of freedom the precision was scale-adjusted for.
    pub scale_nu: Option<f64>,
}

impl StateModel {
    /// Fit mean, covariance, TMFG and LoGo precision on `members` rows of a
    /// T×n data matrix. With `scale_nu = Some(nu)` the precision refers to the
    /// Student-t scale matrix `(1 - 2/nu) * covariance`.
    pub fn fit(data: &DMatrix<f64>, members: Vec<usize>, scale_nu: Option<f64>) -> Result<Self> {
        let n = data.ncols();
        if members.is_empty() {
            return Err(Error::InsufficientData("cannot fit a state with no members".into()));
        }
        let (mean, covariance) = mean_and_covariance(data, &members);
        let (network, mut precision, mut log_det) = if n >= 4 {
            let net = build_tmfg(&squared_correlation(&covariance))?;
            let (p, ld) = logo_estimate(&covariance, &net)?;
            (Some(net), p, ld)
        } else {
            let (inv, ridged) = spd_inverse(&covariance, "state covariance")?;
            let ld = -crate::linalg::cholesky_with_ridge(&covariance, "state covariance")
                .map(|(c, _)| crate::linalg::chol_log_det(&c))?;
            let mut off_diag = Vec::new();
            for u in 0..n {
                for v in (u + 1)..n {
                    off_diag.push((u, v, inv[(u, v)]));
                }
            }
            let p = SparsePrecision {
                n,
                diag: inv.diagonal().iter().copied().collect(),
                off_diag,
                ridged_blocks: usize::from(ridged),
            };
            (None, p, ld)
        };
        if let Some(nu) = scale_nu {
            if !(nu > 2.0) {
                return Err(Error::Parameter(format!("scale adjustment needs nu > 2, got {nu}")));
            }
            let factor = 1.0 - 2.0 / nu;
            precision = precision.scaled(1.0 / factor);
            log_det -= n as f64 * factor.ln();
        }
        Ok(Self {
            mean,
            covariance,
            network,
            precision,
            log_det_precision: log_det,
            members,
            scale_nu,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Sparse precision of the covariance itself, undoing any scale adjustment.
    pub fn covariance_precision(&self) -> SparsePrecision {
        match self.scale_nu {
            Some(nu) => self.precision.scaled(1.0 - 2.0 / nu),
            None => self.precision.clone(),
        }
    }
}

fn check_dim(r: &DVector<f64>, state: &StateModel) -> Result<()> {
    if r.len() != state.dim() {
        return Err(Error::Validation(format!(
            "observation has {} entries, state has {}",
            r.len(),
            state.dim()
        )));
    }
    Ok(())
}

fn deviation(r: &DVector<f64>, state: &StateModel) -> Result<Vec<f64>> {
    check_dim(r, state)?;
    Ok(r.iter().zip(state.mean.iter()).map(|(a, b)| a - b).collect())
}

/// Negative squared Euclidean distance to the state mean.
pub fn gain_euclidean(r: &DVector<f64>, state: &StateModel) -> Result<f64> {
    let d = deviation(r, state)?;
    Ok(-d.iter().map(|x| x * x).sum::<f64>())
}

/// Squared Mahalanobis distance under the state's sparse precision.
pub fn mahalanobis_sq(r: &DVector<f64>, state: &StateModel) -> Result<f64> {
    let d = deviation(r, state)?;
    let q = state.precision.quad_form(&d);
    if !q.is_finite() || q < -1e-12 * (1.0 + d.iter().map(|x| x * x).sum::<f64>()) {
        return Err(Error::Estimation(format!(
            "precision is not positive definite (quadratic form {q})"
        )));
    }
    Ok(q.max(0.0))
}

/// `½ ln|J| − n d²/2`.
pub fn gain_normal(r: &DVector<f64>, state: &StateModel) -> Result<f64> {
    let d2 = mahalanobis_sq(r, state)?;
    Ok(normal_from(state.log_det_precision, d2, state.dim()))
}

/// `½ ln|J| − (ν+n)/2 · ln(1 + d²/ν)` with `J` the inverse scale matrix.
pub fn gain_student_t(r: &DVector<f64>, state: &StateModel, params: &GainParams) -> Result<f64> {
    params.validate(GainKind::StudentT)?;
    match state.scale_nu {
        Some(nu) if nu == params.nu => {}
        other => {
            return Err(Error::Validation(format!(
                "student-t gain with nu={} needs a state scale-adjusted for the same nu, state has {other:?}",
                params.nu
            )))
        }
    }
    let d2 = mahalanobis_sq(r, state)?;
    Ok(student_from(state.log_det_precision, d2, state.dim(), params.nu))
}

/// `c1 ln|J| − c2 d²`.
pub fn gain_hybrid(r: &DVector<f64>, state: &StateModel, params: &GainParams) -> Result<f64> {
    params.validate(GainKind::Hybrid)?;
    let d2 = mahalanobis_sq(r, state)?;
    Ok(hybrid_from(state.log_det_precision, d2, params.c1, params.c2))
}

pub fn gain(kind: GainKind, r: &DVector<f64>, state: &StateModel, params: &GainParams) -> Result<f64> {
    match kind {
        GainKind::Euclidean => gain_euclidean(r, state),
        GainKind::Normal => gain_normal(r, state),
        GainKind::StudentT => gain_student_t(r, state, params),
        GainKind::Hybrid => gain_hybrid(r, state, params),
    }
}

fn normal_from(log_det: f64, d2: f64, n: usize) -> f64 {
    0.5 * log_det - n as f64 * d2 / 2.0
}

fn student_from(log_det: f64, d2: f64, n: usize, nu: f64) -> f64 {
    0.5 * log_det - 0.5 * (nu + n as f64) * (d2 / nu).ln_1p()
}

fn hybrid_from(log_det: f64, d2: f64, c1: f64, c2: f64) -> f64 {
    c1 * log_det - c2 * d2
}

/// Gain for a pre-computed deviation `r - mean`; no validation.
fn gain_of_deviation(kind: GainKind, dev: &[f64], state: &StateModel, params: &GainParams) -> f64 {
    if kind == GainKind::Euclidean {
        return -dev.iter().map(|x| x * x).sum::<f64>();
    }
    let d2 = state.precision.quad_form(dev).max(0.0);
    let ld = state.log_det_precision;
    match kind {
        GainKind::Normal => normal_from(ld, d2, state.dim()),
        GainKind::StudentT => student_from(ld, d2, state.dim(), params.nu),
        GainKind::Hybrid => hybrid_from(ld, d2, params.c1, params.c2),
        GainKind::Euclidean => unreachable!(),
    }
}

/// Settings shared by every clustering fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusterConfig {
    pub k: usize,
    pub gain: GainKind,
    pub params: GainParams,
    pub max_iter: usize,
    pub restarts: usize,
    pub penalty: PenaltyConvention,
    /// Overrides the default minimum state size `max(ceil(n/10), 10)`.
    pub min_cluster_size: Option<usize>,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            k: 2,
            gain: GainKind::StudentT,
            params: GainParams::default(),
            max_iter: 100,
            restarts: 3,
            penalty: PenaltyConvention::Switching,
            min_cluster_size: None,
        }
    }
}

impl ClusterConfig {
    pub fn min_size(&self, n_assets: usize) -> usize {
        self.min_cluster_size
            .unwrap_or_else(|| n_assets.div_ceil(10).max(10))
            .max(1)
    }

    fn scale_nu(&self) -> Option<f64> {
        (self.gain == GainKind::StudentT).then_some(self.params.nu)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Validation("number of states must be at least 1".into()));
        }
        if self.max_iter == 0 || self.restarts == 0 {
            return Err(Error::Validation("max_iter and restarts must be positive".into()));
        }
        self.params.validate(self.gain)
    }

    /// Fit a state model on the given rows using this configuration's gain.
    pub fn fit_state(&self, data: &DMatrix<f64>, members: Vec<usize>) -> Result<StateModel> {
        StateModel::fit(data, members, self.scale_nu())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepStats {
    pub switches: usize,
    pub sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterDiagnostics {
    pub sweeps: Vec<SweepStats>,
    /// Times an undersized state was refilled from the largest state.
    pub repairs: usize,
    pub total_penalized_gain: f64,
    /// Which random restart produced the returned labeling.
    pub restart: usize,
    /// Per-day gain of the assigned state under the final models.
    pub final_gains: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    pub k: usize,
    pub gamma: f64,
    pub gain_kind: GainKind,
    pub params: GainParams,
    pub iterations_run: usize,
    pub converged: bool,
    pub seed: u64,
    pub diagnostics: ClusterDiagnostics,
}

/// Mean run length: `T / (switches + 1)`.
pub fn average_persistence(labels: &[usize]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    labels.len() as f64 / (count_switches(labels) + 1) as f64
}

pub fn count_switches(labels: &[usize]) -> usize {
    labels.windows(2).filter(|w| w[0] != w[1]).count()
}

fn penalty(conv: PenaltyConvention, prev: Option<usize>, k: usize, gamma: f64) -> f64 {
    match (prev, conv) {
        (None, _) => 0.0,
        (Some(p), PenaltyConvention::Switching) if p != k => gamma,
        (Some(p), PenaltyConvention::Literal) if p == k => gamma,
        _ => 0.0,
    }
}

fn members_of(labels: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut m = vec![Vec::new(); k];
    for (t, &l) in labels.iter().enumerate() {
        m[l].push(t);
    }
    m
}

struct Fit<'a> {
    data: &'a DMatrix<f64>,
    rows: Vec<DVector<f64>>,
    cfg: &'a ClusterConfig,
    gamma: f64,
    min_size: usize,
}

struct RunOutcome {
    labels: Vec<usize>,
    models: Vec<StateModel>,
    score: f64,
    converged: bool,
    iterations: usize,
    sweeps: Vec<SweepStats>,
    repairs: usize,
}

impl Fit<'_> {
    fn deviation(&self, t: usize, mean: &DVector<f64>) -> Vec<f64> {
        self.rows[t].iter().zip(mean.iter()).map(|(a, b)| a - b).collect()
    }

    fn gain_at(&self, t: usize, model: &StateModel, mean: &DVector<f64>) -> f64 {
        gain_of_deviation(self.cfg.gain, &self.deviation(t, mean), model, &self.cfg.params)
    }

    /// Move the worst-fitting rows of the largest state into undersized states.
    fn repair(&self, labels: &mut [usize]) -> Result<usize> {
        let k = self.cfg.k;
        let mut repairs = 0;
        loop {
            let sizes = size_counts(labels, k);
            let Some(small) = (0..k).find(|&s| sizes[s] < self.min_size) else {
                return Ok(repairs);
            };
            let big = (0..k)
                .max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a)))
                .expect("k >= 1");
            let need = self.min_size - sizes[small];
            if sizes[big] < self.min_size + need {
                return Err(Error::InsufficientData(format!(
                    "cannot refill state {small}: largest state has {} rows",
                    sizes[big]
                )));
            }
            let members: Vec<usize> = (0..labels.len()).filter(|&t| labels[t] == big).collect();
            let model = self.cfg.fit_state(self.data, members.clone())?;
            let mut scored: Vec<(f64, usize)> = members
                .iter()
                .map(|&t| (self.gain_at(t, &model, &model.mean), t))
                .collect();
            scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            for &(_, t) in scored.iter().take(need) {
                labels[t] = small;
            }
            repairs += 1;
        }
    }

    /// One forward pass; means follow membership changes as they happen,
    /// covariances and precisions stay fixed for the pass.
    fn sweep(&self, models: &[StateModel], start: &[usize]) -> Vec<usize> {
        let k = self.cfg.k;
        let n = self.data.ncols();
        let mut sums: Vec<DVector<f64>> = vec![DVector::zeros(n); k];
        let mut counts = vec![0usize; k];
        for (t, &l) in start.iter().enumerate() {
            sums[l] += &self.rows[t];
            counts[l] += 1;
        }
        let mut out: Vec<usize> = Vec::with_capacity(start.len());
        for (t, &was) in start.iter().enumerate() {
            let prev = out.last().copied();
            let mut best = f64::NEG_INFINITY;
            let mut choice = 0;
            for (s, model) in models.iter().enumerate() {
                let g = if counts[s] > 0 {
                    self.gain_at(t, model, &(&sums[s] / counts[s] as f64))
                } else {
                    self.gain_at(t, model, &model.mean)
                };
                let g = g - penalty(self.cfg.penalty, prev, s, self.gamma);
                if g > best {
                    best = g;
                    choice = s;
                }
            }
            if choice != was {
                sums[was] -= &self.rows[t];
                counts[was] -= 1;
                sums[choice] += &self.rows[t];
                counts[choice] += 1;
            }
            out.push(choice);
        }
        out
    }

    fn score(&self, labels: &[usize], models: &[StateModel]) -> (f64, Vec<f64>) {
        let gains: Vec<f64> = labels
            .iter()
            .enumerate()
            .map(|(t, &l)| self.gain_at(t, &models[l], &models[l].mean))
            .collect();
        let pen: f64 = (1..labels.len())
            .map(|t| penalty(self.cfg.penalty, Some(labels[t - 1]), labels[t], self.gamma))
            .sum();
        (gains.iter().sum::<f64>() - pen, gains)
    }

    fn run(&self, seed: u64) -> Result<RunOutcome> {
        let k = self.cfg.k;
        let t_len = self.rows.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut labels: Vec<usize> = (0..t_len).map(|_| rng.random_range(0..k)).collect();
        let mut seen: Vec<Vec<usize>> = Vec::new();
        let mut sweeps = Vec::new();
        let mut repairs = 0;
        let mut best: Option<(f64, Vec<usize>, Vec<StateModel>)> = None;

        for iter in 1..=self.cfg.max_iter {
            let mut fitted = labels.clone();
            repairs += self.repair(&mut fitted)?;
            let models = members_of(&fitted, k)
                .into_iter()
                .map(|m| self.cfg.fit_state(self.data, m))
                .collect::<Result<Vec<_>>>()?;
            let next = self.sweep(&models, &fitted);
            sweeps.push(SweepStats {
                switches: count_switches(&next),
                sizes: size_counts(&next, k),
            });
            if next == labels {
                let (score, _) = self.score(&next, &models);
                return Ok(RunOutcome {
                    labels: next,
                    models,
                    score,
                    converged: true,
                    iterations: iter,
                    sweeps,
                    repairs,
                });
            }
            let (score, _) = self.score(&next, &models);
            if best.as_ref().is_none_or(|b| score > b.0) {
                best = Some((score, next.clone(), models));
            }
            let cycled = seen.contains(&next);
            seen.push(labels);
            labels = next;
            if cycled {
                break;
            }
        }
        let (score, labels, models) = best.expect("at least one sweep ran");
        Ok(RunOutcome {
            labels,
            models,
            score,
            converged: false,
            iterations: sweeps.len(),
            sweeps,
            repairs,
        })
    }
}

fn size_counts(labels: &[usize], k: usize) -> Vec<usize> {
    let mut c = vec![0; k];
    for &l in labels {
        c[l] += 1;
    }
    c
}

/// Derive the restart seeds from a master seed.
fn restart_seeds(seed: u64, restarts: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..restarts).map(|_| rng.random()).collect()
}

/// Penalized temporal clustering of the train panel into `cfg.k` states.
///
/// Runs `cfg.restarts` random initializations and keeps the labeling with the
/// highest total penalized gain. Each run alternates a forward assignment
/// sweep with a full refit of every state until a sweep reproduces its input
/// labels or `cfg.max_iter` sweeps have run.
pub fn assign_clusters(
    train: &ReturnsPanel,
    cfg: &ClusterConfig,
    gamma: f64,
    seed: u64,
) -> Result<(ClusterAssignment, Vec<StateModel>)> {
    cfg.validate()?;
    if !(gamma >= 0.0) {
        return Err(Error::Parameter(format!("gamma must be >= 0, got {gamma}")));
    }
    let min_size = cfg.min_size(train.n_assets());
    if train.len() < cfg.k * min_size {
        return Err(Error::InsufficientData(format!(
            "{} rows cannot hold {} states of at least {min_size} rows",
            train.len(),
            cfg.k
        )));
    }
    let fit = Fit {
        data: &train.returns,
        rows: (0..train.len()).map(|t| train.returns.row(t).transpose()).collect(),
        cfg,
        gamma,
        min_size,
    };
    let outcomes: Vec<Result<RunOutcome>> = restart_seeds(seed, cfg.restarts)
        .into_par_iter()
        .map(|s| fit.run(s))
        .collect();

    let mut best: Option<(usize, RunOutcome)> = None;
    let mut first_err = None;
    for (i, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(o) => {
                if best.as_ref().is_none_or(|(_, b)| o.score > b.score) {
                    best = Some((i, o));
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let Some((restart, run)) = best else {
        return Err(first_err.expect("every restart failed"));
    };
    let (total, final_gains) = fit.score(&run.labels, &run.models);
    let assignment = ClusterAssignment {
        labels: run.labels,
        k: cfg.k,
        gamma,
        gain_kind: cfg.gain,
        params: cfg.params,
        iterations_run: run.iterations,
        converged: run.converged,
        seed,
        diagnostics: ClusterDiagnostics {
            sweeps: run.sweeps,
            repairs: run.repairs,
            total_penalized_gain: total,
            restart,
            final_gains,
        },
    };
    Ok((assignment, run.models))
}

/// Median absolute per-day gain of a single state fitted on the whole panel.
/// This sets the scale of the default penalty grid.
pub fn median_abs_gain(train: &ReturnsPanel, cfg: &ClusterConfig) -> Result<f64> {
    cfg.validate()?;
    let model = cfg.fit_state(&train.returns, (0..train.len()).collect())?;
    let mut g: Vec<f64> = (0..train.len())
        .map(|t| {
            let r = train.returns.row(t).transpose();
            gain(cfg.gain, &r, &model, &cfg.params).map(f64::abs)
        })
        .collect::<Result<_>>()?;
    g.sort_by(f64::total_cmp);
    let m = g.len();
    Ok(if m % 2 == 1 { g[m / 2] } else { 0.5 * (g[m / 2 - 1] + g[m / 2]) })
}

/// `points` log-spaced values spanning `[low, high] * scale`.
pub fn log_grid(low: f64, high: f64, points: usize, scale: f64) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![low * scale],
        _ => {
            let (a, b) = (low.ln(), high.ln());
            (0..points)
                .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp() * scale)
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub gamma: f64,
    /// `None` when the fit at this gamma failed.
    pub persistence: Option<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaCalibration {
    pub gamma: f64,
    pub persistence: f64,
    pub grid: Vec<GridPoint>,
}

/// Pick the grid penalty whose clustering persistence is closest to
/// `target_persistence` days (ties go to the smaller penalty).
pub fn calibrate_gamma(
    train: &ReturnsPanel,
    cfg: &ClusterConfig,
    target_persistence: f64,
    grid: &[f64],
    seed: u64,
) -> Result<GammaCalibration> {
    if grid.is_empty() {
        return Err(Error::Validation("gamma grid is empty".into()));
    }
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Validation("gamma grid must be sorted ascending".into()));
    }
    let runs: Vec<Result<ClusterAssignment>> = grid
        .par_iter()
        .map(|&g| assign_clusters(train, cfg, g, seed).map(|(a, _)| a))
        .collect();
    let mut points = Vec::with_capacity(grid.len());
    let mut best: Option<(f64, f64, f64)> = None;
    let mut errors = Vec::new();
    for (&gamma, run) in grid.iter().zip(runs) {
        match run {
            Ok(a) => {
                let p = average_persistence(&a.labels);
                let dist = (p - target_persistence).abs();
                if best.is_none_or(|(d, _, _)| dist < d) {
                    best = Some((dist, gamma, p));
                }
                points.push(GridPoint { gamma, persistence: Some(p), converged: a.converged });
            }
            Err(e) => {
                errors.push(format!("gamma={gamma}: {e}"));
                points.push(GridPoint { gamma, persistence: None, converged: false });
            }
        }
    }
    let (_, gamma, persistence) =
        best.ok_or_else(|| Error::Calibration(errors.join("; ")))?;
    Ok(GammaCalibration { gamma, persistence, grid: points })
}
