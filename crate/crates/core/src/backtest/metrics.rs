use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::data::{ReturnsPanel, TRADING_DAYS_PER_YEAR};
use crate::error::{Error, Result};
use crate::icc::{gain, GainKind, GainParams, StateModel};

/// Off-sample performance of a buy-and-hold portfolio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub daily: Vec<f64>,
    pub annual_return: f64,
    pub annual_volatility: f64,
    /// `None` when the daily series has zero variance.
    pub sharpe: Option<f64>,
}

/// Mean and standard deviation (divisor `m - 1`, or `m` for one sample).
/// A constant series has a standard deviation of exactly zero.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    if xs.iter().all(|&x| x == xs[0]) {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    let dof = if xs.len() > 1 { m - 1.0 } else { m };
    (mean, (ss / dof).sqrt())
}

/// Hold `weights` fixed over `test` and annualize: return ×252 (×√252 when
/// `literal_return_scaling`), volatility and Sharpe ×√252.
pub fn evaluate_portfolio(weights: &DVector<f64>, test: &ReturnsPanel, literal_return_scaling: bool) -> Result<Evaluation> {
    if weights.len() != test.n_assets() {
        return Err(Error::Validation(format!(
            "{} weights for {} test assets",
            weights.len(),
            test.n_assets()
        )));
    }
    if test.is_empty() {
        return Err(Error::Validation("empty test slice".into()));
    }
    let daily: Vec<f64> = (&test.returns * weights).iter().copied().collect();
    let (mean, std) = mean_std(&daily);
    let days = TRADING_DAYS_PER_YEAR as f64;
    let annual_return = if literal_return_scaling { mean * days.sqrt() } else { mean * days };
    let sharpe = (std > 0.0).then(|| days.sqrt() * mean / std);
    Ok(Evaluation { daily, annual_return, annual_volatility: days.sqrt() * std, sharpe })
}

/// Per test day: gain of each state model minus the gain of the whole-train
/// model, both scored with the same gain function.
pub fn likelihood_gain_series(
    sparse0: &StateModel,
    sparse1: &StateModel,
    full: &StateModel,
    test: &ReturnsPanel,
    kind: GainKind,
    params: &GainParams,
) -> Result<Vec<(f64, f64)>> {
    (0..test.len())
        .map(|t| {
            let r = test.returns.row(t).transpose();
            let g_full = gain(kind, &r, full, params)?;
            Ok((
                gain(kind, &r, sparse0, params)? - g_full,
                gain(kind, &r, sparse1, params)? - g_full,
            ))
        })
        .collect()
}

/// Linear interpolation between order statistics at position `(m-1)·q`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub p5: f64,
    pub p95: f64,
    pub std: f64,
    pub count: usize,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let (mean, std) = mean_std(values);
        Some(Self {
            mean,
            p5: percentile(&sorted, 0.05),
            p95: percentile(&sorted, 0.95),
            std,
            count: values.len(),
        })
    }

    /// Standard error of the mean.
    pub fn std_err(&self) -> f64 {
        self.std / (self.count as f64).sqrt()
    }
}
