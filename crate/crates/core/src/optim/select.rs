use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::sls::SlsOptions;
use super::{cla_frontier, sls_long_only, ConstraintSet, PortfolioInputs, PortfolioWeights, Solver};
use crate::error::{Error, Result};

/// How a single portfolio is picked from the long-only frontier.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum Criterion {
    /// Highest in-sample `μᵀw / √(wᵀΣw)`, zero risk-free rate.
    #[default]
    MaxSharpe,
    TargetReturn(f64),
}

/// In-sample Sharpe ratio; `-inf` for a zero-variance portfolio.
pub fn sharpe_ratio(inputs: &PortfolioInputs, w: &DVector<f64>) -> f64 {
    let var = inputs.variance(w);
    if var > 0.0 {
        inputs.expected_return(w) / var.sqrt()
    } else {
        f64::NEG_INFINITY
    }
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Maximize a unimodal `f` on `[a, b]`; returns `(argmax, max)`.
fn golden_max(mut a: f64, mut b: f64, tol: f64, mut f: impl FnMut(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc >= fd { (c, fc) } else { (d, fd) })
}

fn blend(a: &DVector<f64>, b: &DVector<f64>, t: f64) -> DVector<f64> {
    a * (1.0 - t) + b * t
}

/// A long-only portfolio from either constrained solver.
pub fn select_portfolio(inputs: &PortfolioInputs, solver: Solver, criterion: Criterion) -> Result<PortfolioWeights> {
    match solver {
        Solver::Cla => select_cla(inputs, criterion),
        Solver::Sls => select_sls(inputs, criterion),
        other => Err(Error::Parameter(format!(
            "portfolio selection needs SLS or CLA, got {}",
            other.name()
        ))),
    }
}

fn select_cla(inputs: &PortfolioInputs, criterion: Criterion) -> Result<PortfolioWeights> {
    let n = inputs.n();
    let tps = cla_frontier(inputs, &vec![0.0; n], &vec![1.0; n])?;
    let done = |w| Ok(inputs.weights(w, ConstraintSet::LongOnly, Solver::Cla, true));
    if tps.len() == 1 {
        let w = tps[0].weights.clone();
        return match criterion {
            Criterion::TargetReturn(r) if (inputs.expected_return(&w) - r).abs() > 1e-12 * r.abs().max(1e-12) => {
                Err(Error::Infeasible(format!("target return {r} not on the frontier")))
            }
            _ => done(w),
        };
    }
    match criterion {
        Criterion::MaxSharpe => {
            let mut best = (f64::NEG_INFINITY, tps[0].weights.clone());
            for tp in &tps {
                let s = sharpe_ratio(inputs, &tp.weights);
                if s > best.0 {
                    best = (s, tp.weights.clone());
                }
            }
            for pair in tps.windows(2) {
                let (a, b) = (&pair[0].weights, &pair[1].weights);
                let (t, s) = golden_max(0.0, 1.0, 1e-12, |t| Ok(sharpe_ratio(inputs, &blend(a, b, t))))?;
                if s > best.0 {
                    best = (s, blend(a, b, t));
                }
            }
            done(best.1)
        }
        Criterion::TargetReturn(r) => {
            for pair in tps.windows(2) {
                let (a, b) = (&pair[0].weights, &pair[1].weights);
                let (ra, rb) = (inputs.expected_return(a), inputs.expected_return(b));
                if r <= ra && r >= rb {
                    let t = if ra > rb { (ra - r) / (ra - rb) } else { 0.0 };
                    return done(blend(a, b, t));
                }
            }
            let hi = inputs.expected_return(&tps[0].weights);
            let lo = inputs.expected_return(&tps[tps.len() - 1].weights);
            Err(Error::Infeasible(format!(
                "target return {r} outside the efficient range [{lo}, {hi}]"
            )))
        }
    }
}

fn select_sls(inputs: &PortfolioInputs, criterion: Criterion) -> Result<PortfolioWeights> {
    let opts = SlsOptions::default();
    match criterion {
        Criterion::TargetReturn(r) => sls_long_only(inputs, r, &opts),
        Criterion::MaxSharpe => {
            let lo = inputs.mu.min();
            let hi = inputs.mu.max();
            let solve = |r: f64| sls_long_only(inputs, r.clamp(lo, hi), &opts);
            if hi - lo <= 1e-12 * hi.abs().max(lo.abs()).max(f64::MIN_POSITIVE) {
                return solve(lo);
            }
            const POINTS: usize = 21;
            let targets: Vec<f64> = (0..POINTS)
                .map(|i| lo + (hi - lo) * i as f64 / (POINTS - 1) as f64)
                .collect();
            let mut best: Option<(f64, usize, PortfolioWeights)> = None;
            for (i, &r) in targets.iter().enumerate() {
                let pw = solve(r)?;
                let s = sharpe_ratio(inputs, &pw.weights);
                if best.as_ref().is_none_or(|(bs, _, _)| s > *bs) {
                    best = Some((s, i, pw));
                }
            }
            let (best_s, i, best_w) = best.expect("non-empty sweep");
            let a = targets[i.saturating_sub(1)];
            let b = targets[(i + 1).min(POINTS - 1)];
            let (r, s) = golden_max(a, b, 1e-10 * (hi - lo), |r| {
                solve(r).map(|pw| sharpe_ratio(inputs, &pw.weights))
            })?;
            if s > best_s {
                solve(r)
            } else {
                Ok(best_w)
            }
        }
    }
}
