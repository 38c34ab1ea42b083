//! Sequential quadratic programming for the long-only minimum-variance
//! problem `min wᵀΣw  s.t. 𝟙ᵀw = 1, μᵀw = r̄, 0 <= w <= 1`.
//!
//! Each iteration solves the quadratic direction sub-problem (Hessian of the
//! Lagrangian, gradient of the objective, linearized constraints) with the
//! active-set QP, then steps along it with a backtracking line search on an
//! ℓ1 exact-penalty merit function.

use nalgebra::{DMatrix, DVector};

use super::qp::BoxQp;
use super::{ConstraintSet, PortfolioInputs, PortfolioWeights, Solver};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlsOptions {
    pub kkt_tol: f64,
    pub max_iter: usize,
}

impl Default for SlsOptions {
    fn default() -> Self {
        Self { kkt_tol: 1e-8, max_iter: 500 }
    }
}

struct Problem<'a> {
    sigma: &'a DMatrix<f64>,
    a: DMatrix<f64>,
    b: DVector<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Problem<'_> {
    fn f(&self, w: &DVector<f64>) -> f64 {
        (w.transpose() * self.sigma * w)[(0, 0)]
    }

    fn grad(&self, w: &DVector<f64>) -> DVector<f64> {
        2.0 * (self.sigma * w)
    }

    fn violation(&self, w: &DVector<f64>) -> f64 {
        let eq: f64 = (&self.a * w - &self.b).abs().sum();
        let bounds: f64 = w
            .iter()
            .enumerate()
            .map(|(i, &x)| (self.lower[i] - x).max(0.0) + (x - self.upper[i]).max(0.0))
            .sum();
        eq + bounds
    }

    /// Max-norm KKT residual at `w` for equality multipliers `lambda`:
    /// feasibility, stationarity on free weights, and multiplier signs at
    /// active bounds.
    fn kkt_residual(&self, w: &DVector<f64>, lambda: &DVector<f64>) -> f64 {
        let tol = 1e-10;
        let z = self.grad(w) - self.a.transpose() * lambda;
        let mut r: f64 = (&self.a * w - &self.b).amax();
        for i in 0..w.len() {
            r = r.max((self.lower[i] - w[i]).max(0.0)).max((w[i] - self.upper[i]).max(0.0));
            let s = if w[i] <= self.lower[i] + tol {
                (-z[i]).max(0.0)
            } else if w[i] >= self.upper[i] - tol {
                z[i].max(0.0)
            } else {
                z[i].abs()
            };
            r = r.max(s);
        }
        r
    }
}

/// A point with `𝟙ᵀx = 1`, `μᵀx = target`, `0 <= x <= 1`, mixing the lowest
/// and highest expected-return assets.
pub(crate) fn feasible_start(mu: &DVector<f64>, target: f64) -> Result<DVector<f64>> {
    let n = mu.len();
    let (lo, hi) = (mu.argmin().0, mu.argmax().0);
    let (mlo, mhi) = (mu[lo], mu[hi]);
    let spread = (mhi - mlo).abs().max(mhi.abs()).max(mlo.abs()).max(f64::MIN_POSITIVE);
    let tol = 1e-12 * spread;
    if target < mlo - tol || target > mhi + tol {
        return Err(Error::Infeasible(format!(
            "target return {target} outside [{mlo}, {mhi}]"
        )));
    }
    let mut x = DVector::zeros(n);
    if mhi - mlo <= tol {
        x[lo] = 1.0;
        return Ok(x);
    }
    let theta = ((target - mlo) / (mhi - mlo)).clamp(0.0, 1.0);
    x[hi] = theta;
    x[lo] += 1.0 - theta;
    Ok(x)
}

/// Long-only minimum-variance weights at `target_return`.
pub fn sls_long_only(
    inputs: &PortfolioInputs,
    target_return: f64,
    options: &SlsOptions,
) -> Result<PortfolioWeights> {
    let n = inputs.n();
    let start = feasible_start(&inputs.mu, target_return)?;
    let mut a = DMatrix::from_element(2, n, 1.0);
    a.set_row(1, &inputs.mu.transpose());
    let problem = Problem {
        sigma: &inputs.covariance,
        a,
        b: DVector::from_vec(vec![1.0, target_return]),
        lower: vec![0.0; n],
        upper: vec![1.0; n],
    };
    let hessian = 2.0 * &inputs.covariance;
    let mut w = DVector::from_element(n, 1.0 / n as f64);
    let mut best = (f64::INFINITY, w.clone());

    for _ in 0..options.max_iter {
        // Direction sub-problem, posed in x = w + d so the bounds stay simple.
        let grad = problem.grad(&w);
        let g = &grad - &hessian * &w;
        let qp = BoxQp {
            h: &hessian,
            g: &g,
            a: &problem.a,
            b: &problem.b,
            lower: &problem.lower,
            upper: &problem.upper,
        };
        let sol = qp.solve(start.clone())?;
        let d = &sol.x - &w;
        let rho = 10.0 * sol.lambda.amax().max(sol.z.amax()).max(1.0);
        let merit = |x: &DVector<f64>| problem.f(x) + rho * problem.violation(x);
        let m0 = merit(&w);
        let slope = grad.dot(&d) - rho * problem.violation(&w);
        let mut alpha = 1.0;
        loop {
            let trial = &w + alpha * &d;
            if merit(&trial) <= m0 + 1e-4 * alpha * slope.min(0.0) || alpha < 1e-12 {
                w = trial;
                break;
            }
            alpha *= 0.5;
        }
        // Snap round-off at the bounds.
        for v in w.iter_mut() {
            if v.abs() < 1e-15 {
                *v = 0.0;
            }
        }
        let residual = problem.kkt_residual(&w, &sol.lambda);
        if residual < best.0 {
            best = (residual, w.clone());
        }
        if residual < options.kkt_tol {
            return Ok(inputs.weights(w, ConstraintSet::LongOnly, Solver::Sls, true));
        }
    }
    let w = best.1;
    Ok(inputs.weights(w, ConstraintSet::LongOnly, Solver::Sls, false))
}
