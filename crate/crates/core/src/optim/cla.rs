//! Critical line algorithm for the box-constrained frontier
//! `min ½wᵀΣw − λμᵀw  s.t. 𝟙ᵀw = 1, l <= w <= u`.
//!
//! Starting from the maximum-return corner, each step lowers λ to the next
//! value where either a free weight reaches a bound or a bounded weight
//! becomes free, until λ reaches zero (the minimum-variance portfolio).

use nalgebra::{DMatrix, DVector};

use super::qp::BoxQp;
use super::{PortfolioInputs, TurningPoint};
use crate::error::{Error, Result};

const BOUND_TOL: f64 = 1e-9;

struct Cla<'a> {
    mu: &'a DVector<f64>,
    cov: &'a DMatrix<f64>,
    lower: &'a [f64],
    upper: &'a [f64],
}

/// Free-set quantities: `Σ_FF⁻¹`, `Σ_FB`, `μ_F`, `w_B`.
struct Parts {
    inv: DMatrix<f64>,
    cov_fb: DMatrix<f64>,
    mean_f: DVector<f64>,
    w_b: Option<DVector<f64>>,
}

/// Weights, λ and free set of one raw corner.
type Corner = (DVector<f64>, f64, Vec<usize>);

impl Cla<'_> {
    fn n(&self) -> usize {
        self.mu.len()
    }

    fn parts(&self, free: &[usize], w: &DVector<f64>) -> Result<Parts> {
        let bounded: Vec<usize> = (0..self.n()).filter(|i| !free.contains(i)).collect();
        let cov_f = DMatrix::from_fn(free.len(), free.len(), |i, j| self.cov[(free[i], free[j])]);
        let inv = cov_f
            .try_inverse()
            .ok_or_else(|| Error::Numerical(format!("singular free-asset covariance for set {free:?}")))?;
        let cov_fb = DMatrix::from_fn(free.len(), bounded.len(), |i, j| self.cov[(free[i], bounded[j])]);
        let mean_f = DVector::from_iterator(free.len(), free.iter().map(|&i| self.mu[i]));
        let w_b = (!bounded.is_empty())
            .then(|| DVector::from_iterator(bounded.len(), bounded.iter().map(|&i| w[i])));
        Ok(Parts { inv, cov_fb, mean_f, w_b })
    }

    /// λ at which free asset `j` (position within the free set) reaches
    /// `bound`, or `None` when its weight does not move with λ.
    fn lambda(&self, p: &Parts, j: usize, bound: Bound) -> Option<(f64, f64)> {
        let ones = DVector::from_element(p.mean_f.len(), 1.0);
        let c4 = &p.inv * &ones;
        let c2 = &p.inv * &p.mean_f;
        let c1 = ones.dot(&c4);
        let c3 = ones.dot(&c2);
        let c = -c1 * c2[j] + c3 * c4[j];
        let scale = (c1 * c2[j]).abs() + (c3 * c4[j]).abs();
        if c.abs() <= 1e-13 * scale || c == 0.0 {
            return None;
        }
        let bi = match bound {
            Bound::Either(lo, hi) => {
                if c > 0.0 {
                    hi
                } else {
                    lo
                }
            }
            Bound::At(v) => v,
        };
        let l = match &p.w_b {
            None => (c4[j] - c1 * bi) / c,
            Some(w_b) => {
                let l1 = w_b.sum();
                let l3 = &p.inv * &p.cov_fb * w_b;
                let l2 = l3.sum();
                ((1.0 - l1 + l2) * c4[j] - c1 * (bi + l3[j])) / c
            }
        };
        Some((l, bi))
    }

    fn free_weights(&self, p: &Parts, lambda: f64) -> DVector<f64> {
        let mean_f = &p.mean_f;
        let ones = DVector::from_element(mean_f.len(), 1.0);
        let w2 = &p.inv * &ones;
        let w3 = &p.inv * mean_f;
        let g1 = ones.dot(&w3);
        let g2 = ones.dot(&w2);
        let (g, w1) = match &p.w_b {
            None => (-lambda * g1 / g2 + 1.0 / g2, DVector::zeros(mean_f.len())),
            Some(w_b) => {
                let g3 = w_b.sum();
                let w1 = &p.inv * &p.cov_fb * w_b;
                let g4 = w1.sum();
                (-lambda * g1 / g2 + (1.0 - g3 + g4) / g2, w1)
            }
        };
        -w1 + w2 * g + w3 * lambda
    }

    fn run(&self, rank_mu: &DVector<f64>) -> Result<Vec<Corner>> {
        let n = self.n();
        // Initial corner: fill by descending expected return.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| rank_mu[b].total_cmp(&rank_mu[a]));
        let mut w = DVector::from_iterator(n, self.lower.iter().copied());
        let mut free = Vec::new();
        for &i in &order {
            let rest = w.sum() - w[i];
            w[i] = self.upper[i];
            if rest + self.upper[i] >= 1.0 {
                w[i] = 1.0 - rest;
                free.push(i);
                break;
            }
        }
        if free.is_empty() {
            return Err(Error::Infeasible("upper bounds sum to less than one".into()));
        }
        let mut points = vec![(w.clone(), f64::INFINITY, free.clone())];
        let max_steps = 4 * n + 4;
        for _ in 0..max_steps {
            let last_lambda = points.last().expect("seeded").1;
            // A free weight hits a bound.
            let mut l_in: Option<(f64, usize, f64)> = None;
            if free.len() > 1 {
                let p = self.parts(&free, &w)?;
                for (j, &i) in free.iter().enumerate() {
                    if let Some((l, bi)) = self.lambda(&p, j, Bound::Either(self.lower[i], self.upper[i])) {
                        if l_in.is_none_or(|(best, _, _)| l > best) {
                            l_in = Some((l, i, bi));
                        }
                    }
                }
            }
            // A bounded weight becomes free.
            let mut l_out: Option<(f64, usize)> = None;
            if free.len() < n {
                for i in (0..n).filter(|i| !free.contains(i)) {
                    let mut trial = free.clone();
                    trial.push(i);
                    let p = self.parts(&trial, &w)?;
                    if let Some((l, _)) = self.lambda(&p, trial.len() - 1, Bound::At(w[i])) {
                        if l < last_lambda && l_out.is_none_or(|(best, _)| l > best) {
                            l_out = Some((l, i));
                        }
                    }
                }
            }
            let lin = l_in.map(|v| v.0).filter(|&l| l >= 0.0);
            let lout = l_out.map(|v| v.0).filter(|&l| l >= 0.0);
            let lambda = match (lin, lout) {
                (None, None) => 0.0,
                _ if lin.unwrap_or(f64::NEG_INFINITY) > lout.unwrap_or(f64::NEG_INFINITY) => {
                    let (l, i, bi) = l_in.expect("checked");
                    free.retain(|&f| f != i);
                    w[i] = bi;
                    l
                }
                _ => {
                    let (l, i) = l_out.expect("checked");
                    free.push(i);
                    l
                }
            };
            // At λ = 0 the mean drops out of the free-weight solution.
            let p = self.parts(&free, &w)?;
            let wf = self.free_weights(&p, lambda);
            for (j, &i) in free.iter().enumerate() {
                w[i] = wf[j];
            }
            points.push((w.clone(), lambda, free.clone()));
            if lambda == 0.0 {
                return Ok(points);
            }
        }
        Err(Error::Numerical(format!(
            "critical line algorithm did not reach the minimum-variance end in {max_steps} steps"
        )))
    }

    fn valid(&self, w: &DVector<f64>) -> bool {
        (w.sum() - 1.0).abs() <= 1e-8
            && w
                .iter()
                .enumerate()
                .all(|(i, &x)| x >= self.lower[i] - BOUND_TOL && x <= self.upper[i] + BOUND_TOL)
    }
}

#[derive(Clone, Copy)]
enum Bound {
    Either(f64, f64),
    At(f64),
}

fn classify(w: DVector<f64>, lambda: f64, free: &[usize], lower: &[f64], upper: &[f64]) -> TurningPoint {
    let mut w = w;
    let mut fr = Vec::new();
    let mut up = Vec::new();
    let mut lo = Vec::new();
    for i in 0..w.len() {
        if free.contains(&i) {
            w[i] = w[i].clamp(lower[i], upper[i]);
            fr.push(i);
        } else if (w[i] - upper[i]).abs() <= (w[i] - lower[i]).abs() {
            w[i] = upper[i];
            up.push(i);
        } else {
            w[i] = lower[i];
            lo.push(i);
        }
    }
    TurningPoint { weights: w, lambda, free: fr, upper_bounded: up, lower_bounded: lo }
}

/// Turning points from the maximum-return corner down to the minimum-variance
/// portfolio. Expected return strictly decreases along the list.
pub fn cla_frontier(inputs: &PortfolioInputs, lower: &[f64], upper: &[f64]) -> Result<Vec<TurningPoint>> {
    let n = inputs.n();
    if lower.len() != n || upper.len() != n {
        return Err(Error::Validation(format!("bounds must have {n} entries")));
    }
    if lower.iter().zip(upper).any(|(l, u)| !(l <= u)) {
        return Err(Error::Validation("lower bound exceeds upper bound".into()));
    }
    let (sl, su): (f64, f64) = (lower.iter().sum(), upper.iter().sum());
    if sl > 1.0 + 1e-12 || su < 1.0 - 1e-12 {
        return Err(Error::Infeasible(format!(
            "bounds admit no fully invested portfolio (sum lower {sl}, sum upper {su})"
        )));
    }
    let mu = &inputs.mu;
    let spread = mu.max() - mu.min();
    let mu_scale = mu.amax().max(f64::MIN_POSITIVE);
    if spread <= 1e-12 * mu_scale {
        return Ok(vec![min_variance_point(inputs, lower, upper)?]);
    }
    let perturb = |scale: f64| DVector::from_fn(n, |i, _| mu[i] + i as f64 * scale);
    let mut last_err = None;
    for attempt in 0..2 {
        let (calc_mu, rank_mu) = if attempt == 0 {
            (mu.clone(), perturb(1e-12))
        } else {
            let p = perturb(1e-9 * spread);
            (p.clone(), p)
        };
        let cla = Cla { mu: &calc_mu, cov: &inputs.covariance, lower, upper };
        let raw = match cla.run(&rank_mu) {
            Ok(r) => r,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let kept: Vec<_> = raw.into_iter().filter(|(w, _, _)| cla.valid(w)).collect();
        let points = purge_non_decreasing(kept, mu);
        if points.len() >= 2 || points.len() == 1 && n == 1 {
            return Ok(points
                .into_iter()
                .map(|(w, l, f)| classify(w, l, &f, lower, upper))
                .collect());
        }
        last_err = Some(Error::Numerical("critical line algorithm produced no valid frontier".into()));
    }
    Err(last_err.expect("at least one attempt"))
}

/// Keep a point only if every later point has strictly lower expected return
/// (beyond round-off); of equal-return points the later one survives.
fn purge_non_decreasing(
    pts: Vec<(DVector<f64>, f64, Vec<usize>)>,
    mu: &DVector<f64>,
) -> Vec<(DVector<f64>, f64, Vec<usize>)> {
    let rets: Vec<f64> = pts.iter().map(|(w, _, _)| mu.dot(w)).collect();
    let tol = 1e-12 * mu.amax().max(f64::MIN_POSITIVE);
    let mut out = Vec::new();
    let mut max_later = f64::NEG_INFINITY;
    let mut keep = vec![false; pts.len()];
    for i in (0..pts.len()).rev() {
        keep[i] = rets[i] > max_later + tol;
        max_later = max_later.max(rets[i]);
    }
    for (p, k) in pts.into_iter().zip(keep) {
        if k {
            out.push(p);
        }
    }
    out
}

fn min_variance_point(inputs: &PortfolioInputs, lower: &[f64], upper: &[f64]) -> Result<TurningPoint> {
    let n = inputs.n();
    let h = 2.0 * &inputs.covariance;
    let g = DVector::zeros(n);
    let a = DMatrix::from_element(1, n, 1.0);
    let b = DVector::from_element(1, 1.0);
    // Feasible start: lower bounds, then fill up to the budget.
    let mut x0 = DVector::from_iterator(n, lower.iter().copied());
    let mut short = 1.0 - x0.sum();
    for i in 0..n {
        let add = (upper[i] - lower[i]).min(short);
        x0[i] += add;
        short -= add;
    }
    let sol = BoxQp { h: &h, g: &g, a: &a, b: &b, lower, upper }.solve(x0)?;
    let free: Vec<usize> = (0..n)
        .filter(|&i| sol.x[i] > lower[i] + BOUND_TOL && sol.x[i] < upper[i] - BOUND_TOL)
        .collect();
    Ok(classify(sol.x, 0.0, &free, lower, upper))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::InputSource;

    fn inputs(mu: &[f64], cov: DMatrix<f64>) -> PortfolioInputs {
        PortfolioInputs::from_covariance(DVector::from_row_slice(mu), cov, InputSource::Full).unwrap()
    }

    #[test]
    fn two_asset_identity() {
        let tp = cla_frontier(&inputs(&[0.02, 0.01], DMatrix::identity(2, 2)), &[0.0; 2], &[1.0; 2]).unwrap();
        assert_eq!(tp[0].weights.as_slice(), &[1.0, 0.0]);
        let last = tp.last().unwrap();
        assert!((&last.weights - DVector::from_vec(vec![0.5, 0.5])).amax() < 1e-12);
        assert_eq!(last.lambda, 0.0);
    }

    #[test]
    fn invariants_on_a_correlated_instance() {
        let cov = DMatrix::from_row_slice(
            4,
            4,
            &[
                0.040, 0.010, 0.004, 0.002, //
                0.010, 0.090, 0.012, 0.006, //
                0.004, 0.012, 0.0625, 0.003, //
                0.002, 0.006, 0.003, 0.010,
            ],
        );
        let inp = inputs(&[0.06, 0.11, 0.08, 0.02], cov);
        let tp = cla_frontier(&inp, &[0.0; 4], &[1.0; 4]).unwrap();
        assert!(tp.len() >= 2);
        for p in &tp {
            assert!((p.weights.sum() - 1.0).abs() < 1e-10);
            assert!(p.weights.iter().all(|&w| (-1e-12..=1.0 + 1e-12).contains(&w)));
            for &i in &p.upper_bounded {
                assert_eq!(p.weights[i], 1.0);
            }
            for &i in &p.lower_bounded {
                assert_eq!(p.weights[i], 0.0);
            }
            assert_eq!(p.free.len() + p.upper_bounded.len() + p.lower_bounded.len(), 4);
        }
        for pair in tp.windows(2) {
            assert!(inp.expected_return(&pair[0].weights) > inp.expected_return(&pair[1].weights));
            assert!(inp.variance(&pair[0].weights) >= inp.variance(&pair[1].weights) - 1e-15);
        }
    }

    #[test]
    fn flat_mean_gives_minimum_variance() {
        let cov = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0]));
        let tp = cla_frontier(&inputs(&[0.01, 0.01], cov), &[0.0; 2], &[1.0; 2]).unwrap();
        assert_eq!(tp.len(), 1);
        assert!((&tp[0].weights - DVector::from_vec(vec![0.8, 0.2])).amax() < 1e-12);
    }

    #[test]
    fn bad_bounds() {
        let inp = inputs(&[0.01, 0.02], DMatrix::identity(2, 2));
        assert!(matches!(cla_frontier(&inp, &[0.0; 2], &[0.4; 2]), Err(Error::Infeasible(_))));
        assert!(matches!(cla_frontier(&inp, &[0.0; 3], &[1.0; 3]), Err(Error::Validation(_))));
    }
}
