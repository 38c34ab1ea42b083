//! Primal active-set solver for convex quadratic programs with linear equality
//! constraints and simple bounds:
//!
//! ```text
//! min ½ xᵀHx + gᵀx   s.t.  A x = b,  l <= x <= u
//! ```
//!
//! `H` must be positive definite. The caller supplies a feasible start.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub(crate) struct BoxQp<'a> {
    pub h: &'a DMatrix<f64>,
    pub g: &'a DVector<f64>,
    pub a: &'a DMatrix<f64>,
    pub b: &'a DVector<f64>,
    pub lower: &'a [f64],
    pub upper: &'a [f64],
}

#[derive(Debug, Clone)]
pub(crate) struct QpSolution {
    pub x: DVector<f64>,
    /// Equality multipliers, `∇q = Aᵀλ + z` at the solution.
    pub lambda: DVector<f64>,
    /// Bound multipliers: `>= 0` at a lower bound, `<= 0` at an upper bound.
    pub z: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Bound {
    Free,
    Lower,
    Upper,
}

/// Indices of a maximal linearly independent subset of the rows of `a`
/// restricted to `cols` (modified Gram-Schmidt).
fn independent_rows(a: &DMatrix<f64>, cols: &[usize]) -> Vec<usize> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut keep = Vec::new();
    for r in 0..a.nrows() {
        let mut v = DVector::from_iterator(cols.len(), cols.iter().map(|&c| a[(r, c)]));
        let norm0 = v.norm();
        if norm0 == 0.0 {
            continue;
        }
        for q in &basis {
            let proj = q.dot(&v);
            v.axpy(-proj, q, 1.0);
        }
        let norm = v.norm();
        if norm > 1e-10 * norm0 {
            basis.push(v / norm);
            keep.push(r);
        }
    }
    keep
}

/// Least-squares `λ` for `Aᵀλ ≈ grad` over the given columns.
fn multipliers(a: &DMatrix<f64>, grad: &DVector<f64>, cols: &[usize]) -> DVector<f64> {
    let m = a.nrows();
    let mut lambda = DVector::zeros(m);
    let rows = independent_rows(a, cols);
    if rows.is_empty() {
        return lambda;
    }
    let k = rows.len();
    let normal = DMatrix::from_fn(k, k, |i, j| cols.iter().map(|&c| a[(rows[i], c)] * a[(rows[j], c)]).sum());
    let rhs = DVector::from_fn(k, |i, _| cols.iter().map(|&c| a[(rows[i], c)] * grad[c]).sum());
    if let Some(sol) = normal.lu().solve(&rhs) {
        for (i, &r) in rows.iter().enumerate() {
            lambda[r] = sol[i];
        }
    }
    lambda
}

impl BoxQp<'_> {
    fn n(&self) -> usize {
        self.g.len()
    }

    fn scale(&self) -> f64 {
        self.h.amax().max(self.g.amax()).max(f64::MIN_POSITIVE)
    }

    /// Equality-constrained step on the free variables and the matching
    /// multipliers: `[H_FF  -A_Fᵀ; A_F 0] [p; λ] = [-grad_F; 0]`.
    fn step(&self, grad: &DVector<f64>, free: &[usize]) -> Result<(DVector<f64>, DVector<f64>)> {
        let nf = free.len();
        let rows = independent_rows(self.a, free);
        let k = rows.len();
        let dim = nf + k;
        let mut kkt = DMatrix::zeros(dim, dim);
        let mut rhs = DVector::zeros(dim);
        for (i, &fi) in free.iter().enumerate() {
            for (j, &fj) in free.iter().enumerate() {
                kkt[(i, j)] = self.h[(fi, fj)];
            }
            for (r, &row) in rows.iter().enumerate() {
                kkt[(i, nf + r)] = -self.a[(row, fi)];
                kkt[(nf + r, i)] = self.a[(row, fi)];
            }
            rhs[i] = -grad[fi];
        }
        let sol = kkt
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Numerical("singular KKT system in active-set QP".into()))?;
        let mut p = DVector::zeros(self.n());
        for (i, &fi) in free.iter().enumerate() {
            p[fi] = sol[i];
        }
        let mut lambda = DVector::zeros(self.a.nrows());
        for (r, &row) in rows.iter().enumerate() {
            lambda[row] = sol[nf + r];
        }
        Ok((p, lambda))
    }

    pub fn solve(&self, x0: DVector<f64>) -> Result<QpSolution> {
        let n = self.n();
        let residual = (self.a * &x0 - self.b).amax();
        if residual > 1e-9 {
            return Err(Error::Numerical(format!("QP start violates equalities by {residual:e}")));
        }
        let mut x = x0;
        let bound_tol = 1e-12;
        let mut status: Vec<Bound> = (0..n)
            .map(|i| {
                if x[i] <= self.lower[i] + bound_tol {
                    x[i] = self.lower[i];
                    Bound::Lower
                } else if x[i] >= self.upper[i] - bound_tol {
                    x[i] = self.upper[i];
                    Bound::Upper
                } else {
                    Bound::Free
                }
            })
            .collect();
        let fixed: Vec<bool> = (0..n).map(|i| self.lower[i] >= self.upper[i]).collect();
        let mult_tol = 1e-11 * self.scale();
        let max_iter = 100 * (n + 1);

        for _ in 0..max_iter {
            let free: Vec<usize> = (0..n).filter(|&i| status[i] == Bound::Free).collect();
            let grad = self.h * &x + self.g;
            let (p, lambda) = if free.is_empty() {
                (DVector::zeros(n), DVector::zeros(self.a.nrows()))
            } else {
                self.step(&grad, &free)?
            };
            if p.amax() <= 1e-13 {
                let lambda = if free.is_empty() {
                    multipliers(self.a, &grad, &(0..n).collect::<Vec<_>>())
                } else {
                    lambda
                };
                let z = &grad - self.a.transpose() * &lambda;
                let mut worst: Option<(f64, usize)> = None;
                for i in 0..n {
                    if fixed[i] {
                        continue;
                    }
                    let viol = match status[i] {
                        Bound::Lower => -z[i],
                        Bound::Upper => z[i],
                        Bound::Free => continue,
                    };
                    if viol > mult_tol && worst.is_none_or(|(v, _)| viol > v) {
                        worst = Some((viol, i));
                    }
                }
                match worst {
                    None => {
                        let mut z = z;
                        for &i in &free {
                            z[i] = 0.0;
                        }
                        return Ok(QpSolution { x, lambda, z });
                    }
                    Some((_, i)) => status[i] = Bound::Free,
                }
                continue;
            }
            let mut alpha = 1.0;
            let mut blocking = None;
            for &i in &free {
                let limit = if p[i] < 0.0 {
                    (self.lower[i] - x[i]) / p[i]
                } else if p[i] > 0.0 {
                    (self.upper[i] - x[i]) / p[i]
                } else {
                    continue;
                };
                if limit < alpha {
                    alpha = limit.max(0.0);
                    blocking = Some((i, if p[i] < 0.0 { Bound::Lower } else { Bound::Upper }));
                }
            }
            x.axpy(alpha, &p, 1.0);
            if let Some((i, b)) = blocking {
                x[i] = if b == Bound::Lower { self.lower[i] } else { self.upper[i] };
                status[i] = b;
            }
        }
        Err(Error::Numerical(format!(
            "active-set QP did not terminate in {max_iter} iterations"
        )))
    }
}
