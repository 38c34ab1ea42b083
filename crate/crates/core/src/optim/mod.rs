//! Mean-variance portfolio construction.
//!
//! * [`markowitz_unconstrained`]: closed form with budget and return constraints.
//! * [`sls_long_only`]: sequential quadratic programming with `0 <= w <= 1`.
//! * [`cla_frontier`]: critical line algorithm turning points.
//! * [`select_portfolio`]: max-Sharpe or target-return selection on either
//!   constrained solver.
//! * [`naive_weights`]: the `1/n` benchmark.

mod cla;
mod markowitz;
pub(crate) mod qp;
mod select;
mod sls;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{is_symmetric, spd_inverse};
use crate::network::SparsePrecision;

pub use cla::cla_frontier;
pub use markowitz::markowitz_unconstrained;
pub use select::{select_portfolio, sharpe_ratio, Criterion};
pub use sls::{sls_long_only, SlsOptions};

/// Which estimate fed the optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum InputSource {
    /// Whole train window, sample covariance.
    Full,
    /// Whole train window, LoGo sparse precision.
    Sparse,
    /// Forecast state, LoGo sparse precision.
    Sparse0,
    /// The other state, LoGo sparse precision.
    Sparse1,
}

impl InputSource {
    pub const ALL: [InputSource; 4] = [Self::Full, Self::Sparse, Self::Sparse0, Self::Sparse1];

    pub fn name(self) -> &'static str {
        match self {
            Self::Full => "Full",
            Self::Sparse => "Sparse",
            Self::Sparse0 => "Sparse 0",
            Self::Sparse1 => "Sparse 1",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    ClosedForm,
    Sls,
    Cla,
    Naive,
}

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Self::ClosedForm => "Closed form",
            Self::Sls => "SLS",
            Self::Cla => "CLA",
            Self::Naive => "Naive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintSet {
    Unconstrained,
    LongOnly,
}

/// Mean vector and covariance handed to a solver. `precision` is what replaces
/// `Σ⁻¹` in closed forms; `covariance` is what the quadratic objective uses.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioInputs {
    pub mu: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub precision: DMatrix<f64>,
    pub source: InputSource,
    /// Whether a ridge was needed to invert the supplied matrix.
    pub ridged: bool,
}

impl PortfolioInputs {
    pub fn from_covariance(mu: DVector<f64>, covariance: DMatrix<f64>, source: InputSource) -> Result<Self> {
        check_shapes(&mu, &covariance)?;
        let (precision, ridged) = spd_inverse(&covariance, "portfolio covariance")?;
        Ok(Self { mu, covariance, precision, source, ridged })
    }

    /// Use a sparse precision directly where `Σ⁻¹` appears and its dense
    /// inverse where `Σ` itself is needed.
    pub fn from_precision(mu: DVector<f64>, precision: &SparsePrecision, source: InputSource) -> Result<Self> {
        let precision = precision.to_dense();
        check_shapes(&mu, &precision)?;
        let (covariance, ridged) = spd_inverse(&precision, "sparse precision")?;
        Ok(Self { mu, covariance, precision, source, ridged })
    }

    pub fn n(&self) -> usize {
        self.mu.len()
    }

    pub fn variance(&self, w: &DVector<f64>) -> f64 {
        (w.transpose() * &self.covariance * w)[(0, 0)]
    }

    pub fn expected_return(&self, w: &DVector<f64>) -> f64 {
        self.mu.dot(w)
    }

    pub(crate) fn weights(
        &self,
        w: DVector<f64>,
        constraint_set: ConstraintSet,
        solver: Solver,
        converged: bool,
    ) -> PortfolioWeights {
        PortfolioWeights {
            achieved_return: self.expected_return(&w),
            achieved_variance: self.variance(&w),
            weights: w,
            constraint_set,
            solver,
            converged,
        }
    }
}

fn check_shapes(mu: &DVector<f64>, m: &DMatrix<f64>) -> Result<()> {
    if mu.is_empty() || m.nrows() != mu.len() || m.ncols() != mu.len() {
        return Err(Error::Validation(format!(
            "mean has {} entries, matrix is {}x{}",
            mu.len(),
            m.nrows(),
            m.ncols()
        )));
    }
    if !mu.iter().all(|v| v.is_finite()) {
        return Err(Error::Validation("mean vector has non-finite entries".into()));
    }
    if !is_symmetric(m, 1e-9) {
        return Err(Error::Validation("matrix is not symmetric".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioWeights {
    pub weights: DVector<f64>,
    pub constraint_set: ConstraintSet,
    pub solver: Solver,
    pub achieved_return: f64,
    pub achieved_variance: f64,
    /// False when an iterative solver hit its iteration cap.
    pub converged: bool,
}

/// A corner portfolio of the long-only frontier.
#[derive(Debug, Clone, PartialEq)]
pub struct TurningPoint {
    pub weights: DVector<f64>,
    /// Multiplier on the expected-return term; 0 at the minimum-variance end.
    pub lambda: f64,
    pub free: Vec<usize>,
    pub upper_bounded: Vec<usize>,
    pub lower_bounded: Vec<usize>,
}

/// Equal weights `1/n`.
pub fn naive_weights(n: usize) -> Result<PortfolioWeights> {
    if n == 0 {
        return Err(Error::Validation("naive portfolio needs at least one asset".into()));
    }
    let w = DVector::from_element(n, 1.0 / n as f64);
    Ok(PortfolioWeights {
        weights: w,
        constraint_set: ConstraintSet::LongOnly,
        solver: Solver::Naive,
        achieved_return: f64::NAN,
        achieved_variance: f64::NAN,
        converged: true,
    })
}

/// `asset,weight` rows.
pub fn write_weights_csv(
    assets: &[String],
    weights: &PortfolioWeights,
    path: impl AsRef<std::path::Path>,
) -> Result<()> {
    if assets.len() != weights.weights.len() {
        return Err(Error::Validation("asset names and weights differ in length".into()));
    }
    let mut out = String::from("asset,weight\n");
    for (a, w) in assets.iter().zip(weights.weights.iter()) {
        out.push_str(&format!("{a},{w:?}\n"));
    }
    crate::data::write_file(path.as_ref(), out.as_bytes())
}
