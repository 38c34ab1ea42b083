use nalgebra::DVector;

use super::{ConstraintSet, PortfolioInputs, PortfolioWeights, Solver};
use crate::error::{Error, Result};

/// Minimum-variance weights for a target return with only the budget and
/// return constraints: `w = Σ⁻¹(λ₁μ + λ₂𝟙)`, multipliers from the 2×2 system
/// in `μᵀΣ⁻¹μ`, `μᵀΣ⁻¹𝟙`, `𝟙ᵀΣ⁻¹𝟙`.
///
/// Returns the weights and the multipliers in the stationarity form
/// `2Σw = λ₁μ + λ₂𝟙`.
pub fn markowitz_unconstrained(
    inputs: &PortfolioInputs,
    target_return: f64,
) -> Result<(PortfolioWeights, (f64, f64))> {
    let n = inputs.n();
    let p = &inputs.precision;
    let ones = DVector::from_element(n, 1.0);
    let p_ones = p * &ones;
    let p_mu = p * &inputs.mu;
    let a = ones.dot(&p_ones);
    let b = ones.dot(&p_mu);
    let c = inputs.mu.dot(&p_mu);
    let det = a * c - b * b;
    if !(det > 1e-12 * (a * c).abs()) {
        return Err(Error::DegenerateConstraint(
            "expected returns are (numerically) proportional to the unit vector".into(),
        ));
    }
    let l1 = (a * target_return - b) / det;
    let l2 = (c - b * target_return) / det;
    let w = &p_mu * l1 + &p_ones * l2;
    if !w.iter().all(|v| v.is_finite()) {
        return Err(Error::Numerical("closed-form weights are not finite".into()));
    }
    Ok((
        inputs.weights(w, ConstraintSet::Unconstrained, Solver::ClosedForm, true),
        (2.0 * l1, 2.0 * l2),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::InputSource;
    use nalgebra::DMatrix;

    fn identity_inputs() -> PortfolioInputs {
        PortfolioInputs::from_covariance(
            DVector::from_vec(vec![0.01, 0.02]),
            DMatrix::identity(2, 2),
            InputSource::Full,
        )
        .unwrap()
    }

    #[test]
    fn identity_midpoint_and_endpoint() {
        let (w, _) = markowitz_unconstrained(&identity_inputs(), 0.015).unwrap();
        assert!((w.weights - DVector::from_vec(vec![0.5, 0.5])).amax() < 1e-12);
        let (w, (l1, l2)) = markowitz_unconstrained(&identity_inputs(), 0.02).unwrap();
        assert!((w.weights - DVector::from_vec(vec![0.0, 1.0])).amax() < 1e-12);
        // 2Σw = λ1 μ + λ2 1 with w = (0, 1)
        assert!((l1 * 0.01 + l2 - 0.0).abs() < 1e-10);
        assert!((l1 * 0.02 + l2 - 2.0).abs() < 1e-10);
    }

    #[test]
    fn flat_mean_is_degenerate() {
        let inp = PortfolioInputs::from_covariance(
            DVector::from_vec(vec![0.01, 0.01, 0.01]),
            DMatrix::identity(3, 3),
            InputSource::Full,
        )
        .unwrap();
        assert!(matches!(
            markowitz_unconstrained(&inp, 0.01),
            Err(Error::DegenerateConstraint(_))
        ));
    }
}
