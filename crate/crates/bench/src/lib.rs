//! Shared fixtures for the criterion benches in `benches/`.

use iccpo_core::linalg::mean_and_covariance;
use iccpo_core::optim::InputSource;
use iccpo_core::synth::{generate, MeanPattern, SynthParams};
use iccpo_core::{PortfolioInputs, ReturnsPanel};

/// Two-regime Student-t panel with `assets` columns and `days` rows.
pub fn panel(assets: usize, days: usize, seed: u64) -> ReturnsPanel {
    let params = SynthParams {
        assets,
        days,
        separation: 1.0,
        pattern: MeanPattern::Rotation,
        seed,
        ..SynthParams::default()
    };
    generate(&params.to_spec().expect("valid params")).expect("generated").0
}

/// Sample mean and covariance of a synthetic panel as optimizer inputs.
pub fn inputs(assets: usize, seed: u64) -> PortfolioInputs {
    let p = panel(assets, 504, seed);
    let rows: Vec<usize> = (0..p.len()).collect();
    let (mu, cov) = mean_and_covariance(&p.returns, &rows);
    PortfolioInputs::from_covariance(mu, cov, InputSource::Full).expect("positive definite sample covariance")
}
