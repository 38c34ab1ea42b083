//! Regime-switching multivariate return generator with known state labels.
//!
//! States follow a first-order Markov chain that stays put with probability
//! `1 - 1/persistence` and otherwise jumps to a uniformly chosen other state,
//! so segment lengths are geometric with mean `persistence`. Student-t draws
//! use the normal / chi-square mixture, so the regime matrix is the scale
//! matrix and the covariance is `nu / (nu - 2)` times it.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{business_days, synthetic_epoch, ReturnsPanel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReturnDistribution {
    Normal,
    StudentT { nu: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    /// Daily mean return per asset.
    pub mean: Vec<f64>,
    /// Row-major n×n covariance (scale matrix for Student-t draws).
    pub covariance: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeSpec {
    pub regimes: Vec<Regime>,
    pub distribution: ReturnDistribution,
    /// Expected segment length in days.
    pub persistence: f64,
    pub days: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanPattern {
    /// Every asset shares the regime's mean; regimes are spread evenly over
    /// `[-separation/2, +separation/2]` volatility units.
    Level,
    /// Asset `i` belongs to group `i mod K`; in regime `k` group `k` earns
    /// `+separation/2` volatility units and every other group `-separation/2`.
    Rotation,
}

/// Compact description of a regime-switching market with one-factor
/// (equicorrelated) covariances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthParams {
    pub assets: usize,
    pub days: usize,
    pub regimes: usize,
    pub persistence: f64,
    pub seed: u64,
    /// Daily volatility per regime (a single value is shared by all regimes).
    pub vol: Vec<f64>,
    /// Pairwise correlation per regime (a single value is shared).
    pub correlation: Vec<f64>,
    /// Mean separation between regimes in units of the average volatility.
    pub separation: f64,
    pub pattern: MeanPattern,
    /// Daily drift added to every regime mean.
    pub drift: f64,
    pub distribution: ReturnDistribution,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            assets: 20,
            days: 2520,
            regimes: 2,
            persistence: 30.0,
            seed: 0,
            vol: vec![0.01],
            correlation: vec![0.3],
            separation: 1.0,
            pattern: MeanPattern::Rotation,
            drift: 0.0,
            distribution: ReturnDistribution::Normal,
        }
    }
}

fn per_regime(values: &[f64], k: usize, what: &str) -> Result<Vec<f64>> {
    match values.len() {
        1 => Ok(vec![values[0]; k]),
        l if l == k => Ok(values.to_vec()),
        l => Err(Error::Validation(format!(
            "{what}: expected 1 or {k} values, got {l}"
        ))),
    }
}

impl SynthParams {
    pub fn to_spec(&self) -> Result<RegimeSpec> {
        let k = self.regimes;
        let n = self.assets;
        if k == 0 || n == 0 {
            return Err(Error::Validation("need at least one regime and one asset".into()));
        }
        let vols = per_regime(&self.vol, k, "vol")?;
        let corrs = per_regime(&self.correlation, k, "correlation")?;
        if let Some(v) = vols.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::Validation(format!("volatility must be positive, got {v}")));
        }
        let unit = vols.iter().sum::<f64>() / k as f64;
        let half = 0.5 * self.separation * unit;
        let regimes = (0..k)
            .map(|r| {
                let mean = (0..n)
                    .map(|i| {
                        self.drift
                            + match self.pattern {
                                MeanPattern::Level if k == 1 => 0.0,
                                MeanPattern::Level => half - 2.0 * half * r as f64 / (k - 1) as f64,
                                MeanPattern::Rotation if k == 1 => 0.0,
                                MeanPattern::Rotation => {
                                    if i % k == r {
                                        half
                                    } else {
                                        -half
                                    }
                                }
                            }
                    })
                    .collect();
                let s2 = vols[r] * vols[r];
                let covariance = (0..n)
                    .map(|a| {
                        (0..n)
                            .map(|b| if a == b { s2 } else { corrs[r] * s2 })
                            .collect()
                    })
                    .collect();
                Regime { mean, covariance }
            })
            .collect();
        Ok(RegimeSpec {
            regimes,
            distribution: self.distribution,
            persistence: self.persistence,
            days: self.days,
            seed: self.seed,
        })
    }
}

impl RegimeSpec {
    pub fn n_assets(&self) -> usize {
        self.regimes.first().map_or(0, |r| r.mean.len())
    }

    /// Checks the spec and returns each regime's Cholesky factor.
    fn validate(&self) -> Result<Vec<DMatrix<f64>>> {
        if self.regimes.is_empty() {
            return Err(Error::Validation("at least one regime required".into()));
        }
        if !(self.persistence >= 1.0) {
            return Err(Error::Validation(format!(
                "persistence must be >= 1, got {}",
                self.persistence
            )));
        }
        if let ReturnDistribution::StudentT { nu } = self.distribution {
            if !(nu > 0.0 && nu.is_finite()) {
                return Err(Error::Parameter(format!("student-t nu must be positive, got {nu}")));
            }
        }
        let n = self.n_assets();
        if n == 0 {
            return Err(Error::Validation("regimes need at least one asset".into()));
        }
        self.regimes
            .iter()
            .enumerate()
            .map(|(k, r)| {
                if r.mean.len() != n || r.covariance.len() != n || r.covariance.iter().any(|row| row.len() != n) {
                    return Err(Error::Validation(format!("regime {k}: dimension mismatch")));
                }
                let cov = DMatrix::from_fn(n, n, |a, b| r.covariance[a][b]);
                if !crate::linalg::is_symmetric(&cov, 1e-12) {
                    return Err(Error::Validation(format!("regime {k}: covariance is not symmetric")));
                }
                Cholesky::new(cov).map(|c| c.l()).ok_or_else(|| {
                    Error::Validation(format!("regime {k}: covariance is not positive definite"))
                })
            })
            .collect()
    }
}

/// Draw a panel and its per-day regime labels.
pub fn generate(spec: &RegimeSpec) -> Result<(ReturnsPanel, Vec<usize>)> {
    let factors = spec.validate()?;
    let k = spec.regimes.len();
    let n = spec.n_assets();
    let t = spec.days;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let switch_prob = 1.0 / spec.persistence;
    let chi = match spec.distribution {
        ReturnDistribution::StudentT { nu } => Some((nu, ChiSquared::new(nu).map_err(|e| Error::Parameter(e.to_string()))?)),
        ReturnDistribution::Normal => None,
    };

    let mut labels = Vec::with_capacity(t);
    let mut state = rng.random_range(0..k);
    let mut returns = DMatrix::zeros(t, n);
    let mut z = DVector::zeros(n);
    for day in 0..t {
        if day > 0 && k > 1 && rng.random::<f64>() < switch_prob {
            let jump = rng.random_range(1..k);
            state = (state + jump) % k;
        }
        labels.push(state);
        for v in z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let scale = match &chi {
            Some((nu, dist)) => (nu / dist.sample(&mut rng)).sqrt(),
            None => 1.0,
        };
        let x = &factors[state] * &z;
        let mean = &spec.regimes[state].mean;
        for i in 0..n {
            returns[(day, i)] = mean[i] + scale * x[i];
        }
    }
    let start = business_days(synthetic_epoch(), 2)[1];
    let panel = ReturnsPanel {
        dates: business_days(start, t),
        assets: (0..n).map(|i| format!("A{i:03}")).collect(),
        returns,
    };
    Ok((panel, labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::mean_and_covariance;

    fn identity_spec(n: usize, t: usize, seed: u64, dist: ReturnDistribution) -> RegimeSpec {
        RegimeSpec {
            regimes: vec![Regime {
                mean: vec![0.0; n],
                covariance: (0..n).map(|a| (0..n).map(|b| f64::from(a == b)).collect()).collect(),
            }],
            distribution: dist,
            persistence: 30.0,
            days: t,
            seed,
        }
    }

    #[test]
    fn single_regime_moments() {
        for seed in 0..5 {
            let (panel, labels) = generate(&identity_spec(3, 1000, seed, ReturnDistribution::Normal)).unwrap();
            assert!(labels.iter().all(|&l| l == 0));
            let rows: Vec<usize> = (0..1000).collect();
            let (mean, cov) = mean_and_covariance(&panel.returns, &rows);
            assert!(mean.amax() < 4.0 / 1000f64.sqrt());
            assert!((cov - DMatrix::<f64>::identity(3, 3)).amax() < 0.15);
        }
    }

    fn mean_segment_length(labels: &[usize]) -> f64 {
        let switches = labels.windows(2).filter(|w| w[0] != w[1]).count();
        labels.len() as f64 / (switches + 1) as f64
    }

    #[test]
    fn segment_lengths_follow_persistence() {
        for seed in 0..10 {
            let spec = SynthParams {
                assets: 2,
                days: 3000,
                seed,
                ..Default::default()
            }
            .to_spec()
            .unwrap();
            let (_, labels) = generate(&spec).unwrap();
            let m = mean_segment_length(&labels);
            assert!((24.0..=36.0).contains(&m), "seed {seed}: {m}");
        }
    }

    #[test]
    fn student_t_covariance_scales_by_nu_ratio() {
        let nu = 5.0;
        let (panel, _) = generate(&identity_spec(2, 50_000, 3, ReturnDistribution::StudentT { nu })).unwrap();
        let rows: Vec<usize> = (0..50_000).collect();
        let (_, cov) = mean_and_covariance(&panel.returns, &rows);
        let expect = nu / (nu - 2.0);
        for a in 0..2 {
            assert!((cov[(a, a)] / expect - 1.0).abs() < 0.1, "{}", cov[(a, a)]);
        }
        assert!(cov[(0, 1)].abs() < 0.1 * expect);
    }

    #[test]
    fn deterministic_under_seed() {
        let spec = SynthParams { days: 300, seed: 7, ..Default::default() }.to_spec().unwrap();
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
    }

    #[test]
    fn non_pd_regime_is_named() {
        let spec = SynthParams {
            assets: 4,
            correlation: vec![0.3, 1.5],
            ..Default::default()
        }
        .to_spec()
        .unwrap();
        let err = generate(&spec).unwrap_err();
        assert!(err.to_string().contains("regime 1"), "{err}");
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn rotation_pattern_separates_groups() {
        let spec = SynthParams {
            assets: 4,
            separation: 2.0,
            vol: vec![0.01],
            ..Default::default()
        }
        .to_spec()
        .unwrap();
        assert_eq!(spec.regimes[0].mean, vec![0.01, -0.01, 0.01, -0.01]);
        assert_eq!(spec.regimes[1].mean, vec![-0.01, 0.01, -0.01, 0.01]);
    }

    #[test]
    fn identical_regimes_are_indistinguishable() {
        let mut spec = identity_spec(2, 4000, 1, ReturnDistribution::Normal);
        spec.regimes.push(spec.regimes[0].clone());
        let (panel, labels) = generate(&spec).unwrap();
        let rows0: Vec<usize> = (0..4000).filter(|&t| labels[t] == 0).collect();
        let rows1: Vec<usize> = (0..4000).filter(|&t| labels[t] == 1).collect();
        let (m0, _) = mean_and_covariance(&panel.returns, &rows0);
        let (m1, _) = mean_and_covariance(&panel.returns, &rows1);
        // 4 standard errors of a difference of two means on ~2000 draws each
        assert!((m0 - m1).amax() < 4.0 * (1.0 / rows0.len() as f64 + 1.0 / rows1.len() as f64).sqrt());
    }
}
