mod common;

use iccpo_core::optim::{
    cla_frontier, markowitz_unconstrained, select_portfolio, sls_long_only, Criterion, InputSource, SlsOptions, Solver,
};
use iccpo_core::{Error, PortfolioInputs};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn instance(n: usize, seed: u64) -> PortfolioInputs {
    let mut rng = common::rng(seed);
    let cov = common::random_spd(n, 1e-4, &mut rng);
    let mu = common::random_vector(n, -0.001, 0.002, &mut rng);
    PortfolioInputs::from_covariance(mu, cov, InputSource::Full).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Minimum of the equality-constrained QP restricted to `free` assets
/// (all others pinned at zero), or `None` if singular.
fn restricted_min(inp: &PortfolioInputs, free: &[usize], target: f64) -> Option<DVector<f64>> {
    let m = free.len();
    let mut kkt = DMatrix::zeros(m + 2, m + 2);
    let mut rhs = DVector::zeros(m + 2);
    for (a, &i) in free.iter().enumerate() {
        for (b, &j) in free.iter().enumerate() {
            kkt[(a, b)] = 2.0 * inp.covariance[(i, j)];
        }
        kkt[(a, m)] = 1.0;
        kkt[(m, a)] = 1.0;
        kkt[(a, m + 1)] = inp.mu[i];
        kkt[(m + 1, a)] = inp.mu[i];
    }
    rhs[m] = 1.0;
    rhs[m + 1] = target;
    let sol = kkt.lu().solve(&rhs)?;
    let mut w = DVector::zeros(inp.n());
    for (a, &i) in free.iter().enumerate() {
        w[i] = sol[a];
    }
    let ok = w.iter().all(|&x| x >= -1e-12)
        && (w.sum() - 1.0).abs() < 1e-9
        && (inp.mu.dot(&w) - target).abs() < 1e-9 * target.abs().max(1e-6);
    ok.then_some(w)
}

/// Global long-only optimum by enumerating every support set.
fn exhaustive(inp: &PortfolioInputs, target: f64) -> Option<DVector<f64>> {
    let n = inp.n();
    (1u32..(1 << n))
        .filter_map(|mask| {
            let free: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            if free.len() == 1 {
                let i = free[0];
                return ((inp.mu[i] - target).abs() < 1e-12).then(|| DVector::from_fn(n, |j, _| f64::from(j == i)));
            }
            restricted_min(inp, &free, target)
        })
        .min_by(|a, b| inp.variance(a).total_cmp(&inp.variance(b)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn closed_form_kkt(n in 2usize..9, seed in any::<u64>(), t in 0.0f64..1.0) {
        let inp = instance(n, seed);
        let target = inp.mu.min() + t * (inp.mu.max() - inp.mu.min());
        let (w, (l1, l2)) = markowitz_unconstrained(&inp, target).unwrap();
        let w = w.weights;
        prop_assert!((w.sum() - 1.0).abs() < 1e-10);
        prop_assert!((inp.mu.dot(&w) - target).abs() < 1e-12);
        let resid = 2.0 * &inp.covariance * &w - &inp.mu * l1 - DVector::from_element(n, l2);
        prop_assert!(resid.amax() < 1e-8);
    }

    #[test]
    fn sls_matches_exhaustive_support_search(seed in any::<u64>(), t in 0.02f64..0.98) {
        let inp = instance(4, seed);
        let target = inp.mu.min() + t * (inp.mu.max() - inp.mu.min());
        let oracle = exhaustive(&inp, target).unwrap();
        let w = sls_long_only(&inp, target, &SlsOptions::default()).unwrap();
        prop_assert!(w.converged);
        prop_assert!(rel(w.achieved_variance, inp.variance(&oracle)) < 1e-8);
        prop_assert!((&w.weights - &oracle).amax() < 1e-5);
        prop_assert!(w.weights.iter().all(|&x| (0.0..=1.0).contains(&x)));
        prop_assert!((w.weights.sum() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn cla_frontier_invariants_and_sls_agreement(n in 3usize..9, seed in any::<u64>(), t in 0.0f64..1.0) {
        let inp = instance(n, seed);
        let tps = cla_frontier(&inp, &vec![0.0; n], &vec![1.0; n]).unwrap();
        for tp in &tps {
            prop_assert!(tp.weights.iter().all(|&x| (0.0..=1.0).contains(&x)));
            prop_assert!((tp.weights.sum() - 1.0).abs() < 1e-10);
        }
        for pair in tps.windows(2) {
            prop_assert!(inp.expected_return(&pair[0].weights) > inp.expected_return(&pair[1].weights));
            prop_assert!(inp.variance(&pair[0].weights) >= inp.variance(&pair[1].weights) * (1.0 - 1e-10));
        }
        let hi = inp.expected_return(&tps[0].weights);
        let lo = inp.expected_return(&tps[tps.len() - 1].weights);
        let target = lo + t * (hi - lo);
        let cla = select_portfolio(&inp, Solver::Cla, Criterion::TargetReturn(target)).unwrap();
        let sls = sls_long_only(&inp, target, &SlsOptions::default()).unwrap();
        prop_assert!(rel(sls.achieved_variance, cla.achieved_variance) < 1e-5);
    }

    #[test]
    fn max_sharpe_ignores_covariance_scale(n in 3usize..7, seed in any::<u64>(), scale in 0.1f64..10.0) {
        let inp = instance(n, seed);
        prop_assume!(inp.mu.max() > 0.0);
        let scaled = PortfolioInputs::from_covariance(inp.mu.clone(), &inp.covariance * scale, InputSource::Full).unwrap();
        for solver in [Solver::Cla, Solver::Sls] {
            let a = select_portfolio(&inp, solver, Criterion::MaxSharpe).unwrap();
            let b = select_portfolio(&scaled, solver, Criterion::MaxSharpe).unwrap();
            prop_assert!((&a.weights - &b.weights).amax() < 1e-6, "{:?}: {} vs {}", solver, a.weights, b.weights);
        }
    }
}

#[test]
fn closed_form_matches_a_grid_search_for_three_assets() {
    for seed in 0..10 {
        let inp = instance(3, seed);
        let target = 0.5 * (inp.mu.min() + inp.mu.max());
        let (w, _) = markowitz_unconstrained(&inp, target).unwrap();
        // Feasible line: particular solution plus multiples of the null direction of [1; μ].
        let ones = DVector::from_element(3, 1.0);
        let d = ones.cross(&inp.mu).normalize();
        let i = inp.mu.imax();
        let j = inp.mu.imin();
        let a = (target - inp.mu[j]) / (inp.mu[i] - inp.mu[j]);
        let mut p = DVector::zeros(3);
        p[i] = a;
        p[j] = 1.0 - a;
        let (mut lo, mut hi) = (-20.0, 20.0);
        for _ in 0..40 {
            let step = (hi - lo) / 200.0;
            let best = (0..=200)
                .map(|k| lo + step * k as f64)
                .min_by(|x, y| inp.variance(&(&p + &d * *x)).total_cmp(&inp.variance(&(&p + &d * *y))))
                .unwrap();
            lo = best - step;
            hi = best + step;
        }
        let oracle = &p + &d * (0.5 * (lo + hi));
        assert!((&w.weights - &oracle).amax() < 1e-7, "seed {seed}: {} vs {}", w.weights, oracle);
    }
}

#[test]
fn infeasible_targets_are_rejected() {
    let inp = instance(4, 1);
    let above = inp.mu.max() + 1e-4;
    assert!(matches!(sls_long_only(&inp, above, &SlsOptions::default()), Err(Error::Infeasible(_))));
    assert!(matches!(
        select_portfolio(&inp, Solver::Cla, Criterion::TargetReturn(above)),
        Err(Error::Infeasible(_))
    ));
}
