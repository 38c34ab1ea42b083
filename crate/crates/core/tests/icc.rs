mod common;

use iccpo_core::icc::{
    assign_clusters, count_switches, gain, gain_hybrid, gain_normal, ClusterConfig, GainKind, GainParams, StateModel,
};
use iccpo_core::synth::{generate, MeanPattern, SynthParams};
use iccpo_core::ReturnsPanel;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn two_regimes(seed: u64, days: usize) -> ReturnsPanel {
    let p = SynthParams {
        assets: 8,
        days,
        separation: 3.0,
        pattern: MeanPattern::Level,
        seed,
        ..SynthParams::default()
    };
    generate(&p.to_spec().unwrap()).unwrap().0
}

fn gains(panel: &ReturnsPanel, models: &[StateModel], cfg: &ClusterConfig) -> Vec<Vec<f64>> {
    (0..panel.len())
        .map(|t| {
            let r = panel.returns.row(t).transpose();
            models.iter().map(|m| gain(cfg.gain, &r, m, &cfg.params).unwrap()).collect()
        })
        .collect()
}

#[test]
fn converged_assignment_is_a_fixed_point() {
    let cfg = ClusterConfig::default();
    let mut checked = 0;
    for (seed, gamma) in [(1, 0.0), (2, 5.0), (3, 40.0), (4, 2.0)] {
        let panel = two_regimes(seed, 300);
        let (a, models) = assign_clusters(&panel, &cfg, gamma, seed).unwrap();
        if !a.converged {
            continue;
        }
        checked += 1;
        let g = gains(&panel, &models, &cfg);
        let mut prev: Option<usize> = None;
        for (t, row) in g.iter().enumerate() {
            let scored: Vec<f64> = (0..2)
                .map(|k| row[k] - if prev.is_some_and(|p| p != k) { gamma } else { 0.0 })
                .collect();
            let best = if scored[1] > scored[0] { 1 } else { 0 };
            assert_eq!(best, a.labels[t], "seed {seed} day {t}");
            prev = Some(a.labels[t]);
        }
    }
    assert!(checked >= 2, "only {checked} runs converged");
}

#[test]
fn huge_penalty_gives_a_single_segment() {
    let cfg = ClusterConfig { min_cluster_size: Some(1), ..ClusterConfig::default() };
    let panel = two_regimes(4, 300);
    let (_, models) = assign_clusters(&panel, &cfg, 0.0, 4).unwrap();
    let g = gains(&panel, &models, &cfg);
    let spread = g.iter().map(|r| (r[0] - r[1]).abs()).fold(0.0, f64::max);
    let (a, _) = assign_clusters(&panel, &cfg, 10.0 * spread * panel.len() as f64, 4).unwrap();
    assert_eq!(count_switches(&a.labels), 0);
}

#[test]
fn same_seed_same_assignment() {
    let cfg = ClusterConfig::default();
    let panel = two_regimes(5, 260);
    let (a, ma) = assign_clusters(&panel, &cfg, 3.0, 9).unwrap();
    let (b, mb) = assign_clusters(&panel, &cfg, 3.0, 9).unwrap();
    assert_eq!(a, b);
    assert_eq!(ma, mb);
}

#[test]
fn swapping_states_swaps_gains() {
    let cfg = ClusterConfig::default();
    let panel = two_regimes(6, 260);
    let (a, models) = assign_clusters(&panel, &cfg, 2.0, 6).unwrap();
    let swapped: Vec<StateModel> = vec![models[1].clone(), models[0].clone()];
    let g = gains(&panel, &models, &cfg);
    let h = gains(&panel, &swapped, &cfg);
    for (x, y) in g.iter().zip(&h) {
        assert_eq!((x[0], x[1]), (y[1], y[0]));
    }
    let flipped: Vec<usize> = a.labels.iter().map(|l| 1 - l).collect();
    assert_eq!(count_switches(&flipped), count_switches(&a.labels));
    let sizes = |l: &[usize]| (l.iter().filter(|&&x| x == 0).count(), l.iter().filter(|&&x| x == 1).count());
    let (s0, s1) = sizes(&a.labels);
    assert_eq!(sizes(&flipped), (s1, s0));
    let m0 = StateModel::fit(&panel.returns, (0..panel.len()).filter(|&t| a.labels[t] == 0).collect(), Some(5.0)).unwrap();
    assert_eq!(m0.mean, models[0].mean);
}

#[test]
fn single_state_is_constant() {
    let cfg = ClusterConfig { k: 1, ..ClusterConfig::default() };
    let (a, models) = assign_clusters(&two_regimes(7, 200), &cfg, 1.0, 7).unwrap();
    assert!(a.labels.iter().all(|&l| l == 0));
    assert_eq!(models.len(), 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn normal_is_hybrid_with_half_and_half_n(seed in 0u64..10_000, n in 4usize..12) {
        let mut rng = common::rng(seed);
        let data = DMatrix::from_fn(4 * n, n, |_, _| rand::Rng::random_range(&mut rng, -0.02..0.02));
        let state = StateModel::fit(&data, (0..4 * n).collect(), None).unwrap();
        let r = common::random_vector(n, -0.03, 0.03, &mut rng);
        let params = GainParams { c1: 0.5, c2: n as f64 / 2.0, ..GainParams::default() };
        prop_assert_eq!(gain_normal(&r, &state).unwrap(), gain_hybrid(&r, &state, &params).unwrap());
        prop_assert!(gain(GainKind::Euclidean, &state.mean.clone(), &state, &params).unwrap() == 0.0);
    }
}
