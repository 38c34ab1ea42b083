use std::time::Instant;

use iccpo_core::backtest::{
    aggregate_metrics, read_report, run_experiment, train_length_sweep, write_report, Cell, CellOutcome,
    DataSource, ExperimentConfig,
};
use iccpo_core::optim::{InputSource, Solver};
use iccpo_core::synth::SynthParams;

fn small_config(seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        data: DataSource::Synthetic(SynthParams { assets: 8, days: 800, separation: 2.0, ..SynthParams::default() }),
        train_days: 252,
        test_days: 30,
        windows: 4,
        seed,
        ..ExperimentConfig::default()
    }
}

#[test]
fn small_experiment_runs_and_round_trips() {
    let t = Instant::now();
    let report = run_experiment(&small_config(3)).unwrap();
    eprintln!("small experiment: {:?}", t.elapsed());
    assert_eq!(report.windows.len(), 4);
    assert_eq!(report.cells.len(), 9);
    for w in &report.windows {
        assert!(w.errors.is_empty(), "{:?}", w.errors);
        assert_eq!(w.likelihood_gains.len(), 30);
        for c in &w.cells {
            match &c.outcome {
                CellOutcome::Ok { weights, evaluation } => {
                    assert_eq!(evaluation.daily.len(), 30);
                    assert!((weights.iter().sum::<f64>() - 1.0).abs() < 1e-8);
                    assert!(weights.iter().all(|&x| (-1e-8..=1.0 + 1e-8).contains(&x)));
                }
                CellOutcome::Failed { reason } => panic!("{:?} failed: {reason}", c.cell),
            }
        }
        // naive series is the row mean of the test returns
        let Some(CellOutcome::Ok { evaluation, .. }) = w.outcome(Cell { solver: Solver::Naive, source: None }) else {
            panic!("naive missing")
        };
        assert_eq!(evaluation.daily.len(), w.split.test_days());
    }
    let dir = tempfile::tempdir().unwrap();
    let files = write_report(&report, dir.path()).unwrap();
    assert!(files.iter().any(|p| p.ends_with("table_sls.csv")));
    assert!(files.iter().any(|p| p.ends_with("table_cla.csv")));
    let back = read_report(&dir.path().join("report.json")).unwrap();
    assert_eq!(back, report);
    let again = aggregate_metrics(&back.config, back.assets.clone(), back.dates.clone(), back.windows.clone());
    assert_eq!(again, report);
    let gains = std::fs::read_to_string(dir.path().join("likelihood_gains.csv")).unwrap();
    assert!(gains.starts_with("day,sparse0_gain,sparse1_gain\n"));
    assert_eq!(gains.lines().count(), 31);
}

#[test]
fn single_window_percentiles_equal_the_observation() {
    let cfg = ExperimentConfig { windows: 1, ..small_config(5) };
    let report = run_experiment(&cfg).unwrap();
    for c in report.cells.iter().filter(|c| c.sharpe.is_some()) {
        let s = c.sharpe.unwrap();
        assert_eq!((s.p5, s.p95), (s.mean, s.mean));
    }
}

#[test]
fn same_seed_same_report() {
    let a = serde_json::to_string(&run_experiment(&small_config(11)).unwrap()).unwrap();
    let b = serde_json::to_string(&run_experiment(&small_config(11)).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn sweep_relative_column_is_ratio_of_means() {
    let cfg = ExperimentConfig { windows: 2, ..small_config(2) };
    let sweep = train_length_sweep(&cfg, &[252]).unwrap();
    let single = run_experiment(&cfg).unwrap();
    assert_eq!(sweep.reports[0], single);
    for row in &sweep.rows {
        if row.cell.source == Some(InputSource::Sparse0) {
            let full = sweep
                .rows
                .iter()
                .find(|r| r.cell == Cell { solver: row.cell.solver, source: Some(InputSource::Full) })
                .unwrap();
            if let (Some(m), Some(f), Some(rel)) = (row.mean_sharpe, full.mean_sharpe, row.relative_to_full) {
                assert_eq!(rel, m / f);
            }
        }
    }
}

#[test]
fn unsupported_state_count_is_rejected() {
    let mut cfg = small_config(1);
    cfg.cluster.k = 3;
    assert!(matches!(run_experiment(&cfg), Err(iccpo_core::Error::Unsupported(_))));
}

mod gains {
    use iccpo_core::backtest::likelihood_gain_series;
    use iccpo_core::icc::{GainKind, GainParams, StateModel};
    use iccpo_core::synth::{generate, MeanPattern, SynthParams};

    fn panel() -> (iccpo_core::ReturnsPanel, Vec<usize>) {
        let p = SynthParams { assets: 10, days: 1500, separation: 2.0, pattern: MeanPattern::Rotation, seed: 21, ..SynthParams::default() };
        generate(&p.to_spec().unwrap()).unwrap()
    }

    #[test]
    fn identical_models_give_zero_gain() {
        let (p, _) = panel();
        let train = p.slice(0, 499);
        let test = p.slice(500, 529);
        let full = StateModel::fit(&train.returns, (0..500).collect(), Some(5.0)).unwrap();
        let g = likelihood_gain_series(&full, &full, &full, &test, GainKind::StudentT, &GainParams::default()).unwrap();
        assert_eq!(g.len(), 30);
        assert!(g.iter().all(|&(a, b)| a == 0.0 && b == 0.0));
    }

    #[test]
    fn matched_state_wins_on_most_days() {
        let (p, truth) = panel();
        let train: Vec<usize> = (0..1000).collect();
        let fit = |rows: Vec<usize>| StateModel::fit(&p.returns, rows, Some(5.0)).unwrap();
        let full = fit(train.clone());
        let a = fit(train.iter().copied().filter(|&t| truth[t] == 0).collect());
        let b = fit(train.iter().copied().filter(|&t| truth[t] == 1).collect());
        let test_rows: Vec<usize> = (1000..1500).filter(|&t| truth[t] == 0).collect();
        let test = iccpo_core::ReturnsPanel {
            dates: test_rows.iter().map(|&t| p.dates[t]).collect(),
            assets: p.assets.clone(),
            returns: p.returns.select_rows(&test_rows),
        };
        let g = likelihood_gain_series(&a, &b, &full, &test, GainKind::StudentT, &GainParams::default()).unwrap();
        let positive = g.iter().filter(|&&(x, _)| x > 0.0).count();
        assert!(2 * positive > g.len(), "{positive} of {}", g.len());
        let mean0 = g.iter().map(|x| x.0).sum::<f64>() / g.len() as f64;
        let mean1 = g.iter().map(|x| x.1).sum::<f64>() / g.len() as f64;
        assert!(mean0 > mean1);
    }
}
