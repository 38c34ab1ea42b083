mod args;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use iccpo_core::backtest::{
    aggregate_metrics, load_returns, read_report, run_experiment, train_length_sweep, write_report, write_sweep,
    ExperimentConfig,
};
use iccpo_core::data::{write_labels_csv, write_prices_csv};
use iccpo_core::forecast::label_assignment;
use iccpo_core::icc::{assign_clusters, calibrate_gamma, average_persistence, GammaCalibration};
use iccpo_core::synth::{generate, RegimeSpec};
use iccpo_core::{ClusterAssignment, Error, Result, StateLabeling};
use serde::Serialize;

use args::{read_document, resolve_output_dir, BacktestArgs, Cli, ClusterArgs, Command, ReportArgs, SynthArgs};

/// Exit status for a run that finished but whose report is flagged unreliable.
const UNRELIABLE_EXIT: u8 = 3;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let out = cli.output_dir.as_ref();
    let result = match &cli.command {
        Command::Synth(a) => synth(a, out),
        Command::Cluster(a) => cluster(a, out),
        Command::Backtest(a) => backtest(a, out),
        Command::Report(a) => report(a, out),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn print_written(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn synth(a: &SynthArgs, out: Option<&PathBuf>) -> Result<u8> {
    let cfg = a.config.load()?;
    let spec: RegimeSpec = match &a.spec {
        Some(p) => read_document(p)?,
        None => a.params()?.to_spec()?,
    };
    let (panel, labels) = generate(&spec)?;
    let dir = resolve_output_dir(out, cfg.output_dir.as_ref());
    let prices = dir.join("prices.csv");
    let labels_path = dir.join("labels.csv");
    write_prices_csv(&panel.to_prices(100.0), &prices)?;
    write_labels_csv(&panel.dates, &labels, &labels_path)?;
    print_written(&[prices, labels_path]);
    Ok(0)
}

#[derive(Serialize)]
struct ClusterDiagnosticsFile<'a> {
    config: &'a ExperimentConfig,
    start: usize,
    days: usize,
    gamma: f64,
    calibration: Option<GammaCalibration>,
    persistence: f64,
    labeling: Option<StateLabeling>,
    assignment: &'a ClusterAssignment,
}

fn cluster(a: &ClusterArgs, out: Option<&PathBuf>) -> Result<u8> {
    let mut cfg = a.config.load()?;
    a.flags.apply(&mut cfg);
    cfg.cluster.validate()?;
    let returns = load_returns(&cfg)?;
    if a.start >= returns.len() {
        return Err(Error::Validation(format!(
            "window start {} is past the last of {} return rows",
            a.start,
            returns.len()
        )));
    }
    let days = a.days.unwrap_or(returns.len() - a.start);
    if days == 0 || a.start + days > returns.len() {
        return Err(Error::InsufficientData(format!(
            "window {}..{} exceeds {} return rows",
            a.start,
            a.start + days,
            returns.len()
        )));
    }
    let train = returns.slice(a.start, a.start + days - 1);

    let (gamma, calibration) = if a.gamma.eq_ignore_ascii_case("auto") {
        let grid = cfg.gamma_grid.resolve(&train, &cfg.cluster)?;
        let cal = calibrate_gamma(&train, &cfg.cluster, cfg.target_persistence, &grid, cfg.seed)?;
        (cal.gamma, Some(cal))
    } else {
        let g: f64 = a
            .gamma
            .parse()
            .map_err(|_| Error::Validation(format!("--gamma must be `auto` or a number, got {:?}", a.gamma)))?;
        (g, None)
    };
    let (assignment, _) = assign_clusters(&train, &cfg.cluster, gamma, cfg.seed)?;
    let labeling = if assignment.k == 2 && cfg.prevalence_window <= assignment.labels.len() {
        Some(label_assignment(&assignment, cfg.prevalence_window)?)
    } else {
        None
    };

    let dir = resolve_output_dir(out, cfg.output_dir.as_ref());
    let labels_path = dir.join("labels.csv");
    write_labels_csv(&train.dates, &assignment.labels, &labels_path)?;
    let diag = ClusterDiagnosticsFile {
        config: &cfg,
        start: a.start,
        days,
        gamma,
        calibration,
        persistence: average_persistence(&assignment.labels),
        labeling,
        assignment: &assignment,
    };
    let diag_path = dir.join("diagnostics.json");
    write_json(&diag, &diag_path)?;
    print_written(&[labels_path, diag_path]);
    if !assignment.converged {
        eprintln!("warning: clustering stopped after {} sweeps without converging", assignment.iterations_run);
    }
    Ok(0)
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Validation(format!("serializing: {e}")))?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|source| Error::Io { path: parent.to_path_buf(), source })?;
    }
    std::fs::write(path, text).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn unreliable_exit(unreliable: bool) -> u8 {
    if unreliable {
        eprintln!("warning: more than half of the windows failed for at least one cell");
        UNRELIABLE_EXIT
    } else {
        0
    }
}

fn backtest(a: &BacktestArgs, out: Option<&PathBuf>) -> Result<u8> {
    let mut cfg = a.effective_config()?;
    let dir = resolve_output_dir(out, cfg.output_dir.as_ref());
    cfg.output_dir = Some(dir.clone());
    if a.sweep {
        let sweep = train_length_sweep(&cfg, &a.sweep_lengths(&cfg))?;
        print_written(&write_sweep(&sweep, &dir)?);
        for r in &sweep.rows {
            if let Some(m) = r.mean_sharpe {
                println!("train {:>4}  {:<3} {:<8} sharpe {m:>8.3}", r.train_days, r.cell.solver.name(), r.cell.state_name());
            }
        }
        return Ok(unreliable_exit(sweep.unreliable()));
    }
    let report = run_experiment(&cfg)?;
    print_written(&write_report(&report, &dir)?);
    print_summary(&report);
    Ok(unreliable_exit(report.unreliable))
}

fn print_summary(report: &iccpo_core::backtest::BacktestReport) {
    for c in &report.cells {
        let sharpe = c.sharpe.map_or("n/a".to_string(), |s| format!("{:.3}", s.mean));
        println!(
            "{:<5} {:<8} sharpe {sharpe:>8}  windows {}/{}",
            c.cell.solver.name(),
            c.cell.state_name(),
            c.successes,
            c.successes + c.failures
        );
    }
}

fn report(a: &ReportArgs, out: Option<&PathBuf>) -> Result<u8> {
    let old = read_report(&a.report)?;
    let fallback = a.report.parent().map(Path::to_path_buf);
    let dir = out.cloned().or(fallback).unwrap_or_else(|| PathBuf::from("."));
    let report = aggregate_metrics(&old.config, old.assets, old.dates, old.windows);
    print_written(&write_report(&report, &dir)?);
    print_summary(&report);
    Ok(unreliable_exit(report.unreliable))
}
