use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::experiment::{BacktestReport, SweepReport};
use super::metrics::Summary;
use crate::data::{write_file, write_labels_csv};
use crate::error::{Error, Result};
use crate::optim::Solver;

fn stat_columns(out: &mut String, s: Option<&Summary>) {
    match s {
        Some(s) => write!(out, ",{:?},{:?},{:?}", s.mean, s.p5, s.p95),
        None => write!(out, ",,,"),
    }
    .expect("writing to a String");
}

fn solver_file(solver: Solver) -> String {
    format!("table_{}.csv", format!("{solver:?}").to_ascii_lowercase())
}

/// One table per solver (plus the naive row) with mean and 5th/95th percentiles.
fn solver_table(report: &BacktestReport, solver: Solver) -> String {
    let mut out = String::from(
        "solver,state,return,return_p5,return_p95,volatility,volatility_p5,volatility_p95,sharpe,sharpe_p5,sharpe_p95\n",
    );
    for c in report.cells.iter().filter(|c| c.cell.solver == solver || c.cell.solver == Solver::Naive) {
        out.push_str(c.cell.solver.name());
        out.push(',');
        out.push_str(c.cell.state_name());
        stat_columns(&mut out, c.annual_return.as_ref());
        stat_columns(&mut out, c.annual_volatility.as_ref());
        stat_columns(&mut out, c.sharpe.as_ref());
        out.push('\n');
    }
    out
}

/// Write `report.json`, `table_<solver>.csv`, `likelihood_gains.csv` and,
/// when enabled, `labels_window<i>.csv`. Returns the written paths.
pub fn write_report(report: &BacktestReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let json = serde_json::to_string_pretty(report).map_err(|e| Error::Validation(format!("serializing report: {e}")))?;
    let p = dir.join("report.json");
    write_file(&p, json.as_bytes())?;
    written.push(p);

    for &solver in &report.config.solvers {
        let p = dir.join(solver_file(solver));
        write_file(&p, solver_table(report, solver).as_bytes())?;
        written.push(p);
    }

    let mut gains = String::from("day,sparse0_gain,sparse1_gain\n");
    for d in &report.likelihood_gains {
        writeln!(gains, "{},{:?},{:?}", d.day, d.sparse0_gain, d.sparse1_gain).expect("writing to a String");
    }
    let p = dir.join("likelihood_gains.csv");
    write_file(&p, gains.as_bytes())?;
    written.push(p);

    if report.config.save_labels {
        for w in report.windows.iter().filter(|w| !w.labels.is_empty()) {
            let p = dir.join(format!("labels_window{}.csv", w.index));
            let dates = report.dates.get(w.split.train_start..=w.split.train_end).ok_or_else(|| {
                Error::Validation(format!("window {} lies outside the report's dates", w.index))
            })?;
            write_labels_csv(dates, &w.labels, &p)?;
            written.push(p);
        }
    }
    Ok(written)
}

/// Parse a `report.json` written by [`write_report`].
pub fn read_report(path: &Path) -> Result<BacktestReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line() as u64,
        msg: e.to_string(),
    })
}

/// Write `sweep.csv` (absolute and Full-relative Sharpe per train length) and
/// `sweep.json`.
pub fn write_sweep(sweep: &SweepReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = String::from("train_days,solver,state,mean_sharpe,std_sharpe,relative_to_full\n");
    let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
    for r in &sweep.rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.train_days,
            r.cell.solver.name(),
            r.cell.state_name(),
            opt(r.mean_sharpe),
            opt(r.std_sharpe),
            opt(r.relative_to_full)
        )
        .expect("writing to a String");
    }
    let csv = dir.join("sweep.csv");
    write_file(&csv, out.as_bytes())?;
    let json = serde_json::to_string_pretty(sweep).map_err(|e| Error::Validation(format!("serializing sweep: {e}")))?;
    let js = dir.join("sweep.json");
    write_file(&js, json.as_bytes())?;
    Ok(vec![csv, js])
}
