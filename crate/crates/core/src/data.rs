//! Price panels, log-returns, asset selection and train/test window sampling.

use std::collections::HashMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use chrono::{Datelike, Days, NaiveDate, Weekday};
use nalgebra::DMatrix;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Trading days per year used for window arithmetic and annualization.
pub const TRADING_DAYS_PER_YEAR: usize = 252;

/// Rows removed while cleaning a raw price file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DropReport {
    /// 1-based data-row numbers (file order, header excluded) that were dropped.
    pub rows: Vec<usize>,
    /// Per asset: how many dropped rows had a missing or non-positive price in it.
    pub per_asset: Vec<(String, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel {
    pub dates: Vec<NaiveDate>,
    pub assets: Vec<String>,
    /// T×n closing prices, strictly positive.
    pub prices: DMatrix<f64>,
    pub market_caps: Option<Vec<f64>>,
    pub dropped: DropReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnsPanel {
    pub dates: Vec<NaiveDate>,
    pub assets: Vec<String>,
    /// T×n daily log-returns.
    pub returns: DMatrix<f64>,
}

/// A consecutive train/test split, all indices inclusive and 0-based rows of a
/// [`ReturnsPanel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSplit {
    pub train_start: usize,
    pub train_end: usize,
    pub test_start: usize,
    pub test_end: usize,
}

impl WindowSplit {
    pub fn train_days(&self) -> usize {
        self.train_end + 1 - self.train_start
    }

    pub fn test_days(&self) -> usize {
        self.test_end + 1 - self.test_start
    }
}

/// Column mapping for a wide price file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CsvSchema {
    pub date_column: String,
    /// Price columns to load; `None` loads every non-date column.
    pub asset_columns: Option<Vec<String>>,
    pub delimiter: char,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            date_column: "date".to_string(),
            asset_columns: None,
            delimiter: ',',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    TopCap,
    Random,
}

fn is_missing(cell: &str) -> bool {
    matches!(
        cell.trim().to_ascii_lowercase().as_str(),
        "" | "na" | "nan" | "null" | "n/a"
    )
}

fn parse_err(path: &Path, line: u64, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Load a wide price file: one date column plus one column per asset.
///
/// Rows are sorted by date; duplicated dates are rejected. Rows holding any
/// missing or non-positive price are dropped and listed in
/// [`PricePanel::dropped`].
pub fn load_prices(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<PricePanel> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let delimiter = u8::try_from(schema.delimiter)
        .map_err(|_| Error::Validation("delimiter must be a single ASCII character".into()))?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let headers = match reader.headers() {
        Ok(h) => h.clone(),
        Err(e) => {
            let line = e.position().map_or(1, |p| p.line());
            return Err(parse_err(path, line, e.to_string()));
        }
    };
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::InsufficientData(format!(
            "{}: file has no header or rows",
            path.display()
        )));
    }
    let date_idx = headers
        .iter()
        .position(|h| h == schema.date_column)
        .ok_or_else(|| {
            Error::Validation(format!(
                "{}: date column `{}` not found",
                path.display(),
                schema.date_column
            ))
        })?;
    let asset_idx: Vec<usize> = match &schema.asset_columns {
        Some(cols) => cols
            .iter()
            .map(|c| {
                headers.iter().position(|h| h == c).ok_or_else(|| {
                    Error::Validation(format!("{}: asset column `{c}` not found", path.display()))
                })
            })
            .collect::<Result<_>>()?,
        None => (0..headers.len()).filter(|&i| i != date_idx).collect(),
    };
    if asset_idx.is_empty() {
        return Err(Error::Validation(format!(
            "{}: no asset price columns",
            path.display()
        )));
    }
    let assets: Vec<String> = asset_idx.iter().map(|&i| headers[i].to_string()).collect();

    // (date, file row number, line, prices or None when missing/non-positive)
    let mut rows: Vec<(NaiveDate, usize, u64, Vec<Option<f64>>)> = Vec::new();
    for (row_no, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let date_str = record.get(date_idx).unwrap_or("");
        let date = NaiveDate::parse_from_str(date_str, "%Y-%m-%d")
            .map_err(|e| parse_err(path, line, format!("bad date `{date_str}`: {e}")))?;
        let mut values = Vec::with_capacity(asset_idx.len());
        for &c in &asset_idx {
            let cell = record.get(c).unwrap_or("");
            if is_missing(cell) {
                values.push(None);
                continue;
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(path, line, format!("bad price `{cell}`")))?;
            values.push((v.is_finite() && v > 0.0).then_some(v));
        }
        rows.push((date, row_no + 1, line, values));
    }

    rows.sort_by_key(|r| r.0);
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(parse_err(
            path,
            w[1].2,
            format!("duplicate date {}", w[1].0),
        ));
    }

    let mut dropped_rows = Vec::new();
    let mut per_asset = vec![0usize; assets.len()];
    let mut kept: Vec<(NaiveDate, Vec<f64>)> = Vec::with_capacity(rows.len());
    for (date, row_no, _, values) in rows {
        if values.iter().all(Option::is_some) {
            kept.push((date, values.into_iter().flatten().collect()));
        } else {
            dropped_rows.push(row_no);
            for (i, v) in values.iter().enumerate() {
                if v.is_none() {
                    per_asset[i] += 1;
                }
            }
        }
    }
    dropped_rows.sort_unstable();
    if kept.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{}: {} usable rows, need at least 2",
            path.display(),
            kept.len()
        )));
    }

    let n = assets.len();
    let prices = DMatrix::from_fn(kept.len(), n, |t, i| kept[t].1[i]);
    let per_asset = assets
        .iter()
        .cloned()
        .zip(per_asset)
        .filter(|(_, c)| *c > 0)
        .collect();
    Ok(PricePanel {
        dates: kept.into_iter().map(|(d, _)| d).collect(),
        assets,
        prices,
        market_caps: None,
        dropped: DropReport {
            rows: dropped_rows,
            per_asset,
        },
    })
}

/// Attach capitalization values from an `asset,market_cap` sidecar file.
pub fn load_market_caps(panel: &mut PricePanel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut caps: HashMap<String, f64> = HashMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            parse_err(path, e.position().map_or(0, |p| p.line()), e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let (Some(asset), Some(cap)) = (record.get(0), record.get(1)) else {
            return Err(parse_err(path, line, "expected `asset,market_cap`"));
        };
        let cap: f64 = cap
            .parse()
            .map_err(|_| parse_err(path, line, format!("bad market cap `{cap}`")))?;
        caps.insert(asset.to_string(), cap);
    }
    let values = panel
        .assets
        .iter()
        .map(|a| {
            caps.get(a)
                .copied()
                .ok_or_else(|| Error::MissingMetadata(format!("no market cap for asset `{a}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    panel.market_caps = Some(values);
    Ok(())
}

/// Daily log-returns `ln P(t+1) - ln P(t)`; the panel loses its first date.
pub fn compute_log_returns(panel: &PricePanel) -> Result<ReturnsPanel> {
    let t = panel.prices.nrows();
    if t < 2 {
        return Err(Error::InsufficientData(format!(
            "log-returns need at least 2 price rows, got {t}"
        )));
    }
    let returns = DMatrix::from_fn(t - 1, panel.prices.ncols(), |r, c| {
        panel.prices[(r + 1, c)].ln() - panel.prices[(r, c)].ln()
    });
    if !returns.iter().all(|v| v.is_finite()) {
        return Err(Error::Validation("non-finite log-return".into()));
    }
    Ok(ReturnsPanel {
        dates: panel.dates[1..].to_vec(),
        assets: panel.assets.clone(),
        returns,
    })
}

/// Restrict a panel to `count` assets, either the largest capitalizations or a
/// seeded random draw.
pub fn select_assets(
    panel: &PricePanel,
    mode: SelectionMode,
    count: usize,
    seed: u64,
) -> Result<PricePanel> {
    let n = panel.assets.len();
    if count == 0 || count > n {
        return Err(Error::Validation(format!(
            "cannot select {count} assets out of {n}"
        )));
    }
    let chosen: Vec<usize> = match mode {
        SelectionMode::TopCap => {
            let caps = panel.market_caps.as_ref().ok_or_else(|| {
                Error::MissingMetadata("top-cap selection needs market capitalizations".into())
            })?;
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| caps[b].total_cmp(&caps[a]).then(a.cmp(&b)));
            order.truncate(count);
            order
        }
        SelectionMode::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            index::sample(&mut rng, n, count).into_vec()
        }
    };
    Ok(PricePanel {
        dates: panel.dates.clone(),
        assets: chosen.iter().map(|&i| panel.assets[i].clone()).collect(),
        prices: panel.prices.select_columns(&chosen),
        market_caps: panel
            .market_caps
            .as_ref()
            .map(|c| chosen.iter().map(|&i| c[i]).collect()),
        dropped: panel.dropped.clone(),
    })
}

/// Draw `count` consecutive train/test windows, offsets uniform and sampled
/// with replacement.
pub fn sample_windows(
    panel: &ReturnsPanel,
    train_days: usize,
    test_days: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<WindowSplit>> {
    if train_days == 0 || test_days == 0 || count == 0 {
        return Err(Error::Validation(
            "train_days, test_days and count must be positive".into(),
        ));
    }
    let t = panel.len();
    if t < train_days + test_days {
        return Err(Error::InsufficientData(format!(
            "panel has {t} rows, windows need {}",
            train_days + test_days
        )));
    }
    let max_offset = t - train_days - test_days;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| {
            let start = rng.random_range(0..=max_offset);
            WindowSplit {
                train_start: start,
                train_end: start + train_days - 1,
                test_start: start + train_days,
                test_end: start + train_days + test_days - 1,
            }
        })
        .collect())
}

impl ReturnsPanel {
    pub fn len(&self) -> usize {
        self.returns.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.nrows() == 0
    }

    pub fn n_assets(&self) -> usize {
        self.returns.ncols()
    }

    /// Rows `start..=end`.
    pub fn slice(&self, start: usize, end: usize) -> ReturnsPanel {
        let rows = end + 1 - start;
        ReturnsPanel {
            dates: self.dates[start..=end].to_vec(),
            assets: self.assets.clone(),
            returns: self.returns.rows(start, rows).into_owned(),
        }
    }

    pub fn train(&self, w: &WindowSplit) -> ReturnsPanel {
        self.slice(w.train_start, w.train_end)
    }

    pub fn test(&self, w: &WindowSplit) -> ReturnsPanel {
        self.slice(w.test_start, w.test_end)
    }

    /// Rebuild a price panel starting every asset at `initial`.
    pub fn to_prices(&self, initial: f64) -> PricePanel {
        let (t, n) = self.returns.shape();
        let mut prices = DMatrix::from_element(t + 1, n, initial);
        for r in 0..t {
            for c in 0..n {
                prices[(r + 1, c)] = prices[(r, c)] * self.returns[(r, c)].exp();
            }
        }
        let first = self
            .dates
            .first()
            .map(|d| previous_weekday(*d))
            .unwrap_or_else(synthetic_epoch);
        let mut dates = Vec::with_capacity(t + 1);
        dates.push(first);
        dates.extend_from_slice(&self.dates);
        PricePanel {
            dates,
            assets: self.assets.clone(),
            prices,
            market_caps: None,
            dropped: DropReport::default(),
        }
    }
}

pub(crate) fn synthetic_epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(2010, 1, 4).expect("valid date")
}

/// `count` consecutive weekdays starting at `start`.
pub fn business_days(start: NaiveDate, count: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(count);
    let mut d = start;
    while out.len() < count {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d + Days::new(1);
    }
    out
}

fn previous_weekday(d: NaiveDate) -> NaiveDate {
    let mut p = d - Days::new(1);
    while matches!(p.weekday(), Weekday::Sat | Weekday::Sun) {
        p = p - Days::new(1);
    }
    p
}

/// Write a price panel in the wide format [`load_prices`] reads.
pub fn write_prices_csv(panel: &PricePanel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    out.push_str("date");
    for a in &panel.assets {
        out.push(',');
        out.push_str(a);
    }
    out.push('\n');
    for (t, d) in panel.dates.iter().enumerate() {
        out.push_str(&d.format("%Y-%m-%d").to_string());
        for c in 0..panel.prices.ncols() {
            // `{:?}` on f64 round-trips exactly.
            out.push_str(&format!(",{:?}", panel.prices[(t, c)]));
        }
        out.push('\n');
    }
    write_file(path, out.as_bytes())
}

/// `date,label` rows.
pub fn write_labels_csv(dates: &[NaiveDate], labels: &[usize], path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::from("date,label\n");
    for (d, l) in dates.iter().zip(labels) {
        out.push_str(&format!("{},{l}\n", d.format("%Y-%m-%d")));
    }
    write_file(path.as_ref(), out.as_bytes())
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv_file(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    fn panel_from(prices: &[f64]) -> PricePanel {
        let t = prices.len();
        PricePanel {
            dates: business_days(synthetic_epoch(), t),
            assets: vec!["A".into()],
            prices: DMatrix::from_column_slice(t, 1, prices),
            market_caps: None,
            dropped: DropReport::default(),
        }
    }

    #[test]
    fn missing_cell_drops_row() {
        let f = csv_file("date,A,B\n2020-01-01,1,2\n2020-01-02,,2\n2020-01-03,1.5,2.5\n");
        let p = load_prices(f.path(), &CsvSchema::default()).unwrap();
        assert_eq!(p.prices.nrows(), 2);
        assert_eq!(p.dropped.rows, vec![2]);
        assert_eq!(p.dropped.per_asset, vec![("A".to_string(), 1)]);
    }

    #[test]
    fn non_positive_price_drops_row() {
        let f = csv_file("date,A\n2020-01-01,1\n2020-01-02,0\n2020-01-03,-1\n2020-01-06,2\n");
        let p = load_prices(f.path(), &CsvSchema::default()).unwrap();
        assert_eq!(p.dropped.rows, vec![2, 3]);
        assert_eq!(p.prices.nrows(), 2);
    }

    #[test]
    fn unsorted_dates_are_sorted_and_duplicates_rejected() {
        let f = csv_file("date,A\n2020-01-03,3\n2020-01-01,1\n2020-01-02,2\n");
        let p = load_prices(f.path(), &CsvSchema::default()).unwrap();
        assert_eq!(p.prices.column(0).as_slice(), &[1.0, 2.0, 3.0]);
        assert!(p.dates.windows(2).all(|w| w[0] < w[1]));

        let f = csv_file("date,A\n2020-01-01,1\n2020-01-02,2\n2020-01-01,3\n");
        let err = load_prices(f.path(), &CsvSchema::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
    }

    #[test]
    fn empty_file_is_insufficient() {
        let f = csv_file("");
        let err = load_prices(f.path(), &CsvSchema::default()).unwrap_err();
        assert!(matches!(err, Error::InsufficientData(_)), "{err}");
        let f = csv_file("date,A\n2020-01-01,1\n");
        assert!(matches!(
            load_prices(f.path(), &CsvSchema::default()),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn malformed_cell_reports_line() {
        let f = csv_file("date,A\n2020-01-01,1\n2020-01-02,abc\n");
        match load_prices(f.path(), &CsvSchema::default()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let f = csv_file("date,A\n2020-01-01,1,7\n");
        assert!(matches!(
            load_prices(f.path(), &CsvSchema::default()),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn semicolon_delimiter_and_column_subset() {
        let f = csv_file("day;A;B\n2020-01-01;1;5\n2020-01-02;2;6\n");
        let schema = CsvSchema {
            date_column: "day".into(),
            asset_columns: Some(vec!["B".into()]),
            delimiter: ';',
        };
        let p = load_prices(f.path(), &schema).unwrap();
        assert_eq!(p.assets, vec!["B"]);
        assert_eq!(p.prices[(1, 0)], 6.0);
    }

    #[test]
    fn log_return_examples() {
        let r = compute_log_returns(&panel_from(&[100.0, 100.0])).unwrap();
        assert_eq!(r.returns[(0, 0)], 0.0);
        let r = compute_log_returns(&panel_from(&[100.0, 110.0])).unwrap();
        assert!((r.returns[(0, 0)] - 0.0953101798043249).abs() < 1e-15);
        let r = compute_log_returns(&panel_from(&[100.0, 50.0, 100.0])).unwrap();
        assert!((r.returns[(0, 0)] + 2f64.ln()).abs() < 1e-15);
        assert!((r.returns[(1, 0)] - 2f64.ln()).abs() < 1e-15);
        assert!((r.returns[(0, 0)] + r.returns[(1, 0)]).abs() < 1e-15);
        assert!(matches!(
            compute_log_returns(&panel_from(&[100.0])),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn top_cap_selection() {
        let mut p = panel_from(&[1.0, 2.0]);
        p.assets = (1..=5).map(|i| format!("S{i}")).collect();
        p.prices = DMatrix::from_element(2, 5, 1.0);
        assert!(matches!(
            select_assets(&p, SelectionMode::TopCap, 3, 0),
            Err(Error::MissingMetadata(_))
        ));
        p.market_caps = Some(vec![5.0, 4.0, 3.0, 2.0, 1.0]);
        let s = select_assets(&p, SelectionMode::TopCap, 3, 0).unwrap();
        assert_eq!(s.assets, vec!["S1", "S2", "S3"]);
    }

    #[test]
    fn random_selection_is_seeded() {
        let mut p = panel_from(&[1.0, 2.0]);
        p.assets = (0..6).map(|i| format!("S{i}")).collect();
        p.prices = DMatrix::from_fn(2, 6, |r, c| (r + c + 1) as f64);
        let a = select_assets(&p, SelectionMode::Random, 3, 11).unwrap();
        let b = select_assets(&p, SelectionMode::Random, 3, 11).unwrap();
        assert_eq!(a, b);
        let all = select_assets(&p, SelectionMode::Random, 6, 3).unwrap();
        let mut names = all.assets.clone();
        names.sort();
        assert_eq!(names, p.assets);
    }

    #[test]
    fn window_sampling_contract() {
        let panel = ReturnsPanel {
            dates: business_days(synthetic_epoch(), 40),
            assets: vec!["A".into()],
            returns: DMatrix::zeros(40, 1),
        };
        let w = sample_windows(&panel, 30, 10, 5, 1).unwrap();
        assert!(w.iter().all(|s| s.train_start == 0 && s.test_end == 39));
        assert!(matches!(
            sample_windows(&panel, 35, 10, 1, 1),
            Err(Error::InsufficientData(_))
        ));

        let long = ReturnsPanel {
            dates: business_days(synthetic_epoch(), 2520),
            assets: vec!["A".into()],
            returns: DMatrix::zeros(2520, 1),
        };
        let a = sample_windows(&long, 252, 30, 100, 9).unwrap();
        assert_eq!(a, sample_windows(&long, 252, 30, 100, 9).unwrap());
        for s in &a {
            assert_eq!(s.test_start, s.train_end + 1);
            assert_eq!(s.train_days(), 252);
            assert_eq!(s.test_days(), 30);
            assert!(s.test_end < 2520);
        }
    }

    #[test]
    fn prices_round_trip_through_csv() {
        let panel = ReturnsPanel {
            dates: business_days(synthetic_epoch(), 3),
            assets: vec!["A".into(), "B".into()],
            returns: DMatrix::from_row_slice(3, 2, &[0.01, -0.02, 0.0, 0.03, -0.01, 0.005]),
        };
        let f = tempfile::NamedTempFile::new().unwrap();
        write_prices_csv(&panel.to_prices(100.0), f.path()).unwrap();
        let back = compute_log_returns(&load_prices(f.path(), &CsvSchema::default()).unwrap()).unwrap();
        assert_eq!(back.dates, panel.dates);
        assert!((back.returns - &panel.returns).amax() < 1e-14);
    }

    proptest::proptest! {
        #[test]
        fn cumulative_log_returns_reconstruct_log_prices(
            prices in proptest::collection::vec(0.01f64..1e4, 2..60)
        ) {
            let r = compute_log_returns(&panel_from(&prices)).unwrap();
            let mut acc = prices[0].ln();
            for (t, p) in prices.iter().enumerate().skip(1) {
                acc += r.returns[(t - 1, 0)];
                let target = p.ln();
                proptest::prop_assert!((acc - target).abs() <= 1e-12 * target.abs().max(1.0));
            }
        }

        #[test]
        fn windows_have_requested_lengths(
            train in 1usize..50, test in 1usize..20, extra in 0usize..30, seed in 0u64..1000
        ) {
            let t = train + test + extra;
            let panel = ReturnsPanel {
                dates: business_days(synthetic_epoch(), t),
                assets: vec!["A".into()],
                returns: DMatrix::zeros(t, 1),
            };
            for w in sample_windows(&panel, train, test, 7, seed).unwrap() {
                proptest::prop_assert_eq!(w.test_start - w.train_start, train);
                proptest::prop_assert_eq!(w.test_end - w.test_start + 1, test);
                proptest::prop_assert!(w.test_end < t);
            }
        }
    }
}
