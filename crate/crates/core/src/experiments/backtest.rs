//! Rolling-window backtests on monthly factor/return series.

use std::io::{Read, Write};

use rayon::prelude::*;

use super::policies::{cross_validate, decide, portfolio_return, CalibrationObjective, HyperPoint, PolicyKind, PolicySpec, ProblemSetup, CVAR_LEVEL};
use crate::error::{invalid, Error, Result};
use crate::estimators::{kernel_mass, Dataset, KernelSpec};

/// Monthly rows: factors as covariates, asset returns as outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub dates: Vec<String>,
    pub data: Dataset,
}

fn valid_month(date: &str) -> bool {
    let b = date.as_bytes();
    let digit = |i: usize| b[i].is_ascii_digit();
    let shape = match b.len() {
        7 => true,
        10 => b[7] == b'-' && digit(8) && digit(9),
        _ => return false,
    };
    shape && (0..4).all(digit) && b[4] == b'-' && digit(5) && digit(6) && (1..=12).contains(&((b[5] - b'0') * 10 + b[6] - b'0'))
}

/// Reads `date,<factor_1..factor_k>,<asset_1..asset_d>` with `factors`
/// factor columns. Dates are `YYYY-MM` (or `YYYY-MM-DD`), strictly
/// increasing. Errors carry the 1-based line number (header is line 1).
pub fn read_backtest_csv<R: Read>(reader: R, factors: usize) -> Result<TimeSeries> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| Error::Ingestion { row: 1, message: e.to_string() })?.clone();
    if header.get(0) != Some("date") {
        return Err(Error::Ingestion { row: 1, message: "first column must be `date`".into() });
    }
    if header.len() < factors + 2 || factors == 0 {
        return Err(Error::Ingestion {
            row: 1,
            message: format!("need a date column, {factors} factor column(s) and at least one asset column, found {} columns", header.len()),
        });
    }
    let mut dates: Vec<String> = Vec::new();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 2;
        let rec = rec.map_err(|e| Error::Ingestion { row, message: e.to_string() })?;
        if rec.len() != header.len() {
            return Err(Error::Ingestion { row, message: format!("expected {} fields, found {}", header.len(), rec.len()) });
        }
        let date = rec[0].to_string();
        if !valid_month(&date) {
            return Err(Error::Ingestion { row, message: format!("bad date `{date}`, expected YYYY-MM") });
        }
        if let Some(prev) = dates.last() {
            if *prev >= date {
                return Err(Error::Ingestion { row, message: format!("date `{date}` does not follow `{prev}`") });
            }
        }
        let mut nums = Vec::with_capacity(rec.len() - 1);
        for (c, field) in rec.iter().enumerate().skip(1) {
            match field.parse::<f64>() {
                Ok(v) if v.is_finite() => nums.push(v),
                _ => {
                    return Err(Error::Ingestion { row, message: format!("column `{}`: `{field}` is not a finite number", &header[c]) });
                }
            }
        }
        dates.push(date);
        ys.push(nums.split_off(factors));
        xs.push(nums);
    }
    if dates.is_empty() {
        return Err(Error::Ingestion { row: 2, message: "no data rows".into() });
    }
    Ok(TimeSeries { dates, data: Dataset::new(xs, ys)? })
}

/// Writes `series` in the format read by [`read_backtest_csv`], values with
/// eight decimals.
pub fn write_backtest_csv<W: Write>(writer: W, series: &TimeSeries) -> Result<()> {
    let io = |e: csv::Error| Error::InvalidInput(format!("write failed: {e}"));
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["date".to_string()];
    header.extend((1..=series.data.dx()).map(|k| format!("factor_{k}")));
    header.extend((1..=series.data.dy()).map(|k| format!("asset_{k}")));
    w.write_record(&header).map_err(io)?;
    for ((date, x), y) in series.dates.iter().zip(series.data.covariates()).zip(series.data.outcomes()) {
        let mut rec = vec![date.clone()];
        rec.extend(x.iter().chain(y).map(|v| format!("{v:.8}")));
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| Error::InvalidInput(format!("write failed: {e}")))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    /// `−mean(R) + CVaR_φ(−R)`.
    pub obj: f64,
    /// `mean(R) / std(R)`; `None` when the standard deviation is zero.
    pub sharpe: Option<f64>,
    /// `mean(R) − std(R)²`.
    pub cer: f64,
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (divisor `n − 1`; zero for one value).
pub fn std_dev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}

pub fn sharpe_ratio(values: &[f64]) -> Option<f64> {
    let s = std_dev(values);
    (s > 0.0).then(|| mean(values) / s)
}

/// Empirical `CVaR_φ` of `losses`: the mean of the worst `φ` fraction, the
/// boundary sample entering with its fractional weight.
pub fn empirical_cvar(losses: &[f64], phi: f64) -> f64 {
    let mut sorted = losses.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let tail = phi * sorted.len() as f64;
    let whole = (tail.floor() as usize).min(sorted.len());
    let mut total: f64 = sorted[..whole].iter().sum();
    let frac = tail - whole as f64;
    if frac > 0.0 && whole < sorted.len() {
        total += frac * sorted[whole];
    }
    total / tail
}

pub fn metrics(returns: &[f64], phi: f64) -> Result<MetricReport> {
    if returns.is_empty() || !(phi > 0.0 && phi <= 1.0) {
        return invalid("metrics need returns and φ ∈ (0, 1]");
    }
    let losses: Vec<f64> = returns.iter().map(|r| -r).collect();
    let (m, s) = (mean(returns), std_dev(returns));
    Ok(MetricReport { obj: -m + empirical_cvar(&losses, phi), sharpe: sharpe_ratio(returns), cer: m - s * s })
}

/// `Σ_i K((x − x_i)/h)`.
pub fn effective_samples(data: &Dataset, x: &[f64], spec: &KernelSpec) -> f64 {
    kernel_mass(data, x, spec)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestMonth {
    pub date: String,
    pub chosen: HyperPoint,
    pub decision: Vec<f64>,
    pub portfolio_return: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestResult {
    pub months: Vec<BacktestMonth>,
    pub returns: Vec<f64>,
    pub metrics: MetricReport,
}

/// For each month `t ≥ window` (0-based), trains on rows `t − window .. t`,
/// calibrates by `folds`-fold cross-validation on the training window
/// (largest Sharpe ratio), decides at `x_t`, and records `Σ_k z_k y_{t,k}`
/// (for equal weights, the row mean of `y_t`).
pub fn rolling_backtest(series: &TimeSeries, window: usize, folds: usize, policy: &PolicySpec, setup: &ProblemSetup) -> Result<BacktestResult> {
    let total = series.data.len();
    if window < 2 || total <= window {
        return invalid(format!("series of {total} rows is not longer than the window {window}"));
    }
    let months: Vec<BacktestMonth> = (window..total)
        .into_par_iter()
        .map(|t| {
            let train = series.data.slice(t - window, t)?;
            let chosen = cross_validate(policy, setup, &train, folds, CalibrationObjective::Sharpe)?.chosen;
            let decision = decide(&policy.with_point(chosen), setup, &train, &series.data.covariates()[t])?;
            let y = &series.data.outcomes()[t];
            let portfolio_return = if policy.kind == PolicyKind::Ew { mean(y) } else { portfolio_return(&decision, y) };
            Ok(BacktestMonth { date: series.dates[t].clone(), chosen, decision, portfolio_return })
        })
        .collect::<Result<_>>()?;
    let returns: Vec<f64> = months.iter().map(|m| m.portfolio_return).collect();
    let metrics = metrics(&returns, CVAR_LEVEL)?;
    Ok(BacktestResult { months, returns, metrics })
}
