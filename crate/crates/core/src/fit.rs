//! Ordinary least squares of the descent milestone against `ln m` or `alpha`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::export::fmt_num;
use crate::sweep::SweepRow;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Covariate {
    #[serde(rename = "log m")]
    LogM,
    #[serde(rename = "alpha")]
    Alpha,
}

impl fmt::Display for Covariate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Covariate::LogM => "log m",
            Covariate::Alpha => "alpha",
        })
    }
}

impl FromStr for Covariate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "log m" | "log-m" | "logm" => Ok(Covariate::LogM),
            "alpha" => Ok(Covariate::Alpha),
            other => Err(Error::Parse(format!("unknown covariate '{other}'"))),
        }
    }
}

/// How seeds enter the regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMode {
    /// One point per cell: the mean over its seeds.
    CellMean,
    /// One point per seed.
    Pooled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub covariate: Covariate,
    pub mode: FitMode,
    /// Factors held fixed, e.g. `alpha=1 target=f1`.
    pub group: String,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub residuals: Vec<f64>,
}

/// `y = slope x + intercept`. Needs at least 3 distinct `x` values.
pub fn ols(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64, Vec<f64>)> {
    if x.len() != y.len() {
        return Err(Error::Dimension("x and y lengths differ".into()));
    }
    let mut distinct = x.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::RankDeficient(format!("{} distinct covariate values, need 3", distinct.len())));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(u, v)| (u - mx) * (v - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = x.iter().zip(y).map(|(u, v)| v - (slope * u + intercept)).collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let ss_tot: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    let r2 = if ss_tot > 0.0 { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) } else if ss_res == 0.0 { 1.0 } else { 0.0 };
    if !slope.is_finite() || !intercept.is_finite() {
        return Err(Error::RankDeficient("non-finite coefficients".into()));
    }
    Ok((slope, intercept, r2, residuals))
}

/// Fits `T_d_emp` against the covariate within each group of the other
/// factors. Rows without a descent milestone are skipped, as are groups with
/// fewer than 3 distinct covariate values; it is an error if no group remains.
pub fn fit_sweep(rows: &[SweepRow], covariate: Covariate, mode: FitMode) -> Result<Vec<FitResult>> {
    // group label -> covariate bits -> values
    let mut groups: BTreeMap<String, BTreeMap<u64, (f64, Vec<f64>)>> = BTreeMap::new();
    for r in rows {
        let Some(td) = r.t_d_emp else { continue };
        let (label, x) = match covariate {
            Covariate::LogM => (format!("alpha={} target={}", fmt_num(r.key.alpha), r.key.target), (r.key.m as f64).ln()),
            Covariate::Alpha => (format!("m={} target={}", r.key.m, r.key.target), r.key.alpha),
        };
        let cells = groups.entry(label).or_default();
        cells.entry(x.to_bits()).or_insert_with(|| (x, Vec::new())).1.push(td);
    }
    let mut results = Vec::new();
    let mut last_err = None;
    for (group, cells) in groups {
        let mut cells: Vec<(f64, Vec<f64>)> = cells.into_values().collect();
        cells.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (x, y): (Vec<f64>, Vec<f64>) = match mode {
            FitMode::CellMean => {
                cells.iter().map(|(x, ys)| (*x, ys.iter().sum::<f64>() / ys.len() as f64)).unzip()
            }
            FitMode::Pooled => cells.iter().flat_map(|(x, ys)| ys.iter().map(move |y| (*x, *y))).unzip(),
        };
        match ols(&x, &y) {
            Ok((slope, intercept, r2, residuals)) => {
                results.push(FitResult { covariate, mode, group, slope, intercept, r2, x, y, residuals })
            }
            Err(e) => last_err = Some(e),
        }
    }
    if results.is_empty() {
        return Err(last_err.unwrap_or_else(|| Error::RankDeficient("no rows with a descent milestone".into())));
    }
    Ok(results)
}
