//! Empirical stage detection on a recorded loss curve.
//!
//! * descent: first record with `K >= 1 - beta`;
//! * plateau: last record before the descent milestone whose cumulative loss
//!   drop from `t = 0` is at most `eps (R(0) - R(T_d))`;
//! * secondary plateau: first record after the descent milestone whose loss is
//!   more than `eps R(T_d)` below `R(T_d)`.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{predict_milestones, Predictions};
use crate::dynamics::{Record, Trajectory};
use crate::error::{Error, Result};

/// Detection needs at least this many records.
pub const MIN_RECORDS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MilestoneReport {
    pub t_p_emp: Option<f64>,
    pub t_d_emp: Option<f64>,
    pub t_sp_emp: Option<f64>,
    pub t_p_pred: f64,
    pub t_d_pred: f64,
    pub t_sp_pred: f64,
    pub alpha1: f64,
    pub gamma1: f64,
    pub beta: f64,
    pub plateau_eps: f64,
    pub index_p: Option<usize>,
    pub index_d: Option<usize>,
    pub index_sp: Option<usize>,
    /// `|R(T_p) - R(0)| / T_p`
    pub rate_plateau: Option<f64>,
    /// `|R(T_d) - R(T_p)| / (T_d - T_p)`
    pub rate_descent: Option<f64>,
    /// `|R(T_sp) - R(T_d)| / (T_sp - T_d)`
    pub rate_secondary: Option<f64>,
    pub ratio_descent_plateau: Option<f64>,
    pub ratio_secondary_descent: Option<f64>,
}

/// Crossing indices found on raw series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Crossings {
    pub plateau: Option<usize>,
    pub descent: Option<usize>,
    pub secondary: Option<usize>,
}

/// Runs the three detectors on parallel `t`, `loss`, `k` series.
pub fn detect_crossings(t: &[f64], loss: &[f64], k: &[f64], beta: f64, eps: f64) -> Result<Crossings> {
    let n = t.len();
    if loss.len() != n || k.len() != n {
        return Err(Error::Dimension("series lengths differ".into()));
    }
    if n < MIN_RECORDS {
        return Err(Error::TooFewRecords { need: MIN_RECORDS, got: n });
    }
    for i in 1..n {
        if !(t[i] > t[i - 1]) {
            return Err(Error::TimeAxis { index: i });
        }
    }
    let descent = k.iter().position(|&v| v >= 1.0 - beta);
    let Some(d) = descent else {
        return Ok(Crossings { plateau: None, descent: None, secondary: None });
    };
    let total_drop = loss[0] - loss[d];
    let plateau = (0..d).rev().find(|&i| loss[0] - loss[i] <= eps * total_drop);
    let level = loss[d] - eps * loss[d];
    let secondary = (d + 1..n).find(|&i| loss[i] < level);
    Ok(Crossings { plateau, descent, secondary })
}

pub fn detect_milestones(trajectory: &Trajectory, beta: f64, plateau_eps: f64) -> Result<MilestoneReport> {
    let cfg = &trajectory.config;
    let pred = predict_milestones(cfg.alpha, cfg.m as f64, beta)?;
    detect_on_records(&trajectory.records, beta, plateau_eps, pred)
}

pub fn detect_on_records(
    records: &[Record],
    beta: f64,
    plateau_eps: f64,
    pred: Predictions,
) -> Result<MilestoneReport> {
    if !(beta > 0.0 && beta < 1.0) || !(plateau_eps > 0.0 && plateau_eps < 1.0) {
        return Err(Error::Domain("beta and plateau_eps must lie in (0, 1)".into()));
    }
    let t: Vec<f64> = records.iter().map(|r| r.t).collect();
    let loss: Vec<f64> = records.iter().map(|r| r.loss).collect();
    let k: Vec<f64> = records.iter().map(|r| r.k).collect();
    let c = detect_crossings(&t, &loss, &k, beta, plateau_eps)?;
    let at = |i: Option<usize>| i.map(|i| t[i]);
    let t0 = t[0];
    let rate = |from: Option<usize>, to: Option<usize>| match (from, to) {
        (Some(i), Some(j)) if t[j] > t[i] => Some((loss[j] - loss[i]).abs() / (t[j] - t[i])),
        _ => None,
    };
    let rate_plateau = match c.plateau {
        Some(p) if t[p] > t0 => Some((loss[p] - loss[0]).abs() / (t[p] - t0)),
        _ => None,
    };
    let rate_descent = rate(c.plateau, c.descent);
    let rate_secondary = rate(c.descent, c.secondary);
    let ratio = |num: Option<f64>, den: Option<f64>| match (num, den) {
        (Some(n), Some(d)) if d > 0.0 => Some(n / d),
        _ => None,
    };
    Ok(MilestoneReport {
        t_p_emp: at(c.plateau),
        t_d_emp: at(c.descent),
        t_sp_emp: at(c.secondary),
        t_p_pred: pred.t_p,
        t_d_pred: pred.t_d,
        t_sp_pred: pred.t_sp,
        alpha1: pred.alpha1,
        gamma1: pred.gamma1,
        beta,
        plateau_eps,
        index_p: c.plateau,
        index_d: c.descent,
        index_sp: c.secondary,
        rate_plateau,
        rate_descent,
        rate_secondary,
        ratio_descent_plateau: ratio(rate_descent, rate_plateau),
        ratio_secondary_descent: ratio(rate_secondary, rate_descent),
    })
}
