//! Macroscopic order parameters, amplitude distributions, theory-side
//! milestone predictions and the per-state diagnostics used by the checks.

use serde::{Deserialize, Serialize};

use crate::activation::Activation;
use crate::dataset::Dataset;
use crate::dynamics::{Record, Trajectory};
use crate::error::{Error, Result};
use crate::model::risk_and_gradient;
use crate::state::NetworkState;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroQuantities {
    /// `K = sum_k a_k w_k^1`
    pub k: f64,
    /// `K' = sum_k (a_k^2 + (w_k^1)^2)`
    pub k_prime: f64,
    /// `max_{k,i} {|a_k|, |w_k^i|}`
    pub q_max: f64,
    pub norm_a: f64,
    pub norm_w: f64,
    /// `sum_k (w_k^i)^2` for each input direction `i`.
    pub dir_sums: Vec<f64>,
}

pub fn macro_quantities(state: &NetworkState) -> MacroQuantities {
    let d = state.d();
    let mut k = 0.0;
    let mut sum_a2 = 0.0;
    let mut dir_sums = vec![0.0; d];
    for (ak, row) in state.a().iter().zip(state.w().chunks_exact(d)) {
        k += ak * row[0];
        sum_a2 += ak * ak;
        for (acc, w) in dir_sums.iter_mut().zip(row) {
            *acc += w * w;
        }
    }
    let q_max = state.params().fold(0.0f64, |acc, v| acc.max(v.abs()));
    MacroQuantities {
        k,
        k_prime: sum_a2 + dir_sums[0],
        q_max,
        norm_a: sum_a2.sqrt(),
        norm_w: dir_sums.iter().sum::<f64>().sqrt(),
        dir_sums,
    }
}

/// Empirical distributions of `|a_k|` and `||w_k||_2`, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeDistributions {
    pub outer: Vec<f64>,
    pub inner: Vec<f64>,
}

pub fn amplitude_distributions(state: &NetworkState) -> AmplitudeDistributions {
    let mut outer: Vec<f64> = state.a().iter().map(|v| v.abs()).collect();
    let mut inner: Vec<f64> = state
        .w()
        .chunks_exact(state.d())
        .map(|row| row.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    outer.sort_by(f64::total_cmp);
    inner.sort_by(f64::total_cmp);
    AmplitudeDistributions { outer, inner }
}

/// 2-Wasserstein distance between two empirical measures with the same number
/// of equally weighted atoms: the monotone rearrangement is optimal in 1-D, so
/// it is the RMS gap between order statistics. Inputs need not be sorted.
pub fn wasserstein_1d(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!("{} atoms vs {} atoms", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(Error::Degenerate("empty measures".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let sum: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((sum / a.len() as f64).sqrt())
}

/// `W2(rho_|a|, rho_||w||) / sqrt(mean a_k^2)`.
pub fn relative_w2(state: &NetworkState) -> Result<f64> {
    let dist = amplitude_distributions(state);
    let rms = (dist.outer.iter().map(|v| v * v).sum::<f64>() / state.m() as f64).sqrt();
    if rms == 0.0 {
        return Err(Error::Degenerate("outer weights are all zero".into()));
    }
    let sum: f64 = dist.outer.iter().zip(&dist.inner).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((sum / state.m() as f64).sqrt() / rms)
}

/// `sum_k ||w_k||^2 / sum_k (w_k^1)^2`, at least 1.
pub fn condensation_ratio(state: &NetworkState) -> Result<f64> {
    condensation_from_sums(&macro_quantities(state).dir_sums)
}

pub(crate) fn condensation_from_sums(dir_sums: &[f64]) -> Result<f64> {
    if dir_sums[0] == 0.0 {
        return Err(Error::Degenerate("no weight along the first input direction".into()));
    }
    Ok(dir_sums.iter().sum::<f64>() / dir_sums[0])
}

/// `||grad R||_inf / ||theta||_inf`.
pub fn critical_point_ratio(state: &NetworkState, data: &Dataset, act: &Activation) -> Result<f64> {
    let theta = state.params().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if theta == 0.0 {
        return Err(Error::Degenerate("parameter vector is zero".into()));
    }
    let (_, grad) = risk_and_gradient(state, data, act)?;
    Ok(grad.inf_norm() / theta)
}

fn check_time_axis(records: &[Record]) -> Result<()> {
    for i in 1..records.len() {
        if !(records[i].t > records[i - 1].t) {
            return Err(Error::TimeAxis { index: i });
        }
    }
    Ok(())
}

/// Records whose time lies in `[window.0, window.1]`, as an index range.
fn window_range(records: &[Record], window: (f64, f64)) -> std::ops::Range<usize> {
    let start = records.partition_point(|r| r.t < window.0);
    let end = records.partition_point(|r| r.t <= window.1);
    start..end.max(start)
}

/// `|4 K dK/dt - K' dK'/dt| / K'^2` at each interior record of the window,
/// with centered differences on the recorded series. Returns `(t, value)`.
pub fn conservation_residual(trajectory: &Trajectory, window: (f64, f64)) -> Result<Vec<(f64, f64)>> {
    conservation_residual_of(&trajectory.records, window)
}

pub fn conservation_residual_of(records: &[Record], window: (f64, f64)) -> Result<Vec<(f64, f64)>> {
    check_time_axis(records)?;
    let range = window_range(records, window);
    if range.len() < 3 {
        return Err(Error::TooFewRecords { need: 3, got: range.len() });
    }
    Ok((range.start + 1..range.end - 1)
        .map(|i| {
            let (prev, cur, next) = (&records[i - 1], &records[i], &records[i + 1]);
            let dt = next.t - prev.t;
            let dk = (next.k - prev.k) / dt;
            let dkp = (next.k_prime - prev.k_prime) / dt;
            let value = (4.0 * cur.k * dk - cur.k_prime * dkp).abs() / (cur.k_prime * cur.k_prime);
            (cur.t, value)
        })
        .collect())
}

/// `K / K'` at every record of the window.
pub fn k_ratio_series(records: &[Record], window: (f64, f64)) -> Vec<(f64, f64)> {
    records[window_range(records, window)].iter().map(|r| (r.t, r.k / r.k_prime)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Predictions {
    pub t_p: f64,
    pub t_d: f64,
    pub t_sp: f64,
    pub alpha1: f64,
    pub gamma1: f64,
}

/// Theory-side milestones from `(alpha, m, beta)` alone; natural logarithm.
pub fn predict_milestones(alpha: f64, m: f64, beta: f64) -> Result<Predictions> {
    if !(alpha > 0.5) || !alpha.is_finite() {
        return Err(Error::Domain(format!("alpha must exceed 1/2, got {alpha}")));
    }
    if !(m >= 2.0) || !m.is_finite() {
        return Err(Error::Domain(format!("m must be at least 2, got {m}")));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Domain(format!("beta must lie in (0, 1), got {beta}")));
    }
    let log_m = m.ln();
    let (alpha1, gamma1, t_p) = if alpha <= 1.5 {
        (alpha / 2.0 + 0.25, 1.5 * alpha - 0.25, (2.0 * alpha - 1.0) / 4.0 * log_m)
    } else {
        (1.0, 2.0, (alpha - 1.0) * log_m)
    };
    let t_d = (2.0 * alpha - 1.0) / 2.0 * log_m;
    let t_sp = t_d + log_m / (40.0 * beta);
    Ok(Predictions { t_p, t_d, t_sp, alpha1, gamma1 })
}

/// Bound on the deviation from the linearized flow at the plateau milestone:
/// `slack (log m)^3 / m^gamma1`.
pub fn r_max_bound(alpha: f64, m: f64, slack: f64) -> Result<f64> {
    let pred = predict_milestones(alpha, m, 0.5)?;
    Ok(slack * m.ln().powi(3) / m.powf(pred.gamma1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Departure {
    /// `sum_s rho_s x_s^4`
    pub c4: f64,
    /// `sum_s rho_s f(x_s) x_s^3`
    pub b3: f64,
    /// `(d/dt sum a_k^2) / (d/dt sum w_k^2)`; infinite when the denominator
    /// vanishes (see `denominator_zero`).
    pub layer_rate_ratio: f64,
    pub denominator_zero: bool,
}

/// Layer asymmetry on a 1-D problem, from the exact gradient:
/// `d/dt sum a_k^2 = -2 a . grad_a`, `d/dt sum w_k^2 = -2 w . grad_w`.
pub fn departure_diagnostic(state: &NetworkState, data: &Dataset, act: &Activation) -> Result<Departure> {
    if state.d() != 1 || data.d() != 1 {
        return Err(Error::Dimension("departure diagnostic needs d = 1".into()));
    }
    let (mut c4, mut b3) = (0.0, 0.0);
    for s in 0..data.n() {
        let x = data.points()[s];
        let rho = data.weights()[s];
        c4 += rho * x.powi(4);
        b3 += rho * data.targets()[s] * x.powi(3);
    }
    let (_, grad) = risk_and_gradient(state, data, act)?;
    let num: f64 = state.a().iter().zip(&grad.a).map(|(a, g)| a * g).sum();
    let den: f64 = state.w().iter().zip(&grad.w).map(|(w, g)| w * g).sum();
    let (layer_rate_ratio, denominator_zero) =
        if den == 0.0 { (f64::INFINITY, true) } else { (num / den, false) };
    Ok(Departure { c4, b3, layer_rate_ratio, denominator_zero })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(a: Vec<f64>, w: Vec<f64>, d: usize) -> NetworkState {
        NetworkState::new(a, w, d, 0.0).unwrap()
    }

    #[test]
    fn macro_quantities_direct() {
        let q = macro_quantities(&state(vec![0.3, -0.2], vec![0.5, 0.1], 1));
        assert!((q.k - 0.13).abs() < 1e-15);
        assert!((q.k_prime - 0.39).abs() < 1e-15);
        assert_eq!(q.q_max, 0.5);
        let z = macro_quantities(&state(vec![0.0, 0.0], vec![0.5, 0.1], 1));
        assert_eq!(z.k, 0.0);
        assert!((z.k_prime - 0.26).abs() < 1e-15);
    }

    #[test]
    fn wasserstein_two_atoms() {
        assert!((wasserstein_1d(&[0.0, 2.0], &[1.0, 3.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(wasserstein_1d(&[0.3, 0.1], &[0.1, 0.3]).unwrap(), 0.0);
        assert!(wasserstein_1d(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn condensation_first_column_only() {
        let s = state(vec![1.0, 1.0], vec![0.5, 0.0, -0.2, 0.0], 2);
        assert_eq!(condensation_ratio(&s).unwrap(), 1.0);
        let s = state(vec![1.0], vec![0.0, 1.0], 2);
        assert!(condensation_ratio(&s).is_err());
    }

    #[test]
    fn relative_w2_matching_amplitudes() {
        let s = state(vec![0.3, -0.4], vec![0.0, -0.3, 0.4, 0.0], 2);
        assert_eq!(relative_w2(&s).unwrap(), 0.0);
        assert!(relative_w2(&state(vec![0.0], vec![1.0], 1)).is_err());
    }

    #[test]
    fn predictions_table() {
        let m = 4f64.exp();
        let p = predict_milestones(1.0, m, 0.05).unwrap();
        assert!((p.t_p - 1.0).abs() < 1e-12 && (p.t_d - 2.0).abs() < 1e-12);
        assert_eq!((p.alpha1, p.gamma1), (0.75, 1.25));
        assert!((p.t_sp - p.t_d - 2.0).abs() < 1e-12);
        let p = predict_milestones(2.0, m, 0.05).unwrap();
        assert!((p.t_p - 4.0).abs() < 1e-12 && (p.t_d - 6.0).abs() < 1e-12);
        assert_eq!((p.alpha1, p.gamma1), (1.0, 2.0));
        assert!(predict_milestones(0.5, m, 0.05).is_err());
        assert!(predict_milestones(1.0, 1.0, 0.05).is_err());
        assert!(predict_milestones(1.0, m, 1.0).is_err());
    }

    #[test]
    fn predictions_continuous_at_three_halves() {
        let m = 1e4;
        let below = predict_milestones(1.5, m, 0.05).unwrap().t_p;
        let above = predict_milestones(1.5 + 1e-12, m, 0.05).unwrap().t_p;
        assert!((below - 0.5 * m.ln()).abs() < 1e-12);
        assert!((above - below).abs() < 1e-9);
    }

    #[test]
    fn departure_identity_is_symmetric() {
        let data = Dataset::grid(crate::dataset::Target::F3, 200, -3.0, 3.0).unwrap().normalize().unwrap();
        let s = state(vec![0.2, -0.1, 0.05], vec![0.1, 0.3, -0.2], 1);
        let dep = departure_diagnostic(&s, &data, &Activation::identity()).unwrap();
        assert!((dep.layer_rate_ratio - 1.0).abs() < 1e-12, "{}", dep.layer_rate_ratio);
        assert!(!dep.denominator_zero);
        let s2 = state(vec![0.1], vec![0.1, 0.2], 2);
        let data2 = data.pad_sign_directions(1).unwrap();
        assert!(departure_diagnostic(&s2, &data2, &Activation::identity()).is_err());
    }
}
