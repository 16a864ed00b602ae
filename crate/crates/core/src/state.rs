use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::rng::{GaussianStream, STREAM_INNER, STREAM_OUTER};

/// Parameters `theta = (a, W)` of `f(x) = sum_k a_k sigma(w_k . x)` at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkState {
    a: Vec<f64>,
    /// Row-major `m x d`; row `k` is `w_k`.
    w: Vec<f64>,
    d: usize,
    t: f64,
}

impl NetworkState {
    pub fn new(a: Vec<f64>, w: Vec<f64>, d: usize, t: f64) -> Result<Self> {
        let state = Self { a, w, d, t };
        state.validate()?;
        Ok(state)
    }

    pub fn zeros(m: usize, d: usize) -> Result<Self> {
        Self::new(vec![0.0; m], vec![0.0; m * d], d, 0.0)
    }

    fn validate(&self) -> Result<()> {
        if self.a.is_empty() {
            return Err(Error::Dimension("m must be at least 1".into()));
        }
        if self.d == 0 {
            return Err(Error::Dimension("d must be at least 1".into()));
        }
        if self.w.len() != self.a.len() * self.d {
            return Err(Error::Dimension(format!(
                "W has {} entries, expected {} x {}",
                self.w.len(),
                self.a.len(),
                self.d
            )));
        }
        if !(self.t >= 0.0) || !self.t.is_finite() {
            return Err(Error::Config(format!("time must be finite and nonnegative, got {}", self.t)));
        }
        if !self.all_finite() {
            return Err(Error::NonFinite { t: self.t });
        }
        Ok(())
    }

    pub(crate) fn all_finite(&self) -> bool {
        self.a.iter().chain(&self.w).all(|v| v.is_finite())
    }

    pub fn m(&self) -> usize {
        self.a.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    /// Row-major `m x d`.
    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.w[k * self.d..(k + 1) * self.d]
    }

    /// Column `i` of `W` (0-based), i.e. `(w_1^i, ..., w_m^i)`.
    pub fn column(&self, i: usize) -> Vec<f64> {
        self.w.iter().skip(i).step_by(self.d).copied().collect()
    }

    /// Same parameters at a different time.
    pub fn with_time(mut self, t: f64) -> Result<Self> {
        self.t = t;
        self.validate()?;
        Ok(self)
    }

    /// `(s a, s W)`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(
            self.a.iter().map(|v| v * s).collect(),
            self.w.iter().map(|v| v * s).collect(),
            self.d,
            self.t,
        )
    }

    /// Neurons reordered so that new neuron `k` is old neuron `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.m() {
            return Err(Error::Dimension("permutation length differs from m".into()));
        }
        let mut seen = vec![false; perm.len()];
        for &p in perm {
            if p >= perm.len() || std::mem::replace(&mut seen[p], true) {
                return Err(Error::Dimension("not a permutation".into()));
            }
        }
        let a = perm.iter().map(|&p| self.a[p]).collect();
        let w = perm.iter().flat_map(|&p| self.row(p).iter().copied()).collect();
        Self::new(a, w, self.d, self.t)
    }

    /// Flat view `(a, W)` used for infinity norms.
    pub fn params(&self) -> impl Iterator<Item = f64> + '_ {
        self.a.iter().chain(&self.w).copied()
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut [f64], &mut [f64], &mut f64) {
        (&mut self.a, &mut self.w, &mut self.t)
    }
}

/// Draws `a_k, w_k^i ~ N(0, m^{-2 alpha})` from the seeded streams documented
/// in [`crate::rng`]: `a` from stream 0, `W` row-major from stream 1.
pub fn init_params(config: &RunConfig) -> Result<NetworkState> {
    config.validate()?;
    let std_dev = (config.m as f64).powf(-config.alpha);
    let mut a = vec![0.0; config.m];
    let mut w = vec![0.0; config.m * config.d];
    GaussianStream::new(config.seed, STREAM_OUTER).fill_normal(&mut a, std_dev);
    GaussianStream::new(config.seed, STREAM_INNER).fill_normal(&mut w, std_dev);
    NetworkState::new(a, w, config.d, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_checks() {
        assert!(NetworkState::new(vec![], vec![], 1, 0.0).is_err());
        assert!(NetworkState::new(vec![1.0], vec![1.0, 2.0], 1, 0.0).is_err());
        assert!(NetworkState::new(vec![1.0], vec![f64::NAN], 1, 0.0).is_err());
        assert!(NetworkState::new(vec![1.0], vec![1.0], 1, -1.0).is_err());
        let s = NetworkState::new(vec![1.0, 2.0], vec![1.0, 2.0, 3.0, 4.0], 2, 0.0).unwrap();
        assert_eq!(s.column(1), vec![2.0, 4.0]);
        assert_eq!(s.row(1), &[3.0, 4.0]);
    }

    #[test]
    fn init_is_deterministic() {
        let cfg = RunConfig { m: 4, d: 1, alpha: 1.0, seed: 7, ..RunConfig::default() };
        let s1 = init_params(&cfg).unwrap();
        let s2 = init_params(&cfg).unwrap();
        assert_eq!(s1, s2);
        let other = init_params(&RunConfig { seed: 8, ..cfg }).unwrap();
        assert_ne!(s1, other);
        assert_eq!(s1.t(), 0.0);
    }

    #[test]
    fn init_scale() {
        let cfg = RunConfig { m: 10_000, d: 2, alpha: 1.0, seed: 1, ..RunConfig::default() };
        let s = init_params(&cfg).unwrap();
        let var_a = s.a().iter().map(|v| v * v).sum::<f64>() / 1e4;
        let var_w = s.w().iter().map(|v| v * v).sum::<f64>() / 2e4;
        assert!((var_a * 1e8 - 1.0).abs() < 0.05);
        assert!((var_w * 1e8 - 1.0).abs() < 0.05);
    }

    #[test]
    fn permutation_roundtrip() {
        let s = NetworkState::new(vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 2, 0.0)
            .unwrap();
        let p = s.permuted(&[2, 0, 1]).unwrap();
        assert_eq!(p.a(), &[3.0, 1.0, 2.0]);
        assert_eq!(p.row(0), &[5.0, 6.0]);
        assert!(s.permuted(&[0, 0, 1]).is_err());
    }
}
