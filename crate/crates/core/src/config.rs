use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::activation::Activation;
use crate::dataset::{Dataset, Target};
use crate::error::{Error, Result};

/// Largest accepted step size.
pub const MAX_STEP_SIZE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    #[default]
    Euler,
    Rk4,
}

impl fmt::Display for Integrator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Integrator::Euler => "euler",
            Integrator::Rk4 => "rk4",
        })
    }
}

impl FromStr for Integrator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" => Ok(Integrator::Euler),
            "rk4" => Ok(Integrator::Rk4),
            other => Err(Error::Config(format!("unknown integrator '{other}'"))),
        }
    }
}

/// Built-in grid dataset: `n` equidistant points on `[lo, hi]`, uniform
/// weights, targets from `target`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSpec {
    pub target: Target,
    pub n: usize,
    pub lo: f64,
    pub hi: f64,
    pub normalize: bool,
}

impl Default for DataSpec {
    fn default() -> Self {
        Self { target: Target::F1, n: 1000, lo: -15.0, hi: 15.0, normalize: true }
    }
}

impl DataSpec {
    /// Builds the grid in dimension `d`. For `d > 1` the 1-D grid is padded
    /// with `d - 1` sign directions (see [`Dataset::pad_sign_directions`]);
    /// normalization, when requested, is applied last.
    pub fn build(&self, d: usize) -> Result<Dataset> {
        if d == 0 {
            return Err(Error::Config("d must be at least 1".into()));
        }
        let mut data = Dataset::grid(self.target, self.n, self.lo, self.hi)?;
        if d > 1 {
            data = data.pad_sign_directions(d - 1)?;
        }
        if self.normalize {
            data = data.normalize()?;
        }
        Ok(data)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub m: usize,
    pub d: usize,
    pub alpha: f64,
    pub seed: u64,
    pub step_size: f64,
    pub max_time: f64,
    pub record_stride: usize,
    /// Descent threshold: the descent milestone fires at `K >= 1 - beta`.
    pub beta: f64,
    /// Relative loss-drop threshold of the plateau detectors.
    pub plateau_eps: f64,
    pub integrator: Integrator,
    pub activation: String,
    /// Abort when the recorded risk increases.
    pub monotone_check: bool,
    /// Multiplier applied to theory-side bounds with unspecified constants.
    pub slack: f64,
    pub data: DataSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            m: 5000,
            d: 1,
            alpha: 1.0,
            seed: 0,
            step_size: 1e-3,
            max_time: 20.0,
            record_stride: 10,
            beta: 0.05,
            plateau_eps: 0.05,
            integrator: Integrator::Euler,
            activation: "tanh".into(),
            monotone_check: true,
            slack: 10.0,
            data: DataSpec::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.m == 0 {
            return fail("m must be at least 1".into());
        }
        if self.d == 0 {
            return fail("d must be at least 1".into());
        }
        if !(self.alpha > 0.5) || !self.alpha.is_finite() {
            return fail(format!("alpha must exceed 1/2, got {}", self.alpha));
        }
        if !(self.step_size > 0.0 && self.step_size <= MAX_STEP_SIZE) {
            return fail(format!("step_size must lie in (0, {MAX_STEP_SIZE}], got {}", self.step_size));
        }
        if !(self.max_time >= 0.0) || !self.max_time.is_finite() {
            return fail(format!("max_time must be finite and nonnegative, got {}", self.max_time));
        }
        if self.record_stride == 0 {
            return fail("record_stride must be positive".into());
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return fail(format!("beta must lie in (0, 1), got {}", self.beta));
        }
        if !(self.plateau_eps > 0.0 && self.plateau_eps < 1.0) {
            return fail(format!("plateau_eps must lie in (0, 1), got {}", self.plateau_eps));
        }
        if !(self.slack >= 1.0) || !self.slack.is_finite() {
            return fail(format!("slack must be finite and at least 1, got {}", self.slack));
        }
        if self.data.n < 2 || !(self.data.lo < self.data.hi) {
            return fail("data grid needs n >= 2 and lo < hi".into());
        }
        Activation::by_name(&self.activation).map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn activation(&self) -> Result<Activation> {
        Activation::by_name(&self.activation)
    }

    pub fn dataset(&self) -> Result<Dataset> {
        self.data.build(self.d)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: RunConfig = serde_json::from_str(&text)?;
        Ok(cfg)
    }

    /// Number of Euler/RK4 steps needed to reach `max_time`.
    pub fn total_steps(&self) -> u64 {
        (self.max_time / self.step_size - 1e-9).ceil().max(0.0) as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_out_of_range() {
        let base = RunConfig::default();
        for bad in [
            RunConfig { alpha: 0.4, ..base.clone() },
            RunConfig { alpha: 0.5, ..base.clone() },
            RunConfig { step_size: 0.2, ..base.clone() },
            RunConfig { step_size: 0.0, ..base.clone() },
            RunConfig { m: 0, ..base.clone() },
            RunConfig { beta: 1.0, ..base.clone() },
            RunConfig { plateau_eps: 0.0, ..base.clone() },
            RunConfig { record_stride: 0, ..base.clone() },
            RunConfig { activation: "relu".into(), ..base.clone() },
        ] {
            assert!(matches!(bad.validate(), Err(Error::Config(_))), "{bad:?}");
        }
    }

    #[test]
    fn json_roundtrip_with_partial_file() {
        let cfg: RunConfig =
            serde_json::from_str(r#"{"m": 100, "data": {"target": "f3"}}"#).unwrap();
        assert_eq!(cfg.m, 100);
        assert_eq!(cfg.data.target, Target::F3);
        assert_eq!(cfg.data.n, 1000);
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), cfg);
        assert!(serde_json::from_str::<RunConfig>(r#"{"mm": 1}"#).is_err());
    }

    #[test]
    fn step_count() {
        let cfg = RunConfig { max_time: 1.0, step_size: 1e-3, ..RunConfig::default() };
        assert_eq!(cfg.total_steps(), 1000);
        assert_eq!(RunConfig { max_time: 0.0, ..cfg }.total_steps(), 0);
    }
}
