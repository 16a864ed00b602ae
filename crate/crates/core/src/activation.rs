//! Tanh-like activations: sigma(0) = 0, sigma'(0) = 1, sigma''(0) = 0 and a
//! bounded third derivative |sigma'''| <= C_L.

use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};

/// Tolerance for the conditions at the origin.
pub const ORIGIN_TOL: f64 = 1e-8;

/// Number of odd Taylor terms kept for the series kernel.
pub(crate) const SERIES_TERMS: usize = 24;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Tanh,
    Identity,
    Custom { name: String, f: ScalarFn },
}

#[derive(Clone)]
pub struct Activation {
    kind: Kind,
    lipschitz_third: f64,
}

impl fmt::Debug for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Activation")
            .field("name", &self.name())
            .field("lipschitz_third", &self.lipschitz_third)
            .finish()
    }
}

impl Activation {
    pub fn tanh() -> Self {
        Self { kind: Kind::Tanh, lipschitz_third: 2.0 }
    }

    /// Linear activation. Admissible (C_L = 0) but degenerate: all
    /// higher-order terms of the dynamics vanish.
    pub fn identity() -> Self {
        Self { kind: Kind::Identity, lipschitz_third: 0.0 }
    }

    /// Look up a built-in by name (`tanh`, `identity`/`linear`).
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "tanh" => Ok(Self::tanh()),
            "identity" | "linear" => Ok(Self::identity()),
            other => Err(Error::Activation(format!("unknown activation '{other}'"))),
        }
    }

    /// A user-supplied activation. Derivatives are taken by central
    /// differences; the origin conditions are checked here and C_L is
    /// estimated as the largest |sigma'''| on a grid over `[-radius, radius]`.
    pub fn custom<F>(name: impl Into<String>, f: F, radius: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(radius > 0.0) {
            return Err(Error::Activation("radius must be positive".into()));
        }
        let act = Self {
            kind: Kind::Custom { name: name.into(), f: Arc::new(f) },
            lipschitz_third: f64::INFINITY,
        };
        act.check_origin()?;
        let c_l = act.max_abs_third(radius, 4001);
        if !c_l.is_finite() {
            return Err(Error::Activation("third derivative is not bounded on the grid".into()));
        }
        Ok(Self { lipschitz_third: c_l, ..act })
    }

    pub fn name(&self) -> &str {
        match &self.kind {
            Kind::Tanh => "tanh",
            Kind::Identity => "identity",
            Kind::Custom { name, .. } => name,
        }
    }

    /// C_L, the bound on |sigma'''|.
    pub fn lipschitz_third(&self) -> f64 {
        self.lipschitz_third
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.kind, Kind::Identity)
    }

    #[inline]
    pub fn value(&self, z: f64) -> f64 {
        match &self.kind {
            Kind::Tanh => z.tanh(),
            Kind::Identity => z,
            Kind::Custom { f, .. } => f(z),
        }
    }

    #[inline]
    pub fn first(&self, z: f64) -> f64 {
        match &self.kind {
            Kind::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            Kind::Identity => 1.0,
            Kind::Custom { f, .. } => {
                let h = 1e-3;
                (f(z - 2.0 * h) - 8.0 * f(z - h) + 8.0 * f(z + h) - f(z + 2.0 * h)) / (12.0 * h)
            }
        }
    }

    pub fn second(&self, z: f64) -> f64 {
        match &self.kind {
            Kind::Tanh => {
                let t = z.tanh();
                -2.0 * t * (1.0 - t * t)
            }
            Kind::Identity => 0.0,
            Kind::Custom { f, .. } => {
                let h = 1e-3;
                (-f(z + 2.0 * h) + 16.0 * f(z + h) - 30.0 * f(z) + 16.0 * f(z - h)
                    - f(z - 2.0 * h))
                    / (12.0 * h * h)
            }
        }
    }

    pub fn third(&self, z: f64) -> f64 {
        match &self.kind {
            Kind::Tanh => {
                let t = z.tanh();
                (1.0 - t * t) * (6.0 * t * t - 2.0)
            }
            Kind::Identity => 0.0,
            Kind::Custom { f, .. } => {
                let h = 1e-2;
                (f(z + 2.0 * h) - 2.0 * f(z + h) + 2.0 * f(z - h) - f(z - 2.0 * h))
                    / (2.0 * h * h * h)
            }
        }
    }

    /// `(sigma(z), sigma'(z))` in one evaluation where possible.
    #[inline]
    pub fn value_and_first(&self, z: f64) -> (f64, f64) {
        match &self.kind {
            Kind::Tanh => {
                let t = z.tanh();
                (t, 1.0 - t * t)
            }
            Kind::Identity => (z, 1.0),
            Kind::Custom { f, .. } => (f(z), self.first(z)),
        }
    }

    /// Checks sigma(0) = 0, sigma'(0) = 1, sigma''(0) = 0 within [`ORIGIN_TOL`].
    pub fn check_origin(&self) -> Result<()> {
        let v = self.value(0.0);
        let d1 = self.first(0.0);
        let d2 = self.second(0.0);
        if v.abs() > ORIGIN_TOL {
            return Err(Error::Activation(format!("sigma(0) = {v:e}, expected 0")));
        }
        if (d1 - 1.0).abs() > ORIGIN_TOL {
            return Err(Error::Activation(format!("sigma'(0) = {d1}, expected 1")));
        }
        if d2.abs() > ORIGIN_TOL {
            return Err(Error::Activation(format!("sigma''(0) = {d2:e}, expected 0")));
        }
        Ok(())
    }

    /// Largest |sigma'''| over `points` equispaced samples of `[-radius, radius]`.
    pub fn max_abs_third(&self, radius: f64, points: usize) -> f64 {
        let points = points.max(2);
        (0..points)
            .map(|i| -radius + 2.0 * radius * i as f64 / (points - 1) as f64)
            .map(|z| self.third(z).abs())
            .fold(0.0, f64::max)
    }

    /// Verifies |sigma'''| <= C_L (with a relative slack of 1e-9) on a grid
    /// over `[-radius, radius]`.
    pub fn check_third_bound(&self, radius: f64) -> Result<()> {
        let observed = self.max_abs_third(radius, 4001);
        if observed > self.lipschitz_third * (1.0 + 1e-9) + 1e-12 {
            return Err(Error::Activation(format!(
                "|sigma'''| reaches {observed} > C_L = {}",
                self.lipschitz_third
            )));
        }
        Ok(())
    }

    /// Odd Taylor coefficients `c_j` with `sigma(z) = sum_j c_j z^(2j+1)`,
    /// when the activation is a known odd analytic function.
    pub(crate) fn odd_series(&self) -> Option<&'static [f64]> {
        match self.kind {
            Kind::Tanh => Some(tanh_series()),
            Kind::Identity => Some(&[1.0]),
            Kind::Custom { .. } => None,
        }
    }

    /// Largest |z| at which [`Self::odd_series`] is used by the kernels.
    pub(crate) fn series_radius(&self) -> f64 {
        match self.kind {
            Kind::Identity => f64::INFINITY,
            _ => 0.5,
        }
    }
}

/// tanh(z) = sum_j c_j z^(2j+1). From tanh' = 1 - tanh^2:
/// (2j+1) c_j = -sum_{i+l=j-1} c_i c_l, c_0 = 1.
fn tanh_series() -> &'static [f64] {
    static COEFFS: OnceLock<Vec<f64>> = OnceLock::new();
    COEFFS.get_or_init(|| {
        let mut c = vec![0.0; SERIES_TERMS];
        c[0] = 1.0;
        for j in 1..SERIES_TERMS {
            let s: f64 = (0..j).map(|i| c[i] * c[j - 1 - i]).sum();
            c[j] = -s / (2 * j + 1) as f64;
        }
        c
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_satisfy_origin_conditions() {
        Activation::tanh().check_origin().unwrap();
        Activation::identity().check_origin().unwrap();
    }

    #[test]
    fn tanh_derivatives_match_finite_differences() {
        let act = Activation::tanh();
        for &z in &[-2.0, -0.3, 0.0, 0.7, 1.9] {
            let h = 1e-5;
            let d1 = (act.value(z + h) - act.value(z - h)) / (2.0 * h);
            let d2 = (act.first(z + h) - act.first(z - h)) / (2.0 * h);
            let d3 = (act.second(z + h) - act.second(z - h)) / (2.0 * h);
            assert!((d1 - act.first(z)).abs() < 1e-9);
            assert!((d2 - act.second(z)).abs() < 1e-9);
            assert!((d3 - act.third(z)).abs() < 1e-9);
        }
    }

    #[test]
    fn tanh_third_bound_is_two() {
        let act = Activation::tanh();
        act.check_third_bound(10.0).unwrap();
        assert!((act.third(0.0) + 2.0).abs() < 1e-15);
    }

    #[test]
    fn custom_activation_validated() {
        let act = Activation::custom("sin", f64::sin, 5.0).unwrap();
        assert!((act.lipschitz_third() - 1.0).abs() < 1e-3);
        act.check_third_bound(5.0).unwrap();
        assert!((act.first(0.3) - 0.3f64.cos()).abs() < 1e-10);

        let err = Activation::custom("shifted", |z: f64| z.tanh() + 0.1, 5.0);
        assert!(err.is_err());
        let err = Activation::custom("softplus", |z: f64| (1.0 + z.exp()).ln() - 2f64.ln(), 5.0);
        assert!(err.is_err());
        let err = Activation::custom("sq", |z: f64| z + z * z, 5.0);
        assert!(err.is_err());
    }

    #[test]
    fn series_reproduces_tanh() {
        let c = tanh_series();
        assert!((c[1] + 1.0 / 3.0).abs() < 1e-16);
        assert!((c[2] - 2.0 / 15.0).abs() < 1e-16);
        assert!((c[3] + 17.0 / 315.0).abs() < 1e-16);
        for &z in &[-0.5, -0.21, 0.0, 0.013, 0.37, 0.5] {
            let z2: f64 = z * z;
            let s: f64 = c.iter().rev().fold(0.0, |acc, &cj| acc * z2 + cj) * z;
            assert!((s - z.tanh()).abs() <= 4.0 * f64::EPSILON * z.abs().max(1e-300), "{z}");
        }
    }
}
