//! Weighted sample sets standing in for the input density rho, plus the
//! moment checks and the whitening transform that makes them satisfy the
//! unit-covariance / unit-leading-term conditions.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Allowed deviation of the weights' sum from 1.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Moment deviations of a dataset.
///
/// * `dev1 = max_ij |sum_s rho_s x_s^i x_s^j - delta_ij|`
/// * `dev2 = || sum_s rho_s f(x_s) x_s - e_1 ||_2`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub dev1: f64,
    pub dev2: f64,
}

/// [`AssumptionReport`] judged at a tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssumptionCheck {
    pub dev1: f64,
    pub dev2: f64,
    pub tol: f64,
    pub symmetric_sampling: bool,
    pub leading_term: bool,
}

impl AssumptionCheck {
    pub fn passed(&self) -> bool {
        self.symmetric_sampling && self.leading_term
    }
}

/// The affine map applied by [`Dataset::normalize`]: `x' = A x`, `f' = s f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationMap {
    pub dim: usize,
    /// Row-major `dim x dim` matrix `A`.
    pub matrix: Vec<f64>,
    pub target_scale: f64,
}

impl NormalizationMap {
    /// Largest entry-wise distance from the identity map.
    pub fn distance_from_identity(&self) -> f64 {
        let mut dist = (self.target_scale - 1.0).abs();
        for i in 0..self.dim {
            for j in 0..self.dim {
                let delta = if i == j { 1.0 } else { 0.0 };
                dist = dist.max((self.matrix[i * self.dim + j] - delta).abs());
            }
        }
        dist
    }

    fn compose(&self, inner: &NormalizationMap) -> NormalizationMap {
        let d = self.dim;
        let mut matrix = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                matrix[i * d + j] =
                    (0..d).map(|l| self.matrix[i * d + l] * inner.matrix[l * d + j]).sum();
            }
        }
        NormalizationMap { dim: d, matrix, target_scale: self.target_scale * inner.target_scale }
    }
}

/// Built-in target functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    /// tanh(x + 7.5) + tanh(x) + tanh(x - 7.5)
    F1,
    /// tanh(x)
    F2,
    /// sin(x)
    F3,
}

impl Target {
    pub const ALL: [Target; 3] = [Target::F1, Target::F2, Target::F3];

    pub fn eval(self, x: f64) -> f64 {
        match self {
            Target::F1 => (x + 7.5).tanh() + x.tanh() + (x - 7.5).tanh(),
            Target::F2 => x.tanh(),
            Target::F3 => x.sin(),
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            Target::F1 => "f1",
            Target::F2 => "f2",
            Target::F3 => "f3",
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f1" => Ok(Target::F1),
            "f2" => Ok(Target::F2),
            "f3" => Ok(Target::F3),
            other => Err(Error::Dataset(format!("unknown target id '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    d: usize,
    /// Row-major `n x d`.
    points: Vec<f64>,
    weights: Vec<f64>,
    targets: Vec<f64>,
    report: AssumptionReport,
    normalization: Option<NormalizationMap>,
}

impl Dataset {
    /// `points` is row-major `n x d`.
    pub fn new(points: Vec<f64>, d: usize, weights: Vec<f64>, targets: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::Dataset("input dimension must be at least 1".into()));
        }
        if points.len() % d != 0 {
            return Err(Error::Dimension(format!(
                "{} point coordinates do not split into rows of {d}",
                points.len()
            )));
        }
        let n = points.len() / d;
        if n == 0 {
            return Err(Error::Dataset("dataset needs at least one sample".into()));
        }
        if weights.len() != n || targets.len() != n {
            return Err(Error::Dimension(format!(
                "{n} points but {} weights and {} targets",
                weights.len(),
                targets.len()
            )));
        }
        if points.iter().chain(&targets).chain(&weights).any(|v| !v.is_finite()) {
            return Err(Error::Dataset("non-finite entry".into()));
        }
        if weights.iter().any(|&w| w < 0.0) {
            return Err(Error::Dataset("negative weight".into()));
        }
        let total = compensated_sum(&weights);
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::Dataset(format!("weights sum to {total}, expected 1")));
        }
        let mut data = Self {
            n,
            d,
            points,
            weights,
            targets,
            report: AssumptionReport { dev1: 0.0, dev2: 0.0 },
            normalization: None,
        };
        data.report = data.compute_report();
        Ok(data)
    }

    /// Uniform weights `1/n`.
    pub fn uniform(points: Vec<f64>, d: usize, targets: Vec<f64>) -> Result<Self> {
        let n = if d == 0 { 0 } else { points.len() / d };
        let weights = vec![1.0 / n.max(1) as f64; n];
        Self::new(points, d, weights, targets)
    }

    /// `n` equidistant points on `[lo, hi]` with uniform weights and targets
    /// from `target`.
    pub fn grid(target: Target, n: usize, lo: f64, hi: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Dataset("grid needs n >= 2".into()));
        }
        if !(lo < hi) {
            return Err(Error::Dataset(format!("empty interval [{lo}, {hi}]")));
        }
        let step = (hi - lo) / (n - 1) as f64;
        let points: Vec<f64> = (0..n)
            .map(|s| {
                // Mirror-exact: x_{n-1-s} = -x_s whenever lo = -hi.
                let from_lo = lo + step * s as f64;
                let from_hi = hi - step * (n - 1 - s) as f64;
                if 2 * s < n - 1 {
                    from_lo
                } else if 2 * s > n - 1 {
                    from_hi
                } else {
                    0.5 * (lo + hi)
                }
            })
            .collect();
        let targets = points.iter().map(|&x| target.eval(x)).collect();
        Self::uniform(points, 1, targets)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn point(&self, s: usize) -> &[f64] {
        &self.points[s * self.d..(s + 1) * self.d]
    }

    /// Row-major `n x d` coordinates.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn assumption_report(&self) -> AssumptionReport {
        self.report
    }

    /// The map applied by [`Self::normalize`], if this dataset came from it.
    pub fn normalization(&self) -> Option<&NormalizationMap> {
        self.normalization.as_ref()
    }

    /// `sum_s rho_s x_s x_s^T`, row-major `d x d`.
    pub fn second_moments(&self) -> Vec<f64> {
        let d = self.d;
        let mut m = vec![0.0; d * d];
        for s in 0..self.n {
            let x = self.point(s);
            let rho = self.weights[s];
            for i in 0..d {
                for j in 0..d {
                    m[i * d + j] += rho * x[i] * x[j];
                }
            }
        }
        m
    }

    /// `sum_s rho_s f(x_s) x_s`.
    pub fn leading_vector(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.d];
        for s in 0..self.n {
            let x = self.point(s);
            let c = self.weights[s] * self.targets[s];
            for (vi, xi) in v.iter_mut().zip(x) {
                *vi += c * xi;
            }
        }
        v
    }

    /// `sum_s rho_s f(x_s)^2`.
    pub fn target_energy(&self) -> f64 {
        self.weights.iter().zip(&self.targets).map(|(r, f)| r * f * f).sum()
    }

    fn compute_report(&self) -> AssumptionReport {
        let d = self.d;
        let m = self.second_moments();
        let mut dev1: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let delta = if i == j { 1.0 } else { 0.0 };
                dev1 = dev1.max((m[i * d + j] - delta).abs());
            }
        }
        let v = self.leading_vector();
        let dev2 = v
            .iter()
            .enumerate()
            .map(|(i, vi)| if i == 0 { (vi - 1.0).powi(2) } else { vi * vi })
            .sum::<f64>()
            .sqrt();
        AssumptionReport { dev1, dev2 }
    }

    /// Judges the moment conditions at tolerance `tol`. Never mutates.
    pub fn check_assumptions(&self, tol: f64) -> AssumptionCheck {
        let AssumptionReport { dev1, dev2 } = self.report;
        AssumptionCheck {
            dev1,
            dev2,
            tol,
            symmetric_sampling: dev1 <= tol,
            leading_term: dev2 <= tol,
        }
    }

    /// Whitens the inputs so that `sum rho x x^T = I`, reflects them so that
    /// `sum rho f x` points along `e_1`, then rescales the targets so that
    /// `sum rho f x = e_1` exactly.
    pub fn normalize(&self) -> Result<Dataset> {
        let d = self.d;
        let moments = DMatrix::from_row_slice(d, d, &self.second_moments());
        let scale = moments.diagonal().amax();
        if !(scale > 0.0) {
            return Err(Error::SingularMoments);
        }
        let chol = nalgebra::Cholesky::new(moments.clone()).ok_or(Error::SingularMoments)?;
        let l = chol.l();
        let min_pivot = l.diagonal().iter().fold(f64::INFINITY, |acc, v| acc.min(v.abs()));
        if min_pivot * min_pivot <= 1e-12 * scale {
            return Err(Error::SingularMoments);
        }
        let whiten = l.try_inverse().ok_or(Error::SingularMoments)?;

        let lead = DVector::from_column_slice(&self.leading_vector());
        let lead_white = &whiten * &lead;
        let norm = lead_white.norm();
        let energy = self.target_energy().sqrt();
        if !(norm > 1e-10 * energy.max(f64::MIN_POSITIVE)) {
            return Err(Error::VanishingLeadingTerm);
        }

        // Householder reflection taking lead_white/norm onto e_1.
        let mut u = lead_white / norm;
        u[0] -= 1.0;
        let u_norm2 = u.norm_squared();
        let reflect = if u_norm2 > 1e-30 {
            DMatrix::identity(d, d) - (&u * u.transpose()) * (2.0 / u_norm2)
        } else {
            DMatrix::identity(d, d)
        };
        let a = reflect * whiten;

        let mut points = vec![0.0; self.n * d];
        for s in 0..self.n {
            let x = DVector::from_column_slice(self.point(s));
            let y = &a * x;
            points[s * d..(s + 1) * d].copy_from_slice(y.as_slice());
        }
        let target_scale = 1.0 / norm;
        let targets = self.targets.iter().map(|f| f * target_scale).collect();

        let mut matrix = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                matrix[i * d + j] = a[(i, j)];
            }
        }
        let map = NormalizationMap { dim: d, matrix, target_scale };
        let mut out = Dataset::new(points, d, self.weights.clone(), targets)?;
        out.normalization = Some(match &self.normalization {
            Some(prev) => map.compose(prev),
            None => map,
        });
        Ok(out)
    }

    /// Appends `extra` input coordinates carrying Walsh sign patterns
    /// `(-1)^{bit_j(s)}`. The new directions have unit second moment and are
    /// nearly uncorrelated with the existing ones; run [`Self::normalize`]
    /// afterwards to make the moment conditions exact.
    pub fn pad_sign_directions(&self, extra: usize) -> Result<Dataset> {
        let d = self.d + extra;
        let mut points = Vec::with_capacity(self.n * d);
        for s in 0..self.n {
            points.extend_from_slice(self.point(s));
            for j in 0..extra {
                points.push(if (s >> j) & 1 == 0 { 1.0 } else { -1.0 });
            }
        }
        Dataset::new(points, d, self.weights.clone(), self.targets.clone())
    }

    /// Reads columns `x_1..x_d, weight, target` (header required).
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Dataset> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_path(path)?;
        let headers = reader.headers()?.clone();
        let mut x_cols = Vec::new();
        let mut weight_col = None;
        let mut target_col = None;
        for (idx, name) in headers.iter().enumerate() {
            match name {
                "weight" => weight_col = Some(idx),
                "target" => target_col = Some(idx),
                other => {
                    let k: usize = other
                        .strip_prefix("x_")
                        .and_then(|k| k.parse().ok())
                        .ok_or_else(|| Error::Parse(format!("unexpected column '{other}'")))?;
                    x_cols.push((k, idx));
                }
            }
        }
        x_cols.sort();
        if x_cols.is_empty() || x_cols.iter().enumerate().any(|(i, (k, _))| *k != i + 1) {
            return Err(Error::Parse("input columns must be x_1..x_d".into()));
        }
        let weight_col = weight_col.ok_or_else(|| Error::Parse("missing 'weight' column".into()))?;
        let target_col = target_col.ok_or_else(|| Error::Parse("missing 'target' column".into()))?;
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| Error::Parse(format!("not a number: '{s}'")))
        };
        let d = x_cols.len();
        let (mut points, mut weights, mut targets) = (Vec::new(), Vec::new(), Vec::new());
        for record in reader.records() {
            let record = record?;
            for (_, idx) in &x_cols {
                points.push(parse(&record[*idx])?);
            }
            weights.push(parse(&record[weight_col])?);
            targets.push(parse(&record[target_col])?);
        }
        Dataset::new(points, d, weights, targets)
    }

    /// Writes the same layout [`Self::from_csv`] reads, with full precision.
    pub fn to_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = String::new();
        for i in 1..=self.d {
            out.push_str(&format!("x_{i},"));
        }
        out.push_str("weight,target\n");
        for s in 0..self.n {
            for x in self.point(s) {
                out.push_str(&format!("{x:e},"));
            }
            out.push_str(&format!("{:e},{:e}\n", self.weights[s], self.targets[s]));
        }
        std::fs::write(path, out)?;
        Ok(())
    }
}

/// Neumaier summation, so uniform weights `1/n` pass the sum check for any n.
fn compensated_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &v in values {
        let t = sum + v;
        comp += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    sum + comp
}
