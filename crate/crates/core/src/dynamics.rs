//! Gradient-flow integration, telemetry, and the closed-form reference
//! solutions (linearized flow, logistic K).

use serde::{Deserialize, Serialize};

use crate::activation::Activation;
use crate::config::{Integrator, RunConfig};
use crate::dataset::Dataset;
use crate::diagnostics::{condensation_from_sums, macro_quantities, relative_w2};
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::model::{risk_and_gradient, Gradient};
use crate::state::{init_params, NetworkState};

/// Abort threshold on `q_max`.
pub const DIVERGENCE_LIMIT: f64 = 1e3;

/// Relative slack on the recorded-risk monotonicity check (rounding only).
pub const MONOTONE_SLACK: f64 = 1e-12;

/// Moment tolerance required by [`decompose_update`].
pub const DECOMPOSITION_TOL: f64 = 1e-8;

/// One telemetry row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub t: f64,
    pub loss: f64,
    pub k: f64,
    pub k_prime: f64,
    pub q_max: f64,
    pub norm_a: f64,
    pub norm_w: f64,
    pub dir_sums: Vec<f64>,
    pub w2_rel: f64,
    pub condensation_ratio: f64,
    pub grad_inf_norm: f64,
    pub theta_inf_norm: f64,
}

impl Record {
    pub fn capture(state: &NetworkState, loss: f64, grad_inf_norm: f64) -> Result<Self> {
        let q = macro_quantities(state);
        Ok(Self {
            t: state.t(),
            loss,
            k: q.k,
            k_prime: q.k_prime,
            q_max: q.q_max,
            norm_a: q.norm_a,
            norm_w: q.norm_w,
            w2_rel: relative_w2(state)?,
            condensation_ratio: condensation_from_sums(&q.dir_sums)?,
            dir_sums: q.dir_sums,
            grad_inf_norm,
            theta_inf_norm: q.q_max,
        })
    }

    /// `||grad R||_inf / ||theta||_inf` at this record.
    pub fn critical_point_ratio(&self) -> f64 {
        self.grad_inf_norm / self.theta_inf_norm
    }

    /// `||a||_2 / ||W||_F`.
    pub fn norm_ratio(&self) -> f64 {
        self.norm_a / self.norm_w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Milestone {
    Plateau,
    Descent,
    SecondaryPlateau,
}

/// When [`run`] stops, in addition to the `max_time` cap that always applies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    MaxTime,
    LossBelow(f64),
    /// Stop at the record where the milestone's detector first fires.
    /// `Plateau` needs the descent milestone to be known, so it stops there.
    Milestone(Milestone),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxTime,
    LossBelow,
    Milestone,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub config: RunConfig,
    pub records: Vec<Record>,
    pub initial: NetworkState,
    /// State at the last record.
    pub terminal: NetworkState,
    pub stop_reason: StopReason,
}

/// Reusable integrator around one dataset and activation.
pub struct Integration<'a> {
    kernel: Kernel<'a>,
    integrator: Integrator,
    grad: Gradient,
    stage: Gradient,
    acc: Gradient,
    base_a: Vec<f64>,
    base_w: Vec<f64>,
}

impl<'a> Integration<'a> {
    pub fn new(data: &'a Dataset, act: &'a Activation, integrator: Integrator, m: usize) -> Self {
        let d = data.d();
        Self {
            kernel: Kernel::new(data, act),
            integrator,
            grad: Gradient::zeros(m, d),
            stage: Gradient::zeros(m, d),
            acc: Gradient::zeros(m, d),
            base_a: vec![0.0; m],
            base_w: vec![0.0; m * d],
        }
    }

    /// Risk and gradient at `state`; the gradient is available from
    /// [`Self::gradient`] until the next call.
    pub fn evaluate(&mut self, state: &NetworkState) -> f64 {
        self.kernel.eval(state.a(), state.w(), &mut self.grad.a, &mut self.grad.w)
    }

    pub fn gradient(&self) -> &Gradient {
        &self.grad
    }

    /// One step of size `h` from `state`, with time set to `t_next`.
    /// Returns the risk before the step.
    pub fn advance(&mut self, state: &mut NetworkState, h: f64, t_next: f64) -> f64 {
        let loss = self.evaluate(state);
        self.advance_evaluated(state, h, t_next);
        loss
    }

    /// As [`Self::advance`], reusing the gradient of the last
    /// [`Self::evaluate`], which must have been called on `state`.
    pub(crate) fn advance_evaluated(&mut self, state: &mut NetworkState, h: f64, t_next: f64) {
        let (a, w, t) = state.parts_mut();
        match self.integrator {
            Integrator::Euler => {
                axpy(a, -h, &self.grad.a);
                axpy(w, -h, &self.grad.w);
            }
            Integrator::Rk4 => {
                self.base_a.copy_from_slice(a);
                self.base_w.copy_from_slice(w);
                self.acc.a.copy_from_slice(&self.grad.a);
                self.acc.w.copy_from_slice(&self.grad.w);
                // stages 2 and 3 at half step, stage 4 at full step
                let mut prev_a = std::mem::take(&mut self.grad.a);
                let mut prev_w = std::mem::take(&mut self.grad.w);
                for (frac, weight) in [(0.5, 2.0), (0.5, 2.0), (1.0, 1.0)] {
                    for i in 0..a.len() {
                        a[i] = self.base_a[i] - frac * h * prev_a[i];
                    }
                    for i in 0..w.len() {
                        w[i] = self.base_w[i] - frac * h * prev_w[i];
                    }
                    self.kernel.eval(a, w, &mut self.stage.a, &mut self.stage.w);
                    axpy(&mut self.acc.a, weight, &self.stage.a);
                    axpy(&mut self.acc.w, weight, &self.stage.w);
                    std::mem::swap(&mut prev_a, &mut self.stage.a);
                    std::mem::swap(&mut prev_w, &mut self.stage.w);
                }
                self.grad.a = prev_a;
                self.grad.w = prev_w;
                for i in 0..a.len() {
                    a[i] = self.base_a[i] - h / 6.0 * self.acc.a[i];
                }
                for i in 0..w.len() {
                    w[i] = self.base_w[i] - h / 6.0 * self.acc.w[i];
                }
            }
        }
        *t = t_next;
    }
}

fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// One integrator step of the flow `d theta/dt = -grad R(theta)`.
pub fn step(
    state: &NetworkState,
    data: &Dataset,
    act: &Activation,
    step_size: f64,
    integrator: Integrator,
) -> Result<NetworkState> {
    if !(step_size > 0.0) {
        return Err(Error::Config(format!("step_size must be positive, got {step_size}")));
    }
    if state.d() != data.d() {
        return Err(Error::Dimension("state and dataset dimensions differ".into()));
    }
    let mut next = state.clone();
    let mut integ = Integration::new(data, act, integrator, state.m());
    integ.advance(&mut next, step_size, state.t() + step_size);
    if !next.all_finite() {
        return Err(Error::NonFinite { t: next.t() });
    }
    Ok(next)
}

/// Integrates from [`init_params`] and records telemetry every
/// `record_stride` steps. The run ends at the last record not after
/// `max_time`, or earlier when `stop` fires.
pub fn run(config: &RunConfig, data: &Dataset, act: &Activation, stop: StopRule) -> Result<Trajectory> {
    let initial = init_params(config)?;
    run_from(config, initial, data, act, stop)
}

/// [`run`] from a given initial state (its time is kept as the start time).
pub fn run_from(
    config: &RunConfig,
    initial: NetworkState,
    data: &Dataset,
    act: &Activation,
    stop: StopRule,
) -> Result<Trajectory> {
    config.validate()?;
    if initial.d() != data.d() || initial.d() != config.d || initial.m() != config.m {
        return Err(Error::Dimension("initial state, config and dataset shapes differ".into()));
    }
    let h = config.step_size;
    let stride = config.record_stride as u64;
    let last_record = config.total_steps() / stride * stride;
    let t0 = initial.t();
    let mut state = initial.clone();
    let mut integ = Integration::new(data, act, config.integrator, config.m);
    let mut records: Vec<Record> = Vec::new();
    let mut descent_loss: Option<f64> = None;
    let mut stop_reason = StopReason::MaxTime;

    let mut idx: u64 = 0;
    loop {
        let loss = integ.evaluate(&state);
        if !loss.is_finite() {
            return Err(Error::NonFinite { t: state.t() });
        }
        if idx % stride == 0 {
            let record = Record::capture(&state, loss, integ.gradient().inf_norm())?;
            if config.monotone_check {
                if let Some(prev) = records.last() {
                    if record.loss > prev.loss * (1.0 + MONOTONE_SLACK) {
                        return Err(Error::NonMonotone {
                            t: record.t,
                            previous: prev.loss,
                            current: record.loss,
                        });
                    }
                }
            }
            let fired = match stop {
                StopRule::MaxTime => false,
                StopRule::LossBelow(level) => record.loss < level,
                StopRule::Milestone(Milestone::Plateau | Milestone::Descent) => {
                    record.k >= 1.0 - config.beta
                }
                StopRule::Milestone(Milestone::SecondaryPlateau) => match descent_loss {
                    Some(ld) => record.loss < ld - config.plateau_eps * ld,
                    None => {
                        if record.k >= 1.0 - config.beta {
                            descent_loss = Some(record.loss);
                        }
                        false
                    }
                },
            };
            records.push(record);
            if fired {
                stop_reason = match stop {
                    StopRule::LossBelow(_) => StopReason::LossBelow,
                    _ => StopReason::Milestone,
                };
                break;
            }
            if idx >= last_record {
                break;
            }
        }
        idx += 1;
        integ.advance_evaluated(&mut state, h, t0 + idx as f64 * h);
        let q_max = state.params().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if !q_max.is_finite() {
            return Err(Error::NonFinite { t: state.t() });
        }
        if q_max > DIVERGENCE_LIMIT {
            return Err(Error::Divergence { t: state.t(), q_max, limit: DIVERGENCE_LIMIT });
        }
    }
    Ok(Trajectory { config: config.clone(), records, initial, terminal: state, stop_reason })
}

/// `-grad R` split into the leading linear terms and the exact remainder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdateDecomposition {
    pub leading_a: Vec<f64>,
    /// Row-major `m x d`.
    pub leading_w: Vec<f64>,
    pub residual_a: Vec<f64>,
    pub residual_w: Vec<f64>,
}

impl UpdateDecomposition {
    pub fn residual_a_inf(&self) -> f64 {
        self.residual_a.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn residual_w_inf(&self) -> f64 {
        self.residual_w.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

/// Leading terms on normalized data:
/// `da_k/dt ~ w_k^1 - sum_i v_i w_k^i`, `dw_k^1/dt ~ a_k - v_1 a_k`,
/// `dw_k^i/dt ~ -v_i a_k` (i >= 2) with `v_i = sum_l a_l w_l^i`.
pub fn decompose_update(state: &NetworkState, data: &Dataset, act: &Activation) -> Result<UpdateDecomposition> {
    let rep = data.assumption_report();
    if rep.dev1 > DECOMPOSITION_TOL || rep.dev2 > DECOMPOSITION_TOL {
        return Err(Error::NotNormalized { dev1: rep.dev1, dev2: rep.dev2, tol: DECOMPOSITION_TOL });
    }
    let (_, grad) = risk_and_gradient(state, data, act)?;
    let (m, d) = (state.m(), state.d());
    let mut v = vec![0.0; d];
    for k in 0..m {
        for (vi, wi) in v.iter_mut().zip(state.row(k)) {
            *vi += state.a()[k] * wi;
        }
    }
    let mut leading_a = vec![0.0; m];
    let mut leading_w = vec![0.0; m * d];
    for k in 0..m {
        let ak = state.a()[k];
        let row = state.row(k);
        leading_a[k] = row[0] - v.iter().zip(row).map(|(vi, wi)| vi * wi).sum::<f64>();
        leading_w[k * d] = ak - v[0] * ak;
        for i in 1..d {
            leading_w[k * d + i] = -v[i] * ak;
        }
    }
    let residual_a = grad.a.iter().zip(&leading_a).map(|(g, l)| -g - l).collect();
    let residual_w = grad.w.iter().zip(&leading_w).map(|(g, l)| -g - l).collect();
    Ok(UpdateDecomposition { leading_a, leading_w, residual_a, residual_w })
}

/// Closed-form solution of the linear system `a' = w^1`, `(w^1)' = a`,
/// `(w^i)' = 0` from `state0` after `delta = t - state0.t`.
pub fn linearized_solution(state0: &NetworkState, t: f64) -> Result<NetworkState> {
    let delta = t - state0.t();
    if !(delta >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("t = {t} precedes the initial time {}", state0.t())));
    }
    let (grow, decay) = (delta.exp(), (-delta).exp());
    let d = state0.d();
    let mut a = state0.a().to_vec();
    let mut w = state0.w().to_vec();
    for k in 0..state0.m() {
        let (a0, w0) = (a[k], w[k * d]);
        let plus = 0.5 * (a0 + w0);
        let minus = 0.5 * (a0 - w0);
        a[k] = plus * grow + minus * decay;
        w[k * d] = plus * grow - minus * decay;
    }
    NetworkState::new(a, w, d, t)
}

/// `max_k |a_k - a~_k| + |w_k^1 - w~_k^1|` against the linearized flow from
/// `state0` to `state.t`.
pub fn r_max(state: &NetworkState, state0: &NetworkState) -> Result<f64> {
    if state.m() != state0.m() || state.d() != state0.d() {
        return Err(Error::Dimension("states have different shapes".into()));
    }
    let lin = linearized_solution(state0, state.t())?;
    let d = state.d();
    Ok((0..state.m())
        .map(|k| (state.a()[k] - lin.a()[k]).abs() + (state.w()[k * d] - lin.w()[k * d]).abs())
        .fold(0.0, f64::max))
}

/// Solution of `K' = 2 K (1 - K)` with `K(t0) = k0`.
pub fn logistic_k(k0: f64, t0: f64, t: f64) -> Result<f64> {
    if k0 == 1.0 {
        return Err(Error::Domain("K0 = 1 is degenerate".into()));
    }
    if !k0.is_finite() || !t0.is_finite() || !t.is_finite() {
        return Err(Error::Domain("non-finite argument".into()));
    }
    // C e / (1 + C e) with C = k0 / (1 - k0), rearranged to avoid overflow.
    let delta = 2.0 * (t - t0);
    Ok(if delta >= 0.0 {
        k0 / ((1.0 - k0) * (-delta).exp() + k0)
    } else {
        k0 * delta.exp() / ((1.0 - k0) + k0 * delta.exp())
    })
}
