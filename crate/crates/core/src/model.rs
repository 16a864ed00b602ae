use serde::{Deserialize, Serialize};

use crate::activation::Activation;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::state::NetworkState;

/// `(dR/da, dR/dW)`; `w` is row-major `m x d` like [`NetworkState::w`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gradient {
    pub a: Vec<f64>,
    pub w: Vec<f64>,
    pub d: usize,
}

impl Gradient {
    pub fn zeros(m: usize, d: usize) -> Self {
        Self { a: vec![0.0; m], w: vec![0.0; m * d], d }
    }

    pub fn inf_norm(&self) -> f64 {
        self.a.iter().chain(&self.w).fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.w[k * self.d..(k + 1) * self.d]
    }
}

fn check_dims(state: &NetworkState, data: &Dataset) -> Result<()> {
    if state.d() != data.d() {
        return Err(Error::Dimension(format!(
            "network input dimension {} but dataset dimension {}",
            state.d(),
            data.d()
        )));
    }
    Ok(())
}

/// `f_theta(x) = sum_k a_k sigma(w_k . x)`.
pub fn forward(state: &NetworkState, x: &[f64], act: &Activation) -> Result<f64> {
    if x.len() != state.d() {
        return Err(Error::Dimension(format!("input has length {}, expected {}", x.len(), state.d())));
    }
    Ok((0..state.m())
        .map(|k| {
            let z: f64 = state.row(k).iter().zip(x).map(|(w, x)| w * x).sum();
            state.a()[k] * act.value(z)
        })
        .sum())
}

/// `R = 1/2 sum_s rho_s (f_theta(x_s) - f(x_s))^2`.
pub fn risk(state: &NetworkState, data: &Dataset, act: &Activation) -> Result<f64> {
    check_dims(state, data)?;
    Ok(Kernel::new(data, act).loss(state.a(), state.w()))
}

/// Exact gradient of [`risk`].
pub fn gradient(state: &NetworkState, data: &Dataset, act: &Activation) -> Result<Gradient> {
    Ok(risk_and_gradient(state, data, act)?.1)
}

pub fn risk_and_gradient(
    state: &NetworkState,
    data: &Dataset,
    act: &Activation,
) -> Result<(f64, Gradient)> {
    check_dims(state, data)?;
    let mut grad = Gradient::zeros(state.m(), state.d());
    let loss = Kernel::new(data, act).eval(state.a(), state.w(), &mut grad.a, &mut grad.w);
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Target;

    /// Straight double sum, no kernel tricks.
    fn brute_risk_grad(state: &NetworkState, data: &Dataset, act: &Activation) -> (f64, Gradient) {
        let (m, d) = (state.m(), state.d());
        let mut g = Gradient::zeros(m, d);
        let mut loss = 0.0;
        for s in 0..data.n() {
            let x = data.point(s);
            let f = forward(state, x, act).unwrap();
            let r = f - data.targets()[s];
            let rho = data.weights()[s];
            loss += 0.5 * rho * r * r;
            for k in 0..m {
                let z: f64 = state.row(k).iter().zip(x).map(|(w, x)| w * x).sum();
                g.a[k] += rho * r * act.value(z);
                for i in 0..d {
                    g.w[k * d + i] += rho * r * state.a()[k] * act.first(z) * x[i];
                }
            }
        }
        (loss, g)
    }

    fn assert_close(x: &[f64], y: &[f64], tol: f64) {
        let scale = y.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1e-300);
        for (u, v) in x.iter().zip(y) {
            assert!((u - v).abs() <= tol * scale, "{u} vs {v}");
        }
    }

    #[test]
    fn forward_direct_evaluation() {
        let state = NetworkState::new(vec![1.0], vec![1.0], 1, 0.0).unwrap();
        let v = forward(&state, &[0.5], &Activation::tanh()).unwrap();
        assert!((v - 0.462117157260010).abs() < 1e-12);
        assert!(forward(&state, &[0.5, 1.0], &Activation::tanh()).is_err());
    }

    #[test]
    fn zero_params_risk_and_gradient() {
        let data = Dataset::grid(Target::F1, 50, -3.0, 3.0).unwrap();
        let state = NetworkState::zeros(6, 1).unwrap();
        let act = Activation::tanh();
        let (loss, g) = risk_and_gradient(&state, &data, &act).unwrap();
        assert!((loss - 0.5 * data.target_energy()).abs() < 1e-15);
        assert_eq!(g.inf_norm(), 0.0);
    }

    #[test]
    fn hand_dataset_risk() {
        let data = Dataset::new(vec![-1.0, 0.5, 2.0], 1, vec![0.2, 0.3, 0.5], vec![0.1, -0.4, 0.7])
            .unwrap();
        let state = NetworkState::new(vec![0.3, -0.7], vec![0.9, 0.2], 1, 0.0).unwrap();
        let f = |x: f64| 0.3 * (0.9 * x).tanh() - 0.7 * (0.2 * x).tanh();
        let expect = 0.5
            * (0.2 * (f(-1.0) - 0.1).powi(2)
                + 0.3 * (f(0.5) + 0.4).powi(2)
                + 0.5 * (f(2.0) - 0.7).powi(2));
        let got = risk(&state, &data, &Activation::tanh()).unwrap();
        assert!((got - expect).abs() < 1e-15);
    }

    #[test]
    fn moment_path_matches_brute_force() {
        let data = Dataset::grid(Target::F3, 101, -4.0, 4.0).unwrap();
        let a: Vec<f64> = (0..30).map(|k| ((k * 7 % 11) as f64 - 5.0) * 0.01).collect();
        let w: Vec<f64> = (0..30).map(|k| ((k * 5 % 13) as f64 - 6.0) * 0.02).collect();
        let state = NetworkState::new(a, w, 1, 0.0).unwrap();
        for act in [Activation::tanh(), Activation::identity()] {
            let (l1, g1) = risk_and_gradient(&state, &data, &act).unwrap();
            let (l2, g2) = brute_risk_grad(&state, &data, &act);
            assert!((l1 - l2).abs() <= 1e-14 * l2);
            assert_close(&g1.a, &g2.a, 1e-13);
            assert_close(&g1.w, &g2.w, 1e-13);
        }
    }

    #[test]
    fn direct_path_matches_brute_force() {
        // large weights force the closed-form branch for some neurons
        let data = Dataset::grid(Target::F1, 40, -3.0, 3.0).unwrap().pad_sign_directions(2).unwrap();
        let a: Vec<f64> = (0..9).map(|k| (k as f64 - 4.0) * 0.1).collect();
        let w: Vec<f64> = (0..27).map(|k| ((k * 5 % 13) as f64 - 6.0) * 0.03 * (1 + k % 3) as f64).collect();
        let state = NetworkState::new(a, w, 3, 0.0).unwrap();
        let sine = Activation::custom("sin", f64::sin, 10.0).unwrap();
        for act in [Activation::tanh(), Activation::identity(), sine] {
            let (l1, g1) = risk_and_gradient(&state, &data, &act).unwrap();
            let (l2, g2) = brute_risk_grad(&state, &data, &act);
            assert!((l1 - l2).abs() <= 1e-13 * l2);
            let tol = if act.name() == "sin" { 1e-9 } else { 1e-13 };
            assert_close(&g1.a, &g2.a, 1e-13);
            assert_close(&g1.w, &g2.w, tol);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let data = Dataset::grid(Target::F2, 10, -1.0, 1.0).unwrap();
        let state = NetworkState::zeros(3, 2).unwrap();
        assert!(matches!(risk(&state, &data, &Activation::tanh()), Err(Error::Dimension(_))));
    }
}
