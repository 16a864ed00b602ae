use proptest::prelude::*;

use condense::diagnostics::{
    condensation_ratio, macro_quantities, predict_milestones, relative_w2, wasserstein_1d,
};
use condense::model::{forward, gradient, risk};
use condense::{run, Activation, Dataset, NetworkState, RunConfig, StopRule, Target};

fn instance(max_m: usize, max_d: usize) -> impl Strategy<Value = (NetworkState, Dataset)> {
    (1..=max_m, 1..=max_d, 1usize..=8).prop_flat_map(|(m, d, n)| {
        (
            prop::collection::vec(-1.0f64..1.0, m),
            prop::collection::vec(-1.0f64..1.0, m * d),
            prop::collection::vec(-2.0f64..2.0, n * d),
            prop::collection::vec(0.1f64..1.0, n),
            prop::collection::vec(-1.0f64..1.0, n),
        )
            .prop_map(move |(a, w, x, raw, y)| {
                let total: f64 = raw.iter().sum();
                let rho = raw.iter().map(|v| v / total).collect();
                (NetworkState::new(a, w, d, 0.0).unwrap(), Dataset::new(x, d, rho, y).unwrap())
            })
    })
}

fn close(x: f64, y: f64, tol: f64) -> bool {
    (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs()))
}

fn reversed(state: &NetworkState) -> NetworkState {
    let perm: Vec<usize> = (0..state.m()).rev().collect();
    state.permuted(&perm).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn risk_is_nonnegative((state, data) in instance(8, 3)) {
        prop_assert!(risk(&state, &data, &Activation::tanh()).unwrap() >= 0.0);
    }

    #[test]
    fn neuron_order_does_not_matter((state, data) in instance(8, 3)) {
        let act = Activation::tanh();
        let perm = reversed(&state);
        prop_assert!(close(risk(&state, &data, &act).unwrap(), risk(&perm, &data, &act).unwrap(), 1e-13));
        let (q, qp) = (macro_quantities(&state), macro_quantities(&perm));
        prop_assert!(close(q.k, qp.k, 1e-13) && close(q.k_prime, qp.k_prime, 1e-13));
        prop_assert_eq!(q.q_max, qp.q_max);
        prop_assert!(close(relative_w2(&state).unwrap(), relative_w2(&perm).unwrap(), 1e-13));
        if let (Ok(c), Ok(cp)) = (condensation_ratio(&state), condensation_ratio(&perm)) {
            prop_assert!(close(c, cp, 1e-13));
        }
        let g = gradient(&state, &data, &act).unwrap();
        let gp = gradient(&perm, &data, &act).unwrap();
        let m = state.m();
        for k in 0..m {
            prop_assert!(close(g.a[k], gp.a[m - 1 - k], 1e-12));
        }
    }

    /// `(a_k, w_k) -> (-a_k, -w_k)` leaves an odd-activation network unchanged.
    #[test]
    fn sign_flip_of_a_neuron((state, data) in instance(8, 3), k in 0usize..8) {
        let act = Activation::tanh();
        let k = k % state.m();
        let d = state.d();
        let mut a = state.a().to_vec();
        let mut w = state.w().to_vec();
        a[k] = -a[k];
        w[k * d..(k + 1) * d].iter_mut().for_each(|v| *v = -*v);
        let flipped = NetworkState::new(a, w, d, 0.0).unwrap();
        for s in 0..data.n() {
            let x = data.point(s);
            prop_assert!(close(forward(&state, x, &act).unwrap(), forward(&flipped, x, &act).unwrap(), 1e-14));
        }
        let (q, qf) = (macro_quantities(&state), macro_quantities(&flipped));
        prop_assert!(close(q.k, qf.k, 1e-13));
        prop_assert!(close(relative_w2(&state).unwrap(), relative_w2(&flipped).unwrap(), 1e-13));
    }

    #[test]
    fn gradient_matches_finite_differences((state, data) in instance(6, 3), j in 0usize..1000) {
        let act = Activation::tanh();
        let g = gradient(&state, &data, &act).unwrap();
        let (m, d) = (state.m(), state.d());
        let j = j % (m * (d + 1));
        let h = 1e-5;
        let shifted = |delta: f64| {
            let (mut a, mut w) = (state.a().to_vec(), state.w().to_vec());
            if j < m { a[j] += delta } else { w[j - m] += delta }
            risk(&NetworkState::new(a, w, d, 0.0).unwrap(), &data, &act).unwrap()
        };
        let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
        let analytic = if j < m { g.a[j] } else { g.w[j - m] };
        prop_assert!((fd - analytic).abs() <= 1e-7 * (1.0 + g.inf_norm()));
    }

    #[test]
    fn wasserstein_is_a_metric(
        a in prop::collection::vec(-5.0f64..5.0, 1..20),
        seed in any::<u64>(),
    ) {
        let n = a.len();
        let shift = |k: u64| -> Vec<f64> {
            (0..n).map(|i| ((seed.wrapping_mul(k + 1).wrapping_add(i as u64) % 1000) as f64) / 100.0 - 5.0).collect()
        };
        let (b, c) = (shift(1), shift(2));
        let ab = wasserstein_1d(&a, &b).unwrap();
        prop_assert_eq!(wasserstein_1d(&a, &a).unwrap(), 0.0);
        prop_assert_eq!(ab, wasserstein_1d(&b, &a).unwrap());
        prop_assert!(ab <= wasserstein_1d(&a, &c).unwrap() + wasserstein_1d(&c, &b).unwrap() + 1e-12);
        let mut rev = a.clone();
        rev.reverse();
        prop_assert_eq!(wasserstein_1d(&rev, &b).unwrap(), ab);
    }

    #[test]
    fn predictions_are_continuous(alpha in 0.55f64..2.5, m in 10.0f64..1e6) {
        let h = 1e-9;
        let p = predict_milestones(alpha, m, 0.05).unwrap();
        let q = predict_milestones(alpha + h, m, 0.05).unwrap();
        let bound = 10.0 * h * m.ln();
        prop_assert!((p.t_p - q.t_p).abs() <= bound);
        prop_assert!((p.t_d - q.t_d).abs() <= bound);
        prop_assert!((p.t_sp - q.t_sp).abs() <= bound);
        prop_assert!(p.t_p <= p.t_d && p.t_d < p.t_sp);
    }

    #[test]
    fn normalization_is_idempotent(lo in -20.0f64..-1.0, width in 2.0f64..40.0, n in 20usize..200) {
        let data = Dataset::grid(Target::F1, n, lo, lo + width).unwrap();
        let once = data.normalize().unwrap();
        let twice = once.normalize().unwrap();
        let rep = twice.assumption_report();
        prop_assert!(rep.dev1 <= 1e-10 && rep.dev2 <= 1e-10);
        for (x, y) in once.points().iter().zip(twice.points()) {
            prop_assert!((x - y).abs() <= 1e-10 * (1.0 + x.abs()));
        }
        for (x, y) in once.targets().iter().zip(twice.targets()) {
            prop_assert!((x - y).abs() <= 1e-10 * (1.0 + x.abs()));
        }
    }
}

#[test]
fn coarse_records_are_a_subsequence_of_fine_ones() {
    let fine_cfg = RunConfig { m: 100, max_time: 2.0, record_stride: 1, ..RunConfig::default() };
    let coarse_cfg = RunConfig { record_stride: 10, ..fine_cfg.clone() };
    let data = fine_cfg.dataset().unwrap();
    let act = Activation::tanh();
    let fine = run(&fine_cfg, &data, &act, StopRule::MaxTime).unwrap();
    let coarse = run(&coarse_cfg, &data, &act, StopRule::MaxTime).unwrap();
    assert_eq!(coarse.records.len(), 201);
    for (i, r) in coarse.records.iter().enumerate() {
        assert_eq!(r, &fine.records[10 * i]);
    }
    assert_eq!(coarse.terminal, fine.terminal);
}
