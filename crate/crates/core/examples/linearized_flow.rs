//! How long the linearized flow `a' = w, w' = a` tracks the full dynamics:
//! the deviation r_max along a run, against its bound at the plateau.
//!
//! cargo run --release --example linearized_flow [-- m]

use condense::diagnostics::{predict_milestones, r_max_bound};
use condense::dynamics::{r_max, Integration};
use condense::{init_params, Activation, RunConfig};

fn main() -> condense::Result<()> {
    let m = std::env::args().nth(1).map(|s| s.parse().expect("m")).unwrap_or(5000);
    let cfg = RunConfig { m, ..RunConfig::default() };
    let data = cfg.dataset()?;
    let act = Activation::tanh();
    let pred = predict_milestones(cfg.alpha, m as f64, cfg.beta)?;
    let bound = r_max_bound(cfg.alpha, m as f64, cfg.slack)?;
    println!("predicted plateau end {:.3}, bound on r_max there {bound:.3e}", pred.t_p);

    let initial = init_params(&cfg)?;
    let mut state = initial.clone();
    let mut flow = Integration::new(&data, &act, cfg.integrator, m);
    let h = cfg.step_size;
    let steps = (pred.t_d / h).round() as u64;
    for i in 1..=steps {
        flow.advance(&mut state, h, i as f64 * h);
        if i % 500 == 0 {
            let r = r_max(&state, &initial)?;
            let mark = if state.t() <= pred.t_p { "" } else { "  (past plateau)" };
            println!("t = {:5.2}  r_max = {r:.3e}{mark}", state.t());
        }
    }
    Ok(())
}
