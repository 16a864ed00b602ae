//! On the secondary plateau the two layers stop growing at the same rate.
//! Tracks how far the layer rate ratio moves from 1, next to the
//! fourth-order data moments that drive the split.
//!
//! cargo run --release --example departure [-- m]

use condense::diagnostics::departure_diagnostic;
use condense::dynamics::Integration;
use condense::{detect_milestones, init_params, run, Activation, Milestone, RunConfig, StopRule};

fn main() -> condense::Result<()> {
    let m = std::env::args().nth(1).map(|s| s.parse().expect("m")).unwrap_or(5000);
    let cfg = RunConfig { m, max_time: 40.0, ..RunConfig::default() };
    let data = cfg.dataset()?;
    let act = Activation::tanh();
    let traj = run(&cfg, &data, &act, StopRule::Milestone(Milestone::SecondaryPlateau))?;
    let rep = detect_milestones(&traj, cfg.beta, cfg.plateau_eps)?;
    let show = |t: Option<f64>| t.map(|t| format!("{t:.2}")).unwrap_or("-".into());
    println!("T_p {}  T_d {}  T_sp {}", show(rep.t_p_emp), show(rep.t_d_emp), show(rep.t_sp_emp));

    // replay the run, sampling the diagnostic as it goes
    let mut state = init_params(&cfg)?;
    let mut flow = Integration::new(&data, &act, cfg.integrator, m);
    let h = cfg.step_size;
    let end = traj.terminal.t() + 2.0;
    let steps = (end / h).round() as u64;
    for i in 1..=steps {
        flow.advance(&mut state, h, i as f64 * h);
        if i % 500 == 0 {
            let dep = departure_diagnostic(&state, &data, &act)?;
            println!(
                "t = {:5.2}  layer rate ratio - 1 = {:>10.3e}  c4 {:.4}  b3 {:.4}",
                state.t(),
                dep.layer_rate_ratio - 1.0,
                dep.c4,
                dep.b3
            );
        }
    }
    Ok(())
}
