//! Once the plateau ends, K follows the logistic law `K' = 2K(1 - K)`.
//! Compares the recorded K with the closed form started at the plateau milestone.
//!
//! cargo run --release --example logistic_k

use condense::dynamics::logistic_k;
use condense::{detect_milestones, run, Activation, Milestone, RunConfig, StopRule};

fn main() -> condense::Result<()> {
    let cfg = RunConfig::default();
    let data = cfg.dataset()?;
    let traj = run(&cfg, &data, &Activation::tanh(), StopRule::Milestone(Milestone::Descent))?;
    let rep = detect_milestones(&traj, cfg.beta, cfg.plateau_eps)?;
    let start = &traj.records[rep.index_p.expect("plateau milestone")];
    println!("start at T_p = {:.3} with K = {:.5}", start.t, start.k);
    for r in traj.records.iter().filter(|r| r.t >= start.t).step_by(40) {
        let model = logistic_k(start.k, start.t, r.t)?;
        println!("t = {:5.2}  K = {:.5}  logistic {:.5}  K/K' = {:.5}", r.t, r.k, model, r.k / r.k_prime);
    }
    Ok(())
}
