//! Inner weights condense onto the leading input direction during the initial
//! plateau. The 1-D grid is padded with two sign directions, normalized, and
//! the share of squared weight outside the first direction is tracked.
//!
//! cargo run --release --example condensation

use condense::{detect_milestones, run, Activation, Milestone, RunConfig, StopRule};

fn main() -> condense::Result<()> {
    let cfg = RunConfig { d: 3, max_time: 20.0, ..RunConfig::default() };
    let data = cfg.dataset()?;
    let rep = data.assumption_report();
    println!("padded data: n = {}, d = {}, dev1 = {:.1e}, dev2 = {:.1e}", data.n(), data.d(), rep.dev1, rep.dev2);

    let start = std::time::Instant::now();
    let traj = run(&cfg, &data, &Activation::tanh(), StopRule::Milestone(Milestone::Descent))?;
    println!("{} records in {:.1?}", traj.records.len(), start.elapsed());
    let ms = detect_milestones(&traj, cfg.beta, cfg.plateau_eps)?;

    for r in traj.records.iter().step_by(50) {
        println!("t = {:5.2}  condensation ratio = {:.5}  K = {:.4}", r.t, r.condensation_ratio, r.k);
    }
    if let Some(i) = ms.index_p {
        let r = &traj.records[i];
        println!("at T_p = {:.2}: condensation ratio {:.5}", r.t, r.condensation_ratio);
    }
    Ok(())
}
