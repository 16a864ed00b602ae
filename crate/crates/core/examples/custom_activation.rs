//! Training with a user-supplied activation. The function must vanish at the
//! origin with unit slope; its third derivative is bounded numerically.
//!
//! cargo run --release --example custom_activation

use condense::{detect_milestones, run, Activation, Milestone, RunConfig, StopRule};

fn main() -> condense::Result<()> {
    let act = Activation::custom("sin", f64::sin, 4.0)?;
    println!("{}: C_L ~ {:.4}", act.name(), act.lipschitz_third());
    match Activation::custom("softplus", |z: f64| z.exp().ln_1p(), 4.0) {
        Ok(_) => println!("softplus accepted"),
        Err(e) => println!("softplus rejected: {e}"),
    }

    let cfg = RunConfig { m: 1000, ..RunConfig::default() };
    let data = cfg.dataset()?;
    let traj = run(&cfg, &data, &act, StopRule::Milestone(Milestone::Descent))?;
    let rep = detect_milestones(&traj, cfg.beta, cfg.plateau_eps)?;
    let last = traj.records.last().expect("records");
    let show = |t: Option<f64>| t.map(|t| format!("{t:.2}")).unwrap_or("-".into());
    println!(
        "T_p {}  T_d {} (tanh prediction {:.3}); loss {:.5} at t = {:.2}",
        show(rep.t_p_emp),
        show(rep.t_d_emp),
        rep.t_d_pred,
        last.loss,
        last.t
    );
    Ok(())
}
