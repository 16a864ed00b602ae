//! Full run on the 1000-point grid with the f1 target: locate the three
//! stages and print the diagnostics at each milestone.
//!
//! cargo run --release --example three_stages [-- m]

use condense::diagnostics::{conservation_residual, k_ratio_series};
use condense::{detect_milestones, run, Activation, Milestone, RunConfig, StopRule};

fn main() -> condense::Result<()> {
    let m = std::env::args().nth(1).map(|s| s.parse().expect("m")).unwrap_or(5000);
    let cfg = RunConfig { m, max_time: 40.0, ..RunConfig::default() };
    let data = cfg.dataset()?;
    let act = Activation::tanh();
    let start = std::time::Instant::now();
    let traj = run(&cfg, &data, &act, StopRule::Milestone(Milestone::SecondaryPlateau))?;
    println!("{} records in {:.1?}", traj.records.len(), start.elapsed());

    let rep = detect_milestones(&traj, cfg.beta, cfg.plateau_eps)?;
    println!("T_p = {:?} (pred {:.3})", rep.t_p_emp, rep.t_p_pred);
    println!("T_d = {:?} (pred {:.3})", rep.t_d_emp, rep.t_d_pred);
    println!("T_sp = {:?} (pred {:.3})", rep.t_sp_emp, rep.t_sp_pred);
    println!("rate ratios: descent/plateau {:?}, secondary/descent {:?}", rep.ratio_descent_plateau, rep.ratio_secondary_descent);

    for (name, idx) in [("T_p", rep.index_p), ("T_d", rep.index_d), ("T_sp", rep.index_sp)] {
        if let Some(i) = idx {
            let r = &traj.records[i];
            println!(
                "{name}: loss {:.6} K {:.4} W2_rel {:.5} |a|/|W| {:.5} grad/theta {:.4}",
                r.loss, r.k, r.w2_rel, r.norm_ratio(), r.critical_point_ratio()
            );
        }
    }
    if let (Some(tp), Some(td)) = (rep.t_p_emp, rep.t_d_emp) {
        let cons = conservation_residual(&traj, (tp, td))?;
        let worst = cons.iter().map(|c| c.1).fold(0.0, f64::max);
        let ratios = k_ratio_series(&traj.records, (tp, td));
        let dev = ratios.iter().map(|r| (r.1 - 0.5).abs()).fold(0.0, f64::max);
        println!("over [T_p, T_d]: max conservation residual {worst:.4}, max |K/K' - 1/2| {dev:.4}");
    }
    Ok(())
}
