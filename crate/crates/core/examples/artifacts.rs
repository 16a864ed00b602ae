//! Writes the trajectory CSV and JSON summaries of a short run and reads the
//! trajectory back.
//!
//! cargo run --release --example artifacts [-- out_dir]

use condense::export::{load_trajectory_csv, save_trajectory_csv, write_json, RunSummary};
use condense::sweep::default_out_dir;
use condense::{detect_milestones, run, Activation, Milestone, RunConfig, StopRule};

fn main() -> condense::Result<()> {
    let dir = std::env::args().nth(1).map(std::path::PathBuf::from).unwrap_or_else(default_out_dir);
    std::fs::create_dir_all(&dir)?;
    let cfg = RunConfig { m: 1000, ..RunConfig::default() };
    let data = cfg.dataset()?;
    let traj = run(&cfg, &data, &Activation::tanh(), StopRule::Milestone(Milestone::Descent))?;
    let report = detect_milestones(&traj, cfg.beta, cfg.plateau_eps)?;

    save_trajectory_csv(&traj, dir.join("trajectory.csv"))?;
    write_json(&report, dir.join("milestones.json"))?;
    let summary = RunSummary::new(&traj, data.assumption_report(), data.normalization().cloned(), Some(report));
    write_json(&summary, dir.join("summary.json"))?;

    let back = load_trajectory_csv(dir.join("trajectory.csv"))?;
    println!("{} records written to {}, {} read back", traj.records.len(), dir.display(), back.len());
    Ok(())
}
