//! Descent milestone against network width: a small parallel sweep followed
//! by a least-squares fit of the mean descent time on `ln m`.
//!
//! cargo run --release --example descent_scaling [-- out_dir]

use condense::fit::{fit_sweep, Covariate, FitMode};
use condense::sweep::{run_sweep, SweepSpec};

fn main() -> condense::Result<()> {
    let out = std::env::args().nth(1).map(std::path::PathBuf::from);
    let spec = SweepSpec::default();
    let outcome = run_sweep(&spec, out.as_deref())?;
    for cell in &outcome.cells {
        let td = cell.t_d.as_ref().map(|s| format!("{:.3} [{:.3}, {:.3}]", s.mean, s.min, s.max));
        println!("m = {:>5}  T_d mean [min, max] = {}  predicted {:.3}", cell.m, td.unwrap_or("-".into()), cell.t_d_pred);
    }
    for mode in [FitMode::CellMean, FitMode::Pooled] {
        for fit in fit_sweep(&outcome.rows, Covariate::LogM, mode)? {
            println!("{mode:?} ({}): slope {:.4}, intercept {:.4}, r2 {:.4}", fit.group, fit.slope, fit.intercept, fit.r2);
        }
    }
    if !outcome.failures.is_empty() {
        println!("{} cells failed", outcome.failures.len());
    }
    Ok(())
}
