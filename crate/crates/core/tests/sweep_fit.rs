use condense::fit::{fit_sweep, Covariate, FitMode};
use condense::sweep::{run_sweep, sweep_csv_string, CellKey, SweepRow, SweepSpec};
use condense::{RunConfig, Target};

fn row(m: usize, alpha: f64, seed: u64, t_d: f64) -> SweepRow {
    SweepRow {
        key: CellKey { m, alpha, target: Target::F1, seed },
        t_d_emp: Some(t_d),
        t_p_emp: None,
        t_sp_emp: None,
        t_p_pred: 0.0,
        t_d_pred: 0.0,
        t_sp_pred: 0.0,
    }
}

#[test]
fn fit_recovers_a_planted_slope() {
    // seed offsets cancel within each cell, so cell means lie on the line
    let offsets = [-0.03, 0.0, 0.03];
    let mut rows = Vec::new();
    for m in [1000, 5000, 10000, 20000, 50000] {
        for (seed, off) in offsets.iter().enumerate() {
            rows.push(row(m, 1.0, seed as u64, 0.5 * (m as f64).ln() + 1.25 + off));
        }
    }
    let mean = &fit_sweep(&rows, Covariate::LogM, FitMode::CellMean).unwrap()[0];
    assert!((mean.slope - 0.5).abs() < 1e-12);
    assert!((mean.intercept - 1.25).abs() < 1e-11);
    assert!((mean.r2 - 1.0).abs() < 1e-12);
    assert_eq!(mean.x.len(), 5);

    let pooled = &fit_sweep(&rows, Covariate::LogM, FitMode::Pooled).unwrap()[0];
    assert_eq!(pooled.x.len(), 15);
    assert!((pooled.slope - 0.5).abs() < 1e-12);
    assert!(pooled.r2 < 1.0 && pooled.r2 > 0.99);
}

#[test]
fn groups_are_fitted_separately() {
    let mut rows = Vec::new();
    for alpha in [0.75, 1.25] {
        for m in [100, 1000, 10000] {
            rows.push(row(m, alpha, 0, (2.0 * alpha - 1.0) / 2.0 * (m as f64).ln()));
        }
    }
    let fits = fit_sweep(&rows, Covariate::LogM, FitMode::CellMean).unwrap();
    assert_eq!(fits.len(), 2);
    assert!((fits[0].slope - 0.25).abs() < 1e-12);
    assert!((fits[1].slope - 0.75).abs() < 1e-12);
}

#[test]
fn sweep_output_does_not_depend_on_grid_order() {
    let base = RunConfig { max_time: 10.0, ..RunConfig::default() };
    let forward = SweepSpec { ms: vec![100, 200, 400], seeds: vec![0, 1], base: base.clone(), ..SweepSpec::default() };
    let backward = SweepSpec { ms: vec![400, 100, 200], seeds: vec![1, 0], base, threads: Some(2), ..SweepSpec::default() };
    let a = run_sweep(&forward, None).unwrap();
    let b = run_sweep(&backward, None).unwrap();
    assert_eq!(sweep_csv_string(&a.rows), sweep_csv_string(&b.rows));
    assert_eq!(a.cells, b.cells);
    assert!(a.failures.is_empty());
}
