//! Grids of independent runs over `m x alpha x target x seed`.
//!
//! Cells run on a bounded worker pool; each writes its own files under
//! `cells/<key>/`, then a single aggregation step writes `sweep.csv` (one row
//! per successful cell, sorted by key) and `sweep_cells.csv` (per-cell mean,
//! min and max across seeds).

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::dataset::{Dataset, Target};
use crate::dynamics::{run, Milestone, StopRule};
use crate::error::{Error, Result};
use crate::export::{fmt_num, read_schema_body, save_trajectory_csv, write_json, RunSummary, SCHEMA_LINE};
use crate::milestones::{detect_milestones, MilestoneReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub ms: Vec<usize>,
    pub alphas: Vec<f64>,
    pub targets: Vec<Target>,
    pub seeds: Vec<u64>,
    /// Shared settings; its `m`, `alpha`, `data.target` and `seed` are
    /// replaced per cell.
    pub base: RunConfig,
    pub stop: StopRule,
    /// Worker threads; `None` uses the rayon default.
    pub threads: Option<usize>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            ms: vec![1000, 5000, 10000, 20000],
            alphas: vec![1.0],
            targets: vec![Target::F1],
            seeds: vec![0, 1, 2],
            base: RunConfig::default(),
            stop: StopRule::Milestone(Milestone::Descent),
            threads: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellKey {
    pub m: usize,
    pub alpha: f64,
    pub target: Target,
    pub seed: u64,
}

impl CellKey {
    fn order(a: &Self, b: &Self) -> Ordering {
        a.m.cmp(&b.m)
            .then(a.alpha.total_cmp(&b.alpha))
            .then(a.target.cmp(&b.target))
            .then(a.seed.cmp(&b.seed))
    }

    /// Directory name of the cell, e.g. `m5000_a1_f1_s0`.
    pub fn slug(&self) -> String {
        format!("m{}_a{}_{}_s{}", self.m, fmt_num(self.alpha), self.target, self.seed)
    }
}

/// One aggregate row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub key: CellKey,
    pub t_d_emp: Option<f64>,
    pub t_p_emp: Option<f64>,
    pub t_sp_emp: Option<f64>,
    pub t_p_pred: f64,
    pub t_d_pred: f64,
    pub t_sp_pred: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub key: CellKey,
    pub message: String,
    pub numeric: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Spread {
    fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        Some(Self {
            mean: values.iter().sum::<f64>() / values.len() as f64,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            count: values.len(),
        })
    }
}

/// Statistics across the seeds of one `(m, alpha, target)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub m: usize,
    pub alpha: f64,
    pub target: Target,
    pub seeds: usize,
    pub t_d: Option<Spread>,
    pub t_p: Option<Spread>,
    pub t_sp: Option<Spread>,
    pub t_p_pred: f64,
    pub t_d_pred: f64,
    pub t_sp_pred: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub cells: Vec<CellSummary>,
    pub failures: Vec<CellFailure>,
}

impl SweepSpec {
    pub fn keys(&self) -> Vec<CellKey> {
        let mut keys = Vec::new();
        for &m in &self.ms {
            for &alpha in &self.alphas {
                for &target in &self.targets {
                    for &seed in &self.seeds {
                        keys.push(CellKey { m, alpha, target, seed });
                    }
                }
            }
        }
        keys
    }

    pub fn cell_config(&self, key: &CellKey) -> RunConfig {
        let mut cfg = self.base.clone();
        cfg.m = key.m;
        cfg.alpha = key.alpha;
        cfg.seed = key.seed;
        cfg.data.target = key.target;
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        if self.ms.is_empty() || self.alphas.is_empty() || self.targets.is_empty() || self.seeds.is_empty() {
            return Err(Error::Config("sweep grids must be nonempty".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be positive".into()));
        }
        for key in self.keys() {
            self.cell_config(&key)
                .validate()
                .map_err(|e| Error::Config(format!("cell {}: {e}", key.slug())))?;
        }
        Ok(())
    }
}

fn run_cell(spec: &SweepSpec, key: &CellKey, data: &Dataset, out_dir: Option<&Path>) -> Result<MilestoneReport> {
    let cfg = spec.cell_config(key);
    let act = cfg.activation()?;
    let traj = run(&cfg, data, &act, spec.stop)?;
    let report = detect_milestones(&traj, cfg.beta, cfg.plateau_eps)?;
    if let Some(dir) = out_dir {
        let cell_dir = dir.join("cells").join(key.slug());
        std::fs::create_dir_all(&cell_dir)?;
        save_trajectory_csv(&traj, cell_dir.join("trajectory.csv"))?;
        write_json(&report, cell_dir.join("milestones.json"))?;
        let summary =
            RunSummary::new(&traj, data.assumption_report(), data.normalization().cloned(), Some(report.clone()));
        write_json(&summary, cell_dir.join("summary.json"))?;
    }
    Ok(report)
}

/// Runs every cell; per-cell errors are collected, not propagated.
pub fn run_sweep(spec: &SweepSpec, out_dir: Option<&Path>) -> Result<SweepOutcome> {
    spec.validate()?;
    let mut datasets = BTreeMap::new();
    for &target in &spec.targets {
        let mut data_spec = spec.base.data.clone();
        data_spec.target = target;
        datasets.insert(target, data_spec.build(spec.base.d)?);
    }
    let keys = spec.keys();
    let work = || -> Vec<(CellKey, Result<MilestoneReport>)> {
        keys.par_iter().map(|key| (*key, run_cell(spec, key, &datasets[&key.target], out_dir))).collect()
    };
    let results = match spec.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (key, result) in results {
        match result {
            Ok(rep) => rows.push(SweepRow {
                key,
                t_d_emp: rep.t_d_emp,
                t_p_emp: rep.t_p_emp,
                t_sp_emp: rep.t_sp_emp,
                t_p_pred: rep.t_p_pred,
                t_d_pred: rep.t_d_pred,
                t_sp_pred: rep.t_sp_pred,
            }),
            Err(e) => failures.push(CellFailure { key, numeric: e.is_numeric(), message: e.to_string() }),
        }
    }
    rows.sort_by(|a, b| CellKey::order(&a.key, &b.key));
    failures.sort_by(|a, b| CellKey::order(&a.key, &b.key));
    let cells = summarize(&rows);
    let outcome = SweepOutcome { rows, cells, failures };
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        write_sweep_csv(&outcome.rows, dir.join("sweep.csv"))?;
        write_cells_csv(&outcome.cells, dir.join("sweep_cells.csv"))?;
        if !outcome.failures.is_empty() {
            write_json(&outcome.failures, dir.join("failures.json"))?;
        }
    }
    Ok(outcome)
}

/// Groups rows by `(m, alpha, target)`; rows must be sorted by key.
pub fn summarize(rows: &[SweepRow]) -> Vec<CellSummary> {
    let mut out: Vec<CellSummary> = Vec::new();
    let mut start = 0;
    while start < rows.len() {
        let k = rows[start].key;
        let end = start
            + rows[start..]
                .iter()
                .take_while(|r| r.key.m == k.m && r.key.alpha == k.alpha && r.key.target == k.target)
                .count();
        let group = &rows[start..end];
        let collect = |f: fn(&SweepRow) -> Option<f64>| -> Vec<f64> { group.iter().filter_map(f).collect() };
        out.push(CellSummary {
            m: k.m,
            alpha: k.alpha,
            target: k.target,
            seeds: group.len(),
            t_d: Spread::of(&collect(|r| r.t_d_emp)),
            t_p: Spread::of(&collect(|r| r.t_p_emp)),
            t_sp: Spread::of(&collect(|r| r.t_sp_emp)),
            t_p_pred: group[0].t_p_pred,
            t_d_pred: group[0].t_d_pred,
            t_sp_pred: group[0].t_sp_pred,
        });
        start = end;
    }
    out
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}

pub const SWEEP_HEADER: &str = "m,alpha,target,seed,T_d_emp,T_p_emp,T_sp_emp,T_p_pred,T_d_pred,T_sp_pred";

pub fn sweep_csv_string(rows: &[SweepRow]) -> String {
    let mut out = format!("{SCHEMA_LINE}\n{SWEEP_HEADER}\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.key.m,
            fmt_num(r.key.alpha),
            r.key.target,
            r.key.seed,
            opt(r.t_d_emp),
            opt(r.t_p_emp),
            opt(r.t_sp_emp),
            fmt_num(r.t_p_pred),
            fmt_num(r.t_d_pred),
            fmt_num(r.t_sp_pred),
        ));
    }
    out
}

pub fn write_sweep_csv(rows: &[SweepRow], path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, sweep_csv_string(rows))?;
    Ok(())
}

pub fn write_cells_csv(cells: &[CellSummary], path: impl AsRef<Path>) -> Result<()> {
    let mut out = format!(
        "{SCHEMA_LINE}\nm,alpha,target,seeds,T_d_mean,T_d_min,T_d_max,T_p_mean,T_p_min,T_p_max,\
         T_sp_mean,T_sp_min,T_sp_max,T_p_pred,T_d_pred,T_sp_pred\n"
    );
    let spread = |s: Option<Spread>| match s {
        Some(s) => format!("{},{},{}", fmt_num(s.mean), fmt_num(s.min), fmt_num(s.max)),
        None => ",,".to_string(),
    };
    for c in cells {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            c.m,
            fmt_num(c.alpha),
            c.target,
            c.seeds,
            spread(c.t_d),
            spread(c.t_p),
            spread(c.t_sp),
            fmt_num(c.t_p_pred),
            fmt_num(c.t_d_pred),
            fmt_num(c.t_sp_pred),
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn load_sweep_csv(path: impl AsRef<Path>) -> Result<Vec<SweepRow>> {
    let path = path.as_ref();
    let body = read_schema_body(path)?;
    let text = body.join("\n");
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(String::from).collect();
    if header.join(",") != SWEEP_HEADER {
        return Err(Error::Parse(format!("{}: unexpected sweep header", path.display())));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|_| Error::Parse(format!("not a number: '{s}'")));
    let opt_num = |s: &str| if s.is_empty() { Ok(None) } else { num(s).map(Some) };
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        rows.push(SweepRow {
            key: CellKey {
                m: rec[0].parse().map_err(|_| Error::Parse(format!("bad m '{}'", &rec[0])))?,
                alpha: num(&rec[1])?,
                target: rec[2].parse()?,
                seed: rec[3].parse().map_err(|_| Error::Parse(format!("bad seed '{}'", &rec[3])))?,
            },
            t_d_emp: opt_num(&rec[4])?,
            t_p_emp: opt_num(&rec[5])?,
            t_sp_emp: opt_num(&rec[6])?,
            t_p_pred: num(&rec[7])?,
            t_d_pred: num(&rec[8])?,
            t_sp_pred: num(&rec[9])?,
        });
    }
    Ok(rows)
}

/// Default output location: `$CONDENSE_OUT_DIR` when set, else `out`.
pub fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out"))
}

pub const OUT_DIR_ENV: &str = "CONDENSE_OUT_DIR";

#[cfg(test)]
mod tests {
    use super::*;

    fn row(m: usize, alpha: f64, seed: u64, td: Option<f64>) -> SweepRow {
        SweepRow {
            key: CellKey { m, alpha, target: Target::F1, seed },
            t_d_emp: td,
            t_p_emp: None,
            t_sp_emp: None,
            t_p_pred: 1.0,
            t_d_pred: 2.0,
            t_sp_pred: 3.0,
        }
    }

    #[test]
    fn csv_roundtrip() {
        let rows = vec![row(100, 1.0, 0, Some(2.5)), row(100, 1.25, 1, None)];
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        write_sweep_csv(&rows, &p).unwrap();
        assert_eq!(load_sweep_csv(&p).unwrap(), rows);
    }

    #[test]
    fn summary_spreads() {
        let rows = vec![row(100, 1.0, 0, Some(2.0)), row(100, 1.0, 1, Some(4.0)), row(200, 1.0, 0, None)];
        let cells = summarize(&rows);
        assert_eq!(cells.len(), 2);
        let s = cells[0].t_d.unwrap();
        assert_eq!((s.mean, s.min, s.max, s.count), (3.0, 2.0, 4.0, 2));
        assert!(cells[1].t_d.is_none());
    }

    #[test]
    fn validation() {
        let spec = SweepSpec { ms: vec![], ..SweepSpec::default() };
        assert!(spec.validate().is_err());
        let spec = SweepSpec { alphas: vec![1.0, 0.3], ..SweepSpec::default() };
        assert!(spec.validate().is_err());
        assert_eq!(SweepSpec::default().keys().len(), 12);
    }
}
