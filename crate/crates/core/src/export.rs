//! CSV and JSON artifacts.
//!
//! Every CSV starts with the line `# schema=1`. Numbers are written in
//! decimal with 12 significant digits (`%.12g` style); JSON numbers are
//! rounded to the same precision.
//!
//! Trajectory CSV columns, in order:
//! `t, loss, K, K_prime, q_max, norm_a, norm_W, dir_sum_1 .. dir_sum_d,
//! w2_rel, condensation_ratio, grad_inf_norm, theta_inf_norm`.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::dataset::{AssumptionReport, NormalizationMap};
use crate::dynamics::{Record, StopReason, Trajectory};
use crate::error::{Error, Result};
use crate::milestones::MilestoneReport;

pub const SCHEMA_VERSION: u32 = 1;
pub const SCHEMA_LINE: &str = "# schema=1";
pub const SIGNIFICANT_DIGITS: usize = 12;

/// `%.12g`: fixed notation for decimal exponents in `[-4, 12)`, otherwise
/// scientific; trailing zeros removed.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..SIGNIFICANT_DIGITS as i32).contains(&exp) {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        let mantissa = trim_zeros(mantissa.to_string());
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// `x` rounded to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().unwrap_or(x)
}

pub fn trajectory_header(d: usize) -> Vec<String> {
    let mut cols: Vec<String> =
        ["t", "loss", "K", "K_prime", "q_max", "norm_a", "norm_W"].iter().map(|s| s.to_string()).collect();
    cols.extend((1..=d).map(|i| format!("dir_sum_{i}")));
    cols.extend(
        ["w2_rel", "condensation_ratio", "grad_inf_norm", "theta_inf_norm"].iter().map(|s| s.to_string()),
    );
    cols
}

pub fn write_trajectory_csv<W: Write>(records: &[Record], d: usize, out: W) -> Result<()> {
    let mut out = std::io::BufWriter::new(out);
    writeln!(out, "{SCHEMA_LINE}")?;
    writeln!(out, "{}", trajectory_header(d).join(","))?;
    for r in records {
        let mut row = vec![r.t, r.loss, r.k, r.k_prime, r.q_max, r.norm_a, r.norm_w];
        row.extend_from_slice(&r.dir_sums);
        row.extend([r.w2_rel, r.condensation_ratio, r.grad_inf_norm, r.theta_inf_norm]);
        let line: Vec<String> = row.into_iter().map(fmt_num).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_trajectory_csv(trajectory: &Trajectory, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_trajectory_csv(&trajectory.records, trajectory.config.d, file)
}

/// Checks the schema line and returns the remaining lines.
pub(crate) fn read_schema_body(path: &Path) -> Result<Vec<String>> {
    let file = std::fs::File::open(path)?;
    let mut lines = std::io::BufReader::new(file).lines();
    match lines.next() {
        Some(Ok(first)) if first.trim() == SCHEMA_LINE => {}
        _ => return Err(Error::Parse(format!("{}: missing '{SCHEMA_LINE}' line", path.display()))),
    }
    lines.collect::<std::io::Result<Vec<_>>>().map_err(Error::from)
}

/// Reads a trajectory CSV back into records (values carry 12 digits).
pub fn load_trajectory_csv(path: impl AsRef<Path>) -> Result<Vec<Record>> {
    let path = path.as_ref();
    let body = read_schema_body(path)?;
    let text = body.join("\n");
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(String::from).collect();
    let d = header.iter().filter(|h| h.starts_with("dir_sum_")).count();
    if d == 0 || header != trajectory_header(d) {
        return Err(Error::Parse(format!("{}: unexpected trajectory header", path.display())));
    }
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let v: Vec<f64> = row
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| Error::Parse(format!("not a number: '{s}'"))))
            .collect::<Result<_>>()?;
        records.push(Record {
            t: v[0],
            loss: v[1],
            k: v[2],
            k_prime: v[3],
            q_max: v[4],
            norm_a: v[5],
            norm_w: v[6],
            dir_sums: v[7..7 + d].to_vec(),
            w2_rel: v[7 + d],
            condensation_ratio: v[8 + d],
            grad_inf_norm: v[9 + d],
            theta_inf_norm: v[10 + d],
        });
    }
    Ok(records)
}

/// Terminal-state statistics for the run summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerminalStats {
    pub t: f64,
    pub loss: f64,
    pub k: f64,
    pub k_prime: f64,
    pub q_max: f64,
    pub norm_a: f64,
    pub norm_w: f64,
    pub w2_rel: f64,
    pub condensation_ratio: f64,
    pub records: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema: u32,
    pub version: String,
    pub config: RunConfig,
    pub dataset: AssumptionReport,
    pub normalization: Option<NormalizationMap>,
    pub stop_reason: StopReason,
    pub terminal: TerminalStats,
    pub milestones: Option<MilestoneReport>,
}

impl RunSummary {
    pub fn new(
        trajectory: &Trajectory,
        dataset: AssumptionReport,
        normalization: Option<NormalizationMap>,
        milestones: Option<MilestoneReport>,
    ) -> Self {
        let last = trajectory.records.last().expect("a run records at least once");
        Self {
            schema: SCHEMA_VERSION,
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: trajectory.config.clone(),
            dataset,
            normalization,
            stop_reason: trajectory.stop_reason,
            terminal: TerminalStats {
                t: last.t,
                loss: last.loss,
                k: last.k,
                k_prime: last.k_prime,
                q_max: last.q_max,
                norm_a: last.norm_a,
                norm_w: last.norm_w,
                w2_rel: last.w2_rel,
                condensation_ratio: last.condensation_ratio,
                records: trajectory.records.len(),
            },
            milestones,
        }
    }
}

/// Rounds every float in a JSON tree to 12 significant digits.
pub fn round_json(value: &mut serde_json::Value) {
    match value {
        serde_json::Value::Number(n) => {
            if n.is_f64() {
                if let Some(x) = n.as_f64() {
                    if let Some(r) = serde_json::Number::from_f64(round_sig(x)) {
                        *n = r;
                    }
                }
            }
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(round_json),
        serde_json::Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

/// Pretty JSON with numbers rounded to 12 significant digits.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut tree = serde_json::to_value(value)?;
    round_json(&mut tree);
    let mut text = serde_json::to_string_pretty(&tree)?;
    text.push('\n');
    Ok(text)
}

pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_json_string(value)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digit_formatting() {
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(0.1), "0.1");
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_num(-2.0 / 3.0), "-0.666666666667");
        assert_eq!(fmt_num(123456.789), "123456.789");
        assert_eq!(fmt_num(1e-5), "1e-05");
        assert_eq!(fmt_num(1.5e-7), "1.5e-07");
        assert_eq!(fmt_num(0.000123456789012345), "0.000123456789012");
        assert_eq!(fmt_num(1e12), "1e+12");
        assert_eq!(fmt_num(999999999999.4), "999999999999");
        assert_eq!(fmt_num(9999999999999.0), "1e+13");
        assert_eq!(fmt_num(f64::NAN), "nan");
    }

    #[test]
    fn rounding() {
        assert_eq!(round_sig(0.1234567890123456), 0.123456789012);
        assert_eq!(round_sig(0.0), 0.0);
        let mut v = serde_json::json!({"a": 1.0 / 3.0, "b": [2u64, 0.25]});
        round_json(&mut v);
        assert_eq!(v["a"].as_f64().unwrap(), 0.333333333333);
        assert_eq!(v["b"][0].as_u64().unwrap(), 2);
    }

    #[test]
    fn csv_roundtrip() {
        let rec = Record {
            t: 0.01,
            loss: 0.5,
            k: 1e-4,
            k_prime: 2e-4,
            q_max: 3e-2,
            norm_a: 0.01,
            norm_w: 0.011,
            dir_sums: vec![1e-4, 2e-6],
            w2_rel: 0.02,
            condensation_ratio: 1.02,
            grad_inf_norm: 1e-3,
            theta_inf_norm: 3e-2,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traj.csv");
        let mut buf = Vec::new();
        write_trajectory_csv(&[rec.clone(), Record { t: 0.02, ..rec.clone() }], 2, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# schema=1\nt,loss,K,K_prime,q_max,norm_a,norm_W,dir_sum_1,dir_sum_2,w2_rel,"));
        std::fs::write(&path, &buf).unwrap();
        let back = load_trajectory_csv(&path).unwrap();
        assert_eq!(back[0], rec);
        assert_eq!(back.len(), 2);
    }
}
