//! CSV formats. Every number is written with 17 significant digits
//! (`{:.16e}`), which round-trips `f64` exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::analysis::MetricSeries;
use crate::error::{Error, Result};
use crate::sim::EmpiricalSeries;
use crate::transition::TransitionMatrix;

pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

/// `L=<L>` followed by one row per destination level.
pub fn matrix_to_csv(m: &TransitionMatrix) -> String {
    let mut out = format!("L={}\n", m.max_level());
    for row in m.rows() {
        let cells: Vec<String> = row.into_iter().map(fmt_num).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn matrix_from_csv(text: &str) -> Result<TransitionMatrix> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty matrix file".into()))?;
    let max_level: usize = header
        .trim()
        .strip_prefix("L=")
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| Error::Parse(format!("expected `L=<int>` header, found `{header}`")))?;
    let rows = lines
        .enumerate()
        .map(|(i, line)| {
            line.split(',')
                .map(|c| {
                    c.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("row {i}: `{}`: {e}", c.trim())))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    if rows.len() != max_level + 1 {
        return Err(Error::Parse(format!(
            "header declares {} rows, found {}",
            max_level + 1,
            rows.len()
        )));
    }
    TransitionMatrix::from_rows(rows)
}

pub fn write_matrix(path: impl AsRef<Path>, m: &TransitionMatrix) -> Result<()> {
    std::fs::write(path, matrix_to_csv(m))?;
    Ok(())
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<TransitionMatrix> {
    matrix_from_csv(&std::fs::read_to_string(path)?)
}

/// Header `t,eae,tp_<i>...`, one row per generation.
pub fn series_to_csv(s: &MetricSeries) -> String {
    let mut out = String::from("t,eae");
    for i in s.tails.keys() {
        let _ = write!(out, ",tp_{i}");
    }
    out.push('\n');
    for t in 0..s.eae.len() {
        let _ = write!(out, "{t},{}", fmt_num(s.eae[t]));
        for v in s.tails.values() {
            let _ = write!(out, ",{}", fmt_num(v[t]));
        }
        out.push('\n');
    }
    out
}

/// Header `t,mean_err,se_err,tp_<i>,se_tp_<i>...`.
pub fn empirical_to_csv(s: &EmpiricalSeries) -> String {
    let mut out = String::from("t,mean_err,se_err");
    for i in s.tails.keys() {
        let _ = write!(out, ",tp_{i},se_tp_{i}");
    }
    out.push('\n');
    for t in 0..s.mean_err.len() {
        let _ = write!(out, "{t},{},{}", fmt_num(s.mean_err[t]), fmt_num(s.se_err[t]));
        for (f, e) in s.tails.values() {
            let _ = write!(out, ",{},{}", fmt_num(f[t]), fmt_num(e[t]));
        }
        out.push('\n');
    }
    out
}
