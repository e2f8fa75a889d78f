//! CSV form of [`TimeSeries`] and of convergence tables.
//!
//! Numbers are written as `{:.16e}` (17 significant digits, `.` decimal
//! point) and lines end in `\n`, so parsing and re-emitting is lossless.

use std::fmt::Write as _;

use crate::driver::{ConvergenceTable, Row, TimeSeries};
use crate::error::{Error, Result};
use crate::tensor::Tensor2;

const IDX: [&str; 9] = ["11", "12", "13", "21", "22", "23", "31", "32", "33"];

pub fn header(n_branches: usize, with_error: bool) -> String {
    let mut cols = vec!["t".to_string()];
    cols.extend(IDX.iter().map(|i| format!("F{i}")));
    cols.extend(IDX.iter().map(|i| format!("T{i}")));
    cols.extend((1..=n_branches).map(|m| format!("detCi_{m}")));
    cols.push("psi".into());
    if with_error {
        cols.push("err".into());
    }
    cols.join(",")
}

fn num(out: &mut String, x: f64) {
    write!(out, "{x:.16e}").expect("writing to a String cannot fail");
}

pub fn to_csv(series: &TimeSeries) -> String {
    let with_error = series.has_error_column();
    let mut out = header(series.n_branches, with_error);
    out.push('\n');
    for r in &series.rows {
        num(&mut out, r.t);
        for x in
            r.f.components()
                .iter()
                .chain(r.cauchy.components().iter())
                .chain(&r.det_ci)
        {
            out.push(',');
            num(&mut out, *x);
        }
        out.push(',');
        num(&mut out, r.psi);
        if with_error {
            out.push(',');
            if let Some(e) = r.err {
                num(&mut out, e);
            }
        }
        out.push('\n');
    }
    out
}

fn parse_num(s: &str, line: usize) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::Csv(format!("line {line}: cannot parse {s:?} as a number")))
}

pub fn parse(text: &str) -> Result<TimeSeries> {
    let mut lines = text.split_terminator('\n');
    let head = lines
        .next()
        .ok_or_else(|| Error::Csv("empty input".into()))?;
    let cols: Vec<&str> = head.split(',').collect();
    let with_error = cols.last() == Some(&"err");
    let n_branches = cols
        .len()
        .checked_sub(20 + usize::from(with_error))
        .ok_or_else(|| Error::Csv("header too short".into()))?;
    if head != header(n_branches, with_error) {
        return Err(Error::Csv(format!("unexpected header {head:?}")));
    }
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        let n = k + 2;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(Error::Csv(format!(
                "line {n}: {} fields, expected {}",
                fields.len(),
                cols.len()
            )));
        }
        let v = |i: usize| parse_num(fields[i], n);
        let mut f = [0.0; 9];
        let mut t = [0.0; 9];
        for i in 0..9 {
            f[i] = v(1 + i)?;
            t[i] = v(10 + i)?;
        }
        let det_ci = (0..n_branches)
            .map(|m| v(19 + m))
            .collect::<Result<Vec<_>>>()?;
        let err = match (with_error, fields.last()) {
            (true, Some(&"")) => None,
            (true, _) => Some(v(fields.len() - 1)?),
            (false, _) => None,
        };
        rows.push(Row {
            t: v(0)?,
            f: Tensor2::from_components(f),
            cauchy: Tensor2::from_components(t),
            det_ci,
            psi: v(19 + n_branches)?,
            err,
        });
    }
    Ok(TimeSeries {
        n_branches,
        rows,
        c_i: Vec::new(),
    })
}

/// `dt,err_<integrator>,...` with one row per step size.
pub fn convergence_to_csv(table: &ConvergenceTable) -> String {
    let mut out = String::from("dt");
    for i in &table.integrators {
        write!(out, ",err_{}", i.name()).expect("writing to a String cannot fail");
    }
    out.push('\n');
    for (dt, errs) in &table.rows {
        num(&mut out, *dt);
        for e in errs {
            out.push(',');
            num(&mut out, *e);
        }
        out.push('\n');
    }
    out
}
