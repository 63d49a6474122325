//! CSV forms of fit data and model curves.

use std::io::{Read, Write};

use super::{DataPoint, ModelKind};
use crate::error::{Error, Result};

/// Reads `tau_us,counts[,weight]`; a missing or empty weight becomes
/// `1 / max(counts, 1)`. Lines starting with `#` are comments; errors carry
/// the 1-based line number.
pub fn read_fit_data<R: Read>(input: R) -> Result<Vec<DataPoint>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let with_weight = match headers.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["tau_us", "counts"] => false,
        ["tau_us", "counts", "weight"] => true,
        _ => {
            return Err(Error::Row {
                row: 1,
                message: format!("header must be `tau_us,counts[,weight]`, got `{}`", headers.join(",")),
            })
        }
    };
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Row { row: e.position().map_or(0, |p| p.line() as usize), message: e.to_string() })?;
        let row = rec.position().map_or(0, |p| p.line() as usize);
        let bad = |message: String| Error::Row { row, message };
        if rec.len() < 2 || rec.len() > headers.len() {
            return Err(bad(format!("expected {} fields, got {}", headers.len(), rec.len())));
        }
        let num = |i: usize, what: &str| -> Result<f64> {
            let v: f64 = rec[i].parse().map_err(|_| bad(format!("{what} `{}` is not a number", &rec[i])))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(bad(format!("{what} must be finite")))
            }
        };
        let tau = num(0, "tau_us")?;
        let counts = num(1, "counts")?;
        let point = if with_weight && rec.len() == 3 && !rec[2].is_empty() {
            let weight = num(2, "weight")?;
            if weight <= 0.0 {
                return Err(bad(format!("weight {weight} must be > 0")));
            }
            DataPoint { tau, counts, weight }
        } else {
            DataPoint::with_default_weight(tau, counts)
        };
        out.push(point);
    }
    Ok(out)
}

pub fn write_fit_data<W: Write>(data: &[DataPoint], out: W, comments: &[String]) -> Result<()> {
    let mut out = out;
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    writeln!(out, "tau_us,counts,weight")?;
    for d in data {
        writeln!(out, "{:?},{:?},{:?}", d.tau, d.counts, d.weight)?;
    }
    Ok(())
}

/// Model evaluated on `n` evenly spaced delays over `[lo, hi]`, as
/// `tau_us,model`.
pub fn write_model_curve<W: Write>(
    kind: ModelKind,
    params: &[f64],
    (lo, hi): (f64, f64),
    n: usize,
    out: W,
    comments: &[String],
) -> Result<()> {
    if params.len() != kind.n_params() || n < 2 || !(hi > lo) {
        return Err(Error::param("model curve needs matching parameters, n >= 2 and hi > lo"));
    }
    let mut out = out;
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    writeln!(out, "tau_us,model")?;
    for i in 0..n {
        let t = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        writeln!(out, "{:?},{:?}", t, kind.eval(t, params))?;
    }
    Ok(())
}
