use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use optispin::fitting::{
    fit_model, read_fit_data, write_model_curve, DataPoint, FitOptions, ModelKind, RamseyParams,
};
use optispin::Error;

use crate::config::RunConfig;
use crate::output::Output;

pub fn load_data(path: &Path) -> Result<Vec<DataPoint>> {
    let f = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_fit_data(f).with_context(|| format!("loading fit data {}", path.display()))
}

/// Ramsey start: a 1 µs envelope near the usual 7.5 MHz detuning and 2.2
/// MHz hyperfine splitting; the multistart grid covers the δω ambiguity.
fn ramsey_guess(data: &[DataPoint]) -> RamseyParams {
    let peak = data.iter().map(|d| d.counts.abs()).fold(0.0, f64::max);
    RamseyParams {
        t2_star: 1.0,
        delta_omega: std::f64::consts::TAU * 7.5,
        omega_hf: std::f64::consts::TAU * 2.2,
        tau0: 0.0,
        amplitude: (peak / 3.0).max(1.0),
        c1: 1.0,
        c2: 1.0,
        background: 0.0,
    }
}

/// Hahn start: background from the tail, amplitude from the first point
/// and T2 from the first crossing of 1/e.
fn hahn_guess(data: &[DataPoint], free_background: bool) -> [f64; 3] {
    let mut d = data.to_vec();
    d.sort_by(|a, b| a.tau.total_cmp(&b.tau));
    let tail = (d.len() / 10).max(1);
    let bg = if free_background { d[d.len() - tail..].iter().map(|p| p.counts).sum::<f64>() / tail as f64 } else { 0.0 };
    let a = d[0].counts - bg;
    let t2 = d
        .iter()
        .find(|p| (p.counts - bg) < a / std::f64::consts::E)
        .map_or(d[d.len() - 1].tau / 2.0, |p| p.tau)
        .max(1e-6);
    [t2, a, bg]
}

pub enum FitOutcome {
    Converged,
    OptimizerFailed(Error),
}

pub fn run(kind: ModelKind, cfg: &RunConfig, data: &[DataPoint], out: &mut Output) -> Result<FitOutcome> {
    let f = &cfg.fit;
    // differenced Ramsey data has no background; synthetic Hahn traces do
    let free_background = f.free_background.unwrap_or(kind == ModelKind::Hahn);
    let mut opts: FitOptions = f.options.clone();
    if opts.free.is_none() {
        let mut free = vec![true; kind.n_params()];
        *free.last_mut().expect("models have parameters") = free_background;
        opts.free = Some(free);
    }
    let init: Vec<f64> = match kind {
        ModelKind::Ramsey => f.ramsey_init.as_ref().map_or_else(|| ramsey_guess(data), |s| s.params()).to_array().to_vec(),
        ModelKind::Hahn => f
            .hahn_init
            .as_ref()
            .map_or_else(|| hahn_guess(data, free_background), |s| s.params().to_array())
            .to_vec(),
    };
    let report = match fit_model(kind, data, &init, &opts) {
        Ok(r) => r,
        Err(e @ (Error::SingularNormalMatrix | Error::IterationBudget(_))) => return Ok(FitOutcome::OptimizerFailed(e)),
        Err(e) => return Err(e.into()),
    };
    out.write_json("fit_report.json", &report)?;
    let lo = data.iter().map(|d| d.tau).fold(f64::INFINITY, f64::min);
    let hi = data.iter().map(|d| d.tau).fold(f64::NEG_INFINITY, f64::max);
    let comments = out.comments();
    let mut w = out.create("model_curve.csv")?;
    write_model_curve(kind, &report.estimates, (lo, hi.max(lo + 1e-9)), f.curve_points.max(2), &mut w, &comments)?;
    w.flush()?;
    Ok(FitOutcome::Converged)
}
