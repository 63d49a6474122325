use std::io::Write;

use anyhow::{Context, Result};
use optispin::config::Presets;
use optispin::fitting::{write_fit_data, DataPoint};
use optispin::pulse::{
    run_sequence, simulate_cpt_spectrum, synthesize_hahn, synthesize_ramsey_difference, IscBackground, PulseSegment,
    PulseSequence,
};
use optispin::quantum::{dark_state, Branch, DensityMatrix, Level};

use crate::config::{delay_grid, InitialState, RunConfig};
use crate::output::Output;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Drive {
    Cpt,
    Rotation,
}

fn initial_state(init: &InitialState, presets: &Presets, preset: &str) -> Result<DensityMatrix> {
    Ok(match init {
        InitialState::A => DensityMatrix::from_bloch(&presets.get(preset)?.initial_a.bloch())?,
        InitialState::B => DensityMatrix::from_bloch(&presets.get(preset)?.initial_b.bloch())?,
        InitialState::Zero => DensityMatrix::basis(Level::Zero),
        InitialState::PlusOne => DensityMatrix::basis(Level::PlusOne),
        InitialState::Green => DensityMatrix::ground_mixture(0.8)?,
        InitialState::Bloch(s) => DensityMatrix::from_bloch(&s.bloch())?,
    })
}

/// Drive simulation: trace CSV/JSON, plus the dark-state fidelity for `cpt`.
pub fn drive(kind: Drive, cfg: &RunConfig, seed: u64, out: &mut Output) -> Result<()> {
    let presets = Presets::builtin();
    let sim = &cfg.simulate;
    let preset = sim.preset.clone().unwrap_or_else(|| match kind {
        Drive::Cpt => "cpt_init".into(),
        Drive::Rotation => "sigma_x".into(),
    });
    let p = presets.get(&preset)?;
    let seq = match &sim.sequence {
        Some(s) => s.build(presets)?,
        None => PulseSequence::new(vec![PulseSegment::OpticalDrive {
            drive: p.params(),
            rates: p.rates(),
            duration: sim.duration.0,
        }]),
    };
    let rho0 = initial_state(&sim.initial, presets, &preset)?;
    let trace = run_sequence(&seq, &rho0, seed)?;

    let mut w = out.create("trace.csv")?;
    let mut comments = out.comments();
    comments.push(format!("preset={preset}"));
    trace.write_csv(&mut w, &comments)?;
    w.flush()?;
    out.write_json("trace.json", &trace)?;

    if kind == Drive::Cpt {
        let lambda = p.params();
        let dark = dark_state(lambda.theta, lambda.phi, Branch::R);
        let mut w = out.create("fidelity.csv")?;
        for c in &comments {
            writeln!(w, "# {c}")?;
        }
        writeln!(w, "t_us,fidelity")?;
        for (t, rho) in trace.t_us.iter().zip(&trace.states) {
            writeln!(w, "{t:?},{:?}", rho.conditional_fidelity(&dark)?)?;
        }
        w.flush()?;
    }
    Ok(())
}

pub fn spectrum(cfg: &RunConfig, out: &mut Output) -> Result<()> {
    let s = &cfg.spectrum;
    anyhow::ensure!(s.points >= 2, "spectrum needs at least 2 points");
    let preset = Presets::builtin().get(&s.preset)?;
    let mut p = preset.params();
    if let Some(d) = s.delta_l {
        p.delta_l = d.0;
    }
    let span = s.span.0;
    let dets: Vec<f64> = (0..s.points).map(|i| -span + 2.0 * span * i as f64 / (s.points - 1) as f64).collect();
    let pl = simulate_cpt_spectrum(&p, &preset.rates(), &dets)?;
    let mut w = out.create("spectrum.csv")?;
    for c in out.comments() {
        writeln!(w, "# {c}")?;
    }
    writeln!(w, "two_photon_detuning_rad_per_us,pl_rate")?;
    for (d, v) in dets.iter().zip(&pl) {
        writeln!(w, "{d:?},{v:?}")?;
    }
    w.flush()?;
    Ok(())
}

fn write_data(out: &mut Output, data: &[DataPoint]) -> Result<()> {
    let comments = out.comments();
    let mut w = out.create("data.csv")?;
    write_fit_data(data, &mut w, &comments)?;
    w.flush().context("writing data.csv")
}

pub fn ramsey(cfg: &RunConfig, seed: u64, out: &mut Output) -> Result<()> {
    let r = &cfg.ramsey;
    let taus = delay_grid(r.tau_max, r.tau_step)?;
    let isc = (r.isc_b0 > 0.0).then_some(IscBackground { b0: r.isc_b0, rate: r.isc_rate.0 });
    let data = synthesize_ramsey_difference(&r.params.params(), &taus, r.shots, r.baseline, isc, seed)?;
    write_data(out, &data)
}

pub fn hahn(cfg: &RunConfig, seed: u64, out: &mut Output) -> Result<()> {
    let h = &cfg.hahn;
    let taus = delay_grid(h.tau_max, h.tau_step)?;
    let counts = synthesize_hahn(&h.params.params(), &taus, h.shots, seed)?;
    let data: Vec<DataPoint> = taus.iter().zip(&counts).map(|(&t, &y)| DataPoint::with_default_weight(t, y)).collect();
    write_data(out, &data)
}
