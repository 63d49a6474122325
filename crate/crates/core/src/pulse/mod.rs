//! Pulse sequences as ordered segment lists, simulated segment by segment.

mod synth;
mod trace;

use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

pub use synth::{
    synthesize_hahn, synthesize_ramsey, synthesize_ramsey_difference, IscBackground,
};
pub use trace::SignalTrace;

use crate::error::{Error, Result};
use crate::lambda::{
    build_hamiltonian, build_lindbladian, stationary_state, DecayRates, LambdaParams, Superoperator,
};
use crate::quantum::{
    c, embed_qubit_unitary, qubit_rotation, DensityMatrix, Level, Mat5, C64,
};

/// Ground polarization reached by a purified (resonant) reset.
pub const PURIFIED_POLARIZATION: f64 = 0.84;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadoutMode {
    /// Dark/bright projection: PL under a CPT-type drive.
    Dbp { drive: LambdaParams, rates: DecayRates },
    /// Spin-selective cycling transition, PL ∝ `|0_g⟩` population.
    CyclingZ { rate: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseSegment {
    /// Non-resonant reset into the mixture set by
    /// [`PulseSequence::reset_polarization`].
    GreenReset,
    /// Ideal microwave rotation `exp(−i n̂·σ α/2)` with `n̂` in the
    /// equatorial plane at `axis_angle` from x.
    EsrRotation { axis_angle: f64, angle: f64 },
    OpticalDrive { drive: LambdaParams, rates: DecayRates, duration: f64 },
    /// Drive-free evolution; `detuning` is the qubit precession rate in
    /// the microwave frame.
    FreePrecession { duration: f64, detuning: f64 },
    ReadoutWindow { duration: f64, mode: ReadoutMode, #[serde(default)] measured: bool },
}

impl PulseSegment {
    pub fn duration(&self) -> f64 {
        match self {
            PulseSegment::GreenReset | PulseSegment::EsrRotation { .. } => 0.0,
            PulseSegment::OpticalDrive { duration, .. }
            | PulseSegment::FreePrecession { duration, .. }
            | PulseSegment::ReadoutWindow { duration, .. } => *duration,
        }
    }
}

/// Dephasing applied during free precession: Gaussian `T2*` envelope times
/// a hyperfine triplet at `δ − ω_HF, δ, δ + ω_HF` weighted `(C1, 1, C2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FreePrecessionModel {
    pub t2_star: f64,
    pub omega_hf: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Default for FreePrecessionModel {
    fn default() -> Self {
        Self { t2_star: 1.0, omega_hf: TAU * 2.19, c1: 1.0, c2: 1.0 }
    }
}

impl FreePrecessionModel {
    /// Factor multiplying `ρ[+1, 0]` after free precession for `tau`.
    pub fn coherence_factor(&self, tau: f64, detuning: f64) -> C64 {
        let env = if self.t2_star.is_infinite() {
            1.0
        } else {
            (-tau * tau / (2.0 * self.t2_star * self.t2_star)).exp()
        };
        let norm = self.c1 + 1.0 + self.c2;
        let phase = |w: f64| C64::from_polar(1.0, w * tau);
        (phase(detuning - self.omega_hf) * self.c1
            + phase(detuning)
            + phase(detuning + self.omega_hf) * self.c2)
            * (env / norm)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    pub segments: Vec<PulseSegment>,
    pub shots: u64,
    pub collection_efficiency: f64,
    /// `|0_g⟩` population after a green reset.
    pub reset_polarization: f64,
    pub free_precession: FreePrecessionModel,
    /// Incoherent rates acting outside optical pulses. `None` reuses the
    /// rates of the most recent optical segment without pure dephasing.
    pub relaxation: Option<DecayRates>,
    /// Time step of the output grid, µs.
    pub resolution: f64,
}

impl PulseSequence {
    pub fn new(segments: Vec<PulseSegment>) -> Self {
        Self {
            segments,
            shots: 1,
            collection_efficiency: 1.0,
            reset_polarization: 0.8,
            free_precession: FreePrecessionModel::default(),
            relaxation: None,
            resolution: 0.002,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.shots == 0 {
            return Err(Error::param("shots must be > 0"));
        }
        let eff = self.collection_efficiency;
        if !(eff > 0.0 && eff <= 1.0) {
            return Err(Error::param(format!("collection_efficiency = {eff} must be in (0, 1]")));
        }
        if !(0.0..=1.0).contains(&self.reset_polarization) {
            return Err(Error::param("reset_polarization must be in [0, 1]"));
        }
        if !(self.resolution.is_finite() && self.resolution > 0.0) {
            return Err(Error::param("resolution must be > 0"));
        }
        let fp = &self.free_precession;
        if !(fp.t2_star > 0.0) || fp.c1 < 0.0 || fp.c2 < 0.0 || !fp.omega_hf.is_finite() {
            return Err(Error::param("free precession model needs t2_star > 0 and c1, c2 >= 0"));
        }
        if let Some(r) = &self.relaxation {
            r.validate()?;
        }
        let mut measured = 0;
        for (i, seg) in self.segments.iter().enumerate() {
            let d = seg.duration();
            if !(d.is_finite() && d >= 0.0) {
                return Err(Error::param(format!("segment {i}: duration {d} must be finite and >= 0")));
            }
            match seg {
                PulseSegment::EsrRotation { axis_angle, angle } => {
                    if !(axis_angle.is_finite() && angle.is_finite()) {
                        return Err(Error::param(format!("segment {i}: rotation angles must be finite")));
                    }
                }
                PulseSegment::OpticalDrive { drive, rates, .. } => {
                    drive.validate()?;
                    rates.validate()?;
                }
                PulseSegment::FreePrecession { detuning, .. } => {
                    if !detuning.is_finite() {
                        return Err(Error::param(format!("segment {i}: detuning must be finite")));
                    }
                }
                PulseSegment::ReadoutWindow { mode, measured: m, .. } => {
                    measured += *m as usize;
                    match mode {
                        ReadoutMode::Dbp { drive, rates } => {
                            drive.validate()?;
                            rates.validate()?;
                        }
                        ReadoutMode::CyclingZ { rate } => {
                            if !(rate.is_finite() && *rate >= 0.0) {
                                return Err(Error::param("cycling readout rate must be >= 0"));
                            }
                        }
                    }
                }
                PulseSegment::GreenReset => {}
            }
        }
        if measured > 1 {
            return Err(Error::param(format!("{measured} readout windows flagged as measured, at most 1 allowed")));
        }
        Ok(())
    }

    /// Index of the readout window whose counts are reported: the flagged
    /// one, else the last readout window.
    pub fn measured_window(&self) -> Option<usize> {
        let is_readout = |s: &PulseSegment| matches!(s, PulseSegment::ReadoutWindow { .. });
        self.segments
            .iter()
            .position(|s| matches!(s, PulseSegment::ReadoutWindow { measured: true, .. }))
            .or_else(|| self.segments.iter().rposition(is_readout))
    }
}

/// Collected radiative emission rate `η Γ (ρ_RR + ρ_LL)`, per µs.
pub fn pl_rate(rho: &DensityMatrix, rates: &DecayRates, efficiency: f64) -> f64 {
    efficiency * rates.gamma_rad * rho.excited_population()
}

fn excited_raw(m: &Mat5) -> f64 {
    m[(Level::R.index(), Level::R.index())].re + m[(Level::L.index(), Level::L.index())].re
}

/// How photons are counted during a stretch of evolution.
#[derive(Clone, Copy)]
enum Emission {
    Radiative(f64),
    Cycling(f64),
}

impl Emission {
    fn rate(self, m: &Mat5) -> f64 {
        let v = match self {
            Emission::Radiative(g) => g * excited_raw(m),
            Emission::Cycling(k) => k * m[(Level::Zero.index(), Level::Zero.index())].re,
        };
        v.max(0.0)
    }

    fn integral(self, int: &Mat5) -> f64 {
        self.rate(int)
    }
}

struct Recorder<'a> {
    seq: &'a PulseSequence,
    trace: SignalTrace,
    t: f64,
}

impl Recorder<'_> {
    fn push(&mut self, rho: DensityMatrix, emission: Emission) {
        self.trace.t_us.push(self.t);
        self.trace.bloch.push(rho.bloch_vector());
        self.trace.pl_rate.push(self.seq.collection_efficiency * emission.rate(rho.matrix()));
        self.trace.states.push(rho);
    }

    /// Evolves under `w` for `duration` in grid steps, recording each step.
    fn evolve(&mut self, w: &Superoperator, rho: DensityMatrix, duration: f64, emission: Emission) -> Result<DensityMatrix> {
        let n = steps(duration, self.seq.resolution);
        let h = duration / n as f64;
        let t0 = self.t;
        let prop = w.propagator(h)?;
        let mut m = rho.into_matrix();
        let mut out = None;
        for k in 1..=n {
            m = prop.apply_raw(&m);
            let state = DensityMatrix::from_evolved(m)?;
            m = *state.matrix();
            self.t = t0 + h * k as f64;
            out = Some(state.clone());
            self.push(state, emission);
        }
        Ok(out.expect("at least one step"))
    }
}

fn steps(duration: f64, resolution: f64) -> usize {
    ((duration / resolution).ceil() as usize).max(1)
}

/// Ensemble average over `exp(−i δ τ σ_z / 2)` on the ground pair: element
/// `(a, b)` picks up the averaged phase at `(s_a − s_b) τ`, with
/// `s_{+1} = ½`, `s_0 = −½` and 0 for the other levels. As a mixture of
/// unitaries this stays completely positive.
fn dephase(m: &Mat5, model: &FreePrecessionModel, tau: f64, detuning: f64) -> Mat5 {
    let spin = |k: usize| match k {
        0 => 0.5,
        1 => -0.5,
        _ => 0.0,
    };
    let half = model.coherence_factor(0.5 * tau, detuning);
    let full = model.coherence_factor(tau, detuning);
    let mut out = *m;
    for a in 0..5 {
        for b in 0..5 {
            let q = spin(a) - spin(b);
            let f = match q {
                q if q == 1.0 => full,
                q if q == -1.0 => full.conj(),
                q if q == 0.5 => half,
                q if q == -0.5 => half.conj(),
                _ => continue,
            };
            out[(a, b)] = m[(a, b)] * f;
        }
    }
    out
}

/// Applies the segments of `seq` to `rho0`. The seed only drives the
/// Poisson draw of [`SignalTrace::sampled_counts`].
pub fn run_sequence(seq: &PulseSequence, rho0: &DensityMatrix, rng_seed: u64) -> Result<SignalTrace> {
    seq.validate()?;
    let measured = seq.measured_window();
    let relax = seq.relaxation;
    let mut last_rates = DecayRates::zero();
    let relaxation = |relax: Option<DecayRates>, last: DecayRates| {
        relax.unwrap_or(DecayRates { gamma_phi: 0.0, ..last })
    };

    let mut rec = Recorder { seq, trace: SignalTrace::default(), t: 0.0 };
    let mut rho = rho0.clone();
    rec.push(rho.clone(), Emission::Radiative(relaxation(relax, last_rates).gamma_rad));

    for (i, seg) in seq.segments.iter().enumerate() {
        match seg {
            PulseSegment::GreenReset => {
                rho = DensityMatrix::ground_mixture(seq.reset_polarization)?;
                rec.push(rho.clone(), Emission::Radiative(0.0));
            }
            PulseSegment::EsrRotation { axis_angle, angle } => {
                let u = embed_qubit_unitary(&qubit_rotation([axis_angle.cos(), axis_angle.sin(), 0.0], *angle));
                rho = DensityMatrix::from_evolved(u * rho.matrix() * u.adjoint())?;
                let g = relaxation(relax, last_rates).gamma_rad;
                rec.push(rho.clone(), Emission::Radiative(g));
            }
            PulseSegment::OpticalDrive { drive, rates, duration } => {
                last_rates = *rates;
                let w = build_lindbladian(&build_hamiltonian(drive), rates);
                rho = rec.evolve(&w, rho, *duration, Emission::Radiative(rates.gamma_rad))?;
            }
            PulseSegment::FreePrecession { duration, detuning } => {
                let rates = relaxation(relax, last_rates);
                let w = build_lindbladian(&Mat5::zeros(), &rates);
                let n = steps(*duration, seq.resolution);
                let h = duration / n as f64;
                let t0 = rec.t;
                let prop = w.propagator(h)?;
                let mut m = *rho.matrix();
                for k in 1..=n {
                    // relaxation and the phase average commute, so the
                    // average is applied to the cumulative state
                    m = prop.apply_raw(&m);
                    let tau = h * k as f64;
                    let state = DensityMatrix::from_evolved(dephase(&m, &seq.free_precession, tau, *detuning))?;
                    rec.t = t0 + tau;
                    rho = state.clone();
                    rec.push(state, Emission::Radiative(rates.gamma_rad));
                }
            }
            PulseSegment::ReadoutWindow { duration, mode, .. } => {
                let (w, emission) = match mode {
                    ReadoutMode::Dbp { drive, rates } => {
                        last_rates = *rates;
                        (build_lindbladian(&build_hamiltonian(drive), rates), Emission::Radiative(rates.gamma_rad))
                    }
                    ReadoutMode::CyclingZ { rate } => {
                        let rates = relaxation(relax, last_rates);
                        (build_lindbladian(&Mat5::zeros(), &rates), Emission::Cycling(*rate))
                    }
                };
                if measured == Some(i) {
                    let (_, int) = w.propagator_with_integral(*duration)?;
                    let integral = crate::lambda::unvectorize(&(int * crate::lambda::vectorize(rho.matrix())));
                    let per_shot = seq.collection_efficiency * emission.integral(&integral);
                    rec.trace.integrated_counts = seq.shots as f64 * per_shot;
                    rec.trace.window = Some((rec.t, rec.t + duration));
                }
                rho = rec.evolve(&w, rho, *duration, emission)?;
            }
        }
    }

    if rec.trace.integrated_counts > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let dist = Poisson::new(rec.trace.integrated_counts)
            .map_err(|e| Error::param(format!("Poisson mean: {e}")))?;
        rec.trace.sampled_counts = Some(dist.sample(&mut rng) as u64);
    } else if measured.is_some() {
        rec.trace.sampled_counts = Some(0);
    }
    Ok(rec.trace)
}

/// Stationary PL versus two-photon detuning `δ`, applied as an energy offset
/// of `|+1_g⟩`. Rates are per µs with unit collection efficiency.
pub fn simulate_cpt_spectrum(p: &LambdaParams, rates: &DecayRates, two_photon_detunings: &[f64]) -> Result<Vec<f64>> {
    p.validate()?;
    rates.validate()?;
    let rho0 = DensityMatrix::maximally_mixed_ground();
    two_photon_detunings
        .iter()
        .map(|&d| {
            if !d.is_finite() {
                return Err(Error::param("two-photon detuning must be finite"));
            }
            let mut h = build_hamiltonian(p);
            h[(Level::PlusOne.index(), Level::PlusOne.index())] += c(d, 0.0);
            let ss = stationary_state(&build_lindbladian(&h, rates), &rho0)?;
            Ok(pl_rate(&ss, rates, 1.0))
        })
        .collect()
}
