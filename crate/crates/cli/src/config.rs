//! Run configuration: one TOML file with optional per-command tables.
//! Dimensioned values need unit suffixes; unknown keys are rejected.

use std::f64::consts::TAU;
use std::path::PathBuf;

use anyhow::{Context, Result};
use optispin::config::{SequenceConfig, SphericalState};
use optispin::fitting::{FitOptions, HahnParams, RamseyParams};
use optispin::tomography::SamplerConfig;
use optispin::units::{AngularFrequency, Rate, Time};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub simulate: SimulateSection,
    pub spectrum: SpectrumSection,
    pub ramsey: RamseyRun,
    pub hahn: HahnRun,
    pub tomo: TomoSection,
    pub fit: FitSection,
}

impl RunConfig {
    pub fn load(path: Option<&PathBuf>) -> Result<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Starting state of a drive simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    /// The preset's first measured starting state.
    A,
    /// The preset's second measured starting state.
    B,
    Zero,
    PlusOne,
    /// Green-reset mixture, 80 % in `|0_g⟩`.
    Green,
    Bloch(SphericalState),
}

impl std::str::FromStr for InitialState {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "a" => InitialState::A,
            "b" => InitialState::B,
            "zero" => InitialState::Zero,
            "plus_one" => InitialState::PlusOne,
            "green" => InitialState::Green,
            other => anyhow::bail!("unknown initial state `{other}` (expected a, b, zero, plus_one or green)"),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    /// Defaults to `cpt_init` for `cpt` and `sigma_x` for `rotation`.
    pub preset: Option<String>,
    pub duration: Time,
    pub initial: InitialState,
    /// Full sequence; replaces the single preset drive when given.
    pub sequence: Option<SequenceConfig>,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self { preset: None, duration: Time(0.5), initial: InitialState::A, sequence: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSection {
    pub preset: String,
    /// Overrides the preset's laser detuning.
    pub delta_l: Option<AngularFrequency>,
    /// Two-photon detunings cover `[−span, span]`.
    pub span: AngularFrequency,
    pub points: usize,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self { preset: "cpt_init".into(), delta_l: None, span: AngularFrequency(50.0), points: 201 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RamseySection {
    pub t2_star: Time,
    pub delta_omega: AngularFrequency,
    pub omega_hf: AngularFrequency,
    pub tau0: Time,
    pub amplitude: f64,
    pub c1: f64,
    pub c2: f64,
    #[serde(default)]
    pub background: f64,
}

impl RamseySection {
    pub fn params(&self) -> RamseyParams {
        RamseyParams {
            t2_star: self.t2_star.0,
            delta_omega: self.delta_omega.0,
            omega_hf: self.omega_hf.0,
            tau0: self.tau0.0,
            amplitude: self.amplitude,
            c1: self.c1,
            c2: self.c2,
            background: self.background,
        }
    }

    /// Optical-readout Ramsey fit values.
    pub fn reference() -> Self {
        Self {
            t2_star: Time(1.13),
            delta_omega: AngularFrequency(TAU * 7.52),
            omega_hf: AngularFrequency(TAU * 2.19),
            tau0: Time(0.013),
            amplitude: 253.0,
            c1: 1.36,
            c2: 0.64,
            background: 0.0,
        }
    }
}

/// Differenced Ramsey synthesis: two opposite-phase traces around
/// `baseline` plus a decaying ISC background.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RamseyRun {
    pub params: RamseySection,
    pub tau_max: Time,
    pub tau_step: Time,
    pub baseline: f64,
    pub isc_b0: f64,
    pub isc_rate: Rate,
    pub shots: u64,
}

impl Default for RamseyRun {
    fn default() -> Self {
        Self {
            params: RamseySection::reference(),
            tau_max: Time(3.0),
            tau_step: Time(0.01),
            baseline: 5000.0,
            isc_b0: 2000.0,
            isc_rate: Rate(2.701),
            shots: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HahnSection {
    pub t2: Time,
    pub amplitude: f64,
    #[serde(default)]
    pub background: f64,
}

impl HahnSection {
    pub fn params(&self) -> HahnParams {
        HahnParams { t2: self.t2.0, amplitude: self.amplitude, background: self.background }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HahnRun {
    pub params: HahnSection,
    pub tau_max: Time,
    pub tau_step: Time,
    pub shots: u64,
}

impl Default for HahnRun {
    fn default() -> Self {
        Self {
            params: HahnSection { t2: Time(893.0), amplitude: 538.0, background: 5000.0 },
            tau_max: Time(2000.0),
            tau_step: Time(20.0),
            shots: 1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TomoSection {
    pub data: Option<PathBuf>,
    pub sampler: SamplerConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSection {
    pub data: Option<PathBuf>,
    pub options: FitOptions,
    /// Fit the background term; defaults to off for Ramsey (differenced
    /// data) and on for Hahn. Ignored when `options.free` is set.
    pub free_background: Option<bool>,
    /// Starting values; estimated from the data when absent.
    pub ramsey_init: Option<RamseySection>,
    pub hahn_init: Option<HahnSection>,
    /// Points in the model-curve export.
    pub curve_points: usize,
}

impl Default for FitSection {
    fn default() -> Self {
        Self {
            data: None,
            options: FitOptions::default(),
            free_background: None,
            ramsey_init: None,
            hahn_init: None,
            curve_points: 1000,
        }
    }
}

/// Evenly spaced delays `0, step, …` up to `max` inclusive.
pub fn delay_grid(max: Time, step: Time) -> Result<Vec<f64>> {
    anyhow::ensure!(step.0 > 0.0 && max.0 >= 0.0, "delay grid needs step > 0 and max >= 0");
    let n = (max.0 / step.0 + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| i as f64 * step.0).collect())
}
