//! Config-file schemas: Λ-system presets and pulse-sequence definitions.
//!
//! All dimensioned values carry unit suffixes (see [`crate::units`]);
//! unknown keys are rejected.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lambda::{Coupling, DecayRates, LambdaParams};
use crate::pulse::{FreePrecessionModel, PulseSegment, PulseSequence, ReadoutMode};
use crate::quantum::BlochVector;
use crate::units::{Angle, AngularFrequency, Rate, Time};

const BUILTIN_PRESETS: &str = include_str!("../presets/lambda_presets.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaSection {
    pub delta_l: AngularFrequency,
    pub delta_e1: AngularFrequency,
    pub omega: AngularFrequency,
    pub theta: Angle,
    pub phi: Angle,
    #[serde(default)]
    pub epsilon_s: AngularFrequency,
    #[serde(default)]
    pub coupling: Coupling,
}

impl LambdaSection {
    pub fn params(&self) -> LambdaParams {
        LambdaParams {
            delta_l: self.delta_l.0,
            delta_e1: self.delta_e1.0,
            omega: self.omega.0,
            theta: self.theta.0,
            phi: self.phi.0,
            epsilon_s: self.epsilon_s.0,
            coupling: self.coupling,
        }
    }
}

fn default_branching() -> [f64; 2] {
    [1.0, 0.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesSection {
    pub gamma_rad: Rate,
    pub gamma_isc: Rate,
    pub gamma_isc_back: Rate,
    #[serde(default = "default_branching")]
    pub branching: [f64; 2],
    pub gamma_1: Rate,
    pub gamma_phi: Rate,
}

impl RatesSection {
    pub fn rates(&self) -> DecayRates {
        DecayRates {
            gamma_rad: self.gamma_rad.0,
            gamma_isc: self.gamma_isc.0,
            gamma_isc_back: self.gamma_isc_back.0,
            branching: self.branching,
            gamma_1: self.gamma_1.0,
            gamma_phi: self.gamma_phi.0,
        }
    }
}

/// Spherical Bloch coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphericalState {
    pub r: f64,
    pub theta: Angle,
    pub phi: Angle,
}

impl SphericalState {
    pub fn bloch(&self) -> BlochVector {
        BlochVector::from_spherical(self.r, self.theta.0, self.phi.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Preset {
    pub lambda: LambdaSection,
    pub rates: RatesSection,
    pub initial_a: SphericalState,
    pub initial_b: SphericalState,
}

impl Preset {
    pub fn params(&self) -> LambdaParams {
        self.lambda.params()
    }

    pub fn rates(&self) -> DecayRates {
        self.rates.rates()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Presets(BTreeMap<String, Preset>);

impl Presets {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let p: Presets = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for (name, preset) in &p.0 {
            preset.params().validate().map_err(|e| Error::Config(format!("preset `{name}`: {e}")))?;
            preset.rates().validate().map_err(|e| Error::Config(format!("preset `{name}`: {e}")))?;
        }
        Ok(p)
    }

    /// Presets shipped with the crate: `cpt_init`, `sigma_x`, `sigma_y`,
    /// `sigma_z`.
    pub fn builtin() -> &'static Presets {
        static CELL: OnceLock<Presets> = OnceLock::new();
        CELL.get_or_init(|| Presets::from_toml_str(BUILTIN_PRESETS).expect("built-in presets parse"))
    }

    pub fn names(&self) -> Vec<&str> {
        self.0.keys().map(String::as_str).collect()
    }

    pub fn get(&self, name: &str) -> Result<&Preset> {
        self.0.get(name).ok_or_else(|| {
            Error::Config(format!("unknown preset `{name}`; available presets: {}", self.names().join(", ")))
        })
    }
}

fn default_shots() -> u64 {
    1
}

fn default_efficiency() -> f64 {
    1.0
}

fn default_polarization() -> f64 {
    0.8
}

fn default_resolution() -> Time {
    Time(0.002)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreePrecessionSection {
    #[serde(default = "default_t2_star")]
    pub t2_star: Time,
    #[serde(default = "default_omega_hf")]
    pub omega_hf: AngularFrequency,
    #[serde(default = "one")]
    pub c1: f64,
    #[serde(default = "one")]
    pub c2: f64,
}

fn default_t2_star() -> Time {
    Time(FreePrecessionModel::default().t2_star)
}

fn default_omega_hf() -> AngularFrequency {
    AngularFrequency(FreePrecessionModel::default().omega_hf)
}

fn one() -> f64 {
    1.0
}

impl Default for FreePrecessionSection {
    fn default() -> Self {
        Self { t2_star: default_t2_star(), omega_hf: default_omega_hf(), c1: 1.0, c2: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadoutKind {
    Dbp,
    CyclingZ,
}

/// Drive given by a preset name, inline sections, or a preset with one
/// section replaced.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSpec {
    pub preset: Option<String>,
    pub lambda: Option<LambdaSection>,
    pub rates: Option<RatesSection>,
}

impl DriveSpec {
    pub fn resolve(&self, presets: &Presets) -> Result<(LambdaParams, DecayRates)> {
        let base = self.preset.as_deref().map(|n| presets.get(n)).transpose()?;
        let lambda = match (&self.lambda, base) {
            (Some(l), _) => l.params(),
            (None, Some(p)) => p.params(),
            (None, None) => return Err(Error::Config("drive needs `preset` or a `lambda` table".into())),
        };
        let rates = match (&self.rates, base) {
            (Some(r), _) => r.rates(),
            (None, Some(p)) => p.rates(),
            (None, None) => return Err(Error::Config("drive needs `preset` or a `rates` table".into())),
        };
        lambda.validate()?;
        rates.validate()?;
        Ok((lambda, rates))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SegmentConfig {
    GreenReset {},
    EsrRotation {
        #[serde(default)]
        axis: Angle,
        angle: Angle,
    },
    OpticalDrive {
        duration: Time,
        #[serde(default)]
        preset: Option<String>,
        #[serde(default)]
        lambda: Option<LambdaSection>,
        #[serde(default)]
        rates: Option<RatesSection>,
    },
    FreePrecession {
        duration: Time,
        #[serde(default)]
        detuning: AngularFrequency,
    },
    Readout {
        duration: Time,
        mode: ReadoutKind,
        #[serde(default)]
        measured: bool,
        #[serde(default)]
        preset: Option<String>,
        #[serde(default)]
        lambda: Option<LambdaSection>,
        #[serde(default)]
        rates: Option<RatesSection>,
        /// Photon rate of the cycling transition (cycling_z only).
        #[serde(default)]
        rate: Option<Rate>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceConfig {
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default = "default_efficiency")]
    pub collection_efficiency: f64,
    #[serde(default = "default_polarization")]
    pub reset_polarization: f64,
    #[serde(default = "default_resolution")]
    pub resolution: Time,
    #[serde(default)]
    pub free_precession: FreePrecessionSection,
    #[serde(default)]
    pub relaxation: Option<RatesSection>,
    pub segments: Vec<SegmentConfig>,
}

impl SequenceConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn build(&self, presets: &Presets) -> Result<PulseSequence> {
        let mut segments = Vec::with_capacity(self.segments.len());
        for (i, seg) in self.segments.iter().enumerate() {
            let ctx = |e: Error| Error::Config(format!("segment {}: {e}", i + 1));
            let s = match seg {
                SegmentConfig::GreenReset {} => PulseSegment::GreenReset,
                SegmentConfig::EsrRotation { axis, angle } => {
                    PulseSegment::EsrRotation { axis_angle: axis.0, angle: angle.0 }
                }
                SegmentConfig::OpticalDrive { duration, preset, lambda, rates } => {
                    let spec = DriveSpec { preset: preset.clone(), lambda: lambda.clone(), rates: rates.clone() };
                    let (drive, rates) = spec.resolve(presets).map_err(ctx)?;
                    PulseSegment::OpticalDrive { drive, rates, duration: duration.0 }
                }
                SegmentConfig::FreePrecession { duration, detuning } => {
                    PulseSegment::FreePrecession { duration: duration.0, detuning: detuning.0 }
                }
                SegmentConfig::Readout { duration, mode, measured, preset, lambda, rates, rate } => {
                    let mode = match mode {
                        ReadoutKind::Dbp => {
                            let spec = DriveSpec { preset: preset.clone(), lambda: lambda.clone(), rates: rates.clone() };
                            let (drive, rates) = spec.resolve(presets).map_err(ctx)?;
                            ReadoutMode::Dbp { drive, rates }
                        }
                        ReadoutKind::CyclingZ => {
                            let rate = rate.ok_or_else(|| ctx(Error::Config("cycling_z readout needs `rate`".into())))?;
                            ReadoutMode::CyclingZ { rate: rate.0 }
                        }
                    };
                    PulseSegment::ReadoutWindow { duration: duration.0, mode, measured: *measured }
                }
            };
            segments.push(s);
        }
        let fp = &self.free_precession;
        let seq = PulseSequence {
            segments,
            shots: self.shots,
            collection_efficiency: self.collection_efficiency,
            reset_polarization: self.reset_polarization,
            free_precession: FreePrecessionModel {
                t2_star: fp.t2_star.0,
                omega_hf: fp.omega_hf.0,
                c1: fp.c1,
                c2: fp.c2,
            },
            relaxation: self.relaxation.as_ref().map(RatesSection::rates),
            resolution: self.resolution.0,
        };
        seq.validate()?;
        Ok(seq)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn builtin_presets_match_reference_values() {
        let p = Presets::builtin();
        assert_eq!(p.names(), vec!["cpt_init", "sigma_x", "sigma_y", "sigma_z"]);
        let cpt = p.get("cpt_init").unwrap();
        let l = cpt.params();
        assert_eq!((l.delta_e1, l.delta_l, l.omega, l.theta, l.phi), (180.0, -0.684, 46.507, 1.708, 0.395));
        let r = cpt.rates();
        assert_eq!((r.gamma_rad, r.gamma_isc, r.gamma_isc_back, r.gamma_1, r.gamma_phi), (35.114, 37.0, 2.701, 0.373, 0.0));
        assert_eq!(cpt.initial_b.r, 0.649);
        let z = p.get("sigma_z").unwrap();
        assert_eq!(z.params().theta, PI);
        assert_eq!(z.params().delta_l, -450.0);
        assert_eq!(z.rates().gamma_phi, 28.459);
        assert_eq!(z.rates().gamma_rad, 0.0);
        assert_eq!(p.get("sigma_x").unwrap().params().omega, 62.021);
        assert_eq!(p.get("sigma_y").unwrap().rates().gamma_rad, 19.719);
    }

    #[test]
    fn missing_preset_lists_available() {
        let msg = Presets::builtin().get("sigma_w").unwrap_err().to_string();
        assert!(msg.contains("cpt_init") && msg.contains("sigma_z"), "{msg}");
    }

    #[test]
    fn sequence_from_toml() {
        let text = r#"
            shots = 1000
            collection_efficiency = 0.02
            resolution = "1 ns"
            [free_precession]
            t2_star = "1.13 us"
            [[segments]]
            kind = "green_reset"
            [[segments]]
            kind = "optical_drive"
            preset = "cpt_init"
            duration = "50 ns"
            [[segments]]
            kind = "free_precession"
            duration = "0.3 us"
            detuning = "7.52 MHz"
            [[segments]]
            kind = "esr_rotation"
            axis = "90 deg"
            angle = "pi rad"
            [[segments]]
            kind = "readout"
            mode = "dbp"
            preset = "cpt_init"
            duration = "400 ns"
            measured = true
        "#;
        let seq = SequenceConfig::from_toml_str(text).unwrap().build(Presets::builtin()).unwrap();
        assert_eq!(seq.segments.len(), 5);
        assert_eq!(seq.resolution, 1e-3);
        assert!((seq.free_precession.t2_star - 1.13).abs() < 1e-15);
        match &seq.segments[2] {
            PulseSegment::FreePrecession { detuning, .. } => assert!((detuning - 2.0 * PI * 7.52).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        match &seq.segments[4] {
            PulseSegment::ReadoutWindow { duration, measured, .. } => {
                assert!((duration - 0.4).abs() < 1e-15);
                assert!(*measured);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = "segments = []\nshotz = 3\n";
        assert!(SequenceConfig::from_toml_str(bad).is_err());
        let bad_seg = "[[segments]]\nkind = \"green_reset\"\nduration = \"1 us\"\n";
        assert!(SequenceConfig::from_toml_str(bad_seg).is_err());
        let bad_preset = "[x.lambda]\ndelta_e1 = \"1 rad/us\"\ndelta_l = \"0 rad/us\"\nomega = \"1 rad/us\"\ntheta = \"1 rad\"\nphi = \"0 rad\"\nextra = 1\n";
        assert!(Presets::from_toml_str(bad_preset).is_err());
    }
}
