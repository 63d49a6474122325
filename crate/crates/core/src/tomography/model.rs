//! Forward model, robust likelihood and priors for single-qubit tomography
//! from fluorescence counts.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use super::data::{Projection, TomographyData};
use crate::error::{Error, Result};
use crate::quantum::{qubit_rotation, BlochVector, Mat2};

/// Normalization constant of the reference prior over `(r, θ, φ)`.
pub const REFERENCE_PRIOR_NORM: f64 = 0.00513299;

/// Prior standard deviation of each systematic angle (5°).
pub const ANGLE_PRIOR_SD: f64 = 5.0 * PI / 180.0;

pub const N_PARAMS: usize = 11;

/// Bloch coordinates, fluorescence scale, contrast and six systematic
/// rotation errors (radians).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TomographyParams {
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
    /// Counts from `|0_g⟩`.
    pub f0: f64,
    pub contrast: f64,
    pub eps_y: f64,
    pub eps_z: f64,
    pub v_x: f64,
    pub v_z: f64,
    pub phi_err: f64,
    pub theta_err: f64,
}

impl TomographyParams {
    pub const NAMES: [&'static str; N_PARAMS] = [
        "r", "theta", "phi", "f0", "contrast", "eps_y", "eps_z", "v_x", "v_z", "phi_err", "theta_err",
    ];

    /// Error-free parameters for a Bloch vector.
    pub fn ideal(bloch: &BlochVector, f0: f64, contrast: f64) -> Self {
        let (r, theta, phi) = bloch.to_spherical();
        Self::from_array([r, theta, phi, f0, contrast, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    }

    pub fn to_array(&self) -> [f64; N_PARAMS] {
        [
            self.r,
            self.theta,
            self.phi,
            self.f0,
            self.contrast,
            self.eps_y,
            self.eps_z,
            self.v_x,
            self.v_z,
            self.phi_err,
            self.theta_err,
        ]
    }

    pub fn from_array(a: [f64; N_PARAMS]) -> Self {
        Self {
            r: a[0],
            theta: a[1],
            phi: a[2],
            f0: a[3],
            contrast: a[4],
            eps_y: a[5],
            eps_z: a[6],
            v_x: a[7],
            v_z: a[8],
            phi_err: a[9],
            theta_err: a[10],
        }
    }

    pub fn bloch(&self) -> BlochVector {
        BlochVector::from_spherical(self.r, self.theta, self.phi)
    }

    pub fn in_support(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
            && (0.0..1.0).contains(&self.r)
            && (0.0..=PI).contains(&self.theta)
            && self.f0 > 0.0
            && (0.0..=1.0).contains(&self.contrast)
    }

    fn x_axis(&self) -> [f64; 3] {
        unit([1.0, self.eps_y, self.eps_z])
    }

    fn y_axis(&self) -> [f64; 3] {
        unit([self.v_x, 1.0, self.v_z])
    }

    fn x_angle(&self) -> f64 {
        FRAC_PI_2 + 2.0 * self.phi_err
    }

    fn y_angle(&self) -> f64 {
        -FRAC_PI_2 + 2.0 * self.theta_err
    }
}

fn unit(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

/// The imperfect `π/2` pulses `(U_X, U_Y)` used for the X and Y
/// projections: `exp(−i n̂_X·σ (π/2 + 2φ_err)/2)` and
/// `exp(−i n̂_Y·σ (−π/2 + 2θ_err)/2)`.
pub fn error_rotation_unitaries(p: &TomographyParams) -> (Mat2, Mat2) {
    (qubit_rotation(p.x_axis(), p.x_angle()), qubit_rotation(p.y_axis(), p.y_angle()))
}

/// z component of `b` rotated by `angle` about unit axis `n`.
fn rotated_z(b: [f64; 3], n: [f64; 3], angle: f64) -> f64 {
    let (s, c) = angle.sin_cos();
    let cross_z = n[0] * b[1] - n[1] * b[0];
    let dot = n[0] * b[0] + n[1] * b[1] + n[2] * b[2];
    b[2] * c + cross_z * s + n[2] * dot * (1.0 - c)
}

/// `(⟨X⟩, ⟨Y⟩, ⟨Z⟩)` as measured through the imperfect rotations.
pub fn projections(p: &TomographyParams) -> [f64; 3] {
    let b = p.bloch().as_array();
    let x = rotated_z(b, p.y_axis(), p.y_angle());
    let y = rotated_z(b, p.x_axis(), p.x_angle());
    [x, y, b[2]]
}

fn fluorescence(f0: f64, contrast: f64, expectation: f64) -> f64 {
    f0 * (1.0 - 0.5 * contrast) + 0.5 * f0 * contrast * expectation
}

/// Expected counts `(⟨F_X⟩, ⟨F_Y⟩, ⟨F_Z⟩)`.
pub fn expected_fluorescence(p: &TomographyParams) -> [f64; 3] {
    projections(p).map(|e| fluorescence(p.f0, p.contrast, e))
}

/// Expected counts for one record, scaled to the record's shot count.
pub fn expected_counts(p: &TomographyParams, projection: Projection, shot_scale: f64) -> f64 {
    let e = match projection {
        Projection::Norm0 => 1.0,
        Projection::Norm1 => -1.0,
        Projection::Z => p.bloch().z,
        Projection::X | Projection::Y => {
            let [x, y, _] = projections(p);
            if projection == Projection::X { x } else { y }
        }
    };
    shot_scale * fluorescence(p.f0, p.contrast, e)
}

/// Per-record marginalized likelihood term
/// `−log(√2 π σ̄) − log(1 + Δ²/(2σ̄²))` with `σ̄ = 2√⟨F⟩`.
pub fn log_likelihood_term(counts: f64, expected: f64) -> f64 {
    let sbar = 2.0 * expected.sqrt();
    let d = counts - expected;
    -(2f64.sqrt() * PI * sbar).ln() - (d * d / (2.0 * sbar * sbar)).ln_1p()
}

/// Sum of the marginalized record terms.
pub fn log_likelihood(data: &TomographyData, p: &TomographyParams) -> Result<f64> {
    let [x, y, z] = projections(p);
    let mut total = 0.0;
    for (i, rec) in data.records().iter().enumerate() {
        let e = match rec.projection {
            Projection::X => x,
            Projection::Y => y,
            Projection::Z => z,
            Projection::Norm0 => 1.0,
            Projection::Norm1 => -1.0,
        };
        let f = data.shot_scale(i) * fluorescence(p.f0, p.contrast, e);
        if !(f > 0.0) {
            return Err(Error::param(format!(
                "expected fluorescence {f} <= 0 for record `{}`",
                rec.record_id
            )));
        }
        total += log_likelihood_term(rec.counts, f);
    }
    Ok(total)
}

/// Prior hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorConfig {
    /// Upper end of the uniform prior on F0.
    pub f0_max: f64,
    pub angle_sd: f64,
}

impl PriorConfig {
    /// F0 uniform on `(0, 10 × max count]`.
    pub fn from_data(data: &TomographyData) -> Self {
        let max = data.records().iter().map(|r| r.counts).fold(0.0, f64::max);
        Self { f0_max: 10.0 * max.max(1.0), angle_sd: ANGLE_PRIOR_SD }
    }
}

/// Reference-prior density over `(r, θ)` per unit `dr dθ dφ`.
pub fn reference_prior_density(r: f64, theta: f64) -> f64 {
    let l = ((1.0 - r) / (1.0 + r)).ln();
    REFERENCE_PRIOR_NORM * l * l * theta.sin() / (1.0 - r * r).sqrt()
}

/// Log prior; `−∞` outside the support.
pub fn log_prior(p: &TomographyParams, prior: &PriorConfig) -> f64 {
    if !p.in_support() || p.f0 > prior.f0_max {
        return f64::NEG_INFINITY;
    }
    let l = ((1.0 - p.r) / (1.0 + p.r)).ln().abs();
    let bloch = REFERENCE_PRIOR_NORM.ln() - 0.5 * (1.0 - p.r * p.r).ln() + 2.0 * l.ln() + p.theta.sin().ln();
    let sd = prior.angle_sd;
    let norm = -(sd * (2.0 * PI).sqrt()).ln();
    let angles: f64 = [p.eps_y, p.eps_z, p.v_x, p.v_z, p.phi_err, p.theta_err]
        .iter()
        .map(|a| norm - 0.5 * (a / sd) * (a / sd))
        .sum();
    bloch + angles - prior.f0_max.ln()
}
