//! Ramsey and Hahn-echo signal models with analytic Jacobians.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ramsey fringe with a Gaussian envelope and a hyperfine triplet.
/// Times in µs, angular frequencies in rad/µs, amplitudes in counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RamseyParams {
    pub t2_star: f64,
    pub delta_omega: f64,
    pub omega_hf: f64,
    pub tau0: f64,
    pub amplitude: f64,
    pub c1: f64,
    pub c2: f64,
    #[serde(default)]
    pub background: f64,
}

impl RamseyParams {
    pub const NAMES: [&'static str; 8] =
        ["t2_star", "delta_omega", "omega_hf", "tau0", "amplitude", "c1", "c2", "background"];

    pub fn validate(&self) -> Result<()> {
        if self.to_array().iter().any(|v| !v.is_finite()) {
            return Err(Error::param("Ramsey parameters must be finite"));
        }
        if self.t2_star <= 0.0 {
            return Err(Error::param(format!("t2_star = {} must be > 0", self.t2_star)));
        }
        if self.c1 < 0.0 || self.c2 < 0.0 {
            return Err(Error::param("hyperfine weights c1, c2 must be >= 0"));
        }
        Ok(())
    }

    pub fn to_array(&self) -> [f64; 8] {
        [
            self.t2_star,
            self.delta_omega,
            self.omega_hf,
            self.tau0,
            self.amplitude,
            self.c1,
            self.c2,
            self.background,
        ]
    }

    pub fn from_slice(p: &[f64]) -> Self {
        Self {
            t2_star: p[0],
            delta_omega: p[1],
            omega_hf: p[2],
            tau0: p[3],
            amplitude: p[4],
            c1: p[5],
            c2: p[6],
            background: p[7],
        }
    }
}

/// Stretched-exponential echo decay `A exp(-(τ/T2)³) + background`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HahnParams {
    pub t2: f64,
    pub amplitude: f64,
    #[serde(default)]
    pub background: f64,
}

impl HahnParams {
    pub const NAMES: [&'static str; 3] = ["t2", "amplitude", "background"];

    pub fn validate(&self) -> Result<()> {
        if self.to_array().iter().any(|v| !v.is_finite()) {
            return Err(Error::param("Hahn parameters must be finite"));
        }
        if self.t2 <= 0.0 {
            return Err(Error::param(format!("t2 = {} must be > 0", self.t2)));
        }
        Ok(())
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.t2, self.amplitude, self.background]
    }

    pub fn from_slice(p: &[f64]) -> Self {
        Self { t2: p[0], amplitude: p[1], background: p[2] }
    }
}

pub fn ramsey_model(tau: f64, p: &RamseyParams) -> f64 {
    ramsey_eval(tau, &p.to_array())
}

pub fn hahn_model(tau: f64, p: &HahnParams) -> f64 {
    hahn_eval(tau, &p.to_array())
}

pub(crate) fn ramsey_eval(tau: f64, p: &[f64]) -> f64 {
    let [t2, dw, whf, tau0, a, c1, c2, bg] = [p[0], p[1], p[2], p[3], p[4], p[5], p[6], p[7]];
    let u = tau - tau0;
    let env = (-tau * tau / (2.0 * t2 * t2)).exp();
    let s = c1 * ((dw - whf) * u).cos() + (dw * u).cos() + c2 * ((dw + whf) * u).cos();
    a * env * s + bg
}

pub(crate) fn ramsey_jacobian(tau: f64, p: &[f64], out: &mut [f64]) {
    let [t2, dw, whf, tau0, a, c1, c2] = [p[0], p[1], p[2], p[3], p[4], p[5], p[6]];
    let u = tau - tau0;
    let env = (-tau * tau / (2.0 * t2 * t2)).exp();
    let (a1, a0, a2) = (dw - whf, dw, dw + whf);
    let (s1, c1u) = (a1 * u).sin_cos();
    let (s0, c0u) = (a0 * u).sin_cos();
    let (s2, c2u) = (a2 * u).sin_cos();
    let s = c1 * c1u + c0u + c2 * c2u;
    let ae = a * env;
    out[0] = ae * s * tau * tau / (t2 * t2 * t2);
    out[1] = -ae * u * (c1 * s1 + s0 + c2 * s2);
    out[2] = ae * u * (c1 * s1 - c2 * s2);
    out[3] = ae * (c1 * a1 * s1 + a0 * s0 + c2 * a2 * s2);
    out[4] = env * s;
    out[5] = ae * c1u;
    out[6] = ae * c2u;
    out[7] = 1.0;
}

pub(crate) fn hahn_eval(tau: f64, p: &[f64]) -> f64 {
    p[1] * (-(tau / p[0]).powi(3)).exp() + p[2]
}

pub(crate) fn hahn_jacobian(tau: f64, p: &[f64], out: &mut [f64]) {
    let x = tau / p[0];
    let e = (-x.powi(3)).exp();
    out[0] = p[1] * e * 3.0 * x.powi(3) / p[0];
    out[1] = e;
    out[2] = 1.0;
}
