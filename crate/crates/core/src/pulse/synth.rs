//! Synthetic Ramsey and Hahn-echo datasets with Poisson shot noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitting::{hahn_model, ramsey_model, DataPoint, HahnParams, RamseyParams};

/// PL background from singlet population relaxing after the
/// initialization pulse, `B0 (1 − exp(−rate τ))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IscBackground {
    pub b0: f64,
    pub rate: f64,
}

impl IscBackground {
    pub fn at(&self, tau: f64) -> f64 {
        self.b0 * (1.0 - (-self.rate * tau).exp())
    }
}

fn poisson(mean: f64, rng: &mut ChaCha8Rng) -> Result<f64> {
    if !(mean.is_finite() && mean >= 0.0) {
        return Err(Error::param(format!(
            "expected counts {mean} must be finite and >= 0; raise the background"
        )));
    }
    if mean == 0.0 {
        return Ok(0.0);
    }
    let d = Poisson::new(mean).map_err(|e| Error::param(e.to_string()))?;
    Ok(d.sample(rng))
}

fn check_grid(taus: &[f64], shots: u64) -> Result<()> {
    if taus.is_empty() {
        return Err(Error::param("tau grid is empty"));
    }
    if taus.iter().any(|t| !t.is_finite()) {
        return Err(Error::param("tau grid must be finite"));
    }
    if shots == 0 {
        return Err(Error::param("shots must be > 0"));
    }
    Ok(())
}

/// Raw Ramsey counts: Poisson around `shots × ramsey_model(τ)`, where the
/// model includes `p.background`.
pub fn synthesize_ramsey(p: &RamseyParams, taus: &[f64], shots: u64, rng_seed: u64) -> Result<Vec<f64>> {
    p.validate()?;
    check_grid(taus, shots)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    taus.iter()
        .map(|&t| poisson(shots as f64 * ramsey_model(t, p), &mut rng))
        .collect()
}

/// Differenced Ramsey data `PL(+) − PL(−)`. Each trace is Poisson around
/// `shots × (baseline + isc(τ) ± s(τ)/2)` where `s` is the background-free
/// model, so the ISC background cancels in expectation. Weights are the
/// inverse Poisson variance of the difference.
pub fn synthesize_ramsey_difference(
    p: &RamseyParams,
    taus: &[f64],
    shots: u64,
    baseline: f64,
    isc: Option<IscBackground>,
    rng_seed: u64,
) -> Result<Vec<DataPoint>> {
    p.validate()?;
    check_grid(taus, shots)?;
    let signal = RamseyParams { background: 0.0, ..*p };
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let n = shots as f64;
    taus.iter()
        .map(|&t| {
            let base = baseline + isc.map_or(0.0, |b| b.at(t));
            let half = 0.5 * ramsey_model(t, &signal);
            let plus = poisson(n * (base + half), &mut rng)?;
            let minus = poisson(n * (base - half), &mut rng)?;
            Ok(DataPoint { tau: t, counts: plus - minus, weight: 1.0 / (plus + minus).max(1.0) })
        })
        .collect()
}

/// Hahn-echo counts: Poisson around `shots × (A exp(−(τ/T2)³) + background)`.
pub fn synthesize_hahn(p: &HahnParams, taus: &[f64], shots: u64, rng_seed: u64) -> Result<Vec<f64>> {
    p.validate()?;
    check_grid(taus, shots)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    taus.iter()
        .map(|&t| poisson(shots as f64 * hahn_model(t, p), &mut rng))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn table() -> RamseyParams {
        RamseyParams {
            t2_star: 1.13,
            delta_omega: TAU * 7.52,
            omega_hf: TAU * 2.19,
            tau0: 0.013,
            amplitude: 253.0,
            c1: 1.36,
            c2: 0.64,
            background: 1000.0,
        }
    }

    #[test]
    fn zero_amplitude_is_background() {
        let p = RamseyParams { amplitude: 0.0, ..table() };
        let taus: Vec<f64> = (0..200).map(|i| i as f64 * 0.01).collect();
        let y = synthesize_ramsey(&p, &taus, 1, 5).unwrap();
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        // sd of the mean is sqrt(1000/200) ≈ 2.2
        assert!((mean - 1000.0).abs() < 10.0, "{mean}");
    }

    #[test]
    fn long_delays_relax_to_background() {
        let taus: Vec<f64> = (0..400).map(|i| 20.0 + i as f64 * 0.01).collect();
        let y = synthesize_ramsey(&table(), &taus, 1, 9).unwrap();
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        assert!((mean - 1000.0).abs() < 8.0, "{mean}");
    }

    #[test]
    fn hahn_mean_matches_model() {
        let p = HahnParams { t2: 893.0, amplitude: 538.0, background: 100.0 };
        let taus = vec![0.0; 2000];
        let y = synthesize_hahn(&p, &taus, 1, 1).unwrap();
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        assert!((mean - 638.0).abs() < 3.0);
    }

    #[test]
    fn difference_cancels_isc_background() {
        let p = RamseyParams { amplitude: 0.0, ..table() };
        let taus: Vec<f64> = (0..500).map(|i| i as f64 * 0.01).collect();
        let isc = IscBackground { b0: 3000.0, rate: 2.701 };
        let d = synthesize_ramsey_difference(&p, &taus, 1, 5000.0, Some(isc), 2).unwrap();
        let mean = d.iter().map(|p| p.counts).sum::<f64>() / d.len() as f64;
        assert!(mean.abs() < 15.0, "{mean}");
    }

    #[test]
    fn same_seed_same_data() {
        let taus = [0.0, 0.1, 0.2];
        assert_eq!(
            synthesize_ramsey(&table(), &taus, 3, 11).unwrap(),
            synthesize_ramsey(&table(), &taus, 3, 11).unwrap()
        );
    }

    #[test]
    fn negative_mean_is_rejected() {
        let p = RamseyParams { background: 0.0, ..table() };
        assert!(synthesize_ramsey(&p, &[0.45], 1, 0).is_err());
    }
}
