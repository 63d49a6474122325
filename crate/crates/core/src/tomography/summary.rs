//! Point estimates, credible intervals and sample export.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::hpd::hpd_interval;
use super::model::TomographyParams;
use super::sampler::{circular_mean, unwrap_around, PosteriorArchive};
use crate::error::Result;
use crate::quantum::bloch_fidelity;

/// Credible mass of the reported intervals.
pub const HPD_MASS: f64 = 0.682;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub mean: f64,
    pub hpd_lo: f64,
    pub hpd_hi: f64,
}

impl Interval {
    fn of(values: &[f64]) -> Result<Self> {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let (hpd_lo, hpd_hi) = hpd_interval(values, HPD_MASS)?;
        Ok(Self { mean, hpd_lo, hpd_hi })
    }

    pub fn contains(&self, v: f64) -> bool {
        self.hpd_lo <= v && v <= self.hpd_hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedInterval {
    pub name: String,
    #[serde(flatten)]
    pub interval: Interval,
}

/// Marginal means with 68.2 % HPD intervals. The fidelity of each sample is
/// taken against the unit vector along that sample, i.e. `(1 + r)/2`.
/// φ is summarized on the branch centered at its circular mean, so its
/// interval ends may fall outside `[0, 2π)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub n_samples: usize,
    pub bloch_x: Interval,
    pub bloch_y: Interval,
    pub bloch_z: Interval,
    pub fidelity: Interval,
    pub parameters: Vec<NamedInterval>,
    pub rhat: Vec<f64>,
    pub max_rhat: f64,
    pub acceptance_rate: f64,
    pub converged: bool,
}

impl PosteriorSummary {
    pub fn from_archive(archive: &PosteriorArchive) -> Result<Self> {
        let samples: Vec<&TomographyParams> = archive.samples().collect();
        let phi_c = circular_mean(samples.iter().map(|p| p.phi));
        let mut parameters = Vec::with_capacity(TomographyParams::NAMES.len());
        for (k, name) in TomographyParams::NAMES.iter().enumerate() {
            let col: Vec<f64> = samples
                .iter()
                .map(|p| if k == 2 { unwrap_around(p.phi, phi_c) } else { p.to_array()[k] })
                .collect();
            parameters.push(NamedInterval { name: name.to_string(), interval: Interval::of(&col)? });
        }
        let blochs: Vec<[f64; 3]> = samples.iter().map(|p| p.bloch().as_array()).collect();
        let axis = |i: usize| Interval::of(&blochs.iter().map(|b| b[i]).collect::<Vec<_>>());
        let fid: Vec<f64> = samples.iter().map(|p| bloch_fidelity(&p.bloch())).collect();
        let d = &archive.diagnostics;
        Ok(Self {
            n_samples: samples.len(),
            bloch_x: axis(0)?,
            bloch_y: axis(1)?,
            bloch_z: axis(2)?,
            fidelity: Interval::of(&fid)?,
            parameters,
            rhat: d.rhat.clone(),
            max_rhat: d.max_rhat,
            acceptance_rate: d.acceptance_rate,
            converged: d.converged,
        })
    }

    pub fn bloch(&self) -> [Interval; 3] {
        [self.bloch_x, self.bloch_y, self.bloch_z]
    }
}

/// One row per sample: chain, iteration, the 11 parameters, Bloch
/// coordinates and log density.
pub fn write_samples_csv<W: Write>(archive: &PosteriorArchive, out: W, comments: &[String]) -> Result<()> {
    let mut out = out;
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["chain", "iteration"];
    header.extend(TomographyParams::NAMES);
    header.extend(["bx", "by", "bz", "log_density"]);
    w.write_record(&header)?;
    for (c, (chain, logd)) in archive.chains.iter().zip(&archive.log_density).enumerate() {
        for (i, (p, l)) in chain.iter().zip(logd).enumerate() {
            let mut row = vec![c.to_string(), i.to_string()];
            row.extend(p.to_array().iter().map(|v| format!("{v:?}")));
            row.extend(p.bloch().as_array().iter().map(|v| format!("{v:?}")));
            row.push(format!("{l:?}"));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}
