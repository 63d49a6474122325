use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::quantum::{BlochVector, DensityMatrix};

/// Time-resolved output of [`super::run_sequence`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SignalTrace {
    pub t_us: Vec<f64>,
    pub bloch: Vec<BlochVector>,
    /// Collected photon rate per shot, 1/µs.
    pub pl_rate: Vec<f64>,
    /// Expected counts in the measured readout window over all shots.
    pub integrated_counts: f64,
    /// Poisson draw around `integrated_counts`.
    pub sampled_counts: Option<u64>,
    /// Start and end of the measured window, µs.
    pub window: Option<(f64, f64)>,
    #[serde(skip)]
    pub states: Vec<DensityMatrix>,
}

impl SignalTrace {
    pub fn len(&self) -> usize {
        self.t_us.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_us.is_empty()
    }

    pub fn final_state(&self) -> Option<&DensityMatrix> {
        self.states.last()
    }

    /// Writes `t_us,bx,by,bz,pl_rate`, preceded by `# ` comment lines.
    pub fn write_csv<W: Write>(&self, out: W, comments: &[String]) -> Result<()> {
        let mut out = out;
        for c in comments {
            writeln!(out, "# {c}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t_us", "bx", "by", "bz", "pl_rate"])?;
        for i in 0..self.len() {
            let b = self.bloch[i];
            w.write_record(&[
                fmt(self.t_us[i]),
                fmt(b.x),
                fmt(b.y),
                fmt(b.z),
                fmt(self.pl_rate[i]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<serde_json::Value> {
        Ok(serde_json::to_value(self)?)
    }
}

/// Shortest round-trip decimal representation.
pub(crate) fn fmt(v: f64) -> String {
    format!("{v:?}")
}
