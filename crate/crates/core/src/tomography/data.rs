//! Tomography records and their CSV / JSON forms.

use std::fmt;
use std::io::Read;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::model::{expected_counts, TomographyParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Projection {
    X,
    Y,
    Z,
    /// Reference record prepared in `|0_g⟩`.
    #[serde(rename = "NORM0")]
    Norm0,
    /// Reference record prepared in `|+1_g⟩`.
    #[serde(rename = "NORM1")]
    Norm1,
}

impl fmt::Display for Projection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Projection::X => "X",
            Projection::Y => "Y",
            Projection::Z => "Z",
            Projection::Norm0 => "NORM0",
            Projection::Norm1 => "NORM1",
        })
    }
}

impl FromStr for Projection {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "X" => Projection::X,
            "Y" => Projection::Y,
            "Z" => Projection::Z,
            "NORM0" => Projection::Norm0,
            "NORM1" => Projection::Norm1,
            other => {
                return Err(Error::param(format!(
                    "unknown projection `{other}` (expected X, Y, Z, NORM0 or NORM1)"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Record {
    pub record_id: String,
    pub projection: Projection,
    /// Photon counts summed over `shots` repetitions.
    pub counts: f64,
    pub shots: u64,
}

/// Validated set of records. Expected counts scale with each record's shot
/// count relative to the first record, so F0 is per that many shots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawData", into = "RawData")]
pub struct TomographyData {
    records: Vec<Record>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawData {
    records: Vec<Record>,
}

impl TryFrom<RawData> for TomographyData {
    type Error = Error;
    fn try_from(raw: RawData) -> Result<Self> {
        TomographyData::new(raw.records)
    }
}

impl From<TomographyData> for RawData {
    fn from(d: TomographyData) -> Self {
        RawData { records: d.records }
    }
}

impl TomographyData {
    pub fn new(records: Vec<Record>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::param("tomography data has no records"));
        }
        for (i, r) in records.iter().enumerate() {
            if !(r.counts.is_finite() && r.counts >= 0.0) {
                return Err(Error::Row { row: i + 1, message: format!("counts {} must be >= 0", r.counts) });
            }
            if r.shots == 0 {
                return Err(Error::Row { row: i + 1, message: "shots must be > 0".into() });
            }
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn shot_scale(&self, i: usize) -> f64 {
        self.records[i].shots as f64 / self.records[0].shots as f64
    }

    /// Reads `record_id,projection,counts,shots`. Lines starting with `#`
    /// are comments. Errors carry the 1-based line number.
    pub fn from_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(input);
        let headers = rdr.headers()?.clone();
        let expected = ["record_id", "projection", "counts", "shots"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(Error::Row {
                row: 1,
                message: format!("header must be `{}`, got `{}`", expected.join(","), headers.iter().collect::<Vec<_>>().join(",")),
            });
        }
        let mut records = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| {
                let row = e.position().map_or(0, |p| p.line() as usize);
                Error::Row { row, message: e.to_string() }
            })?;
            let row = rec.position().map_or(0, |p| p.line() as usize);
            let bad = |message: String| Error::Row { row, message };
            let projection: Projection = rec[1].parse().map_err(|e: Error| bad(e.to_string()))?;
            let counts: f64 = rec[2].parse().map_err(|_| bad(format!("counts `{}` is not a number", &rec[2])))?;
            let shots: u64 = rec[3].parse().map_err(|_| bad(format!("shots `{}` is not a positive integer", &rec[3])))?;
            if !(counts.is_finite() && counts >= 0.0) {
                return Err(bad(format!("counts {counts} must be >= 0")));
            }
            if shots == 0 {
                return Err(bad("shots must be > 0".into()));
            }
            records.push(Record { record_id: rec[0].to_string(), projection, counts, shots });
        }
        Self::new(records)
    }

    pub fn to_csv<W: std::io::Write>(&self, out: W, comments: &[String]) -> Result<()> {
        let mut out = out;
        for c in comments {
            writeln!(out, "# {c}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["record_id", "projection", "counts", "shots"])?;
        for r in &self.records {
            w.write_record(&[r.record_id.clone(), r.projection.to_string(), format!("{:?}", r.counts), r.shots.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Draws a dataset from the likelihood's own generative model: each record
/// gets a noise scale `σ_k` from its prior around `σ̄ = 2√⟨F⟩`, then
/// `D ~ N(⟨F⟩, σ_k)`. Negative draws are redrawn, since counts are
/// non-negative.
pub fn synthesize_tomography<R: Rng>(
    truth: &TomographyParams,
    design: &[(Projection, usize)],
    shots: u64,
    rng: &mut R,
) -> Result<TomographyData> {
    let mut records = Vec::new();
    for &(projection, n) in design {
        for k in 0..n {
            let f = expected_counts(truth, projection, 1.0);
            if !(f > 0.0) {
                return Err(Error::param("expected fluorescence must be > 0"));
            }
            let sbar = 2.0 * f.sqrt();
            let counts = loop {
                // σ = σ̄/s with s = |N(0, 1/2)|
                let z: f64 = StandardNormal.sample(rng);
                let sigma = sbar * std::f64::consts::SQRT_2 / z.abs();
                let e: f64 = StandardNormal.sample(rng);
                let d = f + sigma * e;
                if d >= 0.0 && d.is_finite() {
                    break d;
                }
            };
            records.push(Record { record_id: format!("{projection}-{k}"), projection, counts, shots });
        }
    }
    TomographyData::new(records)
}
