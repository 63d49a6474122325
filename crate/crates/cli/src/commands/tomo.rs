use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use optispin::tomography::{sample_posterior_unchecked, write_samples_csv, PosteriorSummary, TomographyData};

use crate::config::RunConfig;
use crate::output::Output;

/// Reads CSV, or the JSON schema when the file ends in `.json`.
pub fn load_data(path: &Path) -> Result<TomographyData> {
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let data = if is_json {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        TomographyData::from_json_str(&text)
    } else {
        let f = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
        TomographyData::from_csv(f)
    };
    data.with_context(|| format!("loading tomography data {}", path.display()))
}

/// Returns whether the chains converged.
pub fn run(cfg: &RunConfig, data: &TomographyData, seed: u64, out: &mut Output) -> Result<bool> {
    let archive = sample_posterior_unchecked(data, &cfg.tomo.sampler, seed)?;
    let summary = PosteriorSummary::from_archive(&archive)?;
    let comments = out.comments();
    let mut w = out.create("posterior.csv")?;
    write_samples_csv(&archive, &mut w, &comments)?;
    w.flush()?;
    out.write_json("summary.json", &summary)?;
    Ok(summary.converged)
}
