//! Bayesian state tomography of the ground-subspace qubit from
//! fluorescence counts.

mod data;
mod hpd;
mod model;
mod sampler;
mod summary;

pub use data::{synthesize_tomography, Projection, Record, TomographyData};
pub use hpd::{hpd_interval, MIN_HPD_SAMPLES};
pub use model::{
    error_rotation_unitaries, expected_counts, expected_fluorescence, log_likelihood, log_likelihood_term, log_prior,
    projections, reference_prior_density, PriorConfig, TomographyParams, ANGLE_PRIOR_SD, N_PARAMS,
    REFERENCE_PRIOR_NORM,
};
pub use sampler::{
    circular_mean, sample_posterior, sample_posterior_unchecked, split_rhat, unwrap_around, Diagnostics,
    PosteriorArchive, SamplerConfig,
};
pub use summary::{write_samples_csv, Interval, NamedInterval, PosteriorSummary, HPD_MASS};
