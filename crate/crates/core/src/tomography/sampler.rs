//! Multiple-try differential-evolution MCMC with a shared archive of past
//! states (MT-DREAM(ZS)).
//!
//! Each chain proposes `tries` candidates from differences of archive
//! members (or a snooker move through an archive anchor), selects one in
//! proportion to its density, and accepts with the multiple-try Metropolis
//! ratio. Chains run independently for `archive_thin` iterations against a
//! frozen archive snapshot, then each appends its state in chain order, so
//! results depend only on the seed.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::{Projection, TomographyData};
use super::model::{log_prior, PriorConfig, TomographyParams, N_PARAMS};
use crate::error::{Error, Result};

const D: usize = N_PARAMS;
type Point = [f64; D];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub chains: usize,
    /// Candidates per multiple-try step.
    pub tries: usize,
    /// Iterations per chain, burn-in included.
    pub iterations: usize,
    pub burn_in: usize,
    /// Keep every `thin`-th post-burn-in state.
    pub thin: usize,
    /// Iterations between archive appends.
    pub archive_thin: usize,
    /// Size of the initial archive.
    pub initial_archive: usize,
    pub snooker_probability: f64,
    /// Crossover values; their selection probabilities adapt during burn-in.
    pub crossover: Vec<f64>,
    /// Probability of a unit jump scale, for mode hopping.
    pub unit_jump_probability: f64,
    /// Relative jitter `e ~ U(−b, b)` on the difference vector.
    pub jitter: f64,
    /// Additive noise `ε ~ N(0, b*)`.
    pub noise: f64,
    pub rhat_threshold: f64,
    /// Multiplies the log-likelihood; 0 samples the prior.
    pub likelihood_weight: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            chains: 4,
            tries: 7,
            iterations: 60_000,
            burn_in: 30_000,
            thin: 10,
            archive_thin: 10,
            initial_archive: 10 * D,
            snooker_probability: 0.1,
            crossover: vec![1.0 / 3.0, 2.0 / 3.0, 1.0],
            unit_jump_probability: 0.2,
            jitter: 0.05,
            noise: 1e-6,
            rhat_threshold: 1.1,
            likelihood_weight: 1.0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chains < 2 {
            return Err(Error::param("need at least 2 chains for split-R̂"));
        }
        if self.tries == 0 {
            return Err(Error::param("tries must be >= 1"));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::param("burn_in must be smaller than iterations"));
        }
        if self.thin == 0 {
            return Err(Error::param("thin must be >= 1"));
        }
        if (self.iterations - self.burn_in) / self.thin < 4 {
            return Err(Error::param("need at least 4 retained samples per chain"));
        }
        if self.archive_thin == 0 || self.initial_archive < 3 {
            return Err(Error::param("archive_thin must be >= 1 and initial_archive >= 3"));
        }
        if !(0.0..=1.0).contains(&self.snooker_probability) || !(0.0..=1.0).contains(&self.unit_jump_probability) {
            return Err(Error::param("probabilities must lie in [0, 1]"));
        }
        if self.crossover.is_empty() || self.crossover.iter().any(|&c| !(c > 0.0 && c <= 1.0)) {
            return Err(Error::param("crossover values must lie in (0, 1]"));
        }
        if !(self.jitter >= 0.0 && self.noise >= 0.0 && self.likelihood_weight >= 0.0) {
            return Err(Error::param("jitter, noise and likelihood_weight must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Accepted fraction of post-burn-in steps.
    pub acceptance_rate: f64,
    /// Split-R̂ per parameter, in [`TomographyParams::NAMES`] order; φ is
    /// centered on its circular mean first.
    pub rhat: Vec<f64>,
    pub max_rhat: f64,
    pub converged: bool,
    pub crossover_probabilities: Vec<f64>,
}

/// Retained post-burn-in samples of every chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorArchive {
    pub chains: Vec<Vec<TomographyParams>>,
    pub log_density: Vec<Vec<f64>>,
    pub diagnostics: Diagnostics,
}

impl PosteriorArchive {
    pub fn n_samples(&self) -> usize {
        self.chains.iter().map(Vec::len).sum()
    }

    pub fn samples(&self) -> impl Iterator<Item = &TomographyParams> {
        self.chains.iter().flatten()
    }

    /// Values of parameter `k` across all chains.
    pub fn column(&self, k: usize) -> Vec<f64> {
        self.samples().map(|p| p.to_array()[k]).collect()
    }

    pub fn ensure_converged(&self, threshold: f64) -> Result<()> {
        let d = &self.diagnostics;
        if d.max_rhat <= threshold {
            return Ok(());
        }
        let k = d
            .rhat
            .iter()
            .enumerate()
            .fold(0, |best, (i, &v)| if v > d.rhat[best] || v.is_nan() { i } else { best });
        Err(Error::NotConverged { max_rhat: d.max_rhat, coordinate: TomographyParams::NAMES[k].to_string() })
    }
}

struct Target {
    records: Vec<(Projection, f64, f64)>,
    prior: PriorConfig,
    weight: f64,
}

impl Target {
    fn new(data: &TomographyData, prior: PriorConfig, weight: f64) -> Self {
        let records = data
            .records()
            .iter()
            .enumerate()
            .map(|(i, r)| (r.projection, r.counts, data.shot_scale(i)))
            .collect();
        Self { records, prior, weight }
    }

    fn log_density(&self, x: &Point) -> f64 {
        let p = TomographyParams::from_array(*x);
        let lp = log_prior(&p, &self.prior);
        if !lp.is_finite() || self.weight == 0.0 {
            return lp;
        }
        let [px, py, pz] = super::model::projections(&p);
        let mut ll = 0.0;
        for &(proj, counts, scale) in &self.records {
            let e = match proj {
                Projection::X => px,
                Projection::Y => py,
                Projection::Z => pz,
                Projection::Norm0 => 1.0,
                Projection::Norm1 => -1.0,
            };
            let f = scale * p.f0 * (1.0 - 0.5 * p.contrast + 0.5 * p.contrast * e);
            if !(f > 0.0) {
                return f64::NEG_INFINITY;
            }
            ll += super::model::log_likelihood_term(counts, f);
        }
        lp + self.weight * ll
    }
}

/// Folds a coordinate into `[lo, hi]` by repeated reflection.
fn reflect(v: f64, lo: f64, hi: f64) -> f64 {
    let w = hi - lo;
    let mut y = (v - lo).rem_euclid(2.0 * w);
    if y > w {
        y = 2.0 * w - y;
    }
    lo + y
}

fn fold(x: &mut Point, f0_max: f64) {
    x[0] = reflect(x[0], 0.0, 1.0);
    x[1] = reflect(x[1], 0.0, PI);
    x[2] = x[2].rem_euclid(TAU);
    x[3] = reflect(x[3], 0.0, f0_max);
    x[4] = reflect(x[4], 0.0, 1.0);
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn pick_weighted<R: Rng>(logw: &[f64], rng: &mut R) -> usize {
    let m = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logw.iter().map(|x| (x - m).exp()).collect();
    let mut u = rng.random::<f64>() * w.iter().sum::<f64>();
    for (i, wi) in w.iter().enumerate() {
        u -= wi;
        if u <= 0.0 {
            return i;
        }
    }
    w.len() - 1
}

fn distinct_pair<R: Rng>(n: usize, rng: &mut R) -> (usize, usize) {
    let a = rng.random_range(0..n);
    let mut b = rng.random_range(0..n - 1);
    if b >= a {
        b += 1;
    }
    (a, b)
}

/// Draw of `atanh(r)` under the reference prior, density ∝ u² sech u,
/// by rejection from Gamma(3, 1).
fn reference_u<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let u = -(rng.random::<f64>() * rng.random::<f64>() * rng.random::<f64>()).ln();
        // sech u / (2 e^{−u}) = 1 / (1 + e^{−2u})
        if rng.random::<f64>() < 1.0 / (1.0 + (-2.0 * u).exp()) {
            return u;
        }
    }
}

/// Starting population: Bloch coordinates and error angles from their
/// priors, contrast uniform, and F0 within ±50 % of the largest count
/// (the F0 prior itself is ten times wider than any plausible value).
fn initial_point<R: Rng>(rng: &mut R, prior: &PriorConfig, max_count: f64) -> Point {
    let mut x = [0.0; D];
    x[0] = reference_u(rng).tanh().min(1.0 - 1e-12);
    x[1] = (1.0 - 2.0 * rng.random::<f64>()).acos();
    x[2] = TAU * rng.random::<f64>();
    x[3] = (max_count * (0.5 + rng.random::<f64>())).clamp(f64::MIN_POSITIVE, prior.f0_max);
    x[4] = rng.random::<f64>();
    for v in &mut x[5..] {
        let z: f64 = StandardNormal.sample(rng);
        *v = prior.angle_sd * z;
    }
    x
}

struct Chain {
    x: Point,
    lx: f64,
    rng: ChaCha8Rng,
    samples: Vec<Point>,
    logd: Vec<f64>,
    accepted: usize,
    steps: usize,
    cr_jump: Vec<f64>,
    cr_uses: Vec<usize>,
}

struct Ctx<'a> {
    cfg: &'a SamplerConfig,
    target: &'a Target,
    archive: &'a [Point],
    pcr: &'a [f64],
    scale: &'a Point,
}

impl Chain {
    fn step(&mut self, ctx: &Ctx) -> bool {
        if self.rng.random::<f64>() < ctx.cfg.snooker_probability {
            self.snooker(ctx)
        } else {
            self.parallel(ctx)
        }
    }

    fn parallel(&mut self, ctx: &Ctx) -> bool {
        let cfg = ctx.cfg;
        let rng = &mut self.rng;
        let m = pick_weighted(&ctx.pcr.iter().map(|p| p.ln()).collect::<Vec<_>>(), rng);
        let cr = cfg.crossover[m];
        let mut mask = [false; D];
        for v in &mut mask {
            *v = rng.random::<f64>() < cr;
        }
        if !mask.iter().any(|&b| b) {
            mask[rng.random_range(0..D)] = true;
        }
        let d_eff = mask.iter().filter(|&&b| b).count() as f64;
        let gamma = if rng.random::<f64>() < cfg.unit_jump_probability { 1.0 } else { 2.38 / (2.0 * d_eff).sqrt() };

        let propose = |from: &Point, rng: &mut ChaCha8Rng| {
            let (a, b) = distinct_pair(ctx.archive.len(), rng);
            let (za, zb) = (&ctx.archive[a], &ctx.archive[b]);
            let mut y = *from;
            for i in 0..D {
                if mask[i] {
                    let e = cfg.jitter * (2.0 * rng.random::<f64>() - 1.0);
                    let n: f64 = StandardNormal.sample(rng);
                    y[i] += (1.0 + e) * gamma * (za[i] - zb[i]) + cfg.noise * n;
                }
            }
            fold(&mut y, ctx.target.prior.f0_max);
            y
        };

        let old = self.x;
        let accepted = self.multiple_try(ctx, propose, |_| 0.0);
        let jump: f64 = (0..D).map(|i| ((self.x[i] - old[i]) / ctx.scale[i]).powi(2)).sum();
        self.cr_jump[m] += jump;
        self.cr_uses[m] += 1;
        accepted
    }

    fn snooker(&mut self, ctx: &Ctx) -> bool {
        let anchor = ctx.archive[self.rng.random_range(0..ctx.archive.len())];
        let gamma = 1.2 + self.rng.random::<f64>();
        let f0_max = ctx.target.prior.f0_max;
        let propose = |from: &Point, rng: &mut ChaCha8Rng| {
            let dir: Point = std::array::from_fn(|i| from[i] - anchor[i]);
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                return *from;
            }
            let (a, b) = distinct_pair(ctx.archive.len(), rng);
            let proj: f64 = (0..D).map(|i| (ctx.archive[a][i] - ctx.archive[b][i]) * dir[i] / norm).sum();
            let mut y: Point = std::array::from_fn(|i| from[i] + gamma * proj * dir[i] / norm);
            fold(&mut y, f0_max);
            y
        };
        let jacobian = |y: &Point| {
            let d2: f64 = (0..D).map(|i| (y[i] - anchor[i]).powi(2)).sum();
            0.5 * (D as f64 - 1.0) * d2.ln()
        };
        self.multiple_try(ctx, propose, jacobian)
    }

    /// Multiple-try Metropolis with weights `π(y)·J(y)`.
    fn multiple_try(
        &mut self,
        ctx: &Ctx,
        propose: impl Fn(&Point, &mut ChaCha8Rng) -> Point,
        log_jacobian: impl Fn(&Point) -> f64,
    ) -> bool {
        let k = ctx.cfg.tries;
        let mut ys = Vec::with_capacity(k);
        let mut lys = Vec::with_capacity(k);
        let mut wys = Vec::with_capacity(k);
        for _ in 0..k {
            let y = propose(&self.x, &mut self.rng);
            let ly = ctx.target.log_density(&y);
            wys.push(ly + log_jacobian(&y));
            lys.push(ly);
            ys.push(y);
        }
        if wys.iter().all(|w| *w == f64::NEG_INFINITY) {
            return false;
        }
        let j = pick_weighted(&wys, &mut self.rng);
        let mut wrefs = Vec::with_capacity(k);
        for _ in 1..k {
            let x = propose(&ys[j], &mut self.rng);
            wrefs.push(ctx.target.log_density(&x) + log_jacobian(&x));
        }
        wrefs.push(self.lx + log_jacobian(&self.x));
        let log_ratio = log_sum_exp(&wys) - log_sum_exp(&wrefs);
        let u: f64 = self.rng.random();
        if u.ln() < log_ratio {
            self.x = ys[j];
            self.lx = lys[j];
            true
        } else {
            false
        }
    }
}

fn archive_scale(archive: &[Point]) -> Point {
    let n = archive.len() as f64;
    std::array::from_fn(|i| {
        let mean = archive.iter().map(|p| p[i]).sum::<f64>() / n;
        let var = archive.iter().map(|p| (p[i] - mean).powi(2)).sum::<f64>() / (n - 1.0);
        var.sqrt().max(1e-12)
    })
}

/// Gelman-Rubin R̂ after splitting each chain in half.
pub fn split_rhat(chains: &[Vec<f64>]) -> f64 {
    let n = chains.iter().map(Vec::len).min().unwrap_or(0) / 2;
    if n < 2 {
        return f64::NAN;
    }
    let mut halves = Vec::with_capacity(2 * chains.len());
    for c in chains {
        halves.push(&c[..n]);
        halves.push(&c[c.len() - n..]);
    }
    let m = halves.len() as f64;
    let nf = n as f64;
    let means: Vec<f64> = halves.iter().map(|h| h.iter().sum::<f64>() / nf).collect();
    let grand = means.iter().sum::<f64>() / m;
    let b = nf / (m - 1.0) * means.iter().map(|mu| (mu - grand).powi(2)).sum::<f64>();
    let w = halves
        .iter()
        .zip(&means)
        .map(|(h, mu)| h.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (nf - 1.0))
        .sum::<f64>()
        / m;
    if w == 0.0 {
        return if b == 0.0 { 1.0 } else { f64::INFINITY };
    }
    let var_plus = (nf - 1.0) / nf * w + b / nf;
    (var_plus / w).sqrt()
}

/// Mean direction of angles, in `[0, 2π)`.
pub fn circular_mean(angles: impl IntoIterator<Item = f64>) -> f64 {
    let (s, c) = angles.into_iter().fold((0.0, 0.0), |(s, c), a| (s + a.sin(), c + a.cos()));
    s.atan2(c).rem_euclid(TAU)
}

/// Maps angles into `(center − π, center + π]`.
pub fn unwrap_around(a: f64, center: f64) -> f64 {
    let d = (a - center + PI).rem_euclid(TAU) - PI;
    center + d
}

/// Samples the posterior and reports diagnostics without judging them.
pub fn sample_posterior_unchecked(data: &TomographyData, cfg: &SamplerConfig, rng_seed: u64) -> Result<PosteriorArchive> {
    cfg.validate()?;
    let prior = PriorConfig::from_data(data);
    let target = Target::new(data, prior, cfg.likelihood_weight);
    let max_count = data.records().iter().map(|r| r.counts).fold(0.0, f64::max).max(1.0);

    let mut init_rng = ChaCha8Rng::seed_from_u64(rng_seed);
    init_rng.set_stream(0);
    let mut archive: Vec<Point> = (0..cfg.initial_archive).map(|_| initial_point(&mut init_rng, &prior, max_count)).collect();

    let mut chains: Vec<Chain> = (0..cfg.chains)
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
            rng.set_stream(c as u64 + 1);
            let x = initial_point(&mut init_rng, &prior, max_count);
            Chain {
                x,
                lx: target.log_density(&x),
                rng,
                samples: Vec::with_capacity((cfg.iterations - cfg.burn_in) / cfg.thin + 1),
                logd: Vec::with_capacity((cfg.iterations - cfg.burn_in) / cfg.thin + 1),
                accepted: 0,
                steps: 0,
                cr_jump: vec![0.0; cfg.crossover.len()],
                cr_uses: vec![0; cfg.crossover.len()],
            }
        })
        .collect();

    let ncr = cfg.crossover.len();
    let mut pcr = vec![1.0 / ncr as f64; ncr];
    let mut it = 0;
    while it < cfg.iterations {
        let block = cfg.archive_thin.min(cfg.iterations - it);
        let scale = archive_scale(&archive);
        let ctx = Ctx { cfg, target: &target, archive: &archive, pcr: &pcr, scale: &scale };
        chains.par_iter_mut().for_each(|ch| {
            for k in 0..block {
                let acc = ch.step(&ctx);
                if it + k >= cfg.burn_in {
                    if (it + k - cfg.burn_in) % cfg.thin == 0 {
                        ch.samples.push(ch.x);
                        ch.logd.push(ch.lx);
                    }
                    ch.steps += 1;
                    ch.accepted += acc as usize;
                }
            }
        });
        archive.extend(chains.iter().map(|c| c.x));
        it += block;
        if it <= cfg.burn_in {
            let uses: Vec<usize> = (0..ncr).map(|m| chains.iter().map(|c| c.cr_uses[m]).sum()).collect();
            let jumps: Vec<f64> = (0..ncr).map(|m| chains.iter().map(|c| c.cr_jump[m]).sum()).collect();
            if uses.iter().all(|&u| u > 0) && jumps.iter().sum::<f64>() > 0.0 {
                let raw: Vec<f64> = (0..ncr).map(|m| jumps[m] / uses[m] as f64).collect();
                let total: f64 = raw.iter().sum();
                let floored: Vec<f64> = raw.iter().map(|r| (r / total).max(0.05)).collect();
                let norm: f64 = floored.iter().sum();
                pcr = floored.iter().map(|p| p / norm).collect();
            }
        }
    }

    let acceptance_rate =
        chains.iter().map(|c| c.accepted).sum::<usize>() as f64 / chains.iter().map(|c| c.steps).sum::<usize>() as f64;
    let phi_center = circular_mean(chains.iter().flat_map(|c| c.samples.iter().map(|p| p[2])));
    let rhat: Vec<f64> = (0..D)
        .map(|k| {
            let cols: Vec<Vec<f64>> = chains
                .iter()
                .map(|c| {
                    c.samples
                        .iter()
                        .map(|p| if k == 2 { unwrap_around(p[2], phi_center) } else { p[k] })
                        .collect()
                })
                .collect();
            split_rhat(&cols)
        })
        .collect();
    let max_rhat = rhat.iter().cloned().fold(f64::NEG_INFINITY, |a, b| if b.is_nan() { f64::INFINITY } else { a.max(b) });

    Ok(PosteriorArchive {
        chains: chains
            .iter()
            .map(|c| c.samples.iter().map(|x| TomographyParams::from_array(*x)).collect())
            .collect(),
        log_density: chains.into_iter().map(|c| c.logd).collect(),
        diagnostics: Diagnostics {
            acceptance_rate,
            max_rhat,
            converged: max_rhat <= cfg.rhat_threshold,
            rhat,
            crossover_probabilities: pcr,
        },
    })
}

/// Samples the posterior; fails with [`Error::NotConverged`] when any
/// split-R̂ exceeds the configured threshold.
pub fn sample_posterior(data: &TomographyData, cfg: &SamplerConfig, rng_seed: u64) -> Result<PosteriorArchive> {
    let archive = sample_posterior_unchecked(data, cfg, rng_seed)?;
    archive.ensure_converged(cfg.rhat_threshold)?;
    Ok(archive)
}
