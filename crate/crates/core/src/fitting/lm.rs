//! Levenberg-Marquardt on `Σ w_i (y_i − f(τ_i; p))²`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{DataPoint, ModelKind};
use crate::error::{Error, Result};

const REL_STEP_TOL: f64 = 1e-10;
const GRAD_TOL: f64 = 1e-8;
const LAMBDA_MAX: f64 = 1e16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JacobianMode {
    #[default]
    Analytic,
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitOptions {
    /// Free-parameter mask; `None` uses [`ModelKind::default_free`].
    pub free: Option<Vec<bool>>,
    pub max_iterations: usize,
    /// Scale the covariance by χ²/dof.
    pub scale_by_reduced_chi2: bool,
    /// Ramsey only: restart from 8 values of δω around the initial guess.
    pub multistart: bool,
    pub jacobian: JacobianMode,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            free: None,
            max_iterations: 500,
            scale_by_reduced_chi2: true,
            multistart: true,
            jacobian: JacobianMode::Analytic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model: ModelKind,
    pub names: Vec<String>,
    pub estimates: Vec<f64>,
    /// Zero for fixed parameters.
    pub std_errors: Vec<f64>,
    /// Full parameter covariance, zero rows/columns for fixed parameters.
    pub covariance: Vec<Vec<f64>>,
    pub free: Vec<bool>,
    pub chi2: f64,
    pub dof: usize,
    pub reduced_chi2: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub converged: bool,
}

impl FitReport {
    pub fn estimate(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.estimates[i])
    }

    pub fn std_error(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.std_errors[i])
    }
}

/// Central-difference Jacobian, used as a fallback and to cross-check the
/// analytic derivatives.
pub fn numeric_jacobian(kind: ModelKind, tau: f64, p: &[f64], out: &mut [f64]) {
    let mut q = p.to_vec();
    for i in 0..p.len() {
        let h = 1e-6 * p[i].abs().max(1e-3);
        q[i] = p[i] + h;
        let hi = kind.eval(tau, &q);
        q[i] = p[i] - h;
        let lo = kind.eval(tau, &q);
        q[i] = p[i];
        out[i] = (hi - lo) / (2.0 * h);
    }
}

struct Problem<'a> {
    kind: ModelKind,
    data: &'a [DataPoint],
    free: Vec<usize>,
    mode: JacobianMode,
}

impl Problem<'_> {
    fn objective(&self, p: &[f64]) -> f64 {
        self.data
            .iter()
            .map(|d| {
                let r = d.counts - self.kind.eval(d.tau, p);
                d.weight * r * r
            })
            .sum()
    }

    /// Returns (JᵀWJ, JᵀWr) over the free parameters.
    fn normal_equations(&self, p: &[f64]) -> (DMatrix<f64>, DVector<f64>) {
        let m = self.free.len();
        let mut a = DMatrix::zeros(m, m);
        let mut g = DVector::zeros(m);
        let mut full = vec![0.0; p.len()];
        let mut row = vec![0.0; m];
        for d in self.data {
            match self.mode {
                JacobianMode::Analytic => self.kind.jacobian(d.tau, p, &mut full),
                JacobianMode::Numeric => numeric_jacobian(self.kind, d.tau, p, &mut full),
            }
            for (k, &i) in self.free.iter().enumerate() {
                row[k] = full[i];
            }
            let r = d.counts - self.kind.eval(d.tau, p);
            for i in 0..m {
                g[i] += d.weight * row[i] * r;
                for j in 0..=i {
                    a[(i, j)] += d.weight * row[i] * row[j];
                }
            }
        }
        for i in 0..m {
            for j in 0..i {
                a[(j, i)] = a[(i, j)];
            }
        }
        (a, g)
    }
}

struct Outcome {
    p: Vec<f64>,
    chi2: f64,
    iterations: usize,
}

fn levenberg_marquardt(prob: &Problem, init: &[f64], max_iter: usize) -> Result<Outcome> {
    let mut p = init.to_vec();
    let mut s = prob.objective(&p);
    if !s.is_finite() {
        return Err(Error::param("model is not finite at the initial parameters"));
    }
    let mut lambda = 1e-3;
    for it in 0..max_iter {
        let (a, g) = prob.normal_equations(&p);
        if 2.0 * g.norm() < GRAD_TOL {
            return Ok(Outcome { p, chi2: s, iterations: it });
        }
        let pnorm = prob.free.iter().map(|&i| p[i] * p[i]).sum::<f64>().sqrt();
        let dmax = (0..a.nrows()).map(|i| a[(i, i)]).fold(0.0, f64::max);
        loop {
            let mut m = a.clone();
            for i in 0..m.nrows() {
                m[(i, i)] += lambda * a[(i, i)].max(1e-12 * dmax).max(f64::MIN_POSITIVE);
            }
            let Some(chol) = m.cholesky() else {
                lambda *= 10.0;
                if lambda > LAMBDA_MAX {
                    return Err(Error::SingularNormalMatrix);
                }
                continue;
            };
            let delta = chol.solve(&g);
            let mut trial = p.clone();
            for (k, &i) in prob.free.iter().enumerate() {
                trial[i] += delta[k];
            }
            let rel_step = delta.norm() / (pnorm + 1e-30);
            let s_new = prob.objective(&trial);
            if s_new.is_finite() && s_new <= s {
                p = trial;
                s = s_new;
                lambda = (lambda / 10.0).max(1e-12);
                if rel_step < REL_STEP_TOL {
                    return Ok(Outcome { p, chi2: s, iterations: it + 1 });
                }
                break;
            }
            if rel_step < REL_STEP_TOL {
                // no representable downhill step left
                return Ok(Outcome { p, chi2: s, iterations: it + 1 });
            }
            lambda *= 10.0;
            if lambda > LAMBDA_MAX {
                return Ok(Outcome { p, chi2: s, iterations: it + 1 });
            }
        }
    }
    Err(Error::IterationBudget(max_iter))
}

/// Fits `kind` to `data` starting from `init` (full parameter vector in the
/// order of [`ModelKind::names`]).
///
/// For the Ramsey model with `multistart`, δω is restarted from the grid
/// `δω₀ + (k − 3.5)·π/(2·τ_span)`, k = 0..7, and the lowest χ² wins.
pub fn fit_model(kind: ModelKind, data: &[DataPoint], init: &[f64], opts: &FitOptions) -> Result<FitReport> {
    let n = kind.n_params();
    if init.len() != n {
        return Err(Error::param(format!("{kind:?} model takes {n} parameters, got {}", init.len())));
    }
    if init.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("initial parameters must be finite"));
    }
    let free_mask = opts.free.clone().unwrap_or_else(|| kind.default_free());
    if free_mask.len() != n {
        return Err(Error::param(format!("free mask has {} entries, expected {n}", free_mask.len())));
    }
    let free: Vec<usize> = (0..n).filter(|&i| free_mask[i]).collect();
    if free.is_empty() {
        return Err(Error::param("no free parameters"));
    }
    if data.len() < 2 * free.len() {
        return Err(Error::InsufficientData { needed: 2 * free.len(), params: free.len(), got: data.len() });
    }
    for (i, d) in data.iter().enumerate() {
        if !(d.tau.is_finite() && d.counts.is_finite()) {
            return Err(Error::Row { row: i + 1, message: "non-finite value".into() });
        }
        if !(d.weight.is_finite() && d.weight > 0.0) {
            return Err(Error::Row { row: i + 1, message: format!("weight {} must be > 0", d.weight) });
        }
    }
    let prob = Problem { kind, data, free, mode: opts.jacobian };

    let mut starts = vec![init.to_vec()];
    if kind == ModelKind::Ramsey && opts.multistart && free_mask[1] {
        let (lo, hi) = data.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| {
            (lo.min(d.tau), hi.max(d.tau))
        });
        let span = (hi - lo).max(1e-12);
        starts = (0..8)
            .map(|k| {
                let mut s = init.to_vec();
                s[1] += (k as f64 - 3.5) * PI / (2.0 * span);
                s
            })
            .collect();
    }

    let mut best: Option<Outcome> = None;
    let mut first_err = None;
    for start in &starts {
        match levenberg_marquardt(&prob, start, opts.max_iterations) {
            Ok(o) => {
                if best.as_ref().map_or(true, |b| o.chi2 < b.chi2) {
                    best = Some(o);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let Some(best) = best else {
        return Err(first_err.unwrap_or(Error::IterationBudget(opts.max_iterations)));
    };

    let (a, g) = prob.normal_equations(&best.p);
    let inv = a.clone().cholesky().ok_or(Error::SingularNormalMatrix)?.inverse();
    let dof = data.len() - prob.free.len();
    let reduced = best.chi2 / dof as f64;
    let scale = if opts.scale_by_reduced_chi2 { reduced } else { 1.0 };
    let mut cov = vec![vec![0.0; n]; n];
    for (ki, &i) in prob.free.iter().enumerate() {
        for (kj, &j) in prob.free.iter().enumerate() {
            cov[i][j] = inv[(ki, kj)] * scale;
        }
    }
    let std_errors = (0..n).map(|i| cov[i][i].max(0.0).sqrt()).collect();

    Ok(FitReport {
        model: kind,
        names: kind.names().iter().map(|s| s.to_string()).collect(),
        estimates: best.p,
        std_errors,
        covariance: cov,
        free: free_mask,
        chi2: best.chi2,
        dof,
        reduced_chi2: reduced,
        iterations: best.iterations,
        gradient_norm: 2.0 * g.norm(),
        converged: true,
    })
}
