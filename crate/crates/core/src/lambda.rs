//! Rotating-frame Hamiltonian, Lindblad superoperator and time propagation
//! for the driven five-level Λ system.
//!
//! Density matrices are vectorized row-major (`vec(ρ)[5i + j] = ρ[i][j]`), so
//! `vec(AρB) = (A ⊗ Bᵀ) vec(ρ)`.

use nalgebra::{DMatrix, DVector, Schur, SVD};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{c, DensityMatrix, Level, Mat5, C64, DIM};

const DIM2: usize = DIM * DIM;

/// Null-space threshold on eigenvalue magnitude.
pub const NULL_TOL: f64 = 1e-8;

/// Which excited levels the two optical fields couple to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    #[default]
    Both,
    ROnly,
    LOnly,
}

/// Drive and level parameters. Frequencies are angular, in rad/µs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaParams {
    /// Detuning of the laser from the `|R_e1⟩` Λ resonance.
    pub delta_l: f64,
    /// Excited-state splitting between `|R_e1⟩` and `|L_e1⟩`.
    pub delta_e1: f64,
    /// Optical Rabi amplitude.
    pub omega: f64,
    /// Relative-amplitude angle, `tan(θ/2)` is the field amplitude ratio.
    pub theta: f64,
    /// Relative phase of the two fields.
    pub phi: f64,
    /// Singlet energy.
    #[serde(default)]
    pub epsilon_s: f64,
    #[serde(default)]
    pub coupling: Coupling,
}

impl LambdaParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.delta_l, self.delta_e1, self.omega, self.theta, self.phi, self.epsilon_s];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("Λ parameters must be finite"));
        }
        if self.omega < 0.0 {
            return Err(Error::param(format!("omega = {} must be >= 0", self.omega)));
        }
        if self.delta_e1 < 0.0 {
            return Err(Error::param(format!("delta_e1 = {} must be >= 0", self.delta_e1)));
        }
        Ok(())
    }

    pub fn with_coupling(mut self, coupling: Coupling) -> Self {
        self.coupling = coupling;
        self
    }
}

/// Incoherent rates, all in 1/µs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRates {
    /// Radiative decay from each excited level into each ground level.
    pub gamma_rad: f64,
    /// Intersystem crossing from each excited level into the singlet.
    pub gamma_isc: f64,
    /// Total singlet decay back into the ground levels.
    pub gamma_isc_back: f64,
    /// Split of the singlet decay into `[|0_g⟩, |+1_g⟩]`.
    #[serde(default = "default_branching")]
    pub branching: [f64; 2],
    /// Ground relaxation `|+1_g⟩ → |0_g⟩`.
    pub gamma_1: f64,
    /// Pure dephasing through the Lindblad operator `|0_g⟩⟨0_g|`.
    pub gamma_phi: f64,
}

fn default_branching() -> [f64; 2] {
    [1.0, 0.0]
}

impl DecayRates {
    pub fn zero() -> Self {
        Self {
            gamma_rad: 0.0,
            gamma_isc: 0.0,
            gamma_isc_back: 0.0,
            branching: default_branching(),
            gamma_1: 0.0,
            gamma_phi: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.gamma_rad,
            self.gamma_isc,
            self.gamma_isc_back,
            self.gamma_1,
            self.gamma_phi,
            self.branching[0],
            self.branching[1],
        ];
        if all.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::param("decay rates and branching weights must be finite and >= 0"));
        }
        if (self.branching[0] + self.branching[1] - 1.0).abs() > 1e-12 {
            return Err(Error::param(format!(
                "singlet branching weights {:?} must sum to 1",
                self.branching
            )));
        }
        Ok(())
    }
}

/// Rotating-frame Hamiltonian in the basis `{|+1_g⟩, |0_g⟩, |R⟩, |L⟩, |S⟩}`.
pub fn build_hamiltonian(p: &LambdaParams) -> Mat5 {
    let (pl, z, r, l, s) = (
        Level::PlusOne.index(),
        Level::Zero.index(),
        Level::R.index(),
        Level::L.index(),
        Level::Singlet.index(),
    );
    let mut h = Mat5::zeros();
    h[(pl, pl)] = c(p.delta_l, 0.0);
    h[(z, z)] = c(p.delta_l, 0.0);
    h[(l, l)] = c(-p.delta_e1, 0.0);
    h[(s, s)] = c(p.epsilon_s, 0.0);

    let (sin_h, cos_h) = (0.5 * p.theta).sin_cos();
    let from_plus = c(p.omega * cos_h, 0.0);
    let from_zero = C64::from_polar(p.omega * sin_h, p.phi);
    let mut couple = |g: usize, e: usize, v: C64| {
        h[(g, e)] = v;
        h[(e, g)] = v.conj();
    };
    if p.coupling != Coupling::LOnly {
        couple(pl, r, from_plus);
        couple(z, r, from_zero);
    }
    if p.coupling != Coupling::ROnly {
        couple(pl, l, from_plus);
        couple(z, l, -from_zero);
    }
    h
}

/// Generator `W` of `dρ/dt = Wρ` acting on row-major vectorized 5×5 matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator(DMatrix<C64>);

fn kron5(a: &Mat5, b: &Mat5) -> DMatrix<C64> {
    let mut out = DMatrix::zeros(DIM2, DIM2);
    for i in 0..DIM {
        for j in 0..DIM {
            let aij = a[(i, j)];
            if aij == C64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..DIM {
                for l in 0..DIM {
                    out[(i * DIM + k, j * DIM + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

fn jump(from: Level, to: Level) -> Mat5 {
    let mut m = Mat5::zeros();
    m[(to.index(), from.index())] = c(1.0, 0.0);
    m
}

/// Assembles `W` for `dρ/dt = i[ρ, H] + Σ Γ (LρL† - ½{L†L, ρ})`.
///
/// Jump channels: each excited level to each ground level at `gamma_rad`,
/// each excited level to the singlet at `gamma_isc`, singlet to ground at
/// `gamma_isc_back` split by `branching`, `|+1_g⟩ → |0_g⟩` at `gamma_1`, and
/// dephasing `|0_g⟩⟨0_g|` at `gamma_phi`. The reverse ground flip is zero.
pub fn build_lindbladian(h: &Mat5, rates: &DecayRates) -> Superoperator {
    let id = Mat5::identity();
    let i = c(0.0, 1.0);
    let mut w = (kron5(&id, &h.transpose()) - kron5(h, &id)) * i;

    let mut add = |rate: f64, op: Mat5| {
        if rate == 0.0 {
            return;
        }
        let ldl = op.adjoint() * op;
        let d = kron5(&op, &op.conjugate())
            - (kron5(&ldl, &id) + kron5(&id, &ldl.transpose())) * c(0.5, 0.0);
        w += d * c(rate, 0.0);
    };

    let ground = [Level::PlusOne, Level::Zero];
    for e in [Level::R, Level::L] {
        for g in ground {
            add(rates.gamma_rad, jump(e, g));
        }
        add(rates.gamma_isc, jump(e, Level::Singlet));
    }
    add(rates.gamma_isc_back * rates.branching[0], jump(Level::Singlet, Level::Zero));
    add(rates.gamma_isc_back * rates.branching[1], jump(Level::Singlet, Level::PlusOne));
    add(rates.gamma_1, jump(Level::PlusOne, Level::Zero));
    let zz = Level::Zero.index();
    let mut dephase = Mat5::zeros();
    dephase[(zz, zz)] = c(1.0, 0.0);
    add(rates.gamma_phi, dephase);

    Superoperator(w)
}

pub fn vectorize(m: &Mat5) -> DVector<C64> {
    DVector::from_iterator(DIM2, m.transpose().iter().copied())
}

pub fn unvectorize(v: &DVector<C64>) -> Mat5 {
    Mat5::from_row_slice(v.as_slice())
}

impl Superoperator {
    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        if m.shape() != (DIM2, DIM2) {
            return Err(Error::param(format!("superoperator must be 25x25, got {:?}", m.shape())));
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn apply(&self, rho: &Mat5) -> Mat5 {
        unvectorize(&(&self.0 * vectorize(rho)))
    }

    /// Largest deviation of the trace functional from the left null space.
    pub fn trace_defect(&self) -> f64 {
        (0..DIM2)
            .map(|col| {
                (0..DIM)
                    .map(|k| self.0[(k * DIM + k, col)])
                    .sum::<C64>()
                    .norm()
            })
            .fold(0.0, f64::max)
    }

    pub fn eigenvalues(&self) -> Vec<C64> {
        let (_, t) = Schur::new(self.0.clone()).unpack();
        let n = t.nrows();
        let mut out = Vec::with_capacity(n);
        let mut k = 0;
        while k < n {
            if k + 1 < n && t[(k + 1, k)].norm() > 1e-14 * (t[(k, k)].norm() + t[(k + 1, k + 1)].norm() + 1.0) {
                // unreduced 2×2 block
                let (a, b, cc, d) = (t[(k, k)], t[(k, k + 1)], t[(k + 1, k)], t[(k + 1, k + 1)]);
                let tr = a + d;
                let disc = ((a - d) * (a - d) + b * cc * 4.0).sqrt();
                out.push((tr + disc) * 0.5);
                out.push((tr - disc) * 0.5);
                k += 2;
            } else {
                out.push(t[(k, k)]);
                k += 1;
            }
        }
        out
    }

    /// `e^{Wt}` as a reusable propagator.
    pub fn propagator(&self, t: f64) -> Result<Propagator> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::param(format!("evolution time {t} must be finite and >= 0")));
        }
        if t == 0.0 {
            return Ok(Propagator(DMatrix::identity(DIM2, DIM2)));
        }
        let p = (&self.0 * c(t, 0.0)).exp();
        if p.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::ExpNotConverged(t));
        }
        Ok(Propagator(p))
    }

    /// `(e^{Wt}, ∫₀ᵗ e^{Ws} ds)`, from the exponential of the block matrix
    /// `[[W, I], [0, 0]]·t`.
    pub fn propagator_with_integral(&self, t: f64) -> Result<(Propagator, DMatrix<C64>)> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::param(format!("evolution time {t} must be finite and >= 0")));
        }
        let mut block = DMatrix::zeros(2 * DIM2, 2 * DIM2);
        block.view_mut((0, 0), (DIM2, DIM2)).copy_from(&(&self.0 * c(t, 0.0)));
        block
            .view_mut((0, DIM2), (DIM2, DIM2))
            .copy_from(&(DMatrix::<C64>::identity(DIM2, DIM2) * c(t, 0.0)));
        let e = block.exp();
        if e.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::ExpNotConverged(t));
        }
        let p = e.view((0, 0), (DIM2, DIM2)).into_owned();
        let integral = e.view((0, DIM2), (DIM2, DIM2)).into_owned();
        Ok((Propagator(p), integral))
    }
}

/// Precomputed `e^{Wt}` for a fixed step.
#[derive(Debug, Clone)]
pub struct Propagator(DMatrix<C64>);

impl Propagator {
    pub fn apply_raw(&self, rho: &Mat5) -> Mat5 {
        unvectorize(&(&self.0 * vectorize(rho)))
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        DensityMatrix::from_evolved(self.apply_raw(rho.matrix()))
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }
}

/// `ρ(t) = e^{Wt} ρ0`. `t = 0` returns `ρ0` unchanged.
pub fn evolve(w: &Superoperator, rho0: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
    if t == 0.0 {
        return Ok(rho0.clone());
    }
    w.propagator(t)?.apply(rho0)
}

/// Unvalidated `e^{Wt} ρ0`, for inspecting round-off before clamping.
pub fn evolve_raw(w: &Superoperator, rho0: &Mat5, t: f64) -> Result<Mat5> {
    Ok(w.propagator(t)?.apply_raw(rho0))
}

fn null_vector(w: &Superoperator) -> Result<Mat5> {
    let svd = SVD::new(w.0.clone(), false, true);
    let v_t = svd.v_t.ok_or(Error::NoStationaryState(f64::NAN))?;
    let (idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    let v = v_t.row(idx).adjoint();
    let m = unvectorize(&v);
    let tr = m.trace();
    if tr.norm() < 1e-14 {
        return Err(Error::NoStationaryState(f64::NAN));
    }
    Ok(m / tr)
}

/// Stationary state of `W`.
///
/// With a unique null vector it is returned at unit trace. With a
/// degenerate kernel the state reached from `rho0` after `50/λ_min` (slowest
/// nonzero decay) is returned, provided `‖Wρ‖ < 1e-7`.
pub fn stationary_state(w: &Superoperator, rho0: &DensityMatrix) -> Result<DensityMatrix> {
    let eig = w.eigenvalues();
    let null_count = eig.iter().filter(|l| l.norm() < NULL_TOL).count();
    let rho = if null_count == 1 {
        DensityMatrix::from_evolved(null_vector(w)?)?
    } else {
        let slowest = eig
            .iter()
            .map(|l| -l.re)
            .filter(|r| *r > NULL_TOL)
            .fold(f64::INFINITY, f64::min);
        if !slowest.is_finite() {
            return Err(Error::NoStationaryState(f64::INFINITY));
        }
        evolve(w, rho0, 50.0 / slowest)?
    };
    let residual = w.apply(rho.matrix()).norm();
    if residual >= 1e-7 {
        return Err(Error::NoStationaryState(residual));
    }
    Ok(rho)
}
