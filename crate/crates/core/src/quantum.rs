//! State and operator types on the five-level Λ-system Hilbert space.
//!
//! Basis ordering is fixed everywhere as
//! `{|+1_g⟩, |0_g⟩, |R_e1⟩, |L_e1⟩, |S⟩}`. The two ground levels form the
//! qubit; its Pauli operators are
//!
//! ```text
//! σx = |+1⟩⟨0| + |0⟩⟨+1|
//! σy = i(|+1⟩⟨0| - |0⟩⟨+1|)
//! σz = |0⟩⟨0| - |+1⟩⟨+1|
//! ```
//!
//! so `|0_g⟩` is the north pole of the Bloch sphere.

use nalgebra::{Matrix2, SMatrix, SVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Mat5 = SMatrix<C64, 5, 5>;
pub type Vec5 = SVector<C64, 5>;
pub type Mat2 = Matrix2<C64>;

pub const DIM: usize = 5;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-9;

/// Levels of the Λ system, in matrix order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Level {
    PlusOne = 0,
    Zero = 1,
    R = 2,
    L = 3,
    Singlet = 4,
}

impl Level {
    pub const ALL: [Level; 5] = [Level::PlusOne, Level::Zero, Level::R, Level::L, Level::Singlet];

    pub const fn index(self) -> usize {
        self as usize
    }
}

const P: usize = Level::PlusOne as usize;
const Z: usize = Level::Zero as usize;

/// Which excited level forms the upper state of a single Λ system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    R,
    L,
}

impl Branch {
    pub fn level(self) -> Level {
        match self {
            Branch::R => Level::R,
            Branch::L => Level::L,
        }
    }
}

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Normalized pure state of the five-level system.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(Vec5);

impl StateVector {
    /// Normalizes `amplitudes`; fails only for the zero vector.
    pub fn new(amplitudes: Vec5) -> Result<Self> {
        let norm = amplitudes.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::ZeroNorm);
        }
        Ok(Self(amplitudes / c(norm, 0.0)))
    }

    pub fn basis(level: Level) -> Self {
        let mut v = Vec5::zeros();
        v[level.index()] = c(1.0, 0.0);
        Self(v)
    }

    /// `a0 |0_g⟩ + a1 |+1_g⟩`, normalized.
    pub fn ground(a0: C64, a1: C64) -> Result<Self> {
        let mut v = Vec5::zeros();
        v[Z] = a0;
        v[P] = a1;
        Self::new(v)
    }

    pub fn amplitude(&self, level: Level) -> C64 {
        self.0[level.index()]
    }

    pub fn as_vector(&self) -> &Vec5 {
        &self.0
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        self.0.dotc(&other.0)
    }

    pub fn projector(&self) -> DensityMatrix {
        DensityMatrix(self.0 * self.0.adjoint())
    }

    /// Bloch vector of the ground-subspace part.
    pub fn bloch(&self) -> BlochVector {
        self.projector().bloch_vector()
    }
}

/// Ground-subspace Bloch vector `(Tr σx ρ, Tr σy ρ, Tr σz ρ)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Standard spherical coordinates: polar angle from +z (`|0_g⟩`).
    pub fn from_spherical(r: f64, theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self::new(r * st * cp, r * st * sp, r * ct)
    }

    /// Returns `(r, θ, φ)` with `φ ∈ [0, 2π)`.
    pub fn to_spherical(&self) -> (f64, f64, f64) {
        let r = self.norm();
        if r == 0.0 {
            return (0.0, 0.0, 0.0);
        }
        let theta = (self.z / r).clamp(-1.0, 1.0).acos();
        let phi = self.y.atan2(self.x).rem_euclid(std::f64::consts::TAU);
        (r, theta, phi)
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn dot(&self, other: &BlochVector) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn distance(&self, other: &BlochVector) -> f64 {
        let d = [self.x - other.x, self.y - other.y, self.z - other.z];
        (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

/// A validated 5×5 density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(Mat5);

impl DensityMatrix {
    /// Validates `m` against the density-matrix invariants. Eigenvalues in
    /// `[-1e-9, 0)` are clamped to zero and the result renormalized.
    pub fn new(m: Mat5) -> Result<Self> {
        Self::validated(m, HERMITIAN_TOL, TRACE_TOL, PSD_TOL)
    }

    /// Looser entry point for propagated states, where the exponentiation
    /// leaves round-off of order 1e-12..1e-10 in the raw matrix.
    pub fn from_evolved(m: Mat5) -> Result<Self> {
        Self::validated(m, 1e-9, 1e-9, 1e-8)
    }

    fn validated(m: Mat5, herm_tol: f64, trace_tol: f64, psd_tol: f64) -> Result<Self> {
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NotHermitian(f64::NAN));
        }
        let herm = hermiticity_error(&m);
        if herm > herm_tol {
            return Err(Error::NotHermitian(herm));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > trace_tol || tr.im.abs() > trace_tol {
            return Err(Error::TraceNotUnit(tr.re));
        }
        let h = (m + m.adjoint()) * c(0.5, 0.0);
        let eig = SymmetricEigen::new(h);
        let min = eig.eigenvalues.min();
        if min < -psd_tol {
            return Err(Error::NotPositive(min));
        }
        if min < 0.0 {
            let clamped = eig.eigenvalues.map(|l| l.max(0.0));
            let total: f64 = clamped.sum();
            let mut out = Mat5::zeros();
            for k in 0..DIM {
                let v = eig.eigenvectors.column(k);
                out += v * v.adjoint() * c(clamped[k] / total, 0.0);
            }
            return Ok(Self(out));
        }
        let tr = h.trace().re;
        Ok(Self(h / c(tr, 0.0)))
    }

    pub fn pure(psi: &StateVector) -> Self {
        psi.projector()
    }

    pub fn basis(level: Level) -> Self {
        StateVector::basis(level).projector()
    }

    /// `p0 |0_g⟩⟨0_g| + (1 - p0) |+1_g⟩⟨+1_g|`.
    pub fn ground_mixture(p0: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p0) {
            return Err(Error::param(format!("ground mixture weight {p0} outside [0, 1]")));
        }
        let mut m = Mat5::zeros();
        m[(Z, Z)] = c(p0, 0.0);
        m[(P, P)] = c(1.0 - p0, 0.0);
        Ok(Self(m))
    }

    pub fn maximally_mixed_ground() -> Self {
        Self::ground_mixture(0.5).expect("0.5 is a valid weight")
    }

    /// Qubit state `(1 + b·σ)/2` embedded in the ground subspace.
    pub fn from_bloch(b: &BlochVector) -> Result<Self> {
        if b.norm() > 1.0 + 1e-12 {
            return Err(Error::param(format!("Bloch vector length {} exceeds 1", b.norm())));
        }
        let mut m = Mat5::zeros();
        m[(Z, Z)] = c(0.5 * (1.0 + b.z), 0.0);
        m[(P, P)] = c(0.5 * (1.0 - b.z), 0.0);
        m[(P, Z)] = c(0.5 * b.x, 0.5 * b.y);
        m[(Z, P)] = c(0.5 * b.x, -0.5 * b.y);
        Self::new(m)
    }

    pub fn matrix(&self) -> &Mat5 {
        &self.0
    }

    pub fn into_matrix(self) -> Mat5 {
        self.0
    }

    pub fn population(&self, level: Level) -> f64 {
        let i = level.index();
        self.0[(i, i)].re
    }

    pub fn ground_population(&self) -> f64 {
        self.population(Level::Zero) + self.population(Level::PlusOne)
    }

    pub fn excited_population(&self) -> f64 {
        self.population(Level::R) + self.population(Level::L)
    }

    pub fn purity(&self) -> f64 {
        (self.0 * self.0).trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.0).eigenvalues.min()
    }

    pub fn bloch_vector(&self) -> BlochVector {
        let pz = self.0[(P, Z)];
        BlochVector::new(
            2.0 * pz.re,
            2.0 * pz.im,
            self.0[(Z, Z)].re - self.0[(P, P)].re,
        )
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn fidelity(&self, psi: &StateVector) -> Result<f64> {
        let v = psi.as_vector();
        let f = (v.adjoint() * self.0 * v)[(0, 0)];
        if f.im.abs() > 1e-9 {
            return Err(Error::ComplexFidelity(f.im));
        }
        Ok(clamp_unit(f.re))
    }

    /// `⟨ψ|ρ|ψ⟩ / Tr(Π_g ρ)` for a ground-subspace `ψ`: the fidelity of the
    /// qubit state conditioned on the system being in the qubit subspace.
    pub fn conditional_fidelity(&self, psi: &StateVector) -> Result<f64> {
        let g = self.ground_population();
        if g <= 0.0 {
            return Ok(0.0);
        }
        Ok(clamp_unit(self.fidelity(psi)? / g))
    }

    /// Ground-subspace block normalized to unit trace, as a qubit matrix in
    /// the ordering `(|0_g⟩, |+1_g⟩)`.
    pub fn qubit_block(&self) -> Mat2 {
        let m = &self.0;
        Mat2::new(m[(Z, Z)], m[(Z, P)], m[(P, Z)], m[(P, P)])
    }
}

fn clamp_unit(x: f64) -> f64 {
    if (-1e-9..0.0).contains(&x) {
        0.0
    } else if (1.0..1.0 + 1e-9).contains(&x) {
        1.0
    } else {
        x
    }
}

pub fn hermiticity_error(m: &Mat5) -> f64 {
    let d = m - m.adjoint();
    d.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Dark state of a single Λ system driven with polar angle `theta` and
/// relative phase `phi`.
///
/// For the R branch this is `cos(θ/2)|0_g⟩ - e^{-iφ} sin(θ/2)|+1_g⟩`. The L
/// branch couples `|0_g⟩` with the opposite sign, so its dark state is the R
/// state with `φ → φ + π`: `cos(θ/2)|0_g⟩ + e^{-iφ} sin(θ/2)|+1_g⟩`.
pub fn dark_state(theta: f64, phi: f64, branch: Branch) -> StateVector {
    let (s, co) = (0.5 * theta).sin_cos();
    let e = C64::from_polar(1.0, -phi);
    let sign = match branch {
        Branch::R => -1.0,
        Branch::L => 1.0,
    };
    StateVector::ground(c(co, 0.0), e * (sign * s)).expect("unit norm by construction")
}

/// Ground-subspace state orthogonal to [`dark_state`].
pub fn bright_state(theta: f64, phi: f64, branch: Branch) -> StateVector {
    let (s, co) = (0.5 * theta).sin_cos();
    let e = C64::from_polar(1.0, -phi);
    let sign = match branch {
        Branch::R => 1.0,
        Branch::L => -1.0,
    };
    StateVector::ground(c(s, 0.0), e * (sign * co)).expect("unit norm by construction")
}

/// Fidelity between the mixed qubit state with Bloch vector `b` and the pure
/// state along `b/|b|`: `(1 + |b|)/2`. Zero length gives 1/2.
pub fn bloch_fidelity(b: &BlochVector) -> f64 {
    0.5 * (1.0 + b.norm())
}

/// Ground-subspace Pauli operators embedded in the five-level space.
pub fn pauli5() -> [Mat5; 3] {
    let mut sx = Mat5::zeros();
    sx[(P, Z)] = c(1.0, 0.0);
    sx[(Z, P)] = c(1.0, 0.0);
    let mut sy = Mat5::zeros();
    sy[(P, Z)] = c(0.0, 1.0);
    sy[(Z, P)] = c(0.0, -1.0);
    let mut sz = Mat5::zeros();
    sz[(Z, Z)] = c(1.0, 0.0);
    sz[(P, P)] = c(-1.0, 0.0);
    [sx, sy, sz]
}

/// Qubit Pauli matrices in the ordering `(|0_g⟩, |+1_g⟩)`.
pub fn pauli2() -> [Mat2; 3] {
    let o = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    [
        Mat2::new(o, one, one, o),
        Mat2::new(o, -i, i, o),
        Mat2::new(one, o, o, -one),
    ]
}

/// `exp(-i (n̂·σ) α / 2)` for a unit axis `n`.
pub fn qubit_rotation(axis: [f64; 3], angle: f64) -> Mat2 {
    let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let [sx, sy, sz] = pauli2();
    let ns = (sx * c(axis[0], 0.0) + sy * c(axis[1], 0.0) + sz * c(axis[2], 0.0)) / c(norm, 0.0);
    let (s, co) = (0.5 * angle).sin_cos();
    Mat2::identity() * c(co, 0.0) - ns * c(0.0, s)
}

/// Embeds a qubit operator (ordering `(|0_g⟩, |+1_g⟩)`) into the five-level
/// space, acting as identity on the excited and singlet levels.
pub fn embed_qubit_unitary(u: &Mat2) -> Mat5 {
    let mut m = Mat5::identity();
    let idx = [Z, P];
    for a in 0..2 {
        for b in 0..2 {
            m[(idx[a], idx[b])] = u[(a, b)];
        }
    }
    m
}

/// Bloch vector `(Tr σx ρ, Tr σy ρ, Tr σz ρ)` of a 2×2 qubit matrix.
pub fn qubit_bloch(rho: &Mat2) -> BlochVector {
    let [sx, sy, sz] = pauli2();
    BlochVector::new(
        (sx * rho).trace().re,
        (sy * rho).trace().re,
        (sz * rho).trace().re,
    )
}

/// `(1 + b·σ)/2` as a 2×2 qubit matrix.
pub fn qubit_from_bloch(b: &BlochVector) -> Mat2 {
    let [sx, sy, sz] = pauli2();
    (Mat2::identity() + sx * c(b.x, 0.0) + sy * c(b.y, 0.0) + sz * c(b.z, 0.0)) * c(0.5, 0.0)
}
