//! Extended Pauli representation of single-qubit operators.
//!
//! A qubit operator is written as `X = (tau I + r . sigma) / 2`. Positive
//! semidefinite operators with nonzero trace form the PSD cone `|r| <= tau`,
//! and pure states sit on its surface `|r| = tau`.

use nalgebra::{Matrix2, Vector3};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Mat2 = Matrix2<Complex64>;

/// States with a smaller trace are treated as the excluded cone apex.
pub const APEX_CUTOFF: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// `(I, sigma^1, sigma^2, sigma^3)` in the standard basis.
pub fn sigma(mu: usize) -> Mat2 {
    match mu {
        0 => Mat2::new(ONE, ZERO, ZERO, ONE),
        1 => Mat2::new(ZERO, ONE, ONE, ZERO),
        2 => Mat2::new(ZERO, -I, I, ZERO),
        3 => Mat2::new(ONE, ZERO, ZERO, -ONE),
        _ => panic!("Pauli index {mu} out of range"),
    }
}

pub fn dagger(m: &Mat2) -> Mat2 {
    m.adjoint()
}

pub fn trace(m: &Mat2) -> Complex64 {
    m[(0, 0)] + m[(1, 1)]
}

/// Levi-Civita symbol with `eps(0, 1, 2) = +1` (zero-based spatial indices).
pub fn levi_civita(a: usize, b: usize, c: usize) -> f64 {
    match (a, b, c) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Complex Pauli coordinates `xi_mu` of a general operator `B = xi_mu sigma^mu`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PauliVectorC {
    pub xi: [Complex64; 4],
}

impl PauliVectorC {
    pub fn new(xi: [Complex64; 4]) -> Self {
        Self { xi }
    }

    pub fn from_parts(re: [f64; 4], im: [f64; 4]) -> Self {
        Self {
            xi: std::array::from_fn(|mu| Complex64::new(re[mu], im[mu])),
        }
    }

    pub fn re(&self) -> [f64; 4] {
        self.xi.map(|z| z.re)
    }

    pub fn im(&self) -> [f64; 4] {
        self.xi.map(|z| z.im)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            xi: self.xi.map(|z| z * s),
        }
    }

    pub fn norm(&self) -> f64 {
        self.xi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn to_matrix(&self) -> Mat2 {
        (0..4).fold(Mat2::zeros(), |acc, mu| acc + sigma(mu) * self.xi[mu])
    }

    /// Decompose via `xi_mu = tr(sigma^mu B) / 2`.
    pub fn from_matrix(b: &Mat2) -> Self {
        Self {
            xi: std::array::from_fn(|mu| trace(&(sigma(mu) * b)) * 0.5),
        }
    }

    /// Pauli coordinates of `B^dagger B`, evaluated without forming matrices.
    pub fn gram(&self) -> HermitianPauliVector {
        self.product_coefficients(false)
    }

    /// Pauli coordinates of `B B^dagger`.
    pub fn gram_adjoint(&self) -> HermitianPauliVector {
        self.product_coefficients(true)
    }

    fn product_coefficients(&self, adjoint_last: bool) -> HermitianPauliVector {
        let xi = &self.xi;
        let identity: f64 = xi.iter().map(|z| z.norm_sqr()).sum();
        let mut ell = [identity, 0.0, 0.0, 0.0];
        for a in 0..3 {
            // sigma^b sigma^c = delta^{bc} + i eps^{bca} sigma^a
            let mut cross = ZERO;
            for b in 0..3 {
                for c in 0..3 {
                    let eps = levi_civita(b, c, a);
                    if eps != 0.0 {
                        let pair = if adjoint_last {
                            xi[b + 1] * xi[c + 1].conj()
                        } else {
                            xi[b + 1].conj() * xi[c + 1]
                        };
                        cross += I * pair * eps;
                    }
                }
            }
            ell[a + 1] = 2.0 * (xi[0].conj() * xi[a + 1]).re + cross.re;
        }
        HermitianPauliVector { ell }
    }
}

/// Real Pauli coordinates `l_mu` of a Hermitian operator `l_mu sigma^mu`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct HermitianPauliVector {
    pub ell: [f64; 4],
}

impl HermitianPauliVector {
    pub fn new(ell: [f64; 4]) -> Self {
        Self { ell }
    }

    pub fn identity(c: f64) -> Self {
        Self {
            ell: [c, 0.0, 0.0, 0.0],
        }
    }

    pub fn sigma_part(&self) -> Vector3<f64> {
        Vector3::new(self.ell[1], self.ell[2], self.ell[3])
    }

    /// `tr(l_mu sigma^mu) = 2 l_0`.
    pub fn trace(&self) -> f64 {
        2.0 * self.ell[0]
    }

    pub fn to_matrix(&self) -> Mat2 {
        (0..4).fold(Mat2::zeros(), |acc, mu| acc + sigma(mu) * Complex64::new(self.ell[mu], 0.0))
    }

    /// Coordinates of the Hermitian part of `m`.
    pub fn from_matrix(m: &Mat2) -> Self {
        Self {
            ell: std::array::from_fn(|mu| 0.5 * trace(&(sigma(mu) * m)).re),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.ell.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn norm(&self) -> f64 {
        self.ell.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl std::ops::Add for HermitianPauliVector {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self {
            ell: std::array::from_fn(|mu| self.ell[mu] + rhs.ell[mu]),
        }
    }
}

impl std::ops::Sub for HermitianPauliVector {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self {
            ell: std::array::from_fn(|mu| self.ell[mu] - rhs.ell[mu]),
        }
    }
}

impl std::ops::Mul<f64> for HermitianPauliVector {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self {
            ell: self.ell.map(|v| v * s),
        }
    }
}

/// A point `(tau, r)` of the extended qubit state space.
///
/// The trace is kept away from the cone apex. The Bloch vector is not
/// forced into the cone: off-cone points are needed when probing the
/// unstable region of nonlinear channels, so membership is a query
/// ([`PsdState::is_physical`]) rather than a construction invariant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsdState {
    tau: f64,
    r: Vector3<f64>,
}

impl PsdState {
    pub fn new(tau: f64, r: Vector3<f64>) -> Result<Self> {
        if !tau.is_finite() || r.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("state"));
        }
        if tau < APEX_CUTOFF {
            return Err(Error::ApexState(tau));
        }
        Ok(Self { tau, r })
    }

    /// Normalized state with Bloch vector `r`.
    pub fn bloch(r: Vector3<f64>) -> Self {
        Self { tau: 1.0, r }
    }

    pub fn maximally_mixed() -> Self {
        Self::bloch(Vector3::zeros())
    }

    /// Skips validation; used by integrators that run their own apex checks.
    pub(crate) fn raw(tau: f64, r: Vector3<f64>) -> Self {
        Self { tau, r }
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn r(&self) -> Vector3<f64> {
        self.r
    }

    /// Decompose a 2x2 operator; only its Hermitian part is kept.
    pub fn decompose(m: &Mat2) -> Result<Self> {
        let h = HermitianPauliVector::from_matrix(m);
        Self::new(2.0 * h.ell[0], 2.0 * h.sigma_part())
    }

    pub fn reconstruct(&self) -> Mat2 {
        let coeffs = HermitianPauliVector::new([self.tau, self.r.x, self.r.y, self.r.z]);
        coeffs.to_matrix() * Complex64::new(0.5, 0.0)
    }

    /// Eigenvalues `((tau + |r|)/2, (tau - |r|)/2)`.
    pub fn spectrum(&self) -> (f64, f64) {
        let n = self.r.norm();
        (0.5 * (self.tau + n), 0.5 * (self.tau - n))
    }

    pub fn is_pure(&self, tol: f64) -> bool {
        (self.tau - self.r.norm()).abs() <= tol
    }

    pub fn cone_margin(&self) -> f64 {
        self.tau - self.r.norm()
    }

    pub fn is_physical(&self, tol: f64) -> bool {
        self.cone_margin() >= -tol
    }

    /// Purity `tr(rho^2)` and von Neumann entropy (natural log) of `rho = X / tau`.
    ///
    /// Off-cone points have a negative eigenvalue and report a NaN entropy.
    pub fn purity_entropy(&self) -> (f64, f64) {
        let s = self.r.norm() / self.tau;
        let purity = 0.5 * (1.0 + s * s);
        let entropy = [0.5 * (1.0 + s), 0.5 * (1.0 - s)]
            .iter()
            .map(|&lambda| {
                if lambda.abs() <= 1e-15 {
                    0.0
                } else if lambda < 0.0 {
                    f64::NAN
                } else {
                    -lambda * lambda.ln()
                }
            })
            .sum();
        (purity, entropy)
    }

    /// Unnormalized `tr(X A) = (tau tr(A) + r . tr(sigma A)) / 2`.
    pub fn trace_with(&self, obs: &HermitianPauliVector) -> f64 {
        self.tau * obs.ell[0] + self.r.dot(&obs.sigma_part())
    }

    /// Normalized expectation `tr(X A) / tr(X)`.
    pub fn expectation(&self, obs: &HermitianPauliVector) -> Result<f64> {
        if self.tau <= 0.0 {
            return Err(Error::ApexState(self.tau));
        }
        Ok(self.trace_with(obs) / self.tau)
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(c * self.tau, c * self.r)
    }
}
