//! Channel specifications and their Pauli-basis generators.
//!
//! A channel is given by a dissipative part `L+ = l_mu sigma^mu`, a list of
//! jump operators with Choi-eigenvalue signs, a nonlinearity strength `g`
//! and an optional Hermitian Hamiltonian `h . sigma`. In Pauli coordinates
//! its equation of motion is affine in `(tau, r)` apart from the diagonal
//! term `g tr(X Omega) r`.

use nalgebra::{Matrix3, Rotation3, Vector3};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::{dagger, sigma, trace, HermitianPauliVector, Mat2, PauliVectorC, PsdState};

/// Tolerance for exact algebraic cancellations (Omega = 0, Omega ~ I, unitality).
pub const ALGEBRAIC_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ChoiSign {
    Positive,
    Negative,
}

impl ChoiSign {
    pub fn value(self) -> f64 {
        match self {
            ChoiSign::Positive => 1.0,
            ChoiSign::Negative => -1.0,
        }
    }
}

impl TryFrom<i64> for ChoiSign {
    type Error = Error;

    fn try_from(v: i64) -> Result<Self> {
        match v {
            1 => Ok(ChoiSign::Positive),
            -1 => Ok(ChoiSign::Negative),
            other => Err(Error::InvalidSign(other)),
        }
    }
}

impl From<ChoiSign> for i64 {
    fn from(s: ChoiSign) -> i64 {
        match s {
            ChoiSign::Positive => 1,
            ChoiSign::Negative => -1,
        }
    }
}

/// One dissipator term `zeta B X B^dagger`; any rate is folded into `B`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JumpTerm {
    xi: PauliVectorC,
    zeta: ChoiSign,
}

impl JumpTerm {
    pub fn new(xi: PauliVectorC, zeta: ChoiSign) -> Result<Self> {
        if xi.xi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("jump operator"));
        }
        if xi.norm() == 0.0 {
            return Err(Error::ZeroJump);
        }
        Ok(Self { xi, zeta })
    }

    pub fn xi(&self) -> &PauliVectorC {
        &self.xi
    }

    pub fn zeta(&self) -> ChoiSign {
        self.zeta
    }

    pub fn operator(&self) -> Mat2 {
        self.xi.to_matrix()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSpec {
    pub ell: HermitianPauliVector,
    pub jumps: Vec<JumpTerm>,
    pub g: f64,
    /// Bloch coefficients of a Hermitian Hamiltonian; zero for amplification gates.
    pub h: Vector3<f64>,
}

impl ChannelSpec {
    pub fn new(ell: HermitianPauliVector, jumps: Vec<JumpTerm>, g: f64) -> Result<Self> {
        if ell.ell.iter().any(|v| !v.is_finite()) || !g.is_finite() {
            return Err(Error::NonFinite("channel spec"));
        }
        Ok(Self {
            ell,
            jumps,
            g,
            h: Vector3::zeros(),
        })
    }

    pub fn with_hamiltonian(mut self, h: Vector3<f64>) -> Result<Self> {
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("hamiltonian"));
        }
        self.h = h;
        Ok(self)
    }

    /// Scale used to turn absolute cancellation tolerances into relative ones.
    fn magnitude(&self) -> f64 {
        let jumps: f64 = self.jumps.iter().map(|j| j.xi.norm().powi(2)).sum();
        1f64.max(self.ell.norm() + jumps)
    }
}

/// `G^{ab} = tr(sigma^a B sigma^b B^dagger)/2`, `C^a = tr(sigma^a B B^dagger)/2` by direct traces.
pub fn jump_generator(j: &JumpTerm) -> (Matrix3<f64>, Vector3<f64>) {
    let b = j.operator();
    let bd = dagger(&b);
    let g = Matrix3::from_fn(|a, c| 0.5 * trace(&(sigma(a + 1) * b * sigma(c + 1) * bd)).re);
    let bbd = b * bd;
    let cv = Vector3::from_fn(|a, _| 0.5 * trace(&(sigma(a + 1) * bbd)).re);
    (g, cv)
}

/// Closed-form generator in terms of the complex coordinates `xi`.
pub fn jump_generator_closed_form(xi: &PauliVectorC) -> (Matrix3<f64>, Vector3<f64>) {
    let x = &xi.xi;
    let diag = x[0].norm_sqr() - x[1].norm_sqr() - x[2].norm_sqr() - x[3].norm_sqr();
    let g = Matrix3::from_fn(|a, b| {
        let mut v = 2.0 * (x[a + 1].conj() * x[b + 1]).re;
        if a == b {
            v += diag;
        }
        for c in 0..3 {
            v += 2.0 * (x[0].conj() * x[c + 1]).im * crate::pauli::levi_civita(a, b, c);
        }
        v
    });
    (g, xi.gram_adjoint().sigma_part())
}

/// Pauli-basis pieces of the equation of motion
/// `dr/dt = G r + C tau + g tr(X Omega) r + 2 h x r`,
/// `dtau/dt = (g tau - 1) tr(X Omega)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineGenerator {
    pub g_total: Matrix3<f64>,
    pub c_total: Vector3<f64>,
    pub omega: HermitianPauliVector,
    pub g: f64,
    pub tr_l: f64,
    pub h: Vector3<f64>,
}

fn cross_matrix(v: &Vector3<f64>) -> Matrix3<f64> {
    v.cross_matrix()
}

impl AffineGenerator {
    pub fn tr_x_omega(&self, tau: f64, r: &Vector3<f64>) -> f64 {
        tau * self.omega.ell[0] + r.dot(&self.omega.sigma_part())
    }

    pub fn velocity(&self, tau: f64, r: &Vector3<f64>) -> (Vector3<f64>, f64) {
        let txo = self.tr_x_omega(tau, r);
        let mut dr = self.g_total * r + self.c_total * tau + r * (self.g * txo);
        if self.h != Vector3::zeros() {
            dr += 2.0 * self.h.cross(r);
        }
        (dr, (self.g * tau - 1.0) * txo)
    }

    /// Jacobian of `dr/dt` with respect to `r` at fixed `tau`.
    pub fn jacobian(&self, tau: f64, r: &Vector3<f64>) -> Matrix3<f64> {
        let txo = self.tr_x_omega(tau, r);
        self.g_total
            + Matrix3::identity() * (self.g * txo)
            + (r * self.omega.sigma_part().transpose()) * self.g
            + 2.0 * cross_matrix(&self.h)
    }

    /// `kappa` when `Omega = kappa I` up to the algebraic tolerance.
    pub fn pseudo_linear_kappa(&self) -> Option<f64> {
        let sig = self.omega.sigma_part().amax();
        (sig <= ALGEBRAIC_TOL * 1f64.max(self.omega.norm())).then_some(self.omega.ell[0])
    }

    /// Constant matrix of the linear dynamics on a fixed-trace slice, when one exists:
    /// for `g = 0` or pseudo-linear channels, `dr/dt = A r + C tau` exactly.
    pub fn slice_matrix(&self, tau: f64) -> Option<Matrix3<f64>> {
        let base = self.g_total + 2.0 * cross_matrix(&self.h);
        if self.g == 0.0 {
            return Some(base);
        }
        self.pseudo_linear_kappa()
            .map(|kappa| base + Matrix3::identity() * (self.g * kappa * tau))
    }
}

pub fn assemble(spec: &ChannelSpec) -> AffineGenerator {
    let tr_l = spec.ell.trace();
    let mut g_total = Matrix3::identity() * tr_l;
    let mut c_total = 2.0 * spec.ell.sigma_part();
    let mut omega = spec.ell * -2.0;
    for j in &spec.jumps {
        let s = j.zeta.value();
        let (g, c) = jump_generator(j);
        g_total += g * s;
        c_total += c * s;
        omega = omega - j.xi.gram() * s;
    }
    AffineGenerator {
        g_total,
        c_total,
        omega,
        g: spec.g,
        tr_l,
        h: spec.h,
    }
}

/// `Omega = -2 L+ - sum zeta B^dagger B` formed from 2x2 matrices.
pub fn omega_matrix(spec: &ChannelSpec) -> Mat2 {
    spec.jumps.iter().fold(spec.ell.to_matrix() * Complex64::new(-2.0, 0.0), |acc, j| {
        let b = j.operator();
        acc - dagger(&b) * b * Complex64::new(j.zeta.value(), 0.0)
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PtpClass {
    /// Linear PTP: trace conserved for every input.
    Linear,
    /// Nonlinear in normalization only.
    Nino,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TracePreservation {
    Unconditional,
    /// Trace is conserved on the `g tau = 1` plane.
    ConditionalOnPlane,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelClass {
    pub cp: bool,
    pub linear: bool,
    pub class: PtpClass,
    pub pseudo_linear: bool,
    pub kappa: Option<f64>,
    pub unital: bool,
    pub trace_preservation: TracePreservation,
}

pub fn classify(spec: &ChannelSpec) -> Result<ChannelClass> {
    let gen = assemble(spec);
    let linear = spec.g == 0.0;
    if linear {
        let size = gen.omega.max_abs();
        if size > ALGEBRAIC_TOL * spec.magnitude() {
            return Err(Error::NotTracePreserving(size));
        }
    }
    let kappa = if linear { None } else { gen.pseudo_linear_kappa() };
    let v = initial_velocity(spec);
    Ok(ChannelClass {
        cp: spec.jumps.iter().all(|j| j.zeta == ChoiSign::Positive),
        linear,
        class: if linear { PtpClass::Linear } else { PtpClass::Nino },
        pseudo_linear: kappa.is_some(),
        kappa,
        unital: v.norm() <= ALGEBRAIC_TOL,
        trace_preservation: if linear {
            TracePreservation::Unconditional
        } else {
            TracePreservation::ConditionalOnPlane
        },
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Velocity {
    pub dr: Vector3<f64>,
    pub dtau: f64,
}

impl Velocity {
    pub fn norm(&self) -> f64 {
        (self.dr.norm_squared() + self.dtau * self.dtau).sqrt()
    }
}

/// Velocity at the maximally mixed state `I/2`, from the Pauli-basis equation of motion.
pub fn initial_velocity(spec: &ChannelSpec) -> Velocity {
    let (dr, dtau) = assemble(spec).velocity(1.0, &Vector3::zeros());
    Velocity { dr, dtau }
}

/// Same quantity from the operator identity
/// `dX/dt|_{I/2} = 1/2 sum zeta [B, B^dagger] - Omega/2 + g tr(Omega)/4 I`.
pub fn initial_velocity_operator_form(spec: &ChannelSpec) -> Velocity {
    let omega = omega_matrix(spec);
    let tr_omega = trace(&omega);
    let commutators = spec.jumps.iter().fold(Mat2::zeros(), |acc, j| {
        let b = j.operator();
        let bd = dagger(&b);
        acc + (b * bd - bd * b) * Complex64::new(j.zeta.value(), 0.0)
    });
    let xdot = commutators * Complex64::new(0.5, 0.0) - omega * Complex64::new(0.5, 0.0)
        + sigma(0) * (tr_omega * (spec.g / 4.0));
    let coeffs = HermitianPauliVector::from_matrix(&xdot);
    Velocity {
        dr: 2.0 * coeffs.sigma_part(),
        dtau: 2.0 * coeffs.ell[0],
    }
}

/// `L+ -> L+ + c I`; jump operators are untouched.
pub fn shift_transform(spec: &ChannelSpec, c: f64) -> ChannelSpec {
    let mut out = spec.clone();
    out.ell.ell[0] += c;
    out
}

/// Map a pseudo-linear NINO channel (`g = 1`, `Omega = kappa I`) to its linear dual:
/// shift `L+` by `kappa/2` and switch the nonlinearity off.
pub fn dualize(spec: &ChannelSpec) -> Result<ChannelSpec> {
    if (spec.g - 1.0).abs() > ALGEBRAIC_TOL {
        return Err(Error::WrongNonlinearity {
            expected: 1.0,
            got: spec.g,
        });
    }
    let gen = assemble(spec);
    let kappa = gen
        .pseudo_linear_kappa()
        .ok_or_else(|| Error::NotPseudoLinear(gen.omega.sigma_part().norm()))?;
    let mut dual = shift_transform(spec, 0.5 * kappa);
    dual.g = 0.0;
    Ok(dual)
}

/// Conjugate every operator of the channel by the unitary whose adjoint action is `rot`.
///
/// Generators transform as `G -> R G R^T`, `C -> R C`, so trajectories are
/// rotated copies of the original ones.
pub fn rotate_spec(spec: &ChannelSpec, rot: &Rotation3<f64>) -> ChannelSpec {
    let r = rot.matrix();
    let mut out = spec.clone();
    let l = r * spec.ell.sigma_part();
    out.ell.ell[1..].copy_from_slice(l.as_slice());
    for j in &mut out.jumps {
        let xi = j.xi.xi;
        let v = |k: usize| -> Complex64 { (0..3).map(|b| xi[b + 1] * r[(k, b)]).sum() };
        j.xi = PauliVectorC::new([xi[0], v(0), v(1), v(2)]);
    }
    out.h = r * spec.h;
    out
}

/// Whole-state velocity; defined off the cone as well.
pub fn velocity_at(spec: &ChannelSpec, state: &PsdState) -> Velocity {
    let (dr, dtau) = assemble(spec).velocity(state.tau(), &state.r());
    Velocity { dr, dtau }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalogue::{jump_b0, jump_b1, jump_b2, jump_b3, Preset};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn mat_close(a: &Matrix3<f64>, b: &Matrix3<f64>, tol: f64) -> bool {
        (a - b).amax() <= tol
    }

    #[test]
    fn rotation_conjugates_generators() {
        let rot = Rotation3::from_axis_angle(&Vector3::z_axis(), std::f64::consts::FRAC_PI_4);
        let spec = Preset::ThreeJumpNino { big_m: 1.0, gamma: 0.5 }
            .expand()
            .unwrap()
            .with_hamiltonian(Vector3::new(0.1, 0.2, 0.3))
            .unwrap();
        let (a, b) = (assemble(&spec), assemble(&rotate_spec(&spec, &rot)));
        let r = rot.matrix();
        assert!(mat_close(&b.g_total, &(r * a.g_total * r.transpose()), 1e-14));
        assert!((b.c_total - r * a.c_total).amax() < 1e-14);
        assert!((b.omega.sigma_part() - r * a.omega.sigma_part()).amax() < 1e-14);
        assert_relative_eq!(b.omega.ell[0], a.omega.ell[0], epsilon = 1e-14);
        let lin = assemble(&rotate_spec(&Preset::LinearCptp { m: 1.0 }.expand().unwrap(), &rot));
        let diag: Vector3<f64> = Vector3::new(1.0, 1.0, 0.0).normalize();
        assert!((lin.c_total - 4.0 * diag).amax() < 1e-14);
    }

    #[test]
    fn table_rows_from_direct_traces() {
        let m = 1.0;
        let (g0, c0) = jump_generator(&jump_b0(m, ChoiSign::Positive));
        assert!(mat_close(&g0, &Matrix3::from_diagonal(&Vector3::new(-2.0, 0.0, 0.0)), 1e-12));
        assert_eq!(c0, Vector3::new(2.0, 0.0, 0.0));

        let (g1, c1) = jump_generator(&jump_b1(m, ChoiSign::Positive));
        let t1 = Matrix3::new(0.0, 2.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0, -2.0);
        assert!(mat_close(&g1, &t1, 1e-12));
        assert_eq!(c1, Vector3::zeros());

        let (g2, c2) = jump_generator(&jump_b2(m, ChoiSign::Positive));
        assert!(mat_close(&g2, &Matrix3::from_diagonal(&Vector3::new(0.0, 0.0, 2.0)), 1e-12));
        assert_eq!(c2, Vector3::new(0.0, 0.0, 2.0));

        let (g3, c3) = jump_generator(&jump_b3(m, ChoiSign::Positive));
        assert!(mat_close(&g3, &Matrix3::from_diagonal(&Vector3::new(-1.0, -1.0, 1.0)), 1e-12));
        assert_eq!(c3, Vector3::zeros());
    }

    #[test]
    fn rates_scale_quadratically() {
        let (g, c) = jump_generator(&jump_b0(0.5, ChoiSign::Positive));
        assert_relative_eq!(g[(0, 0)], -0.5, epsilon = 1e-15);
        assert_relative_eq!(c[0], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn assemble_linear_cptp() {
        let m: f64 = 1.3;
        let m2 = m * m;
        let gen = assemble(&Preset::LinearCptp { m }.expand().unwrap());
        let expected = Matrix3::from_diagonal(&Vector3::new(-4.0, -2.0, -2.0)) * m2;
        assert!(mat_close(&gen.g_total, &expected, 1e-12));
        assert!((gen.c_total - Vector3::new(4.0 * m2, 0.0, 0.0)).amax() < 1e-12);
        assert!(gen.omega.max_abs() < 1e-12);
    }

    #[test]
    fn assemble_three_jump_pseudo_linear() {
        let (big_m, gamma) = (1.0, 0.5);
        let gen = assemble(&Preset::ThreeJumpNino { big_m, gamma }.expand().unwrap());
        let kappa = gen.pseudo_linear_kappa().unwrap();
        assert_relative_eq!(kappa, -(big_m + gamma / 2.0), epsilon = 1e-14);
        assert!(gen.c_total.amax() < 1e-14);
        let on_plane = gen.slice_matrix(1.0).unwrap();
        let expected = Matrix3::new(-gamma, big_m, 0.0, big_m, -gamma, 0.0, 0.0, 0.0, -2.0 * big_m);
        assert!(mat_close(&on_plane, &expected, 1e-14));
    }

    #[test]
    fn assemble_empty_spec() {
        let spec = ChannelSpec::new(HermitianPauliVector::default(), vec![], 0.0).unwrap();
        let gen = assemble(&spec);
        assert_eq!(gen.g_total, Matrix3::zeros());
        assert_eq!(gen.c_total, Vector3::zeros());
        assert_eq!(gen.omega, HermitianPauliVector::default());
    }

    #[test]
    fn classify_examples() {
        let c = classify(&Preset::LinearCptp { m: 1.0 }.expand().unwrap()).unwrap();
        assert!(c.cp && c.linear && !c.unital);
        assert_eq!(c.class, PtpClass::Linear);
        assert_eq!(c.trace_preservation, TracePreservation::Unconditional);

        let c = classify(&Preset::LinearNonCp { big_m: 1.0, gamma: 0.5 }.expand().unwrap()).unwrap();
        assert!(!c.cp && c.linear && c.unital);
        assert_eq!(c.class, PtpClass::Linear);

        let c = classify(&Preset::OneJumpNino { m: 1.0 }.expand().unwrap()).unwrap();
        assert!(c.cp && !c.linear && !c.pseudo_linear);
        assert_eq!(c.class, PtpClass::Nino);
        assert_eq!(c.trace_preservation, TracePreservation::ConditionalOnPlane);

        let c = classify(&Preset::ThreeJumpNino { big_m: 1.0, gamma: 0.5 }.expand().unwrap()).unwrap();
        assert!(!c.cp && c.pseudo_linear && c.unital);
    }

    #[test]
    fn classify_rejects_leaky_linear_channel() {
        let mut spec = Preset::OneJumpNino { m: 1.0 }.expand().unwrap();
        spec.g = 0.0;
        assert!(matches!(classify(&spec), Err(Error::NotTracePreserving(_))));
    }

    #[test]
    fn one_jump_omega() {
        let m: f64 = 0.7;
        let gen = assemble(&Preset::OneJumpNino { m }.expand().unwrap());
        let m2 = m * m;
        assert!((gen.omega.ell[0] + 2.0 * m2).abs() < 1e-14);
        assert!((gen.omega.ell[1] - 2.0 * m2).abs() < 1e-14);
    }

    #[test]
    fn initial_velocity_examples() {
        let v = initial_velocity(&Preset::LinearCptp { m: 1.0 }.expand().unwrap());
        assert!((v.dr - Vector3::new(4.0, 0.0, 0.0)).amax() < 1e-14);
        assert_eq!(v.dtau, 0.0);

        let v = initial_velocity(&Preset::ThreeJumpNino { big_m: 1.0, gamma: 0.5 }.expand().unwrap());
        assert!(v.norm() <= 1e-12);

        // dr/dt = G r + C tau + tr(X Omega) r collapses to C at r = 0, tau = 1
        let (l0, l1) = (-0.4, 0.9);
        let v = initial_velocity(&Preset::NoJumpNino { l0, l1 }.expand().unwrap());
        assert!((v.dr - Vector3::new(2.0 * l1, 0.0, 0.0)).amax() < 1e-15);
    }

    #[test]
    fn shift_examples() {
        let spec = Preset::OneJumpNino { m: 1.0 }.expand().unwrap();
        assert_eq!(shift_transform(&spec, 0.0), spec);

        let m2: f64 = 1.0;
        let shifted = assemble(&shift_transform(&spec, m2));
        let expected = HermitianPauliVector::new([-4.0 * m2, 2.0 * m2, 0.0, 0.0]);
        assert!((shifted.omega - expected).max_abs() < 1e-14);

        let pl = Preset::PseudoLinearNino { m: 1.0 }.expand().unwrap();
        let kappa = assemble(&pl).pseudo_linear_kappa().unwrap();
        assert!(assemble(&shift_transform(&pl, kappa / 2.0)).omega.max_abs() < 1e-14);
    }

    #[test]
    fn dualize_examples() {
        for m in [0.5, 1.0, 2.0] {
            let dual = dualize(&Preset::PseudoLinearNino { m }.expand().unwrap()).unwrap();
            let cptp = Preset::LinearCptp { m }.expand().unwrap();
            assert_eq!(dual.g, 0.0);
            assert!((dual.ell - cptp.ell).max_abs() < 1e-14);
            assert_eq!(dual.jumps, cptp.jumps);
        }

        let (big_m, gamma) = (1.0, 0.5);
        let dual = dualize(&Preset::ThreeJumpNino { big_m, gamma }.expand().unwrap()).unwrap();
        let noncp = Preset::LinearNonCp { big_m, gamma }.expand().unwrap();
        assert!((dual.ell - noncp.ell).max_abs() < 1e-14);
        assert_relative_eq!(dual.ell.ell[3], -big_m / 2.0);
        assert_relative_eq!(dual.ell.ell[0], -(big_m + gamma / 2.0) / 2.0);
        assert!(assemble(&dual).omega.max_abs() < 1e-14);
    }

    #[test]
    fn dualize_rejects_non_pseudo_linear() {
        let spec = Preset::OneJumpNino { m: 1.0 }.expand().unwrap();
        assert!(matches!(dualize(&spec), Err(Error::NotPseudoLinear(_))));
        let cptp = Preset::LinearCptp { m: 1.0 }.expand().unwrap();
        assert!(matches!(dualize(&cptp), Err(Error::WrongNonlinearity { .. })));
    }

    #[test]
    fn jump_sign_parsing() {
        assert_eq!(ChoiSign::try_from(-1).unwrap(), ChoiSign::Negative);
        assert!(matches!(ChoiSign::try_from(0), Err(Error::InvalidSign(0))));
        assert!(matches!(
            JumpTerm::new(PauliVectorC::from_parts([0.0; 4], [0.0; 4]), ChoiSign::Positive),
            Err(Error::ZeroJump)
        ));
    }

    fn arb_jump() -> impl Strategy<Value = JumpTerm> {
        (
            proptest::array::uniform4(-1.5f64..1.5),
            proptest::array::uniform4(-1.5f64..1.5),
            any::<bool>(),
        )
            .prop_filter_map("nonzero jump", |(re, im, neg)| {
                let sign = if neg { ChoiSign::Negative } else { ChoiSign::Positive };
                JumpTerm::new(PauliVectorC::from_parts(re, im), sign).ok()
            })
    }

    fn arb_spec() -> impl Strategy<Value = ChannelSpec> {
        (
            proptest::array::uniform4(-2.0f64..2.0),
            proptest::collection::vec(arb_jump(), 0..4),
            -2.0f64..2.0,
        )
            .prop_map(|(ell, jumps, g)| {
                ChannelSpec::new(HermitianPauliVector::new(ell), jumps, g).unwrap()
            })
    }

    fn arb_bloch() -> impl Strategy<Value = Vector3<f64>> {
        (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, 0.0f64..1.0).prop_map(|(x, y, z, len)| {
            let v = Vector3::new(x, y, z);
            if v.norm() < 1e-9 {
                Vector3::zeros()
            } else {
                v.normalize() * len
            }
        })
    }

    proptest! {
        #[test]
        fn closed_form_matches_direct_traces(j in arb_jump()) {
            let (gd, cd) = jump_generator(&j);
            let (gc, cc) = jump_generator_closed_form(j.xi());
            prop_assert!((gd - gc).amax() < 1e-12);
            prop_assert!((cd - cc).amax() < 1e-12);
        }

        #[test]
        fn omega_pauli_matches_matrix(spec in arb_spec()) {
            let from_matrix = HermitianPauliVector::from_matrix(&omega_matrix(&spec));
            prop_assert!((assemble(&spec).omega - from_matrix).max_abs() < 1e-12);
        }

        #[test]
        fn initial_velocity_two_routes_agree(spec in arb_spec()) {
            let a = initial_velocity(&spec);
            let b = initial_velocity_operator_form(&spec);
            prop_assert!((a.dr - b.dr).amax() < 1e-12);
            prop_assert!((a.dtau - b.dtau).abs() < 1e-12);
        }

        #[test]
        fn unital_flag_matches_initial_velocity(spec in arb_spec()) {
            if let Ok(class) = classify(&spec) {
                prop_assert_eq!(class.unital, initial_velocity(&spec).norm() <= 1e-12);
            }
        }

        #[test]
        fn shift_is_invisible_on_unit_plane(mut spec in arb_spec(), c in -3.0f64..3.0, r in arb_bloch()) {
            spec.g = 1.0;
            let a = assemble(&spec).velocity(1.0, &r);
            let b = assemble(&shift_transform(&spec, c)).velocity(1.0, &r);
            prop_assert!((a.0 - b.0).amax() < 1e-12);
            prop_assert!((a.1 - b.1).abs() < 1e-12);
        }

        #[test]
        fn dual_matches_on_unit_plane(
            big_m in 0.1f64..3.0, frac in 0.0f64..2.0, r in arb_bloch(), m in 0.1f64..2.0
        ) {
            let gamma = frac * big_m;
            for spec in [
                Preset::ThreeJumpNino { big_m, gamma }.expand().unwrap(),
                Preset::PseudoLinearNino { m }.expand().unwrap(),
            ] {
                let dual = dualize(&spec).unwrap();
                let a = assemble(&spec).velocity(1.0, &r);
                let b = assemble(&dual).velocity(1.0, &r);
                prop_assert!((a.0 - b.0).amax() < 1e-12);
                prop_assert!(assemble(&dual).omega.max_abs() < 1e-12);
            }
        }
    }
}
