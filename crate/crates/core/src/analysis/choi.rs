//! Finite-time Choi matrices of linear channels.

use nalgebra::{Matrix4, SymmetricEigen};
use num_complex::Complex64;

use crate::channel::ChannelSpec;
use crate::dynamics::ode::{Scheme, Stepper, Vector};
use crate::error::{Error, Result};
use crate::pauli::{dagger, sigma, Mat2};

const RTOL: f64 = 1e-12;
const ATOL: f64 = 1e-14;

fn pack(m: &Mat2) -> Vector<8> {
    Vector::<8>::from_fn(|i, _| {
        let z = m[(i / 4, (i / 2) % 2)];
        if i % 2 == 0 {
            z.re
        } else {
            z.im
        }
    })
}

fn unpack(v: &Vector<8>) -> Mat2 {
    Mat2::from_fn(|a, b| {
        let i = 4 * a + 2 * b;
        Complex64::new(v[i], v[i + 1])
    })
}

/// Linear generator `X -> {L+, X} - i[H, X] + sum zeta B X B^dagger` on arbitrary 2x2 operators.
fn linear_generator(spec: &ChannelSpec) -> impl Fn(&Mat2) -> Mat2 {
    let l = spec.ell.to_matrix();
    let ham = (1..4).fold(Mat2::zeros(), |acc, a| acc + sigma(a) * Complex64::new(spec.h[a - 1], 0.0));
    let jumps: Vec<(Mat2, Mat2, f64)> = spec
        .jumps
        .iter()
        .map(|j| {
            let b = j.operator();
            (b, dagger(&b), j.zeta().value())
        })
        .collect();
    let minus_i = Complex64::new(0.0, -1.0);
    move |x: &Mat2| {
        let mut out = l * x + x * l + (ham * x - x * ham) * minus_i;
        for (b, bd, s) in &jumps {
            out += b * x * bd * Complex64::new(*s, 0.0);
        }
        out
    }
}

fn check_linear(spec: &ChannelSpec) -> Result<()> {
    if spec.g != 0.0 {
        return Err(Error::WrongNonlinearity { expected: 0.0, got: spec.g });
    }
    Ok(())
}

/// Images of `x0` at each of the nondecreasing, nonnegative `times`, from one integration.
pub fn propagate_many(spec: &ChannelSpec, x0: &Mat2, times: &[f64]) -> Result<Vec<Mat2>> {
    check_linear(spec)?;
    let mut prev = 0.0;
    for &t in times {
        if !(t.is_finite() && t >= prev) {
            return Err(Error::InvalidParams(format!("times must be finite, nonnegative and nondecreasing, got {t}")));
        }
        prev = t;
    }
    let span = times.last().copied().unwrap_or(0.0);
    let gen = linear_generator(spec);
    let f = |_: f64, v: &Vector<8>| pack(&gen(&unpack(v)));
    let mut stepper = Stepper::new(f, Scheme::Dopri5 { rtol: RTOL, atol: ATOL }, 0.0, pack(x0), span, 1_000_000)?;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        while stepper.t() < t {
            stepper.advance(t)?;
        }
        out.push(unpack(stepper.y()));
    }
    Ok(out)
}

/// Propagate one operator through the linear channel for time `t`.
pub fn propagate(spec: &ChannelSpec, x0: &Mat2, t: f64) -> Result<Mat2> {
    Ok(propagate_many(spec, x0, &[t])?[0])
}

fn basis(i: usize, j: usize) -> Mat2 {
    let mut e = Mat2::zeros();
    e[(i, j)] = Complex64::new(1.0, 0.0);
    e
}

fn assemble_choi(images: [[&Mat2; 2]; 2]) -> Matrix4<Complex64> {
    Matrix4::from_fn(|row, col| images[row / 2][col / 2][(row % 2, col % 2)])
}

fn sorted_spectrum(choi: &Matrix4<Complex64>) -> [f64; 4] {
    let herm = (choi + choi.adjoint()) * Complex64::new(0.5, 0.0);
    let mut eig: Vec<f64> = SymmetricEigen::new(herm).eigenvalues.iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    [eig[0], eig[1], eig[2], eig[3]]
}

/// Unnormalized Choi matrix `sum_ij E_ij (x) Phi_t(E_ij)`.
pub fn choi_matrix(spec: &ChannelSpec, t: f64) -> Result<Matrix4<Complex64>> {
    Ok(choi_matrices(spec, &[t])?.remove(0))
}

/// Choi matrices at several nondecreasing times.
pub fn choi_matrices(spec: &ChannelSpec, times: &[f64]) -> Result<Vec<Matrix4<Complex64>>> {
    let mut images = Vec::with_capacity(4);
    for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        images.push(propagate_many(spec, &basis(i, j), times)?);
    }
    Ok((0..times.len())
        .map(|k| assemble_choi([[&images[0][k], &images[1][k]], [&images[2][k], &images[3][k]]]))
        .collect())
}

/// Eigenvalues of the Choi matrix at time `t`, ascending.
pub fn choi_spectrum(spec: &ChannelSpec, t: f64) -> Result<[f64; 4]> {
    Ok(sorted_spectrum(&choi_matrix(spec, t)?))
}

/// Ascending Choi eigenvalues at each of several nondecreasing times.
pub fn choi_spectra(spec: &ChannelSpec, times: &[f64]) -> Result<Vec<[f64; 4]>> {
    Ok(choi_matrices(spec, times)?.iter().map(sorted_spectrum).collect())
}
