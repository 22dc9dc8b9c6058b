//! Fixed points and linear stability on a fixed-trace slice.
//!
//! Channels whose slice dynamics are affine (linear channels and
//! pseudo-linear NINO channels) are solved directly by rank analysis of
//! `A r = -C`. Other nonlinear channels are searched with damped Newton
//! iterations from a seed grid, and converged points whose Jacobian is rank
//! deficient are probed for fixed lines and planes.

use nalgebra::{Matrix3, Matrix4x3, Vector3, Vector4, SVD};
use num_complex::Complex64;

use crate::channel::{assemble, AffineGenerator, ChannelSpec};

pub const RESIDUAL_TOL: f64 = 1e-10;
const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 100;
const RANK_TOL: f64 = 1e-10;
const DEDUP_TOL: f64 = 1e-6;
const SEED_RADIUS: f64 = 1.2;
const SEEDS_PER_AXIS: usize = 5;
// eigenvalues of nonsymmetric matrices near degeneracy are only this accurate
const CRITICAL_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Unstable,
    Marginal,
}

impl Stability {
    pub fn name(self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::Marginal => "marginal",
        }
    }

    pub fn from_eigenvalues(eigs: &[Complex64], tol: f64) -> Self {
        let max_re = eigs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        if max_re > tol {
            Stability::Unstable
        } else if max_re < -tol {
            Stability::Stable
        } else {
            Stability::Marginal
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FixedPoint {
    pub r: Vector3<f64>,
    pub eigenvalues: [Complex64; 3],
    pub stability: Stability,
    pub residual: f64,
    pub in_cone: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FixedLine {
    pub direction: Vector3<f64>,
    /// Point of the line closest to the origin.
    pub point: Vector3<f64>,
    pub eigenvalues: [Complex64; 3],
    /// Always true: the direction along the line carries a zero eigenvalue.
    pub marginal: bool,
    /// Stability of the directions transverse to the line.
    pub transverse: Stability,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FixedPlane {
    pub normal: Vector3<f64>,
    pub point: Vector3<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FixedPointReport {
    pub points: Vec<FixedPoint>,
    pub fixed_lines: Vec<FixedLine>,
    pub fixed_planes: Vec<FixedPlane>,
    /// Every state of the slice is stationary.
    pub everywhere_fixed: bool,
    /// The analysis holds on the `tau = 1` plane only (nonlinear channels).
    pub restricted_to_unit_plane: bool,
}

pub fn eigenvalues(m: &Matrix3<f64>) -> [Complex64; 3] {
    let e = m.complex_eigenvalues();
    let mut out = [e[0], e[1], e[2]];
    out.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    out
}

fn stability_tol(m: &Matrix3<f64>) -> f64 {
    RANK_TOL * 1f64.max(m.amax())
}

fn slice_velocity(gen: &AffineGenerator, r: &Vector3<f64>) -> Vector3<f64> {
    gen.velocity(1.0, r).0
}

fn make_point(gen: &AffineGenerator, r: Vector3<f64>) -> FixedPoint {
    let jac = gen.jacobian(1.0, &r);
    let eigs = eigenvalues(&jac);
    FixedPoint {
        r,
        eigenvalues: eigs,
        stability: Stability::from_eigenvalues(&eigs, stability_tol(&jac)),
        residual: slice_velocity(gen, &r).norm(),
        in_cone: r.norm() <= 1.0 + 1e-9,
    }
}

fn make_line(gen: &AffineGenerator, through: Vector3<f64>, direction: Vector3<f64>) -> FixedLine {
    let d = direction.normalize();
    let point = through - d * d.dot(&through);
    let jac = gen.jacobian(1.0, &point);
    let eigs = eigenvalues(&jac);
    let tol = stability_tol(&jac);
    // drop the eigenvalue belonging to the line direction
    let along = jac * d;
    let mut rest: Vec<Complex64> = eigs.to_vec();
    if along.norm() <= tol {
        if let Some(i) = rest
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .map(|(i, _)| i)
        {
            rest.remove(i);
        }
    }
    FixedLine {
        direction: d,
        point,
        eigenvalues: eigs,
        marginal: true,
        transverse: Stability::from_eigenvalues(&rest, tol),
    }
}

fn plane_through(through: Vector3<f64>, normal: Vector3<f64>) -> FixedPlane {
    let n = normal.normalize();
    FixedPlane {
        normal: n,
        point: n * n.dot(&through),
    }
}

/// Rank analysis of `A r = -C` for affine slice dynamics.
fn affine_fixed_set(gen: &AffineGenerator, a: Matrix3<f64>, c: Vector3<f64>, report: &mut FixedPointReport) {
    let svd = SVD::new(a, true, true);
    let v_t = svd.v_t.expect("SVD computed with V");
    let sigma_max = svd.singular_values.max();
    let tol = RANK_TOL * 1f64.max(sigma_max);
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    let particular = svd.solve(&(-c), tol).expect("SVD computed with U and V");
    if (a * particular + c).norm() > RESIDUAL_TOL * 1f64.max(c.norm()) {
        // inconsistent system: no stationary state on this slice
        return;
    }
    // singular values are sorted in decreasing order
    let row = |i: usize| -> Vector3<f64> { v_t.row(i).transpose() };
    match rank {
        3 => report.points.push(make_point(gen, particular)),
        2 => report.fixed_lines.push(make_line(gen, particular, row(2))),
        1 => report.fixed_planes.push(plane_through(particular, row(0))),
        _ => report.everywhere_fixed = true,
    }
}

fn solve_newton(gen: &AffineGenerator, seed: Vector3<f64>) -> Option<Vector3<f64>> {
    let mut r = seed;
    let mut f = slice_velocity(gen, &r);
    for _ in 0..NEWTON_MAX_ITER {
        if f.norm() <= NEWTON_TOL {
            return Some(r);
        }
        let jac = gen.jacobian(1.0, &r);
        let step = SVD::new(jac, true, true).solve(&(-f), 1e-14).ok()?;
        let mut damping = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial = r + step * damping;
            let ft = slice_velocity(gen, &trial);
            if ft.norm() < f.norm() {
                r = trial;
                f = ft;
                accepted = true;
                break;
            }
            damping *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (f.norm() <= NEWTON_TOL).then_some(r)
}

fn seeds() -> Vec<Vector3<f64>> {
    let axis: Vec<f64> = (0..SEEDS_PER_AXIS)
        .map(|i| -SEED_RADIUS + 2.0 * SEED_RADIUS * i as f64 / (SEEDS_PER_AXIS - 1) as f64)
        .collect();
    let mut out = Vec::new();
    for &x in &axis {
        for &y in &axis {
            for &z in &axis {
                let v = Vector3::new(x, y, z);
                if v.norm() <= SEED_RADIUS + 1e-12 {
                    out.push(v);
                }
            }
        }
    }
    out
}

fn is_stationary(gen: &AffineGenerator, r: &Vector3<f64>) -> bool {
    slice_velocity(gen, r).norm() <= RESIDUAL_TOL
}

fn manifold_holds(gen: &AffineGenerator, p: &Vector3<f64>, basis: &[Vector3<f64>]) -> bool {
    let offsets = [-0.3, -0.1, 0.1, 0.3];
    let singles = basis
        .iter()
        .all(|v| offsets.iter().all(|&s| is_stationary(gen, &(p + v * s))));
    let combined: Vector3<f64> = basis.iter().sum();
    singles && offsets.iter().all(|&s| is_stationary(gen, &(p + combined * s)))
}

fn on_line(line: &FixedLine, r: &Vector3<f64>) -> bool {
    let rel = r - line.point;
    (rel - line.direction * line.direction.dot(&rel)).norm() <= DEDUP_TOL
}

fn on_plane(plane: &FixedPlane, r: &Vector3<f64>) -> bool {
    (plane.normal.dot(r) - plane.normal.dot(&plane.point)).abs() <= DEDUP_TOL
}

/// Extended fixed sets of `A r + c + g (w0 + w.r) r = 0`.
///
/// With `s = w.r` the system is linear in `r`; lines and planes can only
/// occur where `A + g (w0 + s) I` is singular, i.e. at `s = -lambda/g - w0`
/// for a real eigenvalue `lambda` of `A`. Each candidate set is confirmed by
/// sampling the velocity field along it.
fn critical_fixed_sets(gen: &AffineGenerator, report: &mut FixedPointReport) {
    let a = gen.g_total + 2.0 * gen.h.cross_matrix();
    let (w0, w) = (gen.omega.ell[0], gen.omega.sigma_part());
    let scale = 1f64.max(a.amax());
    let mut critical: Vec<f64> = Vec::new();
    for lambda in eigenvalues(&a) {
        if lambda.im.abs() > CRITICAL_TOL * scale {
            continue;
        }
        let s = -lambda.re / gen.g - w0;
        if !critical.iter().any(|c| (c - s).abs() <= CRITICAL_TOL * scale) {
            critical.push(s);
        }
    }
    for s in critical {
        let mut k = Matrix4x3::zeros();
        k.fixed_view_mut::<3, 3>(0, 0)
            .copy_from(&(a + Matrix3::identity() * (gen.g * (w0 + s))));
        k.fixed_view_mut::<1, 3>(3, 0).copy_from(&w.transpose());
        let b = Vector4::new(-gen.c_total.x, -gen.c_total.y, -gen.c_total.z, s);
        let svd = SVD::new(k, true, true);
        let tol = CRITICAL_TOL * 1f64.max(svd.singular_values.max());
        let Ok(particular) = svd.solve(&b, tol) else { continue };
        if (k * particular - b).norm() > CRITICAL_TOL * 1f64.max(b.norm()) {
            continue;
        }
        let v_t = svd.v_t.expect("SVD computed with V");
        let null: Vec<Vector3<f64>> = (0..3)
            .filter(|&i| svd.singular_values[i] <= tol)
            .map(|i| v_t.row(i).transpose())
            .collect();
        if null.is_empty() || !manifold_holds(gen, &particular, &null) {
            continue;
        }
        if null.len() == 1 {
            if !report.fixed_lines.iter().any(|l| on_line(l, &particular)) {
                report.fixed_lines.push(make_line(gen, particular, null[0]));
            }
        } else {
            let normal = null[0].cross(&null[1]);
            if !report.fixed_planes.iter().any(|p| on_plane(p, &particular)) {
                report.fixed_planes.push(plane_through(particular, normal));
            }
        }
    }
}

fn newton_fixed_set(gen: &AffineGenerator, report: &mut FixedPointReport) {
    let roots: Vec<Vector3<f64>> = seeds().into_iter().filter_map(|s| solve_newton(gen, s)).collect();

    critical_fixed_sets(gen, report);
    report.fixed_lines.retain(|l| !report.fixed_planes.iter().any(|p| on_plane(p, &l.point)
        && p.normal.dot(&l.direction).abs() <= DEDUP_TOL));

    // pass 2: isolated points not already covered
    for r in roots {
        let covered = report.everywhere_fixed
            || report.fixed_planes.iter().any(|p| on_plane(p, &r))
            || report.fixed_lines.iter().any(|l| on_line(l, &r))
            || report.points.iter().any(|p| (p.r - r).norm() <= DEDUP_TOL);
        if !covered {
            report.points.push(make_point(gen, r));
        }
    }
    report
        .points
        .sort_by(|a, b| b.r.x.total_cmp(&a.r.x).then(b.r.y.total_cmp(&a.r.y)).then(b.r.z.total_cmp(&a.r.z)));
}

/// Stationary states on the `tau = 1` slice.
///
/// For linear channels the slice result scales to any trace; for nonlinear
/// channels it is specific to the trace-conserving plane.
pub fn find_fixed_points(spec: &ChannelSpec) -> FixedPointReport {
    let gen = assemble(spec);
    let mut report = FixedPointReport {
        restricted_to_unit_plane: spec.g != 0.0,
        ..Default::default()
    };
    match gen.slice_matrix(1.0) {
        Some(a) => affine_fixed_set(&gen, a, gen.c_total, &mut report),
        None => newton_fixed_set(&gen, &mut report),
    }
    report
}
