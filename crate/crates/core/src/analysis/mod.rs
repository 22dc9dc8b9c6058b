//! Fixed points, stability, slowdown exponents, Choi certification and gate planning.

pub mod choi;
pub mod fixed_points;
pub mod gate;

use nalgebra::{Rotation3, Unit, Vector3};
use serde_json::{json, Value};

use crate::channel::{velocity_at, ChannelSpec};
use crate::error::{Error, Result};
use crate::pauli::PsdState;

pub use choi::{choi_matrices, choi_matrix, choi_spectra, choi_spectrum, propagate, propagate_many};
pub use fixed_points::{eigenvalues, find_fixed_points, FixedLine, FixedPlane, FixedPoint, FixedPointReport, Stability};
pub use gate::{plan_amplification, GateKind, GatePlan, PlanOptions, PreAmpAxis, Stage, Target};

pub const SLOWDOWN_DELTA_MIN: f64 = 1e-5;
pub const SLOWDOWN_DELTA_MAX: f64 = 1e-2;
pub const SLOWDOWN_SAMPLES: usize = 20;
const NO_MOTION: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct SlowdownFit {
    /// Slope of `ln v` against `ln delta`.
    pub exponent: f64,
    /// True when the motion points away from the fixed point at every sample.
    pub outward: bool,
    pub deltas: Vec<f64>,
    pub speeds: Vec<f64>,
}

/// Power law `v ~ delta^p` of the speed near `fp`, approached from `fp - delta * dir` on `tau = 1`.
pub fn slowdown_exponent(spec: &ChannelSpec, fp: &Vector3<f64>, dir: &Vector3<f64>) -> Result<SlowdownFit> {
    let n = dir.norm();
    if !(n.is_finite() && n > 0.0) {
        return Err(Error::InvalidParams("approach direction must be nonzero".into()));
    }
    let dir = dir / n;
    let (lo, hi) = (SLOWDOWN_DELTA_MIN.ln(), SLOWDOWN_DELTA_MAX.ln());
    let deltas: Vec<f64> = (0..SLOWDOWN_SAMPLES)
        .map(|k| (lo + (hi - lo) * k as f64 / (SLOWDOWN_SAMPLES - 1) as f64).exp())
        .collect();
    let mut speeds = Vec::with_capacity(deltas.len());
    let mut outward = true;
    for &d in &deltas {
        let offset = -d * dir;
        let v = velocity_at(spec, &PsdState::new(1.0, fp + offset)?);
        outward &= v.dr.dot(&offset) > 0.0;
        speeds.push(v.norm());
    }
    if speeds.iter().all(|&v| v < NO_MOTION) {
        return Err(Error::NoMotion);
    }
    let pts: Vec<(f64, f64)> = deltas
        .iter()
        .zip(&speeds)
        .filter(|(_, &v)| v >= NO_MOTION)
        .map(|(&d, &v)| (d.ln(), v.ln()))
        .collect();
    let k = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0 / k, a.1 + p.1 / k));
    let (sxy, sxx) = pts
        .iter()
        .fold((0.0, 0.0), |a, p| (a.0 + (p.0 - mx) * (p.1 - my), a.1 + (p.0 - mx).powi(2)));
    if sxx == 0.0 {
        return Err(Error::NoMotion);
    }
    Ok(SlowdownFit {
        exponent: sxy / sxx,
        outward,
        deltas,
        speeds,
    })
}

/// Rotate the Bloch vector about `axis` by `angle` (right-handed), keeping `tau`.
pub fn rotate(state: &PsdState, axis: &Vector3<f64>, angle: f64) -> Result<PsdState> {
    if !(axis.norm() > 0.0) || !angle.is_finite() {
        return Err(Error::InvalidParams("rotation axis must be nonzero and angle finite".into()));
    }
    let rot = Rotation3::from_axis_angle(&Unit::new_normalize(*axis), angle);
    PsdState::new(state.tau(), rot * state.r())
}

fn vec_json(v: &Vector3<f64>) -> Value {
    json!([v.x, v.y, v.z])
}

fn eig_json(e: &[num_complex::Complex64]) -> Value {
    Value::Array(e.iter().map(|z| json!({ "re": z.re, "im": z.im })).collect())
}

pub fn fixed_points_json(report: &FixedPointReport) -> Value {
    json!({
        "points": report.points.iter().map(|p| json!({
            "r": vec_json(&p.r),
            "eigenvalues": eig_json(&p.eigenvalues),
            "stability": p.stability.name(),
            "residual": p.residual,
            "in_cone": p.in_cone,
        })).collect::<Vec<_>>(),
        "fixed_lines": report.fixed_lines.iter().map(|l| json!({
            "direction": vec_json(&l.direction),
            "point": vec_json(&l.point),
            "eigenvalues": eig_json(&l.eigenvalues),
            "marginal": l.marginal,
            "transverse": l.transverse.name(),
        })).collect::<Vec<_>>(),
        "fixed_planes": report.fixed_planes.iter().map(|p| json!({
            "normal": vec_json(&p.normal),
            "point": vec_json(&p.point),
        })).collect::<Vec<_>>(),
        "everywhere_fixed": report.everywhere_fixed,
        "restricted_to_unit_plane": report.restricted_to_unit_plane,
    })
}

pub fn slowdown_json(fit: &SlowdownFit) -> Value {
    json!({
        "exponent": fit.exponent,
        "outward": fit.outward,
        "deltas": fit.deltas,
        "speeds": fit.speeds,
    })
}

pub fn choi_json(t: f64, eig: &[f64; 4]) -> Value {
    json!({
        "t": t,
        "eigenvalues": eig,
        "min_eigenvalue": eig[0],
        "completely_positive": eig[0] >= -1e-10,
    })
}

fn state_json(s: &PsdState) -> Value {
    json!({ "tau": s.tau(), "r": vec_json(&s.r()) })
}

pub fn gate_plan_json(plan: &GatePlan) -> Value {
    let stage = |s: &Stage| {
        json!({
            "spec": serde_json::to_value(crate::catalogue::SpecFile::from_spec(&s.spec)).unwrap_or(Value::Null),
            "duration": s.duration,
            "final": state_json(&s.final_state()),
        })
    };
    json!({
        "gate": format!("{:?}", plan.gate),
        "target_purity": plan.target_purity,
        "target_radius": plan.target_radius,
        "epsilon": plan.epsilon,
        "pre_amp": plan.pre_amp.as_ref().map(stage),
        "main": stage(&plan.main),
        "t_gate": plan.t_gate,
        "growth_rate": plan.growth_rate,
        "achieved": state_json(&plan.achieved),
        "achieved_purity": plan.achieved_purity(),
    })
}
