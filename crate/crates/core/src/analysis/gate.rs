//! Scheduling of Bloch vector amplification gates.
//!
//! Every gate starts from the maximally mixed state. Gates built on an
//! unstable fixed point at the origin (three-jump NINO and its linear
//! non-CP dual) cannot leave the origin by themselves, so they are preceded
//! by a short linear CPTP stage that pre-amplifies to `|r| = epsilon`, by
//! default along the unstable direction `(1,1,0)/sqrt2`.

use std::f64::consts::FRAC_PI_4;

use nalgebra::{Rotation3, Vector3};

use crate::catalogue::Preset;
use crate::channel::{rotate_spec, ChannelSpec};
use crate::dynamics::{integrate, integrate_until, xi_coordinates, IntegratorOpts, Trajectory};
use crate::error::{Error, Result};
use crate::pauli::PsdState;

/// Achieved purity must match the requested one to this tolerance.
pub const PURITY_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GateKind {
    LinearCptp { m: f64 },
    OneJump { m: f64 },
    ThreeJump { big_m: f64, gamma: f64 },
    LinearNonCp { big_m: f64, gamma: f64 },
}

impl GateKind {
    pub fn preset(&self) -> Preset {
        match *self {
            GateKind::LinearCptp { m } => Preset::LinearCptp { m },
            GateKind::OneJump { m } => Preset::OneJumpNino { m },
            GateKind::ThreeJump { big_m, gamma } => Preset::ThreeJumpNino { big_m, gamma },
            GateKind::LinearNonCp { big_m, gamma } => Preset::LinearNonCp { big_m, gamma },
        }
    }

    pub fn from_preset(p: &Preset) -> Result<Self> {
        match *p {
            Preset::LinearCptp { m } => Ok(GateKind::LinearCptp { m }),
            Preset::OneJumpNino { m } => Ok(GateKind::OneJump { m }),
            Preset::ThreeJumpNino { big_m, gamma } => Ok(GateKind::ThreeJump { big_m, gamma }),
            Preset::LinearNonCp { big_m, gamma } => Ok(GateKind::LinearNonCp { big_m, gamma }),
            other => Err(Error::InvalidParams(format!(
                "{} is not an amplification gate",
                other.kind()
            ))),
        }
    }
}

/// Requested end point, as purity `tr(rho^2)` or Bloch length `|r|` (tau = 1).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Target {
    Purity(f64),
    Radius(f64),
}

impl Target {
    pub fn radius(&self) -> f64 {
        match *self {
            Target::Radius(r) => r,
            Target::Purity(p) => (2.0 * p - 1.0).max(0.0).sqrt(),
        }
    }

    pub fn purity(&self) -> f64 {
        match *self {
            Target::Purity(p) => p,
            Target::Radius(r) => 0.5 * (1.0 + r * r),
        }
    }
}

/// Direction of the linear CPTP pre-amplification before an unstable-origin gate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PreAmpAxis {
    /// Along the growing mode `(1,1,0)/sqrt2`: the main stage is pure exponential growth.
    #[default]
    Diagonal,
    /// Along `x`, to `(epsilon, 0, 0)`: half the seed lies in the decaying mode, so
    /// purity dips briefly when `Gamma > 0`.
    X,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlanOptions {
    /// Bloch length reached by the pre-amplification stage.
    pub epsilon: f64,
    /// Jump strength of the linear CPTP pre-amplifier.
    pub pre_amp_m: f64,
    pub pre_amp_axis: PreAmpAxis,
    pub t_max: f64,
    pub integrator: IntegratorOpts,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            pre_amp_m: 1.0,
            pre_amp_axis: PreAmpAxis::Diagonal,
            t_max: 100.0,
            integrator: IntegratorOpts::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Stage {
    pub spec: ChannelSpec,
    pub duration: f64,
    pub trajectory: Trajectory,
}

impl Stage {
    pub fn initial(&self) -> PsdState {
        self.trajectory.samples[0].state
    }

    pub fn final_state(&self) -> PsdState {
        self.trajectory.final_state()
    }
}

#[derive(Clone, Debug)]
pub struct GatePlan {
    pub gate: GateKind,
    pub pre_amp: Option<Stage>,
    pub main: Stage,
    pub target_purity: f64,
    pub target_radius: f64,
    pub epsilon: Option<f64>,
    pub achieved: PsdState,
    /// Duration of the main stage.
    pub t_gate: f64,
    /// Fitted exponential growth rate of `xi+` over the main stage (unstable-origin gates).
    pub growth_rate: Option<f64>,
}

impl GatePlan {
    pub fn achieved_purity(&self) -> f64 {
        self.achieved.purity_entropy().0
    }

    /// Amplification direction of the gate.
    pub fn direction(&self) -> Vector3<f64> {
        match self.gate {
            GateKind::LinearCptp { .. } | GateKind::OneJump { .. } => Vector3::x(),
            GateKind::ThreeJump { .. } | GateKind::LinearNonCp { .. } => {
                Vector3::new(1.0, 1.0, 0.0).normalize()
            }
        }
    }
}

/// Least-squares slope of `ln |v|` against `t`.
pub fn fit_log_rate(points: impl IntoIterator<Item = (f64, f64)>) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .into_iter()
        .filter(|(_, v)| v.abs() > 0.0)
        .map(|(t, v)| (t, v.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let (mt, ml) = pts.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0 / n, acc.1 + p.1 / n));
    let (num, den) = pts.iter().fold((0.0, 0.0), |acc, p| {
        (acc.0 + (p.0 - mt) * (p.1 - ml), acc.1 + (p.0 - mt).powi(2))
    });
    (den > 0.0).then(|| num / den)
}

fn run_stage(spec: ChannelSpec, start: PsdState, duration: f64, opts: &IntegratorOpts) -> Result<Stage> {
    let trajectory = integrate(&spec, start, duration, opts)?;
    Ok(Stage { spec, duration, trajectory })
}

pub fn plan_amplification(gate: GateKind, target: Target, opts: &PlanOptions) -> Result<GatePlan> {
    let target_purity = target.purity();
    let radius = target.radius();
    if !(target_purity > 0.5 && target_purity < 1.0) {
        return Err(Error::InvalidParams(format!(
            "target purity must lie in (0.5, 1), got {target_purity}"
        )));
    }
    let spec = gate.preset().expand()?;
    let origin = PsdState::maximally_mixed();

    let (pre_amp, main, epsilon, growth_rate) = match gate {
        GateKind::LinearCptp { m } => {
            let t = -(1.0 - radius).ln() / (4.0 * m * m);
            (None, run_stage(spec, origin, t, &opts.integrator)?, None, None)
        }
        GateKind::OneJump { m } => {
            // x(t) = 1 - 1/(1 + 2 m^2 t) from x(0) = 0
            let t = (1.0 / (1.0 - radius) - 1.0) / (2.0 * m * m);
            if t > opts.t_max {
                return Err(Error::TargetUnreachable(format!(
                    "one-jump gate needs t = {t} > t_max = {} to reach |r| = {radius}",
                    opts.t_max
                )));
            }
            (None, run_stage(spec, origin, t, &opts.integrator)?, None, None)
        }
        GateKind::ThreeJump { big_m, gamma } | GateKind::LinearNonCp { big_m, gamma } => {
            if big_m <= gamma {
                return Err(Error::InvalidParams(format!(
                    "M > Gamma required for an unstable origin (M = {big_m}, Gamma = {gamma})"
                )));
            }
            let eps = opts.epsilon;
            if !(eps > 0.0 && eps < radius) {
                return Err(Error::InvalidParams(format!(
                    "pre-amplification epsilon must lie in (0, {radius}), got {eps}"
                )));
            }
            let along_x = Preset::LinearCptp { m: opts.pre_amp_m }.expand()?;
            let pre_spec = match opts.pre_amp_axis {
                PreAmpAxis::X => along_x,
                // linear CPTP gate turned from the x axis onto the xi+ axis
                PreAmpAxis::Diagonal => {
                    rotate_spec(&along_x, &Rotation3::from_axis_angle(&Vector3::z_axis(), FRAC_PI_4))
                }
            };
            let m2 = opts.pre_amp_m * opts.pre_amp_m;
            let t_pre = -(1.0 - eps).ln() / (4.0 * m2);
            let pre = run_stage(pre_spec, origin, t_pre, &opts.integrator)?;
            let (trajectory, hit) = integrate_until(&spec, pre.final_state(), opts.t_max, &opts.integrator, |s| {
                s.r().norm() - radius
            })?;
            let t_gate = hit.ok_or_else(|| {
                Error::TargetUnreachable(format!("|r| = {radius} not reached within t_max = {}", opts.t_max))
            })?;
            let rate = fit_log_rate(trajectory.samples.iter().map(|s| (s.t, xi_coordinates(&s.state).0)));
            let main = Stage {
                spec,
                duration: t_gate,
                trajectory,
            };
            (Some(pre), main, Some(eps), rate)
        }
    };

    let achieved = main.final_state();
    let plan = GatePlan {
        gate,
        t_gate: main.duration,
        pre_amp,
        main,
        target_purity,
        target_radius: radius,
        epsilon,
        achieved,
        growth_rate,
    };
    let miss = (plan.achieved_purity() - target_purity).abs();
    if miss > PURITY_TOL {
        return Err(Error::TargetUnreachable(format!(
            "validation run missed the target purity by {miss:e}"
        )));
    }
    Ok(plan)
}
