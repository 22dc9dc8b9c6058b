//! Time evolution of `(tau, r)` under a channel's Pauli-basis equation of motion.

pub mod ode;

use std::io::Write;

use nalgebra::Vector3;

use crate::channel::{assemble, AffineGenerator, ChannelSpec};
use crate::error::{Error, Result};
use crate::pauli::{PsdState, APEX_CUTOFF};
use ode::{Scheme, StepStats, Stepper, Vector};

pub use ode::StepStats as IntegratorStats;

/// Largest `|r|/tau` tolerated before a run is stopped as a cone violation.
pub const CONE_SLACK: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Method {
    Rk4Fixed { dt: f64 },
    Rk45Adaptive { rtol: f64, atol: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorOpts {
    pub method: Method,
    pub allow_off_cone: bool,
    pub max_steps: usize,
}

impl Default for IntegratorOpts {
    fn default() -> Self {
        Self {
            method: Method::Rk45Adaptive {
                rtol: 1e-10,
                atol: 1e-12,
            },
            allow_off_cone: false,
            max_steps: 1_000_000,
        }
    }
}

impl IntegratorOpts {
    pub fn rk4(dt: f64) -> Self {
        Self {
            method: Method::Rk4Fixed { dt },
            ..Self::default()
        }
    }

    pub fn off_cone(mut self) -> Self {
        self.allow_off_cone = true;
        self
    }

    fn scheme(&self) -> Scheme {
        match self.method {
            Method::Rk4Fixed { dt } => Scheme::Rk4 { dt },
            Method::Rk45Adaptive { rtol, atol } => Scheme::Dopri5 { rtol, atol },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Monitors {
    pub purity: f64,
    pub entropy: f64,
    pub tr_x_omega: f64,
    pub cone_margin: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub state: PsdState,
    pub monitors: Monitors,
}

impl Sample {
    fn new(gen: &AffineGenerator, t: f64, state: PsdState) -> Self {
        let (purity, entropy) = state.purity_entropy();
        Self {
            t,
            state,
            monitors: Monitors {
                purity,
                entropy,
                tr_x_omega: gen.tr_x_omega(state.tau(), &state.r()),
                cone_margin: state.cone_margin(),
            },
        }
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub spec: ChannelSpec,
    pub stats: StepStats,
}

pub const CSV_HEADER: &str = "t,tau,x,y,z,purity,entropy,trXOmega,coneMargin";

impl Trajectory {
    pub fn final_sample(&self) -> &Sample {
        self.samples.last().expect("trajectory has an initial sample")
    }

    pub fn final_state(&self) -> PsdState {
        self.final_sample().state
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for s in &self.samples {
            let r = s.state.r();
            let m = &s.monitors;
            let row = [s.t, s.state.tau(), r.x, r.y, r.z, m.purity, m.entropy, m.tr_x_omega, m.cone_margin];
            let cells: Vec<String> = row.iter().map(|v| fmt_sig17(*v)).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }

    /// Uniformly resample onto `n + 1` points by cubic Hermite interpolation
    /// between recorded steps, using the channel velocity as the slope.
    pub fn resample(&self, n: usize) -> Trajectory {
        let gen = assemble(&self.spec);
        let (t0, t1) = (self.samples[0].t, self.final_sample().t);
        let n = n.max(1);
        let mut out = Vec::with_capacity(n + 1);
        let mut seg = 0;
        for i in 0..=n {
            let t = if i == n { t1 } else { t0 + (t1 - t0) * i as f64 / n as f64 };
            while seg + 2 < self.samples.len() && self.samples[seg + 1].t < t {
                seg += 1;
            }
            let state = if self.samples.len() == 1 {
                self.samples[0].state
            } else {
                hermite(&gen, &self.samples[seg], &self.samples[seg + 1], t)
            };
            out.push(Sample::new(&gen, t, state));
        }
        Trajectory {
            samples: out,
            spec: self.spec.clone(),
            stats: self.stats,
        }
    }
}

/// Format with 17 significant digits.
pub fn fmt_sig17(v: f64) -> String {
    format!("{v:.16e}")
}

fn pack(state: &PsdState) -> Vector<4> {
    let r = state.r();
    Vector::<4>::new(state.tau(), r.x, r.y, r.z)
}

fn unpack(y: &Vector<4>) -> PsdState {
    PsdState::raw(y[0], Vector3::new(y[1], y[2], y[3]))
}

fn hermite(gen: &AffineGenerator, a: &Sample, b: &Sample, t: f64) -> PsdState {
    let h = b.t - a.t;
    if h <= 0.0 {
        return a.state;
    }
    let s = ((t - a.t) / h).clamp(0.0, 1.0);
    let (ya, yb) = (pack(&a.state), pack(&b.state));
    let field = |st: &PsdState| {
        let (dr, dtau) = gen.velocity(st.tau(), &st.r());
        Vector::<4>::new(dtau, dr.x, dr.y, dr.z)
    };
    let (fa, fb) = (field(&a.state), field(&b.state));
    let h00 = 2.0 * s.powi(3) - 3.0 * s * s + 1.0;
    let h10 = s.powi(3) - 2.0 * s * s + s;
    let h01 = -2.0 * s.powi(3) + 3.0 * s * s;
    let h11 = s.powi(3) - s * s;
    unpack(&(ya * h00 + fa * (h10 * h) + yb * h01 + fb * (h11 * h)))
}

/// `(dr/dt, dtau/dt)`; defined off the cone as well.
pub fn rhs(spec: &ChannelSpec, state: &PsdState) -> (Vector3<f64>, f64) {
    assemble(spec).velocity(state.tau(), &state.r())
}

fn field(gen: &AffineGenerator) -> impl FnMut(f64, &Vector<4>) -> Vector<4> + '_ {
    move |_, y| {
        let r = Vector3::new(y[1], y[2], y[3]);
        let (dr, dtau) = gen.velocity(y[0], &r);
        Vector::<4>::new(dtau, dr.x, dr.y, dr.z)
    }
}

fn check_state(t: f64, state: &PsdState, opts: &IntegratorOpts) -> Result<()> {
    if state.tau() < APEX_CUTOFF {
        return Err(Error::ApexReached { t, tau: state.tau() });
    }
    let ratio = state.r().norm() / state.tau();
    if !opts.allow_off_cone && ratio > 1.0 + CONE_SLACK {
        return Err(Error::ConeViolation { t, ratio });
    }
    Ok(())
}

fn validate_span(t_end: f64) -> Result<()> {
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::InvalidParams(format!("t_end must be positive, got {t_end}")));
    }
    Ok(())
}

pub fn integrate(spec: &ChannelSpec, initial: PsdState, t_end: f64, opts: &IntegratorOpts) -> Result<Trajectory> {
    integrate_until(spec, initial, t_end, opts, |_| -1.0).map(|(traj, _)| traj)
}

/// Integrate until `t_max`, or until `event` first crosses from negative to
/// non-negative. The crossing time is located to near machine precision by
/// bisection on single steps from the last accepted point.
pub fn integrate_until<E>(
    spec: &ChannelSpec,
    initial: PsdState,
    t_max: f64,
    opts: &IntegratorOpts,
    event: E,
) -> Result<(Trajectory, Option<f64>)>
where
    E: Fn(&PsdState) -> f64,
{
    validate_span(t_max)?;
    check_state(0.0, &initial, opts)?;
    let gen = assemble(spec);
    let mut stepper = Stepper::new(field(&gen), opts.scheme(), 0.0, pack(&initial), t_max, opts.max_steps)?;
    let mut samples = vec![Sample::new(&gen, 0.0, initial)];
    let mut hit = None;
    if event(&initial) >= 0.0 {
        hit = Some(0.0);
    }
    while hit.is_none() && stepper.t() < t_max {
        let (t_prev, y_prev) = (stepper.t(), *stepper.y());
        stepper.advance(t_max)?;
        let state = unpack(stepper.y());
        // the event is resolved first: a step may overshoot the cone past the crossing
        if event(&state) >= 0.0 {
            let t_hit = locate_root(&gen, opts, t_prev, &y_prev, stepper.t(), &event);
            let at_hit = unpack(&single_step(&gen, opts, t_prev, &y_prev, t_hit - t_prev));
            check_state(t_hit, &at_hit, opts)?;
            samples.push(Sample::new(&gen, t_hit, at_hit));
            hit = Some(t_hit);
        } else {
            check_state(stepper.t(), &state, opts)?;
            samples.push(Sample::new(&gen, stepper.t(), state));
        }
    }
    Ok((
        Trajectory {
            samples,
            spec: spec.clone(),
            stats: stepper.stats(),
        },
        hit,
    ))
}

fn single_step(gen: &AffineGenerator, opts: &IntegratorOpts, t: f64, y: &Vector<4>, h: f64) -> Vector<4> {
    if h <= 0.0 {
        return *y;
    }
    let mut f = field(gen);
    match opts.scheme() {
        Scheme::Rk4 { .. } => ode::rk4_step(&mut f, t, y, h),
        Scheme::Dopri5 { .. } => {
            let k1 = f(t, y);
            ode::dopri5_step(&mut f, t, y, h, &k1).0
        }
    }
}

fn locate_root<E>(gen: &AffineGenerator, opts: &IntegratorOpts, t0: f64, y0: &Vector<4>, t1: f64, event: &E) -> f64
where
    E: Fn(&PsdState) -> f64,
{
    let (mut lo, mut hi) = (0.0, t1 - t0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if event(&unpack(&single_step(gen, opts, t0, y0, mid))) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    t0 + hi
}

/// States at the requested (increasing, positive) times, integrating segment by segment.
pub fn states_at(spec: &ChannelSpec, initial: PsdState, times: &[f64], opts: &IntegratorOpts) -> Result<Vec<PsdState>> {
    let mut out = Vec::with_capacity(times.len());
    let (mut t, mut state) = (0.0, initial);
    for &target in times {
        if target < t {
            return Err(Error::InvalidParams("output times must be nondecreasing".into()));
        }
        if target > t {
            state = integrate(spec, state, target - t, opts)?.final_state();
            t = target;
        }
        out.push(state);
    }
    Ok(out)
}

/// Rotated coordinates `xi+- = (y +- x)/2`.
pub fn xi_coordinates(state: &PsdState) -> (f64, f64) {
    let r = state.r();
    (0.5 * (r.y + r.x), 0.5 * (r.y - r.x))
}

/// Inverse of [`xi_coordinates`] in the `xy` plane: returns `(x, y)`.
pub fn from_xi_coordinates(xi_plus: f64, xi_minus: f64) -> (f64, f64) {
    (xi_plus - xi_minus, xi_plus + xi_minus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalogue::Preset;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn bloch(x: f64, y: f64, z: f64) -> PsdState {
        PsdState::bloch(Vector3::new(x, y, z))
    }

    #[test]
    fn rhs_examples() {
        let cptp = Preset::LinearCptp { m: 1.0 }.expand().unwrap();
        let (dr, dtau) = rhs(&cptp, &PsdState::maximally_mixed());
        assert!((dr - Vector3::new(4.0, 0.0, 0.0)).amax() < 1e-14);
        assert_eq!(dtau, 0.0);

        let one = Preset::OneJumpNino { m: 1.0 }.expand().unwrap();
        for x in [-0.5, 0.0, 0.3, 0.9] {
            let (dr, _) = rhs(&one, &bloch(x, 0.0, 0.0));
            assert_relative_eq!(dr.x, 2.0 * (x - 1.0).powi(2), epsilon = 1e-14);
        }

        let three = Preset::ThreeJumpNino { big_m: 1.0, gamma: 0.5 }.expand().unwrap();
        for z in [-0.7, 0.2, 1.0] {
            let (dr, _) = rhs(&three, &bloch(0.0, 0.0, z));
            assert_relative_eq!(dr.z, -2.0 * z, epsilon = 1e-14);
        }
    }

    #[test]
    fn linear_cptp_closed_form() {
        let spec = Preset::LinearCptp { m: 0.5 }.expand().unwrap();
        let traj = integrate(&spec, PsdState::maximally_mixed(), 1.0, &IntegratorOpts::default()).unwrap();
        let end = traj.final_state();
        assert_relative_eq!(end.r().x, 1.0 - (-1.0f64).exp(), max_relative = 1e-9);
        assert!(end.r().y.abs() <= 1e-12 && end.r().z.abs() <= 1e-12);
        assert_relative_eq!(end.r().x, 0.632_12, epsilon = 1e-5);
    }

    #[test]
    fn fixed_point_is_stationary() {
        let spec = Preset::LinearCptp { m: 1.0 }.expand().unwrap();
        let fp = bloch(1.0, 0.0, 0.0);
        let traj = integrate(&spec, fp, 7.0, &IntegratorOpts::default()).unwrap();
        assert!((traj.final_state().r() - fp.r()).amax() < 1e-9);
    }

    #[test]
    fn three_jump_xi_solution() {
        // Oracle: x,y decouple into xi+ (rate M - Gamma) and xi- (rate -(M + Gamma)).
        let (big_m, gamma, eps, t) = (1.0, 0.5, 1e-3, 10.0);
        let spec = Preset::ThreeJumpNino { big_m, gamma }.expand().unwrap();
        let traj = integrate(&spec, bloch(eps, 0.0, 0.0), t, &IntegratorOpts::default()).unwrap();
        let (grow, decay) = (((big_m - gamma) * t).exp(), (-(big_m + gamma) * t).exp());
        let end = traj.final_state().r();
        assert_relative_eq!(end.x, eps / 2.0 * (grow + decay), max_relative = 1e-9);
        assert_relative_eq!(end.y, eps / 2.0 * (grow - decay), max_relative = 1e-9);
        assert!(end.z.abs() <= 1e-15);
    }

    #[test]
    fn degenerate_generator_gives_constant_run() {
        let spec = ChannelSpec::new(Default::default(), vec![], 0.0).unwrap();
        let s = bloch(0.1, -0.2, 0.3);
        let traj = integrate(&spec, s, 10.0, &IntegratorOpts::default()).unwrap();
        assert!(traj.samples.iter().all(|x| x.state == s));
        assert_eq!(traj.final_sample().t, 10.0);
    }

    #[test]
    fn samples_strictly_increase() {
        let spec = Preset::OneJumpNino { m: 1.0 }.expand().unwrap();
        let traj = integrate(&spec, PsdState::maximally_mixed(), 5.0, &IntegratorOpts::default()).unwrap();
        assert!(traj.samples.windows(2).all(|w| w[1].t > w[0].t));
        assert!(traj.samples.iter().all(|s| s.monitors.cone_margin >= -1e-6));
    }

    #[test]
    fn off_cone_instability_needs_opt_in() {
        // x > 1 off the cone: dx/dt = 2 (x-1)^2 diverges in finite time
        let spec = Preset::OneJumpNino { m: 1.0 }.expand().unwrap();
        let start = bloch(1.1, 0.0, 0.0);
        assert!(matches!(
            integrate(&spec, start, 1.0, &IntegratorOpts::default()),
            Err(Error::ConeViolation { .. })
        ));
        let traj = integrate(&spec, start, 4.0, &IntegratorOpts::default().off_cone()).unwrap();
        // x(t) = 1 + 1/(1/(x0-1) - 2t) with blow-up at t = 5
        assert_relative_eq!(traj.final_state().r().x, 1.0 + 1.0 / (10.0 - 8.0), max_relative = 1e-8);
        assert!(integrate(&spec, start, 6.0, &IntegratorOpts::default().off_cone()).is_err());
    }

    #[test]
    fn apex_is_reported() {
        // L+ = -I with no jumps and g = 0 gives dtau/dt = -2 tau
        let spec = ChannelSpec::new(crate::pauli::HermitianPauliVector::identity(-1.0), vec![], 0.0).unwrap();
        let err = integrate(&spec, PsdState::maximally_mixed(), 20.0, &IntegratorOpts::default()).unwrap_err();
        assert!(matches!(err, Error::ApexReached { .. }), "{err}");
    }

    #[test]
    fn event_location() {
        let spec = Preset::LinearCptp { m: 1.0 }.expand().unwrap();
        let (traj, hit) = integrate_until(&spec, PsdState::maximally_mixed(), 10.0, &IntegratorOpts::default(), |s| {
            s.r().norm() - 0.99
        })
        .unwrap();
        let t = hit.unwrap();
        assert_relative_eq!(t, -(0.01f64).ln() / 4.0, max_relative = 1e-9);
        assert_relative_eq!(traj.final_state().r().x, 0.99, max_relative = 1e-9);
    }

    #[test]
    fn rk4_convergence() {
        let spec = Preset::LinearCptp { m: 1.0 }.expand().unwrap();
        let exact = 1.0 - (-4.0f64).exp();
        let err = |dt: f64| {
            let s = integrate(&spec, PsdState::maximally_mixed(), 1.0, &IntegratorOpts::rk4(dt)).unwrap();
            (s.final_state().r().x - exact).abs()
        };
        let (e1, e2) = (err(0.05), err(0.025));
        assert!(e1 / e2 >= 12.0, "ratio {}", e1 / e2);
    }

    #[test]
    fn xi_examples() {
        assert_eq!(xi_coordinates(&bloch(0.2, 0.0, 0.0)), (0.1, -0.1));
        let (p, m) = xi_coordinates(&bloch(FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0));
        assert_relative_eq!(p, FRAC_1_SQRT_2);
        assert_eq!(m, 0.0);
        assert_eq!(xi_coordinates(&PsdState::maximally_mixed()), (0.0, 0.0));
        let (x, y) = from_xi_coordinates(0.3, -0.1);
        assert_relative_eq!(x, 0.4);
        assert_relative_eq!(y, 0.2);
    }

    #[test]
    fn csv_layout() {
        let spec = Preset::LinearCptp { m: 1.0 }.expand().unwrap();
        let traj = integrate(&spec, PsdState::maximally_mixed(), 0.5, &IntegratorOpts::default()).unwrap();
        let csv = traj.to_csv_string();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first.len(), 9);
        assert_eq!(first[1], "1.0000000000000000e0");
        assert_eq!(csv.lines().count(), traj.samples.len() + 1);
    }

    #[test]
    fn resampling_matches_closed_form() {
        let spec = Preset::LinearCptp { m: 1.0 }.expand().unwrap();
        let traj = integrate(&spec, PsdState::maximally_mixed(), 2.0, &IntegratorOpts::default()).unwrap();
        let even = traj.resample(40);
        assert_eq!(even.samples.len(), 41);
        for s in &even.samples {
            let exact = 1.0 - (-4.0 * s.t).exp();
            assert!((s.state.r().x - exact).abs() < 1e-5, "t = {}", s.t);
        }
    }
}
