//! Reference suite: oracle- and property-based checks of the whole model.
//!
//! Each criterion is a plain function returning a [`CriterionOutcome`]; the
//! CLI `verify` subcommand and the `acceptance` test target both run them.

use std::fmt;
use std::time::{Duration, Instant};

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::gate::fit_log_rate;
use crate::analysis::{
    choi_spectra, find_fixed_points, plan_amplification, slowdown_exponent, GateKind, PlanOptions, Stability, Target,
};
use crate::catalogue::{jump_b0, jump_b1, jump_b2, jump_b3, Preset, PresetKind};
use crate::channel::{assemble, initial_velocity, jump_generator, velocity_at, ChoiSign, JumpTerm};
use crate::dynamics::ode::{rk4_step, Vector};
use crate::dynamics::{from_xi_coordinates, integrate, states_at, xi_coordinates, IntegratorOpts, Method};
use crate::error::Result;
use crate::pauli::PsdState;

pub const DEFAULT_SEED: u64 = 0x5eed_b10c;

#[derive(Clone, Debug)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:>2} {:<34} {:>9.3}s  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}

/// Collects failed conditions and the worst observed errors.
#[derive(Default)]
struct Checker {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Checker {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    fn finish(self) -> (bool, String) {
        let passed = self.failures.is_empty();
        let mut parts = self.notes;
        if !passed {
            let shown: Vec<_> = self.failures.iter().take(4).cloned().collect();
            let more = self.failures.len().saturating_sub(shown.len());
            parts.push(format!("failed: {}", shown.join("; ")));
            if more > 0 {
                parts.push(format!("(+{more} more)"));
            }
        }
        (passed, parts.join(", "))
    }
}

fn run(id: u8, name: &'static str, budget: Option<Duration>, body: impl FnOnce(&mut Checker) -> Result<()>) -> CriterionOutcome {
    let start = Instant::now();
    let mut c = Checker::default();
    if let Err(e) = body(&mut c) {
        c.failures.push(format!("error: {e}"));
    }
    let elapsed = start.elapsed();
    if let Some(b) = budget {
        c.check(elapsed < b, || format!("runtime {:.3}s over budget {:.1}s", elapsed.as_secs_f64(), b.as_secs_f64()));
    }
    let (passed, detail) = c.finish();
    CriterionOutcome { id, name, passed, detail, elapsed }
}

fn tight() -> IntegratorOpts {
    IntegratorOpts {
        method: Method::Rk45Adaptive { rtol: 1e-12, atol: 1e-14 },
        ..IntegratorOpts::default()
    }
}

fn max_abs_diff(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    (a - b).amax()
}

/// Jump generators reproduce the reference rows for B0..B3 at m = 1.
pub fn criterion_1() -> CriterionOutcome {
    run(1, "jump generator table", Some(Duration::from_secs(1)), |c| {
        let pos = ChoiSign::Positive;
        let rows: [(JumpTerm, Matrix3<f64>, Vector3<f64>); 4] = [
            (jump_b0(1.0, pos), Matrix3::new(-2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0), Vector3::new(2.0, 0.0, 0.0)),
            (jump_b1(1.0, pos), Matrix3::new(0.0, 2.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0, -2.0), Vector3::zeros()),
            (jump_b2(1.0, pos), Matrix3::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 2.0), Vector3::new(0.0, 0.0, 2.0)),
            (jump_b3(1.0, pos), Matrix3::new(-1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0), Vector3::zeros()),
        ];
        let mut worst: f64 = 0.0;
        for (alpha, (jump, g_ref, c_ref)) in rows.iter().enumerate() {
            let (g, cv) = jump_generator(jump);
            let err = max_abs_diff(&g, g_ref).max((cv - c_ref).amax());
            worst = worst.max(err);
            c.check(err <= 1e-12, || format!("B{alpha} off by {err:e}"));
        }
        c.note(format!("max entry error {worst:.1e}"));
        Ok(())
    })
}

/// Linear CPTP gate against `x(t) = (1 - e^{-4 m^2 t}) tau`.
pub fn criterion_2() -> CriterionOutcome {
    run(2, "linear CPTP closed form", Some(Duration::from_secs(1)), |c| {
        let times = [0.1, 0.5, 1.0, 2.0, 5.0];
        let (mut worst_rel, mut worst_yz): (f64, f64) = (0.0, 0.0);
        for m in [0.5, 1.0] {
            let spec = Preset::LinearCptp { m }.expand()?;
            let states = states_at(&spec, PsdState::maximally_mixed(), &times, &IntegratorOpts::default())?;
            for (t, s) in times.iter().zip(&states) {
                let exact = 1.0 - (-4.0 * m * m * t).exp();
                let rel = (s.r().x - exact).abs() / exact;
                let yz = s.r().y.abs().max(s.r().z.abs());
                worst_rel = worst_rel.max(rel);
                worst_yz = worst_yz.max(yz);
                c.check(rel <= 1e-9, || format!("m={m} t={t}: rel error {rel:e}"));
                c.check(yz <= 1e-12, || format!("m={m} t={t}: |y|,|z| = {yz:e}"));
            }
        }
        c.note(format!("max rel error {worst_rel:.1e}, max |y|,|z| {worst_yz:.1e}"));
        Ok(())
    })
}

/// Closed form of `dx/dt = 2 m^2 (1 - x)^2`.
pub fn one_jump_x(m: f64, x0: f64, t: f64) -> f64 {
    1.0 - 1.0 / (1.0 / (1.0 - x0) + 2.0 * m * m * t)
}

/// Fixed-step RK4 on the scalar one-jump equation, independent of the channel machinery.
pub fn one_jump_x_brute_force(m: f64, x0: f64, t: f64, dt: f64) -> f64 {
    let mut f = |_: f64, y: &Vector<1>| Vector::<1>::new(2.0 * m * m * (1.0 - y[0]).powi(2));
    let n = (t / dt).ceil() as usize;
    let h = t / n as f64;
    let mut y = Vector::<1>::new(x0);
    for k in 0..n {
        y = rk4_step(&mut f, k as f64 * h, &y, h);
    }
    y[0]
}

/// One-jump NINO trajectories against the separable solution.
pub fn criterion_3() -> CriterionOutcome {
    run(3, "one-jump NINO closed form", None, |c| {
        let times = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0];
        let (mut worst, mut worst_brute): (f64, f64) = (0.0, 0.0);
        for m in [0.5, 1.0] {
            let spec = Preset::OneJumpNino { m }.expand()?;
            for x0 in [0.0, 0.3, -0.5] {
                let start = PsdState::bloch(Vector3::new(x0, 0.0, 0.0));
                let states = states_at(&spec, start, &times, &IntegratorOpts::default())?;
                for (&t, s) in times.iter().zip(&states) {
                    let exact = one_jump_x(m, x0, t);
                    let rel = (s.r().x - exact).abs() / exact.abs();
                    let brute = (one_jump_x_brute_force(m, x0, t, 1e-3) - exact).abs() / exact.abs();
                    worst = worst.max(rel);
                    worst_brute = worst_brute.max(brute);
                    c.check(rel <= 1e-8, || format!("m={m} x0={x0} t={t}: rel error {rel:e}"));
                    c.check(brute <= 1e-8, || format!("m={m} x0={x0} t={t}: closed form vs RK4 {brute:e}"));
                    c.check((s.tau() - 1.0).abs() <= 1e-10, || format!("m={m} x0={x0} t={t}: tau drift"));
                }
            }
        }
        c.note(format!("max rel error {worst:.1e}, closed form vs brute-force RK4 {worst_brute:.1e}"));
        Ok(())
    })
}

/// Critical-slowing-down exponents and the absence of terminal deceleration.
pub fn criterion_4() -> CriterionOutcome {
    run(4, "slowdown exponents", None, |c| {
        let x = Vector3::x();
        let lin = slowdown_exponent(&Preset::LinearCptp { m: 1.0 }.expand()?, &x, &x)?.exponent;
        let one = slowdown_exponent(&Preset::OneJumpNino { m: 1.0 }.expand()?, &x, &x)?.exponent;
        c.check((lin - 1.0).abs() <= 0.02, || format!("linear CPTP exponent {lin}"));
        c.check((one - 2.0).abs() <= 0.02, || format!("one-jump exponent {one}"));

        let (big_m, gamma, radius) = (1.0, 0.5, 0.99);
        let plan = plan_amplification(GateKind::ThreeJump { big_m, gamma }, Target::Radius(radius), &PlanOptions::default())?;
        let speed = velocity_at(&plan.main.spec, &plan.achieved).dr.norm();
        let floor = 0.5 * (big_m - gamma) * radius;
        c.check(speed >= floor, || format!("three-jump end speed {speed} < {floor}"));
        c.note(format!(
            "exponents {lin:.4} / {one:.4}, three-jump end speed {speed:.4} (floor {floor:.4})"
        ));
        Ok(())
    })
}

/// Initial states with tau = 1 shared by the duality comparisons.
fn duality_states() -> Vec<PsdState> {
    [
        (1e-3, 0.0, 0.0),
        (0.003, 0.001, 0.5),
        (-0.002, 0.001, -0.3),
        (0.3, -0.3, 0.2),
        (0.0, 0.0, 0.0),
        (-0.6, 0.59, -0.4),
    ]
    .into_iter()
    .map(|(x, y, z)| PsdState::bloch(Vector3::new(x, y, z)))
    .collect()
}

/// Three-jump NINO and its linear non-CP dual agree pointwise on tau = 1.
pub fn criterion_5() -> CriterionOutcome {
    run(5, "three-jump / non-CP duality", None, |c| {
        let times: Vec<f64> = (0..=100).map(|k| 0.1 * k as f64).collect();
        let mut worst: f64 = 0.0;
        for (big_m, gamma) in [(1.0, 0.5), (1.0, 0.0), (2.0, 1.0)] {
            let nino = Preset::ThreeJumpNino { big_m, gamma }.expand()?;
            let linear = Preset::LinearNonCp { big_m, gamma }.expand()?;
            for start in duality_states() {
                // the identity is algebraic, so runs may leave the cone along xi+
                let a = states_at(&nino, start, &times, &tight().off_cone())?;
                let b = states_at(&linear, start, &times, &tight().off_cone())?;
                for (sa, sb) in a.iter().zip(&b) {
                    let d = (sa.tau() - sb.tau()).abs().max((sa.r() - sb.r()).amax());
                    worst = worst.max(d);
                }
            }
        }
        c.check(worst <= 1e-9, || format!("max pointwise difference {worst:e}"));
        c.note(format!("max pointwise difference {worst:.1e}"));
        Ok(())
    })
}

/// Exponential rates of the rotated coordinates.
pub fn criterion_6() -> CriterionOutcome {
    run(6, "xi growth-rate law", None, |c| {
        let (x, y) = from_xi_coordinates(0.01, -0.5);
        let start = PsdState::bloch(Vector3::new(x, y, 0.0));
        let mut worst: f64 = 0.0;
        for (big_m, gamma) in [(1.0, 0.0), (1.0, 0.5), (2.0, 1.0)] {
            for preset in [Preset::ThreeJumpNino { big_m, gamma }, Preset::LinearNonCp { big_m, gamma }] {
                let traj = integrate(&preset.expand()?, start, 1.0, &IntegratorOpts::default())?;
                let xi: Vec<(f64, (f64, f64))> = traj.samples.iter().map(|s| (s.t, xi_coordinates(&s.state))).collect();
                let plus = fit_log_rate(xi.iter().map(|&(t, (p, _))| (t, p))).unwrap_or(f64::NAN);
                let minus = fit_log_rate(xi.iter().map(|&(t, (_, m))| (t, m))).unwrap_or(f64::NAN);
                let (want_plus, want_minus) = (big_m - gamma, -(big_m + gamma));
                let rel_plus = if want_plus == 0.0 { plus.abs() } else { (plus / want_plus - 1.0).abs() };
                let rel_minus = (minus / want_minus - 1.0).abs();
                worst = worst.max(rel_plus).max(rel_minus);
                let name = preset.kind();
                c.check(rel_plus <= 1e-6, || format!("{name} M={big_m} G={gamma}: xi+ rate {plus}"));
                c.check(rel_minus <= 1e-6, || format!("{name} M={big_m} G={gamma}: xi- rate {minus}"));
            }
        }
        c.note(format!("max rel rate error {worst:.1e}"));
        Ok(())
    })
}

/// Fixed points, stability labels, fixed line and origin stability of the three-jump model.
pub fn criterion_7() -> CriterionOutcome {
    run(7, "fixed-point structure", None, |c| {
        let mut worst_res: f64 = 0.0;
        let mut residuals = |rep: &crate::analysis::FixedPointReport| {
            for p in &rep.points {
                worst_res = worst_res.max(p.residual);
            }
        };

        let rep = find_fixed_points(&Preset::LinearCptp { m: 1.0 }.expand()?);
        residuals(&rep);
        let ok = rep.points.len() == 1
            && (rep.points[0].r - Vector3::x()).norm() <= 1e-10
            && rep.points[0].stability == Stability::Stable;
        c.check(ok, || format!("linear CPTP: {:?}", rep.points));

        let rep = find_fixed_points(&PresetKind::NoJumpNino.canonical().expand()?);
        residuals(&rep);
        let ok = rep.points.len() == 2
            && (rep.points[0].r - Vector3::x()).norm() <= 1e-9
            && rep.points[0].stability == Stability::Stable
            && (rep.points[1].r + Vector3::x()).norm() <= 1e-9
            && rep.points[1].stability == Stability::Unstable;
        c.check(ok, || format!("no-jump NINO: {:?}", rep.points));

        let rep = find_fixed_points(&Preset::ThreeJumpNino { big_m: 1.0, gamma: 1.0 }.expand()?);
        let ok = rep.points.is_empty()
            && rep.fixed_lines.len() == 1
            && {
                let d = rep.fixed_lines[0].direction;
                (d.x - d.y).abs() <= 1e-10 && d.z.abs() <= 1e-10 && rep.fixed_lines[0].point.norm() <= 1e-10
            };
        c.check(ok, || format!("M = Gamma: lines {:?}, points {:?}", rep.fixed_lines, rep.points));

        for (big_m, gamma) in [(1.0, 0.0), (1.0, 0.5), (2.0, 1.0), (1.0, 1.5), (1.0, 2.0), (0.5, 0.9)] {
            let rep = find_fixed_points(&Preset::ThreeJumpNino { big_m, gamma }.expand()?);
            residuals(&rep);
            let origin = rep.points.iter().find(|p| p.r.norm() <= 1e-10);
            let unstable = origin.map(|p| p.stability == Stability::Unstable);
            c.check(unstable == Some(big_m > gamma), || {
                format!("three-jump M={big_m} G={gamma}: origin {origin:?}")
            });
        }
        c.check(worst_res <= 1e-10, || format!("residual {worst_res:e}"));
        c.note(format!("max residual {worst_res:.1e}"));
        Ok(())
    })
}

/// Unital three-jump channel whose central state is nonetheless unstable.
pub fn criterion_8() -> CriterionOutcome {
    run(8, "unitality with unstable origin", None, |c| {
        let (mut worst_v, mut worst_eig): (f64, f64) = (0.0, 0.0);
        for (big_m, gamma) in [(1.0, 0.0), (1.0, 0.5), (2.0, 1.0), (1.5, 0.2)] {
            let spec = Preset::ThreeJumpNino { big_m, gamma }.expand()?;
            let v = initial_velocity(&spec).norm();
            let jac = assemble(&spec).jacobian(1.0, &Vector3::zeros());
            let max_re = crate::analysis::eigenvalues(&jac).iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
            let err = (max_re - (big_m - gamma)).abs();
            worst_v = worst_v.max(v);
            worst_eig = worst_eig.max(err);
            c.check(v <= 1e-12, || format!("M={big_m} G={gamma}: initial speed {v:e}"));
            c.check(err <= 1e-9, || format!("M={big_m} G={gamma}: max Re eig {max_re}"));
        }
        c.note(format!("max initial speed {worst_v:.1e}, eigenvalue error {worst_eig:.1e}"));
        Ok(())
    })
}

/// Choi spectra: PSD for the CPTP gate, a negative eigenvalue for the non-CP gate.
pub fn criterion_9() -> CriterionOutcome {
    run(9, "Choi CP certification", Some(Duration::from_secs(5)), |c| {
        let cptp = Preset::LinearCptp { m: 1.0 }.expand()?;
        let times: Vec<f64> = (0..20).map(|k| 5.0 * k as f64 / 19.0).collect();
        let min_cptp = choi_spectra(&cptp, &times)?.iter().map(|e| e[0]).fold(f64::INFINITY, f64::min);
        c.check(min_cptp >= -1e-10, || format!("CPTP min eigenvalue {min_cptp:e}"));

        let noncp = Preset::LinearNonCp { big_m: 1.0, gamma: 0.5 }.expand()?;
        let times: Vec<f64> = (1..=50).map(|k| 0.5 * k as f64 / 50.0).collect();
        let min_noncp = choi_spectra(&noncp, &times)?.iter().map(|e| e[0]).fold(f64::INFINITY, f64::min);
        c.check(min_noncp < -1e-6, || format!("non-CP min eigenvalue {min_noncp:e}"));
        c.note(format!("CPTP min {min_cptp:.2e}, non-CP min {min_noncp:.4e}"));
        Ok(())
    })
}

/// Horizon of the trace/positivity sweep.
pub const POSITIVITY_HORIZON: f64 = 10.0;

/// Uniform sample of the open unit ball, radius at most 0.99.
pub fn interior_states(seed: u64, n: usize) -> Vec<PsdState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| loop {
            let v = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if v.norm() <= 0.99 {
                break PsdState::bloch(v);
            }
        })
        .collect()
}

/// Trace conservation and cone confinement for every preset; monotone purity along gates.
pub fn criterion_10(seed: u64) -> CriterionOutcome {
    run(10, "trace and positivity", None, |c| {
        let starts = interior_states(seed, 100);
        let opts = IntegratorOpts::default().off_cone();
        for kind in PresetKind::ALL {
            let spec = kind.canonical().expand()?;
            let (mut tau_dev, mut max_r): (f64, f64) = (0.0, 0.0);
            let mut escaped = 0;
            for s in &starts {
                let traj = integrate(&spec, *s, POSITIVITY_HORIZON, &opts)?;
                let mut out = false;
                for sample in &traj.samples {
                    tau_dev = tau_dev.max((sample.state.tau() - 1.0).abs());
                    max_r = max_r.max(sample.state.r().norm());
                    out |= sample.state.r().norm() > 1.0 + 1e-6;
                }
                escaped += out as usize;
            }
            c.check(tau_dev <= 1e-8, || format!("{kind}: |tau - 1| up to {tau_dev:e}"));
            c.check(max_r <= 1.0 + 1e-6, || {
                format!("{kind}: |r| reaches {max_r:.3e} ({escaped}/{} starts leave the ball)", starts.len())
            });
        }
        let gates = [
            GateKind::LinearCptp { m: 1.0 },
            GateKind::OneJump { m: 1.0 },
            GateKind::ThreeJump { big_m: 1.0, gamma: 0.5 },
            GateKind::LinearNonCp { big_m: 1.0, gamma: 0.5 },
        ];
        for gate in gates {
            let plan = plan_amplification(gate, Target::Purity(0.99), &PlanOptions::default())?;
            let stages = plan.pre_amp.iter().chain(std::iter::once(&plan.main));
            let purities: Vec<f64> = stages
                .flat_map(|st| st.trajectory.samples.iter().map(|s| s.monitors.purity))
                .collect();
            let drop = purities.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max);
            c.check(drop <= 1e-12, || format!("{gate:?}: purity drops by {drop:e}"));
        }
        c.note(format!("seed {seed:#x}, horizon t = {POSITIVITY_HORIZON}"));
        Ok(())
    })
}

/// Pseudo-linear NINO reproduces the linear CPTP gate and relaxes back to tau = 1.
pub fn criterion_11() -> CriterionOutcome {
    run(11, "pseudo-linear invisibility", None, |c| {
        let m = 1.0;
        let times: Vec<f64> = (1..=100).map(|k| 0.05 * k as f64).collect();
        let pseudo = Preset::PseudoLinearNino { m }.expand()?;
        let linear = Preset::LinearCptp { m }.expand()?;
        let mut worst: f64 = 0.0;
        for start in [PsdState::maximally_mixed(), PsdState::bloch(Vector3::new(-0.3, 0.4, 0.2))] {
            let a = states_at(&pseudo, start, &times, &tight())?;
            let b = states_at(&linear, start, &times, &tight())?;
            for (sa, sb) in a.iter().zip(&b) {
                worst = worst.max((sa.tau() - sb.tau()).abs().max((sa.r() - sb.r()).amax()));
            }
        }
        c.check(worst <= 1e-9, || format!("max difference {worst:e}"));

        // dtau/dt = -2 m^2 tau (tau - 1): logistic relaxation onto the fixed plane
        let tau0 = 1.05;
        let k = 2.0 * m * m;
        let perturbed = states_at(&pseudo, PsdState::new(tau0, Vector3::zeros())?, &times, &tight())?;
        let mut prev = tau0 - 1.0;
        let mut worst_tau: f64 = 0.0;
        for (&t, s) in times.iter().zip(&perturbed) {
            let dev = s.tau() - 1.0;
            c.check(dev >= 0.0 && dev < prev, || format!("t={t}: tau - 1 = {dev:e} not decreasing"));
            prev = dev;
            let exact = 1.0 / (1.0 - (1.0 - 1.0 / tau0) * (-k * t).exp());
            worst_tau = worst_tau.max((s.tau() - exact).abs());
        }
        c.check(worst_tau <= 1e-9, || format!("tau vs logistic solution {worst_tau:e}"));
        let last = perturbed.last().map(|s| s.tau() - 1.0).unwrap_or(f64::NAN);
        c.note(format!("max difference {worst:.1e}, tau - 1 from 5.0e-2 to {last:.1e}"));
        Ok(())
    })
}

pub fn run_all(seed: u64) -> Vec<CriterionOutcome> {
    vec![
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
        criterion_9(),
        criterion_10(seed),
        criterion_11(),
    ]
}
