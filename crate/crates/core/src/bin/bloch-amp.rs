use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::Vector3;
use rayon::prelude::*;
use serde_json::{json, Value};

use bloch_amp::analysis::{
    self, choi_spectrum, eigenvalues, find_fixed_points, plan_amplification, slowdown_exponent, GateKind,
    PlanOptions, PreAmpAxis, Target,
};
use bloch_amp::catalogue::{load_spec, Preset, PresetKind};
use bloch_amp::channel::{assemble, classify, initial_velocity, ChannelSpec, PtpClass, TracePreservation};
use bloch_amp::dynamics::{fmt_sig17, integrate, IntegratorOpts, Method};
use bloch_amp::verify::{run_all, DEFAULT_SEED};
use bloch_amp::{Error, PsdState, Result};

#[derive(Parser)]
#[command(name = "bloch-amp", version, about = "Bloch vector amplification channels on the qubit PSD cone")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a trajectory and write it as CSV.
    Simulate(SimulateArgs),
    /// Stationary states on the tau = 1 slice, as JSON.
    FixedPoints(ChannelArgs),
    /// Channel classification, initial velocity and Jacobian spectrum at a point.
    Stability(StabilityArgs),
    /// Critical-slowing-down exponent near a fixed point.
    Slowdown(SlowdownArgs),
    /// Choi spectrum of a linear channel at time t.
    Choi(ChoiArgs),
    /// Schedule an amplification gate reaching a target purity.
    GatePlan(GatePlanArgs),
    /// Scan one preset parameter; one CSV row per (parameter value, observable).
    Sweep(SweepArgs),
    /// Run the reference suite and print a pass/fail table.
    Verify(VerifyArgs),
}

#[derive(Args, Clone)]
struct ChannelArgs {
    /// Named channel preset.
    #[arg(long, value_parser = parse_kind, conflicts_with = "spec_file")]
    preset: Option<PresetKind>,
    /// Jump strength m (linear_cptp, onejump_nino, pseudolinear_nino).
    #[arg(long)]
    m: Option<f64>,
    /// Gain M (threejump_nino, linear_noncp).
    #[arg(long = "M")]
    big_m: Option<f64>,
    /// Loss Gamma (threejump_nino, linear_noncp).
    #[arg(long)]
    gamma: Option<f64>,
    /// l0 coefficient of L+ (nojump_nino).
    #[arg(long, allow_hyphen_values = true)]
    l0: Option<f64>,
    /// l1 coefficient of L+ (nojump_nino).
    #[arg(long, allow_hyphen_values = true)]
    l1: Option<f64>,
    /// JSON spec file (preset form or explicit coefficients).
    #[arg(long)]
    spec_file: Option<PathBuf>,
}

fn parse_kind(s: &str) -> std::result::Result<PresetKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_vec3(s: &str) -> std::result::Result<Vector3<f64>, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("'{p}': {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match parts.as_slice() {
        [x, y, z] => Ok(Vector3::new(*x, *y, *z)),
        _ => Err(format!("expected three comma-separated numbers, got '{s}'")),
    }
}

impl ChannelArgs {
    fn given_params(&self) -> BTreeMap<String, f64> {
        [("m", self.m), ("M", self.big_m), ("gamma", self.gamma), ("l0", self.l0), ("l1", self.l1)]
            .into_iter()
            .filter_map(|(k, v)| v.map(|v| (k.to_string(), v)))
            .collect()
    }

    /// Preset with unspecified parameters at their canonical values.
    fn preset(&self) -> Result<Preset> {
        let kind = self
            .preset
            .ok_or_else(|| Error::InvalidParams("--preset is required here".into()))?;
        Preset::from_params(kind, &self.given_params())
    }

    fn spec(&self) -> Result<ChannelSpec> {
        match (&self.spec_file, self.preset) {
            (Some(path), None) => {
                if !self.given_params().is_empty() {
                    return Err(Error::InvalidParams("parameter flags cannot be combined with --spec-file".into()));
                }
                load_spec(path)
            }
            (None, Some(_)) => self.preset()?.expand(),
            _ => Err(Error::InvalidParams("give exactly one of --preset or --spec-file".into())),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Rk45,
    Rk4,
}

#[derive(Args, Clone)]
struct IntegratorArgs {
    #[arg(long, value_enum, default_value = "rk45")]
    method: MethodArg,
    /// Fixed step for rk4.
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 1e-10)]
    rtol: f64,
    #[arg(long, default_value_t = 1e-12)]
    atol: f64,
    /// Keep integrating when the state leaves the PSD cone.
    #[arg(long)]
    allow_off_cone: bool,
}

impl IntegratorArgs {
    fn opts(&self) -> IntegratorOpts {
        let method = match self.method {
            MethodArg::Rk45 => Method::Rk45Adaptive { rtol: self.rtol, atol: self.atol },
            MethodArg::Rk4 => Method::Rk4Fixed { dt: self.dt },
        };
        IntegratorOpts { method, allow_off_cone: self.allow_off_cone, ..IntegratorOpts::default() }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    #[command(flatten)]
    integrator: IntegratorArgs,
    /// Final time.
    #[arg(long)]
    t: f64,
    #[arg(long, default_value_t = 1.0)]
    tau0: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    x0: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    y0: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    z0: f64,
    /// Resample onto this many evenly spaced times instead of the solver's steps.
    #[arg(long)]
    samples: Option<usize>,
    /// Output CSV path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StabilityArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    /// Point on the tau = 1 slice where the Jacobian is evaluated.
    #[arg(long, value_parser = parse_vec3, default_value = "0,0,0", allow_hyphen_values = true)]
    at: Vector3<f64>,
}

#[derive(Args)]
struct SlowdownArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    /// Fixed point on the tau = 1 slice.
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    fp: Vector3<f64>,
    /// Approach direction; states are sampled at fp - delta * dir.
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    dir: Vector3<f64>,
}

#[derive(Args)]
struct ChoiArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    #[arg(long)]
    t: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    Diagonal,
    X,
}

#[derive(Args)]
struct GatePlanArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    #[arg(long, conflicts_with = "target_radius")]
    target_purity: Option<f64>,
    /// Target Bloch length |r| instead of a purity.
    #[arg(long)]
    target_radius: Option<f64>,
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,
    #[arg(long, default_value_t = 1.0)]
    pre_amp_m: f64,
    #[arg(long, value_enum, default_value = "diagonal")]
    pre_amp_axis: AxisArg,
    #[arg(long, default_value_t = 100.0)]
    t_max: f64,
}

impl GatePlanArgs {
    fn target(&self) -> Result<Target> {
        match (self.target_purity, self.target_radius) {
            (Some(p), None) => Ok(Target::Purity(p)),
            (None, Some(r)) => Ok(Target::Radius(r)),
            _ => Err(Error::InvalidParams("give --target-purity or --target-radius".into())),
        }
    }

    fn options(&self) -> PlanOptions {
        PlanOptions {
            epsilon: self.epsilon,
            pre_amp_m: self.pre_amp_m,
            pre_amp_axis: match self.pre_amp_axis {
                AxisArg::Diagonal => PreAmpAxis::Diagonal,
                AxisArg::X => PreAmpAxis::X,
            },
            t_max: self.t_max,
            ..PlanOptions::default()
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Observable {
    /// Purity tr(rho^2) at --t from the maximally mixed state.
    Purity,
    /// Bloch length |r| at --t.
    Radius,
    /// Von Neumann entropy (nats) at --t.
    Entropy,
    /// Trace tau at --t.
    Tau,
    /// Largest real part of the Jacobian spectrum at the origin of the tau = 1 slice.
    MaxReOrigin,
    /// Smallest Choi eigenvalue at --t (linear presets).
    ChoiMin,
    /// Main-stage gate time for --target-purity (gate presets).
    TGate,
}

impl Observable {
    fn name(self) -> &'static str {
        match self {
            Observable::Purity => "purity",
            Observable::Radius => "radius",
            Observable::Entropy => "entropy",
            Observable::Tau => "tau",
            Observable::MaxReOrigin => "max_re_origin",
            Observable::ChoiMin => "choi_min",
            Observable::TGate => "t_gate",
        }
    }
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    /// Name of the swept preset parameter (m, M, gamma, l0, l1).
    #[arg(long)]
    param: String,
    #[arg(long, allow_hyphen_values = true)]
    from: f64,
    #[arg(long, allow_hyphen_values = true)]
    to: f64,
    #[arg(long, default_value_t = 11)]
    steps: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "purity,radius,entropy")]
    observables: Vec<Observable>,
    /// Evaluation time for trajectory and Choi observables.
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, default_value_t = 0.99)]
    target_purity: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Paper,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "paper")]
    suite: Suite,
    /// Seed for the randomized initial states.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

fn writer(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn print_json(v: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(v)?;
    writeln!(io::stdout().lock(), "{text}")?;
    Ok(())
}

fn simulate(a: &SimulateArgs) -> Result<()> {
    let spec = a.channel.spec()?;
    let start = PsdState::new(a.tau0, Vector3::new(a.x0, a.y0, a.z0))?;
    let mut traj = integrate(&spec, start, a.t, &a.integrator.opts())?;
    if let Some(n) = a.samples {
        traj = traj.resample(n);
    }
    let mut out = writer(&a.out)?;
    traj.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

fn stability(a: &StabilityArgs) -> Result<()> {
    let spec = a.channel.spec()?;
    let gen = assemble(&spec);
    let v = initial_velocity(&spec);
    let eigs = eigenvalues(&gen.jacobian(1.0, &a.at));
    let max_re = eigs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let class = match classify(&spec) {
        Ok(c) => json!({
            "cp": c.cp,
            "class": match c.class { PtpClass::Linear => "linear", PtpClass::Nino => "nino" },
            "pseudo_linear": c.pseudo_linear,
            "kappa": c.kappa,
            "unital": c.unital,
            "trace_preservation": match c.trace_preservation {
                TracePreservation::Unconditional => "unconditional",
                TracePreservation::ConditionalOnPlane => "conditional_on_tau_1",
            },
        }),
        Err(e) => json!({ "error": e.to_string() }),
    };
    let report = find_fixed_points(&spec);
    print_json(&json!({
        "classification": class,
        "initial_velocity": { "dr": [v.dr.x, v.dr.y, v.dr.z], "dtau": v.dtau, "norm": v.norm() },
        "jacobian_at": [a.at.x, a.at.y, a.at.z],
        "jacobian_eigenvalues": eigs.iter().map(|z| json!({ "re": z.re, "im": z.im })).collect::<Vec<_>>(),
        "max_real_eigenvalue": max_re,
        "fixed_points": analysis::fixed_points_json(&report),
    }))
}

fn choi(a: &ChoiArgs) -> Result<()> {
    let spec = a.channel.spec()?;
    let eig = choi_spectrum(&spec, a.t)?;
    for e in eig {
        println!("{}", fmt_sig17(e));
    }
    if eig[0] < 0.0 {
        println!("min eigenvalue {} < 0: not completely positive at t = {}", fmt_sig17(eig[0]), a.t);
    } else {
        println!("min eigenvalue {} >= 0: completely positive at t = {}", fmt_sig17(eig[0]), a.t);
    }
    Ok(())
}

fn gate_plan(a: &GatePlanArgs) -> Result<()> {
    let gate = GateKind::from_preset(&a.channel.preset()?)?;
    let plan = plan_amplification(gate, a.target()?, &a.options())?;
    print_json(&analysis::gate_plan_json(&plan))
}

fn observe(preset: &Preset, obs: Observable, a: &SweepArgs) -> Result<f64> {
    let spec = preset.expand()?;
    let state_at_t = || -> Result<PsdState> {
        let opts = IntegratorOpts::default().off_cone();
        Ok(integrate(&spec, PsdState::maximally_mixed(), a.t, &opts)?.final_state())
    };
    Ok(match obs {
        Observable::Purity => state_at_t()?.purity_entropy().0,
        Observable::Radius => state_at_t()?.r().norm(),
        Observable::Entropy => state_at_t()?.purity_entropy().1,
        Observable::Tau => state_at_t()?.tau(),
        Observable::MaxReOrigin => eigenvalues(&assemble(&spec).jacobian(1.0, &Vector3::zeros()))
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max),
        Observable::ChoiMin => choi_spectrum(&spec, a.t)?[0],
        Observable::TGate => {
            let gate = GateKind::from_preset(preset)?;
            plan_amplification(gate, Target::Purity(a.target_purity), &PlanOptions::default())?.t_gate
        }
    })
}

fn sweep(a: &SweepArgs) -> Result<()> {
    let base = a.channel.preset()?;
    if !base.kind().param_names().contains(&a.param.as_str()) {
        return Err(Error::InvalidParams(format!(
            "{} has no parameter '{}' (expected {:?})",
            base.kind(),
            a.param,
            base.kind().param_names()
        )));
    }
    let values: Vec<f64> = match a.steps {
        0 => vec![],
        1 => vec![a.from],
        n => (0..n).map(|k| a.from + (a.to - a.from) * k as f64 / (n - 1) as f64).collect(),
    };
    let jobs: Vec<(f64, Observable)> = values
        .iter()
        .flat_map(|&v| a.observables.iter().map(move |&o| (v, o)))
        .collect();
    // failures for single points (e.g. an invalid parameter value) are reported as NaN rows
    let rows: Vec<(f64, Observable, f64)> = jobs
        .par_iter()
        .map(|&(v, obs)| {
            let mut params = base.params();
            params.insert(a.param.clone(), v);
            let value = Preset::from_params(base.kind(), &params)
                .and_then(|p| observe(&p, obs, a))
                .unwrap_or(f64::NAN);
            (v, obs, value)
        })
        .collect();
    let mut out = writer(&a.out)?;
    writeln!(out, "{},observable,value", a.param)?;
    for (v, obs, value) in rows {
        writeln!(out, "{},{},{}", fmt_sig17(v), obs.name(), fmt_sig17(value))?;
    }
    out.flush()?;
    Ok(())
}

fn verify(a: &VerifyArgs) -> Result<bool> {
    let Suite::Paper = a.suite;
    let outcomes = run_all(a.seed);
    for o in &outcomes {
        println!("{o}");
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    println!("{passed}/{} criteria passed", outcomes.len());
    Ok(passed == outcomes.len())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Simulate(a) => simulate(&a)?,
        Command::FixedPoints(c) => print_json(&analysis::fixed_points_json(&find_fixed_points(&c.spec()?)))?,
        Command::Stability(a) => stability(&a)?,
        Command::Slowdown(a) => {
            print_json(&analysis::slowdown_json(&slowdown_exponent(&a.channel.spec()?, &a.fp, &a.dir)?))?
        }
        Command::Choi(a) => choi(&a)?,
        Command::GatePlan(a) => gate_plan(&a)?,
        Command::Sweep(a) => sweep(&a)?,
        Command::Verify(a) => return verify(&a),
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
