//! Named amplification channels and the JSON channel-spec file format.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelSpec, ChoiSign, JumpTerm};
use crate::error::{Error, Result};
use crate::pauli::{HermitianPauliVector, PauliVectorC};

fn jump(re: [f64; 4], im: [f64; 4], zeta: ChoiSign) -> JumpTerm {
    JumpTerm::new(PauliVectorC::from_parts(re, im), zeta).expect("nonzero jump rate")
}

/// `B0 = m (sigma^2 + i sigma^3)`.
pub fn jump_b0(m: f64, zeta: ChoiSign) -> JumpTerm {
    jump([0.0, 0.0, m, 0.0], [0.0, 0.0, 0.0, m], zeta)
}

/// `B1 = m (sigma^1 + sigma^2)`.
pub fn jump_b1(m: f64, zeta: ChoiSign) -> JumpTerm {
    jump([0.0, m, m, 0.0], [0.0; 4], zeta)
}

/// `B2 = m (I + sigma^3)`.
pub fn jump_b2(m: f64, zeta: ChoiSign) -> JumpTerm {
    jump([m, 0.0, 0.0, m], [0.0; 4], zeta)
}

/// `B3 = m sigma^3`.
pub fn jump_b3(m: f64, zeta: ChoiSign) -> JumpTerm {
    jump([0.0, 0.0, 0.0, m], [0.0; 4], zeta)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PresetKind {
    LinearCptp,
    NoJumpNino,
    OneJumpNino,
    PseudoLinearNino,
    ThreeJumpNino,
    LinearNonCp,
}

impl PresetKind {
    pub const ALL: [PresetKind; 6] = [
        PresetKind::LinearCptp,
        PresetKind::NoJumpNino,
        PresetKind::OneJumpNino,
        PresetKind::PseudoLinearNino,
        PresetKind::ThreeJumpNino,
        PresetKind::LinearNonCp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PresetKind::LinearCptp => "linear_cptp",
            PresetKind::NoJumpNino => "nojump_nino",
            PresetKind::OneJumpNino => "onejump_nino",
            PresetKind::PseudoLinearNino => "pseudolinear_nino",
            PresetKind::ThreeJumpNino => "threejump_nino",
            PresetKind::LinearNonCp => "linear_noncp",
        }
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            PresetKind::LinearCptp | PresetKind::OneJumpNino | PresetKind::PseudoLinearNino => &["m"],
            PresetKind::NoJumpNino => &["l0", "l1"],
            PresetKind::ThreeJumpNino | PresetKind::LinearNonCp => &["M", "gamma"],
        }
    }

    /// Parameters used when none are given.
    pub fn canonical(self) -> Preset {
        match self {
            PresetKind::LinearCptp => Preset::LinearCptp { m: 1.0 },
            PresetKind::NoJumpNino => Preset::NoJumpNino { l0: -1.0, l1: 1.0 },
            PresetKind::OneJumpNino => Preset::OneJumpNino { m: 1.0 },
            PresetKind::PseudoLinearNino => Preset::PseudoLinearNino { m: 1.0 },
            PresetKind::ThreeJumpNino => Preset::ThreeJumpNino { big_m: 1.0, gamma: 0.5 },
            PresetKind::LinearNonCp => Preset::LinearNonCp { big_m: 1.0, gamma: 0.5 },
        }
    }
}

impl fmt::Display for PresetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PresetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PresetKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownPreset(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Preset {
    LinearCptp { m: f64 },
    NoJumpNino { l0: f64, l1: f64 },
    OneJumpNino { m: f64 },
    PseudoLinearNino { m: f64 },
    ThreeJumpNino { big_m: f64, gamma: f64 },
    LinearNonCp { big_m: f64, gamma: f64 },
}

fn check_rate(m: f64) -> Result<()> {
    if !(m.is_finite() && m > 0.0) {
        return Err(Error::InvalidParams(format!("m > 0 violated (m = {m})")));
    }
    Ok(())
}

fn check_gain_loss(big_m: f64, gamma: f64) -> Result<()> {
    if !(big_m.is_finite() && gamma.is_finite()) {
        return Err(Error::NonFinite("preset parameters"));
    }
    if gamma < 0.0 {
        return Err(Error::InvalidParams(format!("Gamma/2 >= 0 violated (Gamma = {gamma})")));
    }
    if big_m < gamma / 2.0 {
        return Err(Error::InvalidParams(format!(
            "M >= Gamma/2 violated (M = {big_m}, Gamma/2 = {})",
            gamma / 2.0
        )));
    }
    Ok(())
}

/// The three jumps `B1, B2, B3` with strengths `sqrt(M/2), sqrt(M/2), sqrt(M - Gamma/2)`
/// and signs `(+, +, -)`. Terms with zero strength are dropped.
fn gain_loss_jumps(big_m: f64, gamma: f64) -> Vec<JumpTerm> {
    let m12 = (big_m / 2.0).sqrt();
    let m3 = (big_m - gamma / 2.0).sqrt();
    let mut jumps = Vec::with_capacity(3);
    if m12 > 0.0 {
        jumps.push(jump_b1(m12, ChoiSign::Positive));
        jumps.push(jump_b2(m12, ChoiSign::Positive));
    }
    if m3 > 0.0 {
        jumps.push(jump_b3(m3, ChoiSign::Negative));
    }
    jumps
}

impl Preset {
    pub fn kind(&self) -> PresetKind {
        match self {
            Preset::LinearCptp { .. } => PresetKind::LinearCptp,
            Preset::NoJumpNino { .. } => PresetKind::NoJumpNino,
            Preset::OneJumpNino { .. } => PresetKind::OneJumpNino,
            Preset::PseudoLinearNino { .. } => PresetKind::PseudoLinearNino,
            Preset::ThreeJumpNino { .. } => PresetKind::ThreeJumpNino,
            Preset::LinearNonCp { .. } => PresetKind::LinearNonCp,
        }
    }

    /// Build from a parameter map; missing parameters fall back to the canonical values.
    pub fn from_params(kind: PresetKind, params: &BTreeMap<String, f64>) -> Result<Self> {
        for key in params.keys() {
            if !kind.param_names().contains(&key.as_str()) {
                return Err(Error::InvalidParams(format!(
                    "unknown parameter '{key}' for {kind} (expected {:?})",
                    kind.param_names()
                )));
            }
        }
        let get = |name: &str, default: f64| params.get(name).copied().unwrap_or(default);
        let preset = match kind.canonical() {
            Preset::LinearCptp { m } => Preset::LinearCptp { m: get("m", m) },
            Preset::OneJumpNino { m } => Preset::OneJumpNino { m: get("m", m) },
            Preset::PseudoLinearNino { m } => Preset::PseudoLinearNino { m: get("m", m) },
            Preset::NoJumpNino { l0, l1 } => Preset::NoJumpNino {
                l0: get("l0", l0),
                l1: get("l1", l1),
            },
            Preset::ThreeJumpNino { big_m, gamma } => Preset::ThreeJumpNino {
                big_m: get("M", big_m),
                gamma: get("gamma", gamma),
            },
            Preset::LinearNonCp { big_m, gamma } => Preset::LinearNonCp {
                big_m: get("M", big_m),
                gamma: get("gamma", gamma),
            },
        };
        preset.validate()?;
        Ok(preset)
    }

    pub fn params(&self) -> BTreeMap<String, f64> {
        let pairs: Vec<(&str, f64)> = match *self {
            Preset::LinearCptp { m } | Preset::OneJumpNino { m } | Preset::PseudoLinearNino { m } => {
                vec![("m", m)]
            }
            Preset::NoJumpNino { l0, l1 } => vec![("l0", l0), ("l1", l1)],
            Preset::ThreeJumpNino { big_m, gamma } | Preset::LinearNonCp { big_m, gamma } => {
                vec![("M", big_m), ("gamma", gamma)]
            }
        };
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Preset::LinearCptp { m } | Preset::OneJumpNino { m } | Preset::PseudoLinearNino { m } => {
                check_rate(m)
            }
            Preset::NoJumpNino { l0, l1 } => {
                if l0.is_finite() && l1.is_finite() {
                    Ok(())
                } else {
                    Err(Error::NonFinite("preset parameters"))
                }
            }
            Preset::ThreeJumpNino { big_m, gamma } | Preset::LinearNonCp { big_m, gamma } => {
                check_gain_loss(big_m, gamma)
            }
        }
    }

    pub fn expand(&self) -> Result<ChannelSpec> {
        self.validate()?;
        let hv = HermitianPauliVector::new;
        match *self {
            Preset::LinearCptp { m } => {
                let m2 = m * m;
                ChannelSpec::new(hv([-m2, m2, 0.0, 0.0]), vec![jump_b0(m, ChoiSign::Positive)], 0.0)
            }
            Preset::NoJumpNino { l0, l1 } => ChannelSpec::new(hv([l0, l1, 0.0, 0.0]), vec![], 1.0),
            Preset::OneJumpNino { m } => {
                ChannelSpec::new(hv([0.0; 4]), vec![jump_b0(m, ChoiSign::Positive)], 1.0)
            }
            Preset::PseudoLinearNino { m } => ChannelSpec::new(
                hv([0.0, m * m, 0.0, 0.0]),
                vec![jump_b0(m, ChoiSign::Positive)],
                1.0,
            ),
            Preset::ThreeJumpNino { big_m, gamma } => ChannelSpec::new(
                hv([0.0, 0.0, 0.0, -big_m / 2.0]),
                gain_loss_jumps(big_m, gamma),
                1.0,
            ),
            Preset::LinearNonCp { big_m, gamma } => ChannelSpec::new(
                hv([-(big_m + gamma / 2.0) / 2.0, 0.0, 0.0, -big_m / 2.0]),
                gain_loss_jumps(big_m, gamma),
                0.0,
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpRecord {
    pub xi_re: [f64; 4],
    pub xi_im: [f64; 4],
    pub zeta: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplicitSpec {
    pub ell: [f64; 4],
    #[serde(default)]
    pub jumps: Vec<JumpRecord>,
    pub g: f64,
    #[serde(default)]
    pub h: [f64; 3],
}

/// Contents of a channel-spec file: either an explicit channel or a preset reference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpecFile {
    Preset {
        preset: String,
        #[serde(default)]
        params: BTreeMap<String, f64>,
    },
    Explicit(ExplicitSpec),
}

impl SpecFile {
    pub fn from_spec(spec: &ChannelSpec) -> Self {
        SpecFile::Explicit(ExplicitSpec {
            ell: spec.ell.ell,
            jumps: spec
                .jumps
                .iter()
                .map(|j| JumpRecord {
                    xi_re: j.xi().re(),
                    xi_im: j.xi().im(),
                    zeta: j.zeta().into(),
                })
                .collect(),
            g: spec.g,
            h: [spec.h.x, spec.h.y, spec.h.z],
        })
    }

    pub fn to_spec(&self) -> Result<ChannelSpec> {
        match self {
            SpecFile::Preset { preset, params } => {
                Preset::from_params(preset.parse()?, params)?.expand()
            }
            SpecFile::Explicit(e) => {
                let jumps = e
                    .jumps
                    .iter()
                    .map(|j| {
                        JumpTerm::new(
                            PauliVectorC::from_parts(j.xi_re, j.xi_im),
                            ChoiSign::try_from(j.zeta)?,
                        )
                    })
                    .collect::<Result<Vec<_>>>()?;
                ChannelSpec::new(HermitianPauliVector::new(e.ell), jumps, e.g)?
                    .with_hamiltonian(Vector3::from(e.h))
            }
        }
    }
}

pub fn spec_to_json(spec: &ChannelSpec) -> String {
    serde_json::to_string_pretty(&SpecFile::from_spec(spec)).expect("spec serializes")
}

pub fn parse_spec_json(text: &str) -> Result<ChannelSpec> {
    serde_json::from_str::<SpecFile>(text)?.to_spec()
}

pub fn load_spec(path: &Path) -> Result<ChannelSpec> {
    parse_spec_json(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn linear_cptp_expansion() {
        let spec = Preset::LinearCptp { m: 1.0 }.expand().unwrap();
        assert_eq!(spec.ell.ell, [-1.0, 1.0, 0.0, 0.0]);
        assert_eq!(spec.jumps, vec![jump_b0(1.0, ChoiSign::Positive)]);
        assert_eq!(spec.g, 0.0);
    }

    #[test]
    fn linear_noncp_expansion() {
        let spec = Preset::LinearNonCp { big_m: 1.0, gamma: 0.5 }.expand().unwrap();
        assert_eq!(spec.ell.ell, [-0.625, 0.0, 0.0, -0.5]);
        let signs: Vec<_> = spec.jumps.iter().map(|j| j.zeta()).collect();
        assert_eq!(signs, [ChoiSign::Positive, ChoiSign::Positive, ChoiSign::Negative]);
        assert_eq!(spec.g, 0.0);
    }

    #[test]
    fn gain_loss_constraint() {
        let err = Preset::ThreeJumpNino { big_m: 1.0, gamma: 2.5 }.expand().unwrap_err();
        assert!(err.to_string().contains("M >= Gamma/2"), "{err}");
        let err = Preset::LinearNonCp { big_m: 1.0, gamma: -0.1 }.expand().unwrap_err();
        assert!(err.to_string().contains("Gamma/2 >= 0"), "{err}");
        assert!(Preset::LinearCptp { m: 0.0 }.expand().is_err());
    }

    #[test]
    fn boundary_drops_vanishing_jump() {
        let spec = Preset::ThreeJumpNino { big_m: 1.0, gamma: 2.0 }.expand().unwrap();
        assert_eq!(spec.jumps.len(), 2);
    }

    #[test]
    fn names_round_trip() {
        for kind in PresetKind::ALL {
            assert_eq!(kind.name().parse::<PresetKind>().unwrap(), kind);
        }
        assert!(matches!("bogus".parse::<PresetKind>(), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn preset_reference_file() {
        let spec = parse_spec_json(r#"{"preset": "threejump_nino", "params": {"M": 2.0, "gamma": 1.0}}"#)
            .unwrap();
        assert_eq!(spec, Preset::ThreeJumpNino { big_m: 2.0, gamma: 1.0 }.expand().unwrap());
        assert!(parse_spec_json(r#"{"preset": "linear_cptp", "params": {"M": 2.0}}"#).is_err());
    }

    #[test]
    fn explicit_file_rejects_bad_sign() {
        let text = r#"{"ell": [0,0,0,0], "jumps": [{"xi_re": [0,0,0,1], "xi_im": [0,0,0,0], "zeta": 2}], "g": 0}"#;
        assert!(matches!(parse_spec_json(text), Err(Error::InvalidSign(2))));
    }

    fn arb_preset() -> impl Strategy<Value = Preset> {
        (0usize..6, 0.05f64..3.0, 0.0f64..2.0, -2.0f64..2.0).prop_map(|(k, a, frac, b)| match k {
            0 => Preset::LinearCptp { m: a },
            1 => Preset::NoJumpNino { l0: b, l1: a },
            2 => Preset::OneJumpNino { m: a },
            3 => Preset::PseudoLinearNino { m: a },
            4 => Preset::ThreeJumpNino { big_m: a, gamma: frac * a },
            _ => Preset::LinearNonCp { big_m: a, gamma: frac * a },
        })
    }

    proptest! {
        #[test]
        fn spec_file_round_trip(p in arb_preset(), h in proptest::array::uniform3(-1.0f64..1.0)) {
            let spec = p.expand().unwrap().with_hamiltonian(Vector3::from(h)).unwrap();
            prop_assert_eq!(parse_spec_json(&spec_to_json(&spec)).unwrap(), spec);
        }

        #[test]
        fn params_round_trip(p in arb_preset()) {
            prop_assert_eq!(Preset::from_params(p.kind(), &p.params()).unwrap(), p);
        }
    }
}
