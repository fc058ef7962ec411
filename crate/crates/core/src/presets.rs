//! Named branch systems and the backend-neutral system description format.
//!
//! A description keeps coefficients as text so the same file can be
//! instantiated on either backend:
//!
//! ```json
//! {
//!   "branches": [
//!     {"kind": "affine", "coefficients": ["3/10", "1/10"]},
//!     {"kind": "affine", "coefficients": ["3/10", "1/2"]}
//!   ],
//!   "general_mode": false,
//!   "cuts": ["3/10"],
//!   "assignment": "L"
//! }
//! ```

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize};

use crate::branch::{BranchDescriptor, BranchKind, BranchSystem};
use crate::error::{Error, Result};
use crate::pc::{BoundaryAssignment, ParameterPoint, PiecewiseContraction};
use crate::scalar::{Backend, Scalar};

/// Coefficient text; numbers in the source are kept in their shortest
/// decimal form.
fn scalar_texts<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<String>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Text {
        Str(String),
        Int(i64),
        Float(f64),
    }
    let raw = Vec::<Text>::deserialize(d)?;
    Ok(raw
        .into_iter()
        .map(|t| match t {
            Text::Str(s) => s,
            Text::Int(i) => i.to_string(),
            Text::Float(x) => x.to_string(),
        })
        .collect())
}

fn optional_texts<'de, D: Deserializer<'de>>(
    d: D,
) -> std::result::Result<Option<Vec<String>>, D::Error> {
    scalar_texts(d).map(Some)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchSpec {
    pub kind: BranchKind,
    #[serde(deserialize_with = "scalar_texts")]
    pub coefficients: Vec<String>,
}

impl BranchSpec {
    pub fn affine(slope: &str, intercept: &str) -> Self {
        BranchSpec {
            kind: BranchKind::Affine,
            coefficients: vec![slope.into(), intercept.into()],
        }
    }

    pub fn quadratic(c0: &str, c1: &str, c2: &str) -> Self {
        BranchSpec {
            kind: BranchKind::Quadratic,
            coefficients: vec![c0.into(), c1.into(), c2.into()],
        }
    }

    pub fn descriptor<S: Scalar>(&self) -> Result<BranchDescriptor<S>> {
        let c = self
            .coefficients
            .iter()
            .map(|t| S::parse(t))
            .collect::<Result<Vec<S>>>()?;
        let mut it = c.into_iter();
        match (self.kind, it.len()) {
            (BranchKind::Affine, 2) => Ok(BranchDescriptor::affine(
                it.next().unwrap(),
                it.next().unwrap(),
            )),
            (BranchKind::Quadratic, 3) => Ok(BranchDescriptor::quadratic(
                it.next().unwrap(),
                it.next().unwrap(),
                it.next().unwrap(),
            )),
            (kind, len) => Err(Error::Parse(format!(
                "{kind:?} branch with {len} coefficients"
            ))),
        }
    }
}

/// Backend-neutral description of a branch system, optionally with a
/// default parameter point and boundary assignment.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub branches: Vec<BranchSpec>,
    #[serde(default)]
    pub general_mode: bool,
    /// Preferred backend; quadratic systems need `float`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend: Option<Backend>,
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        deserialize_with = "optional_texts"
    )]
    pub cuts: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assignment: Option<String>,
}

impl SystemSpec {
    pub fn n(&self) -> usize {
        self.branches.len()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data")
    }

    pub fn is_affine(&self) -> bool {
        self.branches.iter().all(|b| b.kind == BranchKind::Affine)
    }

    /// Backend to use when none is requested.
    pub fn default_backend(&self) -> Backend {
        self.backend.unwrap_or(if self.is_affine() {
            Backend::Rational
        } else {
            Backend::Float
        })
    }

    pub fn system<S: Scalar>(&self) -> Result<BranchSystem<S>> {
        let branches = self
            .branches
            .iter()
            .map(BranchSpec::descriptor)
            .collect::<Result<Vec<BranchDescriptor<S>>>>()?;
        if self.general_mode {
            BranchSystem::general(branches)
        } else {
            BranchSystem::validate(branches)
        }
    }

    pub fn default_params<S: Scalar>(&self) -> Result<Option<ParameterPoint<S>>> {
        self.cuts
            .as_ref()
            .map(|cuts| {
                ParameterPoint::new(
                    cuts.iter()
                        .map(|c| S::parse(c))
                        .collect::<Result<Vec<S>>>()?,
                )
            })
            .transpose()
    }

    pub fn default_assignment(&self) -> Result<Option<BoundaryAssignment>> {
        self.assignment.as_deref().map(str::parse).transpose()
    }

    /// The map at the description's own cuts and assignment (all-left when
    /// no assignment is given).
    pub fn map<S: Scalar>(&self) -> Result<PiecewiseContraction<S>> {
        let params = self
            .default_params()?
            .ok_or_else(|| Error::Parameters("system description has no cuts".into()))?;
        let assignment = self
            .default_assignment()?
            .unwrap_or_else(|| BoundaryAssignment::all_left(self.n()));
        PiecewiseContraction::new(self.system()?, params, assignment)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PresetInfo {
    pub name: &'static str,
    pub description: &'static str,
}

pub const PRESETS: &[PresetInfo] = &[
    PresetInfo {
        name: "example-4.1-f1",
        description: "affine(1/2, 1/4), affine(1/2, -1/4), cut 1/2 attached right; general mode",
    },
    PresetInfo {
        name: "example-4.1-f2",
        description: "same branches, cut 1/2 attached left; general mode",
    },
    PresetInfo {
        name: "example-4.1-f2-eps",
        description:
            "affine(1/2, 1/4+eps), affine(1/2, -1/4+eps), cut 1/2 attached left; general mode; \
                      pass eps as example-4.1-f2-eps:<eps> (default 1/10)",
    },
    PresetInfo {
        name: "S2",
        description: "affine(0.3, 0.1), affine(0.3, 0.5)",
    },
    PresetInfo {
        name: "S3",
        description: "quadratic(0.15, 0.25, 0.05), affine(0.3, 0.62); float backend",
    },
    PresetInfo {
        name: "S4",
        description: "four affine branches of slope 0.15 with images at 0.05, 0.3, 0.55, 0.8",
    },
    PresetInfo {
        name: "uniform",
        description:
            "affine(0.2, 0.2), affine(0.2, 0.6); every piece of the expanding map has slope 5",
    },
];

pub fn presets() -> &'static [PresetInfo] {
    PRESETS
}

fn spec(
    name: &str,
    branches: Vec<BranchSpec>,
    general: bool,
    cuts: &[&str],
    assignment: &str,
) -> SystemSpec {
    SystemSpec {
        name: Some(name.to_string()),
        branches,
        general_mode: general,
        backend: None,
        cuts: Some(cuts.iter().map(|c| c.to_string()).collect()),
        assignment: Some(assignment.to_string()),
    }
}

fn half_example(name: &str, eps: &str, assignment: &str) -> Result<SystemSpec> {
    let one_quarter = crate::scalar::Rational::new(1, 4);
    let e = crate::scalar::Rational::parse(eps)?;
    let up = (one_quarter.clone() + e.clone()).to_string();
    let down = (e - one_quarter).to_string();
    Ok(spec(
        name,
        vec![
            BranchSpec::affine("1/2", &up),
            BranchSpec::affine("1/2", &down),
        ],
        true,
        &["1/2"],
        assignment,
    ))
}

/// Look up a preset. `example-4.1-f2-eps` takes its parameter after a colon.
pub fn preset(name: &str) -> Result<SystemSpec> {
    let (base, param) = match name.split_once(':') {
        Some((b, p)) => (b.trim(), Some(p.trim())),
        None => (name.trim(), None),
    };
    let unknown = || Error::UnknownPreset {
        name: name.to_string(),
        available: PRESETS
            .iter()
            .map(|p| p.name)
            .collect::<Vec<_>>()
            .join(", "),
    };
    if param.is_some() && base != "example-4.1-f2-eps" {
        return Err(unknown());
    }
    match base {
        "example-4.1-f1" => half_example(base, "0", "R"),
        "example-4.1-f2" => half_example(base, "0", "L"),
        "example-4.1-f2-eps" => {
            let eps = param.unwrap_or("1/10");
            half_example(&format!("{base}:{eps}"), eps, "L")
        }
        "S2" => Ok(spec(
            base,
            vec![
                BranchSpec::affine("0.3", "0.1"),
                BranchSpec::affine("0.3", "0.5"),
            ],
            false,
            &["0.3"],
            "L",
        )),
        "S3" => {
            let mut s = spec(
                base,
                vec![
                    BranchSpec::quadratic("0.15", "0.25", "0.05"),
                    BranchSpec::affine("0.3", "0.62"),
                ],
                false,
                &["0.4"],
                "L",
            );
            s.backend = Some(Backend::Float);
            Ok(s)
        }
        "S4" => Ok(spec(
            base,
            vec![
                BranchSpec::affine("0.15", "0.05"),
                BranchSpec::affine("0.15", "0.3"),
                BranchSpec::affine("0.15", "0.55"),
                BranchSpec::affine("0.15", "0.8"),
            ],
            false,
            &["0.25", "0.5", "0.75"],
            "LLL",
        )),
        "uniform" => Ok(spec(
            base,
            vec![
                BranchSpec::affine("0.2", "0.2"),
                BranchSpec::affine("0.2", "0.6"),
            ],
            false,
            &["0.5"],
            "L",
        )),
        _ => Err(unknown()),
    }
}

/// Random injective affine system with `n` branches.
///
/// `[0,1]` is cut into `2n+1` consecutive slots of integer weights in
/// `1..=20`; the even slots are gaps and the odd slots are images, handed
/// to branches in random order with random orientation. Every coefficient
/// has a denominator of at most `20(2n+1)`.
pub fn random_affine_system<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SystemSpec {
    let weights: Vec<i64> = (0..2 * n + 1).map(|_| rng.gen_range(1..=20)).collect();
    let total: i64 = weights.iter().sum();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut branches = vec![None; n];
    let mut start = 0i64;
    for (slot, w) in weights.iter().enumerate() {
        if slot % 2 == 1 {
            let len = crate::scalar::Rational::new(*w, total);
            let lo = crate::scalar::Rational::new(start, total);
            let branch = if rng.gen_bool(0.5) {
                BranchSpec::affine(&len.to_string(), &lo.to_string())
            } else {
                BranchSpec::affine(&(-len.clone()).to_string(), &(lo + len).to_string())
            };
            branches[order[slot / 2]] = Some(branch);
        }
        start += w;
    }
    SystemSpec {
        name: Some(format!("random-affine-{n}")),
        branches: branches
            .into_iter()
            .map(|b| b.expect("every branch placed"))
            .collect(),
        general_mode: false,
        backend: None,
        cuts: None,
        assignment: None,
    }
}
