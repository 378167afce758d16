//! TOML run configuration.
//!
//! ```toml
//! alphabet = [{ id = "a", length = 1 }, { id = "b", length = 1 }]
//! rules = { a = "ab", b = "a" }
//! seed = "a"
//! k_max = 3
//! random_seed = 42
//!
//! [cutproject]
//! theta = { p = 3, q = -1, d = 5, r = 2 }   # (p + q√d) / r
//! window = [0, 1]
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_rational::Rational64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use tilecoh_core::cutproject::CutProjectData;
use tilecoh_core::mixed::DEFAULT_TOLERANCE;
use tilecoh_core::peforms::DeRhamConfig;
use tilecoh_core::quadratic::Quadratic;
use tilecoh_core::tiling::{Letter, SubstitutionSystem};

use crate::Command;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{path}: invalid configuration:\n  - {}", .problems.join("\n  - "))]
    Invalid { path: PathBuf, problems: Vec<String> },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum Length {
    Integer(i64),
    Text(String),
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawLetter {
    pub id: Option<String>,
    pub length: Option<Length>,
}

/// `(p + q·√d) / r`, or a bare integer.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum RawQuadratic {
    Integer(i64),
    Surd {
        p: i64,
        #[serde(default)]
        q: i64,
        #[serde(default)]
        d: u64,
        #[serde(default = "one")]
        r: i64,
    },
}

fn one() -> i64 {
    1
}

impl RawQuadratic {
    fn build(&self) -> tilecoh_core::Result<Quadratic> {
        match *self {
            RawQuadratic::Integer(n) => Quadratic::new(n, 0, 0, 1),
            RawQuadratic::Surd { p, q, d, r } => Quadratic::new(p, q, d, r),
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PvSection {
    pub samples: Option<usize>,
    pub trials: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CutProjectSection {
    pub theta: Option<RawQuadratic>,
    pub window: Option<[RawQuadratic; 2]>,
    pub n_max: Option<i64>,
    pub cases: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MixedSection {
    pub matrix: Option<Vec<Vec<f64>>>,
    pub tolerance: Option<f64>,
    pub conjugators: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DerhamSection {
    pub k: Option<usize>,
    pub trials: Option<usize>,
    pub patch_tiles: Option<usize>,
    pub degree: Option<usize>,
    pub tol: Option<f64>,
    pub alpha_tol: Option<f64>,
    pub partition_tol: Option<f64>,
    pub control_trials: Option<usize>,
}

/// The file as written; echoed verbatim into reports.
#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub alphabet: Option<Vec<RawLetter>>,
    pub rules: Option<BTreeMap<String, String>>,
    pub seed: Option<String>,
    pub k_max: Option<i64>,
    pub random_seed: Option<u64>,
    pub pv: Option<PvSection>,
    pub cutproject: Option<CutProjectSection>,
    pub mixed: Option<MixedSection>,
    pub derham: Option<DerhamSection>,
}

#[derive(Clone, Debug)]
pub struct PvParams {
    pub samples: usize,
    pub trials: usize,
}

#[derive(Clone, Debug)]
pub struct CutParams {
    pub data: CutProjectData,
    pub n_max: usize,
    pub cases: usize,
}

#[derive(Clone, Debug)]
pub struct MixedParams {
    pub matrix: Option<Vec<Vec<f64>>>,
    pub tolerance: f64,
    pub conjugators: usize,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub raw: RawConfig,
    pub system: Option<SubstitutionSystem>,
    pub k_max: usize,
    pub random_seed: u64,
    pub pv: PvParams,
    pub cut: Option<CutParams>,
    pub mixed: MixedParams,
    pub derham: DeRhamConfig,
    pub control_trials: usize,
}

pub fn load_config(path: &Path, command: Command) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_owned(),
        source,
    })?;
    parse_config(&text, command).map_err(|e| match e {
        Problem::Parse(message) => ConfigError::Parse {
            path: path.to_owned(),
            message,
        },
        Problem::Invalid(problems) => ConfigError::Invalid {
            path: path.to_owned(),
            problems,
        },
    })
}

#[derive(Debug)]
pub enum Problem {
    Parse(String),
    Invalid(Vec<String>),
}

fn parse_length(l: &Length) -> Result<Rational64, String> {
    match l {
        Length::Integer(n) => Ok(Rational64::from_integer(*n)),
        Length::Text(s) => s.trim().parse::<Rational64>().map_err(|_| format!("length {s:?} is not p/q")),
    }
}

fn build_system(raw: &RawConfig, problems: &mut Vec<String>) -> Option<SubstitutionSystem> {
    let before = problems.len();
    let mut missing = false;
    for (name, present) in [
        ("alphabet", raw.alphabet.is_some()),
        ("rules", raw.rules.is_some()),
        ("seed", raw.seed.is_some()),
    ] {
        if !present {
            problems.push(format!("missing field `{name}`"));
            missing = true;
        }
    }
    let single = |field: &str, s: &str, problems: &mut Vec<String>| {
        let mut it = s.chars();
        match (it.next(), it.next()) {
            (Some(c), None) => Some(c),
            _ => {
                problems.push(format!("{field}: letter id {s:?} must be a single character"));
                None
            }
        }
    };
    let mut alphabet = Vec::new();
    for (i, l) in raw.alphabet.iter().flatten().enumerate() {
        let id = match &l.id {
            Some(id) => single(&format!("alphabet[{i}].id"), id, problems),
            None => {
                problems.push(format!("missing field `alphabet[{i}].id`"));
                None
            }
        };
        let length = match l.length.as_ref().map(parse_length).transpose() {
            Ok(len) => len.unwrap_or(Rational64::from_integer(1)),
            Err(e) => {
                problems.push(format!("alphabet[{i}].{e}"));
                continue;
            }
        };
        if let Some(id) = id {
            alphabet.push(Letter::with_length(id, length));
        }
    }
    let mut rules = BTreeMap::new();
    for (from, to) in raw.rules.iter().flatten() {
        if let Some(c) = single("rules", from, problems) {
            rules.insert(c, to.clone());
        }
    }
    let seed = raw.seed.as_deref().and_then(|s| single("seed", s, problems));
    if missing || problems.len() > before {
        return None;
    }
    match SubstitutionSystem::new(alphabet, rules, seed?) {
        Ok(sys) => Some(sys),
        Err(e) => {
            problems.push(e.to_string());
            None
        }
    }
}

fn build_cut(section: Option<&CutProjectSection>, problems: &mut Vec<String>) -> Option<CutParams> {
    let Some(sec) = section else {
        problems.push("missing section `[cutproject]`".into());
        return None;
    };
    let n_max = match sec.n_max {
        None => 6,
        Some(n) if n >= 2 => n as usize,
        Some(n) => {
            problems.push(format!("cutproject.n_max must be >= 2, got {n}"));
            2
        }
    };
    let Some(theta) = &sec.theta else {
        problems.push("missing field `cutproject.theta`".into());
        return None;
    };
    let window = sec
        .window
        .clone()
        .unwrap_or([RawQuadratic::Integer(0), RawQuadratic::Integer(1)]);
    let built = (|| {
        let theta = theta.build()?;
        let lo = window[0].build()?;
        let hi = window[1].build()?;
        CutProjectData::new(theta, lo, hi)
    })();
    match built {
        Ok(data) => Some(CutParams {
            data,
            n_max,
            cases: sec.cases.unwrap_or(1000),
        }),
        Err(e) => {
            problems.push(format!("cutproject: {e}"));
            None
        }
    }
}

/// Parses and validates `text` for `command`, collecting every problem.
pub fn parse_config(text: &str, command: Command) -> Result<RunConfig, Problem> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Problem::Parse(e.to_string()))?;
    let mut problems = Vec::new();

    let needs_k_max = matches!(command, Command::Apg | Command::PvVerify)
        || (command == Command::Mixed && raw.mixed.as_ref().is_none_or(|m| m.matrix.is_none()));
    let needs_system = needs_k_max || command == Command::Derham;

    let k_max = match raw.k_max {
        Some(k) if k < 0 => {
            problems.push(format!("k_max must be >= 0, got {k}"));
            0
        }
        Some(k) => k as usize,
        None => {
            if needs_k_max {
                problems.push("missing field `k_max`".into());
            }
            0
        }
    };
    let system = if needs_system {
        build_system(&raw, &mut problems)
    } else {
        None
    };
    let cut = if command == Command::Cutproject {
        build_cut(raw.cutproject.as_ref(), &mut problems)
    } else {
        None
    };

    let pv = raw.pv.clone().unwrap_or_default();
    let pv = PvParams {
        samples: pv.samples.unwrap_or(200),
        trials: pv.trials.unwrap_or(1000),
    };
    if pv.samples == 0 || pv.trials == 0 {
        problems.push("pv.samples and pv.trials must be positive".into());
    }

    let mixed = raw.mixed.clone().unwrap_or_default();
    let mixed = MixedParams {
        matrix: mixed.matrix,
        tolerance: mixed.tolerance.unwrap_or(DEFAULT_TOLERANCE),
        conjugators: mixed.conjugators.unwrap_or(100),
    };
    if !(mixed.tolerance > 0.0 && mixed.tolerance < 1.0) {
        problems.push(format!("mixed.tolerance must lie in (0, 1), got {}", mixed.tolerance));
    }
    if let Some(m) = &mixed.matrix {
        if m.iter().any(|row| row.len() != m.len()) {
            problems.push("mixed.matrix must be square".into());
        }
    }

    let dr = raw.derham.clone().unwrap_or_default();
    let defaults = DeRhamConfig::default();
    let derham = DeRhamConfig {
        k: dr.k.unwrap_or(defaults.k),
        trials: dr.trials.unwrap_or(defaults.trials),
        tol: dr.tol.unwrap_or(defaults.tol),
        alpha_tol: dr.alpha_tol.unwrap_or(defaults.alpha_tol),
        partition_tol: dr.partition_tol.unwrap_or(defaults.partition_tol),
        patch_tiles: dr.patch_tiles.unwrap_or(defaults.patch_tiles),
        degree: dr.degree.unwrap_or(defaults.degree),
        fault: false,
    };
    if derham.trials == 0 {
        problems.push("derham.trials must be positive".into());
    }

    if !problems.is_empty() {
        return Err(Problem::Invalid(problems));
    }
    Ok(RunConfig {
        random_seed: raw.random_seed.unwrap_or(0),
        control_trials: dr.control_trials.unwrap_or(10).max(1),
        raw,
        system,
        k_max,
        pv,
        cut,
        mixed,
        derham,
    })
}
