//! Behavior files (JSON) and trial logs (CSV).

use std::path::Path;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::behavior::{ConditionalBehavior, JointBehavior, TrialLog};
use super::scenario::Scenario;
use crate::error::{Error, Result};
use crate::io::{read_json, write_json};
use crate::num::{self, Rational};

pub const BEHAVIOR_FORMAT: &str = "dicert-behavior/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BehaviorKind {
    Conditional,
    Joint,
}

/// A probability given either as a JSON number or as an exact string
/// (`"0.0044"` or `"11/2500"`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProbValue {
    Number(f64),
    Exact(String),
}

impl ProbValue {
    pub fn to_f64(&self) -> Result<f64> {
        match self {
            ProbValue::Number(x) => Ok(*x),
            ProbValue::Exact(s) => Ok(num::to_f64(&parse_exact(s)?)),
        }
    }

    pub fn to_rational(&self) -> Result<Rational> {
        match self {
            ProbValue::Number(x) => Ok(num::exact(*x)),
            ProbValue::Exact(s) => parse_exact(s),
        }
    }
}

/// Parses `"a/b"`, an integer, or a plain decimal such as `"-0.0044"`.
pub fn parse_exact(s: &str) -> Result<Rational> {
    let t = s.trim();
    if t.contains('/') {
        return num::parse_q(t).ok_or_else(|| Error::Parse(format!("bad rational {t:?}")));
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, t),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(Error::Parse(format!("bad decimal {t:?}")));
    }
    let digits: BigInt = format!("0{int}{frac}").parse().map_err(|_| Error::Parse(t.into()))?;
    let den = num_traits::pow(BigInt::from(10), frac.len());
    let q = Rational::new(digits, den);
    Ok(if neg { -q } else { q })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub c: Vec<usize>,
    pub z: Vec<usize>,
    pub p: ProbValue,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputEntry {
    pub z: Vec<usize>,
    pub p: ProbValue,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BehaviorFile {
    pub format: String,
    pub scenario: Scenario,
    pub kind: BehaviorKind,
    #[serde(default)]
    pub provenance: serde_json::Value,
    pub entries: Vec<Entry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_marginal: Option<Vec<InputEntry>>,
}

/// A parsed behavior file.
#[derive(Clone, Debug, PartialEq)]
pub enum Loaded {
    Conditional(ConditionalBehavior),
    Joint(JointBehavior),
}

impl BehaviorFile {
    fn from_vector(scenario: &Scenario, kind: BehaviorKind, probs: &[f64], provenance: serde_json::Value) -> Self {
        let entries = (0..scenario.len())
            .map(|i| {
                let (c, z) = scenario.split(i);
                Entry { c: scenario.decode_c(c), z: scenario.decode_z(z), p: ProbValue::Number(probs[i]) }
            })
            .collect();
        BehaviorFile {
            format: BEHAVIOR_FORMAT.into(),
            scenario: scenario.clone(),
            kind,
            provenance,
            entries,
            input_marginal: None,
        }
    }

    pub fn conditional(b: &ConditionalBehavior, provenance: serde_json::Value) -> Self {
        Self::from_vector(&b.scenario, BehaviorKind::Conditional, &b.probs, provenance)
    }

    pub fn joint(b: &JointBehavior, provenance: serde_json::Value) -> Self {
        let mut f = Self::from_vector(&b.scenario, BehaviorKind::Joint, &b.probs, provenance);
        f.input_marginal = Some(
            b.input_marginal
                .iter()
                .enumerate()
                .map(|(z, &p)| InputEntry { z: b.scenario.decode_z(z), p: ProbValue::Number(p) })
                .collect(),
        );
        f
    }

    /// Exact entries in vector layout; missing entries are zero.
    pub fn exact_vector(&self) -> Result<Vec<Rational>> {
        let s = &self.scenario;
        let mut v = vec![Rational::zero(); s.len()];
        let mut seen = vec![false; s.len()];
        for e in &self.entries {
            let i = s.index(s.encode_c(&e.c)?, s.encode_z(&e.z)?);
            if seen[i] {
                return Err(Error::Parse(format!("duplicate entry c={:?} z={:?}", e.c, e.z)));
            }
            seen[i] = true;
            v[i] = e.p.to_rational()?;
        }
        Ok(v)
    }

    fn float_vector(&self) -> Result<Vec<f64>> {
        let s = &self.scenario;
        let mut v = vec![0.0; s.len()];
        for e in &self.entries {
            v[s.index(s.encode_c(&e.c)?, s.encode_z(&e.z)?)] = e.p.to_f64()?;
        }
        Ok(v)
    }

    pub fn load(&self) -> Result<Loaded> {
        if self.format != BEHAVIOR_FORMAT {
            return Err(Error::Parse(format!("unknown behavior format {:?}", self.format)));
        }
        let s = Scenario::new(self.scenario.inputs.clone(), self.scenario.outputs.clone())?;
        if s != self.scenario {
            return Err(Error::Parse("inconsistent scenario header".into()));
        }
        let probs = self.float_vector()?;
        match self.kind {
            BehaviorKind::Conditional => Ok(Loaded::Conditional(ConditionalBehavior::new(s, probs)?)),
            BehaviorKind::Joint => {
                let j = JointBehavior::new(s.clone(), probs)?;
                if let Some(im) = &self.input_marginal {
                    for e in im {
                        let z = s.encode_z(&e.z)?;
                        if (e.p.to_f64()? - j.input_marginal[z]).abs() > 1e-9 {
                            return Err(Error::Parse(format!("input marginal mismatch at z={:?}", e.z)));
                        }
                    }
                }
                Ok(Loaded::Joint(j))
            }
        }
    }

    /// Checks that every context of a conditional file sums to exactly one.
    pub fn exactly_normalized(&self) -> Result<bool> {
        let v = self.exact_vector()?;
        let nc = self.scenario.num_c();
        Ok(match self.kind {
            BehaviorKind::Conditional => v.chunks(nc).all(|b| b.iter().sum::<Rational>().is_one()),
            BehaviorKind::Joint => v.iter().sum::<Rational>().is_one(),
        })
    }
}

pub fn read_behavior_file(path: &Path) -> Result<BehaviorFile> {
    read_json(path)
}

pub fn read_behavior(path: &Path) -> Result<Loaded> {
    read_behavior_file(path)?.load()
}

pub fn write_behavior(path: &Path, file: &BehaviorFile) -> Result<()> {
    write_json(path, file)
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    round: usize,
    z: usize,
    c: usize,
}

/// Reads a `round,z,c` CSV; composite indices are mixed-radix with the first
/// party most significant.
pub fn read_trial_log(path: &Path, scenario: &Scenario) -> Result<TrialLog> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    if headers.iter().map(str::trim).collect::<Vec<_>>() != ["round", "z", "c"] {
        return Err(Error::Parse(format!("expected header round,z,c, got {:?}", headers)));
    }
    let mut rounds = Vec::new();
    for row in rdr.deserialize() {
        let r: Row = row?;
        rounds.push((r.z, r.c));
    }
    TrialLog::new(scenario.clone(), rounds)
}

pub fn write_trial_log(path: &Path, log: &TrialLog) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for (i, &(z, c)) in log.rounds.iter().enumerate() {
        w.serialize(Row { round: i, z, c })?;
    }
    if log.rounds.is_empty() {
        w.write_record(["round", "z", "c"])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    crate::io::write_atomic(path, &bytes)
}
