use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{self, QVec, Rational};

/// `normal · x ≤ bound`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Halfspace {
    pub normal: QVec,
    pub bound: Rational,
}

impl Halfspace {
    pub fn new(normal: QVec, bound: Rational) -> Result<Self> {
        if normal.iter().all(|v| v.is_zero()) {
            return Err(Error::Domain("halfspace normal is zero".into()));
        }
        Ok(Halfspace { normal, bound })
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    /// `bound - normal·x`; nonnegative inside.
    pub fn slack(&self, x: &[Rational]) -> Rational {
        &self.bound - num::dot(&self.normal, x)
    }

    pub fn slack_f64(&self, x: &[f64]) -> f64 {
        num::to_f64(&self.bound) - self.normal.iter().zip(x).map(|(a, b)| num::to_f64(a) * b).sum::<f64>()
    }

    /// Positive rescaling with max-abs normal entry 1.
    pub fn canonical(&self) -> Halfspace {
        let m = self.normal.iter().map(|v| v.abs()).max().expect("nonzero normal");
        Halfspace { normal: self.normal.iter().map(|v| v / &m).collect(), bound: &self.bound / &m }
    }
}

#[derive(Clone, Debug, Default)]
pub struct HPolytope {
    pub dim: usize,
    pub inequalities: Vec<Halfspace>,
    pub label: String,
}

impl HPolytope {
    pub fn new(dim: usize, label: impl Into<String>) -> Self {
        HPolytope { dim, inequalities: Vec::new(), label: label.into() }
    }

    /// Adds `h` unless a positive multiple of it is already present.
    pub fn push(&mut self, h: Halfspace) -> Result<bool> {
        if h.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: h.dim() });
        }
        let c = h.canonical();
        if self.inequalities.iter().any(|g| g.canonical() == c) {
            return Ok(false);
        }
        self.inequalities.push(h);
        Ok(true)
    }

    pub fn contains(&self, x: &[Rational]) -> bool {
        self.inequalities.iter().all(|h| !h.slack(x).is_negative())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VPolytope {
    pub dim: usize,
    pub vertices: Vec<QVec>,
}

impl VPolytope {
    pub fn new(dim: usize, mut vertices: Vec<QVec>) -> Result<Self> {
        if let Some(v) = vertices.iter().find(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: v.len() });
        }
        vertices.sort();
        vertices.dedup();
        Ok(VPolytope { dim, vertices })
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        self.vertices.iter().map(|v| num::vec_to_f64(v)).collect()
    }
}

/// Serialized form of a halfspace with `"num/den"` strings.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct HalfspaceRecord {
    pub normal: Vec<String>,
    pub bound: String,
}

impl From<&Halfspace> for HalfspaceRecord {
    fn from(h: &Halfspace) -> Self {
        HalfspaceRecord { normal: h.normal.iter().map(num::format_q).collect(), bound: num::format_q(&h.bound) }
    }
}

impl TryFrom<&HalfspaceRecord> for Halfspace {
    type Error = Error;
    fn try_from(r: &HalfspaceRecord) -> Result<Self> {
        let parse = |s: &String| num::parse_q(s).ok_or_else(|| Error::Parse(format!("bad rational {s:?}")));
        Halfspace::new(r.normal.iter().map(parse).collect::<Result<_>>()?, parse(&r.bound)?)
    }
}
