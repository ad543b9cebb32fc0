//! Polytope files with exact rationals and cut provenance.

use std::path::Path;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::bitset::FacetSet;
use super::halfspace::{Halfspace, HalfspaceRecord};
use super::incremental::{CutProvenance, Polytope};
use crate::error::{Error, Result};
use crate::num::{self, QVec};

pub const POLYTOPE_FORMAT: &str = "dicert-polytope/1";

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CutEntry {
    pub halfspace: HalfspaceRecord,
    pub provenance: CutProvenance,
    pub inserted: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PolytopeFile {
    pub format: String,
    pub chart: String,
    pub label: String,
    pub dim: usize,
    pub fingerprint: String,
    pub halfspaces: Vec<HalfspaceRecord>,
    pub vertices: Vec<Vec<String>>,
    pub cuts: Vec<CutEntry>,
}

fn vertex_strings(vs: &[QVec]) -> Vec<Vec<String>> {
    vs.iter().map(|v| v.iter().map(num::format_q).collect()).collect()
}

/// SHA-256 over the sorted vertex list and the applied cuts.
pub fn fingerprint(vertices: &[Vec<String>], cuts: &[CutEntry]) -> String {
    let mut sorted = vertices.to_vec();
    sorted.sort();
    let body = serde_json::to_vec(&(sorted, cuts)).expect("serializable");
    crate::io::sha256_hex(&body)
}

impl PolytopeFile {
    pub fn from_polytope(p: &Polytope, chart: &str) -> Self {
        let vertices = vertex_strings(&p.vertices);
        let cuts: Vec<CutEntry> = p
            .cuts
            .iter()
            .map(|(h, prov, ins)| CutEntry { halfspace: h.into(), provenance: prov.clone(), inserted: *ins })
            .collect();
        PolytopeFile {
            format: POLYTOPE_FORMAT.into(),
            chart: chart.into(),
            label: p.label.clone(),
            dim: p.dim,
            fingerprint: fingerprint(&vertices, &cuts),
            halfspaces: p.halfspaces.iter().map(HalfspaceRecord::from).collect(),
            vertices,
            cuts,
        }
    }

    pub fn to_polytope(&self) -> Result<Polytope> {
        if self.format != POLYTOPE_FORMAT {
            return Err(Error::Parse(format!("unknown polytope format {:?}", self.format)));
        }
        if fingerprint(&self.vertices, &self.cuts) != self.fingerprint {
            return Err(Error::Parse("polytope fingerprint does not match its contents".into()));
        }
        let halfspaces: Vec<Halfspace> = self.halfspaces.iter().map(Halfspace::try_from).collect::<Result<_>>()?;
        let vertices: Vec<QVec> = self
            .vertices
            .iter()
            .map(|v| v.iter().map(|s| num::parse_q(s).ok_or_else(|| Error::Parse(format!("bad rational {s:?}")))).collect())
            .collect::<Result<_>>()?;
        let mut tight = Vec::with_capacity(vertices.len());
        for v in &vertices {
            if v.len() != self.dim {
                return Err(Error::DimensionMismatch { expected: self.dim, got: v.len() });
            }
            tight.push(FacetSet::from_indices(halfspaces.iter().enumerate().filter(|(_, h)| h.slack(v).is_zero()).map(|(j, _)| j)));
        }
        let cuts = self
            .cuts
            .iter()
            .map(|c| Ok((Halfspace::try_from(&c.halfspace)?, c.provenance.clone(), c.inserted)))
            .collect::<Result<_>>()?;
        let p = Polytope { dim: self.dim, label: self.label.clone(), halfspaces, vertices, tight, cuts };
        p.check()?;
        Ok(p)
    }
}

pub fn write_polytope(path: &Path, p: &Polytope, chart: &str) -> Result<PolytopeFile> {
    let f = PolytopeFile::from_polytope(p, chart);
    crate::io::write_json(path, &f)?;
    Ok(f)
}

pub fn read_polytope(path: &Path) -> Result<(Polytope, PolytopeFile)> {
    let f: PolytopeFile = crate::io::read_json(path)?;
    Ok((f.to_polytope()?, f))
}
