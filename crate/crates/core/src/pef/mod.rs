//! Probability estimation factors: validity, optimization and certificates.

pub mod bound;
pub mod certificate;
pub mod optimize;
pub mod witness;

use serde::{Deserialize, Serialize};

use crate::behaviors::OutputMap;
use crate::error::{Error, Result};
use crate::num::{self, QVec};

pub use bound::{bound_total, entropy_bound, grid_search, log_space, solve_grid, EntropyCertificate, GridPoint, GridResult, GridSpec};
pub use certificate::{verify_certificate, CertificateFile, CertifiedBound, VerifyFailure, CERTIFICATE_FORMAT};
pub use optimize::{optimize_pef, optimize_with_table, FactorTable, PefOptions, PefSolution};
pub use witness::{simulate_protocol, witness_value, Simulation};

pub const VALIDITY_TOL: f64 = 1e-9;

/// `F(c,z) ≥ 0` indexed `z·|C| + c`, with power `β`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pef {
    pub values: Vec<f64>,
    pub beta: f64,
    pub dmap: OutputMap,
}

/// Joint vertices `μ(c,z)` in floating point together with their
/// per-cell constraint factors.
#[derive(Clone, Debug)]
pub struct VertexSet {
    pub num_c: usize,
    pub num_z: usize,
    pub joint: Vec<Vec<f64>>,
}

impl VertexSet {
    pub fn new(num_c: usize, num_z: usize, joint: Vec<Vec<f64>>) -> Result<Self> {
        if joint.is_empty() {
            return Err(Error::Empty("vertex list".into()));
        }
        if let Some(v) = joint.iter().find(|v| v.len() != num_c * num_z) {
            return Err(Error::DimensionMismatch { expected: num_c * num_z, got: v.len() });
        }
        Ok(VertexSet { num_c, num_z, joint })
    }

    /// Conditional vertices `μ(c|z)` paired with a fixed input distribution.
    pub fn from_conditional(num_c: usize, verts: &[QVec], p_z: &[f64]) -> Result<Self> {
        let joint = verts
            .iter()
            .map(|v| v.iter().enumerate().map(|(i, q)| num::to_f64(q) * p_z[i / num_c]).collect())
            .collect();
        Self::new(num_c, p_z.len(), joint)
    }

    pub fn from_joint(num_c: usize, num_z: usize, verts: &[QVec]) -> Result<Self> {
        Self::new(num_c, num_z, verts.iter().map(|v| num::vec_to_f64(v)).collect())
    }

    pub fn len(&self) -> usize {
        self.joint.len()
    }

    pub fn is_empty(&self) -> bool {
        self.joint.is_empty()
    }

    /// Hash of the vertex coordinates as stored.
    pub fn fingerprint(&self) -> String {
        let mut bytes = Vec::with_capacity(self.joint.len() * self.num_c * self.num_z * 8 + 16);
        bytes.extend_from_slice(&(self.num_c as u64).to_le_bytes());
        bytes.extend_from_slice(&(self.num_z as u64).to_le_bytes());
        for v in &self.joint {
            for x in v {
                bytes.extend_from_slice(&x.to_bits().to_le_bytes());
            }
        }
        crate::io::sha256_hex(&bytes)
    }

    /// `a(c,z) = μ(c,z) μ(d(c)|z)^β`.
    pub fn factors(&self, k: usize, dmap: &OutputMap, beta: f64) -> Vec<f64> {
        let v = &self.joint[k];
        let nc = self.num_c;
        let mut out = vec![0.0; v.len()];
        let mut md = vec![0.0; dmap.num_d];
        for z in 0..self.num_z {
            let row = &v[z * nc..(z + 1) * nc];
            let mz: f64 = row.iter().sum();
            if mz <= 0.0 {
                continue;
            }
            md.iter_mut().for_each(|x| *x = 0.0);
            for (c, m) in row.iter().enumerate() {
                md[dmap.dmap[c]] += m;
            }
            for (c, m) in row.iter().enumerate() {
                let cond = (md[dmap.dmap[c]] / mz).min(1.0);
                out[z * nc + c] = if cond > 0.0 { m * cond.powf(beta) } else { 0.0 };
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Validity {
    Valid { worst: f64 },
    Violated { vertex: usize, value: f64 },
}

impl Validity {
    pub fn is_valid(&self) -> bool {
        matches!(self, Validity::Valid { .. })
    }
}

/// Checks `Σ F μ μ_D^β ≤ 1 + tol` at every vertex, with compensated sums.
pub fn verify_pef(f: &Pef, verts: &VertexSet, tol: f64) -> Result<Validity> {
    if f.values.len() != verts.num_c * verts.num_z {
        return Err(Error::DimensionMismatch { expected: verts.num_c * verts.num_z, got: f.values.len() });
    }
    if f.values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Ok(Validity::Violated { vertex: usize::MAX, value: f64::INFINITY });
    }
    let mut worst = f64::NEG_INFINITY;
    let mut worst_k = 0;
    for k in 0..verts.len() {
        let val = num::dot_f64(&verts.factors(k, &f.dmap, f.beta), &f.values);
        if val > worst {
            worst = val;
            worst_k = k;
        }
    }
    if worst > 1.0 + tol {
        Ok(Validity::Violated { vertex: worst_k, value: worst })
    } else {
        Ok(Validity::Valid { worst })
    }
}
