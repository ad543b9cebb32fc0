//! Polytopes carrying synchronized H- and V-representations.

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::bitset::{FacetSet, CAPACITY};
use super::dd;
use super::halfspace::{HPolytope, Halfspace, VPolytope};
use crate::error::{Error, Result};
use crate::num::{self, QVec, Rational};

/// Origin of a halfspace added after construction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutProvenance {
    pub algorithm: String,
    pub iteration: usize,
    pub seed: u64,
    #[serde(default)]
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CutOutcome {
    /// No vertex violated the cut; the H-representation is unchanged.
    Redundant,
    Inserted { removed: usize, added: usize },
}

#[derive(Clone, Debug)]
pub struct Polytope {
    pub dim: usize,
    pub label: String,
    pub halfspaces: Vec<Halfspace>,
    pub vertices: Vec<QVec>,
    /// `tight[k]` lists the halfspaces active at vertex `k`.
    pub tight: Vec<FacetSet>,
    /// Cuts applied after construction, including redundant ones.
    pub cuts: Vec<(Halfspace, CutProvenance, bool)>,
}

impl Polytope {
    pub fn from_h(h: &HPolytope) -> Result<Self> {
        let e = dd::enumerate(h)?;
        let mut p = Polytope {
            dim: h.dim,
            label: h.label.clone(),
            halfspaces: h.inequalities.clone(),
            vertices: e.vertices,
            tight: e.tight,
            cuts: Vec::new(),
        };
        p.sort_vertices();
        Ok(p)
    }

    fn sort_vertices(&mut self) {
        let mut idx: Vec<usize> = (0..self.vertices.len()).collect();
        idx.sort_by(|&a, &b| self.vertices[a].cmp(&self.vertices[b]));
        self.vertices = idx.iter().map(|&k| self.vertices[k].clone()).collect();
        self.tight = idx.iter().map(|&k| self.tight[k]).collect();
    }

    pub fn h_rep(&self) -> HPolytope {
        HPolytope { dim: self.dim, inequalities: self.halfspaces.clone(), label: self.label.clone() }
    }

    pub fn v_rep(&self) -> VPolytope {
        VPolytope { dim: self.dim, vertices: self.vertices.clone() }
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Intersects with `cut`, updating vertices from edges crossing its hyperplane.
    pub fn add_halfspace(&mut self, cut: Halfspace, provenance: CutProvenance) -> Result<CutOutcome> {
        if cut.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: cut.dim() });
        }
        let slack: Vec<Rational> = self.vertices.iter().map(|v| cut.slack(v)).collect();
        let violated = slack.iter().filter(|s| s.is_negative()).count();
        if violated == 0 {
            self.cuts.push((cut, provenance, false));
            return Ok(CutOutcome::Redundant);
        }
        if slack.iter().all(|s| s.is_negative()) {
            return Err(Error::Infeasible("cut removes the whole polytope".into()));
        }
        let j = self.halfspaces.len();
        if j >= CAPACITY {
            self.prune();
            if self.halfspaces.len() >= CAPACITY {
                return Err(Error::Unsupported(format!("more than {CAPACITY} facets")));
            }
            return self.add_halfspace(cut, provenance);
        }
        let d = self.dim;
        let kept = slack.iter().filter(|s| s.is_positive()).count();
        let removed: Vec<usize> = (0..slack.len()).filter(|&k| slack[k].is_negative()).collect();
        let neighbours = |w: usize| -> Vec<(QVec, FacetSet)> {
            // Any vertex witnessing non-adjacency of (u, w) shares the common face with w.
            let cand: Vec<(usize, FacetSet)> = (0..slack.len())
                .filter(|&r| r != w)
                .map(|r| (r, self.tight[r].and(&self.tight[w])))
                .filter(|(_, c)| c.len() + 1 >= d)
                .collect();
            let mut out = Vec::new();
            for (u, common) in &cand {
                let u = *u;
                if !slack[u].is_positive() {
                    continue;
                }
                let adjacent = if common.is_empty() {
                    self.vertices.len() == 2
                } else {
                    !cand.iter().any(|(r, _)| *r != u && self.tight[*r].is_superset(common))
                };
                if adjacent {
                    let t = &slack[u] / (&slack[u] - &slack[w]);
                    let v: QVec = self.vertices[u]
                        .iter()
                        .zip(&self.vertices[w])
                        .map(|(a, b)| if a == b { a.clone() } else { a + &t * (b - a) })
                        .collect();
                    let mut tight = *common;
                    tight.insert(j);
                    out.push((v, tight));
                }
            }
            out
        };
        #[cfg(feature = "parallel")]
        let fresh: Vec<(QVec, FacetSet)> = {
            use rayon::prelude::*;
            removed.par_iter().flat_map_iter(|&w| neighbours(w)).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let fresh: Vec<(QVec, FacetSet)> = removed.iter().flat_map(|&w| neighbours(w)).collect();
        let added = fresh.len();
        let mut vertices = Vec::with_capacity(kept + added);
        let mut tight = Vec::with_capacity(kept + added);
        for k in 0..slack.len() {
            if !slack[k].is_negative() {
                let mut t = self.tight[k];
                if slack[k].is_zero() {
                    t.insert(j);
                }
                vertices.push(std::mem::take(&mut self.vertices[k]));
                tight.push(t);
            }
        }
        for (v, t) in fresh {
            vertices.push(v);
            tight.push(t);
        }
        self.vertices = vertices;
        self.tight = tight;
        self.halfspaces.push(cut.clone());
        self.cuts.push((cut, provenance, true));
        self.sort_vertices();
        Ok(CutOutcome::Inserted { removed: removed.len(), added })
    }

    /// Drops halfspaces that do not define facets.
    pub fn prune(&mut self) -> usize {
        let keep: Vec<bool> = (0..self.halfspaces.len()).map(|j| self.is_facet(j)).collect();
        let mut map = vec![usize::MAX; keep.len()];
        let mut next = 0;
        for (j, k) in keep.iter().enumerate() {
            if *k {
                map[j] = next;
                next += 1;
            }
        }
        let dropped = keep.len() - next;
        if dropped == 0 {
            return 0;
        }
        self.halfspaces = self.halfspaces.iter().zip(&keep).filter(|(_, k)| **k).map(|(h, _)| h.clone()).collect();
        for t in self.tight.iter_mut() {
            *t = FacetSet::from_indices(t.iter().filter(|&f| map[f] != usize::MAX).map(|f| map[f]));
        }
        dropped
    }

    /// Tight vertices of halfspace `j` span an affine hyperplane.
    pub fn is_facet(&self, j: usize) -> bool {
        let pts: Vec<&QVec> = self.vertices.iter().zip(&self.tight).filter(|(_, t)| t.contains(j)).map(|(v, _)| v).collect();
        if pts.len() < self.dim {
            return false;
        }
        let diffs = || pts[1..].iter().map(|v| v.iter().zip(pts[0]).map(|(a, b)| a - b).collect::<QVec>());
        if modular_rank(diffs(), self.dim) + 1 >= self.dim {
            return true;
        }
        exact_rank(diffs().collect(), self.dim) + 1 >= self.dim
    }

    /// Cross-checks both representations in exact arithmetic.
    pub fn check(&self) -> Result<()> {
        for (v, t) in self.vertices.iter().zip(&self.tight) {
            for (j, h) in self.halfspaces.iter().enumerate() {
                let s = h.slack(v);
                if s.is_negative() || (s.is_zero() != t.contains(j)) {
                    return Err(Error::Soundness(format!("vertex/halfspace {j} incidence mismatch")));
                }
            }
        }
        Ok(())
    }
}

const PRIME: u64 = (1 << 61) - 1;

fn mod_of(q: &Rational) -> Option<u64> {
    let p = num_bigint::BigInt::from(PRIME);
    let n = q.numer() % &p;
    let d = q.denom() % &p;
    let to_u = |x: num_bigint::BigInt| -> u64 {
        let r = ((x % &p) + &p) % &p;
        r.try_into().unwrap()
    };
    let (n, d) = (to_u(n), to_u(d));
    if d == 0 {
        return None;
    }
    Some(mulmod(n, powmod(d, PRIME - 2)))
}

fn mulmod(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % PRIME as u128) as u64
}

fn powmod(mut a: u64, mut e: u64) -> u64 {
    let mut r = 1;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, a);
        }
        a = mulmod(a, a);
        e >>= 1;
    }
    r
}

/// Rank modulo a large prime with early exit at `cap`; never exceeds the true rank.
fn modular_rank(rows: impl Iterator<Item = QVec>, cap: usize) -> usize {
    let mut basis: Vec<(usize, Vec<u64>)> = Vec::new();
    for r in rows {
        let Some(mut v) = r.iter().map(mod_of).collect::<Option<Vec<u64>>>() else { continue };
        for (piv, b) in &basis {
            if v[*piv] != 0 {
                let f = mulmod(v[*piv], powmod(b[*piv], PRIME - 2));
                for k in 0..v.len() {
                    v[k] = (v[k] + PRIME - mulmod(f, b[k])) % PRIME;
                }
            }
        }
        if let Some(piv) = v.iter().position(|x| *x != 0) {
            basis.push((piv, v));
            if basis.len() >= cap {
                break;
            }
        }
    }
    basis.len()
}

fn exact_rank(rows: Vec<QVec>, cap: usize) -> usize {
    let mut basis: Vec<(usize, QVec)> = Vec::new();
    for mut v in rows {
        for (piv, b) in &basis {
            if !v[*piv].is_zero() {
                let f = &v[*piv] / &b[*piv];
                for k in 0..v.len() {
                    if !b[k].is_zero() {
                        v[k] = &v[k] - &f * &b[k];
                    }
                }
            }
        }
        if let Some(piv) = v.iter().position(|x| !x.is_zero()) {
            basis.push((piv, v));
            if basis.len() >= cap {
                break;
            }
        }
    }
    basis.len()
}

/// `½ Σ_{c,z} |u - v| / |Z|` on full conditional vectors.
pub fn tv_distance(u: &[f64], v: &[f64], num_z: usize) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch { expected: u.len(), got: v.len() });
    }
    Ok(0.5 * u.iter().zip(v).map(|(a, b)| (a - b).abs()).sum::<f64>() / num_z as f64)
}

pub fn rational_point(v: &[f64]) -> QVec {
    v.iter().map(|x| num::exact(*x)).collect()
}
