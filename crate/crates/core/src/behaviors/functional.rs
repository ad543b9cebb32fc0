//! Linear functionals on behaviors: Bell expressions and the MDL inequality.

use serde::{Deserialize, Serialize};

use super::behavior::{ConditionalBehavior, JointBehavior};
use super::scenario::Scenario;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    /// Acts on `p(c|z)`.
    Conditional,
    /// Acts on `p(c,z)`.
    Joint,
}

/// `value(p) = coeffs · p + offset` over the full behavior vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Functional {
    pub name: String,
    pub scenario: Scenario,
    pub domain: Domain,
    pub coeffs: Vec<f64>,
    pub offset: f64,
}

impl Functional {
    pub fn new(name: impl Into<String>, scenario: &Scenario, domain: Domain, coeffs: Vec<f64>, offset: f64) -> Result<Self> {
        if coeffs.len() != scenario.len() {
            return Err(Error::DimensionMismatch { expected: scenario.len(), got: coeffs.len() });
        }
        Ok(Functional { name: name.into(), scenario: scenario.clone(), domain, coeffs, offset })
    }

    pub fn eval(&self, v: &[f64]) -> Result<f64> {
        if v.len() != self.coeffs.len() {
            return Err(Error::DimensionMismatch { expected: self.coeffs.len(), got: v.len() });
        }
        Ok(self.offset + self.coeffs.iter().zip(v).map(|(a, b)| a * b).sum::<f64>())
    }

    pub fn negated(&self) -> Self {
        Functional {
            name: format!("-{}", self.name),
            scenario: self.scenario.clone(),
            domain: self.domain,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
            offset: -self.offset,
        }
    }

    /// Full-party correlator `<Π_i A_i^{z_i}>` for context `z`, as a
    /// conditional functional.
    pub fn correlator(scenario: &Scenario, z: &[usize]) -> Result<Self> {
        let zi = scenario.encode_z(z)?;
        let mut coeffs = vec![0.0; scenario.len()];
        for c in 0..scenario.num_c() {
            let ones = scenario.decode_c(c).iter().filter(|&&x| x == 1).count();
            coeffs[scenario.index(c, zi)] = if ones % 2 == 0 { 1.0 } else { -1.0 };
        }
        Self::new(format!("E{z:?}"), scenario, Domain::Conditional, coeffs, 0.0)
    }

    /// `Σ_k w_k <A^{z_k}>` for full-party correlators.
    pub fn correlator_sum(name: &str, scenario: &Scenario, terms: &[(Vec<usize>, f64)]) -> Result<Self> {
        let mut coeffs = vec![0.0; scenario.len()];
        for (z, w) in terms {
            let e = Self::correlator(scenario, z)?;
            for (a, b) in coeffs.iter_mut().zip(&e.coeffs) {
                *a += w * b;
            }
        }
        Self::new(name, scenario, Domain::Conditional, coeffs, 0.0)
    }
}

pub fn bell_value(p: &ConditionalBehavior, f: &Functional) -> Result<f64> {
    if f.domain != Domain::Conditional {
        return Err(Error::Domain(format!("{} acts on joint behaviors", f.name)));
    }
    f.eval(&p.probs)
}

pub fn bell_value_joint(p: &JointBehavior, f: &Functional) -> Result<f64> {
    if f.domain != Domain::Joint {
        return Err(Error::Domain(format!("{} acts on conditional behaviors", f.name)));
    }
    f.eval(&p.probs)
}

/// `α<A0B0> + α<A0B1> + <A1B0> - <A1B1>`.
pub fn chsh_alpha(alpha: f64) -> Functional {
    let s = Scenario::bipartite();
    let name = if alpha == 1.0 { "CHSH".to_string() } else { format!("CHSH_{alpha}") };
    Functional::correlator_sum(
        &name,
        &s,
        &[(vec![0, 0], alpha), (vec![0, 1], alpha), (vec![1, 0], 1.0), (vec![1, 1], -1.0)],
    )
    .unwrap()
}

pub fn chsh() -> Functional {
    chsh_alpha(1.0)
}

/// The eight relabelings `Σ_{xy} (-1)^{xy ⊕ ux ⊕ vy ⊕ w} <A_xB_y>`, indexed by `k = 4u + 2v + w`.
pub fn chsh_variant(k: usize) -> Functional {
    assert!(k < 8);
    let (u, v, w) = (k >> 2 & 1, k >> 1 & 1, k & 1);
    let s = Scenario::bipartite();
    let terms: Vec<(Vec<usize>, f64)> = (0..4)
        .map(|xy| {
            let (x, y) = (xy >> 1, xy & 1);
            let parity = (x & y) ^ (u & x) ^ (v & y) ^ w;
            (vec![x, y], if parity == 0 { 1.0 } else { -1.0 })
        })
        .collect();
    Functional::correlator_sum(&format!("CHSH#{k}"), &s, &terms).unwrap()
}

/// `<A0B0C0> - <A0B1C1> - <A1B0C1> - <A1B1C0>`.
pub fn mermin() -> Functional {
    Functional::correlator_sum(
        "Mermin",
        &Scenario::tripartite(),
        &[(vec![0, 0, 0], 1.0), (vec![0, 1, 1], -1.0), (vec![1, 0, 1], -1.0), (vec![1, 1, 0], -1.0)],
    )
    .unwrap()
}

/// Mermin expression with all outcome labels of one party swapped,
/// equivalently its negation.
pub fn mermin_flipped() -> Functional {
    let mut f = mermin().negated();
    f.name = "Mermin'".into();
    f
}

/// Lifted CHSH inequalities for three parties, written as `f(p) ≤ 0`:
/// `Σ ±<A_xB_y>_{c|z} - bound·p(c|z) ≤ 0` for every pair of parties, every
/// outcome/input `(c, z)` of the remaining party, and every CHSH relabeling.
pub fn lifted_chsh(bound: f64) -> Vec<Functional> {
    let s = Scenario::tripartite();
    let mut out = Vec::new();
    for third in (0..3).rev() {
        let pair: Vec<usize> = (0..3).filter(|&p| p != third).collect();
        for zk in 0..2 {
            for ck in 0..2 {
                for k in 0..8 {
                    let base = chsh_variant(k);
                    let mut coeffs = vec![0.0; s.len()];
                    for c in 0..s.num_c() {
                        let cs = s.decode_c(c);
                        if cs[third] != ck {
                            continue;
                        }
                        for z in 0..s.num_z() {
                            let zs = s.decode_z(z);
                            if zs[third] != zk {
                                continue;
                            }
                            let bc = cs[pair[0]] * 2 + cs[pair[1]];
                            let bz = zs[pair[0]] * 2 + zs[pair[1]];
                            let i = s.index(c, z);
                            coeffs[i] += base.coeffs[bz * 4 + bc];
                            // p(c|z) averaged over the four pair contexts
                            coeffs[i] -= bound / 4.0;
                        }
                    }
                    out.push(
                        Functional::new(format!("liftedCHSH#{k}[{third}:{ck}|{zk}]"), &s, Domain::Conditional, coeffs, 0.0)
                            .unwrap(),
                    );
                }
            }
        }
    }
    out
}

/// MDL expression on `p(a,b,x,y)`:
/// `p(0000)(1/2-δ)^2 - (p(0101)+p(1010)+p(0011))(1/2+δ)^2`.
pub fn mdl(delta: f64) -> Functional {
    let s = Scenario::bipartite();
    let mut coeffs = vec![0.0; s.len()];
    let idx = |a: usize, b: usize, x: usize, y: usize| s.index(a * 2 + b, x * 2 + y);
    coeffs[idx(0, 0, 0, 0)] = (0.5 - delta).powi(2);
    for (a, b, x, y) in [(0, 1, 0, 1), (1, 0, 1, 0), (0, 0, 1, 1)] {
        coeffs[idx(a, b, x, y)] = -(0.5 + delta).powi(2);
    }
    Functional::new(format!("MDL_{delta}"), &s, Domain::Joint, coeffs, 0.0).unwrap()
}
