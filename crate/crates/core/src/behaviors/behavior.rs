use serde::{Deserialize, Serialize};

use super::scenario::Scenario;
use crate::error::{Error, Result};

/// Tolerance for normalization and no-signalling checks in float mode.
pub const FLOAT_TOL: f64 = 1e-12;

/// Conditional distribution `p(c|z)` stored as a full vector indexed `z*|C| + c`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionalBehavior {
    pub scenario: Scenario,
    pub probs: Vec<f64>,
}

impl ConditionalBehavior {
    pub fn new(scenario: Scenario, probs: Vec<f64>) -> Result<Self> {
        let b = Self::new_unchecked(scenario, probs)?;
        b.check_normalized(1e-9)?;
        Ok(b)
    }

    /// Only checks the length; used for cut normals and unnormalized points.
    pub fn new_unchecked(scenario: Scenario, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != scenario.len() {
            return Err(Error::DimensionMismatch { expected: scenario.len(), got: probs.len() });
        }
        Ok(ConditionalBehavior { scenario, probs })
    }

    pub fn uniform(scenario: &Scenario) -> Self {
        let v = 1.0 / scenario.num_c() as f64;
        ConditionalBehavior { scenario: scenario.clone(), probs: vec![v; scenario.len()] }
    }

    /// Deterministic local point given each party's response table
    /// `responses[party][input] = output`.
    pub fn deterministic(scenario: &Scenario, responses: &[Vec<usize>]) -> Self {
        let mut probs = vec![0.0; scenario.len()];
        for z in 0..scenario.num_z() {
            let zs = scenario.decode_z(z);
            let cs: Vec<usize> = zs.iter().enumerate().map(|(i, &x)| responses[i][x]).collect();
            let c = scenario.encode_c(&cs).unwrap();
            probs[scenario.index(c, z)] = 1.0;
        }
        ConditionalBehavior { scenario: scenario.clone(), probs }
    }

    #[inline]
    pub fn get(&self, c: usize, z: usize) -> f64 {
        self.probs[self.scenario.index(c, z)]
    }

    pub fn check_normalized(&self, tol: f64) -> Result<()> {
        let nc = self.scenario.num_c();
        for z in 0..self.scenario.num_z() {
            let block = &self.probs[z * nc..(z + 1) * nc];
            if let Some(p) = block.iter().find(|p| !p.is_finite() || **p < -tol || **p > 1.0 + tol) {
                return Err(Error::Domain(format!("probability {p} out of range in context {z}")));
            }
            let s: f64 = block.iter().sum();
            if (s - 1.0).abs() > tol {
                return Err(Error::Domain(format!("context {z} sums to {s}")));
            }
        }
        Ok(())
    }

    /// Largest violation of the no-signalling equalities.
    pub fn ns_violation(&self) -> f64 {
        let s = &self.scenario;
        let mut worst = 0.0f64;
        for subset in 1..(1usize << s.parties) {
            // marginal over `subset` must not depend on inputs outside it
            let mut seen: std::collections::HashMap<(Vec<usize>, Vec<usize>), f64> = Default::default();
            for z in 0..s.num_z() {
                let zs = s.decode_z(z);
                let mut acc: std::collections::HashMap<Vec<usize>, f64> = Default::default();
                for c in 0..s.num_c() {
                    let cs = s.decode_c(c);
                    let key: Vec<usize> = (0..s.parties).filter(|i| subset >> i & 1 == 1).map(|i| cs[i]).collect();
                    *acc.entry(key).or_default() += self.get(c, z);
                }
                let zkey: Vec<usize> = (0..s.parties).filter(|i| subset >> i & 1 == 1).map(|i| zs[i]).collect();
                for (ckey, v) in acc {
                    match seen.get(&(zkey.clone(), ckey.clone())) {
                        Some(prev) => worst = worst.max((prev - v).abs()),
                        None => {
                            seen.insert((zkey.clone(), ckey), v);
                        }
                    }
                }
            }
        }
        worst
    }

    pub fn is_no_signalling(&self, tol: f64) -> bool {
        self.ns_violation() <= tol
    }

    /// `(1-w)·self + w·other`.
    pub fn mix(&self, other: &Self, w: f64) -> Result<Self> {
        if self.scenario != other.scenario {
            return Err(Error::Domain("cannot mix behaviors of different scenarios".into()));
        }
        let probs = self.probs.iter().zip(&other.probs).map(|(a, b)| (1.0 - w) * a + w * b).collect();
        Ok(ConditionalBehavior { scenario: self.scenario.clone(), probs })
    }

    pub fn with_noise(&self, w: f64) -> Self {
        self.mix(&Self::uniform(&self.scenario), w).unwrap()
    }

    /// Marginal `p(d|z)` under an output map, laid out `z*|D| + d`.
    pub fn d_marginal(&self, dmap: &OutputMap) -> Vec<f64> {
        let nc = self.scenario.num_c();
        let mut out = vec![0.0; dmap.num_d * self.scenario.num_z()];
        for z in 0..self.scenario.num_z() {
            for c in 0..nc {
                out[z * dmap.num_d + dmap.dmap[c]] += self.probs[z * nc + c];
            }
        }
        out
    }
}

/// Joint distribution `p(c,z)` together with its input marginal `p(z)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointBehavior {
    pub scenario: Scenario,
    pub probs: Vec<f64>,
    pub input_marginal: Vec<f64>,
}

impl JointBehavior {
    pub fn new(scenario: Scenario, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != scenario.len() {
            return Err(Error::DimensionMismatch { expected: scenario.len(), got: probs.len() });
        }
        let nc = scenario.num_c();
        let input_marginal = (0..scenario.num_z()).map(|z| probs[z * nc..(z + 1) * nc].iter().sum()).collect();
        let j = JointBehavior { scenario, probs, input_marginal };
        j.check(1e-9)?;
        Ok(j)
    }

    pub fn from_conditional(cond: &ConditionalBehavior, p_z: &[f64]) -> Result<Self> {
        let s = &cond.scenario;
        if p_z.len() != s.num_z() {
            return Err(Error::DimensionMismatch { expected: s.num_z(), got: p_z.len() });
        }
        let probs = (0..s.len()).map(|i| cond.probs[i] * p_z[s.split(i).1]).collect();
        let j = JointBehavior { scenario: s.clone(), probs, input_marginal: p_z.to_vec() };
        j.check(1e-9)?;
        Ok(j)
    }

    /// Joint behavior with uniform inputs.
    pub fn uniform_inputs(cond: &ConditionalBehavior) -> Self {
        let nz = cond.scenario.num_z();
        Self::from_conditional(cond, &vec![1.0 / nz as f64; nz]).expect("uniform inputs are valid")
    }

    pub fn check(&self, tol: f64) -> Result<()> {
        let total: f64 = self.probs.iter().sum();
        if (total - 1.0).abs() > tol {
            return Err(Error::Domain(format!("joint behavior sums to {total}")));
        }
        let nc = self.scenario.num_c();
        for (z, pz) in self.input_marginal.iter().enumerate() {
            let block = &self.probs[z * nc..(z + 1) * nc];
            if block.iter().any(|&p| p < -tol || p > pz + tol) {
                return Err(Error::Domain(format!("entry outside [0, p(z)] in context {z}")));
            }
            let s: f64 = block.iter().sum();
            if (s - pz).abs() > tol {
                return Err(Error::Domain(format!("context {z} sums to {s}, expected {pz}")));
            }
        }
        Ok(())
    }

    /// `p(c|z)`; contexts with `p(z)=0` become uniform.
    pub fn conditional(&self) -> ConditionalBehavior {
        let nc = self.scenario.num_c();
        let mut probs = self.probs.clone();
        for (z, &pz) in self.input_marginal.iter().enumerate() {
            for p in &mut probs[z * nc..(z + 1) * nc] {
                *p = if pz > 0.0 { *p / pz } else { 1.0 / nc as f64 };
            }
        }
        ConditionalBehavior { scenario: self.scenario.clone(), probs }
    }

    pub fn mix(&self, other: &Self, w: f64) -> Result<Self> {
        if self.scenario != other.scenario {
            return Err(Error::Domain("cannot mix behaviors of different scenarios".into()));
        }
        let m = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (1.0 - w) * x + w * y).collect::<Vec<_>>();
        Ok(JointBehavior {
            scenario: self.scenario.clone(),
            probs: m(&self.probs, &other.probs),
            input_marginal: m(&self.input_marginal, &other.input_marginal),
        })
    }
}

/// Ordered record of `(z, c)` rounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialLog {
    pub scenario: Scenario,
    pub rounds: Vec<(usize, usize)>,
}

impl TrialLog {
    pub fn new(scenario: Scenario, rounds: Vec<(usize, usize)>) -> Result<Self> {
        let (nz, nc) = (scenario.num_z(), scenario.num_c());
        if let Some((i, r)) = rounds.iter().enumerate().find(|(_, (z, c))| *z >= nz || *c >= nc) {
            return Err(Error::Domain(format!("round {i} has out-of-range (z, c) = {r:?}")));
        }
        Ok(TrialLog { scenario, rounds })
    }

    pub fn n(&self) -> usize {
        self.rounds.len()
    }
}

/// Map from raw outputs `c` onto the certified variable `d`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputMap {
    pub dmap: Vec<usize>,
    pub num_d: usize,
    /// Parties whose outputs make up `d`, when built from a party subset.
    #[serde(default)]
    pub parties: Option<Vec<usize>>,
}

impl OutputMap {
    pub fn new(scenario: &Scenario, dmap: Vec<usize>) -> Result<Self> {
        if dmap.len() != scenario.num_c() {
            return Err(Error::DimensionMismatch { expected: scenario.num_c(), got: dmap.len() });
        }
        let num_d = dmap.iter().max().map_or(0, |m| m + 1);
        let mut hit = vec![false; num_d];
        for &d in &dmap {
            hit[d] = true;
        }
        if !hit.iter().all(|&h| h) {
            return Err(Error::Domain("output map is not surjective onto 0..|D|".into()));
        }
        Ok(OutputMap { dmap, num_d, parties: None })
    }

    /// `D = C`.
    pub fn identity(scenario: &Scenario) -> Self {
        let n = scenario.num_c();
        OutputMap { dmap: (0..n).collect(), num_d: n, parties: Some((0..scenario.parties).collect()) }
    }

    /// `D` is the joint output of the listed parties, e.g. `[0, 1]` for `AB`.
    pub fn parties(scenario: &Scenario, parties: &[usize]) -> Result<Self> {
        if parties.is_empty() || parties.iter().any(|&p| p >= scenario.parties) {
            return Err(Error::Domain(format!("invalid party subset {parties:?}")));
        }
        let radix: Vec<usize> = parties.iter().map(|&p| scenario.outputs[p]).collect();
        let dmap = (0..scenario.num_c())
            .map(|c| {
                let cs = scenario.decode_c(c);
                parties.iter().zip(&radix).fold(0, |acc, (&p, &r)| acc * r + cs[p])
            })
            .collect();
        let mut m = Self::new(scenario, dmap)?;
        m.parties = Some(parties.to_vec());
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_points_are_ns() {
        let s = Scenario::bipartite();
        let d = ConditionalBehavior::deterministic(&s, &[vec![0, 1], vec![1, 1]]);
        d.check_normalized(0.0).unwrap();
        assert!(d.is_no_signalling(0.0));
    }

    #[test]
    fn signalling_detected() {
        let s = Scenario::bipartite();
        let mut p = ConditionalBehavior::uniform(&s).probs;
        // context (x,y)=(0,0): A always 0; context (0,1): uniform
        p[..4].copy_from_slice(&[0.5, 0.5, 0.0, 0.0]);
        let b = ConditionalBehavior::new(s, p).unwrap();
        assert!(b.ns_violation() > 0.4);
    }

    #[test]
    fn output_map_parties() {
        let s = Scenario::tripartite();
        let m = OutputMap::parties(&s, &[0, 1]).unwrap();
        assert_eq!(m.num_d, 4);
        assert_eq!(m.dmap[s.encode_c(&[1, 0, 1]).unwrap()], 2);
        assert!(OutputMap::new(&s, vec![0; 8]).is_ok());
        assert!(OutputMap::new(&s, vec![1; 8]).is_err());
    }

    #[test]
    fn joint_round_trip() {
        let s = Scenario::bipartite();
        let u = ConditionalBehavior::uniform(&s);
        let j = JointBehavior::from_conditional(&u, &[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert!((j.probs.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let back = j.conditional();
        for (a, b) in back.probs.iter().zip(&u.probs) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(JointBehavior::from_conditional(&u, &[0.5, 0.5, 0.5, 0.5]).is_err());
    }

    #[test]
    fn trial_log_ranges() {
        let s = Scenario::bipartite();
        assert!(TrialLog::new(s.clone(), vec![(3, 3)]).is_ok());
        assert!(TrialLog::new(s, vec![(4, 0)]).is_err());
    }
}
