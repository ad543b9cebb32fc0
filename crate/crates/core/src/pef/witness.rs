//! Protocol witness `W = (1/β) Σ_i log2 F(c_i, z_i)` and a simulated run.

use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::Pef;
use crate::behaviors::{JointBehavior, TrialLog};
use crate::error::{Error, Result};
use crate::rng;

/// `n Σ p_obs(c,z) log2 F(c,z) / β`. Cells at the floor contribute with the floor value.
pub fn witness_value(f: &Pef, p_obs: &[f64], n: f64) -> Result<f64> {
    if p_obs.len() != f.values.len() {
        return Err(Error::DimensionMismatch { expected: f.values.len(), got: p_obs.len() });
    }
    let s: f64 = p_obs.iter().zip(&f.values).filter(|(p, _)| **p > 0.0).map(|(p, v)| p * v.log2()).sum();
    Ok(n * s / f.beta)
}

pub fn witness_log(f: &Pef, log: &TrialLog) -> Result<f64> {
    let nc = log.scenario.num_c();
    let mut counts = vec![0u64; f.values.len()];
    for &(z, c) in &log.rounds {
        let i = z * nc + c;
        if i >= counts.len() {
            return Err(Error::DimensionMismatch { expected: f.values.len(), got: i + 1 });
        }
        counts[i] += 1;
    }
    Ok(witness_counts(f, &counts))
}

fn witness_counts(f: &Pef, counts: &[u64]) -> f64 {
    counts.iter().zip(&f.values).filter(|(k, _)| **k > 0).map(|(k, v)| *k as f64 * v.log2()).sum::<f64>() / f.beta
}

/// Acceptance threshold `t = E_p(W) − δ_t`.
pub fn threshold(f: &Pef, p: &JointBehavior, n: f64, delta_t: f64) -> Result<f64> {
    Ok(witness_value(f, &p.probs, n)? - delta_t)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Simulation {
    pub n: u64,
    pub counts: Vec<u64>,
    /// `None` when no rounds were run.
    pub witness: Option<f64>,
    pub threshold: f64,
    pub accept: bool,
}

/// Samples `n` IID rounds from `p` and applies the acceptance test.
pub fn simulate_protocol(p: &JointBehavior, f: &Pef, n: u64, seed: u64, delta_t: f64) -> Result<Simulation> {
    let t = threshold(f, p, n as f64, delta_t)?;
    if n == 0 {
        return Ok(Simulation { n, counts: vec![0; p.probs.len()], witness: None, threshold: t, accept: false });
    }
    let mut rng = rng::stream(seed, "protocol");
    let mut counts = vec![0u64; p.probs.len()];
    let mut left = n;
    let mut mass = 1.0f64;
    for (i, &q) in p.probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        if i + 1 == p.probs.len() || mass <= q {
            counts[i] = left;
            break;
        }
        let prob = (q / mass).clamp(0.0, 1.0);
        let k = Binomial::new(left, prob).map_err(|e| Error::Domain(e.to_string()))?.sample(&mut rng);
        counts[i] = k;
        left -= k;
        mass -= q;
    }
    let w = witness_counts(f, &counts);
    Ok(Simulation { n, counts, witness: Some(w), threshold: t, accept: w >= t })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behaviors::{OutputMap, Scenario};

    fn pef(values: Vec<f64>, beta: f64) -> Pef {
        Pef { values, beta, dmap: OutputMap::identity(&Scenario::bipartite()) }
    }

    #[test]
    fn constant_one_has_zero_witness() {
        let f = pef(vec![1.0; 16], 0.1);
        assert_eq!(witness_value(&f, &[1.0 / 16.0; 16], 1e6).unwrap(), 0.0);
    }

    #[test]
    fn point_mass_is_exact() {
        let sc = Scenario::bipartite();
        let mut probs = vec![0.0; 16];
        probs[5] = 1.0;
        let p = JointBehavior::new(sc, probs).unwrap();
        let mut v = vec![1.0; 16];
        v[5] = 1.5;
        let f = pef(v, 0.25);
        let s = simulate_protocol(&p, &f, 1000, 3, 0.0).unwrap();
        assert_eq!(s.counts[5], 1000);
        assert_eq!(s.witness.unwrap(), 1000.0 * 1.5f64.log2() / 0.25);
        assert!(s.accept);
    }

    #[test]
    fn zero_rounds_reject() {
        let p = JointBehavior::new(Scenario::bipartite(), vec![1.0 / 16.0; 16]).unwrap();
        let s = simulate_protocol(&p, &pef(vec![1.0; 16], 0.5), 0, 1, 0.0).unwrap();
        assert!(!s.accept && s.witness.is_none());
    }
}
