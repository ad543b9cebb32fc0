use num_bigint::BigInt;
use rand::Rng;

use super::behavior::{JointBehavior, TrialLog};
use crate::error::{Error, Result};
use crate::num::Rational;

fn counts(log: &TrialLog) -> Result<Vec<u64>> {
    if log.n() == 0 {
        return Err(Error::Empty("trial log has no rounds".into()));
    }
    let s = &log.scenario;
    let mut counts = vec![0u64; s.len()];
    for &(z, c) in &log.rounds {
        counts[s.index(c, z)] += 1;
    }
    Ok(counts)
}

/// Empirical frequencies `p̂(c,z) = #{i : (c_i, z_i) = (c, z)} / n`.
pub fn estimate_frequencies(log: &TrialLog) -> Result<JointBehavior> {
    let counts = counts(log)?;
    let n = log.n() as f64;
    JointBehavior::new(log.scenario.clone(), counts.iter().map(|&k| k as f64 / n).collect())
}

/// Exact rational frequencies; these sum to exactly one.
pub fn estimate_frequencies_exact(log: &TrialLog) -> Result<Vec<Rational>> {
    let counts = counts(log)?;
    let n = BigInt::from(log.n());
    Ok(counts.iter().map(|&k| Rational::new(BigInt::from(k), n.clone())).collect())
}

/// Draws `n` IID rounds from a joint behavior.
pub fn sample_log<R: Rng + ?Sized>(p: &JointBehavior, n: usize, rng: &mut R) -> TrialLog {
    let mut cdf = Vec::with_capacity(p.probs.len());
    let mut acc = 0.0;
    for &q in &p.probs {
        acc += q.max(0.0);
        cdf.push(acc);
    }
    let total = acc;
    let rounds = (0..n)
        .map(|_| {
            let u: f64 = rng.random::<f64>() * total;
            let i = cdf.partition_point(|&v| v <= u).min(cdf.len() - 1);
            let (c, z) = p.scenario.split(i);
            (z, c)
        })
        .collect();
    TrialLog { scenario: p.scenario.clone(), rounds }
}

/// Averaged total-variation distance `½ Σ |u - v|` between joint vectors.
pub fn tv_joint(u: &[f64], v: &[f64]) -> f64 {
    0.5 * u.iter().zip(v).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behaviors::{make_tilted_chsh, Scenario};
    use num_traits::One;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn point_masses() {
        let s = Scenario::bipartite();
        let one = estimate_frequencies(&TrialLog::new(s.clone(), vec![(2, 1)]).unwrap()).unwrap();
        assert_eq!(one.probs[s.index(1, 2)], 1.0);
        let two = estimate_frequencies(&TrialLog::new(s.clone(), vec![(2, 1), (0, 3)]).unwrap()).unwrap();
        assert_eq!(two.probs[s.index(1, 2)], 0.5);
        assert_eq!(two.probs[s.index(3, 0)], 0.5);
        assert!(estimate_frequencies(&TrialLog::new(s, vec![]).unwrap()).is_err());
    }

    #[test]
    fn exact_sums_to_one() {
        let s = Scenario::bipartite();
        let log = TrialLog::new(s, vec![(0, 0), (1, 2), (3, 3)]).unwrap();
        let f = estimate_frequencies_exact(&log).unwrap();
        assert!(f.iter().sum::<Rational>().is_one());
    }

    #[test]
    fn sampling_converges() {
        let p = JointBehavior::uniform_inputs(&make_tilted_chsh(1.0, 0.1).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 1_000_000;
        let f = estimate_frequencies(&sample_log(&p, n, &mut rng)).unwrap();
        let dev = f.probs.iter().zip(&p.probs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(dev <= 5.0 / (n as f64).sqrt());
        assert!(tv_joint(&f.probs, &p.probs) <= 0.01);
    }
}
