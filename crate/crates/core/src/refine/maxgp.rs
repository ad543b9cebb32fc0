//! Refinement by cutting supra-quantum components of optimal guessing strategies.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::guessing::{guessing_probability, single_input, Guessing};
use super::{apply_cut, separate, IterationRecord, Refinement, RefinementConfig};
use crate::behaviors::{Chart, ConditionalBehavior, OutputMap};
use crate::error::{Error, Result};
use crate::polytope::{CutProvenance, Polytope};
use crate::quantum::{membership, MomentStructure};

pub const ALGORITHM: &str = "maxgp";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ZPolicy {
    /// Sample `z ~ p(z)` each iteration.
    #[default]
    Random,
    /// The input with the largest current guessing probability.
    MaxPguess,
    Fixed(usize),
    /// Guess averaged over `p(z)`.
    Averaged,
}

fn sample_z<R: Rng + ?Sized>(p_z: &[f64], rng: &mut R) -> usize {
    let mut u = rng.random::<f64>() * p_z.iter().sum::<f64>();
    for (z, w) in p_z.iter().enumerate() {
        if u < *w {
            return z;
        }
        u -= w;
    }
    p_z.len() - 1
}

pub fn maxgp(
    p: &ConditionalBehavior,
    p_z: &[f64],
    p_in: &Polytope,
    cfg: &RefinementConfig,
    dmap: &OutputMap,
) -> Result<Refinement> {
    let sc = &p.scenario;
    let nz = sc.num_z();
    if p_z.len() != nz || p_z.iter().any(|w| *w < 0.0) || (p_z.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Domain("input distribution must be a distribution over Z".into()));
    }
    let chart = Chart::collins_gisin(sc)?;
    let s = MomentStructure::new(sc, cfg.level)?;
    let mut rng = crate::rng::stream(cfg.seed, ALGORITHM);
    let mut poly = p_in.clone();
    let mut cuts = Vec::new();
    let mut log = Vec::new();

    for it in 0..cfg.iterations {
        let before = poly.num_vertices();
        let (z, guess): (Option<usize>, Guessing) = match cfg.z_policy {
            ZPolicy::Random => {
                let z = sample_z(p_z, &mut rng);
                (Some(z), guessing_probability(p, &single_input(nz, z), &poly.halfspaces, &chart, dmap, cfg.min_weight)?)
            }
            ZPolicy::Fixed(z) => {
                if z >= nz {
                    return Err(Error::Domain(format!("input {z} out of range")));
                }
                (Some(z), guessing_probability(p, &single_input(nz, z), &poly.halfspaces, &chart, dmap, cfg.min_weight)?)
            }
            ZPolicy::MaxPguess => {
                let mut best: Option<(usize, Guessing)> = None;
                for z in 0..nz {
                    let g = guessing_probability(p, &single_input(nz, z), &poly.halfspaces, &chart, dmap, cfg.min_weight)?;
                    if best.as_ref().is_none_or(|(_, b)| g.pguess > b.pguess) {
                        best = Some((z, g));
                    }
                }
                let (z, g) = best.expect("at least one input");
                (Some(z), g)
            }
            ZPolicy::Averaged => (None, guessing_probability(p, p_z, &poly.halfspaces, &chart, dmap, cfg.min_weight)?),
        };
        let mut rec = IterationRecord {
            algorithm: ALGORITHM.into(),
            iteration: it,
            input: z,
            pguess: Some(guess.pguess),
            vertices_before: before,
            vertices_after: before,
            nonquantum_seen: 0,
            cuts: Vec::new(),
        };
        for st in &guess.strategies {
            if membership(&st.behavior, &s, cfg.membership_tol)?.is_inside() {
                continue;
            }
            rec.nonquantum_seen += 1;
            if let Some(cut) = separate(&st.behavior.probs, None, &s, cfg.metric)? {
                let source = format!("strategy d={}", st.guess);
                let prov = CutProvenance { algorithm: ALGORITHM.into(), iteration: it, seed: cfg.seed, note: source.clone() };
                let r = apply_cut(&mut poly, &chart, &cut, prov, source, st.behavior.probs.clone())?;
                rec.cuts.push(r.clone());
                cuts.push(r);
            }
        }
        rec.vertices_after = poly.num_vertices();
        log.push(rec);
    }
    Ok(Refinement { polytope: poly, cuts, log })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behaviors::{make_tilted_chsh, Scenario};
    use crate::num;
    use crate::polytope::ns_polytope;

    #[test]
    fn guessing_probability_decreases() {
        let sc = Scenario::bipartite();
        let p = make_tilted_chsh(1.0, 0.15).unwrap();
        let ns = Polytope::from_h(&ns_polytope(&sc).unwrap()).unwrap();
        let dmap = OutputMap::identity(&sc);
        let cfg = RefinementConfig { iterations: 3, z_policy: ZPolicy::Fixed(0), seed: 1, ..Default::default() };
        let r = maxgp(&p, &[0.25; 4], &ns, &cfg, &dmap).unwrap();
        assert!(!r.cuts.is_empty());
        let chart = Chart::collins_gisin(&sc).unwrap();
        let g0 = guessing_probability(&p, &single_input(4, 0), &ns.halfspaces, &chart, &dmap, 1e-9).unwrap();
        let g1 = guessing_probability(&p, &single_input(4, 0), &r.polytope.halfspaces, &chart, &dmap, 1e-9).unwrap();
        assert!(g1.pguess < g0.pguess - 1e-3, "{} vs {}", g1.pguess, g0.pguess);
        for c in &r.cuts {
            let b = num::vec_to_f64(&c.coeffs());
            assert!(num::dot_f64(&b, &p.probs) <= num::to_f64(&c.bound()));
        }
    }
}
