//! Refinement by cutting non-quantum vertices close to the typical behavior.

use std::collections::HashMap;

use rand::Rng;

use super::{apply_cut, separate, IterationRecord, Refinement, RefinementConfig, Selection};
use crate::behaviors::{Chart, ConditionalBehavior};
use crate::error::{Error, Result};
use crate::num::{self, QVec};
use crate::polytope::sets::is_deterministic;
use crate::polytope::{tv_distance, CutProvenance, Polytope};
use crate::quantum::{membership, MomentStructure};

pub const ALGORITHM: &str = "nearv";

pub fn nearv(p: &ConditionalBehavior, p_in: &Polytope, cfg: &RefinementConfig) -> Result<Refinement> {
    let sc = &p.scenario;
    let chart = Chart::collins_gisin(sc)?;
    if p_in.dim != chart.dim() {
        return Err(Error::DimensionMismatch { expected: chart.dim(), got: p_in.dim });
    }
    let s = MomentStructure::new(sc, cfg.level)?;
    let mut rng = crate::rng::stream(cfg.seed, ALGORITHM);
    let mut poly = p_in.clone();
    let mut cuts = Vec::new();
    let mut log = Vec::new();
    let mut inside: HashMap<QVec, bool> = HashMap::new();
    let nz = sc.num_z();

    for it in 0..cfg.iterations {
        let before = poly.num_vertices();
        let full: Vec<Vec<f64>> = poly.vertices.iter().map(|v| chart.to_full(&num::vec_to_f64(v))).collect::<Result<_>>()?;
        let dist: Vec<f64> = full.iter().map(|v| tv_distance(v, &p.probs, nz)).collect::<Result<_>>()?;
        let mut order: Vec<usize> = (0..full.len()).collect();
        order.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]));
        let mut near = Vec::new();
        for &k in &order {
            let key = &poly.vertices[k];
            let is_in = match inside.get(key) {
                Some(v) => *v,
                None => {
                    let exact = chart.to_full_q(key)?;
                    let r = is_deterministic(&exact) || {
                        let mu = ConditionalBehavior::new_unchecked(sc.clone(), full[k].clone())?;
                        membership(&mu, &s, cfg.membership_tol)?.is_inside()
                    };
                    inside.insert(key.clone(), r);
                    r
                }
            };
            if !is_in {
                near.push(k);
                if near.len() == cfg.nearest {
                    break;
                }
            }
        }
        let mut rec = IterationRecord {
            algorithm: ALGORITHM.into(),
            iteration: it,
            input: None,
            pguess: None,
            vertices_before: before,
            vertices_after: before,
            nonquantum_seen: near.len(),
            cuts: Vec::new(),
        };
        if near.is_empty() {
            log.push(rec);
            break;
        }
        let pick = choose(&near, &dist, cfg.selection, &mut rng);
        let exact = chart.to_full_q(&poly.vertices[pick])?;
        match separate(&full[pick], Some(&exact), &s, cfg.metric)? {
            Some(cut) => {
                let prov = CutProvenance { algorithm: ALGORITHM.into(), iteration: it, seed: cfg.seed, note: "vertex".into() };
                let r = apply_cut(&mut poly, &chart, &cut, prov, "vertex".into(), full[pick].clone())?;
                rec.cuts.push(r.clone());
                cuts.push(r);
            }
            None => {
                inside.insert(poly.vertices[pick].clone(), true);
            }
        }
        rec.vertices_after = poly.num_vertices();
        log.push(rec);
    }
    Ok(Refinement { polytope: poly, cuts, log })
}

fn choose<R: Rng + ?Sized>(near: &[usize], dist: &[f64], sel: Selection, rng: &mut R) -> usize {
    if near.len() == 1 {
        return near[0];
    }
    if let Some(&k) = near.iter().find(|&&k| dist[k] == 0.0) {
        return k;
    }
    let w: Vec<f64> = match sel {
        Selection::InverseDistance => near.iter().map(|&k| 1.0 / dist[k]).collect(),
        Selection::Uniform => vec![1.0; near.len()],
    };
    let total: f64 = w.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (k, wk) in near.iter().zip(&w) {
        if u < *wk {
            return *k;
        }
        u -= wk;
    }
    *near.last().expect("nonempty")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behaviors::{make_tilted_chsh, Scenario};
    use crate::polytope::ns_polytope;

    #[test]
    fn cuts_respect_quantum_behavior() {
        let sc = Scenario::bipartite();
        let p = make_tilted_chsh(1.0, 0.15).unwrap();
        let ns = Polytope::from_h(&ns_polytope(&sc).unwrap()).unwrap();
        let cfg = RefinementConfig { iterations: 4, nearest: 4, seed: 3, ..Default::default() };
        let r = nearv(&p, &ns, &cfg).unwrap();
        assert!(!r.cuts.is_empty());
        for c in &r.cuts {
            let b = num::vec_to_f64(&c.coeffs());
            assert!(num::dot_f64(&b, &p.probs) <= num::to_f64(&c.bound()));
            assert!(c.violation > 0.0);
        }
        r.polytope.check().unwrap();
        let again = nearv(&p, &ns, &cfg).unwrap();
        assert_eq!(again.polytope.vertices, r.polytope.vertices);
    }
}
