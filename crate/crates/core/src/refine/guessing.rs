//! Optimal adversarial decompositions over a polytope.

use crate::behaviors::{Chart, ConditionalBehavior, OutputMap};
use crate::error::{Error, Result};
use crate::num;
use crate::polytope::Halfspace;
use crate::quantum::sdp::{solve_sdp, Block, SdpProblem, SdpSettings, Status};

/// One component `q_d μ_d` of a decomposition; the adversary guesses `d`.
#[derive(Clone, Debug)]
pub struct Strategy {
    pub guess: usize,
    pub weight: f64,
    pub behavior: ConditionalBehavior,
}

#[derive(Clone, Debug)]
pub struct Guessing {
    pub pguess: f64,
    /// Strategies with weight at least the requested floor.
    pub strategies: Vec<Strategy>,
}

const OUTSIDE_TOL: f64 = 1e-7;

/// Maximizes `Σ_z w_z Σ_d μ̃_d(d|z)` over decompositions `p = Σ_d μ̃_d`
/// with each `μ̃_d` in the cone over `{x : h·x ≤ η}` (chart coordinates).
///
/// `zweights` selects the inputs scored: a unit vector for a fixed input,
/// or `p(z)` for the input-averaged variant.
pub fn guessing_probability(
    p: &ConditionalBehavior,
    zweights: &[f64],
    halfspaces: &[Halfspace],
    chart: &Chart,
    dmap: &OutputMap,
    min_weight: f64,
) -> Result<Guessing> {
    let sc = &p.scenario;
    if zweights.len() != sc.num_z() || dmap.dmap.len() != sc.num_c() || chart.scenario != *sc {
        return Err(Error::Domain("guessing problem dimensions disagree".into()));
    }
    let dim = chart.dim();
    let nd = dmap.num_d;
    let last = nd - 1;
    let xp = chart.from_full(&p.probs)?;
    if let Some(h) = halfspaces.iter().find(|h| h.slack_f64(&xp) < -OUTSIDE_TOL) {
        return Err(Error::Infeasible(format!("behavior violates a polytope inequality by {:e}", -h.slack_f64(&xp))));
    }
    let nc = sc.num_c();
    // score of strategy d: t_d·o[d] + g[d]·x̃_d
    let mut o = vec![0.0; nd];
    let mut g = vec![vec![0.0; dim]; nd];
    for (z, w) in zweights.iter().enumerate() {
        if *w == 0.0 {
            continue;
        }
        for c in 0..nc {
            let i = z * nc + c;
            let d = dmap.dmap[c];
            o[d] += w * chart.offset()[i];
            for (gk, lk) in g[d].iter_mut().zip(chart.row(i)) {
                *gk += w * lk;
            }
        }
    }
    let hs: Vec<(Vec<f64>, f64)> =
        halfspaces.iter().map(|h| (num::vec_to_f64(&h.normal), num::to_f64(&h.bound))).collect();
    let m = hs.len();

    let mut prob = SdpProblem::default();
    let blk = prob.add_block(Block::Diag(nd * (m + 1)));
    let mut xv = vec![Vec::new(); last];
    let mut tv = vec![0; last];
    for d in 0..last {
        xv[d] = (0..dim).map(|k| prob.add_var(g[d][k] - g[last][k])).collect();
        tv[d] = prob.add_var(o[d] - o[last]);
    }
    let const_obj = o[last] + g[last].iter().zip(&xp).map(|(a, b)| a * b).sum::<f64>();
    for d in 0..nd {
        let base = d * (m + 1);
        for (j, (h, eta)) in hs.iter().enumerate() {
            let r = base + j;
            if d < last {
                prob.add_coef(tv[d], blk, r, r, *eta);
                for k in 0..dim {
                    prob.add_coef(xv[d][k], blk, r, r, -h[k]);
                }
            } else {
                prob.add_const(blk, r, r, eta - h.iter().zip(&xp).map(|(a, b)| a * b).sum::<f64>());
                for e in 0..last {
                    prob.add_coef(tv[e], blk, r, r, -eta);
                    for k in 0..dim {
                        prob.add_coef(xv[e][k], blk, r, r, h[k]);
                    }
                }
            }
        }
        let r = base + m;
        if d < last {
            prob.add_coef(tv[d], blk, r, r, 1.0);
        } else {
            prob.add_const(blk, r, r, 1.0);
            for e in 0..last {
                prob.add_coef(tv[e], blk, r, r, -1.0);
            }
        }
    }
    let sol = solve_sdp(&prob, &SdpSettings::default())?;
    match sol.status {
        Status::Optimal => {}
        Status::PrimalInfeasible => return Err(Error::Infeasible("behavior is not in the polytope".into())),
        s => return Err(Error::Solver(format!("guessing LP ended with {s:?}"))),
    }
    let mut strategies = Vec::new();
    let mut x_last = xp.clone();
    let mut t_last = 1.0;
    for d in 0..=last {
        let (x, t): (Vec<f64>, f64) = if d < last {
            let x: Vec<f64> = xv[d].iter().map(|&k| sol.y[k]).collect();
            for (a, b) in x_last.iter_mut().zip(&x) {
                *a -= b;
            }
            t_last -= sol.y[tv[d]];
            (x, sol.y[tv[d]])
        } else {
            (x_last.clone(), t_last)
        };
        if t >= min_weight {
            let xs: Vec<f64> = x.iter().map(|v| v / t).collect();
            let behavior = ConditionalBehavior::new_unchecked(sc.clone(), chart.to_full(&xs)?)?;
            strategies.push(Strategy { guess: d, weight: t, behavior });
        }
    }
    Ok(Guessing { pguess: sol.dual_obj + const_obj, strategies })
}

/// Unit weight on input `z`.
pub fn single_input(num_z: usize, z: usize) -> Vec<f64> {
    let mut w = vec![0.0; num_z];
    w[z] = 1.0;
    w
}
