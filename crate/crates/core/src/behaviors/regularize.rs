//! Projection of estimated behaviors onto the no-signalling set.

use super::behavior::{ConditionalBehavior, FLOAT_TOL};
use super::chart::Chart;
use crate::error::{Error, Result};
use crate::quantum::sdp::{solve_sdp, Block, SdpProblem, SdpSettings, Status};

pub const DEFAULT_EPS_MIX: f64 = 1e-6;

/// L1-closest no-signalling behavior to `p`, mixed with uniform at `eps_mix`.
pub fn regularize(p: &ConditionalBehavior, eps_mix: f64) -> Result<ConditionalBehavior> {
    if !(0.0..=1.0).contains(&eps_mix) {
        return Err(Error::Domain(format!("eps_mix {eps_mix} outside [0,1]")));
    }
    p.check_normalized(1e-9)?;
    let projected = if p.is_no_signalling(FLOAT_TOL) && p.probs.iter().all(|v| *v >= 0.0) {
        p.clone()
    } else {
        project_ns(p)?
    };
    let mut q = fix_negatives(projected);
    if eps_mix > 0.0 {
        q = q.with_noise(eps_mix);
    }
    Ok(q)
}

fn project_ns(p: &ConditionalBehavior) -> Result<ConditionalBehavior> {
    let sc = &p.scenario;
    let chart = Chart::collins_gisin(sc)?;
    let d = chart.dim();
    let len = sc.len();
    let mut prob = SdpProblem::default();
    let blk = prob.add_block(Block::Diag(3 * len));
    let xs: Vec<usize> = (0..d).map(|_| prob.add_var(0.0)).collect();
    let ts: Vec<usize> = (0..len).map(|_| prob.add_var(-1.0)).collect();
    let off = chart.offset();
    for i in 0..len {
        let row = chart.row(i);
        // t_i - (q_i - p_i) ≥ 0
        prob.add_const(blk, 3 * i, 3 * i, p.probs[i] - off[i]);
        prob.add_coef(ts[i], blk, 3 * i, 3 * i, 1.0);
        // t_i + (q_i - p_i) ≥ 0
        prob.add_const(blk, 3 * i + 1, 3 * i + 1, off[i] - p.probs[i]);
        prob.add_coef(ts[i], blk, 3 * i + 1, 3 * i + 1, 1.0);
        // q_i ≥ 0
        prob.add_const(blk, 3 * i + 2, 3 * i + 2, off[i]);
        for (k, &a) in row.iter().enumerate() {
            if a != 0.0 {
                prob.add_coef(xs[k], blk, 3 * i, 3 * i, -a);
                prob.add_coef(xs[k], blk, 3 * i + 1, 3 * i + 1, a);
                prob.add_coef(xs[k], blk, 3 * i + 2, 3 * i + 2, a);
            }
        }
    }
    let sol = solve_sdp(&prob, &SdpSettings::default())?;
    if sol.status != Status::Optimal {
        return Err(Error::Solver(format!("no-signalling projection ended with {:?}", sol.status)));
    }
    let x: Vec<f64> = xs.iter().map(|&k| sol.y[k]).collect();
    ConditionalBehavior::new_unchecked(sc.clone(), chart.to_full(&x)?)
}

/// Mixes in the least amount of uniform noise that clears negative entries.
fn fix_negatives(p: ConditionalBehavior) -> ConditionalBehavior {
    let min = p.probs.iter().cloned().fold(f64::INFINITY, f64::min);
    if min >= 0.0 {
        return p;
    }
    let u = 1.0 / p.scenario.num_c() as f64;
    let lambda = (-min / (u - min)) * (1.0 + 1e-12);
    let mut q = p.with_noise(lambda);
    for v in q.probs.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    q
}
