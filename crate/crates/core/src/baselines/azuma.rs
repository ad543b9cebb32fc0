use serde::{Deserialize, Serialize};

use crate::behaviors::{JointBehavior, OutputMap};
use crate::error::{Error, Result};
use crate::quantum::sdp::{project_affine, psd_shift, primal_value, residual_penalty, solve_sdp, Block, SdpProblem, SdpSettings, Status};
use crate::quantum::{max_linear_coeffs, MomentStructure};

/// Affine estimator `B(c,z)` with `E_μ(B) ≥ max_{d,z} μ(d|z)` on the relaxation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DualEstimator {
    /// `B(c,z)`, indexed `z·|C| + c`.
    pub values: Vec<f64>,
    pub p_z: Vec<f64>,
    /// `E_p(B)`.
    pub expectation: f64,
    /// Value of the primal decomposition problem at `p`.
    pub primal: f64,
    pub max_expectation: f64,
    pub min_expectation: f64,
    pub gamma: f64,
}

impl DualEstimator {
    /// `E_μ(B)` for a conditional behavior `μ(c|z)` paired with the estimator's `p(z)`.
    pub fn expectation_conditional(&self, mu: &[f64]) -> f64 {
        let nz = self.p_z.len();
        let nc = self.values.len() / nz;
        (0..self.values.len()).map(|i| self.values[i] * self.p_z[i / nc] * mu[i]).sum()
    }

    /// `-log2 E_p(B)`.
    pub fn rate(&self) -> f64 {
        -self.expectation.log2()
    }
}

struct Layout {
    t: Vec<usize>,
    x: Vec<Vec<usize>>,
    free: Vec<Vec<usize>>,
    slack: Vec<usize>,
    const_obj: f64,
}

/// Price per unit of the `ℓ1` slack `p ≈ Σ μ̃ + s`; caps `|B|` and keeps the problem strictly feasible.
const SLACK_PRICE: f64 = 16.0;

/// Decomposition `p = Σ_{d,z} μ̃_{dz}` with each piece in the homogenized
/// relaxation, scoring `Σ μ̃_{dz}(d|z)`.
fn build(s: &MomentStructure, dmap: &OutputMap, x: &[f64]) -> (SdpProblem, Layout) {
    let sc = &s.scenario;
    let (nc, nz, nd) = (sc.num_c(), sc.num_z(), dmap.num_d);
    let dim = s.num_linked();
    let nfree = s.num_moments() - 1 - dim;
    let pieces = nd * nz;
    let last = pieces - 1;
    let chart = &s.chart;
    let len = sc.len();
    let score = |j: usize| -> (f64, Vec<f64>) {
        let (z, d) = (j / nd, j % nd);
        let mut off = 0.0;
        let mut row = vec![0.0; dim];
        for c in (0..nc).filter(|&c| dmap.dmap[c] == d) {
            let i = z * nc + c;
            off += chart.offset()[i];
            for (r, a) in row.iter_mut().zip(chart.row(i)) {
                *r += a;
            }
        }
        (off, row)
    };
    let (off_last, row_last) = score(last);
    let mut p = SdpProblem::default();
    let mut lay = Layout { t: Vec::new(), x: Vec::new(), free: Vec::new(), slack: Vec::new(), const_obj: 0.0 };
    for j in 0..last {
        let (off, row) = score(j);
        lay.t.push(p.add_var(off - off_last));
        lay.x.push((0..dim).map(|k| p.add_var(row[k] - row_last[k])).collect());
    }
    for _ in 0..pieces {
        lay.free.push((0..nfree).map(|_| p.add_var(0.0)).collect());
    }
    lay.slack = (0..dim).map(|_| p.add_var(0.0)).collect();
    let abs: Vec<usize> = (0..dim).map(|_| p.add_var(-SLACK_PRICE)).collect();
    let sb = p.add_block(Block::Diag(2 * dim));
    for k in 0..dim {
        p.add_coef(abs[k], sb, 2 * k, 2 * k, 1.0);
        p.add_coef(lay.slack[k], sb, 2 * k, 2 * k, -1.0);
        p.add_coef(abs[k], sb, 2 * k + 1, 2 * k + 1, 1.0);
        p.add_coef(lay.slack[k], sb, 2 * k + 1, 2 * k + 1, 1.0);
    }
    // last piece is x - s - Σ others, so the slack enters its score with a minus sign
    for k in 0..dim {
        p.b[lay.slack[k]] -= row_last[k];
    }
    lay.const_obj = off_last + row_last.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    let n = s.side();
    for j in 0..pieces {
        let mb = p.add_block(Block::Dense(n));
        for r in 0..n {
            for c in r..n {
                let m = s.entries[r][c];
                if m > dim {
                    p.add_coef(lay.free[j][m - dim - 1], mb, r, c, 1.0);
                } else if j < last {
                    p.add_coef(if m == 0 { lay.t[j] } else { lay.x[j][m - 1] }, mb, r, c, 1.0);
                } else {
                    p.add_const(mb, r, c, if m == 0 { 1.0 } else { x[m - 1] });
                    if m > 0 {
                        p.add_coef(lay.slack[m - 1], mb, r, c, -1.0);
                    }
                    for e in 0..last {
                        p.add_coef(if m == 0 { lay.t[e] } else { lay.x[e][m - 1] }, mb, r, c, -1.0);
                    }
                }
            }
        }
        let pb = p.add_block(Block::Diag(len));
        for i in 0..len {
            let off = chart.offset()[i];
            let row = chart.row(i);
            if j < last {
                p.add_coef(lay.t[j], pb, i, i, off);
                for k in 0..dim {
                    if row[k] != 0.0 {
                        p.add_coef(lay.x[j][k], pb, i, i, row[k]);
                    }
                }
            } else {
                p.add_const(pb, i, i, off + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>());
                for k in 0..dim {
                    if row[k] != 0.0 {
                        p.add_coef(lay.slack[k], pb, i, i, -row[k]);
                    }
                }
                for e in 0..last {
                    p.add_coef(lay.t[e], pb, i, i, -off);
                    for k in 0..dim {
                        if row[k] != 0.0 {
                            p.add_coef(lay.x[e][k], pb, i, i, -row[k]);
                        }
                    }
                }
            }
        }
    }
    (p, lay)
}

/// Solves the decomposition problem at `p` and reads the estimator off its dual.
pub fn azuma_estimator(p: &JointBehavior, dmap: &OutputMap, s: &MomentStructure) -> Result<DualEstimator> {
    if p.scenario != s.scenario {
        return Err(Error::Domain("scenario mismatch".into()));
    }
    let cond = p.conditional();
    let x = s.chart.from_full(&cond.probs)?;
    let dim = x.len();
    let (prob, lay) = build(s, dmap, &x);
    let sol = solve_sdp(&prob, &SdpSettings::default())?;
    if sol.status != Status::Optimal {
        return Err(Error::Solver(format!("estimator SDP ended with {:?}", sol.status)));
    }
    let xs = psd_shift(&project_affine(&prob, &sol.x));
    // only points with zero slack matter for the bound
    let mut ybound = vec![1.0; prob.num_vars()];
    let first_slack = lay.slack[0];
    ybound[first_slack..].iter_mut().for_each(|v| *v = 0.0);
    let penalty = residual_penalty(&prob, &xs, &ybound);
    // U(x) = const_obj(x) + <F0(x), X> is affine in the chart coordinates
    let at = |x: &[f64]| -> f64 {
        let (q, l) = build(s, dmap, x);
        l.const_obj + primal_value(&q, &xs)
    };
    let zero = vec![0.0; dim];
    let u0 = at(&zero);
    let grad: Vec<f64> = (0..dim)
        .map(|k| {
            let mut e = zero.clone();
            e[k] = 1.0;
            at(&e) - u0
        })
        .collect();
    let u0 = u0 + penalty;
    let u0 = u0 + 1e-12 * (1.0 + u0.abs());
    let sc = &p.scenario;
    let (nc, nz) = (sc.num_c(), sc.num_z());
    let mut b_cond = vec![u0 / nz as f64; sc.len()];
    for (k, g) in grad.iter().enumerate() {
        for (b, r) in b_cond.iter_mut().zip(s.chart.inv_row(k)) {
            *b += g * r;
        }
    }
    let values: Vec<f64> = (0..sc.len()).map(|i| b_cond[i] / p.input_marginal[i / nc]).collect();
    let expectation: f64 = (0..sc.len()).map(|i| b_cond[i] * cond.probs[i]).sum();
    let max_e = max_linear_coeffs(&b_cond, s)?.bound;
    let neg: Vec<f64> = b_cond.iter().map(|v| -v).collect();
    let min_e = -max_linear_coeffs(&neg, s)?.bound;
    let gamma = values.iter().map(|b| (b - min_e).max(max_e - b)).fold(0.0, f64::max);
    Ok(DualEstimator {
        values,
        p_z: p.input_marginal.clone(),
        expectation,
        primal: sol.dual_obj + lay.const_obj,
        max_expectation: max_e,
        min_expectation: min_e,
        gamma,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AzumaBound {
    pub n: f64,
    pub rate: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub epsilon: f64,
    /// `γ (2 n ln 1/κ)^{1/2}`.
    pub penalty: f64,
    pub total: f64,
}

/// `n t − γ (2 n ln 1/κ)^{1/2} − log2 1/(ε−κ)`.
pub fn azuma_bound(est: &DualEstimator, t: f64, n: f64, kappa: f64, epsilon: f64) -> Result<AzumaBound> {
    if !(kappa > 0.0 && kappa < epsilon) {
        return Err(Error::Domain(format!("need 0 < κ < ε, got κ={kappa:e}, ε={epsilon:e}")));
    }
    let mut b = AzumaBound { n, rate: t, gamma: est.gamma, kappa, epsilon, penalty: 0.0, total: 0.0 };
    b.penalty = azuma_penalty(&b);
    b.total = azuma_total(&b);
    Ok(b)
}

fn azuma_penalty(b: &AzumaBound) -> f64 {
    b.gamma * (2.0 * b.n * (1.0 / b.kappa).ln()).sqrt()
}

/// Recomputes the total from the stored parameters.
pub fn azuma_total(b: &AzumaBound) -> f64 {
    b.n * b.rate - azuma_penalty(b) - (1.0 / (b.epsilon - b.kappa)).log2()
}
