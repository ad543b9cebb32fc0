//! Maximizing `E_p[log F]` over PEFs valid at a finite vertex set.

use nalgebra::{Cholesky, DMatrix, DVector};

use super::{Pef, VertexSet};
use crate::behaviors::{JointBehavior, OutputMap};
use crate::error::{Error, Result};
use crate::num;

#[derive(Clone, Debug)]
pub struct PefOptions {
    /// Value assigned to cells with `p(c,z) = 0`.
    pub floor: f64,
    pub gap_tol: f64,
    pub max_iter: usize,
    pub max_rounds: usize,
    /// Violated vertices added per active-set round.
    pub batch: usize,
}

impl Default for PefOptions {
    fn default() -> Self {
        PefOptions { floor: 1e-12, gap_tol: 1e-13, max_iter: 300, max_rounds: 200, batch: 400 }
    }
}

#[derive(Clone, Debug)]
pub struct PefSolution {
    pub pef: Pef,
    /// `E_p[log2 F]`.
    pub log_objective: f64,
    /// `E_p[log2 F] / β`, bits per round.
    pub rate: f64,
    /// Largest `E_μ[F μ_D^β]` over the vertices after the final rescaling.
    pub worst: f64,
    pub active: Vec<usize>,
}

/// Constraint factors of every vertex at a fixed power.
pub struct FactorTable {
    pub rows: Vec<Vec<f64>>,
}

impl FactorTable {
    pub fn new(verts: &VertexSet, dmap: &OutputMap, beta: f64) -> Self {
        FactorTable { rows: (0..verts.len()).map(|k| verts.factors(k, dmap, beta)).collect() }
    }
}

pub fn optimize_pef(p: &JointBehavior, verts: &VertexSet, dmap: &OutputMap, beta: f64, opts: &PefOptions) -> Result<PefSolution> {
    let table = FactorTable::new(verts, dmap, beta);
    optimize_with_table(p, &table, dmap, beta, opts, &[])
}

/// [`optimize_pef`] with precomputed factors and an initial active set.
pub fn optimize_with_table(
    p: &JointBehavior,
    table: &FactorTable,
    dmap: &OutputMap,
    beta: f64,
    opts: &PefOptions,
    warm: &[usize],
) -> Result<PefSolution> {
    if !(beta > 0.0) {
        return Err(Error::Domain(format!("power {beta} must be positive")));
    }
    let len = p.probs.len();
    if table.rows.iter().any(|r| r.len() != len) {
        return Err(Error::DimensionMismatch { expected: len, got: table.rows[0].len() });
    }
    let free: Vec<usize> = (0..len).filter(|&i| p.probs[i] > 0.0).collect();
    let pf: Vec<f64> = free.iter().map(|&i| p.probs[i]).collect();
    let mut floor = opts.floor;
    let fixed_load = |floor: f64| -> Vec<f64> {
        table.rows.iter().map(|r| (0..len).filter(|i| p.probs[*i] <= 0.0).map(|i| r[i] * floor).sum()).collect()
    };
    let mut load = fixed_load(floor);
    while load.iter().any(|l| *l >= 0.5) {
        floor *= 1e-3;
        if floor < 1e-300 {
            return Err(Error::Infeasible("no positive PEF exists".into()));
        }
        load = fixed_load(floor);
    }

    let mut active: Vec<usize> = warm.iter().cloned().filter(|&k| k < table.rows.len()).collect();
    for &i in &free {
        let best = (0..table.rows.len()).max_by(|&a, &b| table.rows[a][i].total_cmp(&table.rows[b][i])).expect("vertices");
        if table.rows[best][i] <= 0.0 {
            return Err(Error::Domain("behavior puts mass on a cell no vertex supports".into()));
        }
        active.push(best);
    }
    {
        let inv: Vec<f64> = (0..len).map(|i| if p.probs[i] > 0.0 { 1.0 / p.probs[i] } else { 0.0 }).collect();
        let mut score: Vec<(f64, usize)> = table.rows.iter().enumerate().map(|(k, r)| (num::dot_f64(r, &inv), k)).collect();
        score.sort_by(|a, b| b.0.total_cmp(&a.0));
        active.extend(score.iter().take(opts.batch).map(|s| s.1));
    }
    active.sort_unstable();
    active.dedup();

    let mut full = vec![floor; len];
    for _round in 0..opts.max_rounds {
        let rows: Vec<Vec<f64>> = active.iter().map(|&k| free.iter().map(|&i| table.rows[k][i]).collect()).collect();
        let rhs: Vec<f64> = active.iter().map(|&k| 1.0 - load[k]).collect();
        let f = solve_active(&pf, &rows, &rhs, opts)?;
        for (j, &i) in free.iter().enumerate() {
            full[i] = f[j];
        }
        let vals: Vec<(f64, usize)> = table.rows.iter().enumerate().map(|(k, r)| (num::dot_f64(r, &full), k)).collect();
        let mut violated: Vec<(f64, usize)> = vals.into_iter().filter(|(v, _)| *v > 1.0 + 1e-11).collect();
        if violated.is_empty() {
            break;
        }
        violated.sort_by(|a, b| b.0.total_cmp(&a.0));
        let before = active.len();
        active.extend(violated.iter().take(opts.batch).map(|v| v.1));
        active.sort_unstable();
        active.dedup();
        if active.len() == before {
            break;
        }
    }
    let mut worst = table.rows.iter().map(|r| num::dot_f64(r, &full)).fold(0.0, f64::max);
    let guard = 1.0 + 1e-12;
    if worst * guard > 1.0 {
        let s = worst * guard;
        full.iter_mut().for_each(|v| *v /= s);
        worst = table.rows.iter().map(|r| num::dot_f64(r, &full)).fold(0.0, f64::max);
    }
    let log_objective: f64 = free.iter().map(|&i| p.probs[i] * full[i].log2()).sum();
    let binding: Vec<usize> = active.iter().cloned().filter(|&k| num::dot_f64(&table.rows[k], &full) > 1.0 - 1e-6).collect();
    Ok(PefSolution {
        pef: Pef { values: full, beta, dmap: dmap.clone() },
        log_objective,
        rate: log_objective / beta,
        worst,
        active: binding,
    })
}

/// Primal-dual interior point for `max Σ p_i ln F_i` s.t. `A F ≤ b`.
fn solve_active(p: &[f64], a: &[Vec<f64>], b: &[f64], opts: &PefOptions) -> Result<Vec<f64>> {
    let n = p.len();
    let m = a.len();
    let amat = DMatrix::from_fn(m, n, |k, i| a[k][i]);
    let bvec = DVector::from_vec(b.to_vec());
    let pvec = DVector::from_vec(p.to_vec());
    let row_sum = &amat * DVector::from_element(n, 1.0);
    let t = (0..m).map(|k| 0.5 * b[k] / row_sum[k].max(1e-300)).fold(f64::INFINITY, f64::min);
    let mut f = DVector::from_element(n, t);
    let mut s = &bvec - &amat * &f;
    let mut lam = s.map(|v| 1.0 / (m as f64 * v));
    let psum: f64 = p.iter().sum();
    for _ in 0..opts.max_iter {
        s = &bvec - &amat * &f;
        let g = pvec.component_div(&f);
        let atl = amat.transpose() * &lam;
        let rd = &g - &atl;
        let mu = lam.dot(&s) / m as f64;
        let primal: f64 = (0..n).map(|i| p[i] * f[i].ln()).sum();
        let dual = if atl.iter().all(|v| *v > 0.0) {
            (0..n).map(|i| p[i] * (p[i] / atl[i]).ln()).sum::<f64>() - psum + lam.dot(&bvec)
        } else {
            f64::INFINITY
        };
        let gap = dual - primal;
        if gap <= opts.gap_tol.max(1e-10 * primal.abs()) {
            return Ok(f.iter().cloned().collect());
        }
        let sigma = 0.1;
        let d = lam.component_div(&s);
        let mut h = DMatrix::from_diagonal(&pvec.component_div(&f.component_mul(&f)));
        let ad = DMatrix::from_fn(m, n, |k, i| amat[(k, i)] * d[k]);
        h += amat.transpose() * ad;
        let sinv_rc = DVector::from_fn(m, |k, _| lam[k] - sigma * mu / s[k]);
        let rhs = &rd + amat.transpose() * &sinv_rc;
        let Some(ch) = Cholesky::new(h) else {
            return Err(Error::Solver("PEF Newton system is singular".into()));
        };
        let df = ch.solve(&rhs);
        let ds = -(&amat * &df);
        let dl = DVector::from_fn(m, |k, _| d[k] * (&amat.row(k) * &df)[0] - sinv_rc[k]);
        let mut ap: f64 = 1.0;
        for i in 0..n {
            if df[i] < 0.0 {
                ap = ap.min(-f[i] / df[i]);
            }
        }
        for k in 0..m {
            if ds[k] < 0.0 {
                ap = ap.min(-s[k] / ds[k]);
            }
        }
        let mut ad_: f64 = 1.0;
        for k in 0..m {
            if dl[k] < 0.0 {
                ad_ = ad_.min(-lam[k] / dl[k]);
            }
        }
        let ap = (0.99 * ap).min(1.0);
        let ad_ = (0.99 * ad_).min(1.0);
        f += &df * ap;
        lam += &dl * ad_;
        if ap < 1e-14 && ad_ < 1e-14 {
            break;
        }
    }
    // best effort: the caller rescales to feasibility, so a stalled point is still sound
    Ok(f.iter().cloned().collect())
}
