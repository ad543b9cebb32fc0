//! Bounds, membership and projections over an NPA relaxation.

use serde::{Deserialize, Serialize};

use super::moments::MomentStructure;
use super::sdp::{certified_upper_bound, solve_sdp, Block, ConicSolution, SdpProblem, SdpSettings, Status};
use crate::behaviors::{ConditionalBehavior, Domain, Functional};
use crate::error::{Error, Result};

pub const MEMBERSHIP_TOL: f64 = 1e-7;

/// Moment-matrix SDP skeleton. Variable `k` is moment `k + 1`, so the
/// first `dim` variables are the correlator chart coordinates.
pub struct NpaSdp {
    pub problem: SdpProblem,
    pub moment_block: usize,
    pub positivity_block: Option<usize>,
}

impl MomentStructure {
    pub fn sdp(&self, positivity: bool) -> NpaSdp {
        let mut p = SdpProblem::default();
        let n = self.side();
        let moment_block = p.add_block(Block::Dense(n));
        for _ in 1..self.num_moments() {
            p.add_var(0.0);
        }
        for i in 0..n {
            for j in i..n {
                match self.entries[i][j] {
                    0 => p.add_const(moment_block, i, j, 1.0),
                    m => p.add_coef(m - 1, moment_block, i, j, 1.0),
                }
            }
        }
        let positivity_block = positivity.then(|| {
            let len = self.scenario.len();
            let blk = p.add_block(Block::Diag(len));
            self.add_behavior_rows(&mut p, blk, 0, 1.0, 0.0);
            blk
        });
        NpaSdp { problem: p, moment_block, positivity_block }
    }

    /// Adds rows `sign·p_i(x) + shift_i ≥ 0` starting at `row0` of a diagonal block.
    fn add_behavior_rows(&self, p: &mut SdpProblem, blk: usize, row0: usize, sign: f64, shift: f64) {
        let off = self.chart.offset();
        for i in 0..self.scenario.len() {
            let r = row0 + i;
            p.add_const(blk, r, r, sign * off[i] + shift);
            for (k, &a) in self.chart.row(i).iter().enumerate() {
                if a != 0.0 {
                    p.add_coef(k, blk, r, r, sign * a);
                }
            }
        }
    }

    fn behavior_from(&self, y: &[f64]) -> Result<ConditionalBehavior> {
        let full = self.chart.to_full(&y[..self.num_linked()])?;
        ConditionalBehavior::new_unchecked(self.scenario.clone(), full)
    }
}

fn require_optimal(sol: &ConicSolution, what: &str) -> Result<()> {
    if sol.status != Status::Optimal {
        return Err(Error::Solver(format!(
            "{what}: {:?} after {} iterations (gap {:.3e}, infeas {:.1e}/{:.1e})",
            sol.status,
            sol.iterations,
            sol.gap(),
            sol.primal_infeas,
            sol.dual_infeas
        )));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct LinearMax {
    /// Rigorous upper bound on `b·μ` over the relaxation.
    pub bound: f64,
    pub value: f64,
    pub optimizer: ConditionalBehavior,
}

/// Maximizes `b·p` over the NPA relaxation.
pub fn max_linear(b: &Functional, s: &MomentStructure) -> Result<LinearMax> {
    if b.domain != Domain::Conditional || b.scenario != s.scenario {
        return Err(Error::Domain(format!("functional {} does not act on {}", b.name, s.scenario.id())));
    }
    max_linear_coeffs(&b.coeffs, s).map(|mut r| {
        r.bound += b.offset;
        r.value += b.offset;
        r
    })
}

/// [`max_linear`] on a raw full-length coefficient vector.
pub fn max_linear_coeffs(b: &[f64], s: &MomentStructure) -> Result<LinearMax> {
    let (h, c0) = s.chart.functional_to_chart(b)?;
    let mut npa = s.sdp(true);
    for (k, hk) in h.iter().enumerate() {
        npa.problem.b[k] = *hk;
    }
    let sol = solve_sdp(&npa.problem, &SdpSettings::default())?;
    require_optimal(&sol, "max_linear")?;
    let ybound = vec![1.0; npa.problem.num_vars()];
    let bound = certified_upper_bound(&npa.problem, &sol, &ybound) + c0;
    let slack = 1e-15 * b.iter().map(|v| v.abs()).sum::<f64>();
    Ok(LinearMax { bound: bound + slack, value: sol.dual_obj + c0, optimizer: s.behavior_from(&sol.y)? })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum Membership {
    Inside { margin: f64 },
    /// `coeffs·μ ≤ bound` holds on the relaxation and fails at the tested point.
    Outside { margin: f64, coeffs: Vec<f64>, bound: f64 },
}

impl Membership {
    pub fn is_inside(&self) -> bool {
        matches!(self, Membership::Inside { .. })
    }
}

/// Tests whether `mu` admits a positive semidefinite moment completion.
pub fn membership(mu: &ConditionalBehavior, s: &MomentStructure, tol: f64) -> Result<Membership> {
    if mu.scenario != s.scenario {
        return Err(Error::Domain("scenario mismatch".into()));
    }
    if let Some((i, v)) = mu.probs.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)) {
        if *v < -tol {
            let mut coeffs = vec![0.0; mu.probs.len()];
            coeffs[i] = -1.0;
            return Ok(Membership::Outside { margin: *v, coeffs, bound: 0.0 });
        }
    }
    let x = s.chart.from_full(&mu.probs)?;
    let d = s.num_linked();
    let n = s.side();
    let mut p = SdpProblem::default();
    let blk = p.add_block(Block::Dense(n));
    let t = p.add_var(1.0);
    let free: Vec<usize> = (d + 1..s.num_moments()).map(|_| p.add_var(0.0)).collect();
    for i in 0..n {
        p.add_coef(t, blk, i, i, -1.0);
        for j in i..n {
            match s.entries[i][j] {
                0 => p.add_const(blk, i, j, 1.0),
                m if m <= d => p.add_const(blk, i, j, x[m - 1]),
                m => p.add_coef(free[m - d - 1], blk, i, j, 1.0),
            }
        }
    }
    let settings = SdpSettings::default();
    let sol = solve_sdp(&p, &settings)?;
    let margin = sol.value();
    if sol.status != Status::Optimal || margin >= -tol {
        return Ok(Membership::Inside { margin });
    }
    // The primal X gives f(μ') = <Γ_fixed(μ'), X> ≥ 0 on the relaxation.
    let xm = sol.x[blk].as_dense().expect("dense block");
    let mut lin = vec![0.0; d];
    let mut c0 = 0.0;
    for i in 0..n {
        for j in 0..n {
            match s.entries[i][j] {
                0 => c0 += xm[(i, j)],
                m if m <= d => lin[m - 1] += xm[(i, j)],
                _ => {}
            }
        }
    }
    let len = s.scenario.len();
    let mut coeffs = vec![0.0; len];
    for (k, l) in lin.iter().enumerate() {
        for (ci, r) in coeffs.iter_mut().zip(s.chart.inv_row(k)) {
            *ci -= l * r;
        }
    }
    Ok(Membership::Outside { margin, coeffs, bound: c0 })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    /// `½ Σ_{c,z} |u - v| / |Z|`.
    #[default]
    L1,
    /// Euclidean norm on full vectors.
    Euclidean,
}

#[derive(Clone, Debug)]
pub struct Projection {
    pub point: ConditionalBehavior,
    pub distance: f64,
    /// Certified lower bound on the distance from `v` to the relaxation.
    pub lower_bound: f64,
}

/// Closest point of the relaxation to `v` under `metric`.
pub fn nearest_quantum(v: &[f64], s: &MomentStructure, metric: Metric) -> Result<Projection> {
    let len = s.scenario.len();
    if v.len() != len {
        return Err(Error::DimensionMismatch { expected: len, got: v.len() });
    }
    let mut npa = s.sdp(true);
    let p = &mut npa.problem;
    let mut ybound = vec![1.0; p.num_vars()];
    match metric {
        Metric::L1 => {
            let scale = 0.5 / s.scenario.num_z() as f64;
            let blk = p.add_block(Block::Diag(3 * len));
            let slack: Vec<usize> = (0..len).map(|_| p.add_var(-scale)).collect();
            // s_i - (q_i - v_i) ≥ 0, s_i + (q_i - v_i) ≥ 0, 2 - s_i ≥ 0
            s.add_behavior_rows(p, blk, 0, -1.0, 0.0);
            s.add_behavior_rows(p, blk, len, 1.0, 0.0);
            for i in 0..len {
                p.add_const(blk, i, i, v[i]);
                p.add_coef(slack[i], blk, i, i, 1.0);
                p.add_const(blk, len + i, len + i, -v[i]);
                p.add_coef(slack[i], blk, len + i, len + i, 1.0);
                p.add_const(blk, 2 * len + i, 2 * len + i, 2.0);
                p.add_coef(slack[i], blk, 2 * len + i, 2 * len + i, -1.0);
            }
            ybound.extend(std::iter::repeat_n(2.0, len));
        }
        Metric::Euclidean => {
            // [[τ, rᵀ], [r, τ I]] ⪰ 0 with r = v - q
            let blk = p.add_block(Block::Dense(len + 1));
            let tau = p.add_var(-1.0);
            for i in 0..=len {
                p.add_coef(tau, blk, i, i, 1.0);
            }
            let off = s.chart.offset();
            for i in 0..len {
                p.add_const(blk, 0, i + 1, v[i] - off[i]);
                for (k, &a) in s.chart.row(i).iter().enumerate() {
                    if a != 0.0 {
                        p.add_coef(k, blk, 0, i + 1, -a);
                    }
                }
            }
            ybound.push(2.0 * (len as f64).sqrt());
        }
    }
    let sol = solve_sdp(p, &SdpSettings::default())?;
    require_optimal(&sol, "nearest_quantum")?;
    let point = s.behavior_from(&sol.y)?;
    let distance = match metric {
        Metric::L1 => 0.5 * v.iter().zip(&point.probs).map(|(a, b)| (a - b).abs()).sum::<f64>() / s.scenario.num_z() as f64,
        Metric::Euclidean => v.iter().zip(&point.probs).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
    };
    let lower_bound = (-certified_upper_bound(p, &sol, &ybound)).max(0.0);
    Ok(Projection { point, distance, lower_bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behaviors::functional::{chsh, chsh_alpha, mermin};
    use crate::behaviors::{make_tilted_chsh, Scenario};

    fn pr_box() -> ConditionalBehavior {
        let s = Scenario::bipartite();
        let mut probs = vec![0.0; 16];
        for z in 0..4 {
            let (x, y) = (z >> 1, z & 1);
            for c in 0..4 {
                let (a, b) = (c >> 1, c & 1);
                if a ^ b == x & y {
                    probs[s.index(c, z)] = 0.5;
                }
            }
        }
        ConditionalBehavior::new(s, probs).unwrap()
    }

    #[test]
    fn tsirelson_bound() {
        let s = MomentStructure::new(&Scenario::bipartite(), 1).unwrap();
        let r = max_linear(&chsh(), &s).unwrap();
        let t = 2.0 * 2f64.sqrt();
        assert!((r.bound - t).abs() < 1e-6 && r.bound >= t, "{}", r.bound);
    }

    #[test]
    fn tilted_and_mermin() {
        let s2 = MomentStructure::new(&Scenario::bipartite(), 2).unwrap();
        let r = max_linear(&chsh_alpha(8.0), &s2).unwrap();
        assert!((r.bound - 2.0 * 65f64.sqrt()).abs() < 1e-4, "{}", r.bound);
        let s3 = MomentStructure::new(&Scenario::tripartite(), 1).unwrap();
        let r = max_linear(&mermin(), &s3).unwrap();
        assert!((r.bound - 4.0).abs() < 1e-5, "{}", r.bound);
    }

    #[test]
    fn membership_classifies() {
        let s = MomentStructure::new(&Scenario::bipartite(), 2).unwrap();
        let det = ConditionalBehavior::deterministic(&Scenario::bipartite(), &[vec![0, 1], vec![1, 1]]);
        assert!(membership(&det, &s, MEMBERSHIP_TOL).unwrap().is_inside());
        assert!(membership(&make_tilted_chsh(1.0, 0.0).unwrap(), &s, MEMBERSHIP_TOL).unwrap().is_inside());
        let pr = pr_box();
        match membership(&pr, &s, MEMBERSHIP_TOL).unwrap() {
            Membership::Outside { coeffs, bound, .. } => {
                let at: f64 = coeffs.iter().zip(&pr.probs).map(|(a, b)| a * b).sum();
                assert!(at > bound);
                let q = make_tilted_chsh(1.0, 0.0).unwrap();
                let atq: f64 = coeffs.iter().zip(&q.probs).map(|(a, b)| a * b).sum();
                assert!(atq <= bound + 1e-6);
            }
            _ => panic!("PR box classified inside"),
        }
    }

    #[test]
    fn projection_of_pr_box() {
        let s = MomentStructure::new(&Scenario::bipartite(), 1).unwrap();
        let pr = pr_box();
        let proj = nearest_quantum(&pr.probs, &s, Metric::L1).unwrap();
        let v = bell_value_of(&proj.point);
        assert!((v - 2.0 * 2f64.sqrt()).abs() < 1e-4, "{v}");
        assert!(proj.lower_bound <= proj.distance + 1e-9);
        let e = nearest_quantum(&pr.probs, &s, Metric::Euclidean).unwrap();
        assert!((bell_value_of(&e.point) - 2.0 * 2f64.sqrt()).abs() < 1e-4);
        let inside = make_tilted_chsh(1.0, 0.3).unwrap();
        let p0 = nearest_quantum(&inside.probs, &s, Metric::L1).unwrap();
        assert!(p0.distance < 1e-7, "{}", p0.distance);
    }

    fn bell_value_of(p: &ConditionalBehavior) -> f64 {
        crate::behaviors::bell_value(p, &chsh()).unwrap()
    }
}
