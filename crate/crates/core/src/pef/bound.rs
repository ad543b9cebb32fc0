//! Finite-size entropy bounds and the `(β, κ)` grid search.

use serde::{Deserialize, Serialize};

use super::optimize::{optimize_with_table, FactorTable, PefOptions, PefSolution};
use super::VertexSet;
use crate::behaviors::{JointBehavior, OutputMap};
use crate::error::{Error, Result};

/// Bits of extractable entropy certified after `n` rounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyCertificate {
    pub n: f64,
    pub rate: f64,
    pub beta: f64,
    pub kappa: f64,
    pub epsilon: f64,
    pub delta_t: f64,
    pub total: f64,
    pub fingerprint: String,
    /// The smoothing parameter is `ε / p_acc`; the acceptance probability is left symbolic.
    #[serde(default = "symbolic")]
    pub acceptance: String,
}

fn symbolic() -> String {
    "symbolic".into()
}

/// `n t′ − (1/β) log2(1/κ) − log2(1/(ε−κ)) − δ_t`.
pub fn bound_total(rate: f64, beta: f64, kappa: f64, epsilon: f64, n: f64, delta_t: f64) -> f64 {
    n * rate - (1.0 / kappa).log2() / beta - (1.0 / (epsilon - kappa)).log2() - delta_t
}

pub fn entropy_bound(rate: f64, beta: f64, kappa: f64, epsilon: f64, n: f64, delta_t: f64) -> Result<EntropyCertificate> {
    if !(kappa > 0.0 && kappa < epsilon) {
        return Err(Error::Domain(format!("need 0 < κ < ε, got κ={kappa:e}, ε={epsilon:e}")));
    }
    if !(beta > 0.0) || !(n >= 1.0) || !rate.is_finite() {
        return Err(Error::Domain(format!("invalid bound inputs β={beta}, n={n}, t′={rate}")));
    }
    Ok(EntropyCertificate {
        n,
        rate,
        beta,
        kappa,
        epsilon,
        delta_t,
        total: bound_total(rate, beta, kappa, epsilon, n, delta_t),
        fingerprint: String::new(),
        acceptance: symbolic(),
    })
}

impl EntropyCertificate {
    pub fn recompute(&self) -> f64 {
        bound_total(self.rate, self.beta, self.kappa, self.epsilon, self.n, self.delta_t)
    }

    pub fn is_consistent(&self) -> bool {
        self.recompute().to_bits() == self.total.to_bits()
    }

    /// Reported total, with negative values shown as zero.
    pub fn reported(&self) -> f64 {
        self.total.max(0.0)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridSpec {
    pub betas: Vec<f64>,
    /// `κ = f·ε` for each listed `f`.
    pub kappa_fractions: Vec<f64>,
    pub epsilon: f64,
    pub n: f64,
    pub delta_t: f64,
}

impl GridSpec {
    pub fn new(epsilon: f64, n: f64) -> Self {
        GridSpec { betas: log_space(1e-4, 1.0, 41), kappa_fractions: vec![0.5, 0.25, 0.1], epsilon, n, delta_t: 0.0 }
    }

    pub fn check(&self) -> Result<()> {
        if self.betas.is_empty() || self.kappa_fractions.is_empty() {
            return Err(Error::Empty("grid".into()));
        }
        if self.betas.iter().any(|b| !(*b > 0.0)) {
            return Err(Error::Domain("grid powers must be positive".into()));
        }
        if self.kappa_fractions.iter().any(|f| !(*f > 0.0 && *f < 1.0)) || !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Domain("κ fractions must lie in (0, 1) and ε in (0, 1)".into()));
        }
        Ok(())
    }
}

pub fn log_space(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..k).map(|i| (a + (b - a) * i as f64 / (k - 1) as f64).exp()).collect()
}

#[derive(Clone, Debug)]
pub struct GridPoint {
    pub solution: PefSolution,
}

/// Optimal PEFs for every power in a grid. Independent of `n`, `κ` and `ε`.
#[derive(Clone, Debug)]
pub struct GridResult {
    pub points: Vec<GridPoint>,
    pub fingerprint: String,
}

impl GridResult {
    /// Best `(point, certificate)` for the given finite-size parameters.
    pub fn certify(&self, epsilon: f64, n: f64, kappa_fractions: &[f64], delta_t: f64) -> Result<(usize, EntropyCertificate)> {
        let mut best: Option<(usize, EntropyCertificate)> = None;
        for (i, pt) in self.points.iter().enumerate() {
            for &f in kappa_fractions {
                let mut c = entropy_bound(pt.solution.rate, pt.solution.pef.beta, f * epsilon, epsilon, n, delta_t)?;
                c.fingerprint = self.fingerprint.clone();
                if best.as_ref().is_none_or(|(_, b)| c.total > b.total) {
                    best = Some((i, c));
                }
            }
        }
        best.ok_or_else(|| Error::Empty("grid".into()))
    }
}

/// Optimizes a PEF at each grid power, warm-starting the active vertex set.
pub fn solve_grid(p: &JointBehavior, verts: &VertexSet, dmap: &OutputMap, betas: &[f64], opts: &PefOptions) -> Result<GridResult> {
    let mut points = Vec::with_capacity(betas.len());
    let mut warm: Vec<usize> = Vec::new();
    let mut last_err = None;
    for &beta in betas {
        let table = FactorTable::new(verts, dmap, beta);
        match optimize_with_table(p, &table, dmap, beta, opts, &warm) {
            Ok(sol) => {
                warm = sol.active.clone();
                points.push(GridPoint { solution: sol });
            }
            Err(e) => last_err = Some(e),
        }
    }
    if points.is_empty() {
        return Err(last_err.unwrap_or_else(|| Error::Empty("grid".into())));
    }
    Ok(GridResult { points, fingerprint: verts.fingerprint() })
}

/// Full grid search at a single `n`.
pub fn grid_search(
    p: &JointBehavior,
    verts: &VertexSet,
    dmap: &OutputMap,
    grid: &GridSpec,
    opts: &PefOptions,
) -> Result<(PefSolution, EntropyCertificate)> {
    grid.check()?;
    let res = solve_grid(p, verts, dmap, &grid.betas, opts)?;
    let (i, cert) = res.certify(grid.epsilon, grid.n, &grid.kappa_fractions, grid.delta_t)?;
    Ok((res.points[i].solution.clone(), cert))
}
