//! Polytope refinement by quantum Bell inequalities.

pub mod guessing;
pub mod maxgp;
pub mod nearv;

use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::behaviors::Chart;
use crate::error::Result;
use crate::num::{self, QVec, Rational};
use crate::polytope::{CutOutcome, CutProvenance, Halfspace, Polytope};
use crate::quantum::{max_linear_coeffs, nearest_quantum, Metric, MomentStructure};

pub use guessing::{guessing_probability, Guessing, Strategy};
pub use maxgp::{maxgp, ZPolicy};
pub use nearv::nearv;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Selection {
    #[default]
    InverseDistance,
    Uniform,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RefinementConfig {
    pub iterations: usize,
    pub nearest: usize,
    pub seed: u64,
    pub level: usize,
    pub metric: Metric,
    pub min_weight: f64,
    pub selection: Selection,
    pub z_policy: ZPolicy,
    pub membership_tol: f64,
}

impl Default for RefinementConfig {
    fn default() -> Self {
        RefinementConfig {
            iterations: 10,
            nearest: 10,
            seed: 0,
            level: 2,
            metric: Metric::L1,
            min_weight: 1e-9,
            selection: Selection::InverseDistance,
            z_policy: ZPolicy::Random,
            membership_tol: crate::quantum::MEMBERSHIP_TOL,
        }
    }
}

/// A quantum Bell inequality `b·μ ≤ β` on full conditional vectors.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CutRecord {
    pub algorithm: String,
    pub iteration: usize,
    /// What was separated, e.g. `vertex` or `strategy d=3`.
    pub source: String,
    pub point: Vec<f64>,
    pub b: Vec<String>,
    pub beta: String,
    pub metric: Metric,
    pub distance: f64,
    /// `b·point - β`, positive when the cut separates the point.
    pub violation: f64,
    pub inserted: bool,
    pub vertices_after: usize,
}

impl CutRecord {
    pub fn coeffs(&self) -> Vec<Rational> {
        self.b.iter().map(|s| num::parse_q(s).expect("stored rational")).collect()
    }

    pub fn bound(&self) -> Rational {
        num::parse_q(&self.beta).expect("stored rational")
    }
}

/// Audit line for one refinement iteration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IterationRecord {
    pub algorithm: String,
    pub iteration: usize,
    pub input: Option<usize>,
    pub pguess: Option<f64>,
    pub vertices_before: usize,
    pub vertices_after: usize,
    pub nonquantum_seen: usize,
    pub cuts: Vec<CutRecord>,
}

#[derive(Clone, Debug)]
pub struct Refinement {
    pub polytope: Polytope,
    pub cuts: Vec<CutRecord>,
    pub log: Vec<IterationRecord>,
}

pub(crate) struct Cut {
    pub b: QVec,
    pub beta: Rational,
    pub metric: Metric,
    pub distance: f64,
    pub violation: f64,
}

/// Builds a certified cut separating `v` from the relaxation, if one exists
/// at the working precision. `v_exact` must equal `v` when present.
pub(crate) fn separate(v: &[f64], v_exact: Option<&[Rational]>, s: &MomentStructure, metric: Metric) -> Result<Option<Cut>> {
    let mut metrics = vec![metric];
    if metric != Metric::Euclidean {
        metrics.push(Metric::Euclidean);
    }
    for m in metrics {
        let proj = nearest_quantum(v, s, m)?;
        let mut b: Vec<f64> = v.iter().zip(&proj.point.probs).map(|(a, q)| a - q).collect();
        if num::normalize_max_abs(&mut b) < 1e-9 {
            return Ok(None);
        }
        let bq: QVec = b.iter().map(|x| num::round_to(*x, num::NORMAL_DENOMINATOR)).collect();
        let bf = num::vec_to_f64(&bq);
        let bound = max_linear_coeffs(&bf, s)?.bound;
        let beta = num::round_up(bound, num::BOUND_DENOMINATOR);
        let separates = match v_exact {
            Some(ve) => (num::dot(&bq, ve) - &beta).is_positive(),
            None => num::dot_f64(&bf, v) > num::to_f64(&beta),
        };
        if separates {
            let violation = num::dot_f64(&bf, v) - num::to_f64(&beta);
            return Ok(Some(Cut { b: bq, beta, metric: m, distance: proj.distance, violation }));
        }
    }
    Ok(None)
}

pub(crate) fn apply_cut(
    poly: &mut Polytope,
    chart: &Chart,
    cut: &Cut,
    prov: CutProvenance,
    source: String,
    point: Vec<f64>,
) -> Result<CutRecord> {
    let (h, eta) = chart.functional_to_chart_q(&cut.b, &cut.beta)?;
    let outcome = poly.add_halfspace(Halfspace::new(h, eta)?, prov.clone())?;
    Ok(CutRecord {
        algorithm: prov.algorithm,
        iteration: prov.iteration,
        source,
        point,
        b: cut.b.iter().map(num::format_q).collect(),
        beta: num::format_q(&cut.beta),
        metric: cut.metric,
        distance: cut.distance,
        violation: cut.violation,
        inserted: matches!(outcome, CutOutcome::Inserted { .. }),
        vertices_after: poly.num_vertices(),
    })
}
