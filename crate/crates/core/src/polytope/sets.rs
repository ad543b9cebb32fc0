//! Concrete polytopes: no-signalling sets, SV sources and products.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::halfspace::{HPolytope, Halfspace, VPolytope};
use crate::behaviors::{Chart, Scenario};
use crate::error::{Error, Result};
use crate::num::{QVec, Rational};

/// Positivity facets `p(c|z) ≥ 0` in Collins–Gisin coordinates.
pub fn ns_polytope(scenario: &Scenario) -> Result<HPolytope> {
    let chart = Chart::collins_gisin(scenario)?;
    let mut h = HPolytope::new(chart.dim(), format!("ns-{}", scenario.id()));
    for i in 0..scenario.len() {
        let normal: QVec = chart.row_q(i).iter().map(|v| -v).collect();
        h.push(Halfspace::new(normal, chart.offset_q()[i].clone())?)?;
    }
    Ok(h)
}

/// No-signalling polytope cut by all eight CHSH relabelings at Tsirelson's bound,
/// rounded up at denominator `10⁶`.
pub fn ns_chsh_polytope() -> Result<HPolytope> {
    let sc = Scenario::bipartite();
    let chart = Chart::collins_gisin(&sc)?;
    let mut h = ns_polytope(&sc)?;
    h.label = "ns-chsh-tsirelson".into();
    let beta = crate::num::round_up(2.0 * std::f64::consts::SQRT_2, 1_000_000);
    for k in 0..8 {
        let b: QVec = crate::behaviors::functional::chsh_variant(k).coeffs.iter().map(|c| crate::num::exact(*c)).collect();
        push_functional(&mut h, &chart, &b, &beta)?;
    }
    Ok(h)
}

/// Adds `b·p ≤ β` (full conditional coordinates) to an H-polytope on `chart`.
pub fn push_functional(h: &mut HPolytope, chart: &Chart, b: &[Rational], beta: &Rational) -> Result<bool> {
    let (normal, eta) = chart.functional_to_chart_q(b, beta)?;
    h.push(Halfspace::new(normal, eta)?)
}

/// Vertex convention for a biased bit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum SvConvention {
    /// Marginals range over `½ ± δ`.
    #[default]
    Box,
    /// Marginals range over `½(1 ± δ)`.
    HalfDelta,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SvSource {
    pub delta: Rational,
    pub convention: SvConvention,
}

impl SvSource {
    pub fn new(delta: Rational, convention: SvConvention) -> Result<Self> {
        if delta.is_negative() || delta >= Rational::new(1.into(), 2.into()) {
            return Err(Error::Domain(format!("SV bias {delta} outside [0, 1/2)")));
        }
        Ok(SvSource { delta, convention })
    }

    /// `v_k(x)` for a single bit.
    fn bit(&self, k: usize, x: usize) -> Rational {
        let half = Rational::new(1.into(), 2.into());
        let dev = match self.convention {
            SvConvention::Box => self.delta.clone(),
            SvConvention::HalfDelta => &self.delta * &half,
        };
        if (k + x) % 2 == 0 {
            half + dev
        } else {
            half - dev
        }
    }
}

/// Vertices `u_{kk'}(x, y) = v_k(x) v_{k'}(y)` of two SV bits, indexed by `z = 2x + y`.
pub fn sv2_polytope(src: &SvSource) -> Result<VPolytope> {
    let mut verts = Vec::new();
    for k in 0..2 {
        for kp in 0..2 {
            let v: QVec = (0..4).map(|z| src.bit(k, z >> 1) * src.bit(kp, z & 1)).collect();
            verts.push(v);
        }
    }
    VPolytope::new(4, verts)
}

/// All products `v(c|z) w(z)` as full joint vectors indexed `z·|C| + c`.
pub fn joint_product_vertices(scenario: &Scenario, cond: &[QVec], inputs: &VPolytope) -> Result<VPolytope> {
    let len = scenario.len();
    if inputs.dim != scenario.num_z() {
        return Err(Error::DimensionMismatch { expected: scenario.num_z(), got: inputs.dim });
    }
    let nc = scenario.num_c();
    let mut out = Vec::with_capacity(cond.len() * inputs.len());
    for v in cond {
        if v.len() != len {
            return Err(Error::DimensionMismatch { expected: len, got: v.len() });
        }
        for w in &inputs.vertices {
            out.push((0..len).map(|i| &v[i] * &w[i / nc]).collect());
        }
    }
    VPolytope::new(len, out)
}

/// Uniform input distribution as a one-vertex polytope.
pub fn uniform_inputs(scenario: &Scenario) -> VPolytope {
    let nz = scenario.num_z();
    VPolytope { dim: nz, vertices: vec![vec![Rational::new(One::one(), (nz as i64).into()); nz]] }
}

/// Full conditional vectors of chart-coordinate vertices.
pub fn full_vertices(chart: &Chart, verts: &[QVec]) -> Result<Vec<QVec>> {
    verts.iter().map(|v| chart.to_full_q(v)).collect()
}

pub fn is_deterministic(v: &[Rational]) -> bool {
    v.iter().all(|x| x.is_zero() || x.is_one())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{int, ratio};
    use crate::polytope::Polytope;

    #[test]
    fn ns_facet_counts() {
        let b = ns_polytope(&Scenario::bipartite()).unwrap();
        assert_eq!((b.inequalities.len(), b.dim), (16, 8));
        let t = ns_polytope(&Scenario::tripartite()).unwrap();
        assert_eq!((t.inequalities.len(), t.dim), (64, 26));
        let chart = Chart::collins_gisin(&Scenario::bipartite()).unwrap();
        let u = chart.from_full_q(&vec![ratio(1, 4); 16]).unwrap();
        assert!(b.inequalities.iter().all(|h| h.slack(&u).is_positive()));
    }

    #[test]
    fn bipartite_ns_vertices() {
        let sc = Scenario::bipartite();
        let p = Polytope::from_h(&ns_polytope(&sc).unwrap()).unwrap();
        assert_eq!(p.num_vertices(), 24);
        p.check().unwrap();
        let chart = Chart::collins_gisin(&sc).unwrap();
        let full = full_vertices(&chart, &p.vertices).unwrap();
        let det = full.iter().filter(|v| is_deterministic(v)).count();
        assert_eq!(det, 16);
        let half = ratio(1, 2);
        assert!(full.iter().all(|v| is_deterministic(v) || v.iter().all(|x| x.is_zero() || *x == half)));
    }

    #[test]
    fn sv_vertices() {
        let s = SvSource::new(ratio(1, 10), SvConvention::HalfDelta).unwrap();
        let v = sv2_polytope(&s).unwrap();
        let u00 = vec![ratio(3025, 10000), ratio(2475, 10000), ratio(2475, 10000), ratio(2025, 10000)];
        assert!(v.vertices.contains(&u00));
        let b = sv2_polytope(&SvSource::new(ratio(1, 10), SvConvention::Box).unwrap()).unwrap();
        assert!(b.vertices.contains(&vec![ratio(36, 100), ratio(24, 100), ratio(24, 100), ratio(16, 100)]));
        for w in v.vertices.iter().chain(&b.vertices) {
            assert_eq!(w.iter().sum::<Rational>(), int(1));
            assert_eq!(&w[0] * &w[3], &w[1] * &w[2]);
        }
        let zero = sv2_polytope(&SvSource::new(int(0), SvConvention::Box).unwrap()).unwrap();
        assert_eq!(zero.vertices, vec![vec![ratio(1, 4); 4]]);
        assert!(SvSource::new(ratio(1, 2), SvConvention::Box).is_err());
    }

    #[test]
    fn product_cardinality() {
        let sc = Scenario::bipartite();
        let p = Polytope::from_h(&ns_polytope(&sc).unwrap()).unwrap();
        let chart = Chart::collins_gisin(&sc).unwrap();
        let full = full_vertices(&chart, &p.vertices).unwrap();
        let sv = sv2_polytope(&SvSource::new(ratio(1, 10), SvConvention::Box).unwrap()).unwrap();
        let prod = joint_product_vertices(&sc, &full, &sv).unwrap();
        assert_eq!(prod.len(), 96);
        assert!(prod.vertices.iter().all(|v| v.iter().sum::<Rational>() == int(1)));
        let uni = joint_product_vertices(&sc, &full, &uniform_inputs(&sc)).unwrap();
        assert_eq!(uni.len(), 24);
    }
}
