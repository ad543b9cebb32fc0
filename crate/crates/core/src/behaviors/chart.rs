//! Minimal affine charts on the no-signalling subspace.
//!
//! Two charts are provided for binary scenarios. The Collins–Gisin chart
//! uses the marginals `P_S(0..0|z_S)` over nonempty party subsets `S`; the
//! correlator chart uses `E_S(z_S) = <Π_{i∈S} A_i>`. Both have dimension
//! `3^N - 1` and are ordered by subset size, then subset, then `z_S`.

use num_traits::Zero;

use super::scenario::Scenario;
use crate::error::{Error, Result};
use crate::num::{self, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum ChartKind {
    CollinsGisin,
    Correlator,
}

/// One chart coordinate: a party subset and its inputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChartCoord {
    pub subset: Vec<usize>,
    pub inputs: Vec<usize>,
}

/// Affine bijection between chart coordinates and NS behaviors,
/// `p = offset + lin · x`.
#[derive(Clone, Debug)]
pub struct Chart {
    pub scenario: Scenario,
    pub kind: ChartKind,
    pub coords: Vec<ChartCoord>,
    lin_q: Vec<Vec<Rational>>,
    offset_q: Vec<Rational>,
    inv_q: Vec<Vec<Rational>>,
    lin: Vec<Vec<f64>>,
    offset: Vec<f64>,
    inv: Vec<Vec<f64>>,
}

/// Nonempty subsets of `0..n` ordered by size then lexicographically.
pub fn ordered_subsets(n: usize) -> Vec<Vec<usize>> {
    let mut all: Vec<Vec<usize>> = (1..(1usize << n))
        .map(|m| (0..n).filter(|i| m >> i & 1 == 1).collect())
        .collect();
    all.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    all
}

impl Chart {
    pub fn new(scenario: &Scenario, kind: ChartKind) -> Result<Self> {
        scenario.require_supported()?;
        let n = scenario.parties;
        let mut coords = Vec::new();
        for subset in ordered_subsets(n) {
            for zi in 0..(1usize << subset.len()) {
                let inputs = (0..subset.len()).map(|k| zi >> (subset.len() - 1 - k) & 1).collect();
                coords.push(ChartCoord { subset: subset.clone(), inputs });
            }
        }
        let dim = coords.len();
        let full = scenario.len();
        let mut lin_q = vec![vec![Rational::zero(); dim]; full];
        let mut offset_q = vec![Rational::zero(); full];
        let mut inv_q = vec![vec![Rational::zero(); full]; dim];

        for i in 0..full {
            let (c, z) = scenario.split(i);
            let cs = scenario.decode_c(c);
            let zs = scenario.decode_z(z);
            match kind {
                ChartKind::CollinsGisin => {
                    let zero_mask: usize = (0..n).filter(|&k| cs[k] == 0).fold(0, |m, k| m | 1 << k);
                    for t in 0..(1usize << n) {
                        if t & zero_mask != zero_mask {
                            continue;
                        }
                        let sign = if (t & !zero_mask).count_ones() % 2 == 0 { 1 } else { -1 };
                        if t == 0 {
                            offset_q[i] += num::int(sign);
                        } else {
                            let k = Self::locate(&coords, t, &zs);
                            lin_q[i][k] += num::int(sign);
                        }
                    }
                }
                ChartKind::Correlator => {
                    let scale = num::ratio(1, 1 << n);
                    offset_q[i] = scale.clone();
                    for t in 1..(1usize << n) {
                        let ones = (0..n).filter(|&k| t >> k & 1 == 1 && cs[k] == 1).count();
                        let sign = if ones % 2 == 0 { 1 } else { -1 };
                        let k = Self::locate(&coords, t, &zs);
                        lin_q[i][k] += &scale * num::int(sign);
                    }
                }
            }
        }

        for (k, coord) in coords.iter().enumerate() {
            let others = n - coord.subset.len();
            let weight = num::ratio(1, 1 << others);
            for i in 0..full {
                let (c, z) = scenario.split(i);
                let cs = scenario.decode_c(c);
                let zs = scenario.decode_z(z);
                if coord.subset.iter().zip(&coord.inputs).any(|(&p, &x)| zs[p] != x) {
                    continue;
                }
                let coef = match kind {
                    ChartKind::CollinsGisin => {
                        if coord.subset.iter().all(|&p| cs[p] == 0) {
                            1
                        } else {
                            0
                        }
                    }
                    ChartKind::Correlator => {
                        if coord.subset.iter().filter(|&&p| cs[p] == 1).count() % 2 == 0 {
                            1
                        } else {
                            -1
                        }
                    }
                };
                if coef != 0 {
                    inv_q[k][i] = &weight * num::int(coef);
                }
            }
        }

        let to_f = |m: &Vec<Vec<Rational>>| m.iter().map(|r| num::vec_to_f64(r)).collect::<Vec<_>>();
        Ok(Chart {
            scenario: scenario.clone(),
            kind,
            lin: to_f(&lin_q),
            offset: num::vec_to_f64(&offset_q),
            inv: to_f(&inv_q),
            coords,
            lin_q,
            offset_q,
            inv_q,
        })
    }

    pub fn collins_gisin(scenario: &Scenario) -> Result<Self> {
        Self::new(scenario, ChartKind::CollinsGisin)
    }

    pub fn correlator(scenario: &Scenario) -> Result<Self> {
        Self::new(scenario, ChartKind::Correlator)
    }

    fn locate(coords: &[ChartCoord], mask: usize, zs: &[usize]) -> usize {
        coords
            .iter()
            .position(|c| {
                c.subset.iter().fold(0, |m, p| m | 1 << p) == mask
                    && c.subset.iter().zip(&c.inputs).all(|(&p, &x)| zs[p] == x)
            })
            .expect("chart coordinate exists")
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn id(&self) -> String {
        let k = match self.kind {
            ChartKind::CollinsGisin => "cg",
            ChartKind::Correlator => "corr",
        };
        format!("{k}-{}", self.scenario.id())
    }

    fn check_dim(&self, len: usize, expected: usize) -> Result<()> {
        if len != expected {
            return Err(Error::DimensionMismatch { expected, got: len });
        }
        Ok(())
    }

    pub fn to_full(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x.len(), self.dim())?;
        Ok(self
            .lin
            .iter()
            .zip(&self.offset)
            .map(|(row, o)| o + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
            .collect())
    }

    pub fn to_full_q(&self, x: &[Rational]) -> Result<Vec<Rational>> {
        self.check_dim(x.len(), self.dim())?;
        Ok(self.lin_q.iter().zip(&self.offset_q).map(|(row, o)| o + num::dot(row, x)).collect())
    }

    pub fn from_full(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(p.len(), self.scenario.len())?;
        Ok(self.inv.iter().map(|row| row.iter().zip(p).map(|(a, b)| a * b).sum()).collect())
    }

    pub fn from_full_q(&self, p: &[Rational]) -> Result<Vec<Rational>> {
        self.check_dim(p.len(), self.scenario.len())?;
        Ok(self.inv_q.iter().map(|row| num::dot(row, p)).collect())
    }

    /// Rewrites `b·p ≤ β` on full vectors as `h·x ≤ η` in chart coordinates.
    pub fn functional_to_chart_q(&self, b: &[Rational], beta: &Rational) -> Result<(Vec<Rational>, Rational)> {
        self.check_dim(b.len(), self.scenario.len())?;
        let h = (0..self.dim())
            .map(|k| {
                let mut acc = Rational::zero();
                for (i, bi) in b.iter().enumerate() {
                    if !bi.is_zero() && !self.lin_q[i][k].is_zero() {
                        acc += bi * &self.lin_q[i][k];
                    }
                }
                acc
            })
            .collect();
        Ok((h, beta - num::dot(b, &self.offset_q)))
    }

    /// Float version of [`Chart::functional_to_chart_q`]: returns `(h, constant)`
    /// with `b·p = constant + h·x`.
    pub fn functional_to_chart(&self, b: &[f64]) -> Result<(Vec<f64>, f64)> {
        self.check_dim(b.len(), self.scenario.len())?;
        let h = (0..self.dim()).map(|k| b.iter().enumerate().map(|(i, bi)| bi * self.lin[i][k]).sum()).collect();
        let c = b.iter().zip(&self.offset).map(|(a, o)| a * o).sum();
        Ok((h, c))
    }

    /// Row `i` of the linear part, `∂p_i/∂x`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.lin[i]
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    pub fn row_q(&self, i: usize) -> &[Rational] {
        &self.lin_q[i]
    }

    pub fn offset_q(&self) -> &[Rational] {
        &self.offset_q
    }

    pub fn inv_row_q(&self, k: usize) -> &[Rational] {
        &self.inv_q[k]
    }

    /// Row `k` of the inverse map, `x_k = inv_row(k)·p`.
    pub fn inv_row(&self, k: usize) -> &[f64] {
        &self.inv[k]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behaviors::ConditionalBehavior;

    #[test]
    fn dimensions() {
        assert_eq!(Chart::collins_gisin(&Scenario::bipartite()).unwrap().dim(), 8);
        assert_eq!(Chart::collins_gisin(&Scenario::tripartite()).unwrap().dim(), 26);
        assert_eq!(Chart::correlator(&Scenario::tripartite()).unwrap().dim(), 26);
        assert!(Chart::collins_gisin(&Scenario::uniform(2, 3, 2).unwrap()).is_err());
    }

    #[test]
    fn round_trip_on_ns_points() {
        for s in [Scenario::bipartite(), Scenario::tripartite()] {
            for kind in [ChartKind::CollinsGisin, ChartKind::Correlator] {
                let chart = Chart::new(&s, kind).unwrap();
                let d = ConditionalBehavior::deterministic(&s, &vec![vec![1, 0]; s.parties]);
                let x = chart.from_full(&d.probs).unwrap();
                let back = chart.to_full(&x).unwrap();
                for (a, b) in back.iter().zip(&d.probs) {
                    assert!((a - b).abs() < 1e-14);
                }
                // exact inverse on chart side as well
                let xq: Vec<Rational> = (0..chart.dim()).map(|k| num::ratio(k as i64 % 3, 7)).collect();
                let p = chart.to_full_q(&xq).unwrap();
                assert_eq!(chart.from_full_q(&p).unwrap(), xq);
            }
        }
    }

    #[test]
    fn functional_transfer() {
        let s = Scenario::bipartite();
        let chart = Chart::collins_gisin(&s).unwrap();
        let b: Vec<Rational> = (0..16).map(|i| num::int(i as i64 - 5)).collect();
        let (h, eta) = chart.functional_to_chart_q(&b, &num::int(3)).unwrap();
        let x: Vec<Rational> = (0..8).map(|k| num::ratio(1, k as i64 + 2)).collect();
        let p = chart.to_full_q(&x).unwrap();
        // b·p - 3 == h·x - eta
        assert_eq!(num::dot(&b, &p) - num::int(3), num::dot(&h, &x) - eta);
    }
}
