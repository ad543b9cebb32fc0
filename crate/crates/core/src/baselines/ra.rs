use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RaParams {
    /// Observed MDL value.
    pub h_exp: f64,
    pub delta: f64,
    pub n: f64,
    pub epsilon: f64,
    /// Grid resolution for both `k` and `s_Az`.
    pub grid: usize,
}

impl RaParams {
    pub fn new(h_exp: f64, delta: f64, n: f64, epsilon: f64) -> Self {
        RaParams { h_exp, delta, n, epsilon, grid: 200 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RaBound {
    /// Raw optimum, possibly negative.
    pub total: f64,
    pub k: f64,
    pub s_az: f64,
    pub eps_az: f64,
    pub gamma: f64,
}

impl RaBound {
    pub fn reported(&self) -> f64 {
        self.total.max(0.0)
    }
}

fn log2_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (1.0 + (lo - hi).exp2()).log2()
}

/// `max_{k, s_Az} −log2(γ^{α(k) n} + 2 ε_Az) + log2 ε` with
/// `ε_Az = 2 e^{−n s_Az²/2} < ε` and `α(k) = (h − s_Az − k)/(1/16 − k)`.
pub fn ra_ns_bound(params: &RaParams) -> Result<RaBound> {
    let RaParams { h_exp, delta, n, epsilon, grid } = *params;
    if !(0.0..0.5).contains(&delta) || !(epsilon > 0.0 && epsilon < 1.0) || !(n >= 1.0) || grid < 2 {
        return Err(Error::Domain("invalid amplification parameters".into()));
    }
    let gamma = 1.0 - h_exp / (0.25 - delta * delta).powi(2);
    let zero = RaBound { total: 0.0, k: 0.0, s_az: 0.0, eps_az: 0.0, gamma };
    if !(h_exp > 0.0) || !(gamma < 1.0) {
        return Ok(zero);
    }
    let log_gamma = if gamma > 0.0 { gamma.log2() } else { f64::NEG_INFINITY };
    let log_eps = epsilon.log2();
    // ε_Az < ε requires s_Az > s_min
    let s_min = (2.0 * (2.0 / epsilon).ln() / n).sqrt() * (1.0 + 1e-12);
    if s_min >= h_exp {
        return Ok(zero);
    }
    let eval = |s: f64| -> RaBound {
        let log_eps_az = 1.0 - n * s * s / (2.0 * std::f64::consts::LN_2);
        let l = h_exp - s;
        let mut best = RaBound { total: f64::NEG_INFINITY, k: 0.0, s_az: s, eps_az: log_eps_az.exp2(), gamma };
        for ki in 0..grid {
            let k = l * ki as f64 / (grid - 1) as f64;
            let alpha = (l - k) / (1.0 / 16.0 - k);
            let lg = if alpha > 0.0 { alpha * n * log_gamma } else { 0.0 };
            let total = -log2_add(lg, 1.0 + log_eps_az) + log_eps;
            if total > best.total {
                best = RaBound { total, k, ..best };
            }
        }
        best
    };
    let s_at = |i: f64| s_min * (h_exp / s_min).powf(i / (grid - 1) as f64);
    let mut best_i = 0;
    let mut best = eval(s_at(0.0));
    for si in 1..grid {
        let b = eval(s_at(si as f64));
        if b.total > best.total {
            best = b;
            best_i = si;
        }
    }
    // golden-section polish between the grid neighbours
    let (mut lo, mut hi) = ((best_i as f64 - 1.0).max(0.0), (best_i as f64 + 1.0).min(grid as f64 - 1.0));
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..60 {
        let a = hi - phi * (hi - lo);
        let b = lo + phi * (hi - lo);
        if eval(s_at(a)).total >= eval(s_at(b)).total {
            hi = b;
        } else {
            lo = a;
        }
    }
    let polished = eval(s_at(0.5 * (lo + hi)));
    if polished.total > best.total {
        best = polished;
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behaviors::{bell_value_joint, functional::mdl, make_hardy};

    #[test]
    fn no_violation_no_randomness() {
        let b = ra_ns_bound(&RaParams::new(0.0, 0.1, 1e6, 2f64.powi(-32))).unwrap();
        assert_eq!(b.reported(), 0.0);
    }

    #[test]
    fn hardy_gives_positive_total() {
        let h = bell_value_joint(&make_hardy(0.0).unwrap(), &mdl(0.1)).unwrap();
        assert!(h > 0.0);
        let b = ra_ns_bound(&RaParams::new(h, 0.1, 1e10, 2f64.powi(-32))).unwrap();
        assert!(b.total > 0.0, "{b:?}");
    }

    #[test]
    fn monotone_in_violation() {
        let mut last = f64::NEG_INFINITY;
        for i in 1..20 {
            let h = 0.0005 * i as f64;
            let b = ra_ns_bound(&RaParams::new(h, 0.1, 1e8, 2f64.powi(-32))).unwrap();
            assert!(b.total >= last - 1e-9);
            last = b.total;
        }
    }

    #[test]
    fn grid_resolution_is_stable() {
        let h = 0.006;
        let base = ra_ns_bound(&RaParams::new(h, 0.1, 1e9, 2f64.powi(-32))).unwrap().total;
        let mut fine = RaParams::new(h, 0.1, 1e9, 2f64.powi(-32));
        fine.grid = 1000;
        let f = ra_ns_bound(&fine).unwrap().total;
        assert!(f >= base - 1e-9 && (f - base).abs() <= 0.01 * f.abs(), "{base} {f}");
    }
}
