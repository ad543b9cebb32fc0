//! Ideal quantum behaviors mixed with white noise.

use num_complex::Complex64;

use super::behavior::{ConditionalBehavior, JointBehavior};
use super::born::{self, Bloch, SIGMA_X, SIGMA_Y, SIGMA_Z};
use super::scenario::Scenario;
use crate::error::{domain, Result};

fn check_w(w: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&w) {
        return domain(format!("noise weight {w} outside [0, 1]"));
    }
    Ok(())
}

/// Behavior from full-party correlators with vanishing marginals,
/// `p(c|z) = 2^{-N}(1 + (-1)^{Σc} E_z)`.
fn from_full_correlators(scenario: &Scenario, e: &[f64]) -> ConditionalBehavior {
    let scale = 1.0 / scenario.num_c() as f64;
    let mut probs = vec![0.0; scenario.len()];
    for z in 0..scenario.num_z() {
        for c in 0..scenario.num_c() {
            let ones: usize = scenario.decode_c(c).iter().sum();
            let sign = if ones % 2 == 0 { 1.0 } else { -1.0 };
            probs[scenario.index(c, z)] = scale * (1.0 + sign * e[z]);
        }
    }
    ConditionalBehavior { scenario: scenario.clone(), probs }
}

/// Optimal tilted-CHSH correlations `<A0B_y> = α/√(1+α²)`,
/// `<A1B_y> = (-1)^y/√(1+α²)`, mixed with uniform noise at weight `w`.
pub fn make_tilted_chsh(alpha: f64, w: f64) -> Result<ConditionalBehavior> {
    if !(alpha >= 1.0) || !alpha.is_finite() {
        return domain(format!("alpha must be ≥ 1, got {alpha}"));
    }
    check_w(w)?;
    let r = (1.0 + alpha * alpha).sqrt();
    let e = [alpha / r, alpha / r, 1.0 / r, -1.0 / r];
    Ok(from_full_correlators(&Scenario::bipartite(), &e).with_noise(w))
}

/// GHZ state measured with `σx` (input 0) and `σy` (input 1), mixed with
/// uniform noise at weight `w`.
pub fn make_mermin_ghz(w: f64) -> Result<ConditionalBehavior> {
    check_w(w)?;
    let s = Scenario::tripartite();
    let e: Vec<f64> = (0..8)
        .map(|z| match (z as u32).count_ones() {
            0 => 1.0,
            2 => -1.0,
            _ => 0.0,
        })
        .collect();
    Ok(from_full_correlators(&s, &e).with_noise(w))
}

/// Same behavior as [`make_mermin_ghz`], evaluated through the Born rule.
pub fn ghz_born(w: f64) -> Result<ConditionalBehavior> {
    check_w(w)?;
    let s = Scenario::tripartite();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut state = vec![Complex64::new(0.0, 0.0); 8];
    state[0] = Complex64::new(h, 0.0);
    state[7] = Complex64::new(h, 0.0);
    let meas = vec![vec![SIGMA_X, SIGMA_Y]; 3];
    Ok(born::born_behavior(&s, &state, &meas)?.with_noise(w))
}

/// `θ = arccos √((√5 - 1)/2)`.
pub fn hardy_theta() -> f64 {
    ((5f64.sqrt() - 1.0) / 2.0).sqrt().acos()
}

/// State and measurements of the Hardy test.
///
/// State `(cos θ (|01> + |10>) + sin θ |11>)/√(1 + cos²θ)`; input 0 measures in
/// `{sin θ|0> - cos θ|1>, cos θ|0> + sin θ|1>}`, input 1 in the computational basis.
pub fn hardy_setup() -> (Vec<Complex64>, Vec<Vec<Bloch>>) {
    let t = hardy_theta();
    let (c, s) = (t.cos(), t.sin());
    let norm = (1.0 + c * c).sqrt();
    let state = vec![
        Complex64::new(0.0, 0.0),
        Complex64::new(c / norm, 0.0),
        Complex64::new(c / norm, 0.0),
        Complex64::new(s / norm, 0.0),
    ];
    let m0 = born::bloch_of(s, -c);
    (state, vec![vec![m0, SIGMA_Z], vec![m0, SIGMA_Z]])
}

/// Noisy Hardy correlations with uniform inputs,
/// `p(a,b,x,y) = (1-w) p*(ab|xy)/4 + w/16`.
pub fn make_hardy(w: f64) -> Result<JointBehavior> {
    check_w(w)?;
    let s = Scenario::bipartite();
    let (state, meas) = hardy_setup();
    let mut cond = born::born_behavior(&s, &state, &meas)?;
    // the Born evaluation leaves ~1e-17 residue on the exact-zero cells
    for p in &mut cond.probs {
        if p.abs() < 1e-15 {
            *p = 0.0;
        }
    }
    JointBehavior::from_conditional(&cond.with_noise(w), &[0.25; 4])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behaviors::functional::{bell_value, bell_value_joint, chsh, chsh_alpha, mdl, mermin};

    #[test]
    fn tilted_values() {
        let p = make_tilted_chsh(1.0, 0.0).unwrap();
        assert!((bell_value(&p, &chsh()).unwrap() - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        let p8 = make_tilted_chsh(8.0, 0.0).unwrap();
        let e00 = p8.get(0, 0) + p8.get(3, 0) - p8.get(1, 0) - p8.get(2, 0);
        assert!((e00 - 8.0 / 65f64.sqrt()).abs() < 1e-12);
        let u = make_tilted_chsh(3.0, 1.0).unwrap();
        assert!(u.probs.iter().all(|&v| (v - 0.25).abs() < 1e-15));
        for alpha in [1.0, 8.0] {
            for w in [0.0, 0.1, 0.5] {
                let p = make_tilted_chsh(alpha, w).unwrap();
                let v = bell_value(&p, &chsh_alpha(alpha)).unwrap();
                assert!((v - (1.0 - w) * 2.0 * (1.0 + alpha * alpha).sqrt()).abs() < 1e-12);
                p.check_normalized(1e-12).unwrap();
                assert!(p.ns_violation() < 1e-12);
            }
        }
        assert!(make_tilted_chsh(0.5, 0.0).is_err());
        assert!(make_tilted_chsh(1.0, 1.5).is_err());
    }

    #[test]
    fn ghz_values_and_born_agreement() {
        for (w, m) in [(0.0, 4.0), (0.25, 3.0), (0.018, 3.928)] {
            let p = make_mermin_ghz(w).unwrap();
            assert!((bell_value(&p, &mermin()).unwrap() - m).abs() < 1e-12);
            let q = ghz_born(w).unwrap();
            for (a, b) in p.probs.iter().zip(&q.probs) {
                assert!((a - b).abs() < 1e-14);
            }
        }
        let u = make_mermin_ghz(1.0).unwrap();
        assert!(u.probs.iter().all(|&v| (v - 0.125).abs() < 1e-15));
    }

    #[test]
    fn hardy_zeros_and_value() {
        let h = make_hardy(0.0).unwrap();
        let idx = |a: usize, b: usize, x: usize, y: usize| h.scenario.index(a * 2 + b, x * 2 + y);
        for (a, b, x, y) in [(0, 1, 0, 1), (1, 0, 1, 0), (0, 0, 1, 1)] {
            assert!(h.probs[idx(a, b, x, y)].abs() <= 1e-12);
        }
        let p0000 = h.probs[idx(0, 0, 0, 0)];
        assert!((4.0 * p0000 - 0.090170).abs() < 1e-6);
        let v = bell_value_joint(&h, &mdl(0.1)).unwrap();
        assert!((v - p0000 * 0.16).abs() < 1e-15);
        let u = make_hardy(1.0).unwrap();
        assert!(u.probs.iter().all(|&v| (v - 1.0 / 16.0).abs() < 1e-15));
    }
}
