//! Born-rule simulation of qubit Bell experiments.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::behavior::ConditionalBehavior;
use super::scenario::Scenario;
use crate::error::{Error, Result};

/// Bloch vector of a two-outcome projective qubit measurement; outcome 0
/// projects onto the `+n` eigenstate of `n·σ`.
pub type Bloch = [f64; 3];

pub const SIGMA_X: Bloch = [1.0, 0.0, 0.0];
pub const SIGMA_Y: Bloch = [0.0, 1.0, 0.0];
pub const SIGMA_Z: Bloch = [0.0, 0.0, 1.0];

/// Bloch vector of the pure qubit state `a|0> + b|1>` (real amplitudes).
pub fn bloch_of(a: f64, b: f64) -> Bloch {
    let n = a * a + b * b;
    [2.0 * a * b / n, 0.0, (a * a - b * b) / n]
}

fn projector(n: &Bloch, outcome: usize) -> [[Complex64; 2]; 2] {
    let s = if outcome == 0 { 0.5 } else { -0.5 };
    [
        [Complex64::new(0.5 + s * n[2], 0.0), Complex64::new(s * n[0], -s * n[1])],
        [Complex64::new(s * n[0], s * n[1]), Complex64::new(0.5 - s * n[2], 0.0)],
    ]
}

/// Applies a single-qubit operator to qubit `k` (qubit 0 most significant).
fn apply(state: &mut [Complex64], nqubits: usize, k: usize, m: &[[Complex64; 2]; 2]) {
    let stride = 1usize << (nqubits - 1 - k);
    for i in 0..state.len() {
        if i & stride == 0 {
            let (a, b) = (state[i], state[i | stride]);
            state[i] = m[0][0] * a + m[0][1] * b;
            state[i | stride] = m[1][0] * a + m[1][1] * b;
        }
    }
}

/// `p(c|z) = <ψ| ⊗_i P^{(i)}_{c_i|z_i} |ψ>` for a pure `N`-qubit state.
///
/// `measurements[i][x]` is party `i`'s Bloch vector for input `x`.
pub fn born_behavior(scenario: &Scenario, state: &[Complex64], measurements: &[Vec<Bloch>]) -> Result<ConditionalBehavior> {
    scenario.require_supported()?;
    let n = scenario.parties;
    if state.len() != 1 << n {
        return Err(Error::DimensionMismatch { expected: 1 << n, got: state.len() });
    }
    if measurements.len() != n || measurements.iter().any(|m| m.len() != 2) {
        return Err(Error::Domain("need two measurements per party".into()));
    }
    let norm: f64 = state.iter().map(|a| a.norm_sqr()).sum();
    let mut probs = vec![0.0; scenario.len()];
    for z in 0..scenario.num_z() {
        let zs = scenario.decode_z(z);
        for c in 0..scenario.num_c() {
            let cs = scenario.decode_c(c);
            let mut phi = state.to_vec();
            for k in 0..n {
                apply(&mut phi, n, k, &projector(&measurements[k][zs[k]], cs[k]));
            }
            let amp: f64 = phi.iter().map(|a| a.norm_sqr()).sum();
            probs[scenario.index(c, z)] = (amp / norm).max(0.0);
        }
    }
    ConditionalBehavior::new(scenario.clone(), probs)
}

fn random_unit<R: Rng + ?Sized>(rng: &mut R) -> Bloch {
    loop {
        let v: [f64; 3] = [StandardNormal.sample(rng), StandardNormal.sample(rng), StandardNormal.sample(rng)];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-9 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

/// Haar-random pure state on `n` qubits.
pub fn random_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Complex64> {
    let mut v: Vec<Complex64> =
        (0..1usize << n).map(|_| Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))).collect();
    let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut v {
        *a /= norm;
    }
    v
}

/// Random quantum behavior: random pure state, random projective qubit
/// measurements, optionally mixed with white noise of random weight.
pub fn random_quantum_behavior<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> Result<ConditionalBehavior> {
    let n = scenario.parties;
    let state = random_state(n, rng);
    let meas: Vec<Vec<Bloch>> = (0..n).map(|_| vec![random_unit(rng), random_unit(rng)]).collect();
    let b = born_behavior(scenario, &state, &meas)?;
    if rng.random_bool(0.5) {
        let w: f64 = rng.random_range(0.0..0.3);
        Ok(b.with_noise(w))
    } else {
        Ok(b)
    }
}

/// Quantum behavior from the optimal CHSH strategy rotated by random local
/// angles; concentrates samples near the Tsirelson boundary.
pub fn random_boundary_behavior<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> Result<ConditionalBehavior> {
    let n = scenario.parties;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut state = vec![Complex64::new(0.0, 0.0); 1 << n];
    state[0] = Complex64::new(s, 0.0);
    state[(1 << n) - 1] = Complex64::new(s, 0.0);
    let meas: Vec<Vec<Bloch>> = (0..n)
        .map(|_| {
            let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let b: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            vec![[a.cos(), a.sin(), 0.0], [b.cos(), b.sin(), 0.0]]
        })
        .collect();
    born_behavior(scenario, &state, &meas)
}
