use dicert::behaviors::born::random_quantum_behavior;
use dicert::behaviors::{make_tilted_chsh, ConditionalBehavior, JointBehavior, OutputMap, Scenario};
use dicert::pef::{optimize_pef, Pef, PefOptions, PefSolution, VertexSet};
use dicert::polytope::sets::full_vertices;
use dicert::polytope::{ns_polytope, Polytope};
use rand::Rng;

pub fn ns_vertex_set(p_z: &[f64]) -> VertexSet {
    let sc = Scenario::bipartite();
    let chart = dicert::behaviors::Chart::collins_gisin(&sc).unwrap();
    let poly = Polytope::from_h(&ns_polytope(&sc).unwrap()).unwrap();
    VertexSet::from_conditional(sc.num_c(), &full_vertices(&chart, &poly.vertices).unwrap(), p_z).unwrap()
}

/// PEFs optimized for noisy CHSH on the bipartite NS vertices, over a few powers and output maps.
pub fn ns_optimizers() -> Vec<(JointBehavior, PefSolution)> {
    let sc = Scenario::bipartite();
    let verts = ns_vertex_set(&[0.25; 4]);
    let mut out = Vec::new();
    for (w, beta) in [(0.05, 0.02), (0.15, 0.1), (0.0, 0.5)] {
        let p = JointBehavior::uniform_inputs(&make_tilted_chsh(1.0, w).unwrap());
        for dmap in [OutputMap::identity(&sc), OutputMap::parties(&sc, &[0]).unwrap()] {
            let sol = optimize_pef(&p, &verts, &dmap, beta, &PefOptions::default()).unwrap();
            out.push((p.clone(), sol));
        }
    }
    out
}

/// `Σ F(c,z) σ(c,z) σ(d(c)|z)^β`, computed directly from a joint vector.
pub fn pef_expectation(f: &Pef, sigma: &[f64], num_c: usize) -> f64 {
    let mut total = 0.0;
    for (z, row) in sigma.chunks(num_c).enumerate() {
        let mz: f64 = row.iter().sum();
        if mz <= 0.0 {
            continue;
        }
        for c in 0..num_c {
            let d = f.dmap.dmap[c];
            let md: f64 = (0..num_c).filter(|&c2| f.dmap.dmap[c2] == d).map(|c2| row[c2]).sum();
            if md > 0.0 {
                total += f.values[z * num_c + c] * row[c] * (md / mz).powf(f.beta);
            }
        }
    }
    total
}

/// Largest PEF expectation over random convex combinations of the vertices.
pub fn worst_mixture<R: Rng>(f: &Pef, verts: &VertexSet, trials: usize, rng: &mut R) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for t in 0..trials {
        let k = if t % 2 == 0 { rng.random_range(2..=4) } else { verts.len() };
        let mut w: Vec<f64> = (0..k).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= s);
        let mut sigma = vec![0.0; verts.num_c * verts.num_z];
        for wi in &w {
            let v = &verts.joint[rng.random_range(0..verts.len())];
            for (a, b) in sigma.iter_mut().zip(v) {
                *a += wi * b;
            }
        }
        worst = worst.max(pef_expectation(f, &sigma, verts.num_c));
    }
    worst
}

/// Conditional Shannon entropy `H(D|Z)` of a joint vector in bits.
pub fn shannon_d_given_z(sigma: &[f64], num_c: usize, dmap: &OutputMap) -> f64 {
    let mut h = 0.0;
    for row in sigma.chunks(num_c) {
        let mz: f64 = row.iter().sum();
        let mut md = vec![0.0; dmap.num_d];
        for (c, m) in row.iter().enumerate() {
            md[dmap.dmap[c]] += m;
        }
        for m in md {
            if m > 0.0 {
                h -= m * (m / mz).log2();
            }
        }
    }
    h
}

/// Largest `E_μ[log2 F]/β − H_μ(D|Z)` over random quantum behaviors with the inputs of `p_z`.
pub fn worst_tradeoff_gap<R: Rng>(f: &Pef, p_z: &[f64], samples: usize, rng: &mut R) -> f64 {
    let sc = Scenario::bipartite();
    let nc = sc.num_c();
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..samples {
        let q = random_quantum_behavior(&sc, rng).unwrap();
        let mu = JointBehavior::from_conditional(&q, p_z).unwrap();
        let est: f64 = mu.probs.iter().zip(&f.values).filter(|(m, _)| **m > 0.0).map(|(m, v)| m * v.log2()).sum::<f64>() / f.beta;
        worst = worst.max(est - shannon_d_given_z(&mu.probs, nc, &f.dmap));
    }
    worst
}

/// Brute force of `E[Π_i F(c_i,z_i) μ(𝐝|𝐳)^β]` over every sequence of `rounds`
/// trials. Round `i` given its history is `λ v0 + (1−λ) v1` with `λ` chosen
/// per history by `lambda`; both vertices share the same input marginal.
pub fn product_expectation(f: &Pef, v0: &[f64], v1: &[f64], num_c: usize, rounds: usize, lambda: &mut dyn FnMut(&[usize]) -> f64) -> f64 {
    let cells = v0.len();
    let total = cells.pow(rounds as u32);
    let mut prob = vec![0.0; total];
    let mut tprod = vec![0.0; total];
    for s in 0..total {
        let seq: Vec<usize> = (0..rounds).map(|i| (s / cells.pow((rounds - 1 - i) as u32)) % cells).collect();
        let mut pr = 1.0;
        let mut t = 1.0;
        for i in 0..rounds {
            let l = lambda(&seq[..i]);
            pr *= l * v0[seq[i]] + (1.0 - l) * v1[seq[i]];
            t *= f.values[seq[i]];
        }
        prob[s] = pr;
        tprod[s] = t;
    }
    // μ(𝐝|𝐳) by summing over sequences with the same inputs and D-values
    let key = |s: usize, with_d: bool| -> Vec<usize> {
        (0..rounds)
            .flat_map(|i| {
                let cell = (s / cells.pow((rounds - 1 - i) as u32)) % cells;
                let (z, c) = (cell / num_c, cell % num_c);
                if with_d {
                    vec![z, f.dmap.dmap[c]]
                } else {
                    vec![z]
                }
            })
            .collect()
    };
    let mut md = std::collections::HashMap::new();
    let mut mz = std::collections::HashMap::new();
    for s in 0..total {
        *md.entry(key(s, true)).or_insert(0.0) += prob[s];
        *mz.entry(key(s, false)).or_insert(0.0) += prob[s];
    }
    (0..total)
        .filter(|&s| prob[s] > 0.0)
        .map(|s| tprod[s] * prob[s] * (md[&key(s, true)] / mz[&key(s, false)]).powf(f.beta))
        .sum()
}

/// The CHSH-favoured PR box with uniform inputs.
pub fn pr_box_joint() -> Vec<f64> {
    let sc = Scenario::bipartite();
    let probs = (0..sc.len())
        .map(|i| {
            let (c, z) = sc.split(i);
            let (ab, xy) = (sc.decode_c(c), sc.decode_z(z));
            if (ab[0] ^ ab[1]) == (xy[0] & xy[1]) {
                0.5
            } else {
                0.0
            }
        })
        .collect();
    JointBehavior::uniform_inputs(&ConditionalBehavior::new(sc, probs).unwrap()).probs
}
