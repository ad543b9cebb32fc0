#![allow(dead_code)]

pub mod pef_props;

use dicert::num::{QVec, Rational};
use dicert::polytope::{HPolytope, Halfspace, Polytope};
use num_traits::{One, Signed, Zero};
use rand::Rng;

/// Solves `A x = b` exactly; `None` when singular.
pub fn solve_exact(mut a: Vec<QVec>, mut b: Vec<Rational>) -> Option<QVec> {
    let n = a.len();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = &a[r][col] / &a[col][col];
                for k in col..n {
                    let v = &f * &a[col][k];
                    a[r][k] -= v;
                }
                let v = &f * &b[col];
                b[r] -= v;
            }
        }
    }
    Some((0..n).map(|i| &b[i] / &a[i][i]).collect())
}

/// Vertices as feasible solutions of every square subsystem of tight inequalities.
pub fn brute_force_vertices(h: &HPolytope) -> Vec<QVec> {
    let d = h.dim;
    let m = h.inequalities.len();
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..d).collect();
    loop {
        let a = idx.iter().map(|&i| h.inequalities[i].normal.clone()).collect();
        let b = idx.iter().map(|&i| h.inequalities[i].bound.clone()).collect();
        if let Some(x) = solve_exact(a, b) {
            if h.contains(&x) {
                out.push(x);
            }
        }
        // next combination
        let mut k = d;
        while k > 0 && idx[k - 1] == m - d + k - 1 {
            k -= 1;
        }
        if k == 0 {
            break;
        }
        idx[k - 1] += 1;
        for j in k..d {
            idx[j] = idx[j - 1] + 1;
        }
    }
    out.sort();
    out.dedup();
    out
}

/// A random integer cut that strictly separates at least one vertex and keeps at least one.
pub fn random_cut<R: Rng>(p: &Polytope, rng: &mut R) -> Halfspace {
    loop {
        let normal: QVec = (0..p.dim).map(|_| Rational::from_integer(rng.random_range(-3i64..=3).into())).collect();
        if normal.iter().all(|v| v.is_zero()) {
            continue;
        }
        let vals: Vec<Rational> = p.vertices.iter().map(|v| dicert::num::dot(&normal, v)).collect();
        let lo = vals.iter().min().unwrap().clone();
        let hi = vals.iter().max().unwrap().clone();
        if lo == hi {
            continue;
        }
        let t = Rational::new(rng.random_range(1i64..8).into(), 8.into());
        let bound = &lo + (&hi - &lo) * t;
        if bound.is_negative() && rng.random_bool(0.5) {
            continue;
        }
        return Halfspace::new(normal, bound).unwrap();
    }
}

pub fn is_half_or_integral(v: &[Rational]) -> bool {
    let half = Rational::new(1.into(), 2.into());
    v.iter().all(|x| x.is_zero() || x.is_one() || *x == half)
}
