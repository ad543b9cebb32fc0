//! Double-description vertex enumeration in exact integer arithmetic.
//!
//! The polytope `{x : h_j·x ≤ η_j}` is homogenized to the cone
//! `{(λ, x) : η_j λ - h_j·x ≥ 0, λ ≥ 0}` whose extreme rays with `λ > 0`
//! are the vertices. Rows are inserted one at a time; adjacency of rays is
//! decided combinatorially from their zero sets.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::bitset::{FacetSet, CAPACITY};
use super::halfspace::HPolytope;
use crate::error::{Error, Result};
use crate::num::{self, QVec, Rational};

trait DdInt: Clone + PartialEq + Send + Sync {
    fn from_big(b: &BigInt) -> Option<Self>;
    fn to_big(&self) -> BigInt;
    fn signum(&self) -> i8;
    fn dot(a: &[Self], b: &[Self]) -> Option<Self>;
    /// `a·x + b·y`.
    fn combine(a: &Self, x: &[Self], b: &Self, y: &[Self]) -> Option<Vec<Self>>;
    fn make_primitive(v: &mut [Self]);
    fn neg(&self) -> Self;
}

impl DdInt for i128 {
    fn from_big(b: &BigInt) -> Option<Self> {
        b.to_i128().filter(|v| v.unsigned_abs() < (1u128 << 100))
    }
    fn to_big(&self) -> BigInt {
        BigInt::from(*self)
    }
    fn signum(&self) -> i8 {
        i128::signum(*self) as i8
    }
    fn dot(a: &[Self], b: &[Self]) -> Option<Self> {
        let mut acc: i128 = 0;
        for (x, y) in a.iter().zip(b) {
            if *x != 0 && *y != 0 {
                acc = acc.checked_add(x.checked_mul(*y)?)?;
            }
        }
        Some(acc)
    }
    fn combine(a: &Self, x: &[Self], b: &Self, y: &[Self]) -> Option<Vec<Self>> {
        x.iter().zip(y).map(|(u, v)| a.checked_mul(*u)?.checked_add(b.checked_mul(*v)?)).collect()
    }
    fn make_primitive(v: &mut [Self]) {
        let g = v.iter().fold(0i128, |g, x| g.gcd(x));
        if g > 1 {
            v.iter_mut().for_each(|x| *x /= g);
        }
    }
    fn neg(&self) -> Self {
        -self
    }
}

impl DdInt for BigInt {
    fn from_big(b: &BigInt) -> Option<Self> {
        Some(b.clone())
    }
    fn to_big(&self) -> BigInt {
        self.clone()
    }
    fn signum(&self) -> i8 {
        if self.is_positive() {
            1
        } else if self.is_negative() {
            -1
        } else {
            0
        }
    }
    fn dot(a: &[Self], b: &[Self]) -> Option<Self> {
        let mut acc = BigInt::zero();
        for (x, y) in a.iter().zip(b) {
            if !x.is_zero() && !y.is_zero() {
                acc += x * y;
            }
        }
        Some(acc)
    }
    fn combine(a: &Self, x: &[Self], b: &Self, y: &[Self]) -> Option<Vec<Self>> {
        Some(x.iter().zip(y).map(|(u, v)| a * u + b * v).collect())
    }
    fn make_primitive(v: &mut [Self]) {
        let g = v.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
        if g > BigInt::one() {
            v.iter_mut().for_each(|x| *x /= &g);
        }
    }
    fn neg(&self) -> Self {
        -self
    }
}

/// Vertices with their sets of tight inequalities.
pub struct Enumerated {
    pub vertices: Vec<QVec>,
    pub tight: Vec<FacetSet>,
}

/// Integer rows `(η, -h)` scaled to clear denominators, followed by `λ ≥ 0`.
fn homogenized_rows(p: &HPolytope) -> Vec<Vec<BigInt>> {
    let mut rows: Vec<Vec<BigInt>> = p
        .inequalities
        .iter()
        .map(|h| {
            let l = h.normal.iter().fold(h.bound.denom().clone(), |l, v| l.lcm(v.denom()));
            let scale = |q: &Rational| (q * Rational::from_integer(l.clone())).to_integer();
            let mut r = vec![scale(&h.bound)];
            r.extend(h.normal.iter().map(|v| -scale(v)));
            r
        })
        .collect();
    let mut lam = vec![BigInt::zero(); p.dim + 1];
    lam[0] = BigInt::one();
    rows.push(lam);
    rows
}

/// Greedy row basis by rational elimination; returns chosen rows or a
/// nonzero vector of the common null space if the rows are rank deficient.
fn row_basis(rows: &[Vec<BigInt>], order: &[usize]) -> std::result::Result<Vec<usize>, QVec> {
    let n = rows[0].len();
    let mut reduced: Vec<(usize, QVec)> = Vec::new();
    let mut chosen = Vec::new();
    for &i in order {
        let mut v: QVec = rows[i].iter().map(|x| Rational::from_integer(x.clone())).collect();
        for (piv, r) in &reduced {
            if !v[*piv].is_zero() {
                let f = &v[*piv] / &r[*piv];
                for k in 0..n {
                    if !r[k].is_zero() {
                        v[k] = &v[k] - &f * &r[k];
                    }
                }
            }
        }
        if let Some(piv) = (0..n).find(|&k| !v[k].is_zero()) {
            reduced.push((piv, v));
            chosen.push(i);
            if chosen.len() == n {
                return Ok(chosen);
            }
        }
    }
    // null space direction: solve reduced rows = 0 with one free column set to 1
    let pivots: Vec<usize> = reduced.iter().map(|(p, _)| *p).collect();
    let free = (0..n).find(|k| !pivots.contains(k)).unwrap_or(0);
    let mut x = vec![Rational::zero(); n];
    x[free] = Rational::one();
    for (piv, r) in reduced.iter().rev() {
        let s: Rational = (0..n).filter(|k| k != piv).map(|k| &r[k] * &x[k]).sum();
        x[*piv] = -s / &r[*piv];
    }
    Err(x)
}

/// Solves `A_B r_i = e_i` for each basis row, returning primitive integer rays.
fn initial_rays(rows: &[Vec<BigInt>], basis: &[usize]) -> Vec<Vec<BigInt>> {
    let n = basis.len();
    let mut a: Vec<Vec<Rational>> = basis
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let mut row: Vec<Rational> = rows[r].iter().map(|x| Rational::from_integer(x.clone())).collect();
            row.extend((0..n).map(|k| if k == i { Rational::one() } else { Rational::zero() }));
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero()).expect("basis is nonsingular");
        a.swap(col, piv);
        let p = a[col][col].clone();
        a[col].iter_mut().for_each(|v| *v = &*v / &p);
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                let pivot_row = a[col].clone();
                for (v, pv) in a[r].iter_mut().zip(&pivot_row) {
                    *v = &*v - &f * pv;
                }
            }
        }
    }
    // inverse columns
    (0..n)
        .map(|i| {
            let col: Vec<Rational> = (0..n).map(|r| a[r][n + i].clone()).collect();
            let l = col.iter().fold(BigInt::one(), |l, v| l.lcm(v.denom()));
            let mut v: Vec<BigInt> = col.iter().map(|q| (q * Rational::from_integer(l.clone())).to_integer()).collect();
            BigInt::make_primitive(&mut v);
            v
        })
        .collect()
}

struct Ray<T> {
    v: Vec<T>,
    zero: FacetSet,
}

fn run<T: DdInt>(rows: &[Vec<BigInt>], basis: &[usize], init: &[Vec<BigInt>]) -> Option<Vec<Ray<T>>> {
    let rows_t: Vec<Vec<T>> = rows.iter().map(|r| r.iter().map(T::from_big).collect()).collect::<Option<_>>()?;
    let cone_dim = basis.len();
    let mut processed = FacetSet::new();
    for &b in basis {
        processed.insert(b);
    }
    let mut rays: Vec<Ray<T>> = init
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let zero = FacetSet::from_indices(basis.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, &b)| b));
            Some(Ray { v: r.iter().map(T::from_big).collect::<Option<Vec<T>>>()?, zero })
        })
        .collect::<Option<_>>()?;
    // rays of the initial simplex cone satisfy the remaining rows only partially
    for (j, row) in rows_t.iter().enumerate() {
        if processed.contains(j) {
            continue;
        }
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        let mut vals = Vec::with_capacity(rays.len());
        for (k, r) in rays.iter_mut().enumerate() {
            let s = T::dot(row, &r.v)?;
            match s.signum() {
                1 => pos.push(k),
                -1 => neg.push(k),
                _ => r.zero.insert(j),
            }
            vals.push(s);
        }
        if !neg.is_empty() {
            let mut tight_index: Vec<Vec<u32>> = vec![Vec::new(); rows.len()];
            for (k, r) in rays.iter().enumerate() {
                for f in r.zero.iter() {
                    if processed.contains(f) {
                        tight_index[f].push(k as u32);
                    }
                }
            }
            let mut fresh = Vec::new();
            for &p in &pos {
                for &n in &neg {
                    let common = rays[p].zero.and(&rays[n].zero);
                    if common.len() + 2 < cone_dim {
                        continue;
                    }
                    let best = common.iter().min_by_key(|&f| tight_index[f].len());
                    let adjacent = match best {
                        Some(f) => !tight_index[f].iter().any(|&r| {
                            let r = r as usize;
                            r != p && r != n && rays[r].zero.is_superset(&common)
                        }),
                        None => rays.len() == 2,
                    };
                    if adjacent {
                        let mut v = T::combine(&vals[p], &rays[n].v, &vals[n].neg(), &rays[p].v)?;
                        T::make_primitive(&mut v);
                        let mut zero = common;
                        zero.insert(j);
                        fresh.push(Ray { v, zero });
                    }
                }
            }
            let mut k = 0;
            rays.retain(|_| {
                let keep = vals[k].signum() >= 0;
                k += 1;
                keep
            });
            rays.extend(fresh);
        }
        processed.insert(j);
    }
    Some(rays)
}

/// Enumerates the vertices of a bounded polytope.
pub fn enumerate(p: &HPolytope) -> Result<Enumerated> {
    let m = p.inequalities.len();
    if m + 1 > CAPACITY {
        return Err(Error::Unsupported(format!("{m} inequalities exceed the facet capacity {CAPACITY}")));
    }
    let rows = homogenized_rows(p);
    let mut order: Vec<usize> = vec![m];
    order.extend(0..m);
    let basis = match row_basis(&rows, &order) {
        Ok(b) => b,
        Err(null) => {
            let ray: Vec<String> = null[1..].iter().map(num::format_q).collect();
            return Err(Error::Unbounded { ray });
        }
    };
    let init = initial_rays(&rows, &basis);
    let rays: Vec<(Vec<BigInt>, FacetSet)> = match run::<i128>(&rows, &basis, &init) {
        Some(r) => r.into_iter().map(|r| (r.v.iter().map(|x| x.to_big()).collect(), r.zero)).collect(),
        None => run::<BigInt>(&rows, &basis, &init).expect("big integers do not overflow").into_iter().map(|r| (r.v, r.zero)).collect(),
    };
    let mut vertices = Vec::new();
    let mut tight = Vec::new();
    for (v, mut zero) in rays {
        if v[0].is_zero() {
            return Err(Error::Unbounded { ray: v[1..].iter().map(|x| x.to_string()).collect() });
        }
        zero.remove(m);
        vertices.push(v[1..].iter().map(|x| Rational::new(x.clone(), v[0].clone())).collect());
        tight.push(zero);
    }
    if vertices.is_empty() {
        return Err(Error::Infeasible(format!("polytope {} is empty", p.label)));
    }
    Ok(Enumerated { vertices, tight })
}
