//! Dense primal-dual interior-point solver for small semidefinite programs.
//!
//! Problems are in the standard block form
//!
//! ```text
//! (P)  min <C, X>  s.t. <A_i, X> = b_i,  X ⪰ 0
//! (D)  max b'y     s.t. Z = C - Σ y_i A_i ⪰ 0
//! ```
//!
//! where each block is either a dense symmetric matrix or a diagonal (LP)
//! block. The search direction is HKM with a Mehrotra predictor-corrector.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Block {
    Dense(usize),
    Diag(usize),
}

impl Block {
    pub fn size(&self) -> usize {
        match *self {
            Block::Dense(n) | Block::Diag(n) => n,
        }
    }
}

/// Entry `(r, c)` of a symmetric block; `(c, r)` is implied.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Entry {
    pub blk: usize,
    pub r: usize,
    pub c: usize,
    pub v: f64,
}

/// Sparse symmetric block matrix.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseBlockMat {
    pub entries: Vec<Entry>,
}

impl SparseBlockMat {
    pub fn push(&mut self, blk: usize, r: usize, c: usize, v: f64) {
        if v != 0.0 {
            let (r, c) = if r <= c { (r, c) } else { (c, r) };
            self.entries.push(Entry { blk, r, c, v });
        }
    }

    /// Merges duplicate positions.
    fn compress(&mut self) {
        self.entries.sort_by_key(|e| (e.blk, e.r, e.c));
        let mut out: Vec<Entry> = Vec::with_capacity(self.entries.len());
        for e in self.entries.drain(..) {
            match out.last_mut() {
                Some(l) if l.blk == e.blk && l.r == e.r && l.c == e.c => l.v += e.v,
                _ => out.push(e),
            }
        }
        out.retain(|e| e.v != 0.0);
        self.entries = out;
    }

    fn frob(&self) -> f64 {
        self.entries.iter().map(|e| if e.r == e.c { e.v * e.v } else { 2.0 * e.v * e.v }).sum::<f64>().sqrt()
    }

    /// `<A, M>` for block matrices `M` (not necessarily symmetric).
    fn inner(&self, m: &[BlockMat]) -> f64 {
        self.entries
            .iter()
            .map(|e| match &m[e.blk] {
                BlockMat::Dense(d) => {
                    if e.r == e.c {
                        e.v * d[(e.r, e.r)]
                    } else {
                        e.v * (d[(e.r, e.c)] + d[(e.c, e.r)])
                    }
                }
                BlockMat::Diag(d) => e.v * d[e.r],
            })
            .sum()
    }

    fn add_scaled_to(&self, s: f64, m: &mut [BlockMat]) {
        for e in &self.entries {
            match &mut m[e.blk] {
                BlockMat::Dense(d) => {
                    d[(e.r, e.c)] += s * e.v;
                    if e.r != e.c {
                        d[(e.c, e.r)] += s * e.v;
                    }
                }
                BlockMat::Diag(d) => d[e.r] += s * e.v,
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BlockMat {
    Dense(DMatrix<f64>),
    Diag(DVector<f64>),
}

impl BlockMat {
    fn zeros(b: Block) -> Self {
        match b {
            Block::Dense(n) => BlockMat::Dense(DMatrix::zeros(n, n)),
            Block::Diag(n) => BlockMat::Diag(DVector::zeros(n)),
        }
    }

    fn identity(b: Block, s: f64) -> Self {
        match b {
            Block::Dense(n) => BlockMat::Dense(DMatrix::identity(n, n) * s),
            Block::Diag(n) => BlockMat::Diag(DVector::from_element(n, s)),
        }
    }

    pub fn as_dense(&self) -> Option<&DMatrix<f64>> {
        match self {
            BlockMat::Dense(d) => Some(d),
            _ => None,
        }
    }

    pub fn as_diag(&self) -> Option<&DVector<f64>> {
        match self {
            BlockMat::Diag(d) => Some(d),
            _ => None,
        }
    }
}

fn dot_blocks(a: &[BlockMat], b: &[BlockMat]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| match (x, y) {
            (BlockMat::Dense(p), BlockMat::Dense(q)) => p.dot(q),
            (BlockMat::Diag(p), BlockMat::Diag(q)) => p.dot(q),
            _ => unreachable!("block kinds differ"),
        })
        .sum()
}

fn axpy_blocks(a: f64, x: &[BlockMat], y: &mut [BlockMat]) {
    for (xb, yb) in x.iter().zip(y.iter_mut()) {
        match (xb, yb) {
            (BlockMat::Dense(p), BlockMat::Dense(q)) => *q += p * a,
            (BlockMat::Diag(p), BlockMat::Diag(q)) => *q += p * a,
            _ => unreachable!("block kinds differ"),
        }
    }
}

fn norm_blocks(a: &[BlockMat]) -> f64 {
    dot_blocks(a, a).sqrt()
}

/// Largest `α` keeping `M + α D ⪰ 0`, given `M ≻ 0`.
fn max_step(m: &[BlockMat], d: &[BlockMat]) -> f64 {
    let mut alpha = f64::INFINITY;
    for (mb, db) in m.iter().zip(d) {
        match (mb, db) {
            (BlockMat::Dense(x), BlockMat::Dense(dx)) => {
                let Some(ch) = Cholesky::new(x.clone()) else { return 0.0 };
                let l = ch.l();
                let linv = l.clone().try_inverse().unwrap_or_else(|| DMatrix::zeros(x.nrows(), x.nrows()));
                let mut s = &linv * dx * linv.transpose();
                s = (&s + s.transpose()) * 0.5;
                let lmin = SymmetricEigen::new(s).eigenvalues.min();
                if lmin < 0.0 {
                    alpha = alpha.min(-1.0 / lmin);
                }
            }
            (BlockMat::Diag(x), BlockMat::Diag(dx)) => {
                for (xi, di) in x.iter().zip(dx.iter()) {
                    if *di < 0.0 {
                        alpha = alpha.min(-xi / di);
                    }
                }
            }
            _ => unreachable!(),
        }
    }
    alpha
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    NumericalLimit,
}

#[derive(Clone, Debug)]
pub struct SdpSettings {
    pub max_iter: usize,
    pub gap_tol: f64,
    pub feas_tol: f64,
    /// Stalled runs whose best iterate meets this tolerance count as optimal.
    pub accept_tol: f64,
}

impl Default for SdpSettings {
    fn default() -> Self {
        SdpSettings { max_iter: 150, gap_tol: 1e-9, feas_tol: 1e-9, accept_tol: 1e-7 }
    }
}

/// Primal-dual pair returned by [`solve_sdp`].
#[derive(Clone, Debug)]
pub struct ConicSolution {
    pub status: Status,
    pub primal_obj: f64,
    pub dual_obj: f64,
    pub x: Vec<BlockMat>,
    pub y: Vec<f64>,
    pub z: Vec<BlockMat>,
    pub primal_infeas: f64,
    pub dual_infeas: f64,
    pub iterations: usize,
}

impl ConicSolution {
    pub fn gap(&self) -> f64 {
        (self.primal_obj - self.dual_obj).abs()
    }

    /// Midpoint of primal and dual objectives.
    pub fn value(&self) -> f64 {
        0.5 * (self.primal_obj + self.dual_obj)
    }
}

/// Block SDP in the form documented at the module level.
#[derive(Clone, Debug, Default)]
pub struct SdpProblem {
    pub blocks: Vec<Block>,
    pub c: SparseBlockMat,
    pub a: Vec<SparseBlockMat>,
    pub b: Vec<f64>,
}

impl SdpProblem {
    pub fn add_block(&mut self, b: Block) -> usize {
        self.blocks.push(b);
        self.blocks.len() - 1
    }

    /// Adds a dual variable with objective coefficient `obj`; returns its index.
    pub fn add_var(&mut self, obj: f64) -> usize {
        self.a.push(SparseBlockMat::default());
        self.b.push(obj);
        self.b.len() - 1
    }

    /// Accumulates into the slack `Z = F0 + Σ y_i F_i`: constant part.
    pub fn add_const(&mut self, blk: usize, r: usize, c: usize, v: f64) {
        self.c.push(blk, r, c, v);
    }

    /// Accumulates into the slack `Z = F0 + Σ y_i F_i`: coefficient of `y_var`.
    pub fn add_coef(&mut self, var: usize, blk: usize, r: usize, c: usize, v: f64) {
        self.a[var].push(blk, r, c, -v);
    }

    pub fn num_vars(&self) -> usize {
        self.b.len()
    }

    fn validate(&self) -> Result<()> {
        let check = |m: &SparseBlockMat| -> Result<()> {
            for e in &m.entries {
                let blk = self.blocks.get(e.blk).ok_or_else(|| Error::Solver(format!("unknown block {}", e.blk)))?;
                if e.c >= blk.size() || (matches!(blk, Block::Diag(_)) && e.r != e.c) || !e.v.is_finite() {
                    return Err(Error::Solver(format!("bad entry {e:?} for {blk:?}")));
                }
            }
            Ok(())
        };
        check(&self.c)?;
        self.a.iter().try_for_each(check)?;
        if self.a.len() != self.b.len() {
            return Err(Error::Solver("constraint count mismatch".into()));
        }
        Ok(())
    }

    fn a_op(&self, m: &[BlockMat]) -> DVector<f64> {
        DVector::from_iterator(self.a.len(), self.a.iter().map(|ai| ai.inner(m)))
    }

    fn at_op(&self, y: &DVector<f64>) -> Vec<BlockMat> {
        let mut out: Vec<BlockMat> = self.blocks.iter().map(|&b| BlockMat::zeros(b)).collect();
        for (ai, yi) in self.a.iter().zip(y.iter()) {
            if *yi != 0.0 {
                ai.add_scaled_to(*yi, &mut out);
            }
        }
        out
    }

    fn c_dense(&self) -> Vec<BlockMat> {
        let mut out: Vec<BlockMat> = self.blocks.iter().map(|&b| BlockMat::zeros(b)).collect();
        self.c.add_scaled_to(1.0, &mut out);
        out
    }

    /// Writes the instance in SDPA sparse format as the minimization
    /// `min (-b)'y  s.t.  Σ y_i (-A_i) - (-C) ⪰ 0`.
    pub fn to_sdpa(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        writeln!(s, "{}", self.b.len()).unwrap();
        writeln!(s, "{}", self.blocks.len()).unwrap();
        let sizes: Vec<String> = self
            .blocks
            .iter()
            .map(|b| match b {
                Block::Dense(n) => n.to_string(),
                Block::Diag(n) => format!("-{n}"),
            })
            .collect();
        writeln!(s, "{}", sizes.join(" ")).unwrap();
        let bs: Vec<String> = self.b.iter().map(|v| format!("{:e}", -v)).collect();
        writeln!(s, "{}", bs.join(" ")).unwrap();
        let mut emit = |k: usize, m: &SparseBlockMat| {
            for e in &m.entries {
                writeln!(s, "{} {} {} {} {:e}", k, e.blk + 1, e.r + 1, e.c + 1, -e.v).unwrap();
            }
        };
        emit(0, &self.c);
        for (i, a) in self.a.iter().enumerate() {
            emit(i + 1, a);
        }
        s
    }
}

struct Schur {
    /// For each dense block, the constraints touching it.
    dense_users: Vec<Vec<usize>>,
    /// For each diagonal block row, `(constraint, coefficient)` pairs.
    diag_rows: Vec<Vec<Vec<(usize, f64)>>>,
    /// Per constraint, entries grouped by block.
    by_block: Vec<Vec<(usize, Vec<Entry>)>>,
}

impl Schur {
    fn new(p: &SdpProblem) -> Self {
        let mut dense_users = vec![Vec::new(); p.blocks.len()];
        let mut diag_rows: Vec<Vec<Vec<(usize, f64)>>> =
            p.blocks.iter().map(|b| if let Block::Diag(n) = b { vec![Vec::new(); *n] } else { Vec::new() }).collect();
        let mut by_block = Vec::with_capacity(p.a.len());
        for (i, a) in p.a.iter().enumerate() {
            let mut groups: Vec<(usize, Vec<Entry>)> = Vec::new();
            for e in &a.entries {
                match p.blocks[e.blk] {
                    Block::Dense(_) => {
                        match groups.iter_mut().find(|(b, _)| *b == e.blk) {
                            Some((_, v)) => v.push(*e),
                            None => groups.push((e.blk, vec![*e])),
                        }
                    }
                    Block::Diag(_) => diag_rows[e.blk][e.r].push((i, e.v)),
                }
            }
            for (b, _) in &groups {
                dense_users[*b].push(i);
            }
            by_block.push(groups);
        }
        Schur { dense_users, diag_rows, by_block }
    }

    fn build(&self, p: &SdpProblem, x: &[BlockMat], zinv: &[BlockMat]) -> DMatrix<f64> {
        let m = p.a.len();
        let mut mat = DMatrix::zeros(m, m);
        for (bi, blk) in p.blocks.iter().enumerate() {
            match blk {
                Block::Dense(n) => {
                    let (xd, zd) = (x[bi].as_dense().unwrap(), zinv[bi].as_dense().unwrap());
                    for &j in &self.dense_users[bi] {
                        let entries = &self.by_block[j].iter().find(|(b, _)| *b == bi).unwrap().1;
                        // T = X A_j
                        let mut t = DMatrix::zeros(*n, *n);
                        for e in entries {
                            for k in 0..*n {
                                t[(k, e.c)] += xd[(k, e.r)] * e.v;
                                if e.r != e.c {
                                    t[(k, e.r)] += xd[(k, e.c)] * e.v;
                                }
                            }
                        }
                        let g = t * zd;
                        for &i in &self.dense_users[bi] {
                            if i < j {
                                continue;
                            }
                            let ei = &self.by_block[i].iter().find(|(b, _)| *b == bi).unwrap().1;
                            let mut v = 0.0;
                            for e in ei {
                                v += e.v * g[(e.c, e.r)];
                                if e.r != e.c {
                                    v += e.v * g[(e.r, e.c)];
                                }
                            }
                            mat[(i, j)] += v;
                        }
                    }
                }
                Block::Diag(_) => {
                    let (xd, zd) = (x[bi].as_diag().unwrap(), zinv[bi].as_diag().unwrap());
                    for (k, row) in self.diag_rows[bi].iter().enumerate() {
                        let w = xd[k] * zd[k];
                        for &(i, ai) in row {
                            for &(j, aj) in row {
                                if i >= j {
                                    mat[(i, j)] += w * ai * aj;
                                }
                            }
                        }
                    }
                }
            }
        }
        for i in 0..m {
            for j in 0..i {
                mat[(j, i)] = mat[(i, j)];
            }
        }
        mat
    }
}

fn invert_blocks(z: &[BlockMat]) -> Option<Vec<BlockMat>> {
    z.iter()
        .map(|b| match b {
            BlockMat::Dense(d) => {
                let inv = Cholesky::new(d.clone())?.inverse();
                Some(BlockMat::Dense((&inv + inv.transpose()) * 0.5))
            }
            BlockMat::Diag(d) => {
                if d.iter().any(|v| *v <= 0.0) {
                    None
                } else {
                    Some(BlockMat::Diag(d.map(|v| 1.0 / v)))
                }
            }
        })
        .collect()
}

/// `P Q R` blockwise for dense or diagonal blocks.
fn triple(p: &[BlockMat], q: &[BlockMat], r: &[BlockMat]) -> Vec<BlockMat> {
    p.iter()
        .zip(q)
        .zip(r)
        .map(|((a, b), c)| match (a, b, c) {
            (BlockMat::Dense(a), BlockMat::Dense(b), BlockMat::Dense(c)) => BlockMat::Dense(a * b * c),
            (BlockMat::Diag(a), BlockMat::Diag(b), BlockMat::Diag(c)) => {
                BlockMat::Diag(a.component_mul(b).component_mul(c))
            }
            _ => unreachable!(),
        })
        .collect()
}

fn symmetrize(m: &mut [BlockMat]) {
    for b in m {
        if let BlockMat::Dense(d) = b {
            let t = d.transpose();
            *d = (&*d + t) * 0.5;
        }
    }
}

fn solve_schur(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(ch) = Cholesky::new(m.clone()) {
        let mut x = ch.solve(rhs);
        let r = rhs - m * &x;
        x += ch.solve(&r);
        return Some(x);
    }
    let scale = m.diagonal().amax().max(1e-300);
    for reg in [1e-14, 1e-12, 1e-10] {
        let mut mm = m.clone();
        for i in 0..mm.nrows() {
            mm[(i, i)] += reg * scale;
        }
        if let Some(ch) = Cholesky::new(mm) {
            return Some(ch.solve(rhs));
        }
    }
    m.clone().lu().solve(rhs)
}

/// Solves an [`SdpProblem`].
pub fn solve_sdp(p: &SdpProblem, settings: &SdpSettings) -> Result<ConicSolution> {
    let mut p = p.clone();
    p.validate()?;
    p.c.compress();
    for a in &mut p.a {
        a.compress();
    }
    let p = &p;
    let m = p.a.len();
    let ntot: usize = p.blocks.iter().map(|b| b.size()).sum();
    let n = ntot.max(1) as f64;
    let b = DVector::from_vec(p.b.clone());
    let cmat = p.c_dense();

    let a_norms: Vec<f64> = p.a.iter().map(|a| a.frob()).collect();
    let cnorm = p.c.frob();
    let alpha0 = (0..m).map(|i| (1.0 + p.b[i].abs()) / (1.0 + a_norms[i])).fold(1.0f64, f64::max) * n;
    let beta0 = (1.0 + a_norms.iter().cloned().fold(cnorm, f64::max)) / n.sqrt();
    let mut x: Vec<BlockMat> = p.blocks.iter().map(|&bk| BlockMat::identity(bk, 10.0 * alpha0)).collect();
    let mut z: Vec<BlockMat> = p.blocks.iter().map(|&bk| BlockMat::identity(bk, 10.0 * beta0)).collect();
    let mut y = DVector::zeros(m);
    let schur = Schur::new(p);
    let bnorm = b.norm();

    let mut status = Status::NumericalLimit;
    let mut iterations = 0;
    let (mut pinf, mut dinf);
    let mut best: Option<(f64, Vec<BlockMat>, DVector<f64>, Vec<BlockMat>, f64, f64)> = None;
    loop {
        let ax = p.a_op(&x);
        let rp = &b - &ax;
        let mut rd = cmat.clone();
        axpy_blocks(-1.0, &z, &mut rd);
        axpy_blocks(-1.0, &p.at_op(&y), &mut rd);
        let pobj = dot_blocks(&cmat, &x);
        let dobj = b.dot(&y);
        pinf = rp.norm() / (1.0 + bnorm);
        dinf = norm_blocks(&rd) / (1.0 + cnorm);
        let mu = dot_blocks(&x, &z) / n;
        let relgap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        if std::env::var("DICERT_SDP_TRACE").is_ok() {
            eprintln!("it {iterations:3} pobj {pobj:.10e} dobj {dobj:.10e} pinf {pinf:.2e} dinf {dinf:.2e} mu {mu:.2e}");
        }
        if relgap < settings.gap_tol && pinf < settings.feas_tol && dinf < settings.feas_tol {
            status = Status::Optimal;
            break;
        }
        let merit = relgap.max(pinf).max(dinf);
        let best_merit = best.as_ref().map_or(f64::INFINITY, |b| b.0);
        if merit < best_merit {
            best = Some((merit, x.clone(), y.clone(), z.clone(), pinf, dinf));
        } else if best_merit < settings.accept_tol && merit > 1e3 * best_merit {
            break;
        }
        if !merit.is_finite() {
            break;
        }
        let ynorm = y.amax();
        let xnorm = norm_blocks(&x);
        if dinf < settings.feas_tol && dobj > 1e8 * (1.0 + xnorm.min(1e8)) && ynorm > 1e10 {
            status = Status::PrimalInfeasible;
            break;
        }
        if pinf < settings.feas_tol && -pobj > 1e10 && xnorm > 1e10 {
            status = Status::DualInfeasible;
            break;
        }
        if iterations >= settings.max_iter {
            break;
        }
        iterations += 1;

        let Some(zinv) = invert_blocks(&z) else { break };
        let mmat = schur.build(p, &x, &zinv);
        let xrz = triple(&x, &rd, &zinv);
        let a_xrz = p.a_op(&xrz);
        let a_zinv = p.a_op(&zinv);

        let direction = |sigma: f64,
                         corr: Option<(&Vec<BlockMat>, &Vec<BlockMat>)>|
         -> Option<(DVector<f64>, Vec<BlockMat>, Vec<BlockMat>)> {
            let mut rhs = &b - &a_zinv * (sigma * mu) + &a_xrz;
            if let Some((_, cz)) = corr {
                rhs += p.a_op(cz);
            }
            let dy = solve_schur(&mmat, &rhs)?;
            let mut dz = rd.clone();
            axpy_blocks(-1.0, &p.at_op(&dy), &mut dz);
            // dX = σμZ⁻¹ - X - (X dZ + corr) Z⁻¹
            let mut dx = zinv.clone();
            for blk in dx.iter_mut() {
                match blk {
                    BlockMat::Dense(d) => *d *= sigma * mu,
                    BlockMat::Diag(d) => *d *= sigma * mu,
                }
            }
            axpy_blocks(-1.0, &x, &mut dx);
            let mut xdz: Vec<BlockMat> = x
                .iter()
                .zip(&dz)
                .map(|(a, bq)| match (a, bq) {
                    (BlockMat::Dense(a), BlockMat::Dense(bq)) => BlockMat::Dense(a * bq),
                    (BlockMat::Diag(a), BlockMat::Diag(bq)) => BlockMat::Diag(a.component_mul(bq)),
                    _ => unreachable!(),
                })
                .collect();
            if let Some((cc, _)) = corr {
                axpy_blocks(1.0, cc, &mut xdz);
            }
            for ((d, t), zi) in dx.iter_mut().zip(&xdz).zip(&zinv) {
                match (d, t, zi) {
                    (BlockMat::Dense(d), BlockMat::Dense(t), BlockMat::Dense(zi)) => *d -= t * zi,
                    (BlockMat::Diag(d), BlockMat::Diag(t), BlockMat::Diag(zi)) => *d -= t.component_mul(zi),
                    _ => unreachable!(),
                }
            }
            symmetrize(&mut dx);
            Some((dy, dx, dz))
        };

        let Some((_, dxp, dzp)) = direction(0.0, None) else { break };
        let ap = max_step(&x, &dxp).min(1.0);
        let ad = max_step(&z, &dzp).min(1.0);
        let mut xa = x.clone();
        axpy_blocks(ap, &dxp, &mut xa);
        let mut za = z.clone();
        axpy_blocks(ad, &dzp, &mut za);
        let mu_aff = dot_blocks(&xa, &za) / n;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
        // second-order term ΔX_p ΔZ_p Z⁻¹ enters through the corrector
        let corr: Vec<BlockMat> = dxp
            .iter()
            .zip(&dzp)
            .map(|(a, bq)| match (a, bq) {
                (BlockMat::Dense(a), BlockMat::Dense(bq)) => BlockMat::Dense(a * bq),
                (BlockMat::Diag(a), BlockMat::Diag(bq)) => BlockMat::Diag(a.component_mul(bq)),
                _ => unreachable!(),
            })
            .collect();
        let corr_z: Vec<BlockMat> = corr
            .iter()
            .zip(&zinv)
            .map(|(a, zi)| match (a, zi) {
                (BlockMat::Dense(a), BlockMat::Dense(zi)) => BlockMat::Dense(a * zi),
                (BlockMat::Diag(a), BlockMat::Diag(zi)) => BlockMat::Diag(a.component_mul(zi)),
                _ => unreachable!(),
            })
            .collect();
        let Some((dy, dx, dz)) = direction(sigma, Some((&corr, &corr_z))) else { break };
        let ap = (0.95 * max_step(&x, &dx)).min(1.0);
        let ad = (0.95 * max_step(&z, &dz)).min(1.0);
        if ap < 1e-12 && ad < 1e-12 {
            break;
        }
        axpy_blocks(ap, &dx, &mut x);
        y += &dy * ad;
        axpy_blocks(ad, &dz, &mut z);
    }

    if status == Status::NumericalLimit {
        if let Some((merit, bx, by, bz, bp, bd)) = best {
            x = bx;
            y = by;
            z = bz;
            pinf = bp;
            dinf = bd;
            if merit <= settings.accept_tol {
                status = Status::Optimal;
            }
        }
    }
    let pobj = dot_blocks(&cmat, &x);
    let dobj = b.dot(&y);
    Ok(ConicSolution {
        status,
        primal_obj: pobj,
        dual_obj: dobj,
        x,
        y: y.iter().cloned().collect(),
        z,
        primal_infeas: pinf,
        dual_infeas: dinf,
        iterations,
    })
}

/// Rigorous upper bound on `max b'y` from an approximate primal point.
///
/// `ybound[i]` must bound `|y_i|` over the dual feasible set. The primal
/// point is shifted into the PSD cone, its equality residuals recomputed,
/// and the residual contribution charged at the worst-case `|y_i|`.
pub fn certified_upper_bound(p: &SdpProblem, sol: &ConicSolution, ybound: &[f64]) -> f64 {
    let x = psd_shift(&project_affine(p, &sol.x));
    let bound = primal_value(p, &x) + residual_penalty(p, &x, ybound);
    bound + 1e-12 * (1.0 + bound.abs())
}

/// Symmetrizes and shifts each block of `x` into the PSD cone.
pub fn psd_shift(x: &[BlockMat]) -> Vec<BlockMat> {
    let mut x = x.to_vec();
    for blk in x.iter_mut() {
        match blk {
            BlockMat::Dense(d) => {
                let sym = (&*d + d.transpose()) * 0.5;
                let scale = sym.amax().max(1.0);
                let lmin = SymmetricEigen::new(sym.clone()).eigenvalues.min();
                let shift = if lmin < 0.0 { -lmin } else { 0.0 } + 1e-14 * scale * sym.nrows() as f64;
                *d = sym + DMatrix::identity(d.nrows(), d.nrows()) * shift;
            }
            BlockMat::Diag(d) => d.apply(|v| *v = v.max(0.0)),
        }
    }
    x
}

/// Least-squares correction of `x` onto `<A_i, X> = b_i`. Returns `x`
/// unchanged when the constraint Gram matrix is singular.
pub fn project_affine(p: &SdpProblem, x: &[BlockMat]) -> Vec<BlockMat> {
    let m = p.a.len();
    let r = p.a_op(x) - DVector::from_column_slice(&p.b);
    let mut g = DMatrix::zeros(m, m);
    for j in 0..m {
        let mut e = DVector::zeros(m);
        e[j] = 1.0;
        g.set_column(j, &p.a_op(&p.at_op(&e)));
    }
    let Some(ch) = nalgebra::Cholesky::new(g) else {
        return x.to_vec();
    };
    let delta = ch.solve(&r);
    let mut out = x.to_vec();
    axpy_blocks(-1.0, &p.at_op(&delta), &mut out);
    out
}

/// `<F0, X>`.
pub fn primal_value(p: &SdpProblem, x: &[BlockMat]) -> f64 {
    dot_blocks(&p.c_dense(), x)
}

/// `Σ_i |<A_i, X> - b_i| ybound_i`, the price of an infeasible `X` when `|y_i| ≤ ybound_i`.
pub fn residual_penalty(p: &SdpProblem, x: &[BlockMat], ybound: &[f64]) -> f64 {
    let ax = p.a_op(x);
    (0..p.b.len()).map(|i| (ax[i] - p.b[i]).abs() * ybound[i]).sum()
}
