//! Infeasible primal-dual interior-point method for
//!
//! ```text
//! (P)  min  cᵀy   s.t.  S_b = Σ_i y_i A_{b,i} ⪰ 0,   E y = e
//! (D)  max  eᵀw   s.t.  Σ_b A_b*(X_b) + Eᵀw = c,     X_b ⪰ 0
//! ```
//!
//! Search directions use Nesterov–Todd scaling with a Mehrotra
//! predictor-corrector. The reduced KKT system
//! `[H Eᵀ; E 0]`, `H_ij = Σ_b ⟨A_{b,i}, W_b A_{b,j} W_b⟩`, is factored
//! in envelope form after ordering unknowns by the first block touching them.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use super::kkt::{Envelope, LdlFactor};
use super::{Residuals, SolveResult, SolveStatus, SolverOptions};
use crate::relaxation::BlockSdp;

/// Unknowns whose blocks span more than `DENSE_SPAN_FACTOR` times the 90th
/// percentile span (plus `DENSE_SPAN_SLACK`) go to the end of the KKT
/// ordering.
const DENSE_SPAN_FACTOR: usize = 2;
const DENSE_SPAN_SLACK: usize = 4;
const STEP_FRACTION: f64 = 0.95;
const INIT_SCALE: f64 = 10.0;
const DIVERGENCE: f64 = 1e8;
const STATIC_REG: f64 = 0.0;
const PIVOT_EPS: f64 = 1e-15;
const PIVOT_DELTA: f64 = 1.0;
const REFINE_STEPS: usize = 8;
const DIRECTION_REFINE_STEPS: usize = 2;
const DEPENDENT_ROW_TOL: f64 = 1e-10;
/// Iterations without a new best residual before giving up.
const STALL_ITERS: usize = 10;
const DRIFT: f64 = 1e3;

/// Iterate with the smallest residual seen so far.
struct Best {
    score: f64,
    y: Vec<f64>,
    pobj: f64,
    dobj: f64,
    residuals: Residuals,
    iteration: usize,
}

struct BlockData {
    size: usize,
    vars: Vec<usize>,
    /// Per local unknown: upper-triangle `(p, q, coef)` of `A_{b,i}`.
    terms: Vec<Vec<(usize, usize, f64)>>,
    /// Envelope slots of local pairs `(a, b)`, `a >= b`, packed row-wise.
    pair_slots: Vec<usize>,
}

impl BlockData {
    fn apply(&self, y: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.size, self.size);
        for (k, &v) in self.vars.iter().enumerate() {
            let yv = y[v];
            if yv == 0.0 {
                continue;
            }
            for &(p, q, c) in &self.terms[k] {
                m[(p, q)] += c * yv;
                if p != q {
                    m[(q, p)] += c * yv;
                }
            }
        }
        m
    }

    fn adjoint_add(&self, x: &DMatrix<f64>, out: &mut [f64]) {
        for (k, &v) in self.vars.iter().enumerate() {
            out[v] += self.terms[k]
                .iter()
                .map(|&(p, q, c)| {
                    if p == q {
                        c * x[(p, p)]
                    } else {
                        2.0 * c * x[(p, q)]
                    }
                })
                .sum::<f64>();
        }
    }
}

struct Scaling {
    g: DMatrix<f64>,
    g_inv: DMatrix<f64>,
    w: DMatrix<f64>,
    lambda: DVector<f64>,
}

fn nt_scaling(x: &DMatrix<f64>, s: &DMatrix<f64>) -> Option<Scaling> {
    let lx = x.clone().cholesky()?.l();
    let ls = s.clone().cholesky()?.l();
    let svd = (ls.transpose() * &lx).svd(true, true);
    let v = svd.v_t?.transpose();
    let d = svd.singular_values;
    if d.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return None;
    }
    let n = d.len();
    let d_isqrt = DMatrix::from_diagonal(&d.map(|v| 1.0 / v.sqrt()));
    let d_sqrt = DMatrix::from_diagonal(&d.map(f64::sqrt));
    let lx_inv = lx.solve_lower_triangular(&DMatrix::identity(n, n))?;
    let g = &lx * &v * d_isqrt;
    let g_inv = d_sqrt * v.transpose() * lx_inv;
    let w = &g * g.transpose();
    Some(Scaling {
        g,
        g_inv,
        w,
        lambda: d,
    })
}

/// Largest `α` with `Λ + α D ⪰ 0` for the diagonal `Λ > 0`.
fn max_step(lambda: &DVector<f64>, dir: &DMatrix<f64>) -> f64 {
    let n = lambda.len();
    let mut m = dir.clone();
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] /= (lambda[i] * lambda[j]).sqrt();
        }
    }
    let m = 0.5 * (&m + m.transpose());
    let min = m.symmetric_eigenvalues().min();
    if min >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / min
    }
}

fn dot(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.dot(b)
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) struct Ipm {
    m: usize,
    blocks: Vec<BlockData>,
    eq_rows: Vec<Vec<(usize, f64)>>,
    eq_slots: Vec<Vec<usize>>,
    rhs: Vec<f64>,
    c: Vec<f64>,
    /// Constant part of the objective left by presolve.
    offset: f64,
    eliminated: Vec<Elimination>,
    pos_y: Vec<usize>,
    pos_e: Vec<usize>,
    signs: Vec<f64>,
    kkt: Envelope,
}

impl Ipm {
    /// Set up the solver. Fails with the status to report when presolve
    /// already decides the problem.
    pub fn new(sdp: &BlockSdp) -> Result<Self, SolveStatus> {
        let m = sdp.y_count;
        let mut blocks = Vec::with_capacity(sdp.blocks.len());
        for b in &sdp.blocks {
            let mut local = std::collections::HashMap::new();
            let mut vars = Vec::new();
            let mut terms: Vec<Vec<(usize, usize, f64)>> = Vec::new();
            for e in &b.entries {
                for &(v, c) in &e.form.terms {
                    let k = *local.entry(v).or_insert_with(|| {
                        vars.push(v);
                        terms.push(Vec::new());
                        vars.len() - 1
                    });
                    terms[k].push((e.row, e.col, c));
                }
            }
            blocks.push(BlockData {
                size: b.size,
                vars,
                terms,
                pair_slots: Vec::new(),
            });
        }
        let eq_rows: Vec<Vec<(usize, f64)>> = sdp
            .equalities
            .row_forms()
            .into_iter()
            .map(|f| f.terms)
            .collect();
        let mut c = vec![0.0; m];
        for &(v, coef) in &sdp.objective.terms {
            c[v] += coef;
        }
        let mut in_block = vec![false; m];
        for b in &blocks {
            for &v in &b.vars {
                in_block[v] = true;
            }
        }
        let pre = eliminate_free(&in_block, eq_rows, sdp.equalities.rhs.clone(), c)?;
        let mut ipm = Self::build(m, blocks, pre.rows, pre.rhs, pre.c, FreeVars::BeforeRows);
        ipm.offset = pre.offset;
        ipm.eliminated = pre.eliminated;
        ipm.without_dependent_rows().ok_or(SolveStatus::Infeasible)
    }

    fn build(
        m: usize,
        mut blocks: Vec<BlockData>,
        eq_rows: Vec<Vec<(usize, f64)>>,
        rhs: Vec<f64>,
        c: Vec<f64>,
        free_vars: FreeVars,
    ) -> Self {
        let (pos_y, pos_e) = kkt_ordering(m, &blocks, &eq_rows, free_vars);
        let dim = m + eq_rows.len();
        let mut first: Vec<usize> = (0..dim).collect();
        for b in &blocks {
            if let Some(lo) = b.vars.iter().map(|&v| pos_y[v]).min() {
                for &v in &b.vars {
                    let p = pos_y[v];
                    first[p] = first[p].min(lo);
                }
            }
        }
        for (r, row) in eq_rows.iter().enumerate() {
            let pr = pos_e[r];
            for &(v, _) in row {
                let pv = pos_y[v];
                if pv < pr {
                    first[pr] = first[pr].min(pv);
                } else {
                    first[pv] = first[pv].min(pr);
                }
            }
        }
        let kkt = Envelope::new(first);
        for b in &mut blocks {
            let n = b.vars.len();
            b.pair_slots = Vec::with_capacity(n * (n + 1) / 2);
            for a in 0..n {
                for bb in 0..=a {
                    b.pair_slots
                        .push(kkt.slot(pos_y[b.vars[a]], pos_y[b.vars[bb]]));
                }
            }
        }
        let eq_slots = eq_rows
            .iter()
            .enumerate()
            .map(|(r, row)| {
                row.iter()
                    .map(|&(v, _)| kkt.slot(pos_e[r], pos_y[v]))
                    .collect()
            })
            .collect();
        let mut signs = vec![1.0; dim];
        for &p in &pos_e {
            signs[p] = -1.0;
        }
        Self {
            m,
            blocks,
            eq_rows,
            eq_slots,
            rhs,
            c,
            offset: 0.0,
            eliminated: Vec::new(),
            pos_y,
            pos_e,
            signs,
            kkt,
        }
    }

    /// Remove equality rows that are linear combinations of earlier ones,
    /// found as vanishing pivots of `[I Eᵀ; E 0]`. `None` if a removed row
    /// disagrees with the minimum-norm solution of the others.
    fn without_dependent_rows(mut self) -> Option<Self> {
        self.kkt.clear();
        for &p in &self.pos_y {
            self.kkt.add_diag(p, 1.0);
        }
        let mut tol = vec![0.0; self.kkt.dim()];
        for (r, (row, slots)) in self.eq_rows.iter().zip(&self.eq_slots).enumerate() {
            for (&(_, c), &sl) in row.iter().zip(slots) {
                self.kkt.add_at(sl, c);
            }
            tol[self.pos_e[r]] = DEPENDENT_ROW_TOL * row.iter().map(|(_, c)| c * c).sum::<f64>();
        }
        let (ldl, dropped) = LdlFactor::factor_dropping(&self.kkt, &self.signs, &tol);
        if dropped.is_empty() {
            let (rows, rhs) = (
                std::mem::take(&mut self.eq_rows),
                std::mem::take(&mut self.rhs),
            );
            return Some(self.rebuilt(rows, rhs));
        }
        let mut x = vec![0.0; self.kkt.dim()];
        for (r, &p) in self.pos_e.iter().enumerate() {
            x[p] = self.rhs[r];
        }
        for &p in &dropped {
            x[p] = 0.0;
        }
        ldl.solve(&mut x);
        let y: Vec<f64> = self.pos_y.iter().map(|&p| x[p]).collect();
        let y_norm = norm2(&y);
        let mut is_dropped = vec![false; self.kkt.dim()];
        for &p in &dropped {
            is_dropped[p] = true;
        }
        let mut keep_rows = Vec::new();
        let mut keep_rhs = Vec::new();
        for (r, row) in self.eq_rows.iter().enumerate() {
            if is_dropped[self.pos_e[r]] {
                let lhs: f64 = row.iter().map(|&(v, c)| c * y[v]).sum();
                let row_norm = row.iter().map(|(_, c)| c * c).sum::<f64>().sqrt();
                if (lhs - self.rhs[r]).abs() > 1e-7 * (1.0 + self.rhs[r].abs() + row_norm * y_norm)
                {
                    return None;
                }
            } else {
                keep_rows.push(row.clone());
                keep_rhs.push(self.rhs[r]);
            }
        }
        log::debug!("removed {} dependent equality rows", dropped.len());
        Some(self.rebuilt(keep_rows, keep_rhs))
    }

    fn rebuilt(mut self, rows: Vec<Vec<(usize, f64)>>, rhs: Vec<f64>) -> Self {
        let blocks = std::mem::take(&mut self.blocks);
        let mut out = Self::build(
            self.m,
            blocks,
            rows,
            rhs,
            std::mem::take(&mut self.c),
            FreeVars::AfterRows,
        );
        out.offset = self.offset;
        out.eliminated = self.eliminated;
        out
    }

    pub fn kkt_nnz(&self) -> usize {
        self.kkt.nnz()
    }

    fn e_mul(&self, y: &[f64]) -> Vec<f64> {
        self.eq_rows
            .iter()
            .map(|row| row.iter().map(|&(v, c)| c * y[v]).sum())
            .collect()
    }

    fn et_mul_add(&self, w: &[f64], out: &mut [f64]) {
        for (row, &wr) in self.eq_rows.iter().zip(w) {
            for &(v, c) in row {
                out[v] += c * wr;
            }
        }
    }

    fn assemble_kkt(&mut self, scalings: &[Scaling]) {
        self.kkt.clear();
        for (b, sc) in self.blocks.iter().zip(scalings) {
            let w = &sc.w;
            let n = b.vars.len();
            let mut slot = 0;
            for a in 0..n {
                for bb in 0..=a {
                    let mut h = 0.0;
                    for &(p, q, c1) in &b.terms[a] {
                        for &(r, s, c2) in &b.terms[bb] {
                            // ⟨A_a, W A_b W⟩ with A = c (e_p e_qᵀ + e_q e_pᵀ) off-diagonal.
                            let v = match (p == q, r == s) {
                                (true, true) => w[(p, r)] * w[(r, p)],
                                (true, false) => 2.0 * w[(p, r)] * w[(s, p)],
                                (false, true) => 2.0 * w[(p, r)] * w[(r, q)],
                                (false, false) => {
                                    2.0 * (w[(p, r)] * w[(s, q)] + w[(p, s)] * w[(r, q)])
                                }
                            };
                            h += c1 * c2 * v;
                        }
                    }
                    let sl = b.pair_slots[slot];
                    slot += 1;
                    self.kkt.add_at(sl, h);
                }
            }
        }
        for (row, slots) in self.eq_rows.iter().zip(&self.eq_slots) {
            for (&(_, c), &sl) in row.iter().zip(slots) {
                self.kkt.add_at(sl, c);
            }
        }
    }

    /// Factor the KKT matrix after symmetric equilibration: unit diagonal
    /// on the `H` part, and rows of `E` scaled to unit norm against it.
    fn factor(&self) -> (LdlFactor, Vec<f64>) {
        let mut scale = vec![1.0; self.kkt.dim()];
        for &p in &self.pos_y {
            let d = self.kkt.diag(p);
            scale[p] = if d > 0.0 { 1.0 / d.sqrt() } else { 1.0 };
        }
        for (row, &pr) in self.eq_rows.iter().zip(&self.pos_e) {
            let nrm = row
                .iter()
                .map(|&(v, c)| (c * scale[self.pos_y[v]]).powi(2))
                .sum::<f64>()
                .sqrt();
            scale[pr] = if nrm > 0.0 { 1.0 / nrm } else { 1.0 };
        }
        let mut reg = self.kkt.clone();
        reg.scale(&scale);
        for &p in &self.pos_y {
            reg.add_diag(p, STATIC_REG);
        }
        for &p in &self.pos_e {
            reg.add_diag(p, -STATIC_REG);
        }
        let ldl = LdlFactor::factor(&reg, &self.signs, PIVOT_EPS, PIVOT_DELTA);
        if ldl.n_regularized > 0 {
            log::trace!("{} pivots regularized", ldl.n_regularized);
        }
        (ldl, scale)
    }

    /// Solve `[H Eᵀ; E 0] [dy; u] = [g; re]` with iterative refinement
    /// against the unregularized matrix.
    fn kkt_solve(
        &self,
        ldl: &(LdlFactor, Vec<f64>),
        g: &[f64],
        re: &[f64],
    ) -> (Vec<f64>, Vec<f64>) {
        let (ldl, scale) = ldl;
        let dim = self.kkt.dim();
        let mut b = vec![0.0; dim];
        for (i, &p) in self.pos_y.iter().enumerate() {
            b[p] = g[i];
        }
        for (r, &p) in self.pos_e.iter().enumerate() {
            b[p] = re[r];
        }
        let precond = |v: &mut Vec<f64>| {
            v.iter_mut().zip(scale).for_each(|(a, s)| *a *= s);
            ldl.solve(v);
            v.iter_mut().zip(scale).for_each(|(a, s)| *a *= s);
        };
        let mut x = b.clone();
        precond(&mut x);
        let mut kx = vec![0.0; dim];
        let bnorm = norm2(&b).max(1e-300);
        let mut last = f64::INFINITY;
        for _ in 0..REFINE_STEPS {
            self.kkt.mul(&x, &mut kx);
            let mut res: Vec<f64> = b.iter().zip(&kx).map(|(u, v)| u - v).collect();
            let rn = norm2(&res);
            if rn <= 1e-15 * bnorm || rn > 0.5 * last {
                break;
            }
            last = rn;
            precond(&mut res);
            x.iter_mut().zip(&res).for_each(|(u, v)| *u += v);
        }
        let dy = self.pos_y.iter().map(|&p| x[p]).collect();
        let u = self.pos_e.iter().map(|&p| x[p]).collect();
        (dy, u)
    }

    pub fn solve(&mut self, opts: &SolverOptions) -> SolveResult {
        let started = Instant::now();
        let m = self.m;
        let n_eq = self.eq_rows.len();
        let nu: usize = self.blocks.iter().map(|b| b.size).sum::<usize>().max(1);
        let e_norm = norm2(&self.rhs);
        let c_norm = norm2(&self.c);

        let mut y = vec![0.0; m];
        let mut w = vec![0.0; n_eq];
        let mut xs: Vec<DMatrix<f64>> = self
            .blocks
            .iter()
            .map(|b| DMatrix::identity(b.size, b.size) * INIT_SCALE)
            .collect();
        let mut ss = xs.clone();

        let mut status = SolveStatus::IterationLimit;
        let mut residuals = Residuals::default();
        let mut iterations = 0;
        let mut pobj = 0.0;
        let mut dobj = 0.0;
        let mut best = Best {
            score: f64::INFINITY,
            y: Vec::new(),
            pobj: 0.0,
            dobj: 0.0,
            residuals,
            iteration: 0,
        };

        for it in 0..=opts.max_iters {
            // Residuals.
            let rp: Vec<DMatrix<f64>> = self
                .blocks
                .iter()
                .zip(&ss)
                .map(|(b, s)| b.apply(&y) - s)
                .collect();
            let ey = self.e_mul(&y);
            let re: Vec<f64> = self.rhs.iter().zip(&ey).map(|(b, v)| b - v).collect();
            let mut rd = self.c.clone();
            {
                let mut ax = vec![0.0; m];
                for (b, x) in self.blocks.iter().zip(&xs) {
                    b.adjoint_add(x, &mut ax);
                }
                self.et_mul_add(&w, &mut ax);
                rd.iter_mut().zip(&ax).for_each(|(r, a)| *r -= a);
            }
            pobj = self.offset + self.c.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>();
            dobj = self.offset + self.rhs.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
            let rp_norm = rp.iter().map(|r| r.norm_squared()).sum::<f64>();
            let pinf = (rp_norm + re.iter().map(|v| v * v).sum::<f64>()).sqrt() / (1.0 + e_norm);
            let dinf = norm2(&rd) / (1.0 + c_norm);
            let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
            let mu = xs.iter().zip(&ss).map(|(x, s)| dot(x, s)).sum::<f64>() / nu as f64;
            residuals = Residuals {
                primal: pinf,
                dual: dinf,
                gap,
            };
            iterations = it;
            log::debug!(
                "it {it:3} pobj {pobj:+.9e} dobj {dobj:+.9e} pinf {pinf:.2e} dinf {dinf:.2e} gap {gap:.2e} mu {mu:.2e}"
            );

            let score = pinf.max(dinf).max(gap);
            if score < best.score {
                best = Best {
                    score,
                    y: y.clone(),
                    pobj,
                    dobj,
                    residuals,
                    iteration: it,
                };
            }
            if score <= opts.tol {
                status = SolveStatus::Optimal;
                break;
            }
            // Past the attainable accuracy the residuals drift up again.
            if it >= best.iteration + STALL_ITERS
                || (best.score < 1e-4 && score > DRIFT * best.score)
            {
                status = SolveStatus::NumericalLimit;
                break;
            }
            let x_scale = w.iter().fold(0.0f64, |a, v| a.max(v.abs()))
                + xs.iter().map(|x| x.trace()).sum::<f64>();
            if dobj > DIVERGENCE && norm2(&rd) + c_norm <= 1e-6 * dobj.min(x_scale) {
                status = SolveStatus::Infeasible;
                break;
            }
            if pobj < -DIVERGENCE && (rp_norm.sqrt() + norm2(&ey)) <= 1e-6 * pobj.abs() {
                status = SolveStatus::Unbounded;
                break;
            }
            if it == opts.max_iters {
                break;
            }
            if let Some(limit) = opts.time_limit {
                if started.elapsed() >= limit {
                    status = SolveStatus::TimeLimit;
                    break;
                }
            }
            if opts.cancelled() {
                status = SolveStatus::TimeLimit;
                break;
            }

            let Some(scalings) = xs
                .iter()
                .zip(&ss)
                .map(|(x, s)| nt_scaling(x, s))
                .collect::<Option<Vec<_>>>()
            else {
                status = SolveStatus::NumericalLimit;
                break;
            };
            self.assemble_kkt(&scalings);
            let ldl = self.factor();

            // Directions for `X + dX = R - W dS W`, where `R` carries the
            // scaled complementarity residual (just `-X` for the predictor).
            let directions = |rc: &[DMatrix<f64>]| {
                let mut g: Vec<f64> = rd.iter().map(|v| -v).collect();
                for (bi, (b, sc)) in self.blocks.iter().zip(&scalings).enumerate() {
                    let t = &rc[bi] - &sc.w * &rp[bi] * &sc.w;
                    b.adjoint_add(&t, &mut g);
                }
                let (mut dy, u) = self.kkt_solve(&ldl, &g, &re);
                let mut dw: Vec<f64> = u.iter().map(|v| -v).collect();
                let mut ds = Vec::with_capacity(self.blocks.len());
                let mut dx = Vec::with_capacity(self.blocks.len());
                for (bi, (b, sc)) in self.blocks.iter().zip(&scalings).enumerate() {
                    let d_s = b.apply(&dy) + &rp[bi];
                    let d_x = &rc[bi] - &sc.w * &d_s * &sc.w;
                    let d_x = 0.5 * (&d_x + d_x.transpose());
                    ds.push(d_s);
                    dx.push(d_x);
                }
                // `W dS W` is large near the boundary, so the equations
                // `A*dX + Eᵀdw = rd` and `E dy = re` hold less accurately than
                // the KKT solve. Correct with the defects, which are small.
                let defects = |dy: &[f64], dw: &[f64], dx: &[DMatrix<f64>]| {
                    let mut defect = rd.clone();
                    let mut ax = vec![0.0; m];
                    for (b, d_x) in self.blocks.iter().zip(dx) {
                        b.adjoint_add(d_x, &mut ax);
                    }
                    self.et_mul_add(dw, &mut ax);
                    defect.iter_mut().zip(&ax).for_each(|(r, a)| *r -= a);
                    let edy = self.e_mul(dy);
                    let defect_e: Vec<f64> = re.iter().zip(&edy).map(|(b, v)| b - v).collect();
                    (defect, defect_e)
                };
                let floor = 1e-14 * (norm2(&rd) + norm2(&re) + 1.0);
                let (mut defect, mut defect_e) = defects(&dy, &dw, &dx);
                for _ in 0..DIRECTION_REFINE_STEPS {
                    let size = norm2(&defect) + norm2(&defect_e);
                    if !(size > floor) {
                        break;
                    }
                    // H δy + Eᵀδu = -defect, E δy = defect_e, with δw = -δu
                    // and δX = -W (A δy) W.
                    let neg: Vec<f64> = defect.iter().map(|v| -v).collect();
                    let (cy, cu) = self.kkt_solve(&ldl, &neg, &defect_e);
                    let mut ny = dy.clone();
                    let mut nw = dw.clone();
                    let mut ns = ds.clone();
                    let mut nx = dx.clone();
                    ny.iter_mut().zip(&cy).for_each(|(a, b)| *a += b);
                    nw.iter_mut().zip(&cu).for_each(|(a, b)| *a -= b);
                    for ((b, sc), (d_s, d_x)) in self
                        .blocks
                        .iter()
                        .zip(&scalings)
                        .zip(ns.iter_mut().zip(nx.iter_mut()))
                    {
                        let cs = b.apply(&cy);
                        let cx = &sc.w * &cs * &sc.w;
                        *d_s += &cs;
                        *d_x -= 0.5 * (&cx + cx.transpose());
                    }
                    // A poor factor can make the correction worse than none.
                    let (nd, nde) = defects(&ny, &nw, &nx);
                    if norm2(&nd) + norm2(&nde) >= size {
                        break;
                    }
                    (dy, dw, ds, dx, defect, defect_e) = (ny, nw, ns, nx, nd, nde);
                }
                (dy, dw, ds, dx)
            };
            let steps = |ds: &[DMatrix<f64>], dx: &[DMatrix<f64>]| {
                let mut ap = f64::INFINITY;
                let mut ad = f64::INFINITY;
                for (sc, (d_s, d_x)) in scalings.iter().zip(ds.iter().zip(dx)) {
                    let s_t = sc.g.transpose() * d_s * &sc.g;
                    let x_t = &sc.g_inv * d_x * sc.g_inv.transpose();
                    ap = ap.min(max_step(&sc.lambda, &s_t));
                    ad = ad.min(max_step(&sc.lambda, &x_t));
                }
                (ap, ad)
            };

            // Predictor.
            let minus_x: Vec<DMatrix<f64>> = xs.iter().map(|x| -x).collect();
            let (_, _, ds_a, dx_a) = directions(&minus_x);
            let (ap, ad) = steps(&ds_a, &dx_a);
            let (ap, ad) = (ap.min(1.0), ad.min(1.0));
            let mu_aff = xs
                .iter()
                .zip(&ss)
                .zip(ds_a.iter().zip(&dx_a))
                .map(|((x, s), (d_s, d_x))| dot(&(x + d_x * ad), &(s + d_s * ap)))
                .sum::<f64>()
                / nu as f64;
            let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

            // Corrector.
            let corr: Vec<DMatrix<f64>> = scalings
                .iter()
                .zip(ds_a.iter().zip(&dx_a))
                .map(|(sc, (d_s, d_x))| {
                    let n = sc.lambda.len();
                    let s_t = sc.g.transpose() * d_s * &sc.g;
                    let x_t = &sc.g_inv * d_x * sc.g_inv.transpose();
                    let cross = &x_t * &s_t + &s_t * &x_t;
                    let mut r = DMatrix::zeros(n, n);
                    for i in 0..n {
                        for j in 0..n {
                            let mut v = -cross[(i, j)];
                            if i == j {
                                v += 2.0 * (sigma * mu - sc.lambda[i] * sc.lambda[i]);
                            }
                            r[(i, j)] = v / (sc.lambda[i] + sc.lambda[j]);
                        }
                    }
                    &sc.g * r * sc.g.transpose()
                })
                .collect();
            let (dy, dw, ds, dx) = directions(&corr);
            let (ap, ad) = steps(&ds, &dx);
            let ap = (STEP_FRACTION * ap).min(1.0);
            let ad = (STEP_FRACTION * ad).min(1.0);

            y.iter_mut().zip(&dy).for_each(|(a, d)| *a += ap * d);
            for (s, d) in ss.iter_mut().zip(&ds) {
                *s += d * ap;
                *s = 0.5 * (&*s + s.transpose());
            }
            w.iter_mut().zip(&dw).for_each(|(a, d)| *a += ad * d);
            for (x, d) in xs.iter_mut().zip(&dx) {
                *x += d * ad;
                *x = 0.5 * (&*x + x.transpose());
            }
            if ap < 1e-10 && ad < 1e-10 {
                status = SolveStatus::NumericalLimit;
                iterations = it + 1;
                break;
            }
        }

        if matches!(
            status,
            SolveStatus::NumericalLimit | SolveStatus::IterationLimit | SolveStatus::TimeLimit
        ) && best.score.is_finite()
        {
            y = best.y;
            pobj = best.pobj;
            dobj = best.dobj;
            residuals = best.residuals;
        }
        for e in self.eliminated.iter().rev() {
            y[e.var] = (e.rhs - e.terms.iter().map(|&(u, a)| a * y[u]).sum::<f64>()) / e.coef;
        }
        let lower_bound = match status {
            SolveStatus::Infeasible => f64::INFINITY,
            SolveStatus::Unbounded => f64::NEG_INFINITY,
            _ => pobj.min(dobj),
        };
        SolveResult {
            status,
            lower_bound,
            primal_objective: pobj,
            dual_objective: dobj,
            y,
            iterations,
            residuals,
            solve_seconds: started.elapsed().as_secs_f64(),
        }
    }
}

/// An unknown solved out of the equalities: `coef·y_var + Σ terms = rhs`.
struct Elimination {
    var: usize,
    coef: f64,
    terms: Vec<(usize, f64)>,
    rhs: f64,
}

struct Presolved {
    rows: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
    c: Vec<f64>,
    offset: f64,
    eliminated: Vec<Elimination>,
}

/// Substitute out unknowns that appear in no block, each through the row
/// where it has the largest relative coefficient. Such unknowns would
/// otherwise leave zero pivots in the KKT matrix.
fn eliminate_free(
    in_block: &[bool],
    rows: Vec<Vec<(usize, f64)>>,
    mut rhs: Vec<f64>,
    mut c: Vec<f64>,
) -> Result<Presolved, SolveStatus> {
    let m = in_block.len();
    let mut rows: Vec<Option<Vec<(usize, f64)>>> = rows.into_iter().map(Some).collect();
    let mut uses: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (r, row) in rows.iter().enumerate() {
        for &(v, _) in row.as_ref().unwrap() {
            uses[v].push(r);
        }
    }
    let mut offset = 0.0;
    let mut eliminated = Vec::new();
    for v in (0..m).filter(|&v| !in_block[v]) {
        let mut pivot: Option<(usize, f64)> = None;
        for &r in &uses[v] {
            let Some(row) = &rows[r] else { continue };
            let Some(&(_, a)) = row.iter().find(|t| t.0 == v) else {
                continue;
            };
            let norm = row.iter().fold(0.0f64, |acc, t| acc.max(t.1.abs()));
            let rel = a.abs() / norm;
            if rel > 1e-8 && pivot.is_none_or(|(_, best)| rel > best) {
                pivot = Some((r, rel));
            }
        }
        let Some((pr, _)) = pivot else {
            if c[v] != 0.0 {
                return Err(SolveStatus::Unbounded);
            }
            continue;
        };
        let prow = rows[pr].take().unwrap();
        let coef = prow.iter().find(|t| t.0 == v).unwrap().1;
        let terms: Vec<(usize, f64)> = prow.iter().copied().filter(|t| t.0 != v).collect();
        let b = rhs[pr];
        // y_v = (b - Σ terms) / coef
        let substitute = |row: &mut Vec<(usize, f64)>, rhs: &mut f64| {
            let Some(k) = row.iter().position(|t| t.0 == v) else {
                return;
            };
            let f = row.swap_remove(k).1 / coef;
            *rhs -= f * b;
            for &(u, a) in &terms {
                match row.iter_mut().find(|t| t.0 == u) {
                    Some(t) => t.1 -= f * a,
                    None => {
                        row.push((u, -f * a));
                    }
                }
            }
            row.retain(|t| t.1 != 0.0);
        };
        let users: Vec<usize> = uses[v].clone();
        for r in users {
            if let Some(row) = rows[r].as_mut() {
                substitute(row, &mut rhs[r]);
                for &(u, _) in row.iter() {
                    if !uses[u].contains(&r) {
                        uses[u].push(r);
                    }
                }
            }
        }
        if c[v] != 0.0 {
            let f = c[v] / coef;
            offset += f * b;
            for &(u, a) in &terms {
                c[u] -= f * a;
            }
            c[v] = 0.0;
        }
        eliminated.push(Elimination {
            var: v,
            coef,
            terms,
            rhs: b,
        });
    }
    let mut out_rows = Vec::new();
    let mut out_rhs = Vec::new();
    for (row, b) in rows.into_iter().zip(rhs) {
        let Some(mut row) = row else { continue };
        row.sort_unstable_by_key(|t| t.0);
        if row.is_empty() {
            if b.abs() > 1e-9 {
                return Err(SolveStatus::Infeasible);
            }
            continue;
        }
        out_rows.push(row);
        out_rhs.push(b);
    }
    if !eliminated.is_empty() {
        log::debug!(
            "eliminated {} unknowns outside every block",
            eliminated.len()
        );
    }
    Ok(Presolved {
        rows: out_rows,
        rhs: out_rhs,
        c,
        offset,
        eliminated,
    })
}

/// Where unknowns outside every block go relative to the rows using them.
#[derive(Clone, Copy, PartialEq, Eq)]
enum FreeVars {
    /// Before the first such row; needs a nonzero diagonal for them.
    BeforeRows,
    /// After the last such row, so their pivots pick up those rows' terms.
    AfterRows,
}

/// KKT positions: unknowns sorted by the first block using them, each
/// equality row right after its last local unknown, then wide unknowns and
/// the rows touching only wide or free unknowns. Unknowns outside every block
/// are placed next to the rows using them as `free_vars` says.
fn kkt_ordering(
    m: usize,
    blocks: &[BlockData],
    eq_rows: &[Vec<(usize, f64)>],
    free_vars: FreeVars,
) -> (Vec<usize>, Vec<usize>) {
    let mut lo = vec![usize::MAX; m];
    let mut hi = vec![0usize; m];
    for (bi, b) in blocks.iter().enumerate() {
        for &v in &b.vars {
            lo[v] = lo[v].min(bi);
            hi[v] = hi[v].max(bi);
        }
    }
    let free = |v: usize| lo[v] == usize::MAX;
    let mut spans: Vec<usize> = (0..m)
        .filter(|&v| !free(v))
        .map(|v| hi[v] - lo[v])
        .collect();
    spans.sort_unstable();
    let p90 = spans.get(spans.len() * 9 / 10).copied().unwrap_or(0);
    let limit = DENSE_SPAN_FACTOR * p90 + DENSE_SPAN_SLACK;
    let wide = |v: usize| !free(v) && hi[v] - lo[v] > limit;
    let mut local: Vec<usize> = (0..m).filter(|&v| !free(v) && !wide(v)).collect();
    local.sort_by_key(|&v| (lo[v], v));
    let mut rank = vec![usize::MAX; m];
    for (k, &v) in local.iter().enumerate() {
        rank[v] = k;
    }
    // Rows keyed by the last local unknown they touch; `local.len()` is the tail.
    let tail = local.len();
    let mut rows_after: Vec<Vec<usize>> = vec![Vec::new(); tail + 1];
    let mut row_anchor = vec![tail; eq_rows.len()];
    for (r, row) in eq_rows.iter().enumerate() {
        let k = row
            .iter()
            .filter_map(|(v, _)| (rank[*v] != usize::MAX).then_some(rank[*v]))
            .max();
        row_anchor[r] = k.unwrap_or(tail);
        rows_after[row_anchor[r]].push(r);
    }
    let mut free_after: Vec<Vec<usize>> = vec![Vec::new(); tail + 1];
    let mut free_anchor = vec![None; m];
    for (r, row) in eq_rows.iter().enumerate() {
        for &(v, _) in row {
            if free(v) {
                let a = free_anchor[v].get_or_insert(row_anchor[r]);
                *a = match free_vars {
                    FreeVars::BeforeRows => (*a).min(row_anchor[r]),
                    FreeVars::AfterRows => (*a).max(row_anchor[r]),
                };
            }
        }
    }
    for v in 0..m {
        if free(v) {
            free_after[free_anchor[v].unwrap_or(tail)].push(v);
        }
    }
    let mut pos_y = vec![0; m];
    let mut pos_e = vec![0; eq_rows.len()];
    let mut next = 0;
    let mut emit = |k: usize, next: &mut usize, pos_y: &mut Vec<usize>| {
        let mut place_free = |next: &mut usize| {
            for &v in &free_after[k] {
                pos_y[v] = *next;
                *next += 1;
            }
        };
        if free_vars == FreeVars::BeforeRows {
            place_free(next);
        }
        for &r in &rows_after[k] {
            pos_e[r] = *next;
            *next += 1;
        }
        if free_vars == FreeVars::AfterRows {
            place_free(next);
        }
    };
    for (k, &v) in local.iter().enumerate() {
        pos_y[v] = next;
        next += 1;
        emit(k, &mut next, &mut pos_y);
    }
    for v in (0..m).filter(|&v| wide(v)) {
        pos_y[v] = next;
        next += 1;
    }
    emit(tail, &mut next, &mut pos_y);
    drop(emit);
    (pos_y, pos_e)
}
