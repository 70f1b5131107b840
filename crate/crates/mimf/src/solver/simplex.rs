//! Bounded-variable revised simplex over a dense basis inverse.
//!
//! Variables live between (possibly infinite) bounds and are handled
//! implicitly, so model rows stay at the formulation's count. The solver
//! runs a classic two-phase primal method from the slack basis and a dual
//! method for re-optimization after bound changes, which is what the
//! branch-and-bound layer uses between nodes. Rows and columns are
//! geometric-mean scaled (powers of two, so scaling is exact) before the
//! solve. All tie-breaks go to the lowest index; after 1000 degenerate
//! pivots pricing falls back to Bland's rule.

use crate::model::{LinearModel, ObjSense, Sense};

const INF: f64 = f64::INFINITY;

const DUAL_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-8;
const DEGEN_STEP: f64 = 1e-11;
const BLAND_TRIGGER: u64 = 1000;
const REFRESH_EVERY: u64 = 256;

#[derive(Clone, Copy, PartialEq, Debug)]
enum VState {
    Basic(u32),
    AtLower,
    AtUpper,
    Free,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub(crate) enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterLimit,
}

enum LoopExit {
    Optimal,
    Unbounded,
    IterLimit,
    /// The incrementally maintained state diverged from a fresh
    /// recomputation; the caller restarts from a clean basis.
    Corrupt,
}

pub(crate) struct Simplex {
    m: usize,
    n_struct: usize,
    n: usize,
    cols: Vec<Vec<(u32, f64)>>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    rhs: Vec<f64>,
    col_scale: Vec<f64>,
    row_scale: Vec<f64>,
    negate_obj: bool,

    state: Vec<VState>,
    basis: Vec<u32>,
    /// Column-major m*m basis inverse: entry (row r, col c) at `c*m + r`.
    binv: Vec<f64>,
    xb: Vec<f64>,
    d: Vec<f64>,
    phase1: bool,
    p1cost: Vec<f64>,

    pub(crate) iterations: u64,
    iter_cap: u64,
    flips: u64,
    pivots: u64,
    rejected: u64,
    refactors: u64,
    perturbed: bool,
    saved_bounds: Vec<(f64, f64)>,
    shifts: u64,
    degenerate: u64,
    bland: bool,
    solved_once: bool,
    rhs_norm: f64,
}

impl Simplex {
    pub(crate) fn from_model(model: &LinearModel) -> Self {
        let m = model.num_constraints();
        let n_struct = model.num_variables();
        let n = n_struct + 2 * m;

        // Geometric-mean scaling on the structural matrix, powers of two.
        let mut row_scale = vec![1.0f64; m];
        let mut col_scale = vec![1.0f64; n];
        for _ in 0..3 {
            for (i, c) in model.constraints().iter().enumerate() {
                let mut lo = INF;
                let mut hi = 0.0f64;
                for (v, a) in c.expr.iter() {
                    let mag = (a * col_scale[v.index()] * row_scale[i]).abs();
                    if mag > 0.0 {
                        lo = lo.min(mag);
                        hi = hi.max(mag);
                    }
                }
                if hi > 0.0 {
                    row_scale[i] *= pow2_round(1.0 / (lo * hi).sqrt());
                }
            }
            let mut col_lo = vec![INF; n_struct];
            let mut col_hi = vec![0.0f64; n_struct];
            for (i, c) in model.constraints().iter().enumerate() {
                for (v, a) in c.expr.iter() {
                    let j = v.index();
                    let mag = (a * col_scale[j] * row_scale[i]).abs();
                    if mag > 0.0 {
                        col_lo[j] = col_lo[j].min(mag);
                        col_hi[j] = col_hi[j].max(mag);
                    }
                }
            }
            for j in 0..n_struct {
                if col_hi[j] > 0.0 {
                    col_scale[j] *= pow2_round(1.0 / (col_lo[j] * col_hi[j]).sqrt());
                }
            }
        }

        let mut cols: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
        for (i, c) in model.constraints().iter().enumerate() {
            for (v, a) in c.expr.iter() {
                let j = v.index();
                cols[j].push((i as u32, a * row_scale[i] * col_scale[j]));
            }
        }
        let mut lower = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let negate_obj = model.obj_sense() == ObjSense::Max;
        let mut cost = vec![0.0; n];
        for v in model.variables() {
            let j = v.id.index();
            lower[j] = v.lower / col_scale[j];
            upper[j] = v.upper / col_scale[j];
        }
        for (v, c) in model.objective().iter() {
            let j = v.index();
            let c = if negate_obj { -c } else { c };
            cost[j] = c * col_scale[j];
        }
        let mut rhs = vec![0.0; m];
        let mut rhs_norm = 0.0f64;
        for (i, c) in model.constraints().iter().enumerate() {
            rhs[i] = c.rhs * row_scale[i];
            rhs_norm = rhs_norm.max(rhs[i].abs());
            let s = n_struct + i;
            cols[s].push((i as u32, 1.0));
            col_scale[s] = 1.0 / row_scale[i];
            let (lo, hi) = match c.sense {
                Sense::Le => (0.0, INF),
                Sense::Ge => (-INF, 0.0),
                Sense::Eq => (0.0, 0.0),
            };
            lower[s] = lo;
            upper[s] = hi;
            let a = n_struct + m + i;
            cols[a].push((i as u32, 1.0));
            col_scale[a] = 1.0 / row_scale[i];
        }

        Self {
            m,
            n_struct,
            n,
            cols,
            lower,
            upper,
            cost,
            rhs,
            col_scale,
            row_scale,
            negate_obj,
            state: vec![VState::AtLower; n],
            basis: vec![0; m],
            binv: vec![0.0; m * m],
            xb: vec![0.0; m],
            d: vec![0.0; n],
            phase1: false,
            p1cost: vec![0.0; n],
            iterations: 0,
            iter_cap: 0,
            flips: 0,
            pivots: 0,
            rejected: 0,
            refactors: 0,
            perturbed: false,
            saved_bounds: Vec::new(),
            shifts: 0,
            degenerate: 0,
            bland: false,
            solved_once: false,
            rhs_norm,
        }
    }

    /// Per-call iteration budget: 100 * (rows + cols).
    fn per_call_limit(&self) -> u64 {
        100 * (self.m as u64 + self.n as u64)
    }

    fn nb_value(&self, j: usize) -> f64 {
        match self.state[j] {
            VState::AtLower => self.lower[j],
            VState::AtUpper => self.upper[j],
            VState::Free => 0.0,
            VState::Basic(r) => self.xb[r as usize],
        }
    }

    fn current_cost(&self) -> &[f64] {
        if self.phase1 {
            &self.p1cost
        } else {
            &self.cost
        }
    }

    fn sparse_dot(col: &[(u32, f64)], dense: &[f64]) -> f64 {
        let mut acc = 0.0;
        for &(i, a) in col {
            acc += a * dense[i as usize];
        }
        acc
    }

    /// w = B^-1 * col (sparse right-hand side).
    fn ftran_sparse(&self, col: &[(u32, f64)], out: &mut Vec<f64>) {
        out.clear();
        out.resize(self.m, 0.0);
        for &(i, a) in col {
            let base = i as usize * self.m;
            let bc = &self.binv[base..base + self.m];
            for r in 0..self.m {
                out[r] += a * bc[r];
            }
        }
    }

    /// w = B^-1 * v (dense right-hand side).
    fn ftran_dense(&self, v: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.resize(self.m, 0.0);
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            let base = i * self.m;
            let bc = &self.binv[base..base + self.m];
            for r in 0..self.m {
                out[r] += vi * bc[r];
            }
        }
    }

    fn binv_row(&self, r: usize, out: &mut Vec<f64>) {
        out.clear();
        out.resize(self.m, 0.0);
        for c in 0..self.m {
            out[c] = self.binv[c * self.m + r];
        }
    }

    /// Recomputes the reduced costs of every column from the current basis.
    fn refresh_d(&mut self) {
        let costv = if self.phase1 { &self.p1cost } else { &self.cost };
        let mut y = vec![0.0; self.m];
        for i in 0..self.m {
            let bc = &self.binv[i * self.m..(i + 1) * self.m];
            let mut acc = 0.0;
            for r in 0..self.m {
                let cb = costv[self.basis[r] as usize];
                if cb != 0.0 {
                    acc += cb * bc[r];
                }
            }
            y[i] = acc;
        }
        for j in 0..self.n {
            self.d[j] = match self.state[j] {
                VState::Basic(_) => 0.0,
                _ => costv[j] - Self::sparse_dot(&self.cols[j], &y),
            };
        }
    }

    /// Scaled row duals y = c_B B^-1 for the current phase cost.
    fn duals_scaled(&self) -> Vec<f64> {
        let costv = self.current_cost();
        let mut y = vec![0.0; self.m];
        for i in 0..self.m {
            let bc = &self.binv[i * self.m..(i + 1) * self.m];
            let mut acc = 0.0;
            for r in 0..self.m {
                let cb = costv[self.basis[r] as usize];
                if cb != 0.0 {
                    acc += cb * bc[r];
                }
            }
            y[i] = acc;
        }
        y
    }

    /// Recomputes basic values from the nonbasic assignment.
    fn recompute_xb(&mut self) {
        let mut v = self.rhs.clone();
        for j in 0..self.n {
            if matches!(self.state[j], VState::Basic(_)) {
                continue;
            }
            let val = self.nb_value(j);
            if val != 0.0 {
                for &(i, a) in &self.cols[j] {
                    v[i as usize] -= a * val;
                }
            }
        }
        let mut out = Vec::new();
        self.ftran_dense(&v, &mut out);
        self.xb = out;
    }

    /// Rebuilds the basis inverse from scratch. Returns false when the
    /// basis matrix is numerically singular.
    fn refactorize(&mut self) -> bool {
        let m = self.m;
        if m == 0 {
            return true;
        }
        // Row-major scratch copies.
        let mut a = vec![0.0f64; m * m];
        for r in 0..m {
            for &(i, v) in &self.cols[self.basis[r] as usize] {
                a[i as usize * m + r] = v;
            }
        }
        let mut inv = vec![0.0f64; m * m];
        for k in 0..m {
            inv[k * m + k] = 1.0;
        }
        for k in 0..m {
            let mut p = k;
            let mut best = a[k * m + k].abs();
            for r in k + 1..m {
                let mag = a[r * m + k].abs();
                if mag > best {
                    best = mag;
                    p = r;
                }
            }
            if best < 1e-12 {
                return false;
            }
            if p != k {
                for c in 0..m {
                    a.swap(k * m + c, p * m + c);
                    inv.swap(k * m + c, p * m + c);
                }
            }
            let piv = a[k * m + k];
            let inv_piv = 1.0 / piv;
            for c in 0..m {
                a[k * m + c] *= inv_piv;
                inv[k * m + c] *= inv_piv;
            }
            for r in 0..m {
                if r == k {
                    continue;
                }
                let f = a[r * m + k];
                if f == 0.0 {
                    continue;
                }
                for c in 0..m {
                    a[r * m + c] -= f * a[k * m + c];
                    inv[r * m + c] -= f * inv[k * m + c];
                }
            }
        }
        // Transpose into the column-major layout.
        for r in 0..m {
            for c in 0..m {
                self.binv[c * m + r] = inv[r * m + c];
            }
        }
        true
    }

    fn setup_start_basis(&mut self) -> bool {
        let m = self.m;
        for j in 0..self.n_struct {
            self.state[j] = if self.lower[j] > -INF {
                VState::AtLower
            } else if self.upper[j] < INF {
                VState::AtUpper
            } else {
                VState::Free
            };
        }
        let mut act = vec![0.0; m];
        for j in 0..self.n_struct {
            let v = self.nb_value(j);
            if v != 0.0 {
                for &(i, a) in &self.cols[j] {
                    act[i as usize] += a * v;
                }
            }
        }
        self.binv.iter_mut().for_each(|x| *x = 0.0);
        for k in 0..m {
            self.binv[k * m + k] = 1.0;
        }
        let mut any_artificial = false;
        for i in 0..m {
            let s = self.n_struct + i;
            let art = self.n_struct + m + i;
            self.lower[art] = 0.0;
            self.upper[art] = 0.0;
            self.p1cost[art] = 0.0;
            self.state[art] = VState::AtLower;
            let need = self.rhs[i] - act[i];
            if need >= self.lower[s] - FEAS_TOL && need <= self.upper[s] + FEAS_TOL {
                self.state[s] = VState::Basic(i as u32);
                self.basis[i] = s as u32;
                self.xb[i] = need;
            } else {
                // Slack parks at its violated-side bound; the artificial
                // carries the residual into phase 1.
                let beta = if need < self.lower[s] {
                    self.state[s] = VState::AtLower;
                    self.lower[s]
                } else {
                    self.state[s] = VState::AtUpper;
                    self.upper[s]
                };
                let t = need - beta;
                if t > 0.0 {
                    self.upper[art] = INF;
                    self.p1cost[art] = 1.0;
                } else {
                    self.lower[art] = -INF;
                    self.p1cost[art] = -1.0;
                }
                self.state[art] = VState::Basic(i as u32);
                self.basis[i] = art as u32;
                self.xb[i] = t;
                any_artificial = true;
            }
        }
        any_artificial
    }

    fn phase1_objective(&self) -> f64 {
        let mut acc = 0.0;
        for r in 0..self.m {
            let j = self.basis[r] as usize;
            if self.p1cost[j] != 0.0 {
                acc += self.p1cost[j] * self.xb[r];
            }
        }
        acc
    }

    fn close_artificials(&mut self) {
        for i in 0..self.m {
            let a = self.n_struct + self.m + i;
            self.lower[a] = 0.0;
            self.upper[a] = 0.0;
            if !matches!(self.state[a], VState::Basic(_)) {
                self.state[a] = VState::AtLower;
            }
        }
    }

    fn price(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.n {
            if matches!(self.state[j], VState::Basic(_)) || self.lower[j] == self.upper[j] {
                continue;
            }
            let dj = self.d[j];
            let (eligible, dir) = match self.state[j] {
                VState::AtLower => (dj < -DUAL_TOL, 1.0),
                VState::AtUpper => (dj > DUAL_TOL, -1.0),
                VState::Free => {
                    if dj < -DUAL_TOL {
                        (true, 1.0)
                    } else if dj > DUAL_TOL {
                        (true, -1.0)
                    } else {
                        (false, 1.0)
                    }
                }
                VState::Basic(_) => unreachable!(),
            };
            if !eligible {
                continue;
            }
            if self.bland {
                return Some((j, dir));
            }
            let score = dj.abs();
            if best.map_or(true, |(_, _, s)| score > s) {
                best = Some((j, dir, score));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    /// One primal phase. Assumes `d` is fresh for the current phase cost.
    fn primal_loop(&mut self) -> LoopExit {
        let mut w: Vec<f64> = Vec::new();
        let mut rho: Vec<f64> = Vec::new();
        let mut since_refresh = 0u64;
        loop {
            if self.iterations >= self.iter_cap {
                return LoopExit::IterLimit;
            }
            if since_refresh >= REFRESH_EVERY {
                self.refresh_d();
                since_refresh = 0;
                // Drift control: a fresh recomputation of the basics must
                // agree with the incrementally maintained values.
                let old_worst = self
                    .xb
                    .iter()
                    .fold(0.0f64, |acc, v| acc.max(v.abs()));
                let old = std::mem::take(&mut self.xb);
                self.recompute_xb();
                let drift = old
                    .iter()
                    .zip(&self.xb)
                    .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
                if drift > 1e-6 * (1.0 + old_worst) {
                    if !self.refactorize() {
                        return LoopExit::Corrupt;
                    }
                    self.recompute_xb();
                    self.refresh_d();
                }
                if !self.phase1 {
                    let worst = (0..self.m)
                        .map(|r| {
                            let b = self.basis[r] as usize;
                            (self.lower[b] - self.xb[r]).max(self.xb[r] - self.upper[b])
                        })
                        .fold(0.0f64, f64::max);
                    if worst > 1e-4 * (1.0 + self.rhs_norm) {
                        return LoopExit::Corrupt;
                    }
                }
            }
            let Some((e, dir)) = self.price() else {
                // Confirm with fresh reduced costs before declaring the
                // phase optimal.
                self.refresh_d();
                if self.price().is_some() {
                    since_refresh = 0;
                    continue;
                }
                return LoopExit::Optimal;
            };
            self.ftran_sparse(&self.cols[e], &mut w);

            // Two-pass ratio test: find the tightest ratio, then among
            // near-ties pick the largest pivot magnitude (stability),
            // lowest row index last. Bound flip only when the entering
            // variable's own range is strictly tighter.
            let mut limit = INF;
            for r in 0..self.m {
                let a = dir * w[r];
                let b = self.basis[r] as usize;
                if a > PIVOT_TOL {
                    let lb = self.lower[b];
                    if lb > -INF {
                        limit = limit.min(((self.xb[r] - lb) / a).max(0.0));
                    }
                } else if a < -PIVOT_TOL {
                    let ub = self.upper[b];
                    if ub < INF {
                        limit = limit.min(((self.xb[r] - ub) / a).max(0.0));
                    }
                }
            }
            let mut leave: Option<(usize, bool)> = None;
            if limit < INF {
                let near = limit + 1e-9 * (1.0 + limit.abs());
                let mut best_mag = 0.0;
                for r in 0..self.m {
                    let a = dir * w[r];
                    let b = self.basis[r] as usize;
                    let (ratio, to_upper) = if a > PIVOT_TOL {
                        let lb = self.lower[b];
                        if lb <= -INF {
                            continue;
                        }
                        (((self.xb[r] - lb) / a).max(0.0), false)
                    } else if a < -PIVOT_TOL {
                        let ub = self.upper[b];
                        if ub >= INF {
                            continue;
                        }
                        (((self.xb[r] - ub) / a).max(0.0), true)
                    } else {
                        continue;
                    };
                    if ratio <= near && a.abs() > best_mag {
                        best_mag = a.abs();
                        leave = Some((r, to_upper));
                    }
                }
            }
            let cap = self.upper[e] - self.lower[e];
            if cap < limit {
                // Bound flip.
                for r in 0..self.m {
                    self.xb[r] -= dir * cap * w[r];
                }
                self.state[e] = match self.state[e] {
                    VState::AtLower => VState::AtUpper,
                    VState::AtUpper => VState::AtLower,
                    other => other,
                };
                self.iterations += 1;
                self.flips += 1;
                since_refresh += 1;
                continue;
            }
            if limit == INF {
                return LoopExit::Unbounded;
            }
            let (leave_r, to_upper) = leave.expect("finite ratio must have a leaving row");
            let piv = w[leave_r];
            if piv.abs() < PIVOT_TOL {
                // Numerically hopeless pivot: rebuild the inverse and retry.
                self.rejected += 1;
                self.iterations += 1;
                if self.refactorize() {
                    self.refactors += 1;
                    self.recompute_xb();
                    self.refresh_d();
                    since_refresh = 0;
                    continue;
                }
                return LoopExit::IterLimit;
            }

            if limit <= DEGEN_STEP {
                self.degenerate += 1;
                if self.degenerate >= BLAND_TRIGGER {
                    // Shift the blocking bound outward so the step becomes
                    // positive. A fixed blocker (equality slack, fixed
                    // binary) instead leaves the basis degenerately and
                    // never returns. Bland's rule stays as the terminal
                    // anti-cycling fallback once the shift budget is spent.
                    let shift_cap = 64 * self.m as u64 + 4096;
                    if self.degenerate >= BLAND_TRIGGER && self.degenerate < BLAND_TRIGGER + 6
                        && std::env::var("MIMF_SX_TRACE").is_ok()
                    {
                        if let Some((r, tu)) = leave {
                            let bc = self.basis[r] as usize;
                            let worst = (0..self.m)
                                .map(|rr| {
                                    let bb = self.basis[rr] as usize;
                                    (self.lower[bb] - self.xb[rr]).max(self.xb[rr] - self.upper[bb])
                                })
                                .fold(f64::NEG_INFINITY, f64::max);
                            eprintln!(
                                "sx: degen trigger phase1={} bcol={} tu={} limit={limit:.2e} xb={:.6e} lo={:.6e} hi={:.6e} worst_viol={:.3e}",
                                self.phase1, bc, tu, self.xb[r], self.lower[bc], self.upper[bc], worst
                            );
                        }
                    }
                    let mut resolved = false;
                    if !self.bland {
                        if let Some((r, to_upper)) = leave {
                            let bcol = self.basis[r] as usize;
                            let artificial = bcol >= self.n_struct + self.m;
                            if self.lower[bcol] == self.upper[bcol] || artificial {
                                // Fixed and artificial blockers leave the
                                // basis degenerately and never come back.
                                resolved = true;
                            } else if self.shifts < shift_cap {
                                // Leaving at upper: raise it; at lower:
                                // lower it. Either way the step opens up.
                                self.shift_bound(bcol, to_upper);
                                continue;
                            }
                        }
                    }
                    if !resolved {
                        self.bland = true;
                    }
                }
            }

            // Reduced-cost update uses row `leave_r` of the pre-pivot inverse.
            self.binv_row(leave_r, &mut rho);
            let rate = self.d[e] / piv;
            let lcol = self.basis[leave_r] as usize;
            if rate != 0.0 {
                for j in 0..self.n {
                    if j == e || j == lcol || matches!(self.state[j], VState::Basic(_)) {
                        continue;
                    }
                    let aj = Self::sparse_dot(&self.cols[j], &rho);
                    if aj != 0.0 {
                        self.d[j] -= rate * aj;
                    }
                }
            }
            self.d[lcol] = -rate;
            self.d[e] = 0.0;

            // Move basics, swap basis, update the inverse.
            let entering_value = self.nb_value(e) + dir * limit;
            if limit != 0.0 {
                for r in 0..self.m {
                    self.xb[r] -= dir * limit * w[r];
                }
            }
            self.state[lcol] = if to_upper {
                VState::AtUpper
            } else {
                VState::AtLower
            };
            self.basis[leave_r] = e as u32;
            self.state[e] = VState::Basic(leave_r as u32);
            self.xb[leave_r] = entering_value;
            self.update_binv(leave_r, piv, &w);

            self.iterations += 1;
            self.pivots += 1;
            since_refresh += 1;
        }
    }

    fn update_binv(&mut self, pivot_row: usize, piv: f64, w: &[f64]) {
        let m = self.m;
        for c in 0..m {
            let base = c * m;
            let t = self.binv[base + pivot_row];
            if t == 0.0 {
                continue;
            }
            let f = t / piv;
            let colc = &mut self.binv[base..base + m];
            for r in 0..m {
                colc[r] -= f * w[r];
            }
            colc[pivot_row] = f;
        }
    }

    /// Anti-degeneracy bound shifting: a blocking bound that keeps
    /// producing zero-length steps is pushed outward by a tiny
    /// deterministic amount, so the entering variable can make progress.
    /// The true bounds are saved on the first shift and restored once the
    /// shifted problem is optimal; a short dual clean-up then repairs the
    /// leaked feasibility.
    fn shift_bound(&mut self, col: usize, to_upper: bool) {
        if self.shifts < 5 && std::env::var("MIMF_SX_TRACE").is_ok() {
            eprintln!("sx: shift col={col} to_upper={to_upper} lower={} upper={}", self.lower[col], self.upper[col]);
        }
        if !self.perturbed {
            self.saved_bounds = self
                .lower
                .iter()
                .copied()
                .zip(self.upper.iter().copied())
                .collect();
            self.perturbed = true;
        }
        let h = (col as u64)
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(self.shifts)
            % 1_000_003;
        let u = (h as f64 + 1.0) / 1_000_004.0;
        if to_upper {
            let delta = (1.0 + u) * 1e-7 * (1.0 + self.upper[col].abs());
            self.upper[col] += delta;
        } else {
            let delta = (1.0 + u) * 1e-7 * (1.0 + self.lower[col].abs());
            self.lower[col] -= delta;
        }
        self.shifts += 1;
    }

    fn restore_bounds(&mut self) {
        if self.perturbed {
            for (j, &(lo, hi)) in self.saved_bounds.iter().enumerate() {
                self.lower[j] = lo;
                self.upper[j] = hi;
            }
            self.saved_bounds.clear();
            self.perturbed = false;
            self.shifts = 0;
        }
    }

    /// Two-phase primal solve from the slack basis.
    pub(crate) fn primal_solve(&mut self) -> LpStatus {
        let t0 = std::time::Instant::now();
        let trace = std::env::var("MIMF_SX_TRACE").is_ok();
        let (i0, f0, p0, r0) = (self.iterations, self.flips, self.pivots, self.rejected);
        let st = self.primal_solve_inner();
        if trace {
            eprintln!(
                "sx: primal_solve {:?} d_iters={} d_flips={} d_pivots={} d_rejected={} degen={} bland={} in {:.2}s",
                st,
                self.iterations - i0,
                self.flips - f0,
                self.pivots - p0,
                self.rejected - r0,
                self.degenerate,
                self.bland,
                t0.elapsed().as_secs_f64()
            );
        }
        st
    }

    fn primal_solve_inner(&mut self) -> LpStatus {
        self.iter_cap = self.iterations + self.per_call_limit();
        self.degenerate = 0;
        self.bland = false;
        let mut restarts = 0u32;
        loop {
            let needs_phase1 = self.setup_start_basis();
            if needs_phase1 {
                self.phase1 = true;
                self.refresh_d();
                match self.primal_loop() {
                    LoopExit::IterLimit => return LpStatus::IterLimit,
                    LoopExit::Corrupt | LoopExit::Unbounded => {
                        // Phase 1 is bounded below by zero, so either way
                        // this is numerical trouble: restart clean.
                        if restarts < 2 {
                            restarts += 1;
                            self.restore_bounds();
                            self.bland = restarts > 1;
                            continue;
                        }
                        return LpStatus::IterLimit;
                    }
                    LoopExit::Optimal => {}
                }
                let p1 = self.phase1_objective();
                if p1.abs() > 1e-8 * (1.0 + self.rhs_norm) {
                    // Infeasible on (possibly shift-relaxed) bounds proves
                    // infeasibility of the true box.
                    self.restore_bounds();
                    return LpStatus::Infeasible;
                }
            }
            self.phase1 = false;
            self.close_artificials();
            self.refresh_d();
            let mut exit = self.primal_loop();
            if matches!(exit, LoopExit::Optimal) && self.perturbed {
                self.restore_bounds();
                self.recompute_xb();
                self.refresh_d();
                match self.dual_loop(false) {
                    LpStatus::Optimal => {}
                    LpStatus::Infeasible => return LpStatus::Infeasible,
                    _ => {
                        // Clean-up failed; grind it out from scratch under
                        // the anti-cycling rule instead.
                        self.bland = true;
                        self.degenerate = 0;
                        continue;
                    }
                }
            }
            if !matches!(exit, LoopExit::Optimal) {
                self.restore_bounds();
            }
            match exit {
                LoopExit::Optimal => {
                    if self.finish_optimal(&mut restarts) {
                        self.solved_once = true;
                        return LpStatus::Optimal;
                    }
                    if restarts > 2 {
                        return LpStatus::IterLimit;
                    }
                    continue;
                }
                LoopExit::Corrupt => {
                    if restarts < 2 {
                        restarts += 1;
                        self.restore_bounds();
                        self.bland = restarts > 1;
                        continue;
                    }
                    return LpStatus::IterLimit;
                }
                LoopExit::Unbounded => return LpStatus::Unbounded,
                LoopExit::IterLimit => return LpStatus::IterLimit,
            }
        }
    }

    /// Recomputes the basic solution and verifies primal feasibility.
    /// Returns false when the claimed optimum does not survive a fresh
    /// recomputation (caller restarts).
    fn finish_optimal(&mut self, restarts: &mut u32) -> bool {
        self.recompute_xb();
        let tol = 1e-7 * (1.0 + self.rhs_norm);
        let mut ok = true;
        for r in 0..self.m {
            let b = self.basis[r] as usize;
            if self.xb[r] < self.lower[b] - tol || self.xb[r] > self.upper[b] + tol {
                ok = false;
                break;
            }
        }
        if ok {
            return true;
        }
        *restarts += 1;
        self.refactorize();
        false
    }

    /// Re-optimizes after bound changes, starting from the previous
    /// optimal basis. Bound changes keep the reduced costs intact, but a
    /// column that was fixed (and therefore exempt from dual feasibility)
    /// may re-open with a wrong-sign reduced cost; those are repaired by
    /// flipping the column to its other bound before the dual loop runs.
    pub(crate) fn dual_reoptimize(&mut self) -> LpStatus {
        if !self.solved_once {
            return self.primal_solve();
        }
        self.iter_cap = self.iterations + self.per_call_limit();
        self.phase1 = false;
        self.refresh_d();
        for j in 0..self.n {
            if self.lower[j] == self.upper[j] {
                continue;
            }
            match self.state[j] {
                VState::AtLower if self.d[j] < -DUAL_TOL => {
                    if self.upper[j] < INF {
                        self.state[j] = VState::AtUpper;
                    } else {
                        return self.primal_solve();
                    }
                }
                VState::AtUpper if self.d[j] > DUAL_TOL => {
                    if self.lower[j] > -INF {
                        self.state[j] = VState::AtLower;
                    } else {
                        return self.primal_solve();
                    }
                }
                VState::Free if self.d[j].abs() > DUAL_TOL => {
                    return self.primal_solve();
                }
                _ => {}
            }
        }
        self.recompute_xb();
        self.dual_loop(true)
    }

    /// Dual simplex loop from the current (dual feasible) basis. With
    /// `allow_fallback` a hopelessly long pass restarts as a fresh primal
    /// solve; without it the pass gives up with IterLimit so callers can
    /// decide (used by the perturbation clean-up).
    fn dual_loop(&mut self, allow_fallback: bool) -> LpStatus {
        let mut w: Vec<f64> = Vec::new();
        let mut rho: Vec<f64> = Vec::new();
        let mut alphas: Vec<f64> = vec![0.0; self.n];
        let mut dual_degenerate = 0u64;
        let mut bland_dual = false;
        let mut pivots_here = 0u64;
        let pivot_budget = (2 * self.m as u64).max(1000);
        let mut since_refresh = 0u64;
        loop {
            if self.iterations >= self.iter_cap {
                return LpStatus::IterLimit;
            }
            if pivots_here > pivot_budget {
                // A re-optimization this long is slower than starting over.
                if allow_fallback {
                    return self.primal_solve();
                }
                return LpStatus::IterLimit;
            }
            if since_refresh >= REFRESH_EVERY {
                self.refresh_d();
                since_refresh = 0;
            }
            // Leaving row: worst bound violation; under the anti-cycling
            // rule the lowest violated row index instead.
            let mut leave: Option<(usize, f64, bool)> = None;
            for r in 0..self.m {
                let b = self.basis[r] as usize;
                let below = self.lower[b] - self.xb[r];
                let above = self.xb[r] - self.upper[b];
                let (viol, low_side) = if below >= above { (below, true) } else { (above, false) };
                if viol > FEAS_TOL && leave.map_or(true, |(_, v, _)| viol > v) {
                    leave = Some((r, viol, low_side));
                    if bland_dual {
                        break;
                    }
                }
            }
            let Some((row, _, low_side)) = leave else {
                return LpStatus::Optimal;
            };
            self.binv_row(row, &mut rho);
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..self.n {
                alphas[j] = 0.0;
                if matches!(self.state[j], VState::Basic(_)) || self.lower[j] == self.upper[j] {
                    continue;
                }
                let aj = Self::sparse_dot(&self.cols[j], &rho);
                alphas[j] = aj;
                if aj.abs() <= PIVOT_TOL {
                    continue;
                }
                let ok = match self.state[j] {
                    VState::AtLower => {
                        if low_side {
                            aj < 0.0
                        } else {
                            aj > 0.0
                        }
                    }
                    VState::AtUpper => {
                        if low_side {
                            aj > 0.0
                        } else {
                            aj < 0.0
                        }
                    }
                    VState::Free => true,
                    VState::Basic(_) => false,
                };
                if !ok {
                    continue;
                }
                if bland_dual {
                    if entering.is_none() {
                        entering = Some((j, 0.0));
                    }
                    continue;
                }
                let theta = self.d[j].abs() / aj.abs();
                let better = match entering {
                    None => true,
                    Some((cur, t)) => {
                        theta < t - 1e-12
                            || (theta <= t + 1e-12 && aj.abs() > alphas[cur].abs())
                    }
                };
                if better {
                    entering = Some((j, theta));
                }
            }
            let Some((e, _)) = entering else {
                return LpStatus::Infeasible;
            };
            self.ftran_sparse(&self.cols[e], &mut w);
            let piv = w[row];
            if piv.abs() < PIVOT_TOL || (piv - alphas[e]).abs() > 1e-6 * (1.0 + piv.abs()) {
                // Inverse drifted; rebuild and restart this reopt pass,
                // or start over from the slack basis when even that fails.
                if !self.refactorize() {
                    if allow_fallback {
                        return self.primal_solve();
                    }
                    return LpStatus::IterLimit;
                }
                self.recompute_xb();
                self.refresh_d();
                continue;
            }
            if self.d[e].abs() <= DUAL_TOL {
                dual_degenerate += 1;
                if dual_degenerate >= BLAND_TRIGGER {
                    bland_dual = true;
                }
            }
            let lcol = self.basis[row] as usize;
            let target = if low_side {
                self.lower[lcol]
            } else {
                self.upper[lcol]
            };
            let t = (self.xb[row] - target) / piv;
            for r in 0..self.m {
                self.xb[r] -= t * w[r];
            }
            let entering_value = self.nb_value(e) + t;
            let rate = self.d[e] / piv;
            if rate != 0.0 {
                for j in 0..self.n {
                    if j == e || j == lcol || matches!(self.state[j], VState::Basic(_)) {
                        continue;
                    }
                    if alphas[j] != 0.0 {
                        self.d[j] -= rate * alphas[j];
                    }
                }
            }
            self.d[lcol] = -rate;
            self.d[e] = 0.0;
            self.state[lcol] = if low_side {
                VState::AtLower
            } else {
                VState::AtUpper
            };
            self.basis[row] = e as u32;
            self.state[e] = VState::Basic(row as u32);
            self.xb[row] = entering_value;
            self.update_binv(row, piv, &w);
            self.iterations += 1;
            pivots_here += 1;
            since_refresh += 1;
        }
    }

    /// Changes the bounds of a structural column in original units.
    pub(crate) fn set_var_bounds(&mut self, index: usize, lower: f64, upper: f64) {
        debug_assert!(index < self.n_struct);
        let s = self.col_scale[index];
        self.lower[index] = lower / s;
        self.upper[index] = upper / s;
        match self.state[index] {
            VState::Basic(_) => {}
            VState::AtLower if self.lower[index] == -INF => {
                self.state[index] = if self.upper[index] < INF {
                    VState::AtUpper
                } else {
                    VState::Free
                };
            }
            VState::AtUpper if self.upper[index] == INF => {
                self.state[index] = if self.lower[index] > -INF {
                    VState::AtLower
                } else {
                    VState::Free
                };
            }
            _ => {}
        }
    }

    /// Reduced cost of a nonbasic structural column in original units and
    /// minimize form, with its bound side (true = at upper). None when
    /// basic. Valid right after an optimal solve.
    pub(crate) fn structural_reduced_cost(&self, index: usize) -> Option<(f64, bool)> {
        debug_assert!(index < self.n_struct);
        match self.state[index] {
            VState::Basic(_) => None,
            VState::AtUpper => Some((self.d[index] / self.col_scale[index], true)),
            VState::AtLower | VState::Free => {
                Some((self.d[index] / self.col_scale[index], false))
            }
        }
    }

    /// Structural solution in original units.
    pub(crate) fn extract_point(&self) -> Vec<f64> {
        (0..self.n_struct)
            .map(|j| self.nb_value(j) * self.col_scale[j])
            .collect()
    }

    /// Objective value in the model's own sense.
    pub(crate) fn objective_value(&self, model: &LinearModel) -> f64 {
        model.objective().value_at(&self.extract_point())
    }

    /// Objective value in minimize form (negated for Max models), used by
    /// the branch-and-bound bound bookkeeping.
    pub(crate) fn objective_min_form(&self, model: &LinearModel) -> f64 {
        let v = self.objective_value(model);
        if self.negate_obj {
            -v
        } else {
            v
        }
    }

    /// Row duals and structural reduced costs in original units for the
    /// minimize form, plus an independently evaluated dual objective.
    pub(crate) fn extract_duals(&self, model: &LinearModel) -> (Vec<f64>, Vec<f64>, f64) {
        let y_scaled = self.duals_scaled();
        let sign = if self.negate_obj { -1.0 } else { 1.0 };
        let row_duals: Vec<f64> = (0..self.m)
            .map(|i| sign * y_scaled[i] * self.row_scale[i])
            .collect();
        // Reduced costs of structural columns, min form, original units.
        let mut reduced = vec![0.0; self.n_struct];
        for j in 0..self.n_struct {
            if matches!(self.state[j], VState::Basic(_)) {
                continue;
            }
            let mut acc = self.cost[j];
            for &(i, a) in &self.cols[j] {
                acc -= a * y_scaled[i as usize];
            }
            reduced[j] = sign * acc / self.col_scale[j];
        }
        // Dual objective g(y) = y'b + sum_j min over [l, u] of d_j x_j,
        // evaluated on the original data (min form).
        let mut g = 0.0;
        for (i, c) in model.constraints().iter().enumerate() {
            g += sign * row_duals[i] * c.rhs;
        }
        for v in model.variables() {
            let dj = sign * reduced[v.id.index()];
            if dj > 0.0 {
                g += dj * v.lower;
            } else if dj < 0.0 {
                g += dj * v.upper;
            }
        }
        (row_duals, reduced, sign * g)
    }
}

fn pow2_round(x: f64) -> f64 {
    if !x.is_finite() || x <= 0.0 {
        return 1.0;
    }
    let e = x.log2().round();
    e.exp2()
}
