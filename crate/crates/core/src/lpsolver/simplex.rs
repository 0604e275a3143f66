//! Bounded-variable revised simplex on an equality-form program
//! `min cᵀx  s.t.  A x = b,  lo ≤ x ≤ hi`.
//!
//! The basis inverse is held as an explicit dense matrix, updated with a
//! product-form pivot and rebuilt from scratch every [`REFACTOR_EVERY`]
//! pivots. Phase 1 appends one signed artificial column per row.

use super::{LpError, PIVOT_TOL, FEAS_TOL, OPT_TOL};

const REFACTOR_EVERY: usize = 64;
const DEGENERATE_STEP: f64 = 1e-12;
const PRICE_BLOCK: usize = 256;
/// Pivots since the last refactor beyond which the final basis is rebuilt
/// before reading off values and multipliers.
const FINAL_REFACTOR_AFTER: usize = 16;

/// Equality-form program with sparse column storage.
pub(crate) struct StandardForm {
    pub rows: usize,
    pub cols: Vec<Vec<(usize, f64)>>,
    pub rhs: Vec<f64>,
    pub cost: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum EngineStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

pub(crate) struct EngineResult {
    pub status: EngineStatus,
    /// Values of the structural columns.
    pub x: Vec<f64>,
    /// Row multipliers `c_Bᵀ B⁻¹` of the final basis (phase-2 costs).
    pub duals: Vec<f64>,
    pub iterations: usize,
    /// Final basis when `status` is `Optimal`.
    pub warm: Option<WarmBasis>,
}

/// Optimal basis of a finished solve, reusable after cost or rhs changes.
#[derive(Clone)]
pub(crate) struct WarmBasis {
    art_sign: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    binv: Vec<f64>,
}

struct Engine<'a> {
    sf: &'a StandardForm,
    m: usize,
    n: usize,
    rhs: Vec<f64>,
    /// Artificial column signs, one per row.
    art_sign: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    binv: Vec<f64>,
    since_refactor: usize,
    /// Pricing block where the last entering column was found.
    price_block: usize,
    iterations: usize,
    max_iterations: usize,
    degenerate_run: usize,
}

enum StepOutcome {
    Optimal,
    Unbounded,
    Continue,
}

impl<'a> Engine<'a> {
    fn column(&self, j: usize) -> ColumnRef<'_> {
        if j < self.n {
            ColumnRef::Sparse(&self.sf.cols[j])
        } else {
            ColumnRef::Unit(j - self.n, self.art_sign[j - self.n])
        }
    }

    /// `B⁻¹ a_j` for column `j`.
    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut out = vec![0.0; m];
        match self.column(j) {
            ColumnRef::Sparse(col) => {
                for &(r, a) in col {
                    for (i, o) in out.iter_mut().enumerate() {
                        *o += self.binv[i * m + r] * a;
                    }
                }
            }
            ColumnRef::Unit(r, s) => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = self.binv[i * m + r] * s;
                }
            }
        }
        out
    }

    fn multipliers(&self, cost: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut pi = vec![0.0; m];
        for i in 0..m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.binv[i * m..(i + 1) * m];
                for (p, b) in pi.iter_mut().zip(row) {
                    *p += cb * b;
                }
            }
        }
        pi
    }

    fn reduced_cost(&self, j: usize, cost: &[f64], pi: &[f64]) -> f64 {
        match self.column(j) {
            ColumnRef::Sparse(col) => {
                let mut d = cost[j];
                for &(r, a) in col {
                    d -= pi[r] * a;
                }
                d
            }
            ColumnRef::Unit(r, s) => cost[j] - pi[r] * s,
        }
    }

    /// Rebuilds `B⁻¹` by Gauss-Jordan elimination with partial pivoting and
    /// recomputes the basic values from the nonbasic ones.
    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.m;
        let mut b = vec![0.0; m * m];
        for (k, &j) in self.basis.iter().enumerate() {
            match self.column(j) {
                ColumnRef::Sparse(col) => {
                    for &(r, a) in col {
                        b[r * m + k] = a;
                    }
                }
                ColumnRef::Unit(r, s) => b[r * m + k] = s,
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for col in 0..m {
            let mut piv = col;
            let mut best = b[col * m + col].abs();
            for r in col + 1..m {
                let v = b[r * m + col].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best < 1e-12 {
                return Err(self.failure());
            }
            if piv != col {
                for k in 0..m {
                    b.swap(piv * m + k, col * m + k);
                    inv.swap(piv * m + k, col * m + k);
                }
            }
            let d = b[col * m + col];
            for k in 0..m {
                b[col * m + k] /= d;
                inv[col * m + k] /= d;
            }
            for r in 0..m {
                if r == col {
                    continue;
                }
                let f = b[r * m + col];
                if f != 0.0 {
                    for k in 0..m {
                        b[r * m + k] -= f * b[col * m + k];
                        inv[r * m + k] -= f * inv[col * m + k];
                    }
                }
            }
        }
        self.binv = inv;
        self.since_refactor = 0;
        self.recompute_basic_values();
        Ok(())
    }

    fn recompute_basic_values(&mut self) {
        let m = self.m;
        let mut resid = self.rhs.clone();
        for j in 0..self.n + m {
            if self.is_basic[j] || self.x[j] == 0.0 {
                continue;
            }
            let v = self.x[j];
            match self.column(j) {
                ColumnRef::Sparse(col) => {
                    for &(r, a) in col {
                        resid[r] -= a * v;
                    }
                }
                ColumnRef::Unit(r, s) => resid[r] -= s * v,
            }
        }
        for i in 0..m {
            let row = &self.binv[i * m..(i + 1) * m];
            let v: f64 = row.iter().zip(&resid).map(|(a, b)| a * b).sum();
            self.x[self.basis[i]] = v;
        }
    }

    fn failure(&self) -> LpError {
        LpError::NumericalFailure {
            iterations: self.iterations,
            basis: self.basis.clone(),
        }
    }

    fn step(&mut self, cost: &[f64]) -> Result<StepOutcome, LpError> {
        if self.iterations >= self.max_iterations {
            return Err(self.failure());
        }
        if self.since_refactor >= REFACTOR_EVERY {
            self.refactor()?;
        }
        let bland = self.degenerate_run > 3 * (self.m + self.n);
        let pi = self.multipliers(cost);

        let total = self.n + self.m;
        let entering = if bland {
            (0..total).find_map(|j| self.price(j, cost, &pi).map(|(dir, _)| (j, dir)))
        } else {
            // Partial pricing: blocks are scanned cyclically from where the
            // last search stopped; the best candidate of the first block that
            // has one enters.
            let blocks = total.div_ceil(PRICE_BLOCK);
            let mut found: Option<(usize, f64)> = None;
            for step in 0..blocks {
                let b = (self.price_block + step) % blocks;
                let mut best = 0.0;
                for j in b * PRICE_BLOCK..((b + 1) * PRICE_BLOCK).min(total) {
                    if let Some((dir, mag)) = self.price(j, cost, &pi) {
                        if mag > best {
                            best = mag;
                            found = Some((j, dir));
                        }
                    }
                }
                if found.is_some() {
                    self.price_block = b;
                    break;
                }
            }
            found
        };
        let Some((q, dir)) = entering else {
            return Ok(StepOutcome::Optimal);
        };

        let alpha = self.ftran(q);
        let flip = self.upper[q] - self.lower[q];

        // Ratio test: basic value i moves at rate -dir·alpha_i.
        let mut leave: Option<usize> = None;
        let mut t_best = f64::INFINITY;
        if bland {
            for i in 0..self.m {
                let Some(lim) = self.limit(i, -dir * alpha[i]) else {
                    continue;
                };
                let better = match leave {
                    None => true,
                    Some(l) => {
                        lim < t_best - 1e-15
                            || (lim <= t_best + 1e-15 && self.basis[i] < self.basis[l])
                    }
                };
                if better {
                    t_best = lim;
                    leave = Some(i);
                }
            }
        } else {
            // Harris two-pass: relaxed bound, then largest pivot among ties.
            let mut relaxed = f64::INFINITY;
            for i in 0..self.m {
                let rate = -dir * alpha[i];
                if let Some(lim) = self.relaxed_limit(i, rate) {
                    relaxed = relaxed.min(lim);
                }
            }
            if relaxed.is_finite() {
                let mut best_piv = 0.0;
                for i in 0..self.m {
                    let rate = -dir * alpha[i];
                    if let Some(lim) = self.limit(i, rate) {
                        if lim <= relaxed && rate.abs() > best_piv {
                            best_piv = rate.abs();
                            leave = Some(i);
                            t_best = lim;
                        }
                    }
                }
            }
        }

        if flip.is_finite() && flip <= t_best {
            let t = flip;
            for i in 0..self.m {
                let b = self.basis[i];
                self.x[b] -= dir * alpha[i] * t;
            }
            self.x[q] = if dir > 0.0 { self.upper[q] } else { self.lower[q] };
            self.iterations += 1;
            self.degenerate_run = 0;
            return Ok(StepOutcome::Continue);
        }
        let Some(r) = leave else {
            return Ok(StepOutcome::Unbounded);
        };
        let t = t_best.max(0.0);
        for i in 0..self.m {
            let b = self.basis[i];
            self.x[b] -= dir * alpha[i] * t;
        }
        self.x[q] += dir * t;
        let out = self.basis[r];
        let rate = -dir * alpha[r];
        self.x[out] = if rate < 0.0 { self.lower[out] } else { self.upper[out] };
        self.is_basic[out] = false;
        self.is_basic[q] = true;
        self.basis[r] = q;
        self.pivot(r, &alpha);
        self.iterations += 1;
        self.since_refactor += 1;
        if t <= DEGENERATE_STEP {
            self.degenerate_run += 1;
        } else {
            self.degenerate_run = 0;
        }
        Ok(StepOutcome::Continue)
    }

    /// Direction and reduced-cost magnitude if nonbasic `j` can improve `cost`.
    fn price(&self, j: usize, cost: &[f64], pi: &[f64]) -> Option<(f64, f64)> {
        if self.is_basic[j] {
            return None;
        }
        let (lo, hi) = (self.lower[j], self.upper[j]);
        if lo == hi {
            return None;
        }
        let d = self.reduced_cost(j, cost, pi);
        let xj = self.x[j];
        let dir = if lo.is_finite() && xj <= lo && d < -OPT_TOL {
            1.0
        } else if hi.is_finite() && xj >= hi && d > OPT_TOL {
            -1.0
        } else if !lo.is_finite() && !hi.is_finite() && d.abs() > OPT_TOL {
            -d.signum()
        } else if xj > lo && xj < hi && d.abs() > OPT_TOL {
            // nonbasic strictly between finite and infinite bounds
            -d.signum()
        } else {
            return None;
        };
        Some((dir, d.abs()))
    }

    /// Step length at which basic `i` reaches a bound when moving at `rate`.
    fn limit(&self, i: usize, rate: f64) -> Option<f64> {
        let b = self.basis[i];
        if rate < -PIVOT_TOL && self.lower[b].is_finite() {
            Some(((self.x[b] - self.lower[b]) / -rate).max(0.0))
        } else if rate > PIVOT_TOL && self.upper[b].is_finite() {
            Some(((self.upper[b] - self.x[b]) / rate).max(0.0))
        } else {
            None
        }
    }

    fn relaxed_limit(&self, i: usize, rate: f64) -> Option<f64> {
        let b = self.basis[i];
        if rate < -PIVOT_TOL && self.lower[b].is_finite() {
            Some(((self.x[b] - self.lower[b] + FEAS_TOL) / -rate).max(0.0))
        } else if rate > PIVOT_TOL && self.upper[b].is_finite() {
            Some(((self.upper[b] - self.x[b] + FEAS_TOL) / rate).max(0.0))
        } else {
            None
        }
    }

    fn pivot(&mut self, r: usize, alpha: &[f64]) {
        let m = self.m;
        let ar = alpha[r];
        for k in 0..m {
            self.binv[r * m + k] /= ar;
        }
        let (before, rest) = self.binv.split_at_mut(r * m);
        let (pivot_row, after) = rest.split_at_mut(m);
        for (i, row) in before.chunks_mut(m).enumerate() {
            let f = alpha[i];
            if f != 0.0 {
                for (a, p) in row.iter_mut().zip(pivot_row.iter()) {
                    *a -= f * p;
                }
            }
        }
        for (off, row) in after.chunks_mut(m).enumerate() {
            let f = alpha[r + 1 + off];
            if f != 0.0 {
                for (a, p) in row.iter_mut().zip(pivot_row.iter()) {
                    *a -= f * p;
                }
            }
        }
    }

    /// One dual simplex pivot: the most infeasible basic variable leaves at
    /// its violated bound, the entering column keeps reduced costs dual
    /// feasible (Harris two-pass ratio test). `Unbounded` here means the
    /// program is primal infeasible.
    fn dual_step(&mut self, cost: &[f64]) -> Result<StepOutcome, LpError> {
        if self.iterations >= self.max_iterations {
            return Err(self.failure());
        }
        if self.since_refactor >= REFACTOR_EVERY {
            self.refactor()?;
        }
        let m = self.m;
        let mut leave: Option<(usize, f64, f64)> = None;
        let mut worst = FEAS_TOL;
        for i in 0..m {
            let b = self.basis[i];
            let (v, lo, hi) = (self.x[b], self.lower[b], self.upper[b]);
            if lo - v > worst {
                worst = lo - v;
                leave = Some((i, lo, 1.0));
            } else if v - hi > worst {
                worst = v - hi;
                leave = Some((i, hi, -1.0));
            }
        }
        let Some((r, bound, delta)) = leave else {
            return Ok(StepOutcome::Optimal);
        };
        let rho = self.binv[r * m..(r + 1) * m].to_vec();
        let pi = self.multipliers(cost);
        // Candidates (j, dir, |alpha_rj|, |d_j|): moving x_j along dir moves
        // the leaving variable towards its bound.
        let mut candidates: Vec<(usize, f64, f64, f64)> = Vec::new();
        for j in 0..self.n + m {
            if self.is_basic[j] {
                continue;
            }
            let (lo, hi) = (self.lower[j], self.upper[j]);
            if lo == hi {
                continue;
            }
            let (a, d) = match self.column(j) {
                ColumnRef::Sparse(col) => {
                    let (mut a, mut d) = (0.0, cost[j]);
                    for &(i, v) in col {
                        a += rho[i] * v;
                        d -= pi[i] * v;
                    }
                    (a, d)
                }
                ColumnRef::Unit(i, sgn) => (rho[i] * sgn, cost[j] - pi[i] * sgn),
            };
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let dir = -(a * delta).signum();
            let xj = self.x[j];
            let allowed = if dir > 0.0 { !(hi.is_finite() && xj >= hi) } else { !(lo.is_finite() && xj <= lo) };
            if !allowed {
                continue;
            }
            candidates.push((j, dir, a.abs(), (d * dir).max(0.0)));
        }
        let relaxed = candidates.iter().map(|c| (c.3 + OPT_TOL) / c.2).fold(f64::INFINITY, f64::min);
        let mut entering: Option<(usize, f64)> = None;
        let mut best_piv = 0.0;
        for &(j, dir, a, d) in &candidates {
            if d / a <= relaxed && a > best_piv {
                best_piv = a;
                entering = Some((j, dir));
            }
        }
        let Some((q, dir)) = entering else {
            return Ok(StepOutcome::Unbounded);
        };
        let alpha = self.ftran(q);
        let out = self.basis[r];
        let t = ((bound - self.x[out]) / (-alpha[r] * dir)).max(0.0);
        for i in 0..m {
            let b = self.basis[i];
            self.x[b] -= dir * alpha[i] * t;
        }
        self.x[q] += dir * t;
        self.x[out] = bound;
        self.is_basic[out] = false;
        self.is_basic[q] = true;
        self.basis[r] = q;
        self.pivot(r, &alpha);
        self.iterations += 1;
        self.since_refactor += 1;
        Ok(StepOutcome::Continue)
    }

    fn snapshot(&self) -> WarmBasis {
        WarmBasis {
            art_sign: self.art_sign.clone(),
            lower: self.lower.clone(),
            upper: self.upper.clone(),
            x: self.x.clone(),
            basis: self.basis.clone(),
            is_basic: self.is_basic.clone(),
            binv: self.binv.clone(),
        }
    }

    /// Final refactor and extraction; `cost` covers the artificial columns too.
    fn finish(&mut self, outcome: StepOutcome, cost: &[f64]) -> Result<EngineResult, LpError> {
        if self.since_refactor >= FINAL_REFACTOR_AFTER {
            self.refactor()?;
        } else {
            self.recompute_basic_values();
        }
        let status = match outcome {
            StepOutcome::Unbounded => EngineStatus::Unbounded,
            _ => EngineStatus::Optimal,
        };
        let duals = self.multipliers(cost);
        let mut xs = self.x[..self.n].to_vec();
        for (j, v) in xs.iter_mut().enumerate() {
            *v = v.clamp(self.sf.lower[j], self.sf.upper[j]);
        }
        let warm = (status == EngineStatus::Optimal).then(|| self.snapshot());
        Ok(EngineResult { status, x: xs, duals, iterations: self.iterations, warm })
    }

    fn run_phase(&mut self, cost: &[f64]) -> Result<StepOutcome, LpError> {
        loop {
            match self.step(cost)? {
                StepOutcome::Continue => {}
                other => return Ok(other),
            }
        }
    }
}

enum ColumnRef<'a> {
    Sparse(&'a [(usize, f64)]),
    Unit(usize, f64),
}

fn initial_value(lo: f64, hi: f64) -> f64 {
    if lo.is_finite() {
        lo
    } else if hi.is_finite() {
        hi
    } else {
        0.0
    }
}

/// Solves the program; `max_iterations` caps the pivot count across both phases.
pub(crate) fn solve_standard(
    sf: &StandardForm,
    max_iterations: usize,
) -> Result<EngineResult, LpError> {
    let m = sf.rows;
    let n = sf.cols.len();
    let mut x = vec![0.0; n + m];
    for j in 0..n {
        x[j] = initial_value(sf.lower[j], sf.upper[j]);
    }
    let mut resid = sf.rhs.clone();
    for j in 0..n {
        if x[j] != 0.0 {
            for &(r, a) in &sf.cols[j] {
                resid[r] -= a * x[j];
            }
        }
    }
    let art_sign: Vec<f64> = resid.iter().map(|&r| if r >= 0.0 { 1.0 } else { -1.0 }).collect();
    let mut lower = sf.lower.clone();
    let mut upper = sf.upper.clone();
    lower.extend(std::iter::repeat(0.0).take(m));
    upper.extend(std::iter::repeat(f64::INFINITY).take(m));
    let mut binv = vec![0.0; m * m];
    let mut is_basic = vec![false; n + m];
    let mut basis: Vec<usize> = (n..n + m).collect();

    // Crash: a row served by a nonnegative singleton column that can absorb
    // its residual starts with that column basic instead of an artificial.
    let mut crashed = vec![false; m];
    for j in 0..n {
        if let [(r, a)] = sf.cols[j][..] {
            let v = resid[r] / a;
            if !crashed[r] && x[j] == 0.0 && sf.lower[j] == 0.0 && v >= 0.0 && v <= sf.upper[j] && a.abs() > PIVOT_TOL {
                crashed[r] = true;
                x[j] = v;
                basis[r] = j;
                is_basic[j] = true;
                binv[r * m + r] = 1.0 / a;
                upper[n + r] = 0.0;
            }
        }
    }
    for i in 0..m {
        if !crashed[i] {
            x[n + i] = resid[i].abs();
            binv[i * m + i] = art_sign[i];
            is_basic[n + i] = true;
        }
    }
    let mut eng = Engine {
        sf,
        m,
        n,
        rhs: sf.rhs.clone(),
        art_sign,
        lower,
        upper,
        x,
        basis,
        is_basic,
        binv,
        since_refactor: 0,
        price_block: 0,
        iterations: 0,
        max_iterations,
        degenerate_run: 0,
    };

    let mut phase1 = vec![0.0; n + m];
    for c in phase1.iter_mut().skip(n) {
        *c = 1.0;
    }
    eng.run_phase(&phase1)?;
    eng.refactor()?;
    let infeasibility: f64 = (n..n + m).map(|j| eng.x[j].max(0.0)).sum();
    let scale = 1.0 + sf.rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    if infeasibility > FEAS_TOL * scale {
        return Ok(EngineResult {
            status: EngineStatus::Infeasible,
            x: eng.x[..n].to_vec(),
            duals: vec![0.0; m],
            iterations: eng.iterations,
            warm: None,
        });
    }

    // Pin artificials at zero and pivot basic ones out where possible.
    for j in n..n + m {
        eng.upper[j] = 0.0;
        if !eng.is_basic[j] {
            eng.x[j] = 0.0;
        }
    }
    for r in 0..m {
        if eng.basis[r] < n {
            continue;
        }
        let row: Vec<f64> = eng.binv[r * m..(r + 1) * m].to_vec();
        let mut candidate = None;
        let mut best = 1e-7;
        for j in 0..n {
            if eng.is_basic[j] {
                continue;
            }
            let v: f64 = sf.cols[j].iter().map(|&(i, a)| row[i] * a).sum();
            if v.abs() > best {
                best = v.abs();
                candidate = Some(j);
            }
        }
        if let Some(q) = candidate {
            let alpha = eng.ftran(q);
            let out = eng.basis[r];
            eng.x[out] = 0.0;
            eng.is_basic[out] = false;
            eng.is_basic[q] = true;
            eng.basis[r] = q;
            eng.pivot(r, &alpha);
            eng.since_refactor += 1;
        }
    }
    eng.refactor()?;
    eng.degenerate_run = 0;

    let mut phase2 = sf.cost.clone();
    phase2.extend(std::iter::repeat(0.0).take(m));
    let outcome = eng.run_phase(&phase2)?;
    eng.finish(outcome, &phase2)
}

/// Re-solves `sf`, whose cost and rhs may differ from the solve that
/// produced `warm`, starting from that basis.
/// Dual simplex restores primal feasibility after the rhs change, then
/// primal simplex restores optimality after the cost change. Anything but
/// an `Optimal` result should be confirmed by a cold solve.
pub(crate) fn resolve(
    sf: &StandardForm,
    warm: &WarmBasis,
    max_iterations: usize,
) -> Result<EngineResult, LpError> {
    let m = sf.rows;
    let n = sf.cols.len();
    let w = warm.clone();
    let mut eng = Engine {
        sf,
        m,
        n,
        rhs: sf.rhs.clone(),
        art_sign: w.art_sign,
        lower: w.lower,
        upper: w.upper,
        x: w.x,
        basis: w.basis,
        is_basic: w.is_basic,
        binv: w.binv,
        since_refactor: 0,
        price_block: 0,
        iterations: 0,
        max_iterations,
        degenerate_run: 0,
    };
    let mut full_cost = sf.cost.clone();
    full_cost.extend(std::iter::repeat(0.0).take(m));
    eng.recompute_basic_values();
    loop {
        match eng.dual_step(&full_cost)? {
            StepOutcome::Continue => {}
            StepOutcome::Optimal => break,
            StepOutcome::Unbounded => {
                return Ok(EngineResult {
                    status: EngineStatus::Infeasible,
                    x: eng.x[..n].to_vec(),
                    duals: vec![0.0; m],
                    iterations: eng.iterations,
                    warm: None,
                })
            }
        }
    }
    let outcome = eng.run_phase(&full_cost)?;
    eng.finish(outcome, &full_cost)
}
