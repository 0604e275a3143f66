//! Dense linear programming.
//!
//! [`solve_lp`] minimises `cᵀx` subject to equality rows, `≤` rows and
//! per-variable bounds (infinite bounds mean "unbounded on that side").
//! The engine is a two-phase bounded-variable revised simplex with partial
//! Dantzig pricing (blocks of 256 columns) that switches to Bland's rule
//! once a run of degenerate pivots exceeds `3·(rows + cols)`.
//!
//! Programs with many more rows than columns (most DRO reformulations in
//! this crate) are solved through their Lagrangian dual, whose basis has one
//! row per primal variable; the primal point is read off the dual's simplex
//! multipliers. [`Orientation`] forces either route.
//!
//! [`ObjectiveSweep`] re-solves one program under changing objectives from
//! the previous optimal basis: primal simplex when the program is pivoted
//! directly, dual simplex followed by primal clean-up when the change lands
//! in the right-hand side of the dual.

mod simplex;

use simplex::{resolve, solve_standard, EngineResult, EngineStatus, StandardForm, WarmBasis};
use thiserror::Error;

pub(crate) const PIVOT_TOL: f64 = 1e-9;
pub(crate) const FEAS_TOL: f64 = 1e-7;
pub(crate) const OPT_TOL: f64 = 1e-9;

/// Feasibility tolerance promised for `Optimal` solutions.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("invalid linear program: {0}")]
    InvalidInput(String),
    #[error("simplex stopped after {iterations} iterations without converging (basis of {} columns)", basis.len())]
    NumericalFailure { iterations: usize, basis: Vec<usize> },
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// Empty matrix with a fixed column count, grown with [`DenseMatrix::push_row`].
    pub fn with_cols(cols: usize) -> Self {
        DenseMatrix { rows: 0, cols, data: Vec::new() }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LpError> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut m = DenseMatrix::with_cols(cols);
        for r in rows {
            m.push_row(r)?;
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn push_row(&mut self, row: &[f64]) -> Result<(), LpError> {
        if row.len() != self.cols {
            return Err(LpError::InvalidInput(format!(
                "row of length {} pushed into matrix with {} columns",
                row.len(),
                self.cols
            )));
        }
        self.data.extend_from_slice(row);
        self.rows += 1;
        Ok(())
    }

    /// Appends a row given as `(column, value)` pairs; repeated columns add up.
    pub fn push_sparse_row(&mut self, entries: &[(usize, f64)]) {
        let start = self.data.len();
        self.data.resize(start + self.cols, 0.0);
        for &(c, v) in entries {
            self.data[start + c] += v;
        }
        self.rows += 1;
    }
}

/// `min cᵀx  s.t.  A_eq x = b_eq,  A_ub x ≤ b_ub,  lower ≤ x ≤ upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub eq_matrix: DenseMatrix,
    pub eq_rhs: Vec<f64>,
    pub ub_matrix: DenseMatrix,
    pub ub_rhs: Vec<f64>,
    pub lower_bounds: Vec<f64>,
    pub upper_bounds: Vec<f64>,
}

impl LinearProgram {
    /// Program with `n` variables in `[0, ∞)`, zero objective and no rows.
    pub fn new(n: usize) -> Self {
        LinearProgram {
            objective: vec![0.0; n],
            eq_matrix: DenseMatrix::with_cols(n),
            eq_rhs: Vec::new(),
            ub_matrix: DenseMatrix::with_cols(n),
            ub_rhs: Vec::new(),
            lower_bounds: vec![0.0; n],
            upper_bounds: vec![f64::INFINITY; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_eq(&mut self, entries: &[(usize, f64)], rhs: f64) {
        self.eq_matrix.push_sparse_row(entries);
        self.eq_rhs.push(rhs);
    }

    pub fn add_ub(&mut self, entries: &[(usize, f64)], rhs: f64) {
        self.ub_matrix.push_sparse_row(entries);
        self.ub_rhs.push(rhs);
    }

    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        self.lower_bounds[j] = lower;
        self.upper_bounds[j] = upper;
    }

    pub fn set_free(&mut self, j: usize) {
        self.set_bounds(j, f64::NEG_INFINITY, f64::INFINITY);
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.objective.len();
        let bad = |what: &str| Err(LpError::InvalidInput(what.to_string()));
        if self.eq_matrix.cols != n && self.eq_matrix.rows > 0 {
            return bad("equality matrix column count differs from objective length");
        }
        if self.ub_matrix.cols != n && self.ub_matrix.rows > 0 {
            return bad("inequality matrix column count differs from objective length");
        }
        if self.eq_matrix.rows != self.eq_rhs.len() {
            return bad("equality row count differs from its right-hand side length");
        }
        if self.ub_matrix.rows != self.ub_rhs.len() {
            return bad("inequality row count differs from its right-hand side length");
        }
        if self.lower_bounds.len() != n || self.upper_bounds.len() != n {
            return bad("bound vectors differ from objective length");
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(&self.objective)
            || !finite(&self.eq_matrix.data)
            || !finite(&self.ub_matrix.data)
            || !finite(&self.eq_rhs)
            || !finite(&self.ub_rhs)
        {
            return bad("non-finite coefficient");
        }
        for j in 0..n {
            let (lo, hi) = (self.lower_bounds[j], self.upper_bounds[j]);
            if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(LpError::InvalidInput(format!("variable {j} has bounds [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.eq_matrix.rows {
            let lhs: f64 = self.eq_matrix.row(r).iter().zip(x).map(|(a, b)| a * b).sum();
            worst = worst.max((lhs - self.eq_rhs[r]).abs());
        }
        for r in 0..self.ub_matrix.rows {
            let lhs: f64 = self.ub_matrix.row(r).iter().zip(x).map(|(a, b)| a * b).sum();
            worst = worst.max(lhs - self.ub_rhs[r]);
        }
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.lower_bounds[j] - v).max(v - self.upper_bounds[j]);
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Optimal point when `status` is `Optimal`; otherwise the last iterate.
    pub primal: Vec<f64>,
    /// `cᵀx` at `primal` (`+∞` for infeasible, `−∞` for unbounded programs).
    pub objective_value: f64,
    pub iterations: usize,
}

/// Which simplex problem is actually pivoted on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Orientation {
    /// Dual route when the row count exceeds twice the column count.
    #[default]
    Auto,
    Primal,
    Dual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SolverOptions {
    pub orientation: Orientation,
    /// Pivot cap; `None` means `50·(rows + cols) + 1000` of the pivoted problem.
    pub max_iterations: Option<usize>,
}

pub fn solve_lp(problem: &LinearProgram) -> Result<LpSolution, LpError> {
    solve_lp_with(problem, &SolverOptions::default())
}

pub fn solve_lp_with(problem: &LinearProgram, options: &SolverOptions) -> Result<LpSolution, LpError> {
    problem.validate()?;
    if uses_dual(problem, options) {
        solve_via_dual(problem, options)
    } else {
        solve_primal(problem, options)
    }
}

fn cap(options: &SolverOptions, rows: usize, cols: usize) -> usize {
    options.max_iterations.unwrap_or(50 * (rows + cols) + 1000)
}

fn finish(problem: &LinearProgram, status: LpStatus, primal: Vec<f64>, iterations: usize) -> LpSolution {
    let objective_value = match status {
        LpStatus::Optimal => problem.objective.iter().zip(&primal).map(|(c, x)| c * x).sum(),
        LpStatus::Infeasible => f64::INFINITY,
        LpStatus::Unbounded => f64::NEG_INFINITY,
    };
    LpSolution { status, primal, objective_value, iterations }
}

fn primal_form(problem: &LinearProgram) -> StandardForm {
    let n = problem.num_vars();
    let n_eq = problem.eq_rhs.len();
    let n_ub = problem.ub_rhs.len();
    let rows = n_eq + n_ub;
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n + n_ub];
    for r in 0..n_eq {
        for (j, &a) in problem.eq_matrix.row(r).iter().enumerate() {
            if a != 0.0 {
                cols[j].push((r, a));
            }
        }
    }
    for r in 0..n_ub {
        for (j, &a) in problem.ub_matrix.row(r).iter().enumerate() {
            if a != 0.0 {
                cols[j].push((n_eq + r, a));
            }
        }
        cols[n + r].push((n_eq + r, 1.0));
    }
    let mut rhs = problem.eq_rhs.clone();
    rhs.extend_from_slice(&problem.ub_rhs);
    let mut cost = problem.objective.clone();
    cost.extend(std::iter::repeat(0.0).take(n_ub));
    let mut lower = problem.lower_bounds.clone();
    lower.extend(std::iter::repeat(0.0).take(n_ub));
    let mut upper = problem.upper_bounds.clone();
    upper.extend(std::iter::repeat(f64::INFINITY).take(n_ub));
    StandardForm { rows, cols, rhs, cost, lower, upper }
}

fn primal_solution(problem: &LinearProgram, res: &EngineResult) -> LpSolution {
    let status = match res.status {
        EngineStatus::Optimal => LpStatus::Optimal,
        EngineStatus::Infeasible => LpStatus::Infeasible,
        EngineStatus::Unbounded => LpStatus::Unbounded,
    };
    finish(problem, status, res.x[..problem.num_vars()].to_vec(), res.iterations)
}

fn solve_primal(problem: &LinearProgram, options: &SolverOptions) -> Result<LpSolution, LpError> {
    let sf = primal_form(problem);
    let res = solve_standard(&sf, cap(options, sf.rows, sf.cols.len()))?;
    Ok(primal_solution(problem, &res))
}

/// How an original variable maps onto a sign-restricted or free dual-side column.
#[derive(Clone, Copy)]
struct VarMap {
    /// `x = shift + sign·x'`.
    shift: f64,
    sign: f64,
    nonneg: bool,
    /// Upper bound on `x'` that needs its own row.
    width: Option<f64>,
}

fn var_maps(problem: &LinearProgram) -> Vec<VarMap> {
    problem
        .lower_bounds
        .iter()
        .zip(&problem.upper_bounds)
        .map(|(&lo, &hi)| match (lo.is_finite(), hi.is_finite()) {
            (true, true) => VarMap { shift: lo, sign: 1.0, nonneg: true, width: Some(hi - lo) },
            (true, false) => VarMap { shift: lo, sign: 1.0, nonneg: true, width: None },
            (false, true) => VarMap { shift: hi, sign: -1.0, nonneg: true, width: None },
            (false, false) => VarMap { shift: 0.0, sign: 1.0, nonneg: false, width: None },
        })
        .collect()
}

/// Dual-side right-hand side `c'` for objective `c`.
fn dual_rhs(objective: &[f64], maps: &[VarMap]) -> Vec<f64> {
    objective.iter().zip(maps).map(|(c, m)| c * m.sign).collect()
}

/// For `min c'ᵀx'` over `E x' = f, G x' ≤ g, x'_N ≥ 0` builds the dual
/// `min −fᵀy + gᵀw  s.t.  Eᵀy − Gᵀw (+ s) = c'`, `w, s ≥ 0`, `y` free.
/// At a dual optimum the multipliers of its rows equal `−x'`.
fn dual_form(problem: &LinearProgram) -> (StandardForm, Vec<VarMap>) {
    let n = problem.num_vars();
    let maps = var_maps(problem);
    let n_eq = problem.eq_rhs.len();
    let n_ub = problem.ub_rhs.len();
    let shift_of = |row: &[f64]| -> f64 { row.iter().zip(&maps).map(|(a, m)| a * m.shift).sum() };

    let mut cols: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut cost = Vec::new();
    let mut lower = Vec::new();
    for r in 0..n_eq {
        let row = problem.eq_matrix.row(r);
        let f = problem.eq_rhs[r] - shift_of(row);
        let col: Vec<(usize, f64)> = row
            .iter()
            .enumerate()
            .filter(|(_, a)| **a != 0.0)
            .map(|(j, &a)| (j, a * maps[j].sign))
            .collect();
        cols.push(col);
        cost.push(-f);
        lower.push(f64::NEG_INFINITY);
    }
    for r in 0..n_ub {
        let row = problem.ub_matrix.row(r);
        let g = problem.ub_rhs[r] - shift_of(row);
        let col: Vec<(usize, f64)> = row
            .iter()
            .enumerate()
            .filter(|(_, a)| **a != 0.0)
            .map(|(j, &a)| (j, -a * maps[j].sign))
            .collect();
        cols.push(col);
        cost.push(g);
        lower.push(0.0);
    }
    for (j, m) in maps.iter().enumerate() {
        if let Some(w) = m.width {
            cols.push(vec![(j, -1.0)]);
            cost.push(w);
            lower.push(0.0);
        }
    }
    for (j, m) in maps.iter().enumerate() {
        if m.nonneg {
            cols.push(vec![(j, 1.0)]);
            cost.push(0.0);
            lower.push(0.0);
        }
    }
    let upper = vec![f64::INFINITY; cols.len()];
    let rhs = dual_rhs(&problem.objective, &maps);
    (StandardForm { rows: n, cols, rhs, cost, lower, upper }, maps)
}

/// Maps a dual-side engine result back to the original program.
fn dual_solution(
    problem: &LinearProgram,
    sf: &StandardForm,
    maps: &[VarMap],
    res: &EngineResult,
    limit: usize,
) -> Result<LpSolution, LpError> {
    let n = problem.num_vars();
    match res.status {
        EngineStatus::Optimal => {
            let x = (0..n)
                .map(|j| {
                    let v = maps[j].shift + maps[j].sign * (-res.duals[j]);
                    v.clamp(problem.lower_bounds[j], problem.upper_bounds[j])
                })
                .collect();
            Ok(finish(problem, LpStatus::Optimal, x, res.iterations))
        }
        EngineStatus::Unbounded => Ok(finish(problem, LpStatus::Infeasible, vec![0.0; n], res.iterations)),
        EngineStatus::Infeasible => {
            // Primal is infeasible or unbounded; the homogeneous dual decides.
            let homogeneous = StandardForm {
                rows: sf.rows,
                cols: sf.cols.clone(),
                rhs: vec![0.0; n],
                cost: sf.cost.clone(),
                lower: sf.lower.clone(),
                upper: sf.upper.clone(),
            };
            let res0 = solve_standard(&homogeneous, limit)?;
            let status = if res0.status == EngineStatus::Unbounded {
                LpStatus::Infeasible
            } else {
                LpStatus::Unbounded
            };
            Ok(finish(problem, status, vec![0.0; n], res.iterations + res0.iterations))
        }
    }
}

fn solve_via_dual(problem: &LinearProgram, options: &SolverOptions) -> Result<LpSolution, LpError> {
    let (sf, maps) = dual_form(problem);
    let limit = cap(options, sf.rows, sf.cols.len());
    let res = solve_standard(&sf, limit)?;
    dual_solution(problem, &sf, &maps, &res, limit)
}

fn uses_dual(problem: &LinearProgram, options: &SolverOptions) -> bool {
    let n = problem.num_vars();
    let rows = problem.eq_rhs.len() + problem.ub_rhs.len();
    match options.orientation {
        Orientation::Primal => false,
        Orientation::Dual => true,
        Orientation::Auto => rows > 2 * n && rows > 40,
    }
}

/// Solves one program under a sequence of objective vectors, starting each
/// solve from the previous optimal basis. Constraints and bounds are fixed
/// at construction. Results match [`solve_lp_with`] on the same program; a
/// warm start that does not end optimal is redone from scratch.
pub struct ObjectiveSweep {
    problem: LinearProgram,
    options: SolverOptions,
    sf: StandardForm,
    /// `Some` when the dual route is used.
    maps: Option<Vec<VarMap>>,
    warm: Option<WarmBasis>,
}

impl ObjectiveSweep {
    pub fn new(problem: &LinearProgram, options: &SolverOptions) -> Result<Self, LpError> {
        problem.validate()?;
        let (sf, maps) = if uses_dual(problem, options) {
            let (sf, maps) = dual_form(problem);
            (sf, Some(maps))
        } else {
            (primal_form(problem), None)
        };
        Ok(ObjectiveSweep { problem: problem.clone(), options: *options, sf, maps, warm: None })
    }

    pub fn solve(&mut self, objective: &[f64]) -> Result<LpSolution, LpError> {
        let n = self.problem.num_vars();
        if objective.len() != n || objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::InvalidInput(format!("objective must hold {n} finite entries")));
        }
        self.problem.objective = objective.to_vec();
        match &self.maps {
            Some(maps) => self.sf.rhs = dual_rhs(objective, maps),
            None => self.sf.cost[..n].copy_from_slice(objective),
        }
        let limit = cap(&self.options, self.sf.rows, self.sf.cols.len());
        if let Some(warm) = &self.warm {
            if let Ok(res) = resolve(&self.sf, warm, limit) {
                if res.status == EngineStatus::Optimal {
                    return self.accept(res, limit);
                }
            }
        }
        let res = solve_standard(&self.sf, limit)?;
        self.accept(res, limit)
    }

    fn accept(&mut self, mut res: EngineResult, limit: usize) -> Result<LpSolution, LpError> {
        self.warm = res.warm.take();
        match &self.maps {
            Some(maps) => dual_solution(&self.problem, &self.sf, maps, &res, limit),
            None => Ok(primal_solution(&self.problem, &res)),
        }
    }
}
