//! Worst-case expected cost over one, two or M order-1 Wasserstein balls.
//!
//! For a cost `c(z, y) = max_s a_s(z)ᵀy + b_s(z)` with `a_s, b_s` affine in
//! the decision `z`, an outcome polyhedron `Y = {y : A y ≤ h}` and balls with
//! discrete centres, the problem `min_z sup_{μ ∈ ∩ balls} E_μ[c(z, Y)]` is the
//! linear program
//!
//! ```text
//! min  Σ_m λ_m ε_m + Σ_m Σ_i w_{m,i} u_{m,i}
//! s.t. Σ_m u_{m,i_m} ≥ b_s(z) + γ_{𝐢,s}ᵀh − Σ_m α_{𝐢,m,s}ᵀ y_{m,i_m}
//!      Σ_m α_{𝐢,m,s} = Aᵀγ_{𝐢,s} − a_s(z),   ‖α_{𝐢,m,s}‖_∞ ≤ λ_m,   γ ≥ 0
//! ```
//!
//! over every multi-index `𝐢 ∈ [n_1] × … × [n_M]` and piece `s`. Each row is
//! the dual of `sup_{y ∈ Y} c_s(z, y) − Σ_m λ_m ‖y − y_{m,i_m}‖₁`, so its
//! slopes `α_{𝐢,m,s}` belong to the whole multi-index.
//! [`build_iwdro_lp`] and [`build_multi_ball_lp`] emit exactly this program.
//!
//! Restricting the slopes to `α_{m,i_m,s}`, one per atom
//! ([`Formulation::Shared`]), gives a smaller program whose value is an upper
//! bound on the worst case, strict in general once `M ≥ 2` and `S ≥ 2`.
//!
//! Equivalent smaller programs used by the default formulations:
//!
//! * exact, `d = 1` with `Y` an interval or the line: the transport duals
//!   become potentials on the sorted interval ends and centre atoms, so the
//!   program has `O(n)` rows instead of one per multi-index;
//! * shared, `Y = R^d`: the equality rows force `α_{m,·,s}` to be one vector
//!   per `(m, s)`, the last ball's `α` is eliminated, and the multi-index
//!   rows separate into per-ball rows (`O(Σ_m n_m)` instead of `O(Π_m n_m)`);
//! * shared, `Y` a box with `d = 2`: `γ` is minimised out in closed form,
//!   since `min{γᵀh : Aᵀγ = w, γ ≥ 0} = max_{v ∈ vertices} wᵀv`.
//!
//! Every LP orders its variables as `z` first, then one `λ_m` per ball.

use crate::error::{invalid, Error, Result};
use crate::estimators::{mixture_estimate, mixture_radius};
use crate::lpsolver::{solve_lp, LinearProgram, LpSolution, LpStatus, ObjectiveSweep, SolverOptions};
use crate::wasserstein::{intersection_nonempty, wasserstein_distance, DiscreteDistribution, WassersteinBall, BOUNDARY_TOL};

/// `{v : A v ≤ h}`, with flagged rows read as equalities.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyhedron {
    dim: usize,
    matrix: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    equality: Vec<bool>,
}

impl Polyhedron {
    pub fn new(dim: usize, matrix: Vec<Vec<f64>>, rhs: Vec<f64>, equality: Vec<bool>) -> Result<Self> {
        if matrix.len() != rhs.len() || matrix.len() != equality.len() {
            return invalid("polyhedron rows, right-hand sides and equality flags differ in count");
        }
        if matrix.iter().any(|r| r.len() != dim) {
            return invalid(format!("polyhedron rows must have {dim} columns"));
        }
        if matrix.iter().flatten().chain(&rhs).any(|v| !v.is_finite()) {
            return invalid("polyhedron coefficients must be finite");
        }
        Ok(Polyhedron { dim, matrix, rhs, equality })
    }

    /// All of `R^dim`.
    pub fn whole_space(dim: usize) -> Self {
        Polyhedron { dim, matrix: Vec::new(), rhs: Vec::new(), equality: Vec::new() }
    }

    /// `{v : lo ≤ v ≤ hi}`; infinite entries add no row.
    pub fn boxed(lo: &[f64], hi: &[f64]) -> Result<Self> {
        if lo.len() != hi.len() {
            return invalid("box bounds differ in length");
        }
        let d = lo.len();
        let mut p = Polyhedron::whole_space(d);
        for k in 0..d {
            if lo[k] > hi[k] {
                return invalid(format!("box coordinate {k} has lo > hi"));
            }
            let mut e = vec![0.0; d];
            if hi[k].is_finite() {
                e[k] = 1.0;
                p.push(e.clone(), hi[k], false);
            }
            if lo[k].is_finite() {
                e[k] = -1.0;
                p.push(e, -lo[k], false);
            }
        }
        Ok(p)
    }

    /// The single point `v`.
    pub fn point(v: &[f64]) -> Self {
        let d = v.len();
        let mut p = Polyhedron::whole_space(d);
        for (k, &val) in v.iter().enumerate() {
            let mut e = vec![0.0; d];
            e[k] = 1.0;
            p.push(e, val, true);
        }
        p
    }

    /// Probability simplex on the first `k` coordinates of `R^dim`; the rest are free.
    pub fn simplex_prefix(dim: usize, k: usize) -> Self {
        let mut p = Polyhedron::whole_space(dim);
        let mut sum = vec![0.0; dim];
        for j in 0..k {
            sum[j] = 1.0;
            let mut e = vec![0.0; dim];
            e[j] = -1.0;
            p.push(e, 0.0, false);
        }
        p.push(sum, 1.0, true);
        p
    }

    pub fn push(&mut self, row: Vec<f64>, rhs: f64, equality: bool) {
        debug_assert_eq!(row.len(), self.dim);
        self.matrix.push(row);
        self.rhs.push(rhs);
        self.equality.push(equality);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn equality(&self) -> &[bool] {
        &self.equality
    }

    pub fn contains(&self, v: &[f64], tol: f64) -> bool {
        self.matrix.iter().zip(&self.rhs).zip(&self.equality).all(|((row, &h), &eq)| {
            let lhs: f64 = row.iter().zip(v).map(|(a, b)| a * b).sum();
            if eq {
                (lhs - h).abs() <= tol
            } else {
                lhs <= h + tol
            }
        })
    }

    /// `(lo, hi)` when every row is a one-sided coordinate bound and every
    /// coordinate is bounded on both sides.
    pub fn as_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let (lo, hi) = self.coordinate_bounds()?;
        if lo.iter().chain(&hi).all(|v| v.is_finite()) && lo.iter().zip(&hi).all(|(a, b)| a <= b) {
            Some((lo, hi))
        } else {
            None
        }
    }

    /// Per-coordinate bounds, possibly infinite, when every row is a
    /// one-sided coordinate bound.
    fn coordinate_bounds(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let mut lo = vec![f64::NEG_INFINITY; self.dim];
        let mut hi = vec![f64::INFINITY; self.dim];
        for ((row, &h), &eq) in self.matrix.iter().zip(&self.rhs).zip(&self.equality) {
            let nz: Vec<usize> = (0..self.dim).filter(|&k| row[k] != 0.0).collect();
            if eq || nz.len() != 1 {
                return None;
            }
            let k = nz[0];
            let a = row[k];
            if a > 0.0 {
                hi[k] = hi[k].min(h / a);
            } else {
                lo[k] = lo[k].max(h / a);
            }
        }
        Some((lo, hi))
    }

    /// Data bounding box widened by `frac` of its range on each side.
    pub fn expanded_bounding_box(points: &[Vec<f64>], frac: f64) -> Result<Self> {
        if points.is_empty() {
            return invalid("bounding box of an empty point set");
        }
        let d = points[0].len();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for p in points {
            for k in 0..d {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        for k in 0..d {
            let pad = frac * (hi[k] - lo[k]);
            lo[k] -= pad;
            hi[k] += pad;
        }
        Polyhedron::boxed(&lo, &hi)
    }
}

/// One affine piece `a(z)ᵀy + b(z)` with `a(z) = G z + g`, `b(z) = qᵀz + q0`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinePiece {
    /// `d_y × d_z`.
    pub g_mat: Vec<Vec<f64>>,
    pub g_vec: Vec<f64>,
    pub q: Vec<f64>,
    pub q0: f64,
}

impl AffinePiece {
    pub fn slope(&self, z: &[f64]) -> Vec<f64> {
        self.g_mat
            .iter()
            .zip(&self.g_vec)
            .map(|(row, g)| g + row.iter().zip(z).map(|(a, b)| a * b).sum::<f64>())
            .collect()
    }

    pub fn offset(&self, z: &[f64]) -> f64 {
        self.q0 + self.q.iter().zip(z).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// `c(z, y) = max_s a_s(z)ᵀy + b_s(z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearCost {
    pieces: Vec<AffinePiece>,
    dy: usize,
    dz: usize,
}

impl PiecewiseLinearCost {
    pub fn new(pieces: Vec<AffinePiece>) -> Result<Self> {
        let Some(first) = pieces.first() else {
            return invalid("cost needs at least one piece");
        };
        let dy = first.g_vec.len();
        let dz = first.q.len();
        for p in &pieces {
            if p.g_vec.len() != dy || p.g_mat.len() != dy || p.q.len() != dz || p.g_mat.iter().any(|r| r.len() != dz) {
                return invalid("cost pieces disagree on outcome or decision dimension");
            }
        }
        if dy == 0 {
            return invalid("outcome dimension must be at least 1");
        }
        Ok(PiecewiseLinearCost { pieces, dy, dz })
    }

    /// `|z − y|` for scalar `z`, `y`.
    pub fn absolute_loss() -> Self {
        PiecewiseLinearCost::new(vec![
            AffinePiece { g_mat: vec![vec![0.0]], g_vec: vec![-1.0], q: vec![1.0], q0: 0.0 },
            AffinePiece { g_mat: vec![vec![0.0]], g_vec: vec![1.0], q: vec![-1.0], q0: 0.0 },
        ])
        .expect("static cost")
    }

    /// Mean-CVaR loss of portfolio weights `w ∈ R^{d}` with auxiliary level
    /// `r` (decision `z = (w, r)`):
    /// `max{−(1 + 1/φ) wᵀy + (1 − 1/φ) r, −wᵀy + r}`.
    pub fn mean_cvar(assets: usize, phi: f64) -> Self {
        let d = assets;
        let scaled = |c: f64| -> Vec<Vec<f64>> {
            (0..d)
                .map(|k| {
                    let mut row = vec![0.0; d + 1];
                    row[k] = c;
                    row
                })
                .collect()
        };
        let mut q1 = vec![0.0; d + 1];
        q1[d] = 1.0 - 1.0 / phi;
        let mut q2 = vec![0.0; d + 1];
        q2[d] = 1.0;
        PiecewiseLinearCost::new(vec![
            AffinePiece { g_mat: scaled(-(1.0 + 1.0 / phi)), g_vec: vec![0.0; d], q: q1, q0: 0.0 },
            AffinePiece { g_mat: scaled(-1.0), g_vec: vec![0.0; d], q: q2, q0: 0.0 },
        ])
        .expect("static cost")
    }

    pub fn pieces(&self) -> &[AffinePiece] {
        &self.pieces
    }

    pub fn dy(&self) -> usize {
        self.dy
    }

    pub fn dz(&self) -> usize {
        self.dz
    }

    pub fn eval(&self, z: &[f64], y: &[f64]) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.offset(z) + p.slope(z).iter().zip(y).map(|(a, b)| a * b).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn expected(&self, z: &[f64], mu: &DiscreteDistribution) -> f64 {
        mu.expectation(|y| self.eval(z, y))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DroSolution {
    pub decision: Vec<f64>,
    pub worst_case_value: f64,
    /// One multiplier per ball.
    pub multipliers: Vec<f64>,
}

/// Which LP the solvers build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Formulation {
    /// Exact worst case, as an equivalent reduced program when `d = 1` and
    /// `Y` is an interval or the whole line.
    #[default]
    Exact,
    /// Exact worst case, always the multi-index program of [`build_multi_ball_lp`].
    ExactFull,
    /// Slopes shared per atom (see the module docs), reduced when `Y` is the
    /// whole space or a box with `d = 2`. An upper bound on the worst case;
    /// equal to it for one ball.
    Shared,
    /// Slopes shared per atom, always the multi-index program.
    SharedFull,
}

fn check_setup(cost: &PiecewiseLinearCost, decision_set: &Polyhedron, uncertainty_set: &Polyhedron, balls: &[WassersteinBall]) -> Result<()> {
    if balls.is_empty() {
        return invalid("at least one ball is required");
    }
    if decision_set.dim() != cost.dz() {
        return invalid(format!("decision set has dimension {} but cost expects {}", decision_set.dim(), cost.dz()));
    }
    if uncertainty_set.dim() != cost.dy() {
        return invalid(format!("outcome set has dimension {} but cost expects {}", uncertainty_set.dim(), cost.dy()));
    }
    for b in balls {
        if b.order != 1 {
            return Err(Error::UnsupportedOrder(b.order));
        }
        if b.center.dim() != cost.dy() {
            return invalid("ball centre dimension differs from the cost's outcome dimension");
        }
        if !b.radius.is_finite() {
            return invalid("ball radii must be finite");
        }
    }
    Ok(())
}

/// Adds the decision-set rows; single-coordinate inequality rows become bounds.
fn add_decision_rows(lp: &mut LinearProgram, z: &Polyhedron) {
    for ((row, &h), &eq) in z.matrix.iter().zip(&z.rhs).zip(&z.equality) {
        let nz: Vec<usize> = (0..z.dim).filter(|&k| row[k] != 0.0).collect();
        if !eq && nz.len() == 1 {
            let (k, a) = (nz[0], row[nz[0]]);
            let (lo, hi) = (lp.lower_bounds[k], lp.upper_bounds[k]);
            let (nlo, nhi) = if a > 0.0 { (lo, hi.min(h / a)) } else { (lo.max(h / a), hi) };
            if nlo <= nhi {
                lp.set_bounds(k, nlo, nhi);
                continue;
            }
        }
        let entries: Vec<(usize, f64)> = nz.iter().map(|&k| (k, row[k])).collect();
        if eq {
            lp.add_eq(&entries, h);
        } else {
            lp.add_ub(&entries, h);
        }
    }
}

/// Fresh LP with `z` free and one `λ_m ≥ 0` per ball (objective `ε_m`).
fn lp_head(cost: &PiecewiseLinearCost, balls: &[&WassersteinBall], total_vars: usize) -> LinearProgram {
    let dz = cost.dz;
    let mut lp = LinearProgram::new(total_vars);
    for j in 0..dz {
        lp.set_free(j);
    }
    for (m, b) in balls.iter().enumerate() {
        lp.objective[dz + m] = b.radius;
    }
    lp
}

/// Odometer over `[n_1] × … × [n_M]`.
fn for_each_multi_index(sizes: &[usize], mut f: impl FnMut(usize, &[usize])) {
    let mut idx = vec![0; sizes.len()];
    let mut flat = 0;
    loop {
        f(flat, &idx);
        flat += 1;
        let mut m = sizes.len();
        loop {
            if m == 0 {
                return;
            }
            m -= 1;
            idx[m] += 1;
            if idx[m] < sizes[m] {
                break;
            }
            idx[m] = 0;
        }
    }
}

/// The two-ball program with variables, in order,
/// `z, λ₁, λ₂, u (n₁), v (n₂), α (n₁·n₂·S·d), β (n₁·n₂·S·d), γ (n₁·n₂·S·rows(Y))`,
/// where `α_{i,j,s}, β_{i,j,s}` are the slopes of the pair `(i, j)`.
///
/// Refuses to build when the balls do not intersect.
pub fn build_iwdro_lp(
    cost: &PiecewiseLinearCost,
    decision_set: &Polyhedron,
    uncertainty_set: &Polyhedron,
    ball1: &WassersteinBall,
    ball2: &WassersteinBall,
) -> Result<LinearProgram> {
    check_setup(cost, decision_set, uncertainty_set, &[ball1.clone(), ball2.clone()])?;
    require_intersection(ball1, ball2)?;
    let (dz, d, s_count) = (cost.dz, cost.dy, cost.pieces.len());
    let (n1, n2) = (ball1.center.len(), ball2.center.len());
    let my = uncertainty_set.num_rows();
    let lam1 = dz;
    let lam2 = dz + 1;
    let u0 = dz + 2;
    let v0 = u0 + n1;
    let a0 = v0 + n2;
    let b0 = a0 + n1 * n2 * s_count * d;
    let g0 = b0 + n1 * n2 * s_count * d;
    let total = g0 + n1 * n2 * s_count * my;
    let tuple = |i: usize, j: usize, s: usize| (i * n2 + j) * s_count + s;
    let alpha = |i: usize, j: usize, s: usize, k: usize| a0 + tuple(i, j, s) * d + k;
    let beta = |i: usize, j: usize, s: usize, k: usize| b0 + tuple(i, j, s) * d + k;
    let gamma = |i: usize, j: usize, s: usize, r: usize| g0 + tuple(i, j, s) * my + r;

    let mut lp = lp_head(cost, &[ball1, ball2], total);
    for i in 0..n1 {
        lp.objective[u0 + i] = ball1.center.weights()[i];
        lp.set_free(u0 + i);
    }
    for j in 0..n2 {
        lp.objective[v0 + j] = ball2.center.weights()[j];
        lp.set_free(v0 + j);
    }
    for col in a0..g0 {
        lp.set_free(col);
    }
    for i in 0..n1 {
        for j in 0..n2 {
            for s in 0..s_count {
                for r in 0..my {
                    if uncertainty_set.equality[r] {
                        lp.set_free(gamma(i, j, s, r));
                    }
                }
            }
        }
    }
    add_decision_rows(&mut lp, decision_set);

    let y1 = ball1.center.supports();
    let y2 = ball2.center.supports();
    let mut entries = Vec::new();
    for i in 0..n1 {
        for j in 0..n2 {
            for (s, piece) in cost.pieces.iter().enumerate() {
                // b_s(z) + γᵀh − αᵀy₁ − βᵀy₂ − u_i − v_j ≤ 0
                entries.clear();
                entries.extend(piece.q.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(l, &v)| (l, v)));
                for r in 0..my {
                    entries.push((gamma(i, j, s, r), uncertainty_set.rhs[r]));
                }
                for k in 0..d {
                    entries.push((alpha(i, j, s, k), -y1[i][k]));
                    entries.push((beta(i, j, s, k), -y2[j][k]));
                }
                entries.push((u0 + i, -1.0));
                entries.push((v0 + j, -1.0));
                lp.add_ub(&entries, -piece.q0);
                // α + β − Aᵀγ + G z = −g
                for k in 0..d {
                    entries.clear();
                    entries.push((alpha(i, j, s, k), 1.0));
                    entries.push((beta(i, j, s, k), 1.0));
                    for r in 0..my {
                        let a = uncertainty_set.matrix[r][k];
                        if a != 0.0 {
                            entries.push((gamma(i, j, s, r), -a));
                        }
                    }
                    for (l, &gv) in piece.g_mat[k].iter().enumerate() {
                        if gv != 0.0 {
                            entries.push((l, gv));
                        }
                    }
                    lp.add_eq(&entries, -piece.g_vec[k]);
                }
                for k in 0..d {
                    for (col, lam) in [(alpha(i, j, s, k), lam1), (beta(i, j, s, k), lam2)] {
                        lp.add_ub(&[(col, 1.0), (lam, -1.0)], 0.0);
                        lp.add_ub(&[(col, -1.0), (lam, -1.0)], 0.0);
                    }
                }
            }
        }
    }
    Ok(lp)
}

fn require_intersection(ball1: &WassersteinBall, ball2: &WassersteinBall) -> Result<()> {
    if !intersection_nonempty(ball1, ball2)? {
        let distance = wasserstein_distance(&ball1.center, &ball2.center, ball1.order)?;
        return Err(Error::EmptyIntersection { distance, radius_sum: ball1.radius + ball2.radius });
    }
    Ok(())
}

/// The exact M-ball program over all multi-indices, with variables, in order,
/// `z, λ (M), u_{m,i}, α_{𝐢,m,s}, γ_{𝐢,s}`.
pub fn build_multi_ball_lp(
    cost: &PiecewiseLinearCost,
    decision_set: &Polyhedron,
    uncertainty_set: &Polyhedron,
    balls: &[WassersteinBall],
) -> Result<LinearProgram> {
    build_lp(cost, decision_set, uncertainty_set, balls, Formulation::ExactFull)
}

/// The LP of `formulation`, without the pairwise intersection check.
pub fn build_lp(
    cost: &PiecewiseLinearCost,
    decision_set: &Polyhedron,
    uncertainty_set: &Polyhedron,
    balls: &[WassersteinBall],
    formulation: Formulation,
) -> Result<LinearProgram> {
    check_setup(cost, decision_set, uncertainty_set, balls)?;
    let reduced = match formulation {
        Formulation::ExactFull => return Ok(build_multi_index_lp(cost, decision_set, uncertainty_set, balls, true)),
        Formulation::SharedFull => return Ok(build_multi_index_lp(cost, decision_set, uncertainty_set, balls, false)),
        Formulation::Exact | Formulation::Shared => formulation,
    };
    // Zero-weight atoms carry no constraint.
    let pruned: Vec<WassersteinBall> = balls
        .iter()
        .map(|b| WassersteinBall { center: b.center.pruned(), radius: b.radius, order: b.order })
        .collect();
    let bounds = uncertainty_set.coordinate_bounds();
    if reduced == Formulation::Exact {
        if let Some((lo, hi)) = bounds.filter(|_| cost.dy == 1) {
            if lo[0] <= hi[0] {
                return Ok(build_line_potential_lp(cost, decision_set, lo[0], hi[0], &pruned));
            }
        }
        return Ok(build_multi_index_lp(cost, decision_set, uncertainty_set, &pruned, true));
    }
    if uncertainty_set.num_rows() == 0 {
        return Ok(build_whole_space_lp(cost, decision_set, &pruned));
    }
    if let Some((lo, hi)) = uncertainty_set.as_box().filter(|_| cost.dy == 2) {
        return Ok(build_box_vertex_lp(cost, decision_set, &lo, &hi, &pruned));
    }
    Ok(build_multi_index_lp(cost, decision_set, uncertainty_set, &pruned, false))
}

/// Multi-index program; `per_tuple` selects slopes `α_{𝐢,m,s}` (exact) over
/// `α_{m,i_m,s}` (shared).
fn build_multi_index_lp(
    cost: &PiecewiseLinearCost,
    decision_set: &Polyhedron,
    uncertainty_set: &Polyhedron,
    balls: &[WassersteinBall],
    per_tuple: bool,
) -> LinearProgram {
    let (dz, d, s_count) = (cost.dz, cost.dy, cost.pieces.len());
    let mb = balls.len();
    let my = uncertainty_set.num_rows();
    let sizes: Vec<usize> = balls.iter().map(|b| b.center.len()).collect();
    let combos: usize = sizes.iter().product();
    let mut u_off = Vec::with_capacity(mb);
    let mut next = dz + mb;
    for &n in &sizes {
        u_off.push(next);
        next += n;
    }
    let a0 = next;
    let mut a_off = Vec::with_capacity(mb);
    if per_tuple {
        next += combos * mb * s_count * d;
    } else {
        for &n in &sizes {
            a_off.push(next);
            next += n * s_count * d;
        }
    }
    let g0 = next;
    let total = g0 + combos * s_count * my;
    let alpha = |flat: usize, m: usize, i: usize, s: usize, k: usize| {
        if per_tuple {
            a0 + ((flat * mb + m) * s_count + s) * d + k
        } else {
            a_off[m] + (i * s_count + s) * d + k
        }
    };
    let refs: Vec<&WassersteinBall> = balls.iter().collect();
    let mut lp = lp_head(cost, &refs, total);
    for (m, b) in balls.iter().enumerate() {
        for i in 0..sizes[m] {
            lp.objective[u_off[m] + i] = b.center.weights()[i];
            lp.set_free(u_off[m] + i);
        }
    }
    for col in a0..g0 {
        lp.set_free(col);
    }
    for c in 0..combos {
        for s in 0..s_count {
            for r in 0..my {
                if uncertainty_set.equality[r] {
                    lp.set_free(g0 + (c * s_count + s) * my + r);
                }
            }
        }
    }
    add_decision_rows(&mut lp, decision_set);
    let mut entries = Vec::new();
    for_each_multi_index(&sizes, |flat, idx| {
        for (s, piece) in cost.pieces.iter().enumerate() {
            let gamma = |r: usize| g0 + (flat * s_count + s) * my + r;
            entries.clear();
            entries.extend(piece.q.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(l, &v)| (l, v)));
            for r in 0..my {
                entries.push((gamma(r), uncertainty_set.rhs[r]));
            }
            for (m, &i) in idx.iter().enumerate() {
                let y = &balls[m].center.supports()[i];
                for k in 0..d {
                    entries.push((alpha(flat, m, i, s, k), -y[k]));
                }
                entries.push((u_off[m] + i, -1.0));
            }
            lp.add_ub(&entries, -piece.q0);
            for k in 0..d {
                entries.clear();
                for (m, &i) in idx.iter().enumerate() {
                    entries.push((alpha(flat, m, i, s, k), 1.0));
                }
                for r in 0..my {
                    let a = uncertainty_set.matrix[r][k];
                    if a != 0.0 {
                        entries.push((gamma(r), -a));
                    }
                }
                for (l, &gv) in piece.g_mat[k].iter().enumerate() {
                    if gv != 0.0 {
                        entries.push((l, gv));
                    }
                }
                lp.add_eq(&entries, -piece.g_vec[k]);
            }
        }
    });
    let mut norm_rows = |col: usize, m: usize| {
        lp.add_ub(&[(col, 1.0), (dz + m, -1.0)], 0.0);
        lp.add_ub(&[(col, -1.0), (dz + m, -1.0)], 0.0);
    };
    if per_tuple {
        for flat in 0..combos {
            for m in 0..mb {
                for s in 0..s_count {
                    for k in 0..d {
                        norm_rows(alpha(flat, m, 0, s, k), m);
                    }
                }
            }
        }
    } else {
        for m in 0..mb {
            for i in 0..sizes[m] {
                for s in 0..s_count {
                    for k in 0..d {
                        norm_rows(alpha(0, m, i, s, k), m);
                    }
                }
            }
        }
    }
    lp
}

/// `Y = R^d`: variables `z, λ (M), u_{m,i}, α_{m,s}` for `m < M`, `t_{m,s}`.
///
/// With `α_{M,s} = −a_s(z) − Σ_{m<M} α_{m,s}` each constraint reads
/// `Σ_m (u_{m,i_m} + α_{m,s}ᵀ y_{m,i_m}) ≥ b_s(z)`; it holds for every
/// multi-index iff the per-ball minima over `i` sum to at least `b_s(z)`,
/// which `t_{m,s}` encodes with `Σ_m n_m` rows per piece.
fn build_whole_space_lp(cost: &PiecewiseLinearCost, decision_set: &Polyhedron, balls: &[WassersteinBall]) -> LinearProgram {
    let (dz, d, s_count) = (cost.dz, cost.dy, cost.pieces.len());
    let mb = balls.len();
    let sizes: Vec<usize> = balls.iter().map(|b| b.center.len()).collect();
    let mut u_off = Vec::with_capacity(mb);
    let mut next = dz + mb;
    for &n in &sizes {
        u_off.push(next);
        next += n;
    }
    let a0 = next;
    let t0 = a0 + (mb - 1) * s_count * d;
    let total = t0 + mb * s_count;
    let alpha = |m: usize, s: usize, k: usize| a0 + (m * s_count + s) * d + k;
    let t_var = |m: usize, s: usize| t0 + m * s_count + s;
    let refs: Vec<&WassersteinBall> = balls.iter().collect();
    let mut lp = lp_head(cost, &refs, total);
    for (m, b) in balls.iter().enumerate() {
        for i in 0..sizes[m] {
            lp.objective[u_off[m] + i] = b.center.weights()[i];
        }
    }
    for col in dz + mb..total {
        lp.set_free(col);
    }
    add_decision_rows(&mut lp, decision_set);
    let last = mb - 1;
    let mut entries: Vec<(usize, f64)> = Vec::new();
    for (s, piece) in cost.pieces.iter().enumerate() {
        for m in 0..last {
            for (i, y) in balls[m].center.supports().iter().enumerate() {
                // t − u − αᵀy ≤ 0
                entries.clear();
                entries.push((t_var(m, s), 1.0));
                entries.push((u_off[m] + i, -1.0));
                for k in 0..d {
                    if y[k] != 0.0 {
                        entries.push((alpha(m, s, k), -y[k]));
                    }
                }
                lp.add_ub(&entries, 0.0);
            }
        }
        for (j, y) in balls[last].center.supports().iter().enumerate() {
            // t − u + (Gᵀy)ᵀz + Σ_{m<M} α_mᵀy ≤ −gᵀy
            entries.clear();
            entries.push((t_var(last, s), 1.0));
            entries.push((u_off[last] + j, -1.0));
            for l in 0..dz {
                let coef: f64 = (0..d).map(|k| piece.g_mat[k][l] * y[k]).sum();
                if coef != 0.0 {
                    entries.push((l, coef));
                }
            }
            for m in 0..last {
                for k in 0..d {
                    if y[k] != 0.0 {
                        entries.push((alpha(m, s, k), y[k]));
                    }
                }
            }
            let rhs = -piece.g_vec.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
            lp.add_ub(&entries, rhs);
        }
        // qᵀz − Σ_m t_m ≤ −q0
        entries.clear();
        for (l, &qv) in piece.q.iter().enumerate() {
            if qv != 0.0 {
                entries.push((l, qv));
            }
        }
        entries.extend((0..mb).map(|m| (t_var(m, s), -1.0)));
        lp.add_ub(&entries, -piece.q0);
    }
    for (s, piece) in cost.pieces.iter().enumerate() {
        for k in 0..d {
            for m in 0..last {
                lp.add_ub(&[(alpha(m, s, k), 1.0), (dz + m, -1.0)], 0.0);
                lp.add_ub(&[(alpha(m, s, k), -1.0), (dz + m, -1.0)], 0.0);
            }
            // α_M = −(G z + g) − Σ_{m<M} α_m, bounded by λ_M in sup-norm.
            let mut plus: Vec<(usize, f64)> = Vec::new();
            for (l, &gv) in piece.g_mat[k].iter().enumerate() {
                if gv != 0.0 {
                    plus.push((l, gv));
                }
            }
            for m in 0..last {
                plus.push((alpha(m, s, k), 1.0));
            }
            let minus: Vec<(usize, f64)> = plus.iter().map(|&(c, v)| (c, -v)).chain([(dz + last, -1.0)]).collect();
            plus.push((dz + last, -1.0));
            lp.add_ub(&plus, -piece.g_vec[k]);
            lp.add_ub(&minus, piece.g_vec[k]);
        }
    }
    lp
}

/// Box `Y` in dimension ≤ 2: one row per multi-index, piece and box vertex,
/// variables `z, λ (M), u_{m,i}, α_{m,i,s}`.
fn build_box_vertex_lp(cost: &PiecewiseLinearCost, decision_set: &Polyhedron, lo: &[f64], hi: &[f64], balls: &[WassersteinBall]) -> LinearProgram {
    let (dz, d, s_count) = (cost.dz, cost.dy, cost.pieces.len());
    let mb = balls.len();
    let sizes: Vec<usize> = balls.iter().map(|b| b.center.len()).collect();
    let mut u_off = Vec::with_capacity(mb);
    let mut next = dz + mb;
    for &n in &sizes {
        u_off.push(next);
        next += n;
    }
    let mut a_off = Vec::with_capacity(mb);
    for &n in &sizes {
        a_off.push(next);
        next += n * s_count * d;
    }
    let total = next;
    let alpha = |m: usize, i: usize, s: usize, k: usize| a_off[m] + (i * s_count + s) * d + k;
    let refs: Vec<&WassersteinBall> = balls.iter().collect();
    let mut lp = lp_head(cost, &refs, total);
    for (m, b) in balls.iter().enumerate() {
        for i in 0..sizes[m] {
            lp.objective[u_off[m] + i] = b.center.weights()[i];
            lp.set_free(u_off[m] + i);
        }
    }
    for col in a_off[0]..total {
        lp.set_free(col);
    }
    add_decision_rows(&mut lp, decision_set);
    let vertices: Vec<Vec<f64>> = (0..1usize << d)
        .map(|mask| (0..d).map(|k| if mask >> k & 1 == 1 { hi[k] } else { lo[k] }).collect())
        .collect();
    let mut entries: Vec<(usize, f64)> = Vec::new();
    for_each_multi_index(&sizes, |_, idx| {
        for (s, piece) in cost.pieces.iter().enumerate() {
            for v in &vertices {
                // (q + Gᵀv)ᵀz + Σ_m (v − y_m)ᵀα_m − Σ u ≤ −q0 − gᵀv
                entries.clear();
                for l in 0..dz {
                    let coef = piece.q[l] + (0..d).map(|k| piece.g_mat[k][l] * v[k]).sum::<f64>();
                    if coef != 0.0 {
                        entries.push((l, coef));
                    }
                }
                for (m, &i) in idx.iter().enumerate() {
                    let y = &balls[m].center.supports()[i];
                    for k in 0..d {
                        let coef = v[k] - y[k];
                        if coef != 0.0 {
                            entries.push((alpha(m, i, s, k), coef));
                        }
                    }
                    entries.push((u_off[m] + i, -1.0));
                }
                let rhs = -piece.q0 - piece.g_vec.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
                lp.add_ub(&entries, rhs);
            }
        }
    });
    for m in 0..mb {
        for i in 0..sizes[m] {
            for s in 0..s_count {
                for k in 0..d {
                    lp.add_ub(&[(alpha(m, i, s, k), 1.0), (dz + m, -1.0)], 0.0);
                    lp.add_ub(&[(alpha(m, i, s, k), -1.0), (dz + m, -1.0)], 0.0);
                }
            }
        }
    }
    lp
}

/// `Y = [lo, hi]` on the line, ends possibly infinite. On the sorted point
/// set `g` (finite ends and every centre atom) the program is
///
/// ```text
/// min  Σ_m λ_m ε_m + θ + Σ_m Σ_i w_{m,i} φ_m(y_{m,i})
/// s.t. θ + Σ_m φ_m(g_k) ≥ a_s(z) g_k + b_s(z)      for g_k ∈ [lo, hi], all s
///      |φ_m(g_{k+1}) − φ_m(g_k)| ≤ λ_m (g_{k+1} − g_k)
///      ∓a_s(z) ≤ Σ_m λ_m                            for each infinite end
/// ```
///
/// with variables `z, λ (M), θ, φ_{m,k}`: worst-case distributions can be
/// taken on `g ∩ [lo, hi]`, and on a line a function is `λ`-Lipschitz iff it
/// is so between neighbouring points.
fn build_line_potential_lp(cost: &PiecewiseLinearCost, decision_set: &Polyhedron, lo: f64, hi: f64, balls: &[WassersteinBall]) -> LinearProgram {
    let dz = cost.dz;
    let mb = balls.len();
    let mut points: Vec<f64> = [lo, hi].into_iter().filter(|v| v.is_finite()).collect();
    for b in balls {
        points.extend(b.center.supports().iter().map(|y| y[0]));
    }
    points.sort_by(f64::total_cmp);
    points.dedup();
    let kk = points.len();
    let theta = dz + mb;
    let phi = |m: usize, k: usize| theta + 1 + m * kk + k;
    let refs: Vec<&WassersteinBall> = balls.iter().collect();
    let mut lp = lp_head(cost, &refs, theta + 1 + mb * kk);
    lp.objective[theta] = 1.0;
    for j in theta..theta + 1 + mb * kk {
        lp.set_free(j);
    }
    for (m, b) in balls.iter().enumerate() {
        for (y, w) in b.center.supports().iter().zip(b.center.weights()) {
            let k = points.partition_point(|&g| g < y[0]);
            lp.objective[phi(m, k)] += w;
        }
    }
    add_decision_rows(&mut lp, decision_set);
    let mut entries: Vec<(usize, f64)> = Vec::new();
    for (k, &g) in points.iter().enumerate() {
        if g < lo || g > hi {
            continue;
        }
        for piece in &cost.pieces {
            // (q + G g)ᵀz − θ − Σ_m φ_m(g) ≤ −q0 − g_vec g
            entries.clear();
            for l in 0..dz {
                let coef = piece.q[l] + piece.g_mat[0][l] * g;
                if coef != 0.0 {
                    entries.push((l, coef));
                }
            }
            entries.push((theta, -1.0));
            entries.extend((0..mb).map(|m| (phi(m, k), -1.0)));
            lp.add_ub(&entries, -piece.q0 - piece.g_vec[0] * g);
        }
    }
    for (sign, open) in [(-1.0, lo.is_infinite()), (1.0, hi.is_infinite())] {
        if !open {
            continue;
        }
        for piece in &cost.pieces {
            entries.clear();
            entries.extend(piece.g_mat[0].iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(l, &v)| (l, sign * v)));
            entries.extend((0..mb).map(|m| (dz + m, -1.0)));
            lp.add_ub(&entries, -sign * piece.g_vec[0]);
        }
    }
    for m in 0..mb {
        for k in 0..kk - 1 {
            let gap = points[k + 1] - points[k];
            lp.add_ub(&[(phi(m, k + 1), 1.0), (phi(m, k), -1.0), (dz + m, -gap)], 0.0);
            lp.add_ub(&[(phi(m, k), 1.0), (phi(m, k + 1), -1.0), (dz + m, -gap)], 0.0);
        }
    }
    lp
}

fn extract(lp_solution: &LpSolution, dz: usize, balls: usize) -> DroSolution {
    DroSolution {
        decision: lp_solution.primal[..dz].to_vec(),
        worst_case_value: lp_solution.objective_value,
        multipliers: lp_solution.primal[dz..dz + balls].iter().map(|v| v.max(0.0)).collect(),
    }
}

fn solve_built(lp: &LinearProgram, dz: usize, balls: usize) -> Result<DroSolution> {
    interpret(solve_lp(lp)?, dz, balls)
}

fn interpret(sol: LpSolution, dz: usize, balls: usize) -> Result<DroSolution> {
    match sol.status {
        LpStatus::Optimal => Ok(extract(&sol, dz, balls)),
        LpStatus::Infeasible => Err(Error::Solver(
            "infeasible (empty decision set or inconsistent outcome set)".to_string(),
        )),
        LpStatus::Unbounded => Err(Error::EmptyAmbiguitySet(
            "worst-case program is unbounded below: the balls share no distribution on the outcome set, or the cost is unbounded over the decision set".to_string(),
        )),
    }
}

/// `min_z sup_{W₁(μ, centre) ≤ ε} E_μ[c(z, Y)]`.
pub fn solve_single_ball(cost: &PiecewiseLinearCost, decision_set: &Polyhedron, uncertainty_set: &Polyhedron, ball: &WassersteinBall) -> Result<DroSolution> {
    solve_multi_ball_with(cost, decision_set, uncertainty_set, std::slice::from_ref(ball), Formulation::Exact)
}

/// Two-ball problem; checks that the balls intersect before building.
pub fn solve_iwdro(
    cost: &PiecewiseLinearCost,
    decision_set: &Polyhedron,
    uncertainty_set: &Polyhedron,
    ball1: &WassersteinBall,
    ball2: &WassersteinBall,
) -> Result<DroSolution> {
    solve_multi_ball_with(cost, decision_set, uncertainty_set, &[ball1.clone(), ball2.clone()], Formulation::Exact)
}

/// Solves the LP of [`build_iwdro_lp`] directly.
pub fn solve_iwdro_full(
    cost: &PiecewiseLinearCost,
    decision_set: &Polyhedron,
    uncertainty_set: &Polyhedron,
    ball1: &WassersteinBall,
    ball2: &WassersteinBall,
) -> Result<DroSolution> {
    let lp = build_iwdro_lp(cost, decision_set, uncertainty_set, ball1, ball2)?;
    solve_built(&lp, cost.dz, 2)
}

/// M-ball problem. Pairwise intersection is checked up front; for `M ≥ 3`
/// it is necessary but not sufficient, and a joint empty intersection shows
/// up as an unbounded LP ([`Error::EmptyAmbiguitySet`]).
pub fn solve_multi_ball(cost: &PiecewiseLinearCost, decision_set: &Polyhedron, uncertainty_set: &Polyhedron, balls: &[WassersteinBall]) -> Result<DroSolution> {
    solve_multi_ball_with(cost, decision_set, uncertainty_set, balls, Formulation::Exact)
}

pub fn solve_multi_ball_with(
    cost: &PiecewiseLinearCost,
    decision_set: &Polyhedron,
    uncertainty_set: &Polyhedron,
    balls: &[WassersteinBall],
    formulation: Formulation,
) -> Result<DroSolution> {
    check_setup(cost, decision_set, uncertainty_set, balls)?;
    for a in 0..balls.len() {
        for b in a + 1..balls.len() {
            require_intersection(&balls[a], &balls[b])?;
        }
    }
    let lp = build_lp(cost, decision_set, uncertainty_set, balls, formulation)?;
    solve_built(&lp, cost.dz, balls.len())
}

/// Repeated solves of one formulation over fixed centres with varying
/// radii, each starting from the previous optimal basis. Pairwise centre
/// distances are computed once, at construction.
pub struct RadiusSweep {
    sweep: ObjectiveSweep,
    objective: Vec<f64>,
    dz: usize,
    balls: usize,
    distances: Vec<Vec<f64>>,
}

impl RadiusSweep {
    pub fn new(
        cost: &PiecewiseLinearCost,
        decision_set: &Polyhedron,
        uncertainty_set: &Polyhedron,
        centers: &[DiscreteDistribution],
        formulation: Formulation,
    ) -> Result<Self> {
        let balls: Vec<WassersteinBall> =
            centers.iter().map(|c| WassersteinBall::new(c.clone(), 0.0, 1)).collect::<Result<_>>()?;
        let lp = build_lp(cost, decision_set, uncertainty_set, &balls, formulation)?;
        let mut distances = vec![vec![0.0; centers.len()]; centers.len()];
        for a in 0..centers.len() {
            for b in a + 1..centers.len() {
                let w = wasserstein_distance(&centers[a], &centers[b], 1)?;
                distances[a][b] = w;
                distances[b][a] = w;
            }
        }
        Ok(RadiusSweep {
            sweep: ObjectiveSweep::new(&lp, &SolverOptions::default())?,
            objective: lp.objective.clone(),
            dz: cost.dz,
            balls: centers.len(),
            distances,
        })
    }

    /// `W₁` between centres `a` and `b`.
    pub fn center_distance(&self, a: usize, b: usize) -> f64 {
        self.distances[a][b]
    }

    /// Solves with the given radii, one per centre.
    pub fn solve(&mut self, radii: &[f64]) -> Result<DroSolution> {
        if radii.len() != self.balls || radii.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return invalid(format!("need {} finite nonnegative radii", self.balls));
        }
        for a in 0..self.balls {
            for b in a + 1..self.balls {
                let distance = self.distances[a][b];
                if distance > radii[a] + radii[b] + BOUNDARY_TOL {
                    return Err(Error::EmptyIntersection { distance, radius_sum: radii[a] + radii[b] });
                }
            }
        }
        self.objective[self.dz..self.dz + self.balls].copy_from_slice(radii);
        interpret(self.sweep.solve(&self.objective)?, self.dz, self.balls)
    }
}

/// Single ball centred at `κ·np_dist + (1 − κ)·p_dist` with radius
/// `κ ε_np + (1 − κ) ε_p`.
#[allow(clippy::too_many_arguments)]
pub fn solve_iwdro_apx(
    cost: &PiecewiseLinearCost,
    decision_set: &Polyhedron,
    uncertainty_set: &Polyhedron,
    np_dist: &DiscreteDistribution,
    p_dist: &DiscreteDistribution,
    kappa: f64,
    eps_np: f64,
    eps_p: f64,
) -> Result<DroSolution> {
    let center = mixture_estimate(np_dist, p_dist, kappa)?;
    let ball = WassersteinBall::new(center, mixture_radius(eps_np, eps_p, kappa, 1), 1)?;
    solve_single_ball(cost, decision_set, uncertainty_set, &ball)
}

/// Dual worst-case value `J_D(z)` at a fixed decision.
pub fn worst_case_value(z: &[f64], cost: &PiecewiseLinearCost, uncertainty_set: &Polyhedron, balls: &[WassersteinBall], formulation: Formulation) -> Result<f64> {
    if z.len() != cost.dz {
        return invalid("decision has the wrong dimension");
    }
    let mut lp = build_lp(cost, &Polyhedron::whole_space(cost.dz), uncertainty_set, balls, formulation)?;
    for (j, &v) in z.iter().enumerate() {
        lp.set_bounds(j, v, v);
    }
    Ok(solve_built(&lp, cost.dz, balls.len())?.worst_case_value)
}

/// Largest `Σ_k p_k c(z, g_k)` over probability vectors `p` on `grid` with
/// `W₁(p, centre_m) ≤ ε_m` for every ball, each constraint carrying its own
/// coupling. Returns `−∞` when no grid distribution meets every constraint.
pub fn worst_case_grid_oracle(z: &[f64], cost: &PiecewiseLinearCost, grid: &[Vec<f64>], balls: &[WassersteinBall]) -> Result<f64> {
    if grid.is_empty() {
        return invalid("grid is empty");
    }
    if balls.is_empty() {
        return invalid("at least one ball is required");
    }
    if z.len() != cost.dz || grid.iter().any(|g| g.len() != cost.dy) {
        return invalid("decision or grid dimension differs from the cost");
    }
    for b in balls {
        if b.order != 1 {
            return Err(Error::UnsupportedOrder(b.order));
        }
    }
    let centers: Vec<DiscreteDistribution> = balls.iter().map(|b| b.center.pruned()).collect();
    let kk = grid.len();
    let mut offs = Vec::with_capacity(balls.len());
    let mut next = 0;
    for c in &centers {
        offs.push(next);
        next += kk * c.len();
    }
    let mut lp = LinearProgram::new(next);
    let values: Vec<f64> = grid.iter().map(|g| cost.eval(z, g)).collect();
    let n0 = centers[0].len();
    for k in 0..kk {
        for i in 0..n0 {
            lp.objective[offs[0] + k * n0 + i] = -values[k];
        }
    }
    for (m, c) in centers.iter().enumerate() {
        let n = c.len();
        for i in 0..n {
            let row: Vec<(usize, f64)> = (0..kk).map(|k| (offs[m] + k * n + i, 1.0)).collect();
            lp.add_eq(&row, c.weights()[i]);
        }
        let mut budget = Vec::with_capacity(kk * n);
        for k in 0..kk {
            for i in 0..n {
                let dist: f64 = grid[k].iter().zip(&c.supports()[i]).map(|(a, b)| (a - b).abs()).sum();
                if dist != 0.0 {
                    budget.push((offs[m] + k * n + i, dist));
                }
            }
        }
        if balls[m].radius.is_finite() {
            lp.add_ub(&budget, balls[m].radius);
        }
        if m > 0 {
            for k in 0..kk {
                let mut row: Vec<(usize, f64)> = (0..n).map(|i| (offs[m] + k * n + i, 1.0)).collect();
                row.extend((0..n0).map(|i| (offs[0] + k * n0 + i, -1.0)));
                lp.add_eq(&row, 0.0);
            }
        }
    }
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => Ok(-sol.objective_value),
        LpStatus::Infeasible => Ok(f64::NEG_INFINITY),
        LpStatus::Unbounded => Err(Error::Solver("grid oracle unbounded".to_string())),
    }
}

/// Product grid over a box: on each coordinate, every centre support
/// coordinate, both box ends and `refinement` evenly spaced points.
///
/// For box outcome sets the inner maximisation of every dual constraint is
/// separable across coordinates and concave piecewise linear with kinks only
/// at centre coordinates, so a maximiser always sits on this grid.
pub fn oracle_grid(balls: &[WassersteinBall], lo: &[f64], hi: &[f64], refinement: usize) -> Vec<Vec<f64>> {
    let d = lo.len();
    let axes: Vec<Vec<f64>> = (0..d)
        .map(|k| {
            let mut axis = vec![lo[k], hi[k]];
            for b in balls {
                for s in b.center.supports() {
                    axis.push(s[k].clamp(lo[k], hi[k]));
                }
            }
            if refinement >= 2 {
                for t in 0..refinement {
                    axis.push(lo[k] + (hi[k] - lo[k]) * t as f64 / (refinement - 1) as f64);
                }
            }
            axis.sort_by(f64::total_cmp);
            axis.dedup();
            axis
        })
        .collect();
    let sizes: Vec<usize> = axes.iter().map(Vec::len).collect();
    let mut grid = Vec::with_capacity(sizes.iter().product());
    for_each_multi_index(&sizes, |_, idx| {
        grid.push(idx.iter().enumerate().map(|(k, &i)| axes[k][i]).collect());
    });
    grid
}
