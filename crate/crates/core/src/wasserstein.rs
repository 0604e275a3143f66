//! Discrete distributions and the p-Wasserstein distance with ℓ1 ground metric.
//!
//! `W_p(μ, ν) = (min_π Σ π_ij ‖y_i − y'_j‖₁^p)^{1/p}` over couplings `π` with
//! marginals `μ`, `ν`. In one dimension the monotone (quantile) coupling is
//! optimal for every `p ≥ 1`, so [`wasserstein_distance`] uses the sorted
//! closed form there and the transportation LP otherwise.
//! [`transport_cost_lp`] always solves the LP.

use crate::error::{invalid, Error, Result};
use crate::lpsolver::{solve_lp, LinearProgram, LpStatus};

const WEIGHT_SUM_TOL: f64 = 1e-9;
/// Slack granted to the two-ball nonemptiness test.
pub const BOUNDARY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    supports: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(supports: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if supports.is_empty() {
            return invalid("distribution needs at least one support point");
        }
        if supports.len() != weights.len() {
            return invalid(format!("{} support points but {} weights", supports.len(), weights.len()));
        }
        let d = supports[0].len();
        if d == 0 {
            return invalid("support points must have dimension at least 1");
        }
        if supports.iter().any(|s| s.len() != d || s.iter().any(|v| !v.is_finite())) {
            return invalid("support points must be finite and share one dimension");
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return invalid("weights must be finite and nonnegative");
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return invalid(format!("weights sum to {total}, not 1"));
        }
        Ok(DiscreteDistribution { supports, weights })
    }

    pub fn uniform(supports: Vec<Vec<f64>>) -> Result<Self> {
        let n = supports.len();
        DiscreteDistribution::new(supports, vec![1.0 / n.max(1) as f64; n])
    }

    pub fn dirac(point: Vec<f64>) -> Result<Self> {
        DiscreteDistribution::new(vec![point], vec![1.0])
    }

    /// Scalar-valued supports.
    pub fn from_scalars(values: &[f64], weights: Vec<f64>) -> Result<Self> {
        DiscreteDistribution::new(values.iter().map(|&v| vec![v]).collect(), weights)
    }

    pub fn supports(&self) -> &[Vec<f64>] {
        &self.supports
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.supports[0].len()
    }

    pub fn expectation(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.supports.iter().zip(&self.weights).map(|(y, w)| w * f(y)).sum()
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim()];
        for (y, w) in self.supports.iter().zip(&self.weights) {
            for (a, b) in m.iter_mut().zip(y) {
                *a += w * b;
            }
        }
        m
    }

    /// Copy without zero-weight atoms.
    pub fn pruned(&self) -> DiscreteDistribution {
        let keep: Vec<usize> = (0..self.len()).filter(|&i| self.weights[i] > 0.0).collect();
        DiscreteDistribution {
            supports: keep.iter().map(|&i| self.supports[i].clone()).collect(),
            weights: keep.iter().map(|&i| self.weights[i]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WassersteinBall {
    pub center: DiscreteDistribution,
    pub radius: f64,
    pub order: u32,
}

impl WassersteinBall {
    /// `radius` may be `+∞` (the whole space) but not negative or NaN.
    pub fn new(center: DiscreteDistribution, radius: f64, order: u32) -> Result<Self> {
        if radius.is_nan() || radius < 0.0 {
            return invalid(format!("radius must be nonnegative, got {radius}"));
        }
        if order < 1 {
            return invalid("order must be at least 1");
        }
        Ok(WassersteinBall { center, radius, order })
    }

    /// Whether `mu` lies in the ball.
    pub fn contains(&self, mu: &DiscreteDistribution) -> Result<bool> {
        if self.radius.is_infinite() {
            return Ok(true);
        }
        Ok(wasserstein_distance(mu, &self.center, self.order)? <= self.radius + BOUNDARY_TOL)
    }
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

fn check_pair(mu: &DiscreteDistribution, nu: &DiscreteDistribution, p: u32) -> Result<()> {
    if mu.dim() != nu.dim() {
        return invalid(format!("dimension mismatch: {} vs {}", mu.dim(), nu.dim()));
    }
    if p < 1 {
        return invalid("order must be at least 1");
    }
    Ok(())
}

/// `W_p(mu, nu)` under the ℓ1 ground metric.
pub fn wasserstein_distance(mu: &DiscreteDistribution, nu: &DiscreteDistribution, p: u32) -> Result<f64> {
    check_pair(mu, nu, p)?;
    let cost = if mu.dim() == 1 {
        quantile_transport_cost(mu, nu, p)
    } else {
        transport_cost_lp(mu, nu, p)?
    };
    Ok(cost.max(0.0).powf(1.0 / p as f64))
}

/// Optimal value of the transportation LP with cost `‖y_i − y'_j‖₁^p`
/// (that is, `W_p^p`).
pub fn transport_cost_lp(mu: &DiscreteDistribution, nu: &DiscreteDistribution, p: u32) -> Result<f64> {
    check_pair(mu, nu, p)?;
    let a = mu.pruned();
    let b = nu.pruned();
    let (n1, n2) = (a.len(), b.len());
    let mut lp = LinearProgram::new(n1 * n2);
    for i in 0..n1 {
        for j in 0..n2 {
            lp.objective[i * n2 + j] = l1(&a.supports[i], &b.supports[j]).powi(p as i32);
        }
    }
    for i in 0..n1 {
        let row: Vec<(usize, f64)> = (0..n2).map(|j| (i * n2 + j, 1.0)).collect();
        lp.add_eq(&row, a.weights[i]);
    }
    for j in 0..n2 {
        let row: Vec<(usize, f64)> = (0..n1).map(|i| (i * n2 + j, 1.0)).collect();
        lp.add_eq(&row, b.weights[j]);
    }
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => Ok(sol.objective_value),
        other => Err(Error::Solver(format!("transportation LP {other:?}"))),
    }
}

/// `∫₀¹ |F⁻¹(t) − G⁻¹(t)|^p dt` for one-dimensional distributions.
fn quantile_transport_cost(mu: &DiscreteDistribution, nu: &DiscreteDistribution, p: u32) -> f64 {
    let sorted = |d: &DiscreteDistribution| {
        let mut v: Vec<(f64, f64)> = d
            .supports
            .iter()
            .zip(&d.weights)
            .filter(|(_, w)| **w > 0.0)
            .map(|(s, w)| (s[0], *w))
            .collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v
    };
    let a = sorted(mu);
    let b = sorted(nu);
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (a[0].1, b[0].1);
    let mut total = 0.0;
    loop {
        let step = ra.min(rb);
        total += step * (a[i].0 - b[j].0).abs().powi(p as i32);
        ra -= step;
        rb -= step;
        if ra <= 0.0 {
            i += 1;
            if i == a.len() {
                break;
            }
            ra = a[i].1;
        }
        if rb <= 0.0 {
            j += 1;
            if j == b.len() {
                break;
            }
            rb = b[j].1;
        }
    }
    total
}

/// Two balls of equal order intersect iff `W_p(c₁, c₂) ≤ ε₁ + ε₂`
/// (with [`BOUNDARY_TOL`] slack).
pub fn intersection_nonempty(ball1: &WassersteinBall, ball2: &WassersteinBall) -> Result<bool> {
    if ball1.order != ball2.order {
        return invalid(format!("ball orders differ: {} vs {}", ball1.order, ball2.order));
    }
    let w = wasserstein_distance(&ball1.center, &ball2.center, ball1.order)?;
    Ok(w <= ball1.radius + ball2.radius + BOUNDARY_TOL)
}
