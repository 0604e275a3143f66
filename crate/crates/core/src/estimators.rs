//! Conditional-distribution estimators used as ball centres.
//!
//! * [`nw_estimate`]: kernel-weighted empirical distribution of the outcomes.
//! * [`knn_estimate`]: uniform over the outcomes of the `k` nearest covariates.
//! * [`ols_residual_estimate`]: regression prediction shifted by every training
//!   residual, uniform weights.
//! * [`mixture_estimate`] / [`mixture_weight`] / [`mixture_radius`]: the
//!   single-ball interpolation between a nonparametric and a parametric centre.
//!
//! The theoretical radius formulas take their unknown constants as inputs.

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::wasserstein::DiscreteDistribution;

/// Paired covariate / outcome samples, one row per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    covariates: Vec<Vec<f64>>,
    outcomes: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new(covariates: Vec<Vec<f64>>, outcomes: Vec<Vec<f64>>) -> Result<Self> {
        if covariates.is_empty() {
            return invalid("dataset needs at least one sample");
        }
        if covariates.len() != outcomes.len() {
            return invalid(format!("{} covariate rows but {} outcome rows", covariates.len(), outcomes.len()));
        }
        let dx = covariates[0].len();
        let dy = outcomes[0].len();
        if dy == 0 {
            return invalid("outcomes must have dimension at least 1");
        }
        if covariates.iter().any(|r| r.len() != dx) || outcomes.iter().any(|r| r.len() != dy) {
            return invalid("ragged covariate or outcome rows");
        }
        if covariates.iter().chain(&outcomes).flatten().any(|v| !v.is_finite()) {
            return invalid("dataset contains non-finite values");
        }
        Ok(Dataset { covariates, outcomes })
    }

    pub fn covariates(&self) -> &[Vec<f64>] {
        &self.covariates
    }

    pub fn outcomes(&self) -> &[Vec<f64>] {
        &self.outcomes
    }

    pub fn len(&self) -> usize {
        self.covariates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.covariates.is_empty()
    }

    pub fn dx(&self) -> usize {
        self.covariates[0].len()
    }

    pub fn dy(&self) -> usize {
        self.outcomes[0].len()
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        Dataset::new(
            indices.iter().map(|&i| self.covariates[i].clone()).collect(),
            indices.iter().map(|&i| self.outcomes[i].clone()).collect(),
        )
    }

    /// Rows `start..end`.
    pub fn slice(&self, start: usize, end: usize) -> Result<Dataset> {
        self.subset(&(start..end).collect::<Vec<_>>())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    /// `I{‖τ‖₂ ≤ 1}`
    Naive,
    /// `(1 − ‖τ‖₂²)₊`
    Epanechnikov,
    /// `exp(−‖τ‖₂²)`
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub bandwidth: f64,
}

impl KernelSpec {
    pub fn new(kind: KernelKind, bandwidth: f64) -> Result<Self> {
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return invalid(format!("bandwidth must be positive, got {bandwidth}"));
        }
        Ok(KernelSpec { kind, bandwidth })
    }

    /// `K((x − xi)/h)`.
    pub fn weight(&self, x: &[f64], xi: &[f64]) -> f64 {
        let sq: f64 = x.iter().zip(xi).map(|(a, b)| ((a - b) / self.bandwidth).powi(2)).sum();
        kernel_from_sq_norm(self.kind, sq)
    }
}

fn kernel_from_sq_norm(kind: KernelKind, sq: f64) -> f64 {
    match kind {
        KernelKind::Naive => {
            if sq <= 1.0 {
                1.0
            } else {
                0.0
            }
        }
        KernelKind::Epanechnikov => (1.0 - sq).max(0.0),
        KernelKind::Gaussian => (-sq).exp(),
    }
}

/// Kernel value at `tau` (bandwidth already applied by the caller).
pub fn kernel_eval(spec: &KernelSpec, tau: &[f64]) -> f64 {
    kernel_from_sq_norm(spec.kind, tau.iter().map(|t| t * t).sum())
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn check_query(data: &Dataset, x: &[f64]) -> Result<()> {
    if x.len() != data.dx() {
        return invalid(format!("query covariate has dimension {} but data has {}", x.len(), data.dx()));
    }
    Ok(())
}

/// `Σ_i K((x − x_i)/h)`.
pub fn kernel_mass(data: &Dataset, x: &[f64], spec: &KernelSpec) -> f64 {
    data.covariates.iter().map(|xi| spec.weight(x, xi)).sum()
}

fn nw_weights(data: &Dataset, x: &[f64], spec: &KernelSpec) -> Result<Vec<f64>> {
    check_query(data, x)?;
    let raw: Vec<f64> = data.covariates.iter().map(|xi| spec.weight(x, xi)).collect();
    let total: f64 = raw.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateEstimate(format!(
            "every kernel weight vanishes at the query point (bandwidth {})",
            spec.bandwidth
        )));
    }
    Ok(raw.iter().map(|w| w / total).collect())
}

/// Kernel-weighted empirical distribution of the outcomes at `x`.
pub fn nw_estimate(data: &Dataset, x: &[f64], spec: &KernelSpec) -> Result<DiscreteDistribution> {
    let w = nw_weights(data, x, spec)?;
    DiscreteDistribution::new(data.outcomes.clone(), w)
}

/// Kernel regression prediction `Σ_i w_i(x) y_i`.
pub fn nw_regression(data: &Dataset, x: &[f64], spec: &KernelSpec) -> Result<Vec<f64>> {
    let w = nw_weights(data, x, spec)?;
    let mut out = vec![0.0; data.dy()];
    for (wi, yi) in w.iter().zip(&data.outcomes) {
        for (o, v) in out.iter_mut().zip(yi) {
            *o += wi * v;
        }
    }
    Ok(out)
}

/// Kernel regression prediction at `x` shifted by each in-sample residual
/// `y_i − m̂(x_i)`, uniform weights.
pub fn nw_residual_estimate(data: &Dataset, x: &[f64], spec: &KernelSpec) -> Result<DiscreteDistribution> {
    let centre = nw_regression(data, x, spec)?;
    let mut supports = Vec::with_capacity(data.len());
    for (xi, yi) in data.covariates.iter().zip(&data.outcomes) {
        let fit = nw_regression(data, xi, spec)?;
        supports.push(centre.iter().zip(yi.iter().zip(&fit)).map(|(c, (y, f))| c + y - f).collect());
    }
    DiscreteDistribution::uniform(supports)
}

/// Uniform distribution over the outcomes of the `k` samples closest to `x`
/// in Euclidean distance; ties go to the lower sample index.
pub fn knn_estimate(data: &Dataset, x: &[f64], k: usize) -> Result<DiscreteDistribution> {
    check_query(data, x)?;
    if k == 0 || k > data.len() {
        return invalid(format!("k = {k} outside 1..={}", data.len()));
    }
    let mut order: Vec<(f64, usize)> = data.covariates.iter().enumerate().map(|(i, xi)| (euclidean(x, xi), i)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let supports = order[..k].iter().map(|&(_, i)| data.outcomes[i].clone()).collect();
    DiscreteDistribution::uniform(supports)
}

/// Least-squares fit of `y ≈ θᵀ[1, x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionModel {
    /// `(d_x + 1) × d_y`; row 0 is the intercept.
    pub coefficients: Vec<Vec<f64>>,
    /// `n × d_y`.
    pub fitted_residuals: Vec<Vec<f64>>,
    /// Set when the design matrix lacked full column rank and the
    /// minimum-norm solution was returned.
    pub rank_deficient: bool,
}

impl RegressionModel {
    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        let dy = self.coefficients[0].len();
        (0..dy)
            .map(|k| self.coefficients[0][k] + x.iter().enumerate().map(|(j, v)| v * self.coefficients[j + 1][k]).sum::<f64>())
            .collect()
    }
}

pub fn fit_ols(data: &Dataset) -> Result<RegressionModel> {
    let (n, dx, dy) = (data.len(), data.dx(), data.dy());
    let design = DMatrix::from_fn(n, dx + 1, |i, j| if j == 0 { 1.0 } else { data.covariates[i][j - 1] });
    let target = DMatrix::from_fn(n, dy, |i, k| data.outcomes[i][k]);
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let tol = smax * (n.max(dx + 1) as f64) * f64::EPSILON;
    let rank = svd.rank(tol);
    let theta = svd
        .solve(&target, tol)
        .map_err(|e| Error::InvalidInput(format!("least-squares solve failed: {e}")))?;
    let resid = &target - &design * &theta;
    Ok(RegressionModel {
        coefficients: (0..=dx).map(|j| (0..dy).map(|k| theta[(j, k)]).collect()).collect(),
        fitted_residuals: (0..n).map(|i| (0..dy).map(|k| resid[(i, k)]).collect()).collect(),
        rank_deficient: rank < dx + 1,
    })
}

/// Prediction at `x` shifted by every fitted residual, uniform weights.
pub fn ols_residual_estimate(model: &RegressionModel, data: &Dataset, x: &[f64]) -> Result<DiscreteDistribution> {
    check_query(data, x)?;
    if model.fitted_residuals.len() != data.len() {
        return invalid("model was fitted on a different dataset");
    }
    let centre = model.predict(x);
    let supports = model
        .fitted_residuals
        .iter()
        .map(|r| centre.iter().zip(r).map(|(c, e)| c + e).collect())
        .collect();
    DiscreteDistribution::uniform(supports)
}

/// Parameters of the interpolation weight `κ = max{1 − τ N^{r}, 0}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureParams {
    pub tau: f64,
    pub r_me: f64,
    pub p: u32,
    pub d_y: usize,
}

impl MixtureParams {
    /// Exponent `−p²/d_y` when `p < d_y/2`, else `−p/2`.
    pub fn new(tau: f64, p: u32, d_y: usize) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return invalid(format!("tau must be positive, got {tau}"));
        }
        if p < 1 || d_y < 1 {
            return invalid("order and outcome dimension must be at least 1");
        }
        let pf = p as f64;
        let r_me = if pf < d_y as f64 / 2.0 { -pf * pf / d_y as f64 } else { -pf / 2.0 };
        Ok(MixtureParams { tau, r_me, p, d_y })
    }
}

/// `κ = max{1 − τ N^{r_me}, 0}` from a neighbour count; `κ = 0` when `N = 0`.
pub fn mixture_weight_from_count(count: usize, params: &MixtureParams) -> f64 {
    if count == 0 {
        return 0.0;
    }
    (1.0 - params.tau * (count as f64).powf(params.r_me)).max(0.0)
}

/// Interpolation weight with `N` = number of samples within `r·h` of `x`.
pub fn mixture_weight(data: &Dataset, x: &[f64], spec: &KernelSpec, r: f64, params: &MixtureParams) -> Result<f64> {
    check_query(data, x)?;
    let reach = r * spec.bandwidth;
    let count = data.covariates.iter().filter(|xi| euclidean(x, xi) <= reach).count();
    Ok(mixture_weight_from_count(count, params))
}

/// `κ·np_dist + (1 − κ)·p_dist` with the two support lists concatenated.
pub fn mixture_estimate(np_dist: &DiscreteDistribution, p_dist: &DiscreteDistribution, kappa: f64) -> Result<DiscreteDistribution> {
    if np_dist.dim() != p_dist.dim() {
        return invalid("mixture components differ in dimension");
    }
    if !(0.0..=1.0).contains(&kappa) {
        return invalid(format!("kappa must lie in [0, 1], got {kappa}"));
    }
    let mut supports = np_dist.supports().to_vec();
    supports.extend_from_slice(p_dist.supports());
    let mut weights: Vec<f64> = np_dist.weights().iter().map(|w| kappa * w).collect();
    weights.extend(p_dist.weights().iter().map(|w| (1.0 - kappa) * w));
    DiscreteDistribution::new(supports, weights)
}

/// `(κ ε_np^p + (1 − κ) ε_p^p)^{1/p}`.
pub fn mixture_radius(eps_np: f64, eps_p: f64, kappa: f64, p: u32) -> f64 {
    let pf = p as f64;
    (kappa * eps_np.powf(pf) + (1.0 - kappa) * eps_p.powf(pf)).powf(1.0 / pf)
}

/// Unknown constants of the nonparametric radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NpRadiusConstants {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub lipschitz: f64,
    pub beta: f64,
    pub d_x: usize,
}

/// `(log(2C₁/α) / (C₂ n μ_X(x) h^{d_x}))^{1/2} + C₀ L h^β`.
pub fn theoretical_radius_np(n: usize, density_proxy: f64, h: f64, alpha: f64, c: &NpRadiusConstants) -> f64 {
    let stat = (2.0 * c.c1 / alpha).ln() / (c.c2 * n as f64 * density_proxy * h.powi(c.d_x as i32));
    stat.max(0.0).sqrt() + c.c0 * c.lipschitz * h.powf(c.beta)
}

/// `(log(2C₄/α) / (C₅ n))^{1/2} + ε_apx`.
pub fn theoretical_radius_p(n: usize, alpha: f64, eps_apx: f64, c4: f64, c5: f64) -> f64 {
    ((2.0 * c4 / alpha).ln() / (c5 * n as f64)).max(0.0).sqrt() + eps_apx
}
