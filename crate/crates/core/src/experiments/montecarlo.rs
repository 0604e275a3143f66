//! Monte-Carlo checks of estimator concentration and ambiguity-set coverage
//! for scalar-outcome processes.
//!
//! The true conditional law at the query covariate is replaced by a large
//! i.i.d. reference sample, drawn once per trial.

use rayon::prelude::*;

use super::generators::{instance_seeds, rng_from, ScalarProcess};
use crate::error::{invalid, Result};
use crate::estimators::{
    fit_ols, knn_estimate, mixture_estimate, mixture_radius, mixture_weight, nw_estimate, ols_residual_estimate, Dataset, KernelKind,
    KernelSpec, MixtureParams,
};
use crate::wasserstein::{wasserstein_distance, DiscreteDistribution, BOUNDARY_TOL};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimatorKind {
    /// Kernel estimate with `h = scale · n^{−1/(2β + d_x)}`.
    Kernel { kind: KernelKind, scale: f64, beta: f64 },
    /// Nearest-neighbour estimate with `k = ⌈scale · n^{2β/(2β + d_x)}⌉`.
    NearestNeighbours { scale: f64, beta: f64 },
    /// Regression prediction plus residuals.
    Regression,
}

fn estimate(kind: EstimatorKind, data: &Dataset, x: &[f64]) -> Result<DiscreteDistribution> {
    let (n, dx) = (data.len() as f64, data.dx() as f64);
    match kind {
        EstimatorKind::Kernel { kind, scale, beta } => {
            nw_estimate(data, x, &KernelSpec::new(kind, scale * n.powf(-1.0 / (2.0 * beta + dx)))?)
        }
        EstimatorKind::NearestNeighbours { scale, beta } => {
            let k = (scale * n.powf(2.0 * beta / (2.0 * beta + dx))).ceil().clamp(1.0, n) as usize;
            knn_estimate(data, x, k)
        }
        EstimatorKind::Regression => ols_residual_estimate(&fit_ols(data)?, data, x),
    }
}

/// `max(10 · n_max, 10⁴)`.
pub fn default_reference_size(n_max: usize) -> usize {
    (10 * n_max).max(10_000)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationConfig {
    pub process: ScalarProcess,
    pub estimator: EstimatorKind,
    pub x: f64,
    pub n_values: Vec<usize>,
    pub replications: usize,
    pub p: u32,
    /// Defaults to [`default_reference_size`].
    pub reference_size: Option<usize>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationTable {
    pub n_values: Vec<usize>,
    /// `distances[k][r]`: replication `r` at `n_values[k]`.
    pub distances: Vec<Vec<f64>>,
    pub reference_size: usize,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Least-squares slope of `ln y` on `ln n`.
pub fn loglog_slope(n_values: &[usize], values: &[f64]) -> f64 {
    let xs: Vec<f64> = n_values.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxy: f64 = xs.iter().zip(&ys).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = xs.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

impl ConcentrationTable {
    pub fn medians(&self) -> Vec<f64> {
        self.distances.iter().map(|d| median(d)).collect()
    }

    /// Log-log slope of the median distance against `n`.
    pub fn slope(&self) -> f64 {
        loglog_slope(&self.n_values, &self.medians())
    }
}

fn reference_distribution(process: &ScalarProcess, x: f64, size: usize, seed: u64) -> Result<DiscreteDistribution> {
    let sample = process.conditional_sample(x, size, &mut rng_from(seed));
    DiscreteDistribution::uniform(sample.into_iter().map(|v| vec![v]).collect())
}

/// `W_p` between the reference sample and the estimator built from fresh
/// training data, for every `n` and replication. Seed stream: one seed for
/// the reference, then one per `(n, replication)` in row-major order.
pub fn concentration_trial(config: &ConcentrationConfig) -> Result<ConcentrationTable> {
    config.process.validate()?;
    if config.n_values.is_empty() || config.replications == 0 || config.p < 1 {
        return invalid("need n values, replications and p ≥ 1");
    }
    let n_max = *config.n_values.iter().max().expect("nonempty");
    let reference_size = config.reference_size.unwrap_or_else(|| default_reference_size(n_max));
    let seeds = instance_seeds(config.seed, 1 + config.n_values.len() * config.replications);
    let reference = reference_distribution(&config.process, config.x, reference_size, seeds[0])?;
    let flat: Vec<f64> = (0..config.n_values.len() * config.replications)
        .into_par_iter()
        .map(|job| {
            let n = config.n_values[job / config.replications];
            let data = config.process.sample(n, &[], &mut rng_from(seeds[1 + job]))?;
            wasserstein_distance(&reference, &estimate(config.estimator, &data, &[config.x])?, config.p)
        })
        .collect::<Result<_>>()?;
    Ok(ConcentrationTable {
        n_values: config.n_values.clone(),
        distances: flat.chunks(config.replications).map(<[f64]>::to_vec).collect(),
        reference_size,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadiiMode {
    /// Every ball contains every distribution.
    Unbounded,
    Zero,
    Fixed { np: f64, p: f64 },
    /// Radii set to the empirical `1 − α/2` quantiles of each estimator's
    /// distance to the reference over independent pilot replications.
    Calibrated { pilot_replications: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageConfig {
    pub process: ScalarProcess,
    /// Training covariates: `n_core` draws from the process plus these points.
    pub n_core: usize,
    pub shift_points: Vec<f64>,
    pub x: f64,
    pub kernel: KernelKind,
    /// Bandwidth `h = bandwidth_scale · n^{−1/3}`.
    pub bandwidth_scale: f64,
    pub mixture_tau: f64,
    pub mixture_reach: f64,
    pub radii: RadiiMode,
    pub alpha: f64,
    pub replications: usize,
    pub reference_size: usize,
    pub seed: u64,
}

impl Default for CoverageConfig {
    fn default() -> Self {
        CoverageConfig {
            process: ScalarProcess::example1(),
            n_core: 200,
            shift_points: vec![1.1, 1.2, 1.3, 1.4],
            x: 1.2,
            kernel: KernelKind::Gaussian,
            bandwidth_scale: 0.5,
            mixture_tau: 1.0,
            mixture_reach: 1.0,
            radii: RadiiMode::Calibrated { pilot_replications: 1000 },
            alpha: 0.1,
            replications: 200,
            reference_size: 10_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    /// Fraction of replications with the reference inside both balls.
    pub iw: f64,
    /// Fraction with the reference inside the mixture ball.
    pub me: f64,
    pub eps_np: f64,
    pub eps_p: f64,
    pub iw_hits: Vec<bool>,
    pub me_hits: Vec<bool>,
}

/// Distances of one replication: to the kernel centre, to the regression
/// centre and to the mixture centre, plus the mixture weight.
struct Replication {
    d_np: f64,
    d_p: f64,
    d_me: f64,
    kappa: f64,
}

fn replicate(config: &CoverageConfig, reference: &DiscreteDistribution, seed: u64) -> Result<Replication> {
    let data = config.process.sample(config.n_core, &config.shift_points, &mut rng_from(seed))?;
    let x = [config.x];
    let spec = KernelSpec::new(config.kernel, config.bandwidth_scale * (data.len() as f64).powf(-1.0 / 3.0))?;
    let np = nw_estimate(&data, &x, &spec)?;
    let p = ols_residual_estimate(&fit_ols(&data)?, &data, &x)?;
    let kappa = mixture_weight(&data, &x, &spec, config.mixture_reach, &MixtureParams::new(config.mixture_tau, 1, 1)?)?;
    let me = mixture_estimate(&np, &p, kappa)?;
    Ok(Replication {
        d_np: wasserstein_distance(reference, &np, 1)?,
        d_p: wasserstein_distance(reference, &p, 1)?,
        d_me: wasserstein_distance(reference, &me, 1)?,
        kappa,
    })
}

/// Empirical `q`-quantile, taking the `⌈q k⌉`-th smallest value.
pub fn upper_quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[rank - 1]
}

/// Coverage of the two-ball set and of the mixture ball. Seed stream: one
/// seed for the reference, one per pilot replication, one per replication.
pub fn coverage_trial(config: &CoverageConfig) -> Result<CoverageReport> {
    config.process.validate()?;
    if !(config.alpha > 0.0 && config.alpha < 1.0) || config.replications == 0 {
        return invalid("need α ∈ (0, 1) and at least one replication");
    }
    let reps = config.replications;
    if config.radii == RadiiMode::Unbounded {
        return Ok(CoverageReport {
            iw: 1.0,
            me: 1.0,
            eps_np: f64::INFINITY,
            eps_p: f64::INFINITY,
            iw_hits: vec![true; reps],
            me_hits: vec![true; reps],
        });
    }
    let pilots = match config.radii {
        RadiiMode::Calibrated { pilot_replications } if pilot_replications == 0 => return invalid("need pilot replications"),
        RadiiMode::Calibrated { pilot_replications } => pilot_replications,
        _ => 0,
    };
    let seeds = instance_seeds(config.seed, 1 + pilots + reps);
    let reference = reference_distribution(&config.process, config.x, config.reference_size, seeds[0])?;
    let run = |range: std::ops::Range<usize>| -> Result<Vec<Replication>> {
        range.into_par_iter().map(|k| replicate(config, &reference, seeds[k])).collect()
    };
    let (eps_np, eps_p) = match config.radii {
        RadiiMode::Unbounded => unreachable!(),
        RadiiMode::Zero => (0.0, 0.0),
        RadiiMode::Fixed { np, p } => {
            if !(np >= 0.0 && p >= 0.0) {
                return invalid("radii must be nonnegative");
            }
            (np, p)
        }
        RadiiMode::Calibrated { .. } => {
            let pilot = run(1..1 + pilots)?;
            let q = 1.0 - config.alpha / 2.0;
            (
                upper_quantile(&pilot.iter().map(|r| r.d_np).collect::<Vec<_>>(), q),
                upper_quantile(&pilot.iter().map(|r| r.d_p).collect::<Vec<_>>(), q),
            )
        }
    };
    let results = run(1 + pilots..1 + pilots + reps)?;
    let iw_hits: Vec<bool> = results.iter().map(|r| r.d_np <= eps_np + BOUNDARY_TOL && r.d_p <= eps_p + BOUNDARY_TOL).collect();
    let me_hits: Vec<bool> = results.iter().map(|r| r.d_me <= mixture_radius(eps_np, eps_p, r.kappa, 1) + BOUNDARY_TOL).collect();
    let rate = |h: &[bool]| h.iter().filter(|&&b| b).count() as f64 / reps as f64;
    Ok(CoverageReport { iw: rate(&iw_hits), me: rate(&me_hits), eps_np, eps_p, iw_hits, me_hits })
}
