//! Seeded synthetic data processes.
//!
//! Every generator draws from a `ChaCha8Rng` seeded with `seed_from_u64`,
//! uniforms through `Uniform` and normals through `StandardNormal` from
//! `rand_distr`, in the order documented on each function.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{StandardNormal, Uniform};

use crate::error::{invalid, Result};
use crate::estimators::Dataset;

pub(crate) fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `count` instance seeds drawn from a generator seeded with `seed`.
pub fn instance_seeds(seed: u64, count: usize) -> Vec<u64> {
    let mut rng = rng_from(seed);
    (0..count).map(|_| rng.next_u64()).collect()
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// `2x + 0.3 sin(4πx)`.
pub fn example1_mean(x: f64) -> f64 {
    2.0 * x + 0.3 * (4.0 * PI * x).sin()
}

/// Scalar covariate on `U(0, 1)` plus fixed far-out covariates, outcome
/// `2x + 0.3 sin(4πx) + N(0, noise_sd²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticIncomeConfig {
    pub n_core: usize,
    pub shift_points: Vec<f64>,
    pub noise_sd: f64,
    pub seed: u64,
}

impl Default for SyntheticIncomeConfig {
    fn default() -> Self {
        SyntheticIncomeConfig { n_core: 200, shift_points: vec![1.1, 1.2, 1.3, 1.4], noise_sd: 0.3, seed: 0 }
    }
}

/// Draws the `n_core` uniform covariates first, then one noise value per
/// sample (core samples, then shift points).
pub fn gen_example1(config: &SyntheticIncomeConfig) -> Result<Dataset> {
    if !(config.noise_sd.is_finite() && config.noise_sd > 0.0) {
        return invalid(format!("noise_sd must be positive, got {}", config.noise_sd));
    }
    let process = ScalarProcess { noise_sd: config.noise_sd, ..ScalarProcess::example1() };
    process.sample(config.n_core, &config.shift_points, &mut rng_from(config.seed))
}

/// Two covariate groups with the outcome process of [`gen_example1`]:
/// the majority group on `U(0, 1)`, the minority group on `U(1, 1 + minority_width)`.
/// Training holds a `majority_share` of majority samples; the test set
/// reverses the proportions.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoGroupShiftConfig {
    pub majority_share: f64,
    pub minority_width: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub noise_sd: f64,
    pub seed: u64,
}

impl Default for TwoGroupShiftConfig {
    fn default() -> Self {
        TwoGroupShiftConfig { majority_share: 0.9, minority_width: 0.4, n_train: 50, n_test: 50, noise_sd: 0.3, seed: 0 }
    }
}

/// Training then test set. Per set: group labels are laid out, shuffled,
/// then each sample draws its covariate and its noise.
pub fn gen_two_group_shift(config: &TwoGroupShiftConfig) -> Result<(Dataset, Dataset)> {
    if !(0.0..=1.0).contains(&config.majority_share) {
        return invalid(format!("majority_share must lie in [0, 1], got {}", config.majority_share));
    }
    if !(config.noise_sd.is_finite() && config.noise_sd > 0.0) || !(config.minority_width > 0.0) {
        return invalid("noise_sd and minority_width must be positive");
    }
    let mut rng = rng_from(config.seed);
    let draw = |n: usize, majority: usize, rng: &mut ChaCha8Rng| {
        let mut groups: Vec<bool> = (0..n).map(|i| i < majority).collect();
        groups.shuffle(rng);
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for is_major in groups {
            let x = if is_major { rng.sample(Uniform::new(0.0, 1.0)) } else { rng.sample(Uniform::new(1.0, 1.0 + config.minority_width)) };
            xs.push(vec![x]);
            ys.push(vec![example1_mean(x) + config.noise_sd * normal(rng)]);
        }
        Dataset::new(xs, ys)
    };
    let train_major = (config.majority_share * config.n_train as f64).round() as usize;
    let test_major = config.n_test - (config.majority_share * config.n_test as f64).round() as usize;
    let train = draw(config.n_train, train_major, &mut rng)?;
    let test = draw(config.n_test, test_major, &mut rng)?;
    Ok((train, test))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShiftDegree {
    None,
    Mild,
    Severe,
}

/// Five assets driven by three factors:
/// `y = m b0 + B1 x + m B2 (x ⊙ x) + η`, `η ~ N(0, 0.5 I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticPortfolioConfig {
    pub m: f64,
    pub shift_degree: ShiftDegree,
    pub n_train: usize,
    pub n_valid: usize,
    pub n_test: usize,
    pub seed: u64,
}

impl Default for SyntheticPortfolioConfig {
    fn default() -> Self {
        SyntheticPortfolioConfig { m: 0.4, shift_degree: ShiftDegree::Severe, n_train: 50, n_valid: 50, n_test: 20, seed: 0 }
    }
}

pub const PORTFOLIO_ASSETS: usize = 5;
pub const PORTFOLIO_FACTORS: usize = 3;

/// Intercept loadings; the two trailing assets carry none.
pub const PORTFOLIO_B0: [f64; 5] = [0.1, 0.1, -0.1, 0.0, 0.0];
/// Linear loadings, asset-major.
pub const PORTFOLIO_B1: [[f64; 3]; 5] = [[0.1, 0.0, 0.0], [0.1, 0.0, 0.0], [0.1, 0.0, 0.0], [-0.1, 0.0, 0.0], [-0.1, 0.0, 0.0]];
/// Quadratic loadings, asset-major.
pub const PORTFOLIO_B2: [[f64; 3]; 5] = [
    [-0.1, -0.1, -0.1],
    [-0.1, 0.1, -0.1],
    [0.1, -0.1, 0.1],
    [0.1, 0.1, 0.1],
    [-0.1, -0.1, 0.1],
];
const TRAIN_FACTOR_MEAN: f64 = -0.5;
const SHIFTED_FACTOR_MEAN: f64 = 1.0;
const FACTOR_VARIANCE: f64 = 2.0;
const RETURN_NOISE_VARIANCE: f64 = 0.5;

/// Conditional mean of the five returns at factor vector `x`.
pub fn portfolio_mean(x: &[f64], m: f64) -> Vec<f64> {
    (0..PORTFOLIO_ASSETS)
        .map(|a| {
            let lin: f64 = (0..PORTFOLIO_FACTORS).map(|k| PORTFOLIO_B1[a][k] * x[k]).sum();
            let quad: f64 = (0..PORTFOLIO_FACTORS).map(|k| PORTFOLIO_B2[a][k] * x[k] * x[k]).sum();
            m * PORTFOLIO_B0[a] + lin + m * quad
        })
        .collect()
}

/// Factor mean of the test covariates for each shift degree.
pub fn test_factor_mean(shift: ShiftDegree) -> f64 {
    match shift {
        ShiftDegree::None => TRAIN_FACTOR_MEAN,
        ShiftDegree::Mild => 0.5 * (TRAIN_FACTOR_MEAN + SHIFTED_FACTOR_MEAN),
        ShiftDegree::Severe => SHIFTED_FACTOR_MEAN,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioSplit {
    pub train: Dataset,
    pub valid: Dataset,
    pub test: Dataset,
}

/// Training and validation rows share one draw from the training law; the
/// test rows come from the shifted law. Per row: three factor normals, then
/// five noise normals.
pub fn gen_portfolio_synthetic(config: &SyntheticPortfolioConfig) -> Result<PortfolioSplit> {
    if !(config.m.is_finite() && config.m >= 0.0) {
        return invalid(format!("m must be nonnegative, got {}", config.m));
    }
    if config.n_train == 0 || config.n_test == 0 {
        return invalid("training and test sets must be nonempty");
    }
    let mut rng = rng_from(config.seed);
    let mut draw = |n: usize, mean: f64| {
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for _ in 0..n {
            let x: Vec<f64> = (0..PORTFOLIO_FACTORS).map(|_| mean + FACTOR_VARIANCE.sqrt() * normal(&mut rng)).collect();
            let mut y = portfolio_mean(&x, config.m);
            for v in &mut y {
                *v += RETURN_NOISE_VARIANCE.sqrt() * normal(&mut rng);
            }
            xs.push(x);
            ys.push(y);
        }
        (xs, ys)
    };
    let (xs, ys) = draw(config.n_train + config.n_valid, TRAIN_FACTOR_MEAN);
    let (xt, yt) = draw(config.n_test, test_factor_mean(config.shift_degree));
    let all = Dataset::new(xs, ys)?;
    let train = all.slice(0, config.n_train)?;
    let valid = if config.n_valid == 0 {
        train.clone()
    } else {
        all.slice(config.n_train, config.n_train + config.n_valid)?
    };
    Ok(PortfolioSplit { train, valid, test: Dataset::new(xt, yt)? })
}

/// A covariate process with scalar outcome `f(x) + N(0, noise_sd²)` and
/// covariates on `U(x_low, x_high)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarProcess {
    pub mean: MeanFunction,
    pub noise_sd: f64,
    pub x_low: f64,
    pub x_high: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeanFunction {
    /// `2x + 0.3 sin(4πx)`.
    Example1,
    Linear { intercept: f64, slope: f64 },
}

impl MeanFunction {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            MeanFunction::Example1 => example1_mean(x),
            MeanFunction::Linear { intercept, slope } => intercept + slope * x,
        }
    }
}

impl ScalarProcess {
    pub fn example1() -> Self {
        ScalarProcess { mean: MeanFunction::Example1, noise_sd: 0.3, x_low: 0.0, x_high: 1.0 }
    }

    pub fn linear(intercept: f64, slope: f64) -> Self {
        ScalarProcess { mean: MeanFunction::Linear { intercept, slope }, noise_sd: 0.3, x_low: 0.0, x_high: 1.0 }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.noise_sd.is_finite() && self.noise_sd > 0.0) || !(self.x_low < self.x_high) {
            return invalid("process needs positive noise and x_low < x_high");
        }
        Ok(())
    }

    /// `n` covariates, then `n` noise values, then the `extra` fixed
    /// covariates' noise values.
    pub fn sample(&self, n: usize, extra: &[f64], rng: &mut ChaCha8Rng) -> Result<Dataset> {
        self.validate()?;
        let dist = Uniform::new(self.x_low, self.x_high);
        let mut xs: Vec<f64> = (0..n).map(|_| rng.sample(dist)).collect();
        xs.extend_from_slice(extra);
        let ys = xs.iter().map(|&x| vec![self.mean.eval(x) + self.noise_sd * normal(rng)]).collect();
        Dataset::new(xs.into_iter().map(|x| vec![x]).collect(), ys)
    }

    /// Reference sample of the conditional law at `x`.
    pub fn conditional_sample(&self, x: f64, size: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mean = self.mean.eval(x);
        (0..size).map(|_| mean + self.noise_sd * normal(rng)).collect()
    }
}

/// Monthly three-factor series with `assets` assets, starting January 2010:
/// factors `f_t ~ N(μ_f, diag σ_f²)` except for a six-month stress window
/// starting at month 72 (factor means −3%, volatilities doubled); returns
/// `y_t = a + B f_t + e_t` with loadings drawn once and `e_t ~ N(0, 0.02²)`.
/// Draw order: loadings (asset-major), then per month three factors and
/// `assets` noise values.
pub fn gen_factor_series(months: usize, assets: usize, seed: u64) -> Result<super::backtest::TimeSeries> {
    if months == 0 || assets == 0 {
        return invalid("need at least one month and one asset");
    }
    const MEAN: [f64; 3] = [0.006, 0.002, 0.003];
    const VOL: [f64; 3] = [0.045, 0.03, 0.03];
    let mut rng = rng_from(seed);
    let loadings: Vec<[f64; 4]> = (0..assets)
        .map(|_| {
            [
                0.001 * normal(&mut rng),
                rng.sample(Uniform::new(0.7, 1.3)),
                rng.sample(Uniform::new(-0.5, 0.8)),
                rng.sample(Uniform::new(-0.5, 0.8)),
            ]
        })
        .collect();
    let (mut dates, mut xs, mut ys) = (Vec::new(), Vec::new(), Vec::new());
    for t in 0..months {
        let stressed = (72..78).contains(&t);
        let f: Vec<f64> = (0..3)
            .map(|k| if stressed { -0.03 + 2.0 * VOL[k] * normal(&mut rng) } else { MEAN[k] + VOL[k] * normal(&mut rng) })
            .collect();
        let y: Vec<f64> = loadings.iter().map(|l| l[0] + l[1] * f[0] + l[2] * f[1] + l[3] * f[2] + 0.02 * normal(&mut rng)).collect();
        dates.push(format!("{:04}-{:02}", 2010 + t / 12, t % 12 + 1));
        xs.push(f);
        ys.push(y);
    }
    Ok(super::backtest::TimeSeries { dates, data: Dataset::new(xs, ys)? })
}
