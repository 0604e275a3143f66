//! Decision policies, hyperparameter calibration and out-of-sample evaluation.

use std::ops::Range;

use crate::dro::{solve_multi_ball_with, Formulation, PiecewiseLinearCost, Polyhedron, RadiusSweep};
use crate::error::{invalid, Error, Result};
use crate::estimators::{
    fit_ols, kernel_mass, mixture_estimate, mixture_radius, mixture_weight, nw_estimate, nw_residual_estimate, ols_residual_estimate,
    Dataset, KernelKind, KernelSpec, MixtureParams,
};
use crate::wasserstein::{DiscreteDistribution, WassersteinBall};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    /// Equal weights on the first `d_y` decision coordinates; the remaining
    /// coordinates minimise the sample-average cost.
    Ew,
    /// One ball around the kernel estimate, radius `k / Σ_i K((x − x_i)/h)`.
    NpDro,
    /// One ball around the regression-residual estimate.
    PDro,
    /// One ball around the kernel-regression-residual estimate.
    RDro,
    /// Both balls, radii `k₁(1 + k₂)W` and `(1 − k₁)₊(1 + k₂)W` with `W` the
    /// distance between the two centres.
    IwDro,
    /// One ball around the mixture of the two centres, radii as for `IwDro`.
    IwDroApx,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 6] = [PolicyKind::Ew, PolicyKind::NpDro, PolicyKind::PDro, PolicyKind::RDro, PolicyKind::IwDro, PolicyKind::IwDroApx];

    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::Ew => "EW",
            PolicyKind::NpDro => "NP-DRO",
            PolicyKind::PDro => "P-DRO",
            PolicyKind::RDro => "R-DRO",
            PolicyKind::IwDro => "IW-DRO",
            PolicyKind::IwDroApx => "IW-DRO-Apx",
        }
    }

    pub fn from_name(name: &str) -> Option<PolicyKind> {
        PolicyKind::ALL.iter().copied().find(|k| k.name().eq_ignore_ascii_case(name))
    }
}

/// One hyperparameter configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HyperPoint {
    None,
    KernelScale { k: f64 },
    Radius { epsilon: f64 },
    Split { k1: f64, k2: f64 },
}

impl HyperPoint {
    fn fits(&self, kind: PolicyKind) -> bool {
        match (kind, self) {
            (PolicyKind::Ew, HyperPoint::None) => true,
            (PolicyKind::NpDro, HyperPoint::KernelScale { k }) => k.is_finite() && *k >= 0.0,
            (PolicyKind::PDro | PolicyKind::RDro, HyperPoint::Radius { epsilon }) => epsilon.is_finite() && *epsilon >= 0.0,
            (PolicyKind::IwDro | PolicyKind::IwDroApx, HyperPoint::Split { k1, k2 }) => {
                k1.is_finite() && k2.is_finite() && *k1 >= 0.0 && *k2 >= 0.0
            }
            _ => false,
        }
    }

    /// Parameter name/value pairs, for reports.
    pub fn describe(&self) -> Vec<(&'static str, f64)> {
        match *self {
            HyperPoint::None => vec![],
            HyperPoint::KernelScale { k } => vec![("k", k)],
            HyperPoint::Radius { epsilon } => vec![("epsilon", epsilon)],
            HyperPoint::Split { k1, k2 } => vec![("k1", k1), ("k2", k2)],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    pub grid: Vec<HyperPoint>,
}

fn product(k1s: &[f64], k2s: &[f64]) -> Vec<HyperPoint> {
    k1s.iter().flat_map(|&k1| k2s.iter().map(move |&k2| HyperPoint::Split { k1, k2 })).collect()
}

impl PolicySpec {
    pub fn new(kind: PolicyKind, grid: Vec<HyperPoint>) -> Result<Self> {
        if grid.is_empty() {
            return invalid(format!("{} needs a nonempty grid", kind.name()));
        }
        if let Some(bad) = grid.iter().find(|p| !p.fits(kind)) {
            return invalid(format!("grid entry {bad:?} does not fit {}", kind.name()));
        }
        Ok(PolicySpec { kind, grid })
    }

    /// Grids of the synthetic portfolio study: `k ∈ {1, 2, 5, 10}`,
    /// `ε ∈ {0.05, 0.1, 0.2, 0.5}`, `k₁ ∈ {0.025, 0.05, …, 0.975}`,
    /// `k₂ ∈ {0.01, 0.02, 0.05, 0.1}`.
    pub fn synthetic_default(kind: PolicyKind) -> Self {
        let k1s: Vec<f64> = (1..40).map(|i| i as f64 * 0.025).collect();
        let grid = match kind {
            PolicyKind::Ew => vec![HyperPoint::None],
            PolicyKind::NpDro => [1.0, 2.0, 5.0, 10.0].iter().map(|&k| HyperPoint::KernelScale { k }).collect(),
            PolicyKind::PDro | PolicyKind::RDro => {
                [0.05, 0.1, 0.2, 0.5].iter().map(|&epsilon| HyperPoint::Radius { epsilon }).collect()
            }
            PolicyKind::IwDro | PolicyKind::IwDroApx => product(&k1s, &[0.01, 0.02, 0.05, 0.1]),
        };
        PolicySpec { kind, grid }
    }

    /// Grids of the rolling-window study: `k₁ ∈ {0.4, 0.8, 1.2}`,
    /// `k₂ ∈ {0.002, 0.005, 0.1}`, `k ∈ {0.2, …, 1.2}`, `ε ∈ {0.5, 1, 2}`.
    pub fn backtest_default(kind: PolicyKind) -> Self {
        let grid = match kind {
            PolicyKind::Ew => vec![HyperPoint::None],
            PolicyKind::NpDro => [0.2, 0.4, 0.6, 0.8, 1.0, 1.2].iter().map(|&k| HyperPoint::KernelScale { k }).collect(),
            PolicyKind::PDro | PolicyKind::RDro => [0.5, 1.0, 2.0].iter().map(|&epsilon| HyperPoint::Radius { epsilon }).collect(),
            PolicyKind::IwDro | PolicyKind::IwDroApx => product(&[0.4, 0.8, 1.2], &[0.002, 0.005, 0.1]),
        };
        PolicySpec { kind, grid }
    }

    /// Grids of the two-group income study, scaled to outcomes of order one:
    /// `k ∈ {0.05, 0.1, 0.2, 0.4}`, `ε ∈ {0.05, 0.1, 0.2, 0.5}`,
    /// `k₁ ∈ {0.1, 0.2, …, 0.9}`, `k₂ ∈ {0.01, 0.05, 0.1}`.
    pub fn income_default(kind: PolicyKind) -> Self {
        let grid = match kind {
            PolicyKind::NpDro => [0.05, 0.1, 0.2, 0.4].iter().map(|&k| HyperPoint::KernelScale { k }).collect(),
            PolicyKind::IwDro | PolicyKind::IwDroApx => {
                let k1s: Vec<f64> = (1..10).map(|i| i as f64 * 0.1).collect();
                product(&k1s, &[0.01, 0.05, 0.1])
            }
            _ => return PolicySpec::synthetic_default(kind),
        };
        PolicySpec { kind, grid }
    }

    pub fn with_point(&self, point: HyperPoint) -> PolicySpec {
        PolicySpec { kind: self.kind, grid: vec![point] }
    }
}

/// Cost, feasible sets and estimator settings shared by every policy.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSetup {
    pub cost: PiecewiseLinearCost,
    pub decision_set: Polyhedron,
    pub outcome_set: Polyhedron,
    pub formulation: Formulation,
    pub kernel: KernelKind,
    /// Bandwidth `h = bandwidth_scale · n^{−1/(d_x + 2)}`.
    pub bandwidth_scale: f64,
    /// `τ` of the interpolation weight.
    pub mixture_tau: f64,
    /// Neighbour reach `r` (in bandwidths) of the interpolation weight.
    pub mixture_reach: f64,
}

pub const CVAR_LEVEL: f64 = 0.05;

impl ProblemSetup {
    /// Mean-CVaR allocation over the simplex, outcomes on `R^{assets}`,
    /// shared-slope program, Gaussian kernel with `h = 10 n^{−1/(d_x+2)}`.
    pub fn portfolio(assets: usize) -> Self {
        ProblemSetup {
            cost: PiecewiseLinearCost::mean_cvar(assets, CVAR_LEVEL),
            decision_set: Polyhedron::simplex_prefix(assets + 1, assets),
            outcome_set: Polyhedron::whole_space(assets),
            formulation: Formulation::Shared,
            kernel: KernelKind::Gaussian,
            bandwidth_scale: 10.0,
            mixture_tau: 1.0,
            mixture_reach: 1.0,
        }
    }

    /// As [`ProblemSetup::portfolio`] with `h = 0.1 n^{−1/(d_x+2)}`, for factor
    /// series in decimal units.
    pub fn monthly(assets: usize) -> Self {
        ProblemSetup { bandwidth_scale: 0.1, ..ProblemSetup::portfolio(assets) }
    }

    /// Absolute prediction error on the real line, exact program, Gaussian
    /// kernel with `h = 0.5 n^{−1/(d_x+2)}`.
    pub fn income() -> Self {
        ProblemSetup {
            cost: PiecewiseLinearCost::absolute_loss(),
            decision_set: Polyhedron::whole_space(1),
            outcome_set: Polyhedron::whole_space(1),
            formulation: Formulation::Exact,
            kernel: KernelKind::Gaussian,
            bandwidth_scale: 0.5,
            mixture_tau: 1.0,
            mixture_reach: 1.0,
        }
    }

    pub fn kernel_spec(&self, n: usize, dx: usize) -> Result<KernelSpec> {
        KernelSpec::new(self.kernel, self.bandwidth_scale * (n as f64).powf(-1.0 / (dx as f64 + 2.0)))
    }

    fn check(&self, data: &Dataset) -> Result<()> {
        if data.dy() != self.cost.dy() {
            return invalid(format!("data has {} outcomes but the cost expects {}", data.dy(), self.cost.dy()));
        }
        Ok(())
    }
}

/// Kernel estimate, or the parametric estimate when every kernel weight
/// vanishes at `x` (reported with unit kernel mass).
fn np_center(data: &Dataset, x: &[f64], spec: &KernelSpec, fallback: &DiscreteDistribution) -> Result<(DiscreteDistribution, f64)> {
    match nw_estimate(data, x, spec) {
        Ok(d) => Ok((d, kernel_mass(data, x, spec))),
        Err(Error::DegenerateEstimate(_)) => Ok((fallback.clone(), 1.0)),
        Err(e) => Err(e),
    }
}

fn split_radii(k1: f64, k2: f64, distance: f64) -> (f64, f64) {
    (k1 * (1.0 + k2) * distance, ((1.0 - k1) * (1.0 + k2) * distance).max(0.0))
}

/// Solve order: ascending radius for one-parameter grids; for split grids,
/// ascending `k₁` with `k₂` alternating direction between consecutive `k₁`.
fn solve_order(grid: &[HyperPoint]) -> Vec<usize> {
    let key = |p: &HyperPoint| match *p {
        HyperPoint::None => (0.0, 0.0),
        HyperPoint::KernelScale { k } => (k, 0.0),
        HyperPoint::Radius { epsilon } => (epsilon, 0.0),
        HyperPoint::Split { k1, k2 } => (k1, k2),
    };
    let mut k1s: Vec<f64> = grid.iter().map(|p| key(p).0).collect();
    k1s.sort_by(f64::total_cmp);
    k1s.dedup();
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| {
        let (ka, kb) = (key(&grid[a]), key(&grid[b]));
        let rank = k1s.partition_point(|v| *v < ka.0);
        ka.0.total_cmp(&kb.0)
            .then(if rank % 2 == 0 { ka.1.total_cmp(&kb.1) } else { kb.1.total_cmp(&ka.1) })
            .then(a.cmp(&b))
    });
    order
}

fn ew_decision(setup: &ProblemSetup, data: &Dataset) -> Result<Vec<f64>> {
    let (dy, dz) = (setup.cost.dy(), setup.cost.dz());
    if dz < dy {
        return invalid("equal weights need at least d_y decision coordinates");
    }
    let mut z_set = setup.decision_set.clone();
    for k in 0..dy {
        let mut row = vec![0.0; dz];
        row[k] = 1.0;
        z_set.push(row, 1.0 / dy as f64, true);
    }
    let ball = WassersteinBall::new(DiscreteDistribution::uniform(data.outcomes().to_vec())?, 0.0, 1)?;
    let mut z = solve_multi_ball_with(&setup.cost, &z_set, &setup.outcome_set, &[ball], setup.formulation)?.decision;
    z[..dy].fill(1.0 / dy as f64);
    Ok(z)
}

/// Decisions of every grid point of `policy` at covariate `x`, in grid order.
pub fn decide_grid(policy: &PolicySpec, setup: &ProblemSetup, train: &Dataset, x: &[f64]) -> Result<Vec<Result<Vec<f64>>>> {
    setup.check(train)?;
    if x.len() != train.dx() {
        return invalid(format!("query covariate has dimension {} but data has {}", x.len(), train.dx()));
    }
    let grid = &policy.grid;
    if policy.kind == PolicyKind::Ew {
        let z = ew_decision(setup, train)?;
        return Ok(grid.iter().map(|_| Ok(z.clone())).collect());
    }
    let spec = setup.kernel_spec(train.len(), train.dx())?;
    let needs_p = matches!(policy.kind, PolicyKind::PDro | PolicyKind::IwDro | PolicyKind::IwDroApx | PolicyKind::NpDro);
    let p_center = if needs_p { Some(ols_residual_estimate(&fit_ols(train)?, train, x)?) } else { None };
    let (centers, radii): (Vec<DiscreteDistribution>, Box<dyn Fn(&HyperPoint, &RadiusSweep) -> Vec<f64>>) = match policy.kind {
        PolicyKind::Ew => unreachable!(),
        PolicyKind::NpDro => {
            let (c, mass) = np_center(train, x, &spec, p_center.as_ref().expect("parametric centre"))?;
            (vec![c], Box::new(move |p, _| match *p {
                HyperPoint::KernelScale { k } => vec![k / mass],
                _ => unreachable!(),
            }))
        }
        PolicyKind::PDro | PolicyKind::RDro => {
            let c = if policy.kind == PolicyKind::PDro {
                p_center.clone().expect("parametric centre")
            } else {
                nw_residual_estimate(train, x, &spec)?
            };
            (vec![c], Box::new(|p, _| match *p {
                HyperPoint::Radius { epsilon } => vec![epsilon],
                _ => unreachable!(),
            }))
        }
        PolicyKind::IwDro => {
            let pc = p_center.clone().expect("parametric centre");
            let (c, _) = np_center(train, x, &spec, &pc)?;
            (vec![c, pc], Box::new(|p, sweep| match *p {
                HyperPoint::Split { k1, k2 } => {
                    let (a, b) = split_radii(k1, k2, sweep.center_distance(0, 1));
                    vec![a, b]
                }
                _ => unreachable!(),
            }))
        }
        PolicyKind::IwDroApx => {
            let pc = p_center.clone().expect("parametric centre");
            let (npc, _) = np_center(train, x, &spec, &pc)?;
            let distance = crate::wasserstein::wasserstein_distance(&npc, &pc, 1)?;
            let params = MixtureParams::new(setup.mixture_tau, 1, train.dy())?;
            let kappa = mixture_weight(train, x, &spec, setup.mixture_reach, &params)?;
            (vec![mixture_estimate(&npc, &pc, kappa)?], Box::new(move |p, _| match *p {
                HyperPoint::Split { k1, k2 } => {
                    let (a, b) = split_radii(k1, k2, distance);
                    vec![mixture_radius(a, b, kappa, 1)]
                }
                _ => unreachable!(),
            }))
        }
    };
    let mut sweep = RadiusSweep::new(&setup.cost, &setup.decision_set, &setup.outcome_set, &centers, setup.formulation)?;
    let mut out: Vec<Option<Result<Vec<f64>>>> = vec![None; grid.len()];
    for i in solve_order(grid) {
        let r = radii(&grid[i], &sweep);
        out[i] = Some(sweep.solve(&r).map(|s| s.decision));
    }
    Ok(out.into_iter().map(|o| o.expect("every grid point solved")).collect())
}

/// Decision of a single-point policy at `x`.
pub fn decide(policy: &PolicySpec, setup: &ProblemSetup, train: &Dataset, x: &[f64]) -> Result<Vec<f64>> {
    if policy.grid.len() != 1 {
        return invalid("decide needs a calibrated (single-point) policy");
    }
    decide_grid(policy, setup, train, x)?.pop().expect("one grid point")
}

/// What calibration optimises over the held-out points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CalibrationObjective {
    /// Smallest mean realised cost.
    MeanCost,
    /// Largest Sharpe ratio of the realised returns `Σ_{k<d_y} z_k y_k`.
    Sharpe,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub chosen: HyperPoint,
    pub index: usize,
    /// Score per grid point (lower is better); `None` where a solve failed.
    pub scores: Vec<Option<f64>>,
}

/// `Σ_{k<d_y} z_k y_k`.
pub fn portfolio_return(z: &[f64], y: &[f64]) -> f64 {
    z.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn score(objective: CalibrationObjective, values: &[f64]) -> f64 {
    match objective {
        CalibrationObjective::MeanCost => values.iter().sum::<f64>() / values.len() as f64,
        CalibrationObjective::Sharpe => match super::backtest::sharpe_ratio(values) {
            Some(sr) => -sr,
            None => f64::INFINITY,
        },
    }
}

/// Realised values (cost or return) per grid point over the validation rows.
fn held_out_values(
    policy: &PolicySpec,
    setup: &ProblemSetup,
    train: &Dataset,
    valid: &Dataset,
    objective: CalibrationObjective,
    values: &mut [Result<Vec<f64>>],
) -> Result<()> {
    for (x, y) in valid.covariates().iter().zip(valid.outcomes()) {
        let decisions = decide_grid(policy, setup, train, x)?;
        for (slot, d) in values.iter_mut().zip(decisions) {
            if let Ok(acc) = slot {
                match d {
                    Ok(z) => acc.push(match objective {
                        CalibrationObjective::MeanCost => setup.cost.eval(&z, y),
                        CalibrationObjective::Sharpe => portfolio_return(&z, y),
                    }),
                    Err(e) => *slot = Err(e),
                }
            }
        }
    }
    Ok(())
}

fn pick(policy: &PolicySpec, objective: CalibrationObjective, values: Vec<Result<Vec<f64>>>) -> Result<Calibration> {
    let mut failures = Vec::new();
    let scores: Vec<Option<f64>> = values
        .into_iter()
        .enumerate()
        .map(|(i, v)| match v {
            Ok(vals) => Some(score(objective, &vals)),
            Err(e) => {
                failures.push(format!("{:?}: {e}", policy.grid[i]));
                None
            }
        })
        .collect();
    let mut best: Option<usize> = None;
    for (i, s) in scores.iter().enumerate() {
        if let Some(s) = s {
            if best.map_or(true, |b| *s < scores[b].expect("scored")) {
                best = Some(i);
            }
        }
    }
    match best {
        Some(index) => Ok(Calibration { chosen: policy.grid[index], index, scores }),
        None => Err(Error::Calibration(failures.join("; "))),
    }
}

/// Picks the grid point with the best score on `valid` for a policy trained
/// on `train`; ties go to the earliest grid point.
pub fn select_on_holdout(
    policy: &PolicySpec,
    setup: &ProblemSetup,
    train: &Dataset,
    valid: &Dataset,
    objective: CalibrationObjective,
) -> Result<Calibration> {
    let mut values: Vec<Result<Vec<f64>>> = policy.grid.iter().map(|_| Ok(Vec::new())).collect();
    held_out_values(policy, setup, train, valid, objective, &mut values)?;
    pick(policy, objective, values)
}

/// Contiguous index blocks; the first `n mod folds` blocks are one longer.
pub fn fold_blocks(n: usize, folds: usize) -> Vec<Range<usize>> {
    (0..folds).map(|f| f * n / folds..(f + 1) * n / folds).collect()
}

/// K-fold cross-validation over contiguous blocks. Held-out values of all
/// folds are pooled before scoring; ties go to the earliest grid point.
pub fn cross_validate(
    policy: &PolicySpec,
    setup: &ProblemSetup,
    data: &Dataset,
    folds: usize,
    objective: CalibrationObjective,
) -> Result<Calibration> {
    if folds < 2 || folds > data.len() {
        return invalid(format!("need 2 ≤ folds ≤ {}, got {folds}", data.len()));
    }
    if policy.grid.is_empty() {
        return invalid("empty grid");
    }
    if policy.grid.len() == 1 {
        return Ok(Calibration { chosen: policy.grid[0], index: 0, scores: vec![None] });
    }
    let mut values: Vec<Result<Vec<f64>>> = policy.grid.iter().map(|_| Ok(Vec::new())).collect();
    for block in fold_blocks(data.len(), folds) {
        let rest: Vec<usize> = (0..data.len()).filter(|i| !block.contains(i)).collect();
        let train = data.subset(&rest)?;
        let valid = data.slice(block.start, block.end)?;
        held_out_values(policy, setup, &train, &valid, objective, &mut values)?;
    }
    pick(policy, objective, values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub chosen: HyperPoint,
    pub decisions: Vec<Vec<f64>>,
    /// Realised cost at each test row.
    pub costs: Vec<f64>,
    pub mean: f64,
}

/// Calibrates `policy` on `train` by 4-fold cross-validation when its grid
/// has more than one point, then records the realised cost at every test row.
pub fn evaluate_policy(policy: &PolicySpec, setup: &ProblemSetup, train: &Dataset, test: &Dataset) -> Result<Evaluation> {
    let chosen = cross_validate(policy, setup, train, 4.min(train.len()).max(2), CalibrationObjective::MeanCost)?.chosen;
    evaluate_at(&policy.with_point(chosen), setup, train, test)
}

/// Realised costs of a single-point policy.
pub fn evaluate_at(policy: &PolicySpec, setup: &ProblemSetup, train: &Dataset, test: &Dataset) -> Result<Evaluation> {
    let mut decisions = Vec::with_capacity(test.len());
    let mut costs = Vec::with_capacity(test.len());
    for (x, y) in test.covariates().iter().zip(test.outcomes()) {
        let z = decide(policy, setup, train, x)?;
        costs.push(setup.cost.eval(&z, y));
        decisions.push(z);
    }
    let mean = costs.iter().sum::<f64>() / costs.len().max(1) as f64;
    Ok(Evaluation { chosen: policy.grid[0], decisions, costs, mean })
}
