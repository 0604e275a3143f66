//! Many-instance policy comparisons. Instances run in parallel; results are
//! ordered by instance index.

use rayon::prelude::*;

use super::generators::{gen_portfolio_synthetic, gen_two_group_shift, instance_seeds, SyntheticPortfolioConfig, TwoGroupShiftConfig};
use super::policies::{cross_validate, evaluate_at, select_on_holdout, CalibrationObjective, HyperPoint, PolicyKind, PolicySpec, ProblemSetup};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceRow {
    pub instance: usize,
    pub seed: u64,
    /// Mean realised test cost per policy, in the study's policy order.
    pub obj: Vec<f64>,
    pub chosen: Vec<HyperPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyResult {
    pub policies: Vec<PolicyKind>,
    pub rows: Vec<InstanceRow>,
}

impl StudyResult {
    /// Mean over instances of each policy's test cost.
    pub fn means(&self) -> Vec<f64> {
        (0..self.policies.len())
            .map(|k| self.rows.iter().map(|r| r.obj[k]).sum::<f64>() / self.rows.len() as f64)
            .collect()
    }

    pub fn column(&self, kind: PolicyKind) -> Option<Vec<f64>> {
        let k = self.policies.iter().position(|p| *p == kind)?;
        Some(self.rows.iter().map(|r| r.obj[k]).collect())
    }
}

fn run_instances(
    specs: &[PolicySpec],
    instances: usize,
    seed: u64,
    one: impl Fn(u64, &PolicySpec) -> Result<(f64, HyperPoint)> + Sync,
) -> Result<StudyResult> {
    if specs.is_empty() || instances == 0 {
        return invalid("need at least one policy and one instance");
    }
    let seeds = instance_seeds(seed, instances);
    let rows = seeds
        .par_iter()
        .enumerate()
        .map(|(instance, &s)| {
            let mut obj = Vec::with_capacity(specs.len());
            let mut chosen = Vec::with_capacity(specs.len());
            for spec in specs {
                let (o, c) = one(s, spec).map_err(|e| Error::Instance { instance, source: Box::new(e) })?;
                obj.push(o);
                chosen.push(c);
            }
            Ok(InstanceRow { instance, seed: s, obj, chosen })
        })
        .collect::<Result<_>>()?;
    Ok(StudyResult { policies: specs.iter().map(|s| s.kind).collect(), rows })
}

/// Synthetic portfolio comparison: each instance draws train/valid/test
/// sets from `scenario` (its `seed` is the study seed), picks each policy's
/// grid point on the validation set by mean realised cost, and reports the
/// mean realised cost on the test set.
pub fn portfolio_study(scenario: &SyntheticPortfolioConfig, instances: usize, setup: &ProblemSetup, specs: &[PolicySpec]) -> Result<StudyResult> {
    run_instances(specs, instances, scenario.seed, |seed, spec| {
        let split = gen_portfolio_synthetic(&SyntheticPortfolioConfig { seed, ..scenario.clone() })?;
        let chosen = if spec.grid.len() == 1 {
            spec.grid[0]
        } else {
            select_on_holdout(spec, setup, &split.train, &split.valid, CalibrationObjective::MeanCost)?.chosen
        };
        let eval = evaluate_at(&spec.with_point(chosen), setup, &split.train, &split.test)?;
        Ok((eval.mean, chosen))
    })
}

/// Two-group income comparison: each instance draws a training and a test
/// set, calibrates each policy by `folds`-fold cross-validation on the
/// training set, and reports the mean absolute error on the test set.
pub fn income_study(scenario: &TwoGroupShiftConfig, instances: usize, folds: usize, setup: &ProblemSetup, specs: &[PolicySpec]) -> Result<StudyResult> {
    run_instances(specs, instances, scenario.seed, |seed, spec| {
        let (train, test) = gen_two_group_shift(&TwoGroupShiftConfig { seed, ..scenario.clone() })?;
        let chosen = cross_validate(spec, setup, &train, folds, CalibrationObjective::MeanCost)?.chosen;
        let eval = evaluate_at(&spec.with_point(chosen), setup, &train, &test)?;
        Ok((eval.mean, chosen))
    })
}
