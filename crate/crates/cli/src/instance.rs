//! JSON file format of a single worst-case problem for `solve`.

use iwdro::dro::{AffinePiece, Formulation, PiecewiseLinearCost, Polyhedron};
use iwdro::wasserstein::{DiscreteDistribution, WassersteinBall};
use serde::{Deserialize, Serialize};

use crate::config::Invalid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceFile {
    pub g_mat: Vec<Vec<f64>>,
    pub g_vec: Vec<f64>,
    pub q: Vec<f64>,
    pub q0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CostFile {
    AbsoluteLoss,
    MeanCvar { assets: usize, phi: f64 },
    Pieces(Vec<PieceFile>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SetFile {
    WholeSpace(usize),
    Box { lower: Vec<f64>, upper: Vec<f64> },
    SimplexPrefix { dim: usize, k: usize },
    Rows { dim: usize, matrix: Vec<Vec<f64>>, rhs: Vec<f64>, equality: Vec<bool> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallFile {
    pub support: Vec<Vec<f64>>,
    /// Uniform when absent.
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulationFile {
    #[default]
    Exact,
    ExactFull,
    Shared,
    SharedFull,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub cost: CostFile,
    pub decision_set: SetFile,
    pub outcome_set: SetFile,
    pub balls: Vec<BallFile>,
    #[serde(default)]
    pub formulation: FormulationFile,
}

pub struct Instance {
    pub cost: PiecewiseLinearCost,
    pub decision_set: Polyhedron,
    pub outcome_set: Polyhedron,
    pub balls: Vec<WassersteinBall>,
    pub formulation: Formulation,
}

fn set(file: &SetFile, field: &str) -> Result<Polyhedron, Invalid> {
    let bad = |e: iwdro::Error| Invalid(format!("instance.{field}: {e}"));
    match file {
        SetFile::WholeSpace(d) => Ok(Polyhedron::whole_space(*d)),
        SetFile::Box { lower, upper } => Polyhedron::boxed(lower, upper).map_err(bad),
        SetFile::SimplexPrefix { dim, k } if k <= dim => Ok(Polyhedron::simplex_prefix(*dim, *k)),
        SetFile::SimplexPrefix { .. } => Err(Invalid(format!("instance.{field}: k exceeds dim"))),
        SetFile::Rows { dim, matrix, rhs, equality } => Polyhedron::new(*dim, matrix.clone(), rhs.clone(), equality.clone()).map_err(bad),
    }
}

impl InstanceFile {
    pub fn build(&self) -> Result<Instance, Invalid> {
        let cost = match &self.cost {
            CostFile::AbsoluteLoss => PiecewiseLinearCost::absolute_loss(),
            CostFile::MeanCvar { assets, phi } => {
                if *assets == 0 || !(*phi > 0.0 && *phi < 1.0) {
                    return Err(Invalid("instance.cost.mean_cvar: need assets ≥ 1 and phi in (0, 1)".into()));
                }
                PiecewiseLinearCost::mean_cvar(*assets, *phi)
            }
            CostFile::Pieces(pieces) => PiecewiseLinearCost::new(
                pieces
                    .iter()
                    .map(|p| AffinePiece { g_mat: p.g_mat.clone(), g_vec: p.g_vec.clone(), q: p.q.clone(), q0: p.q0 })
                    .collect(),
            )
            .map_err(|e| Invalid(format!("instance.cost: {e}")))?,
        };
        if self.balls.is_empty() {
            return Err(Invalid("instance.balls: need at least one ball".into()));
        }
        let balls = self
            .balls
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let bad = |e: iwdro::Error| Invalid(format!("instance.balls[{i}]: {e}"));
                let center = match &b.weights {
                    Some(w) => DiscreteDistribution::new(b.support.clone(), w.clone()),
                    None => DiscreteDistribution::uniform(b.support.clone()),
                }
                .map_err(bad)?;
                WassersteinBall::new(center, b.radius, 1).map_err(bad)
            })
            .collect::<Result<_, _>>()?;
        let formulation = match self.formulation {
            FormulationFile::Exact => Formulation::Exact,
            FormulationFile::ExactFull => Formulation::ExactFull,
            FormulationFile::Shared => Formulation::Shared,
            FormulationFile::SharedFull => Formulation::SharedFull,
        };
        Ok(Instance {
            cost,
            decision_set: set(&self.decision_set, "decision_set")?,
            outcome_set: set(&self.outcome_set, "outcome_set")?,
            balls,
            formulation,
        })
    }
}
