//! Run configuration: a JSON file, overridden by command-line flags.

use std::path::{Path, PathBuf};

use iwdro::experiments::{HyperPoint, PolicyKind, PolicySpec, ShiftDegree};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// Environment variable holding the default output root.
pub const OUTPUT_ENV: &str = "IWDRO_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Solve,
    Income,
    PortfolioSynth,
    Backtest,
    Concentration,
    Coverage,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Income => "income",
            Command::PortfolioSynth => "portfolio-synth",
            Command::Backtest => "backtest",
            Command::Concentration => "concentration",
            Command::Coverage => "coverage",
        }
    }
}

/// File layout of a run configuration.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    pub command: Command,
    #[serde(default)]
    pub parameters: Map<String, Value>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

/// A field-level validation failure.
#[derive(Debug, Clone, PartialEq)]
pub struct Invalid(pub String);

impl Invalid {
    pub fn field(name: &str, message: impl std::fmt::Display) -> Self {
        Invalid(format!("parameters.{name}: {message}"))
    }
}

pub fn load_run_file(path: &Path) -> Result<RunFile, Invalid> {
    let text = std::fs::read_to_string(path).map_err(|e| Invalid(format!("config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Invalid(format!("config {}: {e}", path.display())))
}

/// Parses a `key=value` override; the value is read as JSON when it parses,
/// otherwise as a string.
pub fn parse_override(text: &str) -> Result<(String, Value), Invalid> {
    let (key, raw) = text.split_once('=').ok_or_else(|| Invalid(format!("override `{text}` is not key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    Ok((key.trim().to_string(), value))
}

pub fn parse_params<T: DeserializeOwned>(map: Map<String, Value>) -> Result<T, Invalid> {
    serde_json::from_value(Value::Object(map)).map_err(|e| Invalid(format!("parameters: {e}")))
}

fn check(ok: bool, field: &str, message: &str) -> Result<(), Invalid> {
    if ok {
        Ok(())
    } else {
        Err(Invalid::field(field, message))
    }
}

fn positive(v: f64, field: &str) -> Result<(), Invalid> {
    check(v.is_finite() && v > 0.0, field, "must be a positive number")
}

fn at_least(v: usize, min: usize, field: &str) -> Result<(), Invalid> {
    check(v >= min, field, &format!("must be at least {min}"))
}

fn existing_file(path: &Path, field: &str) -> Result<(), Invalid> {
    check(path.is_file(), field, &format!("`{}` is not a readable file", path.display()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveParams {
    pub instance: PathBuf,
}

impl SolveParams {
    pub fn validate(&self) -> Result<(), Invalid> {
        existing_file(&self.instance, "instance")
    }
}

/// Optional grid replacements shared by the study commands.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridParams {
    pub k: Option<Vec<f64>>,
    pub epsilon: Option<Vec<f64>>,
    pub k1: Option<Vec<f64>>,
    pub k2: Option<Vec<f64>>,
}

fn nonnegative_list(values: &Option<Vec<f64>>, field: &str) -> Result<(), Invalid> {
    match values {
        Some(v) if v.is_empty() => Err(Invalid::field(field, "must not be empty")),
        Some(v) if v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) => Err(Invalid::field(field, "entries must be nonnegative numbers")),
        _ => Ok(()),
    }
}

impl GridParams {
    fn validate(&self) -> Result<(), Invalid> {
        nonnegative_list(&self.k, "grid.k")?;
        nonnegative_list(&self.epsilon, "grid.epsilon")?;
        nonnegative_list(&self.k1, "grid.k1")?;
        nonnegative_list(&self.k2, "grid.k2")
    }

    /// `base` with any replaced grid applied.
    pub fn apply(&self, base: PolicySpec) -> PolicySpec {
        let grid = match base.kind {
            PolicyKind::Ew => return base,
            PolicyKind::NpDro => match &self.k {
                Some(ks) => ks.iter().map(|&k| HyperPoint::KernelScale { k }).collect(),
                None => return base,
            },
            PolicyKind::PDro | PolicyKind::RDro => match &self.epsilon {
                Some(es) => es.iter().map(|&epsilon| HyperPoint::Radius { epsilon }).collect(),
                None => return base,
            },
            PolicyKind::IwDro | PolicyKind::IwDroApx => {
                if self.k1.is_none() && self.k2.is_none() {
                    return base;
                }
                let (mut k1s, mut k2s) = (Vec::new(), Vec::new());
                for p in &base.grid {
                    if let HyperPoint::Split { k1, k2 } = *p {
                        if !k1s.contains(&k1) {
                            k1s.push(k1);
                        }
                        if !k2s.contains(&k2) {
                            k2s.push(k2);
                        }
                    }
                }
                let k1s = self.k1.clone().unwrap_or(k1s);
                let k2s = self.k2.clone().unwrap_or(k2s);
                k1s.iter().flat_map(|&k1| k2s.iter().map(move |&k2| HyperPoint::Split { k1, k2 })).collect()
            }
        };
        PolicySpec { kind: base.kind, grid }
    }
}

pub fn parse_policies(names: &[String]) -> Result<Vec<PolicyKind>, Invalid> {
    if names.is_empty() {
        return Err(Invalid::field("policies", "must name at least one policy"));
    }
    names
        .iter()
        .enumerate()
        .map(|(i, n)| {
            PolicyKind::from_name(n).ok_or_else(|| {
                let known: Vec<&str> = PolicyKind::ALL.iter().map(|k| k.name()).collect();
                Invalid::field(&format!("policies[{i}]"), format!("unknown policy `{n}`, expected one of {}", known.join(", ")))
            })
        })
        .collect()
}

fn names(kinds: &[PolicyKind]) -> Vec<String> {
    kinds.iter().map(|k| k.name().to_string()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IncomeParams {
    pub instances: usize,
    pub folds: usize,
    pub majority_share: f64,
    pub minority_width: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub noise_sd: f64,
    pub bandwidth_scale: f64,
    pub policies: Vec<String>,
    pub grid: GridParams,
}

impl Default for IncomeParams {
    fn default() -> Self {
        IncomeParams {
            instances: 100,
            folds: 4,
            majority_share: 0.9,
            minority_width: 0.4,
            n_train: 50,
            n_test: 50,
            noise_sd: 0.3,
            bandwidth_scale: 0.5,
            policies: names(&[PolicyKind::NpDro, PolicyKind::PDro, PolicyKind::IwDro, PolicyKind::IwDroApx]),
            grid: GridParams::default(),
        }
    }
}

impl IncomeParams {
    pub fn validate(&self) -> Result<(), Invalid> {
        at_least(self.instances, 1, "instances")?;
        at_least(self.folds, 2, "folds")?;
        check(self.folds <= self.n_train, "folds", "must not exceed n_train")?;
        check(self.majority_share > 0.0 && self.majority_share < 1.0, "majority_share", "must be in (0, 1)")?;
        positive(self.minority_width, "minority_width")?;
        at_least(self.n_test, 1, "n_test")?;
        positive(self.noise_sd, "noise_sd")?;
        positive(self.bandwidth_scale, "bandwidth_scale")?;
        parse_policies(&self.policies)?;
        self.grid.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    None,
    Mild,
    Severe,
}

impl From<Scenario> for ShiftDegree {
    fn from(s: Scenario) -> Self {
        match s {
            Scenario::None => ShiftDegree::None,
            Scenario::Mild => ShiftDegree::Mild,
            Scenario::Severe => ShiftDegree::Severe,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PortfolioParams {
    pub scenario: Scenario,
    pub m: f64,
    pub instances: usize,
    pub n_train: usize,
    pub n_valid: usize,
    pub n_test: usize,
    pub policies: Vec<String>,
    pub grid: GridParams,
}

impl Default for PortfolioParams {
    fn default() -> Self {
        PortfolioParams {
            scenario: Scenario::Severe,
            m: 0.4,
            instances: 100,
            n_train: 50,
            n_valid: 50,
            n_test: 20,
            policies: names(&PolicyKind::ALL),
            grid: GridParams::default(),
        }
    }
}

impl PortfolioParams {
    pub fn validate(&self) -> Result<(), Invalid> {
        check(self.m.is_finite() && self.m >= 0.0, "m", "must be a nonnegative number")?;
        at_least(self.instances, 1, "instances")?;
        at_least(self.n_train, 5, "n_train")?;
        at_least(self.n_valid, 1, "n_valid")?;
        at_least(self.n_test, 1, "n_test")?;
        parse_policies(&self.policies)?;
        self.grid.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BacktestParams {
    /// CSV file; the bundled synthetic series when absent.
    pub series: Option<PathBuf>,
    pub factors: usize,
    pub window: usize,
    pub folds: usize,
    pub bandwidth_scale: f64,
    pub policies: Vec<String>,
    pub grid: GridParams,
}

impl Default for BacktestParams {
    fn default() -> Self {
        BacktestParams {
            series: None,
            factors: 3,
            window: 60,
            folds: 4,
            bandwidth_scale: 0.1,
            policies: names(&PolicyKind::ALL),
            grid: GridParams::default(),
        }
    }
}

impl BacktestParams {
    pub fn validate(&self) -> Result<(), Invalid> {
        if let Some(p) = &self.series {
            existing_file(p, "series")?;
        }
        at_least(self.factors, 1, "factors")?;
        at_least(self.folds, 2, "folds")?;
        check(self.window >= self.folds, "window", "must be at least folds")?;
        positive(self.bandwidth_scale, "bandwidth_scale")?;
        parse_policies(&self.policies)?;
        self.grid.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProcessName {
    /// `2x + 0.3 sin(4πx)` on `U(0, 1)`.
    Example1,
    /// `intercept + slope x` on `U(0, 1)`.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorName {
    Kernel,
    Knn,
    Regression,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConcentrationParams {
    pub process: ProcessName,
    pub intercept: f64,
    pub slope: f64,
    pub noise_sd: f64,
    pub estimator: EstimatorName,
    /// Bandwidth or neighbour-count scale.
    pub scale: f64,
    pub beta: f64,
    pub x: f64,
    pub n_values: Vec<usize>,
    pub replications: usize,
    pub p: u32,
    pub reference_size: Option<usize>,
}

impl Default for ConcentrationParams {
    fn default() -> Self {
        ConcentrationParams {
            process: ProcessName::Example1,
            intercept: 1.0,
            slope: 2.0,
            noise_sd: 0.3,
            estimator: EstimatorName::Kernel,
            scale: 0.2,
            beta: 1.0,
            x: 0.5,
            n_values: vec![100, 200, 400, 800, 1600, 3200],
            replications: 50,
            p: 1,
            reference_size: None,
        }
    }
}

impl ConcentrationParams {
    pub fn validate(&self) -> Result<(), Invalid> {
        positive(self.noise_sd, "noise_sd")?;
        check(self.intercept.is_finite() && self.slope.is_finite(), "slope", "must be finite")?;
        positive(self.scale, "scale")?;
        positive(self.beta, "beta")?;
        check(self.x.is_finite(), "x", "must be finite")?;
        check(self.n_values.len() >= 2 && self.n_values.iter().all(|&n| n >= 3), "n_values", "need at least two sizes, each at least 3")?;
        at_least(self.replications, 1, "replications")?;
        check(self.p >= 1, "p", "must be at least 1")?;
        if let Some(r) = self.reference_size {
            at_least(r, 1, "reference_size")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RadiiName {
    Calibrated,
    Fixed,
    Zero,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoverageParams {
    pub n_core: usize,
    pub shift_points: Vec<f64>,
    pub noise_sd: f64,
    pub x: f64,
    pub bandwidth_scale: f64,
    pub radii: RadiiName,
    pub pilot_replications: usize,
    pub eps_np: f64,
    pub eps_p: f64,
    pub alpha: f64,
    pub replications: usize,
    pub reference_size: usize,
}

impl Default for CoverageParams {
    fn default() -> Self {
        CoverageParams {
            n_core: 200,
            shift_points: vec![1.1, 1.2, 1.3, 1.4],
            noise_sd: 0.3,
            x: 1.2,
            bandwidth_scale: 0.5,
            radii: RadiiName::Calibrated,
            pilot_replications: 1000,
            eps_np: 0.4,
            eps_p: 0.4,
            alpha: 0.1,
            replications: 200,
            reference_size: 10_000,
        }
    }
}

impl CoverageParams {
    pub fn validate(&self) -> Result<(), Invalid> {
        at_least(self.n_core, 3, "n_core")?;
        check(self.shift_points.iter().all(|v| v.is_finite()), "shift_points", "must be finite")?;
        positive(self.noise_sd, "noise_sd")?;
        check(self.x.is_finite(), "x", "must be finite")?;
        positive(self.bandwidth_scale, "bandwidth_scale")?;
        if self.radii == RadiiName::Calibrated {
            at_least(self.pilot_replications, 1, "pilot_replications")?;
        }
        if self.radii == RadiiName::Fixed {
            check(self.eps_np.is_finite() && self.eps_np >= 0.0, "eps_np", "must be a nonnegative number")?;
            check(self.eps_p.is_finite() && self.eps_p >= 0.0, "eps_p", "must be a nonnegative number")?;
        }
        check(self.alpha > 0.0 && self.alpha < 1.0, "alpha", "must be in (0, 1)")?;
        at_least(self.replications, 1, "replications")?;
        at_least(self.reference_size, 1, "reference_size")
    }
}
