//! Command runners. Each returns the files to write and the text to print;
//! all output is a deterministic function of the resolved parameters.

use std::fmt::Write as _;

use iwdro::dro::solve_multi_ball_with;
use iwdro::estimators::KernelKind;
use iwdro::experiments::generators::{MeanFunction, ScalarProcess};
use iwdro::experiments::studies::{income_study, portfolio_study, StudyResult};
use iwdro::experiments::*;
use serde_json::{json, Value};

use crate::config::*;
use crate::instance::InstanceFile;

pub const BUNDLED_SERIES: &str = include_str!("../../../data/synthetic_monthly.csv");

#[derive(Debug)]
pub enum Failure {
    Invalid(Invalid),
    Runtime(iwdro::Error),
}

impl From<Invalid> for Failure {
    fn from(e: Invalid) -> Self {
        Failure::Invalid(e)
    }
}

impl From<iwdro::Error> for Failure {
    fn from(e: iwdro::Error) -> Self {
        Failure::Runtime(e)
    }
}

#[derive(Debug, Default)]
pub struct Artifacts {
    /// `(file name, contents)`, written in order.
    pub files: Vec<(String, String)>,
    pub stdout: String,
    /// Resolved parameters, echoed into the manifest.
    pub parameters: Value,
}

impl Artifacts {
    fn file(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }

    fn summary(&mut self, value: Value) {
        self.file("summary.json", pretty(&value));
    }
}

pub fn pretty(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values serialise");
    s.push('\n');
    s
}

fn describe(point: &HyperPoint) -> String {
    point.describe().iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
}

fn echo<T: serde::Serialize>(params: &T) -> Value {
    serde_json::to_value(params).expect("parameters serialise")
}

pub fn solve(params: &SolveParams) -> Result<Artifacts, Failure> {
    let text = std::fs::read_to_string(&params.instance).map_err(|e| Invalid::field("instance", e))?;
    let file: InstanceFile = serde_json::from_str(&text).map_err(|e| Invalid::field("instance", e))?;
    let inst = file.build()?;
    let sol = solve_multi_ball_with(&inst.cost, &inst.decision_set, &inst.outcome_set, &inst.balls, inst.formulation)?;
    let mut out = Artifacts { parameters: echo(params), ..Artifacts::default() };
    let coords: Vec<String> = sol.decision.iter().map(|v| v.to_string()).collect();
    out.stdout = format!("decision: [{}]\nworst-case value: {}\n", coords.join(", "), sol.worst_case_value);
    let mut csv = String::from("coordinate,value\n");
    for (k, v) in sol.decision.iter().enumerate() {
        writeln!(csv, "{k},{v}").unwrap();
    }
    out.file("results.csv", csv);
    out.summary(json!({
        "decision": sol.decision,
        "worst_case_value": sol.worst_case_value,
        "multipliers": sol.multipliers,
    }));
    Ok(out)
}

fn specs(policies: &[String], grid: &GridParams, base: fn(PolicyKind) -> PolicySpec) -> Result<Vec<PolicySpec>, Failure> {
    Ok(parse_policies(policies)?.into_iter().map(|k| grid.apply(base(k))).collect())
}

fn std_error(values: &[f64]) -> f64 {
    backtest::std_dev(values) / (values.len() as f64).sqrt()
}

fn study_artifacts(out: &mut Artifacts, result: &StudyResult, title: &str) {
    let mut csv = String::from("instance,seed,policy,obj,chosen\n");
    for row in &result.rows {
        for (k, kind) in result.policies.iter().enumerate() {
            writeln!(csv, "{},{},{},{},{}", row.instance, row.seed, kind.name(), row.obj[k], describe(&row.chosen[k])).unwrap();
        }
    }
    out.file("results.csv", csv);
    let means = result.means();
    let mut plot = String::from("policy,mean,std_error\n");
    let mut table = format!("{title} ({} instances)\n", result.rows.len());
    let mut summary = serde_json::Map::new();
    for (k, kind) in result.policies.iter().enumerate() {
        let column = result.column(*kind).expect("policy in study");
        writeln!(plot, "{},{},{}", kind.name(), means[k], std_error(&column)).unwrap();
        writeln!(table, "{:<12} {:.4}", kind.name(), means[k]).unwrap();
        summary.insert(kind.name().to_string(), json!({ "mean_obj": means[k], "std_error": std_error(&column) }));
    }
    let mut order: Vec<usize> = (0..means.len()).collect();
    order.sort_by(|&a, &b| means[a].total_cmp(&means[b]).then(a.cmp(&b)));
    let ordering: Vec<&str> = order.iter().map(|&k| result.policies[k].name()).collect();
    let mut summary = json!({ "instances": result.rows.len(), "policies": summary, "ordering": ordering });
    if let Some(iw) = result.column(PolicyKind::IwDro) {
        let mut wins = serde_json::Map::new();
        for kind in &result.policies {
            if *kind != PolicyKind::IwDro {
                let other = result.column(*kind).expect("policy in study");
                wins.insert(kind.name().to_string(), json!(iw.iter().zip(&other).filter(|(a, b)| a < b).count()));
            }
        }
        summary["iw_dro_below"] = Value::Object(wins);
    }
    out.file("plot_means.csv", plot);
    out.summary(summary);
    out.stdout = table;
}

pub fn income(params: &IncomeParams, seed: u64) -> Result<Artifacts, Failure> {
    params.validate()?;
    let scenario = TwoGroupShiftConfig {
        majority_share: params.majority_share,
        minority_width: params.minority_width,
        n_train: params.n_train,
        n_test: params.n_test,
        noise_sd: params.noise_sd,
        seed,
    };
    let setup = ProblemSetup { bandwidth_scale: params.bandwidth_scale, ..ProblemSetup::income() };
    let result = income_study(&scenario, params.instances, params.folds, &setup, &specs(&params.policies, &params.grid, PolicySpec::income_default)?)?;
    let mut out = Artifacts { parameters: echo(params), ..Artifacts::default() };
    study_artifacts(&mut out, &result, "two-group income study, mean absolute error");
    Ok(out)
}

pub fn portfolio(params: &PortfolioParams, seed: u64) -> Result<Artifacts, Failure> {
    params.validate()?;
    let scenario = SyntheticPortfolioConfig {
        m: params.m,
        shift_degree: params.scenario.into(),
        n_train: params.n_train,
        n_valid: params.n_valid,
        n_test: params.n_test,
        seed,
    };
    let setup = ProblemSetup::portfolio(generators::PORTFOLIO_ASSETS);
    let result = portfolio_study(&scenario, params.instances, &setup, &specs(&params.policies, &params.grid, PolicySpec::synthetic_default)?)?;
    let mut out = Artifacts { parameters: echo(params), ..Artifacts::default() };
    study_artifacts(&mut out, &result, "synthetic portfolio study, mean-CVaR objective");
    Ok(out)
}

pub fn backtest(params: &BacktestParams) -> Result<Artifacts, Failure> {
    params.validate()?;
    let series = match &params.series {
        Some(path) => {
            let file = std::fs::File::open(path).map_err(|e| Invalid::field("series", e))?;
            read_backtest_csv(file, params.factors)
        }
        None => read_backtest_csv(BUNDLED_SERIES.as_bytes(), params.factors),
    }
    .map_err(|e| Invalid::field("series", e))?;
    if series.data.len() <= params.window {
        return Err(Invalid::field("window", format!("must be shorter than the series ({} months)", series.data.len())).into());
    }
    let setup = ProblemSetup { bandwidth_scale: params.bandwidth_scale, ..ProblemSetup::monthly(series.data.dy()) };
    let specs = specs(&params.policies, &params.grid, PolicySpec::backtest_default)?;
    let mut results = Vec::with_capacity(specs.len());
    for spec in &specs {
        results.push(rolling_backtest(&series, params.window, params.folds, spec, &setup)?);
    }
    let mut out = Artifacts { parameters: echo(params), ..Artifacts::default() };
    let mut csv = String::from("date,policy,return,chosen\n");
    let mut table = format!("rolling backtest, window {} ({} months)\n{:<12} {:>10} {:>10} {:>10}\n", params.window, series.data.len() - params.window, "policy", "OBJ", "SR", "CER");
    let mut summary = serde_json::Map::new();
    for (spec, res) in specs.iter().zip(&results) {
        for m in &res.months {
            writeln!(csv, "{},{},{},{}", m.date, spec.kind.name(), m.portfolio_return, describe(&m.chosen)).unwrap();
        }
        let sr = res.metrics.sharpe.map_or("undefined".to_string(), |v| format!("{v:.4}"));
        writeln!(table, "{:<12} {:>10.4} {:>10} {:>10.4}", spec.kind.name(), res.metrics.obj, sr, res.metrics.cer).unwrap();
        summary.insert(
            spec.kind.name().to_string(),
            json!({ "obj": res.metrics.obj, "sharpe": res.metrics.sharpe, "sharpe_defined": res.metrics.sharpe.is_some(), "cer": res.metrics.cer }),
        );
    }
    out.file("results.csv", csv);
    let mut plot = String::from("date");
    for spec in &specs {
        write!(plot, ",{}", spec.kind.name()).unwrap();
    }
    plot.push('\n');
    let mut totals = vec![0.0; specs.len()];
    for t in 0..series.data.len() - params.window {
        plot.push_str(&series.dates[params.window + t]);
        for (k, res) in results.iter().enumerate() {
            totals[k] += res.returns[t];
            write!(plot, ",{}", totals[k]).unwrap();
        }
        plot.push('\n');
    }
    out.file("plot_cumulative_returns.csv", plot);
    let mut eff = String::from("date,effective_samples\n");
    let spec = setup.kernel_spec(params.window, series.data.dx())?;
    for t in params.window..series.data.len() {
        let train = series.data.slice(t - params.window, t)?;
        writeln!(eff, "{},{}", series.dates[t], effective_samples(&train, &series.data.covariates()[t], &spec)).unwrap();
    }
    out.file("plot_effective_samples.csv", eff);
    out.summary(json!({ "months": series.data.len() - params.window, "cvar_level": policies::CVAR_LEVEL, "policies": summary }));
    out.stdout = table;
    Ok(out)
}

fn process(name: ProcessName, intercept: f64, slope: f64, noise_sd: f64) -> ScalarProcess {
    let mean = match name {
        ProcessName::Example1 => MeanFunction::Example1,
        ProcessName::Linear => MeanFunction::Linear { intercept, slope },
    };
    ScalarProcess { mean, noise_sd, ..ScalarProcess::example1() }
}

pub fn concentration(params: &ConcentrationParams, seed: u64) -> Result<Artifacts, Failure> {
    params.validate()?;
    let estimator = match params.estimator {
        EstimatorName::Kernel => EstimatorKind::Kernel { kind: KernelKind::Gaussian, scale: params.scale, beta: params.beta },
        EstimatorName::Knn => EstimatorKind::NearestNeighbours { scale: params.scale, beta: params.beta },
        EstimatorName::Regression => EstimatorKind::Regression,
    };
    let config = ConcentrationConfig {
        process: process(params.process, params.intercept, params.slope, params.noise_sd),
        estimator,
        x: params.x,
        n_values: params.n_values.clone(),
        replications: params.replications,
        p: params.p,
        reference_size: params.reference_size,
        seed,
    };
    let table = concentration_trial(&config)?;
    let mut out = Artifacts { parameters: echo(params), ..Artifacts::default() };
    let mut csv = String::from("n,replication,distance\n");
    for (n, row) in table.n_values.iter().zip(&table.distances) {
        for (r, d) in row.iter().enumerate() {
            writeln!(csv, "{n},{r},{d}").unwrap();
        }
    }
    out.file("results.csv", csv);
    let medians = table.medians();
    let mut plot = String::from("n,median_distance,ln_n,ln_median_distance\n");
    let mut text = String::from("n        median W\n");
    for (n, m) in table.n_values.iter().zip(&medians) {
        writeln!(plot, "{n},{m},{},{}", (*n as f64).ln(), m.ln()).unwrap();
        writeln!(text, "{n:<8} {m:.5}").unwrap();
    }
    let slope = table.slope();
    writeln!(text, "log-log slope {slope:.4}").unwrap();
    out.file("plot_medians.csv", plot);
    out.summary(json!({ "n_values": table.n_values, "medians": medians, "slope": slope, "reference_size": table.reference_size }));
    out.stdout = text;
    Ok(out)
}

pub fn coverage(params: &CoverageParams, seed: u64) -> Result<Artifacts, Failure> {
    params.validate()?;
    let radii = match params.radii {
        RadiiName::Calibrated => RadiiMode::Calibrated { pilot_replications: params.pilot_replications },
        RadiiName::Fixed => RadiiMode::Fixed { np: params.eps_np, p: params.eps_p },
        RadiiName::Zero => RadiiMode::Zero,
        RadiiName::Unbounded => RadiiMode::Unbounded,
    };
    let config = CoverageConfig {
        process: ScalarProcess { noise_sd: params.noise_sd, ..ScalarProcess::example1() },
        n_core: params.n_core,
        shift_points: params.shift_points.clone(),
        x: params.x,
        bandwidth_scale: params.bandwidth_scale,
        radii,
        alpha: params.alpha,
        replications: params.replications,
        reference_size: params.reference_size,
        seed,
        ..CoverageConfig::default()
    };
    let rep = coverage_trial(&config)?;
    let mut out = Artifacts { parameters: echo(params), ..Artifacts::default() };
    let mut csv = String::from("replication,in_intersection,in_mixture_ball\n");
    for (r, (a, b)) in rep.iw_hits.iter().zip(&rep.me_hits).enumerate() {
        writeln!(csv, "{r},{},{}", u8::from(*a), u8::from(*b)).unwrap();
    }
    out.file("results.csv", csv);
    let target = 1.0 - params.alpha;
    out.file("plot_coverage.csv", format!("set,coverage,target\nintersection,{},{target}\nmixture,{},{target}\n", rep.iw, rep.me));
    // Infinite radii are reported as null.
    let finite = |v: f64| if v.is_finite() { json!(v) } else { Value::Null };
    out.summary(json!({
        "coverage_intersection": rep.iw,
        "coverage_mixture": rep.me,
        "target": target,
        "eps_np": finite(rep.eps_np),
        "eps_p": finite(rep.eps_p),
    }));
    out.stdout = format!("coverage: intersection {:.3}, mixture ball {:.3} (target {target})\n", rep.iw, rep.me);
    Ok(out)
}
