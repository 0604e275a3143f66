//! `iwdro`: runs the experiments from a JSON configuration and flags.
//!
//! Exit status 0 on success, 2 on invalid configuration, 1 on a runtime
//! failure.

mod commands;
mod config;
mod instance;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use commands::{Artifacts, Failure};
use config::*;

#[derive(Parser)]
#[command(name = "iwdro", version, about = "Distributionally robust contextual optimisation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to `$IWDRO_OUTPUT_DIR/<command>`, else
    /// `iwdro-output/<command>`.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Parameter override `key=value` (value read as JSON when it parses);
    /// nested keys use dots, e.g. `grid.k1=[0.2,0.4]`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Sub {
    /// Solve one worst-case problem from an instance file.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        instance: Option<PathBuf>,
    },
    /// Two-group covariate-shift study with absolute loss.
    Income {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        instances: Option<usize>,
        #[arg(long)]
        majority_share: Option<f64>,
        #[arg(long)]
        folds: Option<usize>,
    },
    /// Synthetic mean-CVaR portfolio study.
    PortfolioSynth {
        #[command(flatten)]
        common: Common,
        /// none, mild or severe.
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long)]
        m: Option<f64>,
        #[arg(long)]
        instances: Option<usize>,
    },
    /// Rolling-window backtest on a monthly CSV series.
    Backtest {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        series: Option<PathBuf>,
        #[arg(long)]
        factors: Option<usize>,
        #[arg(long)]
        window: Option<usize>,
    },
    /// Distance of an estimator to the true conditional law against sample size.
    Concentration {
        #[command(flatten)]
        common: Common,
        /// kernel, knn or regression.
        #[arg(long)]
        estimator: Option<String>,
        /// example1 or linear.
        #[arg(long)]
        process: Option<String>,
        #[arg(long)]
        replications: Option<usize>,
    },
    /// Coverage of the two-ball and mixture-ball ambiguity sets.
    Coverage {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        replications: Option<usize>,
    },
}

fn flag<T: serde::Serialize>(key: &str, value: &Option<T>) -> Option<(String, Value)> {
    value.as_ref().map(|v| (key.to_string(), serde_json::to_value(v).expect("flag serialises")))
}

impl Sub {
    fn split(self) -> (Command, Common, Vec<(String, Value)>) {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        match self {
            Sub::Solve { common, instance } => (Command::Solve, common, flag("instance", &path(&instance)).into_iter().collect()),
            Sub::Income { common, instances, majority_share, folds } => (
                Command::Income,
                common,
                [flag("instances", &instances), flag("majority_share", &majority_share), flag("folds", &folds)].into_iter().flatten().collect(),
            ),
            Sub::PortfolioSynth { common, scenario, m, instances } => (
                Command::PortfolioSynth,
                common,
                [flag("scenario", &scenario), flag("m", &m), flag("instances", &instances)].into_iter().flatten().collect(),
            ),
            Sub::Backtest { common, series, factors, window } => (
                Command::Backtest,
                common,
                [flag("series", &path(&series)), flag("factors", &factors), flag("window", &window)].into_iter().flatten().collect(),
            ),
            Sub::Concentration { common, estimator, process, replications } => (
                Command::Concentration,
                common,
                [flag("estimator", &estimator), flag("process", &process), flag("replications", &replications)].into_iter().flatten().collect(),
            ),
            Sub::Coverage { common, alpha, replications } => (
                Command::Coverage,
                common,
                [flag("alpha", &alpha), flag("replications", &replications)].into_iter().flatten().collect(),
            ),
        }
    }
}

fn insert(map: &mut Map<String, Value>, key: &str, value: Value) -> Result<(), Invalid> {
    match key.split_once('.') {
        None => {
            map.insert(key.to_string(), value);
            Ok(())
        }
        Some((head, rest)) => {
            let slot = map.entry(head.to_string()).or_insert_with(|| Value::Object(Map::new()));
            match slot {
                Value::Object(inner) => insert(inner, rest, value),
                _ => Err(Invalid::field(head, "is not an object")),
            }
        }
    }
}

struct Resolved {
    command: Command,
    parameters: Map<String, Value>,
    seed: u64,
    output_dir: PathBuf,
}

fn resolve(sub: Sub) -> Result<Resolved, Invalid> {
    let (command, common, flags) = sub.split();
    let (mut parameters, mut seed, mut output_dir) = (Map::new(), 0, None);
    if let Some(path) = &common.config {
        let file = load_run_file(path)?;
        if file.command != command {
            return Err(Invalid(format!("command: config is for `{}` but `{}` was run", file.command.name(), command.name())));
        }
        parameters = file.parameters;
        seed = file.seed.unwrap_or(0);
        output_dir = file.output_dir;
    }
    for text in &common.set {
        let (key, value) = parse_override(text)?;
        insert(&mut parameters, &key, value)?;
    }
    for (key, value) in flags {
        insert(&mut parameters, &key, value)?;
    }
    if let Some(s) = common.seed {
        seed = s;
    }
    let output_dir = common.output_dir.or(output_dir).unwrap_or_else(|| {
        let root = std::env::var_os(OUTPUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("iwdro-output"));
        root.join(command.name())
    });
    if output_dir.exists() && !output_dir.is_dir() {
        return Err(Invalid(format!("output_dir: `{}` exists and is not a directory", output_dir.display())));
    }
    Ok(Resolved { command, parameters, seed, output_dir })
}

fn run(r: &Resolved) -> Result<Artifacts, Failure> {
    let params = r.parameters.clone();
    match r.command {
        Command::Solve => {
            let p: SolveParams = parse_params(params)?;
            p.validate()?;
            commands::solve(&p)
        }
        Command::Income => commands::income(&parse_params(params)?, r.seed),
        Command::PortfolioSynth => commands::portfolio(&parse_params(params)?, r.seed),
        Command::Backtest => commands::backtest(&parse_params(params)?),
        Command::Concentration => commands::concentration(&parse_params(params)?, r.seed),
        Command::Coverage => commands::coverage(&parse_params(params)?, r.seed),
    }
}

fn write_all(dir: &Path, r: &Resolved, artifacts: &Artifacts) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, contents) in &artifacts.files {
        std::fs::write(dir.join(name), contents)?;
    }
    let mut outputs: Vec<&str> = artifacts.files.iter().map(|(n, _)| n.as_str()).collect();
    outputs.push("manifest.json");
    let manifest = json!({
        "command": r.command.name(),
        "seed": r.seed,
        "version": env!("CARGO_PKG_VERSION"),
        "parameters": artifacts.parameters,
        "outputs": outputs,
    });
    std::fs::write(dir.join("manifest.json"), commands::pretty(&manifest))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let resolved = match resolve(cli.command) {
        Ok(r) => r,
        Err(Invalid(msg)) => {
            eprintln!("invalid configuration: {msg}");
            return ExitCode::from(2);
        }
    };
    match run(&resolved) {
        Ok(artifacts) => {
            if let Err(e) = write_all(&resolved.output_dir, &resolved, &artifacts) {
                eprintln!("error: writing {}: {e}", resolved.output_dir.display());
                return ExitCode::from(1);
            }
            print!("{}", artifacts.stdout);
            println!("wrote {}", resolved.output_dir.display());
            ExitCode::SUCCESS
        }
        Err(Failure::Invalid(Invalid(msg))) => {
            eprintln!("invalid configuration: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
