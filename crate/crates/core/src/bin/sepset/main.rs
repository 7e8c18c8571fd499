//! Command-line driver: `estimate`, `graph` and `simulate`.
//!
//! Exit codes: 0 success, 1 configuration or data error, 2 numerical
//! failure, 3 no feasible separating set.

mod config;

use std::collections::HashSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use sepset::data::{load_csv, write_csv, DataError, Schema, StackedDataset, VariableSpec};
use sepset::estimators::EstimatorError;
use sepset::mgm::{fit_mgm, MgmError};
use sepset::pipeline::{run_pipeline, PipelineError};
use sepset::resample::{cluster_bootstrap, BootstrapReport, ResampleError};
use sepset::rng::stream;
use sepset::sepset::{SepsetError, SepsetMode};
use sepset::simulate::{generate_dataset, run_simulation, SimError};

use config::{RawConfig, RunConfig};

#[derive(Parser)]
#[command(name = "sepset", version, about = "Separating sets and population effect estimates", after_help = config::key_help())]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration file (key = value lines)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Random seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override a config key, e.g. --set mode=exact (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Fit the graph, pick a separating set and estimate the population effect
    Estimate,
    /// Fit the graph and write it as DOT and JSON
    Graph,
    /// Run the simulation study
    Simulate,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Numeric(String),
    Infeasible(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Numeric(_) => 2,
            Failure::Infeasible(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Numeric(m) | Failure::Infeasible(m) => m,
        }
    }
}

impl From<DataError> for Failure {
    fn from(e: DataError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<MgmError> for Failure {
    fn from(e: MgmError) -> Self {
        match e {
            MgmError::SampleSize(_) | MgmError::Node { .. } => Failure::Config(e.to_string()),
            MgmError::Fit { .. } => Failure::Numeric(e.to_string()),
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let msg = e.to_string();
        match e {
            PipelineError::Config(_) => Failure::Config(msg),
            PipelineError::Sepset(SepsetError::Mgm(m)) => m.into(),
            PipelineError::Sepset(SepsetError::PathExplosion { .. }) => Failure::Numeric(msg),
            PipelineError::Sepset(_) => Failure::Config(msg),
            PipelineError::Estimator { source, .. } => match source {
                EstimatorError::UnknownVariable(_)
                | EstimatorError::Unmeasured(_)
                | EstimatorError::TreatmentProbability(_)
                | EstimatorError::Argument(_) => Failure::Config(msg),
                _ => Failure::Numeric(msg),
            },
        }
    }
}

impl From<ResampleError> for Failure {
    fn from(e: ResampleError) -> Self {
        match e {
            ResampleError::Pipeline(p) => p.into(),
            ResampleError::AllInfeasible(_) => Failure::Infeasible(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(_) | SimError::Data(_) => Failure::Config(e.to_string()),
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

/// Writes `bytes` next to `name` in `dir` and renames into place.
fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), Failure> {
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.persist(dir.join(name)).map_err(|e| Failure::Config(e.to_string()))?;
    Ok(())
}

fn json_bytes(value: &impl serde::Serialize) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("serializable");
    out.push(b'\n');
    out
}

fn load(cfg: &RunConfig) -> Result<StackedDataset, Failure> {
    let data = cfg
        .data
        .as_ref()
        .ok_or_else(|| Failure::Config("experiment_csv and population_csv must be set".into()))?;
    let mut covariates = data.covariates.clone();
    if covariates.is_empty() {
        let mut reader = csv::Reader::from_path(&data.experiment_csv).map_err(|e| Failure::Config(e.to_string()))?;
        let reserved: HashSet<&str> = [Some(&data.outcome), Some(&data.treatment)]
            .into_iter()
            .chain([&data.cluster, &data.strata, &data.treatment_prob_column].map(Option::as_ref))
            .flatten()
            .map(String::as_str)
            .collect();
        covariates = reader
            .headers()
            .map_err(|e| Failure::Config(e.to_string()))?
            .iter()
            .map(|h| h.trim().to_string())
            .filter(|h| !reserved.contains(h.as_str()))
            .collect();
    }
    for name in data.categorical.iter().map(|c| &c.0).chain(&data.population_missing) {
        if !covariates.contains(name) {
            return Err(Failure::Config(format!("{name} is not a covariate")));
        }
    }
    let specs = covariates
        .iter()
        .map(|name| {
            let spec = match data.categorical.iter().find(|c| &c.0 == name) {
                Some((_, levels)) => VariableSpec::categorical(name.clone(), *levels),
                None => VariableSpec::continuous(name.clone()),
            };
            if data.population_missing.contains(name) {
                spec.unmeasured()
            } else {
                spec
            }
        })
        .collect();
    let mut schema = Schema::new(specs, &data.outcome, &data.treatment);
    schema.cluster = data.cluster.clone();
    schema.strata = data.strata.clone();
    schema.treatment_prob = data.treatment_prob_column.clone();
    schema.population_size = data.population_size;
    let ds = load_csv(&data.experiment_csv, &data.population_csv, &schema)?;
    if ds.clusters().is_none() {
        let n = ds.n_experiment() as u32;
        return Ok(ds.with_clusters((0..n).collect())?);
    }
    Ok(ds)
}

fn selection_csv(ds: &StackedDataset, report: &BootstrapReport) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["variable", "frequency"]).expect("in-memory write");
    for name in ds.covariate_names() {
        let f = report.selection_frequency.get(name).copied().unwrap_or(0.0);
        w.write_record([name.to_string(), f.to_string()]).expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

fn cmd_estimate(cfg: &RunConfig) -> Result<(), Failure> {
    cfg.pipeline.validate()?;
    let ds = load(cfg)?;
    let output = run_pipeline(&ds, &cfg.pipeline)?;
    let solution = &output.fit.solution;
    let report = if output.feasible() && cfg.bootstrap > 0 {
        Some(cluster_bootstrap(&ds, &cfg.pipeline, cfg.bootstrap, cfg.seed, cfg.freeze_population)?)
    } else {
        None
    };

    let estimates: Vec<_> = output
        .estimates
        .iter()
        .map(|e| {
            let boot = report
                .as_ref()
                .and_then(|r| r.estimates.iter().find(|b| b.estimator == e.estimator.as_str()));
            json!({
                "estimator": e.estimator,
                "point": e.point,
                "se": boot.and_then(|b| b.se).or(e.se),
                "ci_low": boot.and_then(|b| b.ci_low).or(e.ci_low),
                "ci_high": boot.and_then(|b| b.ci_high).or(e.ci_high),
                "n_used": e.n_used,
                "m_used": e.m_used,
            })
        })
        .collect();
    let summary = json!({
        "status": solution.status,
        "mode": solution.mode,
        "selected": solution.selected,
        "n_experiment": ds.n_experiment(),
        "m_population": ds.m_population(),
        "estimates": estimates,
    });
    let sepset = json!({
        "solution": solution,
        "graph": output.fit.graph.to_json(),
    });

    std::fs::create_dir_all(&cfg.out)?;
    write_atomic(&cfg.out, "sepset.json", &json_bytes(&sepset))?;
    if let Some(r) = &report {
        write_atomic(&cfg.out, "bootstrap.json", &json_bytes(r))?;
        write_atomic(&cfg.out, "selection.csv", &selection_csv(&ds, r))?;
    }
    write_atomic(&cfg.out, "estimates.json", &json_bytes(&summary))?;

    println!("separating set: {{{}}} ({:?})", solution.selected.join(", "), solution.status);
    for e in &output.estimates {
        let boot = report
            .as_ref()
            .and_then(|r| r.estimates.iter().find(|b| b.estimator == e.estimator.as_str()));
        match boot.and_then(|b| Some((b.se?, b.ci_low?, b.ci_high?))) {
            Some((se, lo, hi)) => println!("{:>14}  {:.4}  se {se:.4}  [{lo:.4}, {hi:.4}]", e.estimator.as_str(), e.point),
            None => println!("{:>14}  {:.4}", e.estimator.as_str(), e.point),
        }
    }
    if !output.feasible() {
        return Err(Failure::Infeasible(
            "no separating set avoids the unmeasured variables; relax the constraints".into(),
        ));
    }
    Ok(())
}

fn cmd_graph(cfg: &RunConfig) -> Result<(), Failure> {
    let ds = load(cfg)?;
    let include_y = cfg.pipeline.mode == SepsetMode::Marginal;
    let graph = fit_mgm(&ds, include_y, &cfg.pipeline.sepset.mgm)?;
    let without_t = graph
        .remove_node(ds.treatment_name())
        .map_err(|e| Failure::Config(e.to_string()))?;
    std::fs::create_dir_all(&cfg.out)?;
    write_atomic(&cfg.out, "graph.json", &json_bytes(&graph.to_json()))?;
    write_atomic(&cfg.out, "graph.dot", graph.to_dot("mrf").as_bytes())?;
    write_atomic(&cfg.out, "graph_no_t.json", &json_bytes(&without_t.to_json()))?;
    write_atomic(&cfg.out, "graph_no_t.dot", without_t.to_dot("mrf").as_bytes())?;
    println!("{} nodes, {} edges", graph.node_count(), graph.edge_count());
    Ok(())
}

const EXPORT_TAG: u64 = 0xE4;

fn cmd_simulate(cfg: &RunConfig) -> Result<(), Failure> {
    cfg.sim.validate()?;
    let result = run_simulation(&cfg.sim)?;
    let csv_bytes = |f: &dyn Fn(&mut Vec<u8>) -> csv::Result<()>| -> Result<Vec<u8>, Failure> {
        let mut out = Vec::new();
        f(&mut out).map_err(|e| Failure::Config(e.to_string()))?;
        Ok(out)
    };
    let bias = csv_bytes(&|w| result.write_bias_csv(w))?;
    let types = csv_bytes(&|w| result.write_types_csv(w))?;
    let sets = csv_bytes(&|w| result.write_sets_csv(w))?;
    let export = if cfg.sim_export_n > 0 {
        let ds = generate_dataset(&mut stream(cfg.seed, EXPORT_TAG, 0), cfg.sim_export_n, cfg.sim.m, cfg.sim.pool_factor)?;
        let (mut e, mut p) = (Vec::new(), Vec::new());
        write_csv(&ds, &mut e, &mut p)?;
        Some((e, p))
    } else {
        None
    };
    std::fs::create_dir_all(&cfg.out)?;
    write_atomic(&cfg.out, "sim_bias.csv", &bias)?;
    write_atomic(&cfg.out, "sim_types.csv", &types)?;
    write_atomic(&cfg.out, "sim_sets.csv", &sets)?;
    if let Some((e, p)) = export {
        write_atomic(&cfg.out, "experiment.csv", &e)?;
        write_atomic(&cfg.out, "population.csv", &p)?;
    }
    println!("{} bias rows written to {}", result.bias.len(), cfg.out.display());
    Ok(())
}

fn build_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut raw = match &cli.config {
        Some(path) => RawConfig::read(path),
        None => Ok(RawConfig::default()),
    }
    .map_err(Failure::Config)?;
    let flags = [
        ("seed", cli.seed.map(|v| v.to_string())),
        ("threads", cli.threads.map(|v| v.to_string())),
        ("out", cli.out.as_ref().map(|p| p.display().to_string())),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            raw.set(key, &v).map_err(Failure::Config)?;
        }
    }
    for pair in &cli.set {
        raw.set_pair(pair).map_err(Failure::Config)?;
    }
    RunConfig::from_raw(&raw).map_err(Failure::Config)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = build_config(&cli).and_then(|cfg| {
        sepset::with_threads(cfg.threads, || match cli.command {
            Command::Estimate => cmd_estimate(&cfg),
            Command::Graph => cmd_graph(&cfg),
            Command::Simulate => cmd_simulate(&cfg),
        })
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.code())
        }
    }
}
