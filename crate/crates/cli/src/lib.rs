//! Config-driven runner for the `complex-action` experiments.
//!
//! `run` executes one scenario and writes `results.json` plus its CSV tables;
//! `sweep` re-runs a scenario over values of one parameter and writes a
//! combined `sweep.csv`. Outputs depend only on the config and seed, never on
//! the worker count.

pub mod config;
pub mod error;
pub mod output;
pub mod run;
pub mod sweep;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::json;

pub use config::{parse_config, ScenarioConfig, ScenarioKind, SCHEMA_VERSION};
pub use error::{CliError, CliResult};
pub use output::{Check, ResultsFile, Table};
pub use sweep::parse_sweep_values;

pub const ARTIFACT: &str = env!("CARGO_PKG_NAME");
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Overrides from the command line.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
}

/// What a finished run or sweep wrote.
#[derive(Debug, Clone)]
pub struct Report {
    pub results: ResultsFile,
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.results.all_checks_passed
    }

    /// 0 when every check passed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }
}

/// Loads and validates a config file, applying a seed override.
pub fn load_config(path: &Path, seed: Option<u64>) -> CliResult<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut cfg = parse_config(&text).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })?;
    if let Some(s) = seed {
        cfg.seed = s;
        cfg.validate()?;
    }
    Ok(cfg)
}

fn output_dir(cfg: &ScenarioConfig, opts: &RunOptions) -> PathBuf {
    opts.out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("results").join(cfg.kind.name()))
}

fn with_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        if n == 0 {
            return Err(CliError::Config("--workers: must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Io(format!("worker pool: {e}")))?;
    Ok(pool.install(f))
}

fn header(cfg: &ScenarioConfig, mode: &'static str) -> ResultsFile {
    ResultsFile {
        artifact: ARTIFACT,
        artifact_version: ARTIFACT_VERSION,
        schema_version: SCHEMA_VERSION,
        scenario: cfg.kind.name(),
        seed: cfg.seed,
        config_sha256: cfg.hash(),
        config: serde_json::from_str(&cfg.canonical_json()).expect("canonical json parses"),
        mode,
        summary: json!(null),
        checks: Vec::new(),
        all_checks_passed: false,
        tables: Vec::new(),
    }
}

/// Runs a validated config and writes its outputs.
pub fn run_config(cfg: &ScenarioConfig, opts: &RunOptions) -> CliResult<Report> {
    let outcome = with_pool(opts.workers, || run::run_scenario(cfg))??;
    let mut results = header(cfg, "run");
    results.summary = outcome.summary;
    results.all_checks_passed = outcome.checks.iter().all(|c| c.passed);
    results.checks = outcome.checks;
    results.tables = outcome.tables.iter().map(|t| t.name.clone()).collect();
    let out_dir = output_dir(cfg, opts);
    let files = output::write_outputs(&out_dir, &results, &outcome.tables)?;
    Ok(Report {
        results,
        out_dir,
        files,
    })
}

/// `run` verb: load, apply overrides, run.
pub fn run_path(path: &Path, opts: &RunOptions) -> CliResult<Report> {
    run_config(&load_config(path, opts.seed)?, opts)
}

/// Runs `cfg` once per value of `param` and writes `sweep.csv` with one row
/// per value in input order.
pub fn sweep_config(cfg: &ScenarioConfig, param: &str, values: &[f64], opts: &RunOptions) -> CliResult<Report> {
    if values.is_empty() {
        return Err(CliError::Config("values: the value list is empty".into()));
    }
    let configs: Vec<ScenarioConfig> = values
        .iter()
        .map(|&v| {
            let mut c = cfg.clone();
            c.set_param(param, v)?;
            Ok(c)
        })
        .collect::<CliResult<_>>()?;
    let outcomes: Vec<run::Outcome> = with_pool(opts.workers, || {
        configs.par_iter().map(run::run_scenario).collect::<CliResult<Vec<_>>>()
    })??;

    let extra: Vec<&str> = outcomes[0].sweep_columns.iter().map(|(k, _)| *k).collect();
    let mut head = vec!["parameter", "value"];
    head.extend(&extra);
    head.push("checks_passed");
    let mut table = Table::new("sweep.csv", &head);
    let mut checks = Vec::new();
    for (v, o) in values.iter().zip(&outcomes) {
        let passed = o.checks.iter().all(|c| c.passed);
        let mut row = vec![param.to_string(), output::num(*v)];
        row.extend(o.sweep_columns.iter().map(|(_, s)| s.clone()));
        row.push(passed.to_string());
        table.push(row);
        for c in &o.checks {
            checks.push(Check::new(
                &format!("{param}={}:{}", output::num(*v), c.name),
                c.passed,
                c.detail.clone(),
            ));
        }
    }
    if cfg.kind == ScenarioKind::DoubleSlit && param == "delta" && values.windows(2).all(|w| w[0] <= w[1]) {
        let vis: Vec<f64> = outcomes
            .iter()
            .map(|o| o.summary["visibility"].as_f64().unwrap_or(f64::NAN))
            .collect();
        checks.push(Check::new(
            "visibility_monotone_in_delta",
            vis.windows(2).all(|w| w[1] <= w[0] + 1e-12),
            format!("visibilities {vis:?}"),
        ));
    }
    let mut results = header(cfg, "sweep");
    results.summary = json!({
        "parameter": param,
        "values": values,
        "points": outcomes.iter().map(|o| o.summary.clone()).collect::<Vec<_>>(),
    });
    results.all_checks_passed = checks.iter().all(|c| c.passed);
    results.checks = checks;
    results.tables = vec![table.name.clone()];
    let out_dir = output_dir(cfg, opts);
    let files = output::write_outputs(&out_dir, &results, &[table])?;
    Ok(Report {
        results,
        out_dir,
        files,
    })
}

/// `sweep` verb: load, parse the value list, sweep.
pub fn sweep_path(path: &Path, param: &str, values: &str, opts: &RunOptions) -> CliResult<Report> {
    let cfg = load_config(path, opts.seed)?;
    let values = parse_sweep_values(values)?;
    sweep_config(&cfg, param, &values, opts)
}

/// Lines printed by `list-scenarios`.
pub fn scenario_listing() -> Vec<String> {
    ScenarioKind::ALL
        .iter()
        .map(|k| {
            format!(
                "{:<17} sweep: {:<26} {}",
                k.name(),
                k.sweepable().join(","),
                k.description()
            )
        })
        .collect()
}
